import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from belltwist.bounds import classical_bound, tsirelson_bound
from belltwist.catalog import GISIN6_CHSH_BLOCKS, catalog, fishburn_reeds_matrix, gisin_matrix
from belltwist.core import BellError, spectral_norm, svd
from belltwist.modify import (
    CommutationError,
    InadmissibleShift,
    Modification,
    ShiftSpec,
    TwistSpec,
    diagonal_shift_spec,
    fishburn_reeds_diagonal,
    modified_matrix,
    random_twist,
    regularize_shift,
    shift,
    shift_admissible,
    twist,
)
from belltwist.repro import random_admissible_shift
from belltwist.tightness import certify

from test_tightness import ELLIPSE_V

TIGHT = ["chsh", "gisin3", "gisin6", "d6", "fr2", "fr3", "fr4"]
seeds = st.integers(0, 2**32 - 1)

# rotating the top block of Gisin M=3 by 0.3 rad lowers B from 5 to about 4.76 at fixed T = 6
GISIN3_WITNESS = TwistSpec((0.3,), (), (), False, False, False)


def test_identity_modifications_return_g():
    g = catalog()["fr3"]
    dec = svd(g)
    assert np.array_equal(twist(g, TwistSpec.identity(dec.d, *g.shape)), g)
    assert np.array_equal(shift(g, ShiftSpec.identity(dec.d, dec.s)), g)
    assert np.allclose(modified_matrix(dec, Modification()), g, atol=1e-12)


@given(st.sampled_from(TIGHT), seeds)
def test_twist_preserves_T(name, seed):
    g = catalog()[name]
    dec = svd(g)
    gp = twist(g, random_twist(np.random.default_rng(seed), dec.d, *g.shape), dec=dec)
    assert abs(tsirelson_bound(gp) - tsirelson_bound(g)) <= 1e-9 * tsirelson_bound(g)


def test_twist_can_change_B():
    g = gisin_matrix(3)
    gp = twist(g, GISIN3_WITNESS)
    assert tsirelson_bound(gp) == pytest.approx(6.0, abs=1e-12)
    assert classical_bound(gp).value < 5.0 - 1e-3


def test_twist_respects_alpha():
    g = ELLIPSE_V @ ELLIPSE_V.T
    cert = certify(g)
    quarter = TwistSpec((np.pi / 3,), (), ())
    with pytest.raises(CommutationError):
        twist(g, quarter)
    with pytest.raises(CommutationError):
        twist(g, quarter, alpha=cert.alpha)
    # -1 commutes with everything
    gp = twist(g, TwistSpec((np.pi,), (), ()), alpha=cert.alpha)
    assert tsirelson_bound(gp) == pytest.approx(tsirelson_bound(g), abs=1e-12)
    with pytest.raises(BellError, match="normalize"):
        twist(g, TwistSpec((np.pi,), (), ()), alpha=2 * cert.alpha)
    with pytest.raises(CommutationError):
        twist(g, TwistSpec((np.pi,), (), ()), alpha=np.eye(3))


def test_twist_rejects_wrong_angle_count():
    with pytest.raises(BellError):
        twist(gisin_matrix(3), TwistSpec((0.1, 0.2), (), ()))


@given(st.sampled_from(TIGHT), seeds)
def test_shift_scales_T(name, seed):
    g = catalog()[name]
    dec = svd(g)
    spec = random_admissible_shift(np.random.default_rng(seed), dec)
    gp = shift(g, spec, dec=dec)
    ratio = abs(dec.top_value + spec.lambda1) / dec.top_value
    assert spectral_norm(gp) / dec.top_value == pytest.approx(ratio, abs=1e-9)
    assert certify(gp).tight


def test_inadmissible_shift():
    g = gisin_matrix(3)
    dec = svd(g)
    spec = ShiftSpec((1, 1), 0.0, (dec.top_value,))
    assert not shift_admissible(dec, spec)
    with pytest.raises(InadmissibleShift):
        shift(g, spec)
    with pytest.raises(BellError):
        shift(g, ShiftSpec((1, 1), -dec.top_value, (0.0,)))
    with pytest.raises(BellError):
        shift(g, ShiftSpec((1,), 0.0, (0.0,)))
    with pytest.raises(BellError):
        ShiftSpec((2,), 0.0, ())


def test_forced_shift_to_equal_values_gives_chsh_blocks():
    g = gisin_matrix(6)
    dec = svd(g)
    top = dec.top_value
    targets = np.array([top, top, -top, -top])
    spec = ShiftSpec((1, 1), 0.0, tuple(targets - dec.values[2:]))
    with pytest.raises(InadmissibleShift):
        shift(g, spec)
    gp = shift(g, spec, force=True)
    assert np.allclose(gp, (1 + np.sqrt(3)) * GISIN6_CHSH_BLOCKS, atol=1e-9)
    assert classical_bound(gp).value == pytest.approx(6 * (1 + np.sqrt(3)), abs=1e-9)


def test_forced_shift_must_certify():
    g = np.array([[1.0, 2.0, 0.0], [0.0, 1.0, 3.0], [1.0, 0.0, 1.0]])
    dec = svd(g)
    spec = ShiftSpec((1,), 0.0, (dec.top_value - dec.values[1], 0.0))
    with pytest.raises(BellError, match="certified"):
        shift(g, spec, force=True)


def test_regularize_shift():
    g = gisin_matrix(6)
    dec = svd(g)
    top = dec.top_value
    spec = ShiftSpec((1, 1), 0.0, tuple(np.array([top, top, -top, -top]) - dec.values[2:]))
    reg = regularize_shift(dec, spec)
    assert shift_admissible(dec, reg)
    assert np.max(np.abs(np.array(reg.lambdas) - spec.lambdas)) <= 1e-6 * top + 1e-12
    gp = shift(g, reg)
    assert tsirelson_bound(gp) / classical_bound(gp).value == pytest.approx(np.sqrt(2), abs=1e-5)


@pytest.mark.parametrize("d", [2, 3, 4])
@pytest.mark.parametrize("lam", [-0.7, 0.4, 1.1])
def test_diagonal_shift_matches_identity_offset(d, lam):
    g = fishburn_reeds_matrix(d)
    spec = diagonal_shift_spec(g, lam)
    expected = fishburn_reeds_diagonal(g, lam)
    dec = svd(g)
    if shift_admissible(dec, spec):
        assert np.allclose(shift(g, spec), expected, atol=1e-9)
    assert np.allclose(modified_matrix(dec, Modification(spec)), expected, atol=1e-9)


def test_diagonal_shift_needs_symmetric():
    with pytest.raises(BellError):
        fishburn_reeds_diagonal(np.array([[1.0, 2.0], [0.0, 1.0]]), 0.1)
    with pytest.raises(BellError):
        diagonal_shift_spec(np.ones((2, 3)), 0.1)


@given(seeds)
def test_spec_round_trips(seed):
    rng = np.random.default_rng(seed)
    dec = svd(fishburn_reeds_matrix(3))
    t = random_twist(rng, dec.d, 6, 6)
    s = random_admissible_shift(rng, dec)
    assert TwistSpec.from_dict(t.to_dict()) == t
    assert ShiftSpec.from_dict(s.to_dict()) == s
    mod = Modification(s, t)
    assert Modification.from_dict(mod.to_dict()) == mod


def test_combined_modification_keeps_T():
    g = fishburn_reeds_matrix(3)
    dec = svd(g)
    rng = np.random.default_rng(3)
    mod = Modification(random_admissible_shift(rng, dec), random_twist(rng, dec.d, 6, 6))
    gp = modified_matrix(dec, mod)
    assert spectral_norm(gp) == pytest.approx(abs(dec.top_value + mod.shift.lambda1), abs=1e-9)
    assert certify(gp).tight


@given(seeds)
def test_twists_compose(seed):
    from belltwist.modify import twisted_decomposition

    rng = np.random.default_rng(seed)
    dec = svd(fishburn_reeds_matrix(3))
    a = random_twist(rng, dec.d, 6, 6).blocks(dec.d, 6, 6)
    b = random_twist(rng, dec.d, 6, 6).blocks(dec.d, 6, 6)
    twice = twisted_decomposition(twisted_decomposition(dec, *a), *b).matrix()
    # V picks up R1 R1', R2 R2' on the right; W^T picks up R3' R3 on the left
    once = twisted_decomposition(dec, a[0] @ b[0], a[1] @ b[1], b[2] @ a[2]).matrix()
    assert np.max(np.abs(twice - once)) <= 1e-9
