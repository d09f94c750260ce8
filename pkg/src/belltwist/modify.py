"""Coefficient modifications that keep the singular-value bound achievable.

Twisting rotates singular vectors (outside the top block freely, inside it only
by rotations commuting with alpha); shifting changes singular values while the
top block stays maximal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .core import (
    BellError,
    SingularDecomposition,
    coefficient_matrix,
    n_angles,
    orthogonal_from_angles,
    svd,
)
from .tightness import certify, constraint_rows

COMMUTE_TOL = 1e-9
ADMISSIBLE_SLACK = 1e-12


class InadmissibleShift(BellError):
    pass


class CommutationError(BellError):
    pass


def _block_diag(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros((a.shape[0] + b.shape[0], a.shape[1] + b.shape[1]))
    out[: a.shape[0], : a.shape[1]] = a
    out[a.shape[0] :, a.shape[1] :] = b
    return out


@lru_cache(maxsize=512)
def _cached_orthogonal(n: int, angles: tuple, reflect: bool) -> np.ndarray:
    Q = orthogonal_from_angles(n, angles, reflect)
    Q.setflags(write=False)
    return Q


@dataclass(frozen=True)
class TwistSpec:
    """Orthogonal blocks R1 (d x d), R2 ((M1-d) x (M1-d)), R3 ((M2-d) x (M2-d)) as Givens angles."""

    angles_r1: tuple = ()
    angles_r2: tuple = ()
    angles_r3: tuple = ()
    reflect_r1: bool = False
    reflect_r2: bool = False
    reflect_r3: bool = False

    def __post_init__(self):
        for name in ("angles_r1", "angles_r2", "angles_r3"):
            object.__setattr__(self, name, tuple(float(a) for a in getattr(self, name)))

    @classmethod
    def identity(cls, d: int, m1: int, m2: int) -> "TwistSpec":
        return cls((0.0,) * n_angles(d), (0.0,) * n_angles(m1 - d), (0.0,) * n_angles(m2 - d))

    def blocks(self, d: int, m1: int, m2: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        try:
            return (
                _cached_orthogonal(d, self.angles_r1, self.reflect_r1),
                _cached_orthogonal(m1 - d, self.angles_r2, self.reflect_r2),
                _cached_orthogonal(m2 - d, self.angles_r3, self.reflect_r3),
            )
        except BellError as exc:
            raise BellError(f"twist spec does not fit d={d}, M1={m1}, M2={m2}: {exc}") from None

    def to_dict(self) -> dict:
        return {
            "angles_r1": list(self.angles_r1),
            "reflect_r1": self.reflect_r1,
            "angles_r2": list(self.angles_r2),
            "reflect_r2": self.reflect_r2,
            "angles_r3": list(self.angles_r3),
            "reflect_r3": self.reflect_r3,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TwistSpec":
        return cls(
            angles_r1=data.get("angles_r1", ()),
            angles_r2=data.get("angles_r2", ()),
            angles_r3=data.get("angles_r3", ()),
            reflect_r1=bool(data.get("reflect_r1", False)),
            reflect_r2=bool(data.get("reflect_r2", False)),
            reflect_r3=bool(data.get("reflect_r3", False)),
        )


def random_twist(rng: np.random.Generator, d: int, m1: int, m2: int, reflections: bool = True) -> TwistSpec:
    """Givens angles uniform in [0, 2pi); reflection flags fair coins when enabled."""
    flags = rng.integers(0, 2, size=3).astype(bool) if reflections else np.zeros(3, dtype=bool)
    return TwistSpec(
        rng.uniform(0, 2 * np.pi, n_angles(d)),
        rng.uniform(0, 2 * np.pi, n_angles(m1 - d)),
        rng.uniform(0, 2 * np.pi, n_angles(m2 - d)),
        *map(bool, flags),
    )


@dataclass(frozen=True)
class ShiftSpec:
    """Signs for the top block, a common offset ``lambda1`` and offsets for singular values d+1..s."""

    sigma: tuple
    lambda1: float = 0.0
    lambdas: tuple = ()

    def __post_init__(self):
        sigma = tuple(int(x) for x in self.sigma)
        if any(x not in (1, -1) for x in sigma):
            raise BellError(f"sigma entries must be +1 or -1, got {sigma}")
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "lambda1", float(self.lambda1))
        object.__setattr__(self, "lambdas", tuple(float(x) for x in self.lambdas))

    @classmethod
    def identity(cls, d: int, s: int) -> "ShiftSpec":
        return cls((1,) * d, 0.0, (0.0,) * (s - d))

    def is_identity(self) -> bool:
        return all(x == 1 for x in self.sigma) and self.lambda1 == 0 and not any(self.lambdas)

    def to_dict(self) -> dict:
        return {"sigma": list(self.sigma), "lambda1": self.lambda1, "lambdas": list(self.lambdas)}

    @classmethod
    def from_dict(cls, data: dict) -> "ShiftSpec":
        return cls(tuple(data["sigma"]), data.get("lambda1", 0.0), tuple(data.get("lambdas", ())))


def _check_shift_shape(dec: SingularDecomposition, spec: ShiftSpec):
    if len(spec.sigma) != dec.d or len(spec.lambdas) != dec.s - dec.d:
        raise BellError(
            f"shift spec needs {dec.d} signs and {dec.s - dec.d} offsets, got {len(spec.sigma)} and {len(spec.lambdas)}"
        )


def shifted_values(dec: SingularDecomposition, spec: ShiftSpec) -> np.ndarray:
    """Signed diagonal of S' (length s)."""
    _check_shift_shape(dec, spec)
    top = np.asarray(spec.sigma, dtype=float) * (dec.values[: dec.d] + spec.lambda1)
    rest = dec.values[dec.d :] + np.asarray(spec.lambdas, dtype=float)
    return np.concatenate((top, rest))


def shift_admissible(dec: SingularDecomposition, spec: ShiftSpec) -> bool:
    """|lambda_i + S_ii| < |top + lambda1| for i > d, strictly with relative slack 1e-12."""
    _check_shift_shape(dec, spec)
    new_top = abs(dec.top_value + spec.lambda1)
    if new_top <= 1e-15 * dec.top_value:
        raise BellError("shift sends the top singular value to zero")
    rest = np.abs(shifted_values(dec, spec)[dec.d :])
    return bool(np.all(rest < new_top * (1.0 - ADMISSIBLE_SLACK)))


def shifted_decomposition(dec: SingularDecomposition, spec: ShiftSpec) -> SingularDecomposition:
    """Decomposition of the shifted matrix: negative entries flip the matching V column, then re-sort."""
    signed = shifted_values(dec, spec)
    V = np.array(dec.V)
    W = np.array(dec.W)
    s = dec.s
    V[:, :s] *= np.where(signed < 0, -1.0, 1.0)
    values = np.abs(signed)
    order = np.argsort(-values, kind="stable")
    V[:, :s] = V[:, :s][:, order]
    W[:, :s] = W[:, :s][:, order]
    values = values[order]
    S = np.zeros_like(dec.S)
    S[np.arange(s), np.arange(s)] = values
    top = values[0]
    d = int(np.sum(top - values <= 1e-8 * top))
    return SingularDecomposition(V=V, S=S, W=W, values=values, d=d)


def twisted_decomposition(dec: SingularDecomposition, r1, r2, r3) -> SingularDecomposition:
    """V -> V blockdiag(R1, R2), W -> W blockdiag(1, R3^T); singular values unchanged."""
    m1, m2 = dec.shape
    d = dec.d
    r1, r2, r3 = (np.atleast_2d(np.asarray(r, dtype=float)) if np.size(r) else np.zeros((0, 0)) for r in (r1, r2, r3))
    if r1.shape != (d, d) or r2.shape != (m1 - d, m1 - d) or r3.shape != (m2 - d, m2 - d):
        raise BellError(
            f"twist blocks have shapes {r1.shape}, {r2.shape}, {r3.shape}; "
            f"need ({d}, {d}), ({m1 - d}, {m1 - d}), ({m2 - d}, {m2 - d})"
        )
    V = dec.V @ _block_diag(r1, r2)
    W = dec.W @ _block_diag(np.eye(d), r3.T)
    return SingularDecomposition(V=V, S=dec.S, W=W, values=dec.values, d=d)


def _check_twist_allowed(g, dec: SingularDecomposition, r1: np.ndarray, alpha):
    if alpha is not None:
        alpha = np.atleast_2d(np.asarray(alpha, dtype=float))
        if alpha.shape != (dec.d, dec.d):
            raise CommutationError(f"alpha must be {dec.d}x{dec.d} to commute with R1, got {alpha.shape}")
        rows = constraint_rows(dec)
        dev = float(np.max(np.abs(np.linalg.norm(rows @ alpha, axis=1) - 1.0)))
        if dev > 1e-8:
            raise BellError(f"supplied alpha does not normalize the strategy vectors (deviation {dev:.3g})")
        comm = float(np.max(np.abs(r1 @ alpha - alpha @ r1)))
        if comm > COMMUTE_TOL:
            raise CommutationError(f"R1 does not commute with alpha: max |R1 alpha - alpha R1| = {comm:.3g}")
        return
    cert = certify(g, dec=dec)
    if not cert.tight or cert.d != dec.d:
        raise BellError("twist needs a matrix whose bound is certified tight on its top block")
    if not cert.alpha_is_scalar and not np.allclose(r1, np.eye(dec.d), atol=COMMUTE_TOL):
        raise CommutationError("alpha is not a multiple of the identity; pass alpha explicitly to check commutation")


def twist(g, spec: TwistSpec, alpha=None, dec: SingularDecomposition | None = None) -> np.ndarray:
    """g' = V blockdiag(R1, R2) S blockdiag(1, R3) W^T."""
    g = coefficient_matrix(g)
    dec = svd(g) if dec is None else dec
    r1, r2, r3 = spec.blocks(dec.d, *dec.shape)
    _check_twist_allowed(g, dec, r1, alpha)
    if all(np.array_equal(r, np.eye(r.shape[0])) for r in (r1, r2, r3)):
        return np.array(g)
    return twisted_decomposition(dec, r1, r2, r3).matrix()


def shift(g, spec: ShiftSpec, force: bool = False, dec: SingularDecomposition | None = None) -> np.ndarray:
    """g' = V S' W^T with S' = diag(sigma_i (S_ii + lambda1), S_jj + lambda_j).

    Inadmissible specs are rejected unless ``force`` is set, in which case the
    result must pass :func:`certify` instead.
    """
    g = coefficient_matrix(g)
    dec = svd(g) if dec is None else dec
    if spec.is_identity():
        _check_shift_shape(dec, spec)
        return np.array(g)
    admissible = shift_admissible(dec, spec)
    if not admissible and not force:
        raise InadmissibleShift(
            "shift rejected: some |lambda_i + S_ii| (i > d) is not below |top + lambda1|; "
            "use force to accept it after re-certification"
        )
    S = np.zeros_like(dec.S)
    S[np.arange(dec.s), np.arange(dec.s)] = shifted_values(dec, spec)
    out = dec.V @ S @ dec.W.T
    if not admissible and not certify(out).tight:
        raise BellError("forced shift produced a matrix whose bound could not be certified tight")
    return out


def regularize_shift(dec: SingularDecomposition, spec: ShiftSpec, eps: float | None = None) -> ShiftSpec:
    """Pull offsets that reach |top + lambda1| back by ``eps`` (default 1e-6 ||g||_2) so the spec is admissible."""
    eps = 1e-6 * dec.top_value if eps is None else eps
    cap = abs(dec.top_value + spec.lambda1) - eps
    lambdas = []
    for s_ii, lam in zip(dec.values[dec.d :], spec.lambdas):
        t = s_ii + lam
        if abs(t) > cap:
            t = np.sign(t) * cap
        lambdas.append(t - s_ii)
    return ShiftSpec(spec.sigma, spec.lambda1, tuple(lambdas))


def diagonal_shift_spec(g, lam: float, dec: SingularDecomposition | None = None) -> ShiftSpec:
    """ShiftSpec equivalent to g + lam * 1 for symmetric g.

    With V = W up to column signs eps_k, the k-th singular value moves by
    eps_k * lam, so the top block needs a common sign.
    """
    g = coefficient_matrix(g)
    _check_symmetric(g)
    dec = svd(g) if dec is None else dec
    eps = np.sign(np.sum(dec.V[:, : dec.s] * dec.W[:, : dec.s], axis=0))
    top = eps[: dec.d]
    if not np.all(top == top[0]):
        raise BellError("top singular block mixes eigenvalue signs; g + lam*1 is not a single shift")
    return ShiftSpec((1,) * dec.d, top[0] * lam, tuple(eps[dec.d :] * lam))


def _check_symmetric(g: np.ndarray):
    if g.shape[0] != g.shape[1]:
        raise BellError(f"diagonal modification needs a square matrix, got {g.shape}")
    scale = float(np.max(np.abs(g)))
    if np.max(np.abs(g - g.T)) > 1e-8 * scale:
        raise BellError("diagonal modification needs V = W (symmetric coefficients)")


def fishburn_reeds_diagonal(g, lam: float) -> np.ndarray:
    """g + lam * 1 for symmetric g."""
    g = coefficient_matrix(g)
    _check_symmetric(g)
    return g + lam * np.eye(g.shape[0])


@dataclass(frozen=True)
class Modification:
    """A shift followed by a twist of the same decomposition; either part may be absent."""

    shift: ShiftSpec | None = None
    twist: TwistSpec | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {
            "shift": None if self.shift is None else self.shift.to_dict(),
            "twist": None if self.twist is None else self.twist.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Modification":
        return cls(
            shift=None if data.get("shift") is None else ShiftSpec.from_dict(data["shift"]),
            twist=None if data.get("twist") is None else TwistSpec.from_dict(data["twist"]),
        )


def modified_matrix(dec: SingularDecomposition, mod: Modification) -> np.ndarray:
    """V blockdiag(R1, R2) S' blockdiag(1, R3) W^T without admissibility checks."""
    m1, m2 = dec.shape
    diag = dec.values if mod.shift is None else shifted_values(dec, mod.shift)
    S = np.zeros_like(dec.S)
    S[np.arange(dec.s), np.arange(dec.s)] = diag
    V, W = dec.V, dec.W
    if mod.twist is not None:
        r1, r2, r3 = mod.twist.blocks(dec.d, m1, m2)
        V = V @ _block_diag(r1, r2)
        W = W @ _block_diag(np.eye(dec.d), r3.T)
    return V @ S @ W.T
