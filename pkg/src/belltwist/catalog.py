"""Matrix families used in the experiments, plus a two-qubit check of vector strategies."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .bounds import classical_bound
from .core import BellError, coefficient_matrix, rotation_rpy

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)
PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)

ROTATED_FACTOR = np.array(
    [
        [0.5, 0.5, 0.0],
        [-0.5, 0.5, 0.0],
        [0.0, 0.0, 1 / np.sqrt(2)],
        [1 / np.sqrt(2), 0.0, 0.0],
        [0.0, 1 / np.sqrt(2), 0.0],
        [0.0, 0.0, 1 / np.sqrt(2)],
    ]
)

D6_1 = np.array(
    [
        [1, 0, 1, 0, 1, 1],
        [0, 1, 0, 1, 1, -1],
        [1, 0, 1, 1, -1, 0],
        [0, 1, 1, -1, 0, -1],
        [1, 1, -1, 0, -1, 0],
        [1, -1, 0, -1, 0, -1],
    ],
    dtype=float,
)

D6_1_OPTIMIZED = np.array(
    [
        [-0.350174, 0.323788, 0.344416, -0.368076, -0.299221, 0.31404],
        [-0.472675, -0.357842, -0.182589, -0.31764, -0.377403, 0.215713],
        [-0.218507, -0.300642, -0.525576, -0.185735, 0.38952, 0.279595],
        [0.39405, 0.286377, -0.315566, -0.315986, 0.296399, 0.391561],
        [0.303896, 0.37589, -0.193803, -0.514786, -0.310722, -0.200436],
        [0.190791, -0.355309, -0.321679, -0.184563, -0.326631, -0.511833],
    ]
)

CHSH = np.array([[1.0, 1.0], [1.0, -1.0]])

# the Gisin M=6 optimum: V diag(+,+,+,+,-,-) ||g|| W^T divided by (1 + sqrt 3)
GISIN6_CHSH_BLOCKS = np.array(
    [
        [0, 0, -1, 0, 0, -1],
        [1, 0, 0, -1, 0, 0],
        [0, 1, 0, 0, -1, 0],
        [0, 0, 1, 0, 0, -1],
        [1, 0, 0, 1, 0, 0],
        [0, 1, 0, 0, 1, 0],
    ],
    dtype=float,
)


def chsh_matrix() -> np.ndarray:
    return CHSH.copy()


def gisin_matrix(M: int) -> np.ndarray:
    """g_ij = +1 for j <= i and -1 otherwise."""
    if M < 2:
        raise BellError(f"Gisin family needs M >= 2, got {M}")
    i = np.arange(M)
    return np.where(i[None, :] <= i[:, None], 1.0, -1.0)


def fishburn_reeds_vectors(d: int) -> np.ndarray:
    """(d-1)d x d matrix with rows e_j - e_i and e_j + e_i for each pair i < j, in that order."""
    if d < 2:
        raise BellError(f"Fishburn-Reeds family needs d >= 2, got {d}")
    rows = []
    for i, j in combinations(range(d), 2):
        minus = np.zeros(d, dtype=int)
        minus[i], minus[j] = -1, 1
        plus = np.zeros(d, dtype=int)
        plus[i], plus[j] = 1, 1
        rows.extend((minus, plus))
    V = np.array(rows)
    gram = V.T @ V
    assert np.array_equal(gram, 2 * (d - 1) * np.eye(d, dtype=int))
    return V


def fishburn_reeds_matrix(d: int) -> np.ndarray:
    V = fishburn_reeds_vectors(d).astype(float)
    return V @ V.T - (4.0 / 3.0) * np.eye(V.shape[0])


def rotated_matrix(phi: float, theta: float, psi: float) -> np.ndarray:
    """6 x 3 inequality maximally violated when Bob's lab is rotated by R(phi, theta, psi)."""
    return ROTATED_FACTOR @ rotation_rpy(phi, theta, psi)


def d6_1_matrix() -> np.ndarray:
    return D6_1.copy()


def d6_1_optimized_matrix() -> np.ndarray:
    return D6_1_OPTIMIZED.copy()


@dataclass(frozen=True)
class TwoQubitObservablePair:
    bloch_a: np.ndarray
    bloch_b: np.ndarray
    operator_a: np.ndarray
    operator_b: np.ndarray


def _bloch_operator(n: np.ndarray) -> np.ndarray:
    return np.einsum("k,kij->ij", n, PAULI)


def bloch_observables(v, w) -> TwoQubitObservablePair:
    """A = v . sigma for Alice and B = (w . sigma)^T for Bob."""
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    for name, x in (("v", v), ("w", w)):
        if x.shape != (3,) or abs(np.linalg.norm(x) - 1.0) > 1e-8:
            raise BellError(f"Bloch vector {name} must be a unit vector in R^3, got {x}")
    return TwoQubitObservablePair(v, w, _bloch_operator(v), _bloch_operator(w).T)


def phi_plus_expectation(pair: TwoQubitObservablePair) -> float:
    """<phi+| A (x) B |phi+> with |phi+> = (|00> + |11>)/sqrt 2."""
    op = np.kron(pair.operator_a, pair.operator_b)
    return float(np.real(PHI_PLUS.conj() @ op @ PHI_PLUS))


AXES = {"phi": 0, "theta": 1, "psi": 2, "yaw": 0, "pitch": 1, "roll": 2}


def _axis_index(axis) -> int:
    if isinstance(axis, int) and axis in (0, 1, 2):
        return axis
    try:
        return AXES[str(axis).lower()]
    except KeyError:
        raise BellError(f"unknown scan axis {axis!r}; use one of {sorted(AXES)}") from None


def rotated_strategy(actual) -> tuple[np.ndarray, np.ndarray]:
    """Alice's Bloch vectors sqrt2 * factor rows; Bob's are the rows of R(actual)^T."""
    v = np.sqrt(2.0) * ROTATED_FACTOR
    w = rotation_rpy(*actual).T
    return v, w


def measured_value(design, actual) -> float:
    """Quantum value Q of rotated_matrix(design) with Bob's lab at rotation ``actual``, on |phi+>."""
    g = rotated_matrix(*design)
    v, w = rotated_strategy(actual)
    return float(
        sum(g[i, j] * phi_plus_expectation(bloch_observables(v[i], w[j])) for i in range(6) for j in range(3))
    )


def rotation_scan(design, axis="phi", steps: int = 360) -> np.ndarray:
    """Rows (angle, Q/B) with the scanned angle on a uniform grid over [0, 2pi)."""
    if steps < 2:
        raise BellError("rotation_scan needs at least 2 steps")
    k = _axis_index(axis)
    design = tuple(float(a) for a in design)
    B = classical_bound(rotated_matrix(*design)).value
    out = np.empty((steps, 2))
    for n, a in enumerate(np.arange(steps) * (2 * np.pi / steps)):
        actual = list(design)
        actual[k] = a
        out[n] = a, measured_value(design, actual) / B
    return out


def scan_surface(psi: float, steps: int = 60) -> np.ndarray:
    """Rows (phi, theta, T/B) of the violation of rotated_matrix over a grid with psi fixed."""
    grid = np.arange(steps) * (2 * np.pi / steps)
    T = 3 * np.sqrt(2)
    rows = []
    for phi in grid:
        for theta in grid:
            rows.append((phi, theta, T / classical_bound(rotated_matrix(phi, theta, psi)).value))
    return np.array(rows)


def catalog() -> dict:
    """Named matrices for the CLI and reproduction runs."""
    named = {
        "chsh": chsh_matrix(),
        "gisin3": gisin_matrix(3),
        "gisin6": gisin_matrix(6),
        "d6": d6_1_matrix(),
        "d6opt": d6_1_optimized_matrix(),
    }
    for d in range(2, 6):
        named[f"fr{d}"] = fishburn_reeds_matrix(d)
    return {k: coefficient_matrix(v) for k, v in named.items()}
