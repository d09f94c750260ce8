"""Coefficient matrices, deterministic SVD, orthogonal parametrizations and vector strategies."""

from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np

DEGENERACY_TOL = 1e-8
SIGN_EPS = 1e-10


class BellError(ValueError):
    """Base class for invalid inputs and rejected operations."""


class EnumerationTooLarge(BellError):
    pass


def coefficient_matrix(g) -> np.ndarray:
    """Validate and return ``g`` as a fresh float64 2-D array.

    Rejects empty, non-finite and identically zero matrices.
    """
    a = np.array(g, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise BellError(f"coefficient matrix must be 2-D and non-empty, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise BellError("coefficient matrix has non-finite entries")
    if not np.any(a):
        raise BellError("coefficient matrix is identically zero")
    a.setflags(write=False)
    return a


def matrix_digest(g: np.ndarray) -> str:
    """SHA-256 over the shape header and little-endian float64 row-major bytes."""
    a = np.ascontiguousarray(g, dtype="<f8")
    h = hashlib.sha256(f"{a.shape[0]}x{a.shape[1]}:".encode())
    h.update(a.tobytes())
    return h.hexdigest()


def read_matrix_csv(path) -> np.ndarray:
    return parse_matrix_csv(Path(path).read_text())


def parse_matrix_csv(text: str) -> np.ndarray:
    """Parse headerless CSV text; errors name the offending line and column (1-based)."""
    rows = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(not c.strip() for c in row):
            continue
        values = []
        for col, cell in enumerate(row, start=1):
            try:
                x = float(cell.strip())
            except ValueError:
                raise BellError(f"line {lineno}, column {col}: cannot parse {cell!r} as a number") from None
            if not np.isfinite(x):
                raise BellError(f"line {lineno}, column {col}: non-finite value {cell!r}")
            values.append(x)
        if rows and len(values) != len(rows[0]):
            raise BellError(f"line {lineno}: expected {len(rows[0])} columns, found {len(values)}")
        rows.append(values)
    if not rows:
        raise BellError("empty matrix file")
    return coefficient_matrix(rows)


def write_matrix_csv(g: np.ndarray) -> str:
    return "".join(",".join(repr(float(x)) for x in row) + "\n" for row in np.asarray(g))


@dataclass(frozen=True)
class SingularDecomposition:
    """g = V @ S @ W.T with S descending; ``d`` is the multiplicity of the top value."""

    V: np.ndarray
    S: np.ndarray
    W: np.ndarray
    values: np.ndarray
    d: int

    @property
    def top_value(self) -> float:
        return float(self.values[0])

    @property
    def s(self) -> int:
        return len(self.values)

    @property
    def shape(self) -> tuple[int, int]:
        return self.V.shape[0], self.W.shape[0]

    @property
    def V_top(self) -> np.ndarray:
        return self.V[:, : self.d]

    @property
    def W_top(self) -> np.ndarray:
        return self.W[:, : self.d]

    def matrix(self) -> np.ndarray:
        return self.V @ self.S @ self.W.T


def _count_degenerate(values: np.ndarray, tol: float) -> int:
    top = values[0]
    return int(np.sum(top - values <= tol * top))


def _first_significant_sign(col: np.ndarray) -> float:
    idx = np.flatnonzero(np.abs(col) > SIGN_EPS)
    if idx.size == 0:
        return 1.0
    return 1.0 if col[idx[0]] > 0 else -1.0


def svd(g, degeneracy_tol: float = DEGENERACY_TOL) -> SingularDecomposition:
    """Full SVD with a fixed sign convention.

    The first entry of absolute value above 1e-10 in each column of V is made
    positive, with the sign carried over to the paired column of W. Unpaired
    null-space columns of W get the same rule on their own.
    """
    if degeneracy_tol <= 0:
        raise BellError("degeneracy_tol must be positive")
    g = coefficient_matrix(g)
    m1, m2 = g.shape
    U, values, Wt = np.linalg.svd(g, full_matrices=True)
    V = U.copy()
    W = Wt.T.copy()
    s = len(values)
    for k in range(m1):
        if _first_significant_sign(V[:, k]) < 0:
            V[:, k] *= -1.0
            if k < s:
                W[:, k] *= -1.0
    for k in range(s, m2):
        if _first_significant_sign(W[:, k]) < 0:
            W[:, k] *= -1.0
    S = np.zeros((m1, m2))
    S[np.arange(s), np.arange(s)] = values
    for a in (V, S, W, values):
        a.setflags(write=False)
    return SingularDecomposition(V=V, S=S, W=W, values=values, d=_count_degenerate(values, degeneracy_tol))


def spectral_norm(g) -> float:
    return float(np.linalg.norm(np.asarray(g, dtype=float), 2))


def rotation_rpy(phi: float, theta: float, psi: float) -> np.ndarray:
    """Roll-pitch-yaw rotation as the ordered product of the three planar factors."""
    c, s = np.cos(phi), np.sin(phi)
    r_phi = np.array([[1.0, 0.0, 0.0], [0.0, c, s], [0.0, -s, c]])
    c, s = np.cos(theta), np.sin(theta)
    r_theta = np.array([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])
    c, s = np.cos(psi), np.sin(psi)
    r_psi = np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])
    return r_phi @ r_theta @ r_psi


def n_angles(n: int) -> int:
    return n * (n - 1) // 2


def orthogonal_from_angles(n: int, angles, reflect: bool = False) -> np.ndarray:
    """Product of Givens rotations over index pairs (i, j), i < j, in lexicographic order.

    Each factor acts as ``[[cos, -sin], [sin, cos]]`` on coordinates (i, j), so
    n=2 with angle pi/2 gives ``[[0, -1], [1, 0]]``. With ``reflect`` the
    product is followed by ``diag(-1, 1, ..., 1)`` on the right.
    """
    angles = np.asarray(angles, dtype=float).ravel()
    if n < 0 or angles.size != n_angles(n):
        raise BellError(f"orthogonal_from_angles: n={n} needs {n_angles(max(n, 0))} angles, got {angles.size}")
    Q = np.eye(n)
    for (i, j), a in zip(combinations(range(n), 2), angles):
        c, s = np.cos(a), np.sin(a)
        qi, qj = Q[:, i].copy(), Q[:, j].copy()
        Q[:, i] = c * qi + s * qj
        Q[:, j] = -s * qi + c * qj
    if reflect and n > 0:
        Q[:, 0] *= -1.0
    return Q


@dataclass(frozen=True)
class VectorStrategy:
    """Unit vectors ``v`` (M1 x d') and ``w`` (M2 x d'), one per row."""

    v: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.v, dtype=float))
        w = np.atleast_2d(np.asarray(self.w, dtype=float))
        if v.shape[1] != w.shape[1]:
            raise BellError(f"vector dimensions differ: {v.shape[1]} vs {w.shape[1]}")
        for name, x in (("v", v), ("w", w)):
            dev = np.max(np.abs(np.linalg.norm(x, axis=1) - 1.0))
            if dev > 1e-10:
                raise BellError(f"strategy vectors {name} are not unit length (max deviation {dev:.3g})")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "w", w)

    @property
    def dprime(self) -> int:
        return self.v.shape[1]


def strategy_value(g, strategy: VectorStrategy) -> float:
    """Bell expression value sum_ij g_ij <v_i, w_j>."""
    g = np.asarray(g, dtype=float)
    if strategy.v.shape[0] != g.shape[0] or strategy.w.shape[0] != g.shape[1]:
        raise BellError(
            f"strategy has {strategy.v.shape[0]}x{strategy.w.shape[0]} vectors for a {g.shape[0]}x{g.shape[1]} matrix"
        )
    return float(np.sum(g * (strategy.v @ strategy.w.T)))
