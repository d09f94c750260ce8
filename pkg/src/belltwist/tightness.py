"""Achievability of the singular-value bound: the ellipsoid / alpha feasibility test."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .core import DEGENERACY_TOL, BellError, SingularDecomposition, VectorStrategy, coefficient_matrix, svd

EQUAL_NORM_TOL = 1e-9
RESIDUAL_TOL = 1e-8
PSD_TOL = 1e-8
EXPANDED_DEGENERACY_TOL = 1e-6


@dataclass(frozen=True)
class TightnessCertificate:
    tight: bool
    d: int
    method: str
    residual: float
    alpha: np.ndarray | None = None
    gram: np.ndarray | None = None
    dprime_min_estimate: int | None = None
    requires_larger_dprime: bool = False
    # singular vectors of the top block the certificate refers to
    V_top: np.ndarray | None = field(default=None, repr=False)
    W_top: np.ndarray | None = field(default=None, repr=False)

    @property
    def alpha_is_scalar(self) -> bool:
        if not self.tight or self.alpha is None or self.alpha.shape[0] != self.alpha.shape[1]:
            return False
        a = self.alpha
        return bool(np.allclose(a, a[0, 0] * np.eye(a.shape[0]), rtol=0, atol=1e-9 * abs(a[0, 0])))

    def to_dict(self) -> dict:
        def flat(x):
            return None if x is None else [float(t) for t in np.asarray(x).ravel()]

        return {
            "tight": self.tight,
            "method": self.method,
            "d": self.d,
            "dprime_min": self.dprime_min_estimate,
            "residual": float(self.residual),
            "alpha": flat(self.alpha),
            "alpha_shape": None if self.alpha is None else list(self.alpha.shape),
            "gram": flat(self.gram),
            "requires_larger_dprime": self.requires_larger_dprime,
        }


def constraint_rows(dec: SingularDecomposition, d: int | None = None) -> np.ndarray:
    """Rows of V^d followed by sqrt(M2/M1) times rows of W^d, shape (M1 + M2, d)."""
    d = dec.d if d is None else d
    m1, m2 = dec.shape
    return np.vstack([dec.V[:, :d], np.sqrt(m2 / m1) * dec.W[:, :d]])


def _quadratic_design(rows: np.ndarray) -> tuple[np.ndarray, list[tuple[int, int]]]:
    d = rows.shape[1]
    pairs = [(a, b) for a in range(d) for b in range(a, d)]
    A = np.stack([rows[:, a] * rows[:, b] * (1.0 if a == b else 2.0) for a, b in pairs], axis=1)
    return A, pairs


def gram_solve(rows: np.ndarray) -> tuple[np.ndarray, float, bool]:
    """Minimum-norm least-squares Q with r^T Q r = 1 for every row, projected onto the PSD cone.

    Returns (Q, residual, psd_ok). The residual is measured after projection.
    """
    rows = np.atleast_2d(rows)
    d = rows.shape[1]
    A, pairs = _quadratic_design(rows)
    q, *_ = np.linalg.lstsq(A, np.ones(rows.shape[0]), rcond=None)
    Q = np.zeros((d, d))
    for (a, b), x in zip(pairs, q):
        Q[a, b] = Q[b, a] = x
    evals, evecs = np.linalg.eigh(Q)
    trace = float(np.trace(Q))
    psd_ok = trace > 0 and evals[0] >= -PSD_TOL * trace
    clipped = np.clip(evals, 0.0, None)
    Q = (evecs * clipped) @ evecs.T
    residual = float(np.max(np.abs(np.einsum("ka,ab,kb->k", rows, Q, rows) - 1.0)))
    return Q, residual, bool(psd_ok)


def alpha_from_gram(Q: np.ndarray) -> tuple[np.ndarray, int]:
    """alpha (d x rank) with alpha alpha^T = Q, rank at eigenvalue threshold 1e-8 * trace."""
    evals, evecs = np.linalg.eigh(Q)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    keep = evals > PSD_TOL * max(float(np.trace(Q)), 0.0)
    rank = int(np.sum(keep))
    return evecs[:, keep] * np.sqrt(evals[keep]), rank


def _certify_block(dec: SingularDecomposition, d: int, dprime_max: int | None) -> TightnessCertificate:
    rows = constraint_rows(dec, d)
    V_top, W_top = dec.V[:, :d], dec.W[:, :d]
    norms = np.linalg.norm(rows, axis=1)
    c = float(norms.mean())
    if c > 0 and np.max(np.abs(norms - c)) <= EQUAL_NORM_TOL * max(c, 1.0):
        alpha = np.eye(d) / c
        gram = alpha @ alpha.T
        residual = float(np.max(np.abs(np.einsum("ka,ab,kb->k", rows, gram, rows) - 1.0)))
        return TightnessCertificate(
            tight=True, d=d, method="identity-candidate", residual=residual, alpha=alpha, gram=gram,
            dprime_min_estimate=d, requires_larger_dprime=dprime_max is not None and dprime_max < d,
            V_top=V_top, W_top=W_top,
        )
    Q, residual, psd_ok = gram_solve(rows)
    if not psd_ok or residual > RESIDUAL_TOL:
        return TightnessCertificate(tight=False, d=d, method="gram-solve", residual=residual, V_top=V_top, W_top=W_top)
    alpha, rank = alpha_from_gram(Q)
    gram = alpha @ alpha.T
    residual = float(np.max(np.abs(np.einsum("ka,ab,kb->k", rows, gram, rows) - 1.0)))
    if residual > RESIDUAL_TOL:
        return TightnessCertificate(tight=False, d=d, method="gram-solve", residual=residual, V_top=V_top, W_top=W_top)
    return TightnessCertificate(
        tight=True, d=d, method="gram-solve", residual=residual, alpha=alpha, gram=gram,
        dprime_min_estimate=rank, requires_larger_dprime=dprime_max is not None and dprime_max < rank,
        V_top=V_top, W_top=W_top,
    )


def certify(g, dprime_max: int | None = None, dec: SingularDecomposition | None = None) -> TightnessCertificate:
    """Try to certify that ||g||_2 sqrt(M1 M2) is reached by some quantum strategy.

    A negative answer means "not certified": the Gram solve is a heuristic for
    a rank-constrained semidefinite feasibility problem. If the first attempt
    fails, the top block is widened to singular values within 1e-6 of the top.
    """
    if dprime_max is not None and dprime_max < 1:
        raise BellError("dprime_max must be at least 1")
    if dec is None:
        dec = svd(coefficient_matrix(g), DEGENERACY_TOL)
    cert = _certify_block(dec, dec.d, dprime_max)
    if cert.tight:
        return cert
    wide = int(np.sum(dec.top_value - dec.values <= EXPANDED_DEGENERACY_TOL * dec.top_value))
    if wide > dec.d:
        retry = _certify_block(dec, wide, dprime_max)
        if retry.tight:
            return retry
    return cert


def strategy_from_certificate(g, cert: TightnessCertificate) -> VectorStrategy:
    """Vectors v_i = alpha^T V_i and w_j = sqrt(M2/M1) alpha^T W_j, normalized for rounding."""
    if not cert.tight:
        raise BellError("certificate is not tight")
    m1, m2 = np.shape(g)
    v = cert.V_top @ cert.alpha
    w = np.sqrt(m2 / m1) * cert.W_top @ cert.alpha
    return VectorStrategy(v / np.linalg.norm(v, axis=1, keepdims=True), w / np.linalg.norm(w, axis=1, keepdims=True))


def rank_one_feasible(rows: np.ndarray, tol: float = 1e-8) -> bool:
    """Whether some q has |r_k . q| = 1 for all rows, i.e. a rank-one Gram matrix exists.

    Every row lies in the span of a maximal independent subset B, so q can be
    restricted to that span and is fixed by the signs of B q. All sign patterns
    with the first sign +1 are tried.
    """
    rows = np.atleast_2d(rows)
    basis: list[int] = []
    for k in range(rows.shape[0]):
        trial = rows[basis + [k]]
        if np.linalg.matrix_rank(trial, tol=1e-10) > len(basis):
            basis.append(k)
    if not basis:
        return False
    B = rows[basis]
    for tail in product((1.0, -1.0), repeat=len(basis) - 1):
        signs = np.array((1.0,) + tail)
        q, *_ = np.linalg.lstsq(B, signs, rcond=None)
        if np.max(np.abs(np.abs(rows @ q) - 1.0)) <= tol:
            return True
    return False


def min_dimension(cert: TightnessCertificate, rows: np.ndarray | None = None) -> int:
    """Lower bound on the vector dimension implied by the certificate.

    Combines the exact rank-one test on the constraint rows with the rank of
    the certified Gram matrix and returns the larger of the two.
    """
    if not cert.tight:
        raise BellError("min_dimension needs a tight certificate")
    if rows is None:
        m1 = cert.V_top.shape[0]
        m2 = cert.W_top.shape[0]
        rows = np.vstack([cert.V_top, np.sqrt(m2 / m1) * cert.W_top])
    forced = 1 if rank_one_feasible(rows) else 2
    return max(forced, cert.dprime_min_estimate or 1)
