"""Classical bound by enumeration, the singular-value quantum bound, and see-saw bounds for fixed dimension."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .core import BellError, EnumerationTooLarge, VectorStrategy, coefficient_matrix, spectral_norm

DEFAULT_MAX_ENUM = 24
LOW_BITS = 12
DEGENERATE_NORM = 1e-12
SEESAW_TOL = 1e-10
SEESAW_MAX_ITER = 10_000


def max_enum() -> int:
    """Enumeration budget on min(M1, M2); ``BELL_MAX_ENUM`` overrides the default."""
    raw = os.environ.get("BELL_MAX_ENUM")
    if raw is None:
        return DEFAULT_MAX_ENUM
    try:
        return int(raw)
    except ValueError:
        raise BellError(f"BELL_MAX_ENUM must be an integer, got {raw!r}") from None


@dataclass(frozen=True)
class ClassicalBound:
    value: float
    a1: np.ndarray
    a2: np.ndarray


def bell_value(g, a1, a2) -> float:
    """a1^T g a2, evaluated as (a1 @ g) @ a2."""
    return float((np.asarray(a1, dtype=float) @ np.asarray(g, dtype=float)) @ np.asarray(a2, dtype=float))


def _sign(x: np.ndarray) -> np.ndarray:
    return np.where(x >= 0, 1.0, -1.0)


@lru_cache(maxsize=32)
def _sign_table(k: int) -> np.ndarray:
    """All 2^k sign vectors of length k, row t has bit b of t set -> -1."""
    t = np.arange(2**k)[:, None]
    table = np.where((t >> np.arange(k)) & 1, -1.0, 1.0)
    table.setflags(write=False)
    return table


def classical_bound(g, budget: int | None = None) -> ClassicalBound:
    """Exact local hidden variable bound max_{a1, a2} a1^T g a2 over +-1 vectors.

    Signs are enumerated on the smaller side with the first sign fixed to +1;
    the other side is then sign(column sums). The first ``LOW_BITS`` free signs
    are tabulated in one block, the remaining ones walk a Gray code that
    updates the column sums by one row per step.
    """
    g = coefficient_matrix(g)
    transposed = g.shape[0] > g.shape[1]
    h = g.T if transposed else g
    _, a_small = _enumerate(h, budget)
    a_other = _sign(a_small @ h)
    a1, a2 = (a_other, a_small) if transposed else (a_small, a_other)
    a1.setflags(write=False)
    a2.setflags(write=False)
    return ClassicalBound(value=bell_value(g, a1, a2), a1=a1, a2=a2)


def classical_value(g, budget: int | None = None) -> float:
    """B without the maximizing signs; skips input validation, for inner loops."""
    g = np.asarray(g, dtype=float)
    return _enumerate(g.T if g.shape[0] > g.shape[1] else g, budget)[0]


def _enumerate(h: np.ndarray, budget: int | None) -> tuple[float, np.ndarray]:
    budget = max_enum() if budget is None else budget
    m = h.shape[0]
    if m > budget:
        raise EnumerationTooLarge(
            f"enumeration too large: min(M1, M2) = {m} needs 2^{m - 1} sign vectors, budget is {budget} "
            f"(set BELL_MAX_ENUM >= {m} to allow it)"
        )
    k = m - 1
    low = min(k, LOW_BITS)
    high = k - low
    base = h[0] + _sign_table(low) @ h[1 : 1 + low]
    if not high:
        vals = np.abs(base).sum(axis=1)
        i = int(np.argmax(vals))
        return float(vals[i]), np.concatenate(([1.0], _sign_table(low)[i]))
    high_rows = h[1 + low :]
    high_signs = np.ones(high)
    partial = high_rows.sum(axis=0)

    best_val = -np.inf
    best_low = 0
    best_high = high_signs.copy()
    for t in range(2**high):
        if t:
            bit = (t & -t).bit_length() - 1
            partial = partial - 2.0 * high_signs[bit] * high_rows[bit]
            high_signs[bit] = -high_signs[bit]
        vals = np.abs(base + partial).sum(axis=1)
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val = vals[i]
            best_low = i
            best_high = high_signs.copy()
    return float(best_val), np.concatenate(([1.0], _sign_table(low)[best_low], best_high))


def tsirelson_bound(g) -> float:
    """||g||_2 * sqrt(M1 * M2). Only an upper bound unless certified tight."""
    g = coefficient_matrix(g)
    return spectral_norm(g) * float(np.sqrt(g.shape[0] * g.shape[1]))


def optimal_w_for_v(g, v, previous=None) -> tuple[np.ndarray, np.ndarray]:
    """Best response ``w_j`` parallel to sum_i g_ij v_i.

    Columns whose sum has norm <= 1e-12 keep ``previous[j]`` (or e_1) and are
    flagged in the returned boolean mask.
    """
    g = np.asarray(g, dtype=float)
    v = np.atleast_2d(np.asarray(v, dtype=float))
    if v.shape[0] != g.shape[0]:
        raise BellError(f"need {g.shape[0]} vectors, got {v.shape[0]}")
    cols = g.T @ v
    norms = np.linalg.norm(cols, axis=1)
    degenerate = norms <= DEGENERATE_NORM
    if previous is None:
        previous = np.zeros_like(cols)
        previous[:, 0] = 1.0
    w = np.where(degenerate[:, None], previous, cols / np.where(degenerate, 1.0, norms)[:, None])
    return w, degenerate


@dataclass(frozen=True)
class SeesawResult:
    dprime: int
    value: float
    strategy: VectorStrategy
    restarts: int
    iterations_per_restart: list = field(repr=False)
    converged: bool
    values_per_restart: list = field(repr=False, default_factory=list)
    lower_bound: bool = True

    def summary(self) -> dict:
        return {
            "dprime": self.dprime,
            "value": self.value,
            "restarts": self.restarts,
            "converged": self.converged,
        }


def _normalize_batch(x: np.ndarray, previous: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=-1, keepdims=True)
    bad = norms <= DEGENERATE_NORM
    return np.where(bad, previous, x / np.where(bad, 1.0, norms))


def initial_vectors(m: int, dprime: int, seed: int, restart: int) -> np.ndarray:
    """Uniform unit vectors from a generator keyed by (seed, restart)."""
    rng = np.random.default_rng([seed, restart])
    x = rng.standard_normal((m, dprime))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def seesaw(g, v0: np.ndarray, tol: float = SEESAW_TOL, max_iter: int = SEESAW_MAX_ITER, record: bool = False):
    """Alternating best responses from a batch of starting points ``v0`` (R x M1 x d').

    Each batch member stops on its own once a full iteration improves the
    objective by less than ``tol``. Returns (v, w, values, iterations,
    converged, history); ``history`` holds the objective after every half-step
    per batch member when ``record`` is set.
    """
    g = np.asarray(g, dtype=float)
    v = np.array(v0, dtype=float)
    R, _, dp = v.shape
    w = np.zeros((R, g.shape[1], dp))
    w[..., 0] = 1.0
    values = np.full(R, -np.inf)
    iterations = np.zeros(R, dtype=int)
    converged = np.zeros(R, dtype=bool)
    history = [[] for _ in range(R)] if record else None
    active = np.arange(R)
    gt = g.T
    for _ in range(max_iter):
        if active.size == 0:
            break
        va = v[active]
        cols = np.matmul(gt, va)
        wa = _normalize_batch(cols, w[active])
        half = np.sum(cols * wa, axis=(1, 2))
        rows = np.matmul(g, wa)
        va = _normalize_batch(rows, va)
        new = np.sum(rows * va, axis=(1, 2))
        v[active] = va
        w[active] = wa
        iterations[active] += 1
        if record:
            for k, r in enumerate(active):
                history[r].extend((float(half[k]), float(new[k])))
        done = new - values[active] < tol
        values[active] = new
        converged[active[done]] = True
        active = active[~done]
    return v, w, values, iterations, converged, history


def dimensional_bound(g, dprime: int, restarts: int = 50, seed: int = 0) -> SeesawResult:
    """Lower estimate of the best value reachable with unit vectors in R^dprime."""
    g = coefficient_matrix(g)
    if int(dprime) != dprime or dprime < 1:
        raise BellError(f"dprime must be a positive integer, got {dprime}")
    if int(restarts) != restarts or restarts < 1:
        raise BellError(f"restarts must be a positive integer, got {restarts}")
    v0 = np.stack([initial_vectors(g.shape[0], dprime, seed, r) for r in range(restarts)])
    v, w, values, iterations, converged, _ = seesaw(g, v0)
    best = int(np.argmax(values))
    strategy = VectorStrategy(v[best], w[best])
    return SeesawResult(
        dprime=int(dprime),
        value=float(np.sum(g * (strategy.v @ strategy.w.T))),
        strategy=strategy,
        restarts=int(restarts),
        iterations_per_restart=iterations.tolist(),
        converged=bool(converged[best]),
        values_per_restart=values.tolist(),
    )


def full_quantum_dimension(shape: tuple[int, int]) -> int:
    m1, m2 = shape
    return min(min(m1, m2) + 2, m1 + m2)


def full_quantum_value(g, restarts: int = 50, seed: int = 0) -> SeesawResult:
    """Heuristic quantum value: see-saw at dimension min(M1, M2) + 2 (capped at M1 + M2)."""
    g = coefficient_matrix(g)
    return dimensional_bound(g, full_quantum_dimension(g.shape), restarts=restarts, seed=seed)
