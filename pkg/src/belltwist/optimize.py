"""Random search plus pattern search over shift/twist parameters.

Objectives are the violation T/B and the dimension-witness ratio T/T_d'.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bounds import (
    classical_bound,
    classical_value,
    dimensional_bound,
    full_quantum_dimension,
    full_quantum_value,
    tsirelson_bound,
)
from .core import BellError, SingularDecomposition, coefficient_matrix, n_angles, svd
from .modify import Modification, ShiftSpec, TwistSpec, modified_matrix, regularize_shift, shift_admissible
from .tightness import certify

IMPROVE_TOL = 1e-12


@dataclass(frozen=True)
class SearchConfig:
    objective: str = "violation"
    dprime: int | None = None
    global_samples: int = 1000
    local_refine: bool = True
    local_starts: int = 4
    random_directions: int = 0
    boundary_fraction: float = 0.0
    init_step: float = np.pi / 8
    min_step: float = 1e-6
    seed: int = 0
    seesaw_restarts: int = 20
    use_shift: bool = True
    use_twist: bool = True
    max_evals: int = 50_000
    epsilon_regularize: bool = False
    initial: Modification | None = None

    def __post_init__(self):
        if self.objective not in ("violation", "dimension_ratio"):
            raise BellError(f"unknown objective {self.objective!r}")
        if self.objective == "dimension_ratio" and (self.dprime is None or self.dprime < 1):
            raise BellError("dimension_ratio objective needs dprime >= 1")
        if self.global_samples < 0 or self.local_starts < 1 or self.seesaw_restarts < 1 or self.max_evals < 1:
            raise BellError("sample, restart and evaluation counts must be positive")
        if not 0 < self.min_step < self.init_step:
            raise BellError("need 0 < min_step < init_step")


@dataclass
class SearchResult:
    best_matrix: np.ndarray
    best_spec: Modification
    objective_value: float
    objective: str
    trace: list = field(default_factory=list)
    local_optimum: bool = False
    evaluations: int = 0
    dprime: int | None = None
    verified_value: float | None = None

    @property
    def upper_estimate(self) -> bool:
        return self.objective == "dimension_ratio"

    def to_dict(self) -> dict:
        return {
            "objective": self.objective,
            "dprime": self.dprime,
            "objective_value": self.objective_value,
            "upper_estimate": self.upper_estimate,
            "verified_value": self.verified_value,
            "local_optimum": self.local_optimum,
            "evaluations": self.evaluations,
            "spec": self.best_spec.to_dict(),
            "matrix": [[float(x) for x in row] for row in self.best_matrix],
            "trace": [[int(i), float(v)] for i, v in self.trace],
        }


def evaluate(g, cfg: SearchConfig, T: float | None = None) -> float:
    """Objective of a coefficient matrix under ``cfg``; pass ``T`` when it is already known."""
    T = tsirelson_bound(g) if T is None else T
    if cfg.objective == "violation":
        return T / classical_value(g)
    return T / dimensional_bound(g, cfg.dprime, restarts=cfg.seesaw_restarts, seed=cfg.seed).value


class _Space:
    """Flat encoding: box-constrained shift targets, periodic angles, +-1 discrete coordinates."""

    def __init__(self, dec: SingularDecomposition, use_shift: bool, use_twist: bool):
        self.dec = dec
        m1, m2 = dec.shape
        d, s = dec.d, dec.s
        self.top = dec.top_value
        self.n_shift = s - d if use_shift else 0
        self.n_sigma = d if use_shift else 0
        self.use_shift = use_shift
        self.use_twist = use_twist
        self.block_dims = (d, m1 - d, m2 - d) if use_twist else (0, 0, 0)
        self.n_ang = [n_angles(k) for k in self.block_dims]
        self.n_angles = sum(self.n_ang)
        self.n_reflect = sum(1 for k in self.block_dims if k > 0)

    @property
    def n_cont(self) -> int:
        return self.n_shift + self.n_angles

    @property
    def n_disc(self) -> int:
        return self.n_sigma + self.n_reflect

    def identity(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.concatenate((self.dec.values[self.dec.d : self.dec.d + self.n_shift], np.zeros(self.n_angles)))
        return x, np.ones(self.n_disc)

    def encode(self, mod: Modification) -> tuple[np.ndarray, np.ndarray]:
        x, b = self.identity()
        d = self.dec.d
        if mod.shift is not None and self.use_shift:
            x[: self.n_shift] = self.dec.values[d:] + np.asarray(mod.shift.lambdas)
            b[: self.n_sigma] = mod.shift.sigma
        if mod.twist is not None and self.use_twist:
            t = mod.twist
            x[self.n_shift :] = np.concatenate((t.angles_r1, t.angles_r2, t.angles_r3))
            flags = [f for f, k in zip((t.reflect_r1, t.reflect_r2, t.reflect_r3), self.block_dims) if k > 0]
            b[self.n_sigma :] = [-1.0 if f else 1.0 for f in flags]
        return x, b

    def sample(self, rng: np.random.Generator, boundary: bool = False) -> tuple[np.ndarray, np.ndarray]:
        if boundary:
            targets = self.top * np.where(rng.integers(0, 2, self.n_shift) == 1, -1.0, 1.0)
        else:
            targets = rng.uniform(-self.top, self.top, self.n_shift)
        x = np.concatenate((targets, rng.uniform(0, 2 * np.pi, self.n_angles)))
        b = np.where(rng.integers(0, 2, self.n_disc) == 1, -1.0, 1.0)
        return x, b

    def clip(self, x: np.ndarray) -> np.ndarray:
        x = x.copy()
        x[: self.n_shift] = np.clip(x[: self.n_shift], -self.top, self.top)
        x[self.n_shift :] = np.mod(x[self.n_shift :], 2 * np.pi)
        return x

    def scale(self, k: int) -> float:
        return self.top / np.pi if k < self.n_shift else 1.0

    def decode(self, x: np.ndarray, b: np.ndarray) -> Modification:
        d = self.dec.d
        shift = twist = None
        if self.use_shift:
            lambdas = x[: self.n_shift] - self.dec.values[d:]
            shift = ShiftSpec(tuple(int(v) for v in b[: self.n_sigma]), 0.0, tuple(lambdas))
        if self.use_twist:
            a = x[self.n_shift :]
            c1, c2 = self.n_ang[0], self.n_ang[0] + self.n_ang[1]
            flags = iter(b[self.n_sigma :] < 0)
            refl = [bool(next(flags)) if k > 0 else False for k in self.block_dims]
            twist = TwistSpec(a[:c1], a[c1:c2], a[c2:], *refl)
        return Modification(shift=shift, twist=twist)


class _Evaluator:
    def __init__(self, dec: SingularDecomposition, cfg: SearchConfig):
        self.dec = dec
        self.cfg = cfg
        self.count = 0
        self.trace: list[tuple[int, float]] = []
        self.best = -np.inf
        self.best_mod: Modification | None = None
        self.best_g: np.ndarray | None = None
        # lambda_1 stays 0 and twists are isometries, so T never changes
        self.T = dec.top_value * float(np.sqrt(dec.shape[0] * dec.shape[1]))

    def __call__(self, mod: Modification) -> tuple[float, np.ndarray | None]:
        self.count += 1
        gp = modified_matrix(self.dec, mod)
        if mod.shift is not None and not shift_admissible(self.dec, mod.shift):
            if not certify(gp).tight:
                return -np.inf, None
        value = evaluate(gp, self.cfg, self.T)
        if value > self.best:
            self.best, self.best_mod, self.best_g = value, mod, gp
            self.trace.append((self.count - 1, value))
        return value, gp


def _search(g, cfg: SearchConfig) -> SearchResult:
    g = coefficient_matrix(g)
    dec = svd(g)
    cert = certify(g, dec=dec)
    if not cert.tight or cert.d != dec.d:
        raise BellError("optimization needs a matrix whose bound is certified tight")
    space = _Space(dec, cfg.use_shift, cfg.use_twist and cert.alpha_is_scalar)
    if space.n_cont + space.n_disc == 0:
        raise BellError("nothing to optimize: no shift or twist parameters for this matrix")
    ev = _Evaluator(dec, cfg)
    rng = np.random.default_rng(cfg.seed)

    # g itself is candidate 0 so the result never falls below it
    g_val = evaluate(g, cfg)
    x0, b0 = space.identity()
    ev.count, ev.best, ev.trace = 1, g_val, [(0, g_val)]
    ev.best_mod, ev.best_g = space.decode(x0, b0), np.array(g)
    candidates = [(g_val, 0, x0, b0, np.array(g))]
    starts = []
    if cfg.initial is not None:
        starts.append(space.encode(cfg.initial))
    n_edge = int(round(cfg.boundary_fraction * cfg.global_samples))
    samples = [space.sample(rng, boundary=i < n_edge) for i in range(cfg.global_samples)]
    for x, b in starts + samples:
        val, gp = ev(space.decode(x, b))
        if np.isfinite(val):
            candidates.append((val, ev.count - 1, x, b, gp))
    candidates.sort(key=lambda c: (-c[0], c[1]))

    best_val, _, best_x, best_b, best_g = candidates[0]
    local_optimum = False
    if cfg.local_refine:
        best_val = -np.inf
        for val, _, x, b, gp in candidates[: cfg.local_starts]:
            rx, rb, rv, rg, opt = _pattern_search(space, ev, cfg, rng, x, b, val, gp)
            if rv > best_val + IMPROVE_TOL:
                best_x, best_b, best_val, best_g, local_optimum = rx, rb, rv, rg, opt

    best_spec = space.decode(best_x, best_b)
    # steps below IMPROVE_TOL are not taken but still count: return the best point evaluated
    if ev.best > best_val:
        local_optimum = local_optimum and ev.best <= best_val + IMPROVE_TOL
        best_val, best_spec, best_g = ev.best, ev.best_mod, ev.best_g
    if cfg.epsilon_regularize and best_spec.shift is not None and not shift_admissible(dec, best_spec.shift):
        best_spec = Modification(regularize_shift(dec, best_spec.shift), best_spec.twist)
        best_g = modified_matrix(dec, best_spec)
        best_val = evaluate(best_g, cfg)

    result = SearchResult(
        best_matrix=best_g,
        best_spec=best_spec,
        objective_value=float(best_val),
        objective=cfg.objective,
        trace=ev.trace,
        local_optimum=local_optimum,
        evaluations=ev.count,
        dprime=cfg.dprime,
    )
    if cfg.objective == "dimension_ratio":
        check = dimensional_bound(best_g, cfg.dprime, restarts=4 * cfg.seesaw_restarts, seed=cfg.seed + 1)
        result.verified_value = tsirelson_bound(best_g) / check.value
    return result


def _pattern_search(space: _Space, ev: _Evaluator, cfg: SearchConfig, rng, x, b, val, gbest):
    """Coordinate search: +-step per continuous coordinate, single flips for discrete ones.

    The step halves after a sweep without improvement; the last sweep runs at
    exactly ``min_step`` and a clean sweep there marks a local optimum.
    """
    step = cfg.init_step
    while ev.count < cfg.max_evals:
        improved = False
        for k in range(space.n_cont):
            for direction in (1.0, -1.0):
                trial = x.copy()
                trial[k] += direction * step * space.scale(k)
                trial = space.clip(trial)
                if np.array_equal(trial, x):
                    continue
                tv, tg = ev(space.decode(trial, b))
                if tv > val + IMPROVE_TOL:
                    x, val, gbest, improved = trial, tv, tg, True
                    break
        for k in range(space.n_disc):
            trial = b.copy()
            trial[k] = -trial[k]
            tv, tg = ev(space.decode(x, trial))
            if tv > val + IMPROVE_TOL:
                b, val, gbest, improved = trial, tv, tg, True
        if not improved and space.n_cont:
            scales = np.array([space.scale(k) for k in range(space.n_cont)])
            for _ in range(cfg.random_directions):
                u = rng.standard_normal(space.n_cont)
                u *= step * scales / np.linalg.norm(u)
                for trial in (space.clip(x + u), space.clip(x - u)):
                    tv, tg = ev(space.decode(trial, b))
                    if tv > val + IMPROVE_TOL:
                        x, val, gbest, improved = trial, tv, tg, True
                        break
                if improved:
                    break
        if improved:
            continue
        if step == cfg.min_step:
            return x, b, val, gbest, True
        step = max(step / 2, cfg.min_step)
    return x, b, val, gbest, False


def optimize_violation(g, cfg: SearchConfig | None = None) -> SearchResult:
    """Maximize T(g')/B(g') over admissible shifts and (for scalar alpha) twists."""
    cfg = cfg or SearchConfig()
    if cfg.objective != "violation":
        raise BellError("optimize_violation needs objective='violation'")
    return _search(g, cfg)


def optimize_dimension_ratio(g, dprime: int, cfg: SearchConfig | None = None) -> SearchResult:
    """Maximize T(g')/T_d'(g'); T_d' comes from the see-saw, so the ratio is an upper estimate."""
    base = cfg or SearchConfig()
    cfg = SearchConfig(**{**base.__dict__, "objective": "dimension_ratio", "dprime": dprime})
    return _search(g, cfg)


@dataclass
class Histogram:
    mode: str
    values: np.ndarray
    method: str = ""

    def summary(self) -> dict:
        v = self.values
        return {
            "mode": self.mode,
            "method": self.method,
            "n": int(v.size),
            "mean": float(v.mean()),
            "std": float(v.std()),
            "min": float(v.min()),
            "median": float(np.median(v)),
            "max": float(v.max()),
        }

    def to_csv(self) -> str:
        return "".join(f"{i},{x!r}\n" for i, x in enumerate(self.values.tolist()))


def twisted_gisin3_violation(spec: TwistSpec, dec: SingularDecomposition | None = None) -> float:
    from .catalog import gisin_matrix
    from .modify import twisted_decomposition

    g = gisin_matrix(3)
    dec = svd(g) if dec is None else dec
    gp = twisted_decomposition(dec, *spec.blocks(dec.d, 3, 3)).matrix()
    return tsirelson_bound(g) / classical_bound(gp).value


def violation_histogram(mode: str, n: int, seed: int, restarts: int = 10) -> Histogram:
    """Violations of random 3x3 inequalities or of uniformly twisted Gisin M=3.

    Random entries are uniform in [-1, 1] and use the see-saw quantum value;
    twists draw every Givens angle uniformly and each reflection flag by a fair
    coin, and keep T fixed.
    """
    from .catalog import gisin_matrix
    from .modify import random_twist

    if n < 1:
        raise BellError("histogram needs n >= 1")
    rng = np.random.default_rng(seed)
    values = np.empty(n)
    if mode == "random":
        for i in range(n):
            g = rng.uniform(-1.0, 1.0, (3, 3))
            values[i] = full_quantum_value(g, restarts=restarts, seed=seed).value / classical_bound(g).value
        method = f"see-saw at d'={full_quantum_dimension((3, 3))} with {restarts} restarts over exact B"
    elif mode in ("twisted", "twisted_gisin3"):
        dec = svd(gisin_matrix(3))
        for i in range(n):
            values[i] = twisted_gisin3_violation(random_twist(rng, dec.d, 3, 3), dec)
        mode = "twisted"
        method = "T of Gisin M=3 (twist-invariant) over exact B"
    else:
        raise BellError(f"unknown histogram mode {mode!r}")
    return Histogram(mode, values, method)
