"""Seeded optimisation engines.

``ga_minimize`` is a real-coded genetic algorithm with elitism and optional
discrete dimensions. ``constrained_minimize`` wraps scipy's bounded
Nelder-Mead in an exterior quadratic penalty loop.

Every random draw in the GA comes from a stream keyed by
``(seed, generation, individual)``, so results do not depend on how many
workers evaluate the population.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.optimize import minimize

GA_PENALTY = 1e6
TOURNAMENT_SIZE = 3
BLEND_ALPHA = 0.5
MUTATION_RATE = 0.1


@dataclass(frozen=True)
class OptimizerOptions:
    population: int = 20
    elite: int = 10
    max_iterations: int = 20
    seed: int = 0
    feasibility_tol: float = 1e-6
    convergence_tol: float = 1e-6
    workers: int = 1

    def __post_init__(self):
        if not (0 < self.elite <= self.population):
            raise ValueError("need 0 < elite <= population")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class SearchResult:
    best_point: np.ndarray
    best_value: float
    history: list[float] = field(default_factory=list)
    feasible: bool = True
    evaluations: int = 0
    max_violation: float = 0.0


def _stream(seed: int, generation: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, generation, index]))


class _Evaluator:
    """Scores a population with a fixed, index-ordered reduction."""

    def __init__(self, objective, constraints, vectorized, workers):
        self.objective = objective
        self.constraints = constraints
        self.vectorized = vectorized
        self.workers = workers
        self.count = 0

    def _score_block(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if self.vectorized:
            f = np.asarray(self.objective(X), dtype=float).reshape(len(X))
        else:
            f = np.array([float(self.objective(x)) for x in X])
        viol = np.zeros(len(X))
        if self.constraints is not None:
            for k, x in enumerate(X):
                r = np.atleast_1d(np.asarray(self.constraints(x), dtype=float))
                viol[k] = float(np.max(np.abs(r))) if r.size else 0.0
                f[k] += GA_PENALTY * float(r @ r)
        return f, viol

    def __call__(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        self.count += len(X)
        if self.workers == 1 or len(X) < 2:
            return self._score_block(X)
        blocks = np.array_split(np.arange(len(X)), min(self.workers, len(X)))
        with ThreadPoolExecutor(self.workers) as pool:
            parts = list(pool.map(lambda idx: self._score_block(X[idx]), blocks))
        return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def _as_box(box) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = (np.asarray(b, dtype=float) for b in box)
    if lo.shape != hi.shape or np.any(lo > hi):
        raise ValueError("box must be (lower, upper) with lower <= upper")
    return lo, hi


def ga_minimize(
    objective: Callable,
    box,
    discrete_dims: Mapping[int, Sequence[float]] | None = None,
    opts: OptimizerOptions = OptimizerOptions(),
    *,
    constraints: Callable | None = None,
    initial: Sequence[np.ndarray] = (),
    vectorized: bool = False,
    local_refine: bool = False,
    refine_evaluations: int = 600,
    generation_refine: int = 0,
) -> SearchResult:
    """Minimise ``objective`` over ``box`` with an elitist GA.

    Operators: tournament selection of size 3, BLX-0.5 blend crossover on
    continuous genes (uniform parent pick on discrete genes), and per-gene
    uniform resampling at rate 0.1. The ``elite`` best individuals pass to the
    next generation unchanged. ``constraints`` returns equality residuals that
    are added as a static ``1e6 * |r|^2`` penalty.

    ``initial`` seeds the first individuals of generation 0 (e.g. a warm
    start). With ``local_refine`` the best individual is polished by bounded
    Nelder-Mead after the last generation; ``history`` only covers the
    generations. ``generation_refine > 0`` additionally spends that many
    evaluations polishing the best individual of every generation and writes
    the result back into the population (a Lamarckian step); the GA operators
    themselves are unchanged.
    """
    lo, hi = _as_box(box)
    dim = lo.size
    discrete = {int(k): np.asarray(sorted(v), dtype=float) for k, v in (discrete_dims or {}).items()}
    cont = np.array([k not in discrete for k in range(dim)])
    pop_n, elite_n = opts.population, opts.elite
    evaluate = _Evaluator(objective, constraints, vectorized, opts.workers)

    def random_individual(rng):
        x = lo + rng.random(dim) * (hi - lo)
        for k, vals in discrete.items():
            x[k] = vals[rng.integers(len(vals))]
        return x

    X = np.empty((pop_n, dim))
    for i in range(pop_n):
        X[i] = random_individual(_stream(opts.seed, 0, i))
    for i, x0 in enumerate(list(initial)[:pop_n]):
        X[i] = np.clip(np.asarray(x0, dtype=float), lo, hi)
    F, V = evaluate(X)
    order = np.lexsort((np.arange(pop_n), F))
    X, F, V = X[order], F[order], V[order]
    can_refine = np.any(cont & (hi > lo))

    def lamarck():
        if generation_refine > 0 and can_refine:
            X[0], F[0], V[0] = _refine(X[0].copy(), float(F[0]), float(V[0]), evaluate, lo, hi, cont, generation_refine)

    lamarck()
    history = [float(F[0])]

    for gen in range(1, opts.max_iterations + 1):
        kids = np.empty((pop_n - elite_n, dim))
        for j in range(pop_n - elite_n):
            rng = _stream(opts.seed, gen, j)
            parents = []
            for _ in range(2):
                cand = rng.integers(0, pop_n, TOURNAMENT_SIZE)
                parents.append(X[cand.min()])  # population is sorted, lowest index wins
            p1, p2 = parents
            a, b = np.minimum(p1, p2), np.maximum(p1, p2)
            span = b - a
            child = a - BLEND_ALPHA * span + rng.random(dim) * (1 + 2 * BLEND_ALPHA) * span
            pick = rng.random(dim) < 0.5
            child = np.where(cont, child, np.where(pick, p1, p2))
            mutate = rng.random(dim) < MUTATION_RATE
            fresh = random_individual(rng)
            child = np.where(mutate, fresh, child)
            kids[j] = np.clip(child, lo, hi)
        Fk, Vk = evaluate(kids) if len(kids) else (np.empty(0), np.empty(0))
        X = np.vstack([X[:elite_n], kids])
        F = np.concatenate([F[:elite_n], Fk])
        V = np.concatenate([V[:elite_n], Vk])
        order = np.lexsort((np.arange(pop_n), F))
        X, F, V = X[order], F[order], V[order]
        lamarck()
        history.append(float(F[0]))

    best, best_f, best_v = X[0].copy(), float(F[0]), float(V[0])
    if local_refine and can_refine:
        best, best_f, best_v = _refine(best, best_f, best_v, evaluate, lo, hi, cont, refine_evaluations)

    return SearchResult(
        best_point=best,
        best_value=best_f,
        history=history,
        feasible=best_v <= opts.feasibility_tol,
        evaluations=evaluate.count,
        max_violation=best_v,
    )


def _refine(x0, f0, v0, evaluate, lo, hi, cont, maxfev):
    idx = np.flatnonzero(cont & (hi > lo))

    def full(y):
        x = x0.copy()
        x[idx] = np.clip(y, lo[idx], hi[idx])
        return x

    res = minimize(
        lambda y: evaluate(full(y)[None])[0][0],
        x0[idx],
        method="Nelder-Mead",
        bounds=list(zip(lo[idx], hi[idx])),
        options={"maxfev": maxfev, "xatol": 1e-7, "fatol": 1e-10},
    )
    x = full(res.x)
    f, v = evaluate(x[None])
    if f[0] < f0:
        return x, float(f[0]), float(v[0])
    return x0, f0, v0


def constrained_minimize(
    objective: Callable,
    equality_residuals: Callable | None,
    box,
    x0,
    opts: OptimizerOptions = OptimizerOptions(),
    *,
    inequality: Callable | None = None,
    mu0: float = 10.0,
    mu_growth: float = 10.0,
    mu_max: float = 1e12,
    maxfev: int = 4000,
) -> SearchResult:
    """Penalised direct search for ``min f(x)`` s.t. ``h(x) = 0``, ``g(x) <= 0``, ``x`` in box.

    Each outer loop minimises ``f + mu (|h|^2 + |max(g, 0)|^2)`` with bounded
    Nelder-Mead, warm-started from the previous loop, then multiplies ``mu`` by
    ``mu_growth``. Stops once the worst violation is within
    ``opts.feasibility_tol`` or ``mu`` passes ``mu_max``.
    """
    lo, hi = _as_box(box)
    x = np.clip(np.asarray(x0, dtype=float), lo, hi)
    free = hi > lo
    nfev = 0

    def violations(x):
        parts = []
        if equality_residuals is not None:
            parts.append(np.abs(np.atleast_1d(np.asarray(equality_residuals(x), dtype=float))))
        if inequality is not None:
            parts.append(np.maximum(np.atleast_1d(np.asarray(inequality(x), dtype=float)), 0.0))
        return np.concatenate(parts) if parts else np.zeros(0)

    def worst(x):
        v = violations(x)
        return float(v.max()) if v.size else 0.0

    history = [float(objective(x))]
    mu = mu0
    while True:
        if np.any(free):

            def pen(y, mu=mu):
                z = x.copy()
                z[free] = np.clip(y, lo[free], hi[free])
                v = violations(z)
                return float(objective(z)) + mu * float(v @ v)

            res = minimize(
                pen,
                x[free],
                method="Nelder-Mead",
                bounds=list(zip(lo[free], hi[free])),
                options={"maxfev": maxfev, "xatol": 1e-10, "fatol": 1e-14, "adaptive": free.sum() > 4},
            )
            nfev += res.nfev
            x = x.copy()
            x[free] = np.clip(res.x, lo[free], hi[free])
        history.append(float(objective(x)))
        if worst(x) <= opts.feasibility_tol or mu >= mu_max or not np.any(free):
            break
        mu *= mu_growth

    v = worst(x)
    return SearchResult(
        best_point=x,
        best_value=float(objective(x)),
        history=history,
        feasible=v <= opts.feasibility_tol,
        evaluations=nfev,
        max_violation=v,
    )
