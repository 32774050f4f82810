"""Brute-force reference oracles: exhaustive grids, closed-form medians,
long deterministic minimization runs, sublevel-set projections, ray-based
sublevel-radius estimates, and subset enumeration for set functions.

These are desk-scale tools for validating solver output on miniatures;
every one reports how trustworthy its answer is (certified_tol) and refuses
work beyond an explicit budget instead of silently degrading.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import Array, ProblemInstance, pnorm
from .problems import SetFunction, enumerate_table

__all__ = [
    "OracleReport",
    "BudgetError",
    "InconsistentOracleError",
    "grid_min",
    "weighted_median",
    "long_run_min",
    "sublevel_project",
    "SublevelGrid",
    "sample_level_points",
    "estimate_B_eps",
    "submodular_min_enumerate",
]


class BudgetError(RuntimeError):
    """The request exceeds the oracle's evaluation budget.  ``required``
    carries the estimated cost so the caller can raise the budget knowingly."""

    def __init__(self, message: str, required: int):
        super().__init__(message)
        self.required = required


class InconsistentOracleError(RuntimeError):
    """An oracle report contradicts direct evaluation (stale or wrong)."""


@dataclass(frozen=True)
class OracleReport:
    """A reference minimum: value, witness point, and provenance.

    certified_tol bounds |fstar - true minimum| when ``certified`` is True;
    for long runs it is only the observed terminal improvement and the flag
    is False.  ``seed`` records any sampling randomness (None = exhaustive
    or closed form).
    """

    fstar: float
    argmin: Array
    method: str  # "grid" | "weighted_median" | "subset_enum" | "long_run"
    certified_tol: float
    certified: bool
    params: dict = field(default_factory=dict)
    seed: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "fstar": self.fstar,
            "argmin": np.asarray(self.argmin, dtype=float).tolist(),
            "method": self.method,
            "certified_tol": self.certified_tol,
            "certified": self.certified,
            "params": self.params,
            "seed": self.seed,
        }


def grid_min(
    problem: ProblemInstance,
    box_lo,
    box_hi,
    points_per_dim: int,
    budget: int = 1_000_000,
) -> OracleReport:
    """Exhaustive grid minimization over an axis-aligned box.

    The caller asserts the box contains a minimizer.  Fine certified grids
    are practical for dim <= 3; beyond that only coarse grids fit the
    budget, and the call refuses (BudgetError, with the required count)
    rather than run an over-budget sweep.  certified_tol is the worst-case
    value gap G * ||h||_2 / 2 for grid spacing h: no point of the box is
    farther than half a cell diagonal from a grid point.
    """
    d = problem.dim
    if points_per_dim < 2:
        raise ValueError(f"grid_min: points_per_dim must be >= 2, got {points_per_dim}")
    lo = np.broadcast_to(np.asarray(box_lo, dtype=float), (d,)).copy()
    hi = np.broadcast_to(np.asarray(box_hi, dtype=float), (d,)).copy()
    if np.any(lo >= hi):
        raise ValueError("grid_min: box_lo must be strictly below box_hi")
    total = points_per_dim**d
    if total > budget:
        raise BudgetError(
            f"grid_min: {points_per_dim}**{d} = {total} evaluations exceed the "
            f"budget of {budget}; raise the budget or coarsen the grid",
            required=total,
        )
    axes = [np.linspace(lo[i], hi[i], points_per_dim) for i in range(d)]
    h = (hi - lo) / (points_per_dim - 1)
    objective = problem.objective
    best_f = math.inf
    best_w: Optional[Array] = None
    w = np.empty(d)
    for flat in range(total):
        rem = flat
        for i in range(d - 1, -1, -1):
            rem, k = divmod(rem, points_per_dim)
            w[i] = axes[i][k]
        val = float(objective(w))
        if val < best_f:
            best_f = val
            best_w = w.copy()
    tol = 0.5 * problem.lipschitz_bound * float(np.linalg.norm(h))
    return OracleReport(
        fstar=best_f,
        argmin=best_w,
        method="grid",
        certified_tol=tol,
        certified=True,
        params={
            "points_per_dim": points_per_dim,
            "lo": lo.tolist(),
            "hi": hi.tolist(),
        },
    )


def weighted_median(values, weights=None) -> float:
    """Lowest minimizer of t -> sum_i weights_i * |t - values_i|.

    Sorts values and returns the first one whose cumulative weight reaches
    half the total, which is the smallest minimizer when the optimum is a
    flat interval (even total weight splits).
    """
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("weighted_median: empty input")
    if weights is None:
        w = np.ones_like(v)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != v.shape:
            raise ValueError("weighted_median: weights shape mismatch")
        if np.any(w <= 0):
            raise ValueError("weighted_median: weights must be > 0")
    order = np.argsort(v, kind="stable")
    cw = np.cumsum(w[order])
    half = cw[-1] / 2.0
    idx = int(np.searchsorted(cw, half))
    return float(v[order][idx])


def long_run_min(
    problem: ProblemInstance,
    w0: Array,
    total_iters: int = 200_000,
    stages: int = 30,
) -> OracleReport:
    """Non-certified reference minimum from a long deterministic run.

    An independent projected-subgradient loop (its own code path, not the
    solver module): fixed-step segments whose step starts at a gap-based
    estimate and halves per segment, keeping the best of all iterates and
    segment averages.  certified_tol reports only the final segment's
    observed improvement; the result is an upper bound on the minimum.
    """
    if total_iters < stages:
        raise ValueError("long_run_min: total_iters must be >= stages")
    objective, subgrad, project = problem.objective, problem.subgrad, problem.project
    w = problem.feasible(np.asarray(w0, dtype=float))
    G = problem.lipschitz_bound
    gap0 = max(problem.default_eps0(w), 1e-12)
    eta = gap0 / (2.0 * G * G)
    best_f = float(objective(w))
    best_w = w.copy()
    T = total_iters // stages
    prev_stage_best = math.inf
    last_improvement = math.inf
    for _ in range(stages):
        acc = np.zeros_like(w)
        for _t in range(T):
            acc += w
            val = float(objective(w))
            if val < best_f:
                best_f = val
                best_w = w.copy()
            w = w - eta * subgrad(w)
            if project is not None:
                w = project(w)
        avg = acc / T
        val = float(objective(avg))
        if val < best_f:
            best_f = val
            best_w = avg.copy()
        w = avg
        last_improvement = prev_stage_best - best_f if math.isfinite(prev_stage_best) else math.inf
        prev_stage_best = best_f
        eta /= 2.0
    return OracleReport(
        fstar=best_f,
        argmin=best_w,
        method="long_run",
        certified_tol=max(float(last_improvement), 0.0),
        certified=False,
        params={"total_iters": total_iters, "stages": stages},
    )


def _check_report(problem: ProblemInstance, oracle: OracleReport) -> float:
    """Sanity-check a report against direct evaluation; returns f(argmin)."""
    f_arg = float(problem.objective(np.asarray(oracle.argmin, dtype=float)))
    slack = max(oracle.certified_tol, 1e-9 * max(1.0, abs(oracle.fstar)))
    if f_arg > oracle.fstar + slack or f_arg < oracle.fstar - slack:
        raise InconsistentOracleError(
            f"oracle fstar = {oracle.fstar} but objective(argmin) = {f_arg} "
            f"(allowed slack {slack})"
        )
    return f_arg


class SublevelGrid:
    """Precomputed grid projection onto a sublevel set {f <= fstar + eps}.

    Builds the level subset once; project() then answers nearest-sublevel-
    point queries with a vectorized distance scan.  Intended for the 1- and
    2-dimensional miniatures.
    """

    def __init__(
        self,
        problem: ProblemInstance,
        oracle: OracleReport,
        eps: float,
        box_lo,
        box_hi,
        points_per_dim: int = 201,
        budget: int = 1 << 22,
    ):
        if not eps > 0:
            raise ValueError(f"SublevelGrid: eps must be > 0, got {eps}")
        d = problem.dim
        lo = np.broadcast_to(np.asarray(box_lo, dtype=float), (d,))
        hi = np.broadcast_to(np.asarray(box_hi, dtype=float), (d,))
        total = points_per_dim**d
        if total > budget:
            raise BudgetError(
                f"SublevelGrid: {total} grid evaluations exceed budget {budget}",
                required=total,
            )
        _check_report(problem, oracle)
        self.level = oracle.fstar + eps
        axes = [np.linspace(lo[i], hi[i], points_per_dim) for i in range(d)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        if problem.project is not None:
            keep = [
                k
                for k in range(pts.shape[0])
                if np.max(np.abs(problem.project(pts[k]) - pts[k])) <= 1e-12
            ]
            pts = pts[keep]
        vals = np.array([problem.objective(pts[k]) for k in range(pts.shape[0])])
        inside = vals <= self.level
        if not np.any(inside):
            raise InconsistentOracleError(
                "SublevelGrid: no grid point reaches the level; the box misses "
                "the sublevel set or the grid is too coarse"
            )
        self.points = pts[inside]
        self.cell_diag = float(np.linalg.norm((hi - lo) / (points_per_dim - 1)))

    def project(self, w: Array) -> Array:
        w = np.asarray(w, dtype=float)
        k = int(np.argmin(np.sum((self.points - w) ** 2, axis=1)))
        return self.points[k].copy()


def sublevel_project(
    problem: ProblemInstance,
    w: Array,
    eps: float,
    oracle: OracleReport,
    method: str = "segment",
    points_per_dim: int = 201,
    xtol: float = 1e-13,
) -> Array:
    """Approximate nearest point of {f <= oracle.fstar + eps} to w.

    Points already inside the sublevel set return unchanged.  "segment"
    bisects f along [w, oracle.argmin] for the boundary crossing — exact
    for one-dimensional problems, an inside approximation otherwise.
    "grid" scans a box cover (dim <= 3 scale).  Raises
    InconsistentOracleError when the sublevel set is empty under the
    oracle's fstar (eps below the oracle's own suboptimality).
    """
    if not eps > 0:
        raise ValueError(f"sublevel_project: eps must be > 0, got {eps}")
    w = np.asarray(w, dtype=float)
    level = oracle.fstar + eps
    f_arg = _check_report(problem, oracle)
    f_w = float(problem.objective(w))
    if f_w <= level:
        return w.copy()
    if f_arg > level:
        raise InconsistentOracleError(
            f"sublevel_project: oracle argmin has f = {f_arg} above the level "
            f"{level}; the requested sublevel set is empty under this oracle"
        )
    if method == "segment":
        target = np.asarray(oracle.argmin, dtype=float)
        lo_s, hi_s = 0.0, 1.0  # f(w + s*(target-w)): > level at 0, <= level at 1
        for _ in range(200):
            mid = 0.5 * (lo_s + hi_s)
            if float(problem.objective(w + mid * (target - w))) <= level:
                hi_s = mid
            else:
                lo_s = mid
            if hi_s - lo_s <= xtol:
                break
        return w + hi_s * (target - w)
    if method == "grid":
        radius = float(np.linalg.norm(w - np.asarray(oracle.argmin, dtype=float)))
        grid = SublevelGrid(
            problem, oracle, eps, w - radius, w + radius, points_per_dim=points_per_dim
        )
        return grid.project(w)
    raise ValueError(f"sublevel_project: unknown method {method!r}")


def _ray_directions(d: int, ray_count: int, seed: int) -> Array:
    """Axis directions first, then seeded random unit vectors."""
    dirs = []
    for i in range(d):
        e = np.zeros(d)
        e[i] = 1.0
        dirs.append(e.copy())
        e[i] = -1.0
        dirs.append(e)
    rng = np.random.default_rng(seed)
    while len(dirs) < max(ray_count, 2 * d):
        v = rng.standard_normal(d)
        n = np.linalg.norm(v)
        if n > 1e-12:
            dirs.append(v / n)
    return np.array(dirs)


def sample_level_points(
    problem: ProblemInstance,
    eps: float,
    oracle: OracleReport,
    ray_count: int = 16,
    seed: int = 0,
    xtol: float = 1e-13,
    max_expand: int = 80,
) -> list[Array]:
    """Boundary points of {f <= fstar + eps} found by ray bisection.

    Casts rays from the oracle argmin (axis directions first, then seeded
    random ones), expands each until the objective crosses the level, and
    bisects the crossing.  Rays that never cross within max_expand doublings
    (unbounded sublevel directions) are skipped with a warning.  Returned
    points lie inside the sublevel set (inner end of the final bracket).
    """
    if not eps > 0:
        raise ValueError(f"sample_level_points: eps must be > 0, got {eps}")
    f_arg = _check_report(problem, oracle)
    level = oracle.fstar + eps
    if f_arg > level:
        raise InconsistentOracleError(
            "sample_level_points: oracle argmin sits above the requested level"
        )
    center = np.asarray(oracle.argmin, dtype=float)
    G = problem.lipschitz_bound

    def point_at(t: float, direction: Array) -> Array:
        return problem.feasible(center + t * direction)

    points: list[Array] = []
    for direction in _ray_directions(problem.dim, ray_count, seed):
        t_hi = max(eps / G, 1e-9)
        t_lo = 0.0
        crossed = False
        for _ in range(max_expand):
            if float(problem.objective(point_at(t_hi, direction))) > level:
                crossed = True
                break
            t_lo = t_hi
            t_hi *= 2.0
        if not crossed:
            warnings.warn(
                "sample_level_points: ray never crossed the level "
                "(unbounded sublevel direction); skipped",
                stacklevel=2,
            )
            continue
        while t_hi - t_lo > xtol * max(1.0, t_hi):
            mid = 0.5 * (t_lo + t_hi)
            if float(problem.objective(point_at(mid, direction))) > level:
                t_hi = mid
            else:
                t_lo = mid
        if t_lo > 0.0:
            points.append(point_at(t_lo, direction))
    return points


def estimate_B_eps(
    problem: ProblemInstance,
    eps: float,
    oracle: OracleReport,
    ray_count: int = 16,
    seed: int = 0,
    norm_p: float = 2.0,
) -> float:
    """Lower estimate of the sublevel-set radius: the largest distance from
    the oracle argmin to a level point found by ray bisection.

    A sampling lower bound — rays can miss the farthest boundary point.  The
    distance is measured to the single oracle argmin, so on problems with a
    spread-out optimal set it measures from that witness, not the set.
    """
    pts = sample_level_points(problem, eps, oracle, ray_count=ray_count, seed=seed)
    if not pts:
        raise RuntimeError(
            "estimate_B_eps: no ray crossed the level; the sublevel set looks "
            "unbounded at this eps"
        )
    center = np.asarray(oracle.argmin, dtype=float)
    return max(pnorm(p - center, norm_p) for p in pts)


def submodular_min_enumerate(setfn: SetFunction, budget: int = 1 << 20) -> tuple[float, int]:
    """Exact set-function minimum by enumerating all subsets (<= budget
    evaluations; 2**20 covers ground sets of up to 20 elements).  Returns
    (minimum value, lowest minimizing bitmask)."""
    if (1 << setfn.ground_size) > budget:
        raise BudgetError(
            f"submodular_min_enumerate: 2**{setfn.ground_size} evaluations "
            f"exceed budget {budget}",
            required=1 << setfn.ground_size,
        )
    table = enumerate_table(setfn, budget=budget)
    k = int(np.argmin(table))
    return float(table[k]), k
