"""Problem zoo: non-smooth convex instances with declared subgradient-norm
bounds, minimal-norm subgradient selections at kinks, and (where the class
has one) a declared error-bound exponent.

All builders return :class:`rsgkit.core.ProblemInstance`.  Data matrices are
scipy CSR; objective/subgrad closures take dense vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .core import (
    Array,
    ProblemInstance,
    project_box,
    project_l1_ball,
    project_l2_ball,
)

__all__ = [
    "Dataset",
    "GFlassoGraph",
    "SetFunction",
    "robust_regression",
    "piecewise_linear_erm",
    "gflasso_svm",
    "lovasz_problem",
    "lipschitz_bound_for",
    "graph_from_correlation",
    "cut_function",
    "enumerate_table",
    "miniature_zoo",
]

_LOSSES = ("hinge", "absolute", "eps_insensitive")
_REGS = ("none", "l1", "linf", "l1_ball", "linf_ball")


@dataclass(frozen=True)
class Dataset:
    """Feature matrix (n x d, CSR), targets, and an optional planted weight
    vector from the synthetic generators (None for file-backed data).

    n = 0 is a legal container state (an empty file parses); every problem
    builder rejects it.
    """

    X: sp.csr_matrix
    y: np.ndarray
    planted: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if self.X.shape[0] != self.y.shape[0]:
            raise ValueError(
                f"Dataset: X has {self.X.shape[0]} rows but y has {self.y.shape[0]}"
            )

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


def _require_rows(data: Dataset, who: str) -> None:
    if data.n < 1:
        raise ValueError(f"{who}: dataset has no rows")
    if data.d < 1:
        raise ValueError(f"{who}: dataset has no features")


def _require_binary_labels(data: Dataset, who: str) -> None:
    labels = np.unique(data.y)
    if not np.all(np.isin(labels, (-1.0, 1.0))):
        raise ValueError(f"{who}: labels must be in {{-1, +1}}, got {labels[:8]}")


def _row_norms(X: sp.csr_matrix, q: float) -> Array:
    """q-norm of every row of a sparse matrix (q >= 1 or inf)."""
    A = abs(X.tocsr(copy=False))
    if math.isinf(q):
        out = np.zeros(A.shape[0])
        maxes = A.max(axis=1).toarray().ravel()
        out[: maxes.size] = maxes
        return out
    if q == 1.0:
        return np.asarray(A.sum(axis=1)).ravel()
    if q == 2.0:
        return np.sqrt(np.asarray(A.power(2).sum(axis=1)).ravel())
    return np.asarray(A.power(q).sum(axis=1)).ravel() ** (1.0 / q)


@dataclass(frozen=True)
class GFlassoGraph:
    """Weighted feature graph: edges (i, j, s) with 0-based i < j and s > 0.

    The fused-difference matrix F has one row per edge with entries +s at i
    and -s at j, so the penalty sum|F w| charges s * |w_i - w_j| per edge.
    """

    dim: int
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError(f"GFlassoGraph: dim must be >= 1, got {self.dim}")
        for k, (i, j, s) in enumerate(self.edges):
            if not (0 <= i < j < self.dim):
                raise ValueError(
                    f"GFlassoGraph: edge {k} has endpoints ({i}, {j}) outside "
                    f"0 <= i < j < {self.dim}"
                )
            if not s > 0.0:
                raise ValueError(f"GFlassoGraph: edge {k} has weight {s}, need > 0")
        object.__setattr__(self, "_F", self._build_F())

    def _build_F(self) -> sp.csr_matrix:
        m = len(self.edges)
        rows = np.repeat(np.arange(m), 2)
        cols = np.empty(2 * m, dtype=int)
        vals = np.empty(2 * m)
        for k, (i, j, s) in enumerate(self.edges):
            cols[2 * k], cols[2 * k + 1] = i, j
            vals[2 * k], vals[2 * k + 1] = s, -s
        return sp.csr_matrix((vals, (rows, cols)), shape=(m, self.dim))

    @property
    def F(self) -> sp.csr_matrix:
        return self._F

    @property
    def total_weight(self) -> float:
        return float(sum(s for _, _, s in self.edges))


@dataclass(frozen=True)
class SetFunction:
    """A set function on {0, ..., ground_size-1} evaluated on bitmasks.

    evaluate(0) must be 0.  bulk_evaluate, when given, maps an integer mask
    array to the corresponding values and lets the enumeration paths skip
    the per-mask Python loop.
    """

    ground_size: int
    evaluate: Callable[[int], float]
    bulk_evaluate: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self) -> None:
        if not (1 <= self.ground_size <= 24):
            raise ValueError(
                f"SetFunction: ground_size must lie in [1, 24], got {self.ground_size}"
            )
        if self.evaluate(0) != 0.0:
            raise ValueError("SetFunction: evaluate(empty set) must be 0")


def enumerate_table(setfn: SetFunction, budget: int = 1 << 20) -> np.ndarray:
    """Values of setfn on all 2**d masks (index = mask).  Refuses above budget."""
    d = setfn.ground_size
    size = 1 << d
    if size > budget:
        raise ValueError(
            f"enumerate_table: 2**{d} = {size} evaluations exceed the budget {budget}"
        )
    masks = np.arange(size, dtype=np.int64)
    if setfn.bulk_evaluate is not None:
        table = np.asarray(setfn.bulk_evaluate(masks), dtype=float)
        if table.shape != (size,):
            raise ValueError("enumerate_table: bulk_evaluate returned a wrong shape")
        return table
    return np.array([setfn.evaluate(int(m)) for m in masks], dtype=float)


def cut_function(dim: int, edges: list[tuple[int, int, float]] | tuple) -> SetFunction:
    """Weighted graph cut as a set function: F(A) = sum of s over edges with
    exactly one endpoint in A.  Nonnegative weights make it submodular."""
    checked = GFlassoGraph(dim, tuple((int(i), int(j), float(s)) for i, j, s in edges))

    def evaluate(mask: int) -> float:
        total = 0.0
        for i, j, s in checked.edges:
            if ((mask >> i) & 1) != ((mask >> j) & 1):
                total += s
        return total

    def bulk_evaluate(masks: np.ndarray) -> np.ndarray:
        out = np.zeros(masks.shape, dtype=float)
        for i, j, s in checked.edges:
            out += s * (((masks >> i) & 1) != ((masks >> j) & 1))
        return out

    return SetFunction(dim, evaluate, bulk_evaluate)


def _check_submodular(setfn: SetFunction) -> None:
    """Exhaustive diminishing-returns check via the full value table."""
    d = setfn.ground_size
    table = enumerate_table(setfn)
    masks = np.arange(1 << d, dtype=np.int64)
    for i in range(d):
        bi = 1 << i
        for j in range(i + 1, d):
            bj = 1 << j
            base = masks[(masks & (bi | bj)) == 0]
            lhs = table[base | bi] + table[base | bj]
            rhs = table[base | bi | bj] + table[base]
            if np.any(lhs < rhs - 1e-12):
                k = int(base[np.argmax(rhs - lhs)])
                raise ValueError(
                    f"lovasz_problem: set function is not submodular "
                    f"(violated at mask {k} with elements {i}, {j})"
                )


def robust_regression(
    data: Dataset,
    p_loss: float,
    region_radius: Optional[float] = None,
    constrain_to_region: bool = False,
    norm_q: float = 2.0,
) -> ProblemInstance:
    """Mean p-th-power absolute residual regression, 1 < p_loss < 2.

    f(w) = mean_i |x_i . w - y_i|**p.  Differentiable (p > 1); gradient
    (p/n) X^T (|r|**(p-1) sign r).  The declared subgradient bound holds on
    the ball ||w||_2 <= region_radius (default 10 * max(1, rms(y))); pass
    constrain_to_region=True to install that ball as the feasible set.
    Declared error-bound exponent: 1/2.
    """
    if not (1.0 < p_loss < 2.0):
        raise ValueError(f"robust_regression: p_loss must lie in (1, 2), got {p_loss}")
    _require_rows(data, "robust_regression")
    X, y, n = data.X, data.y, data.n
    if region_radius is None:
        region_radius = 10.0 * max(1.0, float(np.linalg.norm(y)) / math.sqrt(n))
    if not region_radius > 0.0:
        raise ValueError(f"robust_regression: region_radius must be > 0, got {region_radius}")
    rn2 = _row_norms(X, 2.0)
    rnq = rn2 if norm_q == 2.0 else _row_norms(X, norm_q)
    r_bar = rn2 * region_radius + np.abs(y)
    G = float(p_loss / n * np.sum(r_bar ** (p_loss - 1.0) * rnq))

    def objective(w: Array) -> float:
        r = X @ w - y
        return float(np.mean(np.abs(r) ** p_loss))

    def subgrad(w: Array) -> Array:
        r = X @ w - y
        return (p_loss / n) * (X.T @ (np.abs(r) ** (p_loss - 1.0) * np.sign(r)))

    radius = float(region_radius)
    project = (lambda w: project_l2_ball(w, radius)) if constrain_to_region else None
    return ProblemInstance(
        dim=data.d,
        objective=objective,
        subgrad=subgrad,
        lipschitz_bound=G,
        project=project,
        lipschitz_norm_q=norm_q,
        eb_theta=0.5,
        name=f"robust_regression_p{p_loss:g}",
    )


def lipschitz_bound_for(
    instance_kind: str,
    data: Dataset,
    reg: str = "none",
    lam: float = 0.0,
    norm_q: float = 2.0,
) -> float:
    """Documented subgradient q-norm bound for the piecewise-linear losses.

    The margin/residual losses (hinge, absolute, eps_insensitive) are
    1-Lipschitz in the per-row score, so the loss part is bounded by the
    largest row q-norm.  An l1 penalty adds lam * d**(1/q), an l-infinity
    penalty adds lam; ball constraints and "none" add nothing.
    """
    if instance_kind not in _LOSSES:
        raise ValueError(
            f"lipschitz_bound_for: unknown instance_kind {instance_kind!r}, "
            f"expected one of {_LOSSES}"
        )
    if reg not in _REGS:
        raise ValueError(f"lipschitz_bound_for: unknown reg {reg!r}, expected one of {_REGS}")
    _require_rows(data, "lipschitz_bound_for")
    loss_part = float(_row_norms(data.X, norm_q).max())
    if reg == "l1":
        reg_part = lam * (data.d ** (1.0 / norm_q) if not math.isinf(norm_q) else 1.0)
    elif reg == "linf":
        reg_part = lam
    else:
        reg_part = 0.0
    return loss_part + reg_part


def piecewise_linear_erm(
    data: Dataset,
    loss: str = "hinge",
    reg: str = "none",
    lam: float = 0.0,
    radius: float = 1.0,
    eps_ins: float = 0.1,
    norm_q: float = 2.0,
) -> ProblemInstance:
    """Piecewise-linear empirical risk: hinge / absolute / eps-insensitive
    loss, optionally an l1 or l-infinity penalty or ball constraint.

    Subgradients take the minimal-norm element at every kink: 0 at an exact
    hinge margin, sign(r) with sign(0) = 0 for the absolute and
    eps-insensitive losses (the tube boundary counts as inactive), 0 at
    zero weights for the l1 penalty.  The l-infinity penalty puts its whole
    weight on the single largest-magnitude coordinate (lowest index wins
    ties), which is the unique subgradient whenever the max is unique.
    Declared error-bound exponent: 1 (polyhedral).
    """
    if loss not in _LOSSES:
        raise ValueError(f"piecewise_linear_erm: unknown loss {loss!r}")
    if reg not in _REGS:
        raise ValueError(f"piecewise_linear_erm: unknown reg {reg!r}")
    if lam < 0.0:
        raise ValueError(f"piecewise_linear_erm: lam must be >= 0, got {lam}")
    if reg in ("l1_ball", "linf_ball") and not radius > 0.0:
        raise ValueError(f"piecewise_linear_erm: ball radius must be > 0, got {radius}")
    if loss == "eps_insensitive" and eps_ins < 0.0:
        raise ValueError(f"piecewise_linear_erm: eps_ins must be >= 0, got {eps_ins}")
    _require_rows(data, "piecewise_linear_erm")
    if loss == "hinge":
        _require_binary_labels(data, "piecewise_linear_erm")
    X, y, n, d = data.X, data.y, data.n, data.d

    if loss == "hinge":

        def loss_val(w: Array) -> float:
            m = y * (X @ w)
            return float(np.mean(np.maximum(0.0, 1.0 - m)))

        def loss_sub(w: Array) -> Array:
            m = y * (X @ w)
            active = (m < 1.0).astype(float)
            return -(X.T @ (y * active)) / n

    elif loss == "absolute":

        def loss_val(w: Array) -> float:
            return float(np.mean(np.abs(X @ w - y)))

        def loss_sub(w: Array) -> Array:
            return (X.T @ np.sign(X @ w - y)) / n

    else:  # eps_insensitive

        def loss_val(w: Array) -> float:
            e = np.abs(X @ w - y) - eps_ins
            return float(np.mean(np.maximum(0.0, e)))

        def loss_sub(w: Array) -> Array:
            r = X @ w - y
            active = (np.abs(r) - eps_ins > 0.0).astype(float)
            return (X.T @ (np.sign(r) * active)) / n

    project: Optional[Callable[[Array], Array]] = None
    if reg == "l1":
        reg_val = lambda w: lam * float(np.sum(np.abs(w)))  # noqa: E731
        reg_sub = lambda w: lam * np.sign(w)  # noqa: E731
    elif reg == "linf":

        def reg_val(w: Array) -> float:
            return lam * float(np.max(np.abs(w)))

        def reg_sub(w: Array) -> Array:
            s = np.zeros_like(w)
            j = int(np.argmax(np.abs(w)))
            if w[j] != 0.0:
                s[j] = lam * np.sign(w[j])
            return s

    else:
        reg_val = lambda w: 0.0  # noqa: E731
        reg_sub = lambda w: np.zeros_like(w)  # noqa: E731
        if reg == "l1_ball":
            project = lambda w: project_l1_ball(w, radius)  # noqa: E731
        elif reg == "linf_ball":
            project = lambda w: project_box(w, -radius, radius)  # noqa: E731

    G = lipschitz_bound_for(loss, data, reg, lam, norm_q)
    return ProblemInstance(
        dim=d,
        objective=lambda w: loss_val(w) + reg_val(w),
        subgrad=lambda w: loss_sub(w) + reg_sub(w),
        lipschitz_bound=G,
        project=project,
        lipschitz_norm_q=norm_q,
        eb_theta=1.0,
        name=f"{loss}_{reg}",
    )


def gflasso_svm(
    data: Dataset, graph: GFlassoGraph, lam: float, norm_q: float = 2.0
) -> ProblemInstance:
    """Hinge-loss classifier with a graph-fused l1 penalty.

    f(w) = mean_i max(0, 1 - y_i x_i . w) + lam * sum over edges of
    s * |w_i - w_j|.  At w = 0 every margin is 0 and the penalty vanishes,
    so f(0) = 1.  Unconstrained; declared error-bound exponent 1.
    """
    if lam < 0.0:
        raise ValueError(f"gflasso_svm: lam must be >= 0, got {lam}")
    _require_rows(data, "gflasso_svm")
    _require_binary_labels(data, "gflasso_svm")
    if graph.dim != data.d:
        raise ValueError(
            f"gflasso_svm: graph is over {graph.dim} features, data has {data.d}"
        )
    X, y, n = data.X, data.y, data.n
    F = graph.F
    loss_G = float(_row_norms(X, norm_q).max())
    G = loss_G + lam * (2.0 ** (1.0 / norm_q)) * graph.total_weight

    def objective(w: Array) -> float:
        m = y * (X @ w)
        hinge = float(np.mean(np.maximum(0.0, 1.0 - m)))
        return hinge + lam * float(np.sum(np.abs(F @ w)))

    def subgrad(w: Array) -> Array:
        m = y * (X @ w)
        active = (m < 1.0).astype(float)
        g = -(X.T @ (y * active)) / n
        return g + lam * (F.T @ np.sign(F @ w))

    return ProblemInstance(
        dim=data.d,
        objective=objective,
        subgrad=subgrad,
        lipschitz_bound=G,
        project=None,
        lipschitz_norm_q=norm_q,
        eb_theta=1.0,
        name=f"gflasso_lam{lam:g}",
    )


def lovasz_problem(
    setfn: SetFunction,
    norm_q: float = 2.0,
    fstar_lower_bound: Optional[float] = None,
) -> ProblemInstance:
    """Convex extension of a submodular set function over the unit box.

    The value at w sorts coordinates descending (ties broken by coordinate
    index), walks the prefix chain of that order, and weights the chain
    increments by w; the increment vector is the returned subgradient.  Its
    box minimum equals the set-function minimum.  Submodularity is verified
    exhaustively for ground sets of up to 12 elements.

    The subgradient bound uses the marginal-range envelope: chain
    increments for element i lie between F(V) - F(V \\ {i}) and F({i}).
    """
    d = setfn.ground_size
    if d <= 12:
        _check_submodular(setfn)
    evaluate = setfn.evaluate
    full = (1 << d) - 1
    f_full = evaluate(full)
    M = np.array(
        [
            max(abs(evaluate(1 << i)), abs(f_full - evaluate(full ^ (1 << i))))
            for i in range(d)
        ]
    )
    if not M.max() > 0:
        raise ValueError("lovasz_problem: set function is identically zero")
    G = float(np.sum(M**2) ** 0.5) if norm_q == 2.0 else float(np.sum(M**norm_q) ** (1 / norm_q))
    if fstar_lower_bound is None:
        fstar_lower_bound = min(0.0, -float(np.sum(M)))

    def _chain(w: Array) -> Array:
        order = np.argsort(-w, kind="stable")
        s = np.empty(d)
        mask = 0
        prev = 0.0
        for idx in order:
            mask |= 1 << int(idx)
            cur = evaluate(mask)
            s[idx] = cur - prev
            prev = cur
        return s

    def objective(w: Array) -> float:
        return float(np.dot(w, _chain(w)))

    def subgrad(w: Array) -> Array:
        return _chain(w)

    return ProblemInstance(
        dim=d,
        objective=objective,
        subgrad=subgrad,
        lipschitz_bound=G,
        project=lambda w: project_box(w, 0.0, 1.0),
        lipschitz_norm_q=norm_q,
        fstar_lower_bound=float(fstar_lower_bound),
        eb_theta=1.0,
        name=f"lovasz_d{d}",
    )


def graph_from_correlation(data: Dataset, cutoff: float) -> GFlassoGraph:
    """Unit-weight feature graph joining column pairs whose empirical
    correlation magnitude reaches the cutoff.  Constant columns never
    join.  (Plumbing for experiments on data without a given graph.)
    """
    if not (0.0 < cutoff <= 1.0):
        raise ValueError(f"graph_from_correlation: cutoff must lie in (0, 1], got {cutoff}")
    _require_rows(data, "graph_from_correlation")
    Xd = np.asarray(data.X.todense(), dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = np.corrcoef(Xd, rowvar=False)
    corr = np.atleast_2d(corr)
    edges = []
    for i in range(data.d):
        for j in range(i + 1, data.d):
            c = corr[i, j]
            if np.isfinite(c) and abs(c) >= cutoff:
                edges.append((i, j, 1.0))
    return GFlassoGraph(data.d, tuple(edges))


def _dense_dataset(X_rows: list[list[float]], y: list[float]) -> Dataset:
    return Dataset(sp.csr_matrix(np.array(X_rows, dtype=float)), np.array(y, dtype=float))


def miniature_zoo() -> dict[str, ProblemInstance]:
    """Small fully-determined instances used by the verification suites.

    known_fstar values are frozen from independent computations: closed
    forms for the one-dimensional pieces (weighted median of {1, 2, 10}
    gives 2, so the mean absolute loss there is (1 + 0 + 8)/3 = 3; the
    eps-insensitive pair {0, 4} with a unit tube is flat at 1 on [1, 3])
    and exact interpolation/separation for the planted instances.
    """
    zoo: dict[str, ProblemInstance] = {}

    abs_1d = piecewise_linear_erm(_dense_dataset([[1.0]], [0.0]), loss="absolute")
    zoo["abs_1d"] = replace(abs_1d, known_fstar=0.0, name="abs_1d")

    med = piecewise_linear_erm(
        _dense_dataset([[1.0], [1.0], [1.0]], [1.0, 2.0, 10.0]), loss="absolute"
    )
    zoo["abs_median_1d"] = replace(med, known_fstar=3.0, name="abs_median_1d")

    zoo["square_1d"] = ProblemInstance(
        dim=1,
        objective=lambda w: float(w[0] * w[0]),
        subgrad=lambda w: 2.0 * np.asarray(w, dtype=float),
        lipschitz_bound=8.0,  # valid while probes stay inside |w| <= 4
        known_fstar=0.0,
        eb_theta=0.5,
        name="square_1d",
    )

    zoo["l1_2d"] = ProblemInstance(
        dim=2,
        objective=lambda w: float(np.sum(np.abs(w))),
        subgrad=lambda w: np.sign(np.asarray(w, dtype=float)),
        lipschitz_bound=float(math.sqrt(2.0)),
        known_fstar=0.0,
        eb_theta=1.0,
        name="l1_2d",
    )

    sep = _dense_dataset(
        [
            [2.0, 0.5],
            [1.5, -0.2],
            [2.2, 1.0],
            [-2.0, 0.3],
            [-1.8, -0.5],
            [-2.5, 0.1],
        ],
        [1.0, 1.0, 1.0, -1.0, -1.0, -1.0],
    )
    hinge = piecewise_linear_erm(sep, loss="hinge")  # w = (1, 0) separates with margin
    zoo["hinge_sep_2d"] = replace(hinge, known_fstar=0.0, name="hinge_sep_2d")

    rr_data = Dataset(
        sp.csr_matrix(np.array([[1.0], [2.0], [-1.0]])),
        np.array([1.5, 3.0, -1.5]),
        planted=np.array([1.5]),
    )
    rr = robust_regression(rr_data, p_loss=1.5, region_radius=8.0)
    zoo["rr_1d_p15"] = replace(rr, known_fstar=0.0, name="rr_1d_p15")

    tube = piecewise_linear_erm(
        _dense_dataset([[1.0], [1.0]], [0.0, 4.0]), loss="eps_insensitive", eps_ins=1.0
    )
    zoo["eps_ins_1d"] = replace(tube, known_fstar=1.0, name="eps_ins_1d")

    ball = piecewise_linear_erm(sep, loss="hinge", reg="l1_ball", radius=0.8)
    zoo["hinge_l1ball_2d"] = replace(ball, name="hinge_l1ball_2d")

    path = cut_function(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)])
    zoo["lovasz_path4"] = replace(
        lovasz_problem(path, fstar_lower_bound=0.0), known_fstar=0.0, name="lovasz_path4"
    )

    return zoo
