"""Reference-minimum oracles: grid sweeps, medians, long runs, level geometry."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest
import scipy.sparse as sp

from rsgkit.core import ProblemInstance
from rsgkit.oracles import (
    BudgetError,
    InconsistentOracleError,
    OracleReport,
    SublevelGrid,
    estimate_B_eps,
    grid_min,
    long_run_min,
    sample_level_points,
    sublevel_project,
    submodular_min_enumerate,
    weighted_median,
)
from rsgkit.problems import (
    Dataset,
    SetFunction,
    cut_function,
    miniature_zoo,
    piecewise_linear_erm,
)

ZOO = miniature_zoo()


def exact_report(fstar: float, argmin, tol: float = 0.0) -> OracleReport:
    return OracleReport(
        fstar=fstar,
        argmin=np.asarray(argmin, dtype=float),
        method="grid",
        certified_tol=tol,
        certified=True,
    )


# ---------------------------------------------------------------------------
# grid_min


def test_grid_min_hits_on_grid_kink_exactly():
    inst = ZOO["abs_1d"]
    report = grid_min(inst, -1.0, 1.0, 201)
    assert report.fstar == 0.0
    assert report.argmin[0] == 0.0
    assert report.certified and report.method == "grid"
    # half a cell diagonal: 0.5 * G * h with G = 1 and h = 2/200
    assert math.isclose(report.certified_tol, 0.005, rel_tol=1e-12)


def test_grid_min_off_grid_minimum_within_certificate():
    data = Dataset(sp.csr_matrix(np.array([[1.0]])), np.array([0.3030303]))
    inst = piecewise_linear_erm(data, loss="absolute")
    report = grid_min(inst, -1.0, 1.0, 201)
    assert 0.0 < report.fstar <= report.certified_tol + 1e-15


def test_grid_min_budget_refusal_reports_required_count():
    inst = ZOO["l1_2d"]
    with pytest.raises(BudgetError) as exc:
        grid_min(inst, -1.0, 1.0, 2000)
    assert exc.value.required == 2000**2
    # an explicit budget unlocks larger sweeps
    report = grid_min(inst, -1.0, 1.0, 41, budget=10_000)
    assert report.fstar == 0.0


def test_grid_min_validation():
    inst = ZOO["abs_1d"]
    with pytest.raises(ValueError, match="points_per_dim"):
        grid_min(inst, -1.0, 1.0, 1)
    with pytest.raises(ValueError, match="box_lo"):
        grid_min(inst, 1.0, -1.0, 11)


# ---------------------------------------------------------------------------
# weighted_median


def test_weighted_median_frozen_cases():
    assert weighted_median([1.0, 2.0, 10.0]) == 2.0
    assert weighted_median([10.0, 1.0, 2.0]) == 2.0  # order-insensitive
    assert weighted_median([0.0, 1.0]) == 0.0  # even split: lowest minimizer
    assert weighted_median([1.0, 2.0, 10.0], [5.0, 1.0, 1.0]) == 1.0


def test_weighted_median_validation():
    with pytest.raises(ValueError, match="empty"):
        weighted_median([])
    with pytest.raises(ValueError, match="shape"):
        weighted_median([1.0, 2.0], [1.0])
    with pytest.raises(ValueError, match="weights"):
        weighted_median([1.0, 2.0], [1.0, 0.0])


def test_weighted_median_minimizes_weighted_absolute_sum():
    rng = np.random.default_rng(3)
    for _ in range(20):
        v = rng.normal(size=21)
        w = rng.uniform(0.1, 3.0, size=21)
        med = weighted_median(v, w)

        def cost(t):
            return float(np.sum(w * np.abs(t - v)))

        best = min(cost(t) for t in v)
        assert cost(med) <= best + 1e-12


# ---------------------------------------------------------------------------
# long_run_min


def test_long_run_min_reaches_known_minimum():
    report = long_run_min(ZOO["abs_1d"], np.array([5.0]), total_iters=20_000, stages=20)
    assert report.method == "long_run"
    assert not report.certified
    assert 0.0 <= report.fstar <= 1e-3
    assert abs(report.argmin[0]) <= 1e-3


def test_long_run_min_validation():
    with pytest.raises(ValueError, match="total_iters"):
        long_run_min(ZOO["abs_1d"], np.zeros(1), total_iters=5, stages=30)


# ---------------------------------------------------------------------------
# sublevel projection


def test_sublevel_project_keeps_inside_points():
    inst = ZOO["abs_1d"]
    w = np.array([0.2])
    out = sublevel_project(inst, w, eps=0.5, oracle=exact_report(0.0, [0.0]))
    assert np.array_equal(out, w)
    assert out is not w


def test_sublevel_project_segment_finds_boundary():
    inst = ZOO["abs_1d"]
    out = sublevel_project(inst, np.array([2.0]), eps=0.5, oracle=exact_report(0.0, [0.0]))
    assert math.isclose(out[0], 0.5, rel_tol=0, abs_tol=1e-9)
    assert inst.objective(out) <= 0.5 + 1e-12


def test_sublevel_project_grid_on_l1_ball():
    inst = ZOO["l1_2d"]
    w = np.array([2.0, 0.0])
    out = sublevel_project(
        inst, w, eps=1.0, oracle=exact_report(0.0, [0.0, 0.0]), method="grid",
        points_per_dim=201,
    )
    assert inst.objective(out) <= 1.0 + 1e-12
    assert float(np.linalg.norm(out - np.array([1.0, 0.0]))) <= 0.03


def test_sublevel_project_rejects_fabricated_fstar():
    inst = ZOO["abs_1d"]
    with pytest.raises(InconsistentOracleError, match="objective"):
        sublevel_project(inst, np.array([2.0]), eps=0.5, oracle=exact_report(-1.0, [0.0]))


def test_sublevel_project_empty_level_raises():
    inst = ZOO["abs_1d"]
    # a coarse but self-consistent report whose witness sits above the level
    loose = exact_report(0.3, [0.5], tol=0.5)
    with pytest.raises(InconsistentOracleError, match="empty"):
        sublevel_project(inst, np.array([2.0]), eps=0.1, oracle=loose)


def test_sublevel_project_validation():
    inst = ZOO["abs_1d"]
    oracle = exact_report(0.0, [0.0])
    with pytest.raises(ValueError, match="eps"):
        sublevel_project(inst, np.array([2.0]), eps=0.0, oracle=oracle)
    with pytest.raises(ValueError, match="method"):
        sublevel_project(inst, np.array([2.0]), eps=0.5, oracle=oracle, method="newton")


def test_sublevel_grid_respects_constraints():
    inst = ZOO["hinge_l1ball_2d"]  # feasible set: l1 ball of radius 0.8
    oracle = exact_report(0.0, [0.8, 0.0])
    grid = SublevelGrid(inst, oracle, eps=0.05, box_lo=-1.0, box_hi=1.0, points_per_dim=81)
    out = grid.project(np.array([2.0, 2.0]))
    assert float(np.sum(np.abs(out))) <= 0.8 + 1e-9
    assert inst.objective(out) <= 0.05 + 1e-12


def test_sublevel_grid_budget():
    with pytest.raises(BudgetError):
        SublevelGrid(ZOO["l1_2d"], exact_report(0.0, [0.0, 0.0]), 1.0, -1.0, 1.0, 3000)


# ---------------------------------------------------------------------------
# level-point sampling and radius estimates


def test_sample_level_points_sit_on_the_level():
    inst = ZOO["abs_1d"]
    pts = sample_level_points(inst, eps=0.5, oracle=exact_report(0.0, [0.0]), ray_count=8)
    assert len(pts) >= 2
    for p in pts:
        val = inst.objective(p)
        assert val <= 0.5 + 1e-12
        assert val >= 0.5 - 1e-6


def test_sample_level_points_warns_on_unbounded_rays():
    # f(w) = |w_0| in two dimensions: the w_1 axis never crosses the level
    data = Dataset(sp.csr_matrix(np.array([[1.0, 0.0]])), np.array([0.0]))
    inst = piecewise_linear_erm(data, loss="absolute")
    with pytest.warns(UserWarning, match="never crossed"):
        pts = sample_level_points(inst, eps=0.5, oracle=exact_report(0.0, [0.0, 0.0]), ray_count=4)
    assert len(pts) == 2  # only the +/- first-axis rays cross


def test_estimate_B_eps_absolute_value():
    b = estimate_B_eps(ZOO["abs_1d"], eps=0.3, oracle=exact_report(0.0, [0.0]))
    assert 0.3 - 1e-6 <= b <= 0.3 + 1e-12


def test_estimate_B_eps_square():
    b = estimate_B_eps(ZOO["square_1d"], eps=0.25, oracle=exact_report(0.0, [0.0]))
    assert math.isclose(b, 0.5, rel_tol=1e-5)


def test_estimate_B_eps_l1_diamond():
    b = estimate_B_eps(ZOO["l1_2d"], eps=1.0, oracle=exact_report(0.0, [0.0, 0.0]), ray_count=32)
    assert math.isclose(b, 1.0, rel_tol=1e-6)


def test_estimate_B_eps_unbounded_everywhere_raises():
    flat = ProblemInstance(
        dim=1,
        objective=lambda w: 0.0,
        subgrad=lambda w: np.zeros(1),
        lipschitz_bound=1.0,
        name="flat",
    )
    with pytest.warns(UserWarning, match="never crossed"):
        with pytest.raises(RuntimeError, match="no ray crossed"):
            estimate_B_eps(flat, eps=0.5, oracle=exact_report(0.0, [0.0]))


# ---------------------------------------------------------------------------
# subset enumeration


def test_submodular_min_enumerate_zero_function():
    assert submodular_min_enumerate(SetFunction(3, lambda m: 0.0)) == (0.0, 0)


def test_submodular_min_enumerate_shifted_cut():
    cut = cut_function(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)])

    def shifted(mask: int) -> float:
        return cut.evaluate(mask) - 2.0 * ((mask >> 0) & 1)

    val, mask = submodular_min_enumerate(SetFunction(4, shifted))
    assert (val, mask) == (-2.0, 0b1111)


def test_submodular_min_enumerate_budget():
    big = SetFunction(21, lambda m: float(bin(m).count("1")))
    with pytest.raises(BudgetError) as exc:
        submodular_min_enumerate(big)
    assert exc.value.required == 1 << 21


# ---------------------------------------------------------------------------
# report plumbing and the distance-to-level inequality


def test_oracle_report_to_dict_is_json_ready():
    report = grid_min(ZOO["abs_1d"], -1.0, 1.0, 11)
    d = report.to_dict()
    assert isinstance(d["argmin"], list)
    json.dumps(d)


def test_level_set_distance_inequality():
    # for convex f and w outside the eps-sublevel set S_eps:
    #   rho_eps * ||w - proj(w)|| <= f(w) - f(proj(w))
    # with rho_eps the smallest subgradient norm on the level boundary
    cases = [
        ("abs_1d", exact_report(0.0, [0.0]), np.linspace(-3.0, 3.0, 25).reshape(-1, 1)),
        (
            "l1_2d",
            exact_report(0.0, [0.0, 0.0]),
            np.random.default_rng(17).uniform(-3.0, 3.0, size=(25, 2)),
        ),
    ]
    eps = 0.25
    for key, oracle, samples in cases:
        inst = ZOO[key]
        level_pts = sample_level_points(inst, eps, oracle, ray_count=16)
        rho = min(float(np.linalg.norm(inst.subgrad(p))) for p in level_pts)
        assert rho > 0.0
        for w in samples:
            if inst.objective(w) <= oracle.fstar + eps:
                continue
            proj = sublevel_project(inst, w, eps, oracle)
            lhs = rho * float(np.linalg.norm(w - proj))
            rhs = inst.objective(w) - inst.objective(proj) + 1e-9
            assert lhs <= rhs, (key, w)
