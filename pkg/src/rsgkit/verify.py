"""Numerical verification suites behind ``rsgkit verify`` and reused by the
test suite: prox identities, the averaging/dual-averaging progress bounds,
oracle cross-checks, and zoo-wide convexity/subgradient certificates.

Each suite returns (passed, report lines); counterexamples are embedded in
the failing lines.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .core import PNormSpace, ProblemInstance, conjugate_exponent, pnorm
from .oracles import grid_min, long_run_min, submodular_min_enumerate, weighted_median
from .problems import cut_function, miniature_zoo
from .solvers import dap_run, pnorm_prox, sg_run

__all__ = ["prox_suite", "lemmas_suite", "oracle_suite", "zoo_suite", "run_suite", "SUITES"]


def _probe_box(rng: np.random.Generator, problem: ProblemInstance, n: int) -> np.ndarray:
    """Deterministic probe points: uniform on [-2, 2]^d, then made feasible.
    Every zoo instance declares its subgradient bound on a region containing
    that box."""
    pts = rng.uniform(-2.0, 2.0, size=(n, problem.dim))
    if problem.project is not None:
        pts = np.array([problem.project(p) for p in pts])
    return pts


def prox_suite(n_triples: int = 1000, seed: int = 20240601) -> tuple[bool, list[str]]:
    """Random (w, g, p) triples: the closed-form prox step must satisfy its
    step-length identity exactly and beat nearby perturbations."""
    rng = np.random.default_rng(seed)
    lines: list[str] = []
    bad_identity = 0
    bad_local = 0
    worst = 0.0
    for _ in range(n_triples):
        d = int(rng.integers(1, 11))
        p = float(rng.uniform(1.2, 2.0))
        w = rng.standard_normal(d)
        g = rng.standard_normal(d)
        q = conjugate_exponent(p)
        u = pnorm_prox(w, g, p)
        gq = pnorm(g, q)
        err = abs(pnorm(u - w, p) - gq) / (1.0 + gq)
        worst = max(worst, err)
        if err > 1e-10:
            bad_identity += 1
            lines.append(
                f"[FAIL] prox identity: rel err {err:.3e} at p={p!r}, w={w.tolist()}, "
                f"g={g.tolist()}"
            )
            continue
        phi = lambda x: float(g @ x + 0.5 * pnorm(x - w, p) ** 2)  # noqa: E731
        base = phi(u)
        for _k in range(8):
            delta = 1e-3 * rng.standard_normal(d)
            if phi(u + delta) < base - 1e-9:
                bad_local += 1
                lines.append(
                    f"[FAIL] prox not locally optimal at p={p!r}, w={w.tolist()}, "
                    f"g={g.tolist()}: perturbation improved by "
                    f"{base - phi(u + delta):.3e}"
                )
                break
    ok = bad_identity == 0 and bad_local == 0
    lines.append(
        f"[{'pass' if ok else 'FAIL'}] prox suite: {n_triples} triples, "
        f"{bad_identity} identity failures, {bad_local} local-optimality failures, "
        f"worst identity rel err {worst:.3e}"
    )
    return ok, lines


def _averaging_bound_check(
    problem: ProblemInstance,
    w1: np.ndarray,
    eta: float,
    T: int,
    probes: np.ndarray,
    tol: float = 1e-9,
) -> list[str]:
    """Progress bound of the fixed-step averaging run: for every reference
    point u, f(avg) - f(u) <= G**2 eta / 2 + ||w1 - u||**2 / (2 eta T)."""
    fails = []
    G = problem.lipschitz_bound
    avg, _ = sg_run(problem, w1, eta, T, stride=max(1, T))
    f_avg = float(problem.objective(avg))
    for u in probes:
        bound = G * G * eta / 2.0 + float(np.sum((w1 - u) ** 2)) / (2.0 * eta * T)
        gap = f_avg - float(problem.objective(u))
        if gap > bound + tol:
            fails.append(
                f"[FAIL] averaging bound on {problem.name}: gap {gap!r} > bound "
                f"{bound!r} (eta={eta}, T={T}, u={np.asarray(u).tolist()})"
            )
    return fails


def _dual_averaging_bound_check(
    problem: ProblemInstance,
    G_q: float,
    w1: np.ndarray,
    eta: float,
    T: int,
    p: float,
    lambda_mode: str,
    probes: np.ndarray,
    tol: float = 1e-9,
) -> list[str]:
    """Progress bound of the weighted dual-averaging run in the p-norm
    geometry, for both weight modes."""
    fails = []
    space = PNormSpace(p)
    avg, _ = dap_run(problem, w1, eta, T, space, lambda_mode, stride=max(1, T))
    f_avg = float(problem.objective(avg))
    for u in probes:
        dist2 = pnorm(np.asarray(u) - w1, p) ** 2
        if lambda_mode == "unit":
            bound = dist2 / (2.0 * eta * T) + eta * G_q * G_q / (2.0 * (p - 1.0))
        else:
            bound = G_q * dist2 / (2.0 * eta * T) + eta * G_q / (2.0 * (p - 1.0))
        gap = f_avg - float(problem.objective(u))
        if gap > bound + tol:
            fails.append(
                f"[FAIL] dual-averaging bound on {problem.name}: gap {gap!r} > "
                f"bound {bound!r} (p={p}, mode={lambda_mode}, eta={eta}, T={T})"
            )
    return fails


def lemmas_suite(seed: int = 20240602) -> tuple[bool, list[str]]:
    """Per-stage progress bounds on the miniature zoo, across step sizes,
    horizons, and (for the unconstrained one-dimensional instances plus the
    Euclidean case) both dual-averaging weight modes."""
    rng = np.random.default_rng(seed)
    zoo = miniature_zoo()
    lines: list[str] = []
    fails: list[str] = []
    checks = 0
    for name, problem in zoo.items():
        w1 = problem.feasible(np.full(problem.dim, 1.2))
        probes = _probe_box(rng, problem, 5)
        for eta in (0.05, 0.2):
            for T in (40, 200):
                fails += _averaging_bound_check(problem, w1, eta, T, probes)
                checks += len(probes)
    dap_euclid = [n for n, pr in zoo.items() if pr.project is None]
    dap_1d = [n for n in dap_euclid if zoo[n].dim == 1]
    for mode in ("unit", "inv_grad_norm"):
        for name in dap_euclid:
            problem = zoo[name]
            probes = _probe_box(rng, problem, 4)
            w1 = np.full(problem.dim, 1.1)
            fails += _dual_averaging_bound_check(
                problem, problem.lipschitz_bound, w1, 0.1, 100, 2.0, mode, probes
            )
            checks += len(probes)
        for name in dap_1d:  # d = 1: every norm agrees, so the stored G is the q-norm bound
            problem = zoo[name]
            probes = _probe_box(rng, problem, 4)
            w1 = np.full(problem.dim, 1.1)
            fails += _dual_averaging_bound_check(
                problem, problem.lipschitz_bound, w1, 0.1, 100, 1.5, mode, probes
            )
            checks += len(probes)
    lines.extend(fails)
    ok = not fails
    lines.append(
        f"[{'pass' if ok else 'FAIL'}] lemmas suite: {checks} bound checks across "
        f"{len(zoo)} instances, {len(fails)} violations"
    )
    return ok, lines


def oracle_suite() -> tuple[bool, list[str]]:
    """Cross-checks between independent oracles: grid vs long-run agreement
    within summed tolerances, the weighted-median closed form, and subset
    enumeration on a path cut."""
    zoo = miniature_zoo()
    lines: list[str] = []
    fails = 0
    for name, problem in zoo.items():
        if problem.dim > 2 or problem.known_fstar is None:
            continue
        ppd = 4001 if problem.dim == 1 else 401
        grid = grid_min(problem, -4.0, 4.0, ppd)
        longrun = long_run_min(problem, np.full(problem.dim, 1.7), total_iters=60_000)
        slack = grid.certified_tol + longrun.certified_tol + 1e-7
        if abs(grid.fstar - longrun.fstar) > slack:
            fails += 1
            lines.append(
                f"[FAIL] oracle mismatch on {name}: grid {grid.fstar!r} vs "
                f"long-run {longrun.fstar!r}, slack {slack!r}"
            )
        if abs(grid.fstar - problem.known_fstar) > grid.certified_tol + 1e-9:
            fails += 1
            lines.append(
                f"[FAIL] grid vs known minimum on {name}: {grid.fstar!r} vs "
                f"{problem.known_fstar!r} (tol {grid.certified_tol!r})"
            )
    med_cases = [
        (([0.0, 1.0], None), 0.0),
        (([1.0, 2.0, 10.0], None), 2.0),
        (([1.0, 2.0, 10.0], [5.0, 1.0, 1.0]), 1.0),
    ]
    for (vals, wts), expected in med_cases:
        got = weighted_median(vals, wts)
        if got != expected:
            fails += 1
            lines.append(f"[FAIL] weighted_median({vals}, {wts}) = {got}, expected {expected}")
    path = cut_function(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)])
    mn, mask = submodular_min_enumerate(path)
    if mn != 0.0 or mask != 0:
        fails += 1
        lines.append(f"[FAIL] path-cut enumeration gave ({mn}, {mask}), expected (0.0, 0)")
    ok = fails == 0
    lines.append(f"[{'pass' if ok else 'FAIL'}] oracle suite: {fails} failures")
    return ok, lines


def zoo_suite(n_pairs: int = 1000, seed: int = 20240603) -> tuple[bool, list[str]]:
    """Zoo-wide certificates: convexity via the subgradient inequality over
    sampled pairs, subgradient norms within the declared bound, projection
    idempotence, and agreement of known minima with direct evaluation."""
    rng = np.random.default_rng(seed)
    zoo = miniature_zoo()
    lines: list[str] = []
    fails = 0
    for name, problem in zoo.items():
        us = _probe_box(rng, problem, n_pairs)
        vs = _probe_box(rng, problem, n_pairs)
        worst = -math.inf
        for u, v in zip(us, vs):
            fu = float(problem.objective(u))
            fv = float(problem.objective(v))
            g = problem.subgrad(v)
            lin = fv + float(g @ (u - v))
            viol = (lin - fu) / max(1.0, abs(fu), abs(fv))
            worst = max(worst, viol)
        if worst > 1e-9:
            fails += 1
            lines.append(f"[FAIL] convexity certificate on {name}: violation {worst:.3e}")
        q = problem.lipschitz_norm_q
        over = 0.0
        for u in us[:200]:
            gn = pnorm(problem.subgrad(u), q)
            over = max(over, gn - problem.lipschitz_bound)
        if over > 1e-9 * max(1.0, problem.lipschitz_bound):
            fails += 1
            lines.append(
                f"[FAIL] subgradient bound on {name}: exceeds declared G by {over:.3e}"
            )
        if problem.project is not None:
            for u in us[:50]:
                raw = np.asarray(u) + rng.standard_normal(problem.dim)
                once = problem.project(raw)
                twice = problem.project(once)
                if np.max(np.abs(twice - once)) > 1e-12:
                    fails += 1
                    lines.append(f"[FAIL] projection not idempotent on {name} at {raw.tolist()}")
                    break
    ok = fails == 0
    lines.append(
        f"[{'pass' if ok else 'FAIL'}] zoo suite: {len(zoo)} instances, "
        f"{n_pairs} convexity pairs each, {fails} failures"
    )
    return ok, lines


SUITES: dict[str, Callable[[], tuple[bool, list[str]]]] = {
    "prox": prox_suite,
    "lemmas": lemmas_suite,
    "oracle": oracle_suite,
    "zoo": zoo_suite,
}


def run_suite(name: str) -> tuple[bool, list[str]]:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; expected one of {sorted(SUITES)}")
    return SUITES[name]()
