"""CLI behaviour: config parsing, run ids, artifacts, exit codes, compare."""

from __future__ import annotations

import json

import numpy as np
import pytest

from rsgkit.cli import CSV_HEADER, ConfigError, RunSpec, cmd_compare, cmd_run, main
from rsgkit.solvers import compute_inner_iters, compute_stage_count
from rsgkit.core import ErrorBoundParams

BASE = """\
# small separable hinge problem
problem.kind = pwl
problem.synth = classification
problem.n = 20
problem.d = 3
problem.margin = 0.5
problem.data_seed = 1
problem.loss = hinge

solver.algo = rsg
solver.stages = 3
solver.t = 40
solver.eps0 = 1.0
"""


def write_config(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def read_rows(path):
    return path.read_text().splitlines()


# ---------------------------------------------------------------------------
# RunSpec


def test_runspec_parses_comments_and_defaults():
    spec = RunSpec.from_text(BASE)
    assert spec.get("solver.alpha") == 2.0  # default materializes on read
    assert spec.get("solver.t") == 40
    echo = spec.echo()
    assert echo["solver.alpha"] == "2.0"
    assert echo["solver.w0"] == "zeros"
    assert "output.dir" not in echo


def test_runspec_run_id_ignores_key_order_and_output_dir():
    lines = [ln for ln in BASE.splitlines() if ln.strip() and not ln.startswith("#")]
    shuffled = "\n".join(reversed(lines))
    assert RunSpec.from_text(BASE).run_id == RunSpec.from_text(shuffled).run_id
    moved = RunSpec.from_text(BASE).with_overrides({"output.dir": "elsewhere"})
    assert moved.run_id == RunSpec.from_text(BASE).run_id


def test_runspec_run_id_tracks_semantic_changes():
    other = BASE.replace("solver.t = 40", "solver.t = 41")
    assert RunSpec.from_text(BASE).run_id != RunSpec.from_text(other).run_id


@pytest.mark.parametrize(
    "mutate,match",
    [
        (lambda t: t + "nonsense.key = 1\n", "unknown key"),
        (lambda t: t + "solver.t = 40\n", "duplicate"),
        (lambda t: t.replace("solver.t = 40", "solver.t = forty"), "expects int"),
        (lambda t: t.replace("problem.kind = pwl\n", ""), "problem.kind"),
        (lambda t: t + "problem.p_loss = 1.5\n", "does not apply"),
        (lambda t: t + "solver.eta = 0.1\n", "does not apply"),
        (lambda t: t + "solver.norm_p = 1.5\n", "does not apply"),
        (lambda t: t.replace("solver.stages = 3\n", ""), "stages or solver.target_eps"),
        (lambda t: t.replace("solver.t = 40\n", ""), "solver.t"),
        (lambda t: t + "solver.w0 = random\n", "w0"),
        (lambda t: t.replace("problem.n = 20\n", ""), "problem.n"),
        (lambda t: t.replace("problem.synth = classification\n", ""), "path or problem.synth"),
    ],
)
def test_runspec_rejects_bad_configs(mutate, match):
    with pytest.raises(ConfigError, match=match):
        RunSpec.from_text(mutate(BASE))


def test_runspec_sg_requires_eta_and_T():
    text = BASE.replace("solver.algo = rsg", "solver.algo = sg")
    text = "\n".join(
        ln for ln in text.splitlines() if not ln.startswith(("solver.stages", "solver.t ", "solver.eps0"))
    )
    with pytest.raises(ConfigError, match="solver.eta"):
        RunSpec.from_text(text)
    RunSpec.from_text(text + "\nsolver.eta = 0.1\nsolver.T = 10\n")


def test_runspec_r2sg_requires_t1_and_schedule():
    text = BASE.replace("solver.algo = rsg", "solver.algo = r2sg")
    with pytest.raises(ConfigError, match="t1"):
        RunSpec.from_text(text.replace("solver.t = 40\n", ""))
    ok = text.replace("solver.t = 40", "solver.t1 = 40")
    RunSpec.from_text(ok)
    with pytest.raises(ConfigError, match="stages or solver.restart_every"):
        RunSpec.from_text(ok.replace("solver.stages = 3\n", ""))


# ---------------------------------------------------------------------------
# run command


def test_cli_run_writes_artifacts(tmp_path, capsys):
    cfg = write_config(tmp_path, BASE)
    out = tmp_path / "out"
    assert main(["run", "--config", cfg, "--out", str(out)]) == 0
    spec = RunSpec.from_text(BASE)
    csv_path = out / f"{spec.run_id}.csv"
    rows = read_rows(csv_path)
    assert rows[0] == ",".join(CSV_HEADER)
    assert len(rows) > 1
    summary = json.loads((out / f"{spec.run_id}.json").read_text())
    assert summary["run_id"] == spec.run_id
    assert summary["exit_code"] == 0
    assert summary["prng"] == "pcg64"
    assert len(summary["stages"]) == 3
    assert spec.run_id in capsys.readouterr().out


def test_cli_run_is_bitwise_reproducible_across_dirs(tmp_path):
    cfg = write_config(tmp_path, BASE)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", cfg, "--out", str(a)]) == 0
    assert main(["run", "--config", cfg, "--out", str(b)]) == 0
    rid = RunSpec.from_text(BASE).run_id
    assert (a / f"{rid}.csv").read_bytes() == (b / f"{rid}.csv").read_bytes()


def test_cli_echo_round_trip_reproduces_run(tmp_path):
    cfg = write_config(tmp_path, BASE)
    out1 = tmp_path / "first"
    assert main(["run", "--config", cfg, "--out", str(out1)]) == 0
    rid = RunSpec.from_text(BASE).run_id
    summary = json.loads((out1 / f"{rid}.json").read_text())
    echoed = "\n".join(f"{k} = {v}" for k, v in summary["config"].items())
    spec2 = RunSpec.from_text(echoed)
    assert spec2.run_id == rid
    out2 = tmp_path / "second"
    cfg2 = write_config(tmp_path, echoed, name="echoed.cfg")
    assert main(["run", "--config", cfg2, "--out", str(out2)]) == 0
    assert (out1 / f"{rid}.csv").read_bytes() == (out2 / f"{rid}.csv").read_bytes()


def test_cli_timing_flag_controls_wallclock_column(tmp_path):
    cfg = write_config(tmp_path, BASE)
    out_plain, out_timed = tmp_path / "plain", tmp_path / "timed"
    main(["run", "--config", cfg, "--out", str(out_plain)])
    main(["run", "--config", cfg, "--out", str(out_timed), "--timing"])
    rid_plain = RunSpec.from_text(BASE).run_id
    plain_rows = read_rows(out_plain / f"{rid_plain}.csv")[1:]
    assert all(row.rsplit(",", 1)[1] == "0" for row in plain_rows)
    # --timing participates in the run id (it changes output.timing)
    rid_timed = RunSpec.from_text(BASE).with_overrides({"output.timing": True}).run_id
    timed_rows = read_rows(out_timed / f"{rid_timed}.csv")[1:]
    assert any(int(row.rsplit(",", 1)[1]) > 0 for row in timed_rows)


def test_cli_stride_reduces_rows(tmp_path):
    cfg = write_config(tmp_path, BASE)
    dense_dir, sparse_dir = tmp_path / "dense", tmp_path / "sparse"
    main(["run", "--config", cfg, "--out", str(dense_dir)])
    main(["run", "--config", cfg, "--out", str(sparse_dir), "--stride", "20"])
    dense_rid = RunSpec.from_text(BASE).run_id
    sparse_rid = RunSpec.from_text(BASE).with_overrides({"output.stride": 20}).run_id
    n_dense = len(read_rows(dense_dir / f"{dense_rid}.csv"))
    n_sparse = len(read_rows(sparse_dir / f"{sparse_rid}.csv"))
    assert n_sparse < n_dense


def test_cli_gaussian_w0_seed_override(tmp_path):
    text = BASE + "solver.w0 = gaussian\n"
    cfg = write_config(tmp_path, text)

    def first_objective(seed):
        out = tmp_path / f"seed{seed}"
        assert main(["run", "--config", cfg, "--out", str(out), "--seed", str(seed)]) == 0
        rid = RunSpec.from_text(text).with_overrides({"solver.seed": seed}).run_id
        return read_rows(out / f"{rid}.csv")[1].split(",")[5]

    assert first_objective(1) != first_objective(2)
    assert first_objective(3) == first_objective(3)


def test_cli_derive_stages_and_iters(tmp_path):
    text = BASE.replace("solver.stages = 3\n", "").replace("solver.t = 40\n", "")
    text += "solver.target_eps = 0.125\nsolver.theta_eb = 1.0\nsolver.c_eb = 2.0\n"
    cfg = write_config(tmp_path, text)
    out = tmp_path / "derived"
    assert main(["run", "--config", cfg, "--out", str(out)]) == 0
    rid = RunSpec.from_text(text).run_id
    summary = json.loads((out / f"{rid}.json").read_text())
    assert summary["stages_derived"] == compute_stage_count(1.0, 0.125, 2.0)
    from rsgkit.cli import build_problem

    G = build_problem(RunSpec.from_text(text)).lipschitz_bound
    assert summary["t_derived"] == compute_inner_iters(
        G, ErrorBoundParams(1.0, 2.0), 0.125, 2.0
    )


def test_cli_lovasz_cut_end_to_end(tmp_path):
    edges = tmp_path / "edges.txt"
    edges.write_text("1 2\n2 3\n")
    text = f"""\
problem.kind = lovasz_cut
problem.dim = 3
problem.edges = {edges}
solver.algo = rsg
solver.stages = 2
solver.t = 30
solver.eps0 = 1.0
"""
    cfg = write_config(tmp_path, text, name="cut.cfg")
    out = tmp_path / "cut"
    assert main(["run", "--config", cfg, "--out", str(out)]) == 0


def test_cli_exit_1_on_config_error(tmp_path, capsys):
    cfg = write_config(tmp_path, BASE + "bogus.key = 3\n")
    assert main(["run", "--config", cfg]) == 1
    assert "config error" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "missing.cfg")]) == 1


def test_cli_exit_2_on_data_error(tmp_path, capsys):
    text = """\
problem.kind = pwl
problem.path = {path}
problem.loss = hinge
solver.algo = sg
solver.eta = 0.1
solver.T = 5
"""
    missing = write_config(tmp_path, text.format(path=tmp_path / "no_such_file.svm"))
    assert main(["run", "--config", missing]) == 2
    assert "data error" in capsys.readouterr().err
    bad = tmp_path / "bad.svm"
    bad.write_text("1 0:3\n")  # feature indices start at 1
    malformed = write_config(tmp_path, text.format(path=bad), name="malformed.cfg")
    assert main(["run", "--config", malformed]) == 2


def test_cli_exit_3_divergence_writes_partial_trace(tmp_path, capsys):
    text = """\
problem.kind = robust_regression
problem.synth = regression
problem.n = 5
problem.d = 2
problem.noise = 0.0
problem.data_seed = 0
problem.p_loss = 1.5
solver.algo = sg
solver.eta = 1e200
solver.T = 50
"""
    cfg = write_config(tmp_path, text, name="diverge.cfg")
    out = tmp_path / "div"
    assert main(["run", "--config", cfg, "--out", str(out)]) == 3
    assert "diverged" in capsys.readouterr().out
    rid = RunSpec.from_text(text).run_id
    rows = read_rows(out / f"{rid}.csv")
    assert rows[0] == ",".join(CSV_HEADER)
    assert 1 < len(rows) < 52  # stopped early, partial trace preserved
    raw = (out / f"{rid}.json").read_text()
    summary = json.loads(
        raw, parse_constant=lambda s: pytest.fail(f"bare {s} in summary JSON")
    )
    assert summary["exit_code"] == 3
    assert summary["error"]


def test_cli_verify_prox_exits_zero(capsys):
    assert main(["verify", "prox"]) == 0
    assert "prox" in capsys.readouterr().out


# ---------------------------------------------------------------------------
# compare command


SG_VARIANT = """\
problem.kind = pwl
problem.synth = classification
problem.n = 20
problem.d = 3
problem.margin = 0.5
problem.data_seed = 1
problem.loss = hinge

solver.algo = sg
solver.eta = 0.05
solver.T = 100
"""


def test_cli_compare_merges_and_thresholds(tmp_path, capsys):
    cfg_a = write_config(tmp_path, BASE, name="a.cfg")
    cfg_b = write_config(tmp_path, SG_VARIANT, name="b.cfg")
    out = tmp_path / "cmp"
    code = main(
        [
            "compare",
            "--config",
            cfg_a,
            "--config",
            cfg_b,
            "--out",
            str(out),
            "--thresholds",
            "0.5,0.05",
        ]
    )
    assert code == 0
    rid_a = RunSpec.from_text(BASE).run_id
    rid_b = RunSpec.from_text(SG_VARIANT).run_id
    merged = sorted(out.glob("compare_*.csv"))
    merged = [p for p in merged if not p.name.endswith("_thresholds.csv")]
    assert len(merged) == 1
    rows = read_rows(merged[0])
    assert rows[0] == f"cum_iter,objective_{rid_a},best_{rid_a},objective_{rid_b},best_{rid_b}"
    # gaps are empty strings where one run has no record at that cum_iter
    assert any(",," in row or row.endswith(",") for row in rows[1:])
    thr = list(out.glob("compare_*_thresholds.csv"))
    assert len(thr) == 1
    trows = read_rows(thr[0])
    assert trows[0] == f"threshold,{rid_a},{rid_b}"
    assert len(trows) == 3
    # member artifacts land next to the merge
    assert (out / f"{rid_a}.csv").exists() and (out / f"{rid_b}.json").exists()
    assert "compare" in capsys.readouterr().out


def test_cli_compare_duplicate_specs_identical_columns(tmp_path, capsys):
    cfg = write_config(tmp_path, BASE, name="dup.cfg")
    out = tmp_path / "dup_out"
    assert main(["compare", "--config", cfg, "--config", cfg, "--out", str(out)]) == 0
    merged = [
        p for p in out.glob("compare_*.csv") if not p.name.endswith("_thresholds.csv")
    ]
    for row in read_rows(merged[0])[1:]:
        cum, o1, b1, o2, b2 = row.split(",")
        assert o1 == o2 and b1 == b2
    capsys.readouterr()


def test_cli_compare_rejects_mismatched_problems(tmp_path, capsys):
    other = SG_VARIANT.replace("problem.data_seed = 1", "problem.data_seed = 2")
    cfg_a = write_config(tmp_path, SG_VARIANT, name="p1.cfg")
    cfg_b = write_config(tmp_path, other, name="p2.cfg")
    assert main(["compare", "--config", cfg_a, "--config", cfg_b]) == 1
    assert "same problem" in capsys.readouterr().err


def test_cli_compare_threads_match_serial(tmp_path, capsys):
    cfg_a = write_config(tmp_path, BASE, name="ta.cfg")
    cfg_b = write_config(tmp_path, SG_VARIANT, name="tb.cfg")
    serial, parallel = tmp_path / "serial", tmp_path / "parallel"
    assert main(["compare", "--config", cfg_a, "--config", cfg_b, "--out", str(serial)]) == 0
    assert (
        main(
            [
                "compare",
                "--config",
                cfg_a,
                "--config",
                cfg_b,
                "--out",
                str(parallel),
                "--threads",
                "2",
            ]
        )
        == 0
    )
    s = [p for p in serial.glob("compare_*.csv")][0]
    p = [p for p in parallel.glob("compare_*.csv")][0]
    assert s.read_bytes() == p.read_bytes()
    capsys.readouterr()


def test_cli_compare_bad_thresholds(tmp_path, capsys):
    cfg = write_config(tmp_path, BASE)
    assert main(["compare", "--config", cfg, "--thresholds", "a,b"]) == 1
    assert "thresholds" in capsys.readouterr().err


def test_cmd_compare_requires_specs():
    with pytest.raises(ConfigError, match="no run configs"):
        cmd_compare([])


def test_cmd_run_returns_trace_artifacts(tmp_path):
    spec = RunSpec.from_text(BASE)
    code, artifacts = cmd_run(spec, str(tmp_path / "direct"))
    assert code == 0
    assert artifacts["csv"].exists() and artifacts["summary"].exists()
    assert artifacts["trace"].total_iters == 120
    assert np.isfinite(artifacts["trace"].final_objective)
