import csv
import json

import numpy as np
import pytest

from tmcmc.diffeo import TransformedTarget
from tmcmc.harness.cli import main
from tmcmc.harness.config import ExperimentConfig, apply_overrides, load_config, parse_config_text
from tmcmc.harness.experiments import (
    alternating_start,
    build_kernel,
    build_target,
    diffeo_configs,
    format_table,
    fraction_below,
    initial_points,
    run_diffeo_comparison,
    run_experiment,
    run_table,
    table_configs,
)
from tmcmc.kernels import KernelKind


def test_parse_config_file(tmp_path):
    p = tmp_path / "exp.cfg"
    p.write_text("# a comment\ntarget = student_t\ndim = 4\n\ndof = 3.5  # inline\ndiffeo.kind = composite\n"
                 "iid = yes\nx0 = 1, 2, 3, 4\npi_n0 = auto\n")
    cfg = load_config(p, {"kernel": "rwmh", "out": "x.csv"})
    assert (cfg.target, cfg.dim, cfg.dof, cfg.diffeo_kind, cfg.iid) == ("student_t", 4, 3.5, "composite", True)
    assert cfg.x0 == (1.0, 2.0, 3.0, 4.0) and cfg.pi_n0 is None
    assert cfg.kernel == "rwmh" and cfg.output_path == "x.csv"


@pytest.mark.parametrize("text", ["dim = zero", "bogus = 1", "just a line", "iid = maybe", "target = normal",
                                   "burn_in_fraction = 1.0", "dim = 3\nx0 = 1,2"])
def test_config_errors(text):
    with pytest.raises(ValueError):
        apply_overrides(ExperimentConfig(), parse_config_text(text))


def test_build_kernel_per_kind():
    for k in ("rwmh", "additive", "multiplicative", "addmult", "mixture_star", "essential_p"):
        cfg = ExperimentConfig(dim=4, kernel=k)
        spec = build_kernel(cfg, build_target(cfg))
        assert spec.kind is KernelKind(k)
    cfg = ExperimentConfig(dim=4, kernel="addmult")
    assert build_kernel(cfg, build_target(cfg)).addmult_partition == (0, 1)
    cfg = ExperimentConfig(dim=2, kernel="multiplicative", p=0.5, q=0.2)
    assert build_kernel(cfg, build_target(cfg)).mult_probs == (0.5, 0.2)


def test_diffeo_start_maps_back_to_x0():
    cfg = ExperimentConfig(target="cauchy", dim=5, diffeo_kind="composite")
    t = build_target(cfg)
    assert isinstance(t, TransformedTarget)
    np.testing.assert_allclose(t.to_original(initial_points(cfg, t)), np.ones(5), rtol=1e-10)


def test_run_experiment_deterministic_csv(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    base = ExperimentConfig(dim=3, kernel="mixture_star", iters=200, replicates=20, seed=3)
    ra = run_experiment(base.replace(output_path=str(a)))
    rb = run_experiment(base.replace(output_path=str(b)))
    assert a.read_bytes() == b.read_bytes()
    assert ra.acceptance_pct == rb.acceptance_pct
    assert 0.0 <= ra.avg_ks_post_burnin <= 1.0
    assert ra.summary()["replicates"] == 20


def test_init_from_target_draws():
    cfg = ExperimentConfig(dim=2, kernel="rwmh", iters=10, replicates=30, init="target")
    t = build_target(cfg)
    assert initial_points(cfg, t).shape == (30, 2)
    assert run_experiment(cfg).avg_ks_post_burnin < 0.3


def test_table_config_counts():
    assert len(table_configs(1, dims=(2, 5, 10))) == 12
    assert len(table_configs(2, dims=(10,))) == 4
    assert len(table_configs(1)) == 16 and len(table_configs(1, full=True)) == 20
    kinds = {c.kernel for c in table_configs(3, dims=(10,))}
    assert kinds == {"rwmh", "mixture_star"}
    with pytest.raises(ValueError, match="unknown table"):
        table_configs(7)


def test_run_table_small(tmp_path):
    out = tmp_path / "t1.csv"
    res = run_table(1, overrides={"iters": "50", "replicates": "10"}, dims=(2,), out=out)
    assert len(res) == 4
    text = format_table(1, res)
    assert "RWMH" in text and "Add-TMCMC" in text
    rows = list(csv.reader(out.open()))
    assert len(rows) == 5
    again = tmp_path / "t1b.csv"
    run_table(1, overrides={"iters": "50", "replicates": "10"}, dims=(2,), out=again)
    assert out.read_bytes() == again.read_bytes()


def test_diffeo_comparison_structure(tmp_path):
    out = tmp_path / "fig.csv"
    res = run_diffeo_comparison("student_t", dim=4, iters=60, replicates=10, out=out)
    assert set(res) == {"rwmh_direct", "rwmh_diffeo", "add_direct", "add_diffeo"}
    rows = list(csv.DictReader(out.open()))
    assert {r["series"] for r in rows} == set(res)
    assert list(rows[0]) == ["series", "iteration", "ks", "acceptance_rate"]
    f = fraction_below(res["add_diffeo"].ks_curve, res["rwmh_diffeo"].ks_curve)
    assert 0.0 <= f <= 1.0
    cfgs = diffeo_configs("cauchy", 6)
    assert cfgs["rwmh_direct"].x0 == alternating_start(6)
    assert cfgs["add_diffeo"].diffeo_kind == "composite" and cfgs["add_direct"].diffeo_kind is None


# -- CLI -------------------------------------------------------------------------


def test_cli_run(tmp_path, capsys):
    out = tmp_path / "run.csv"
    code = main(["run", "--kernel", "additive", "--dim", "2", "--iters", "20", "--replicates", "5",
                 "--out", str(out), "--set", "coordinate_policy=first"])
    assert code == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["kernel"] == "additive"
    assert out.read_text().splitlines()[0] == "iteration,ks,acceptance_rate"


@pytest.mark.parametrize("argv,code", [
    (["table", "7"], 2),
    ([], 2),
    (["run", "--dim", "x"], 2),
    (["run", "--kernel", "nosuch"], 1),
    (["run", "--set", "dim"], 1),
    (["run", "--config", "/nonexistent/file.cfg"], 1),
])
def test_cli_errors_are_one_json_line(argv, code, capsys):
    assert main(argv) == code
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1
    payload = json.loads(err[0])
    assert set(payload) == {"error", "message"}


def test_cli_drift_and_pin0(tmp_path, capsys):
    out = tmp_path / "drift.csv"
    assert main(["drift-report", "--dim", "2", "--radii", "5,10", "--mc-samples", "500", "--out", str(out)]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["x_norm"] == [5.0, 10.0]
    assert out.read_text().splitlines()[0] == "x_norm,ratio,stderr"
    assert main(["estimate-pin0", "--dim", "1", "--n1", "20000", "--n2", "20000"]) == 0
    est = json.loads(capsys.readouterr().out)
    assert est["value"] == pytest.approx(est["exact"], rel=0.1)


def test_cli_help_exits_zero(capsys):
    assert main(["--help"]) == 0
    assert "diffeo-compare" in capsys.readouterr().out
