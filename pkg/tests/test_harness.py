import csv
import math

import numpy as np
import pytest

from contagion_privacy.cascade import SeedPolicy, generate_ground_truth, write_ground_truth_csv
from contagion_privacy.harness import ALL_VARIANTS, ConfigError, ExperimentConfig, parse_config_text, run_experiment
from contagion_privacy.harness.cli import main
from contagion_privacy.harness.config import NetworkConfig, parse_network
from contagion_privacy.harness.runner import RunRecord, anchor_relative, child_seed, summarize, sweep_order
from contagion_privacy.graph import load_edge_list

SMALL = """
seed = 3
network = erdos-renyi, nodes=80
network = core-periphery, nodes=500
beta = 0.1, 0.5
beta = 0.9
variant = Bayesian
variant = CO-DAG
variant = O-RND
cascades = 2
"""


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_parse_config():
    cfg = parse_config_text(SMALL + "solver.max_iterations = 3\nwindow = 0.2, 0.8\nsweep_eta = 0.01, 0.02\n")
    assert cfg.seed == 3 and cfg.cascades == 2
    assert cfg.betas == [0.1, 0.5, 0.9]
    assert cfg.variants == ["Bayesian", "CO-DAG", "O-RND"]
    assert [n.kind for n in cfg.networks] == ["erdos-renyi", "core-periphery"]
    assert cfg.networks[0].nodes == 80
    assert cfg.solver.max_iterations == 3
    assert cfg.size_window == (0.2, 0.8)
    assert cfg.sweep_eta == [0.01, 0.02]


@pytest.mark.parametrize("text", ["beta = 1.0", "variant = CO-XYZ", "cascades = 0", "bogus = 1", "network = ring",
                                  "network = erdos-renyi, size=3", "solver.nope = 1", "seed = abc", "just words",
                                  "solver.max_iterations = 0"])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config_text(text)


def test_network_defaults():
    assert parse_network("hierarchical").seed_policy().value == 50
    assert parse_network("power-law").seed_policy().value == 5
    file_net = parse_network("file:data/grqc.txt, directed=0")
    assert file_net.name == "grqc" and not file_net.directed
    assert file_net.seed_policy() == SeedPolicy("fraction", 0.05)
    assert parse_network("erdos-renyi, seeds=0.1").seed_policy().mode == "fraction"


def test_child_seeds_are_keyed():
    a = child_seed(1, 2, 0, 3).generate_state(2)
    assert (a == child_seed(1, 2, 0, 3).generate_state(2)).all()
    assert (a != child_seed(1, 2, 0, 4).generate_state(2)).any()
    assert (a != child_seed(2, 2, 0, 3).generate_state(2)).any()


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    cfg = parse_config_text(SMALL)
    return cfg, run_experiment(cfg, out_dir=out)


def test_row_count_is_cartesian(small_run):
    cfg, res = small_run
    rows = _rows(res.out_dir / "results.csv")
    errors = _rows(res.out_dir / "errors.csv")
    assert len(rows) == len(cfg.networks) * cfg.cascades * len(cfg.betas) * len(cfg.variants) - len(errors)
    assert len(errors) == 0


def test_epsilon_column(small_run):
    _, res = small_run
    for r in _rows(res.out_dir / "results.csv"):
        beta = float(r["beta"])
        assert abs(float(r["epsilon"]) - math.log((1 + beta) / (1 - beta))) < 1e-12
        assert len(r["auc"].split(".")[1]) == 4


def test_pernode_and_summary(small_run):
    cfg, res = small_run
    pn = _rows(res.out_dir / "pernode.csv")
    results = _rows(res.out_dir / "results.csv")
    assert len(pn) == sum(int(r["nodes"]) for r in results)
    acc = [float(r["expected_accuracy"]) for r in pn]
    assert all(0 <= a <= 1 for a in acc)
    summary = _rows(res.out_dir / "summary.csv")
    assert len(summary) == len(cfg.networks) * len(cfg.betas) * len(cfg.variants)
    assert (res.out_dir / "timing.csv").exists()


def test_variants_share_cascades(small_run):
    _, res = small_run
    rows = _rows(res.out_dir / "results.csv")
    by_key = {}
    for r in rows:
        by_key.setdefault((r["network"], r["cascade"]), set()).add(r["cascade_fraction"])
    assert all(len(v) == 1 for v in by_key.values())


def test_rerun_is_byte_identical(small_run, tmp_path):
    cfg, res = small_run
    again = run_experiment(cfg, out_dir=tmp_path)
    for name in ("results.csv", "pernode.csv", "summary.csv"):
        assert (again.out_dir / name).read_bytes() == (res.out_dir / name).read_bytes()


def test_adding_a_variant_keeps_other_runs(small_run, tmp_path):
    cfg, res = small_run
    more = parse_config_text(SMALL + "variant = CO-RND\n")
    out = run_experiment(more, out_dir=tmp_path, pernode=False)
    old = {(r["network"], r["cascade"], r["beta"], r["variant"]): r["auc"] for r in _rows(res.out_dir / "results.csv")}
    new = {(r["network"], r["cascade"], r["beta"], r["variant"]): r["auc"] for r in _rows(out.out_dir / "results.csv")}
    assert all(new[k] == v for k, v in old.items())


def test_parallel_matches_serial(small_run, tmp_path):
    cfg, res = small_run
    par = run_experiment(cfg, out_dir=tmp_path, jobs=2, pernode=False)
    assert (par.out_dir / "results.csv").read_bytes() == (res.out_dir / "results.csv").read_bytes()


def test_failed_network_is_error_marked(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("0 0\n")
    cfg = parse_config_text(f"network = file:{bad}\nnetwork = erdos-renyi, nodes=60\ncascades = 1\nvariant = Bayesian\n")
    res = run_experiment(cfg, out_dir=tmp_path / "o")
    errs = _rows(tmp_path / "o" / "errors.csv")
    assert len(errs) == 1 and errs[0]["network"] == "bad"
    assert len(_rows(tmp_path / "o" / "results.csv")) == 1
    assert not res.ok


def _rec(auc, beta=0.5, variant="CO-DAG"):
    eps = math.log((1 + beta) / (1 - beta))
    return RunRecord("net", 10, 0, 0.5, beta, eps, variant, auc, 1 - 1 / (math.exp(eps) + 1))


def test_summarize_examples():
    assert summarize([_rec(0.8)] * 10)[0]["auc_std"] == "0.0000"
    row = summarize([_rec(0.8), _rec(0.9)])[0]
    assert row["_mean"] == pytest.approx(0.85)
    assert summarize([_rec(0.7501)])[0]["beats_bound"] == 1
    assert summarize([_rec(0.75)])[0]["beats_bound"] == 0


def test_anchoring():
    assert anchor_relative([0.01], [0.8], "eta") == [0.0]
    assert anchor_relative([3], [0.8], "n_max") == [0.0]
    aucs = [0.7, 0.75, 0.72, 0.8]
    for param in ("eta", "n_max"):
        rel = anchor_relative(range(4), aucs, param)
        assert np.allclose(np.diff(rel), np.diff(aucs))
    assert anchor_relative(range(4), aucs, "eta")[-1] == 0.0
    assert anchor_relative(range(4), aucs, "n_max")[0] == 0.0
    etas = [0.01 * 2 ** k for k in range(7)]
    assert sweep_order("eta", etas)[-1] == 0.01 and len(sweep_order("eta", etas)) == 7
    assert sweep_order("n_max", [50, 3, 10]) == [3, 10, 50]


def test_sweep_output(tmp_path):
    text = ("network = erdos-renyi, nodes=80\nbeta = 0.5, 0.9\ncascades = 2\n"
            "sweep_eta = 0.01, 0.02, 0.04, 0.08, 0.16, 0.32, 0.64\nsweep_n_max = 5\n")
    (tmp_path / "s.cfg").write_text(text)
    assert main(["sweep", "--config", str(tmp_path / "s.cfg"), "--out", str(tmp_path / "o")]) == 0
    rows = _rows(tmp_path / "o" / "sweep.csv")
    eta_rows = [r for r in rows if r["param"] == "eta"]
    assert len(eta_rows) == 7 * 2
    for beta in ("0.5", "0.9"):
        curve = [r for r in eta_rows if r["beta"] == beta]
        assert curve[-1]["value"] == "0.01" and curve[-1]["auc_rel"] == "0.0000"
    assert all(r["auc_rel"] == "0.0000" for r in rows if r["param"] == "n_max")


def test_cli_run_and_exit_codes(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("network = erdos-renyi, nodes=60\nbeta = 0.5\nvariant = Bayesian\nvariant = CO-DAG\ncascades = 1\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "a"), "--seed", "4"]) == 0
    assert "CO-DAG" in capsys.readouterr().out
    assert main(["run", "--config", str(tmp_path / "missing.cfg")]) == 1
    (tmp_path / "bad.cfg").write_text("beta = 2\n")
    assert main(["run", "--config", str(tmp_path / "bad.cfg")]) == 1
    (tmp_path / "loop.txt").write_text("0 0\n")
    (tmp_path / "p.cfg").write_text(f"network = file:{tmp_path / 'loop.txt'}\nnetwork = erdos-renyi, nodes=60\n"
                                    "variant = Bayesian\ncascades = 1\n")
    assert main(["run", "--config", str(tmp_path / "p.cfg"), "--out", str(tmp_path / "p")]) == 2


def test_cli_gen_and_eval(tmp_path, capsys):
    edge_file = tmp_path / "er.txt"
    assert main(["gen", "erdos-renyi, nodes=100", "--seed", "1", "--out", str(edge_file)]) == 0
    g = load_edge_list(edge_file)
    assert g.meta["weighted"] and g.node_count > 50
    truth = generate_ground_truth(g, SeedPolicy(), 0)
    write_ground_truth_csv(truth, tmp_path / "gt.csv")
    with open(tmp_path / "x.csv", "w") as fh:
        fh.write("node_id,x_hat\n")
        for v, x in enumerate(truth.x.tolist()):
            fh.write(f"{v},{x}\n")
    capsys.readouterr()
    assert main(["eval", str(tmp_path / "x.csv"), str(tmp_path / "gt.csv"), "--beta", "0.5"]) == 0
    assert '"auc": 1.0' in capsys.readouterr().out


def test_config_object_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(variants=[])
    with pytest.raises(ConfigError):
        ExperimentConfig(networks=[])
    assert ExperimentConfig().variants == list(ALL_VARIANTS)
    assert NetworkConfig("erdos-renyi", label="er500").name == "er500"
