import csv

import numpy as np
import pytest

from backbone import harness
from backbone.cli import main
from backbone.config import ExperimentConfig, Kind, Method, build_config, parse_config, parse_seeds
from backbone.errors import ConfigError, DuplicateKey, InfeasibleConfig, MissingRequired, UnknownKey
from backbone.harness import make_data, mean_std, read_results, run_experiment, run_method, write_results

SMALL = dict(n="80", p="40", k="3", snr="10", n_test="200")


def test_empty_file_gives_defaults(tmp_path):
    f = tmp_path / "c.txt"
    f.write_text("")
    assert parse_config(f) == ExperimentConfig()


def test_missing_required_for_csv_kind(tmp_path):
    f = tmp_path / "c.txt"
    f.write_text("kind = real_csv\n")
    with pytest.raises(MissingRequired) as err:
        parse_config(f)
    assert err.value.keys == ["csv_path"]


def test_duplicate_key_reports_line(tmp_path):
    f = tmp_path / "c.txt"
    f.write_text("# comment\nn = 100\n\np = 20\nn = 200\n")
    with pytest.raises(DuplicateKey) as err:
        parse_config(f)
    assert (err.value.key, err.value.line) == ("n", 5)


def test_unknown_key_and_bad_lines(tmp_path):
    f = tmp_path / "c.txt"
    f.write_text("n = 10\nbogus = 1\n")
    with pytest.raises(UnknownKey) as err:
        parse_config(f)
    assert err.value.line == 2
    f.write_text("just words\n")
    with pytest.raises(ConfigError):
        parse_config(f)
    f.write_text("n = ten\n")
    with pytest.raises(ConfigError):
        parse_config(f)


def test_flag_override_beats_file(tmp_path):
    f = tmp_path / "c.txt"
    f.write_text("n = 100\nmethod = exact_sr\nbeta = 0.3\nseeds = 0-2\n")
    cfg = parse_config(f, {"n": "250", "method": "sis_enet", "beta": "0.7"})
    assert (cfg.n, cfg.method, cfg.beta) == (250, Method.SIS_ENET, 0.7)
    assert cfg.seeds == (0, 1, 2)


def test_typed_values_and_validation():
    cfg = build_config({"kind": "synth_tree", "method": "cart", "nmin_grid": "1,5", "alpha": "none", "k": "3"})
    assert cfg.kind is Kind.SYNTH_TREE and cfg.nmin_grid == (1, 5) and cfg.alpha is None
    assert parse_seeds("3,1-2") == (3, 1, 2)
    with pytest.raises(InfeasibleConfig):
        build_config({"method": "cart"})  # regression data
    with pytest.raises(InfeasibleConfig):
        build_config({"rho": "1.5"})
    with pytest.raises(InfeasibleConfig):
        build_config({"seeds": ""})


def test_hash_ignores_run_keys():
    a = build_config({"seeds": "0-3", "output": "a.csv"})
    b = build_config({"seeds": "5", "output": "b.csv", "workers": "3"})
    assert a.hash() == b.hash() != build_config({"n": "501"}).hash()


# runs --------------------------------------------------------------------------


def test_single_seed_oracle_rows():
    cfg = build_config(dict(SMALL, method="oracle", seeds="4", name="tiny"))
    res = run_experiment(cfg, workers=1)
    rows = res.rows()
    metrics = [m for m, _ in res.outcomes[0].metrics]
    per_seed = [r for r in rows if r[3] == "4"]
    assert [r[4] for r in per_seed] == metrics
    for label in ("mean", "std"):
        assert [r[4] for r in rows if r[3] == label] == metrics
    assert all(r[:3] == ("tiny", cfg.hash(), harness.VERSION) for r in rows)
    vals = dict(res.outcomes[0].metrics)
    assert vals["sr_acc"] == 1.0 and vals["sr_fa"] == 0.0 and vals["r2"] > 0.8


def test_ten_seed_aggregates_match_recomputation(tmp_path):
    cfg = build_config(dict(SMALL, method="sis_enet", seeds="0-9", enet_grid="5"))
    res = run_experiment(cfg, workers=1)
    out = tmp_path / "r.csv"
    write_results(res, out)
    rows = read_results(out)
    metrics = {r["metric"] for r in rows}
    for m in metrics:
        vals = [float(r["value"]) for r in rows if r["metric"] == m and r["seed"].isdigit()]
        assert len(vals) == 10
        mean = next(float(r["value"]) for r in rows if r["metric"] == m and r["seed"] == "mean")
        std = next(float(r["value"]) for r in rows if r["metric"] == m and r["seed"] == "std")
        assert mean == pytest.approx(sum(vals) / 10, rel=1e-12, abs=1e-15)
        var = sum((v - sum(vals) / 10) ** 2 for v in vals) / 9
        assert std == pytest.approx(var**0.5, rel=1e-9, abs=1e-15)
    timing_rows = list(csv.DictReader(open(harness.timings_path(out))))
    assert {r["phase"] for r in timing_rows} == {"data", "fit", "metrics"}


def test_backbone_with_large_budget_equals_exact_sr():
    base = dict(n="120", p="300", k="5", snr="3", rho="0.3", alpha="0.1", B_max="30", n_test="50")
    for seed in range(3):
        cfg_b = build_config(dict(base, method="backbone"))
        cfg_e = build_config(dict(base, method="exact_sr"))
        data = make_data(cfg_b, seed)
        sb, _ = run_method(cfg_b, data, seed)
        se, _ = run_method(cfg_e, data, seed)
        np.testing.assert_array_equal(sb.support, se.support)
        np.testing.assert_array_equal(sb.w, se.w)


def test_seed_errors_become_records(monkeypatch):
    real = harness.run_method

    def flaky(cfg, data, seed):
        if seed == 1:
            raise np.linalg.LinAlgError("singular")
        return real(cfg, data, seed)

    monkeypatch.setattr(harness, "run_method", flaky)
    res = run_experiment(build_config(dict(SMALL, method="oracle", seeds="0-2")), workers=1)
    assert res.failed == [1] and harness.exit_code(res) == 2
    err = [r for r in res.rows() if r[4] == "error"]
    assert err == [(res.config.name, res.config.hash(), harness.VERSION, "1", "error", "LinAlgError")]
    assert all(len(v) == 2 for v in harness.aggregate_inputs(res.outcomes).values())


def test_mean_std_single_value():
    assert mean_std([3.0]) == (3.0, 0.0)


def test_worker_env_fallback(monkeypatch):
    monkeypatch.setenv("BACKBONE_WORKERS", "3")
    assert harness.worker_count(ExperimentConfig()) == 3
    assert harness.worker_count(ExperimentConfig(workers=2)) == 2
    monkeypatch.delenv("BACKBONE_WORKERS")
    assert harness.worker_count(ExperimentConfig()) == 1


def test_tree_kind_runs_all_methods():
    base = dict(kind="synth_tree", n="300", p="20", depth="2", k="3", n_test="300", seeds="0",
                tree_depth="2", restarts="2", alpha="1.0", M="4", B_max="10")
    for method in ("oracle", "cart", "oct_local_search", "backbone"):
        res = run_experiment(build_config(dict(base, method=method)), workers=1)
        assert not res.failed
        vals = dict(res.outcomes[0].metrics)
        assert 0.0 <= vals["fraction_relevant"] <= 1.0 and vals["depth"] <= 2
        if method == "oracle":
            assert vals["auc"] == 1.0 and vals["accuracy"] == 1.0


def test_real_csv_with_expansion(tmp_path):
    rng = np.random.default_rng(0)
    X = rng.normal(size=(120, 4))
    y = X @ np.array([1.0, -1.0, 0.5, 0.0]) + 0.1 * rng.normal(size=120)
    f = tmp_path / "d.csv"
    np.savetxt(f, np.column_stack([X, y]), delimiter=",")
    cfg = build_config(dict(kind="real_csv", csv_path=str(f), expand_copies="5", method="oracle", sr_k="3",
                            seeds="0-1"))
    res = run_experiment(cfg, workers=1)
    assert not res.failed
    vals = dict(res.outcomes[0].metrics)
    assert vals["original_fraction"] == 1.0 and vals["r2"] > 0.9


# CLI -----------------------------------------------------------------------------


def test_cli_pipeline(tmp_path, capsys):
    data = tmp_path / "lin.csv"
    assert main(["gen", "linear", "--n", "60", "--p", "12", "--k", "2", "--snr", "100", "--out", str(data),
                 "--truth", str(tmp_path / "t.csv")]) == 0
    assert main(["screen", str(data), "--alpha", "0.5"]) == 0
    assert main(["sr", str(data), "--k", "2", "--out", str(tmp_path / "s.csv")]) == 0
    assert "status=optimal" in capsys.readouterr().out
    assert main(["backbone", str(data), "--k", "2", "--k_max", "2", "--M", "3", "--B_max", "4",
                 "--provenance", str(tmp_path / "p.csv")]) == 0
    assert main(["advise", "--n", "500", "--p", "5000", "--k", "10"]) == 0

    tree_data = tmp_path / "tree.csv"
    assert main(["gen", "tree", "--n", "200", "--p", "6", "--depth", "2", "--k", "3", "--out", str(tree_data)]) == 0
    out = tmp_path / "tree.txt"
    assert main(["tree", str(tree_data), "--depth", "2", "--out", str(out)]) == 0
    assert out.read_text().startswith("classes")


def test_cli_experiment_exit_codes(tmp_path):
    cfg = tmp_path / "c.txt"
    out = tmp_path / "r.csv"
    cfg.write_text(f"n = 60\np = 20\nk = 2\nn_test = 50\nmethod = oracle\nseeds = 0-1\noutput = {out}\n")
    assert main(["experiment", str(cfg)]) == 0
    assert out.exists()
    assert main(["experiment", str(cfg), "--kind", "real_csv"]) == 1
    cfg.write_text("n = 60\nn = 70\n")
    assert main(["experiment", str(cfg)]) == 1
