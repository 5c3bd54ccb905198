import json

import pytest

from emfcap.cli import main


def run_cli(args):
    return main([str(a) for a in args])


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def test_simulate_writes_trace_summary_manifest(tmp_path):
    out = tmp_path / "tr.csv"
    code = run_cli(["simulate", "--policy", "greedy_exact", "--seed", "7",
                    "--horizon", "200", "--out", out])
    assert code == 0
    assert out.exists()
    summary = read_json(tmp_path / "tr.summary.json")
    assert summary["policy"] == "greedy_exact"
    assert summary["periods"] == 200
    manifest = read_json(tmp_path / "tr.manifest.json")
    assert manifest["tool"] == "emfcap"
    assert manifest["command"] == "simulate"
    assert manifest["config"]["seed"] == 7
    assert manifest["config"]["W"] == 10
    assert "wall_clock_seconds" in manifest


def test_simulate_is_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert run_cli(["simulate", "--policy", "dpp_exact", "--seed", "7",
                        "--horizon", "300", "--load", "0.6", "--out", out]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.summary.json").read_bytes() == (tmp_path / "b.summary.json").read_bytes()


def test_simulate_zero_load_summary(tmp_path):
    out = tmp_path / "idle.csv"
    assert run_cli(["simulate", "--load", "0", "--policy", "greedy_exact",
                    "--horizon", "150", "--out", out]) == 0
    summary = read_json(tmp_path / "idle.summary.json")
    assert summary["total_served"] == 0.0
    assert summary["compliant"] is True


def test_simulate_rejects_unknown_policy(tmp_path):
    with pytest.raises(SystemExit) as exc:
        run_cli(["simulate", "--policy", "oracle", "--out", tmp_path / "x.csv"])
    assert exc.value.code == 2


def test_simulate_rejects_bad_numeric_flag(tmp_path):
    with pytest.raises(SystemExit) as exc:
        run_cli(["simulate", "--load", "lots", "--out", tmp_path / "x.csv"])
    assert exc.value.code == 2


def test_simulate_invalid_config_value_exits_2(tmp_path):
    assert run_cli(["simulate", "--horizon", "0", "--out", tmp_path / "x.csv"]) == 2
    assert run_cli(["simulate", "--rho", "1.5", "--out", tmp_path / "x.csv"]) == 2


def test_simulate_dbm_display_block(tmp_path):
    out = tmp_path / "d.csv"
    assert run_cli(["simulate", "--load", "0.3", "--horizon", "100",
                    "--c-bar-dbm", "33", "--out", out]) == 0
    summary = read_json(tmp_path / "d.summary.json")
    assert summary["display_dbm"]["threshold_dbm"] == 33
    assert summary["display_dbm"]["floor_dbm"] == pytest.approx(33 + 10 * (-0.8239087409443189), abs=1e-6)


def test_verify_accepts_emitted_trace(tmp_path, capsys):
    out = tmp_path / "tr.csv"
    run_cli(["simulate", "--policy", "greedy_exact", "--load", "0.8", "--seed", "3",
             "--horizon", "400", "--out", out])
    capsys.readouterr()
    code = run_cli(["verify", "--trace", out, "--W", "10", "--C-bar", "1.0"])
    report = json.loads(capsys.readouterr().out)
    assert code == 0
    assert report["compliant"] is True


def test_verify_flags_violating_trace(tmp_path, capsys):
    trace = tmp_path / "bad.csv"
    rows = ["c"] + ["1.1"] * 20
    trace.write_text("\n".join(rows) + "\n")
    code = run_cli(["verify", "--trace", trace, "--W", "10", "--C-bar", "1.0"])
    report = json.loads(capsys.readouterr().out)
    assert code == 1
    assert report["compliant"] is False
    assert report["worst_window_average"] == pytest.approx(1.1)
    assert report["worst_window_start"] == 10


def test_verify_malformed_csv_exits_2(tmp_path, capsys):
    missing = tmp_path / "missing.csv"
    missing.write_text("t,gamma\n0,1.0\n")
    assert run_cli(["verify", "--trace", missing, "--W", "10", "--C-bar", "1.0"]) == 2
    err = capsys.readouterr().err
    assert "missing required column" in err

    garbled = tmp_path / "garbled.csv"
    garbled.write_text("c\n0.5\nnot-a-number\n")
    assert run_cli(["verify", "--trace", garbled, "--W", "10", "--C-bar", "1.0"]) == 2
    err = capsys.readouterr().err
    assert "row 3" in err

    assert run_cli(["verify", "--trace", tmp_path / "absent.csv", "--W", "10", "--C-bar", "1"]) == 2
    assert run_cli(["verify", "--W", "10", "--C-bar", "1"]) == 2


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"load": 0.9, "horizon": 120, "seed": 5}))
    out = tmp_path / "run.csv"
    assert run_cli(["simulate", "--config", cfg, "--load", "0", "--out", out]) == 0
    summary = read_json(tmp_path / "run.summary.json")
    assert summary["periods"] == 120          # from config file
    assert summary["total_served"] == 0.0     # flag overrode the config load
    manifest = read_json(tmp_path / "run.manifest.json")
    assert manifest["config"]["load"] == 0.0
    assert manifest["config"]["horizon"] == 120


def test_config_file_unknown_key_exits_2(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"loda": 0.9}))
    assert run_cli(["simulate", "--config", cfg, "--out", tmp_path / "x.csv"]) == 2


def test_manifest_rerun_reproduces_outputs(tmp_path):
    a = tmp_path / "a.csv"
    assert run_cli(["simulate", "--policy", "dpp_conservative", "--seed", "11",
                    "--load", "0.7", "--horizon", "250", "--out", a]) == 0
    b = tmp_path / "b.csv"
    assert run_cli(["simulate", "--config", tmp_path / "a.manifest.json", "--out", b]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.summary.json").read_bytes() == (tmp_path / "b.summary.json").read_bytes()


def test_env_var_seed_default(tmp_path, monkeypatch):
    flagged = tmp_path / "f.csv"
    run_cli(["simulate", "--seed", "9", "--horizon", "100", "--out", flagged])
    monkeypatch.setenv("EMFCAP_SEED", "9")
    via_env = tmp_path / "e.csv"
    run_cli(["simulate", "--horizon", "100", "--out", via_env])
    assert flagged.read_bytes() == via_env.read_bytes()


def test_sweep_v_single_point_echo(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code = run_cli(["sweep-v", "--loads", "0.2", "--v-grid", "12", "--reps", "2",
                    "--horizon", "80", "--out", out])
    assert code == 0
    rows = json.loads(capsys.readouterr().out)
    assert rows[0]["v_star"] == 12.0
    lines = out.read_text().splitlines()
    assert lines[0] == "load,v_star,mean_score,ci_half_width"
    assert len(lines) == 2
    assert (tmp_path / "sweep.manifest.json").exists()
    assert (tmp_path / "sweep.json").exists()


def test_sweep_v_empty_grid_exits_2(tmp_path):
    assert run_cli(["sweep-v", "--loads", "", "--v-grid", "12",
                    "--out", tmp_path / "s.csv"]) == 2


def test_compare_budgets_zero_load(tmp_path, capsys):
    out = tmp_path / "cmp.csv"
    code = run_cli(["compare-budgets", "--loads", "0", "--reps", "2",
                    "--horizon", "100", "--out", out])
    assert code == 0
    rows = json.loads(capsys.readouterr().out)
    assert rows[0]["mean_gap"] == 0.0
    header = out.read_text().splitlines()[0]
    assert header == "load,mean_budget_exact,mean_budget_conservative,mean_gap,all_above_frac"


def test_compare_budgets_manifest_rerun(tmp_path):
    a = tmp_path / "cmp.csv"
    assert run_cli(["compare-budgets", "--loads", "0.1,0.4", "--reps", "2",
                    "--horizon", "120", "--seed", "3", "--out", a]) == 0
    b = tmp_path / "cmp2.csv"
    assert run_cli(["compare-budgets", "--config", tmp_path / "cmp.manifest.json",
                    "--out", b]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_bench_small_grid_shape(tmp_path, capsys):
    out = tmp_path / "bench.csv"
    code = run_cli(["bench", "--w-grid", "4,16", "--updates", "500", "--out", out])
    assert code == 0
    rows = json.loads(capsys.readouterr().out)
    assert {r["algorithm"] for r in rows} == {"scratch", "exact_update", "conservative_update"}
    assert {r["window_w"] for r in rows} == {4, 16}
    for row in rows:
        assert row["p50_ns"] > 0
        assert row["p99_ns"] >= row["p50_ns"]
    lines = out.read_text().splitlines()
    assert lines[0] == "algorithm,workload,window_w,updates,p50_ns,p99_ns"
    assert len(lines) == 9


def test_bench_rejects_bad_updates(tmp_path):
    assert run_cli(["bench", "--w-grid", "4", "--updates", "0",
                    "--out", tmp_path / "b.csv"]) == 2
