import dataclasses
import json

import numpy as np
import pytest

from bftest import SimulationConfig, run_experiment
from bftest.cli import main
from bftest.reporting import (
    CSV_HEADER,
    config_from_mapping,
    format_pretty_table,
    parse_size_csv,
    size_table_to_csv,
    size_table_to_json,
)


@pytest.fixture(scope="module")
def small_table():
    cfg = SimulationConfig(reps=40, seed=5, k_list=(5, 2), n_list=(25, 50))
    return run_experiment(cfg)


class TestSerialization:
    def test_csv_round_trip_reproduces_counts(self, small_table):
        text = size_table_to_csv(small_table)
        parsed = parse_size_csv(text)
        assert set(parsed) == set(small_table.cells)
        for key, cc in small_table.cells.items():
            assert dataclasses.asdict(parsed[key]) == dataclasses.asdict(cc)

    def test_csv_layout(self, small_table):
        lines = size_table_to_csv(small_table).splitlines()
        assert lines[0] == CSV_HEADER
        # deterministic ordering: k-major, then n, then statistic order
        assert lines[1].startswith("5,25,W,")
        assert len(lines) == 1 + 2 * 2 * 8

    def test_csv_rejects_tampered_sizes(self, small_table):
        text = size_table_to_csv(small_table)
        lines = text.splitlines()
        k, n, name, rej, valid, excl, _ = lines[1].split(",")
        lines[1] = ",".join([k, n, name, rej, valid, excl, "0.123"])
        with pytest.raises(ValueError):
            parse_size_csv("\n".join(lines))

    def test_json_payload(self, small_table):
        payload = json.loads(size_table_to_json(small_table))
        assert payload["config"]["reps"] == 40
        assert len(payload["cells"]) == 2 * 2 * 8
        first = payload["cells"][0]
        assert set(first) == {
            "k", "n", "statistic", "rejections", "valid_reps", "excluded",
            "empirical_size",
        }
        meta = {(m["k"], m["n"]) for m in payload["meta"]}
        assert meta == {(5, 25), (5, 50), (2, 25), (2, 50)}

    def test_pretty_table_formatting(self, small_table):
        text = format_pretty_table(small_table)
        assert "W*" in text and "BFc-transform" in text
        size = small_table.empirical_size(5, 25, "W")
        assert f"{size:.4f}" in text

    def test_config_mapping_rejects_unknown_keys(self):
        with pytest.raises(ValueError):
            config_from_mapping({"reps": 10, "bogus": 1})

    def test_config_mapping_coerces_sequences(self):
        cfg = config_from_mapping({"k_list": [5], "n_list": [25], "reps": 3})
        assert cfg.k_list == (5,)
        cfg.validate()


def _write_dataset(path, theta, n=100, noise=0.0, seed=2):
    rng = np.random.default_rng(seed)
    X = rng.uniform(size=(n, 2))
    y = X @ np.asarray(theta, dtype=float)
    if noise:
        y = y + noise * rng.normal(size=n)
    rows = ["y,x1,x2"] + [
        f"{float(y[i])!r},{float(X[i, 0])!r},{float(X[i, 1])!r}" for i in range(n)
    ]
    path.write_text("\n".join(rows) + "\n")


class TestSimulateCommand:
    def test_csv_output(self, capsys):
        code = main(
            ["simulate", "--reps", "30", "--k", "5", "--n", "25", "--seed", "3",
             "--out", "csv"]
        )
        assert code == 0
        out = capsys.readouterr().out
        parsed = parse_size_csv(out)
        assert (5, 25, "W") in parsed
        assert parsed[(5, 25, "W")].valid == 30

    def test_table_output_bounds(self, capsys):
        code = main(
            ["simulate", "--reps", "25", "--k", "2", "--k", "-2", "--n", "25",
             "--seed", "1", "--out", "table"]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "BFc-transform" in out

    def test_json_output_and_file(self, tmp_path, capsys):
        target = tmp_path / "sizes.json"
        code = main(
            ["simulate", "--reps", "20", "--k", "5", "--n", "25", "--seed", "3",
             "--out", "json", "--output", str(target)]
        )
        assert code == 0
        payload = json.loads(target.read_text())
        assert payload["cells"]

    def test_bfc_variant_filter(self, capsys):
        code = main(
            ["simulate", "--reps", "10", "--k", "5", "--n", "25", "--seed", "3",
             "--out", "csv", "--bfc-variant", "transform"]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "BFc-transform" in out
        assert "BFc-direct" not in out

    def test_bad_alpha_is_config_error(self, capsys):
        assert main(["simulate", "--alpha", "2.0", "--reps", "5"]) == 2

    def test_config_file_roundtrip(self, tmp_path, capsys):
        cfg = tmp_path / "exp.toml"
        cfg.write_text(
            "[simulate]\nreps = 15\nseed = 44\nk_list = [5]\nn_list = [25]\n"
        )
        code = main(["simulate", "--config", str(cfg), "--out", "csv"])
        assert code == 0
        out = capsys.readouterr().out
        assert parse_size_csv(out)[(5, 25, "W")].valid == 15

    def test_config_file_flag_override(self, tmp_path, capsys):
        cfg = tmp_path / "exp.toml"
        cfg.write_text("[simulate]\nreps = 15\nk_list = [5]\nn_list = [25]\n")
        code = main(
            ["simulate", "--config", str(cfg), "--reps", "7", "--out", "csv"]
        )
        assert code == 0
        assert parse_size_csv(capsys.readouterr().out)[(5, 25, "W")].valid == 7

    def test_config_file_unknown_key(self, tmp_path):
        cfg = tmp_path / "exp.toml"
        cfg.write_text("[simulate]\nreps = 15\nnot_a_key = 1\n")
        assert main(["simulate", "--config", str(cfg)]) == 2

    def test_config_file_unknown_section(self, tmp_path):
        cfg = tmp_path / "exp.toml"
        cfg.write_text("[simulte]\nreps = 15\n")
        assert main(["simulate", "--config", str(cfg)]) == 2


class TestTestCommand:
    def test_no_noise_null_dataset(self, tmp_path, capsys):
        data = tmp_path / "d.csv"
        _write_dataset(data, [1.0, 1.0])
        code = main(
            ["test", str(data), "--restriction", "linear: beta=1",
             "--reparam", "power-root: k=5"]
        )
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        names = [e["name"] for e in payload]
        assert names == ["W", "BF", "LM", "D", "BFc-transform", "BFc-direct"]
        for entry in payload:
            assert abs(entry["value"]) < 1e-12
            assert entry["p_value"] == pytest.approx(1.0)

    def test_far_alternative_rejects(self, tmp_path, capsys):
        data = tmp_path / "d.csv"
        _write_dataset(data, [1.0, 3.0], noise=1.0)
        code = main(["test", str(data), "--restriction", "linear: beta=1"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        for entry in payload:
            assert entry["p_value"] < 0.001

    def test_power_restriction_spec(self, tmp_path, capsys):
        data = tmp_path / "d.csv"
        _write_dataset(data, [1.0, 1.0], noise=0.5)
        code = main(["test", str(data), "--restriction", "power: k=2"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert [e["name"] for e in payload] == ["W", "BF", "LM", "D"]

    def test_domain_violation_reported_as_diagnostic(self, tmp_path, capsys):
        data = tmp_path / "d.csv"
        _write_dataset(data, [1.0, -1.0], noise=0.05)  # beta_hat < 0
        code = main(
            ["test", str(data), "--restriction", "power: k=2",
             "--reparam", "power-root: k=2"]
        )
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        bfc = [e for e in payload if e["name"].startswith("BFc")]
        assert len(bfc) == 2
        assert all(e.get("error") == "domain-violation" for e in bfc)

    def test_missing_file_exit_2(self):
        assert main(["test", "/nonexistent.csv", "--restriction", "linear: beta=1"]) == 2

    def test_bad_restriction_spec_exit_2(self, tmp_path):
        data = tmp_path / "d.csv"
        _write_dataset(data, [1.0, 1.0])
        assert main(["test", str(data), "--restriction", "quadratic: a=1"]) == 2

    def test_estimate_sigma2_flag(self, tmp_path, capsys):
        data = tmp_path / "d.csv"
        _write_dataset(data, [1.0, 1.2], noise=0.7, seed=9)
        code = main(
            ["test", str(data), "--restriction", "linear: beta=1", "--estimate-sigma2"]
        )
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert all(0.0 <= e["p_value"] <= 1.0 for e in payload)


class TestAuditCommand:
    def test_power_pair_passes(self, capsys):
        code = main(["audit", "--pair", "power", "--k", "2", "--point", "1,1.2"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert {e["condition"] for e in payload} == {"B1", "B2", "B3", "B6"}
        assert all(e["pass"] for e in payload)
        assert all(set(e) == {"condition", "residual", "tolerance", "pass"} for e in payload)

    def test_gregory_veall_fails_b2(self, capsys):
        code = main(["audit", "--pair", "gregory-veall", "--star-point", "1,2"])
        assert code == 3
        payload = json.loads(capsys.readouterr().out)
        entries = {e["condition"]: e for e in payload}
        assert not entries["B2"]["pass"]
        assert entries["B2"]["residual"] > 1e-3
        assert entries["B6"]["pass"]

    def test_default_points(self, capsys):
        assert main(["audit", "--pair", "power", "--k", "-5"]) == 0
        capsys.readouterr()
        assert main(["audit", "--pair", "gregory-veall"]) == 3
        capsys.readouterr()

    def test_stable_output(self, capsys):
        main(["audit", "--pair", "power", "--k", "2"])
        first = capsys.readouterr().out
        main(["audit", "--pair", "power", "--k", "2"])
        second = capsys.readouterr().out
        assert first == second

    def test_custom_numeric_audit(self, tmp_path, capsys):
        spec = tmp_path / "m.json"
        spec.write_text(
            json.dumps(
                {
                    "G": [[1.0, 4.0]],
                    "K": [[2.0, 2.0], [0.0, -0.25]],
                    "G_star": [[2.0, 1.0]],
                    "g": [0.5],
                    "g_star": [0.5],
                }
            )
        )
        code = main(["audit", "--pair", "custom", "--matrices", str(spec)])
        assert code == 3  # B2 fails for these matrices
        payload = json.loads(capsys.readouterr().out)
        entries = {e["condition"]: e for e in payload}
        assert entries["B1"]["pass"] and entries["B6"]["pass"]
        assert not entries["B2"]["pass"]

    def test_both_points_rejected(self):
        assert main(["audit", "--pair", "power", "--point", "1,1", "--star-point", "1,1"]) == 2

    def test_custom_without_matrices_exit_2(self):
        assert main(["audit", "--pair", "custom"]) == 2
