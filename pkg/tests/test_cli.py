import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from ionqsim.bloch import rabi_excitation_probability
from ionqsim.cli import run


def read_artifact(path):
    meta, columns, rows = {}, None, []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                key, value = line[1:].strip().split("=", 1)
                meta[key] = value
            elif columns is None:
                columns = line.split(",")
            else:
                rows.append(line.split(","))
    return meta, columns, rows


class TestDeterminism:
    def test_zeno_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        argv = ["zeno", "--fractions", "10", "--sequences", "200", "--seed", "7"]
        assert run(argv + ["--out", str(a)]) == 0
        assert run(argv + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_estimate_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        argv = ["estimate", "--strategy", "random", "--n", "2", "--states", "30",
                "--seed", "3"]
        assert run(argv + ["--out", str(a)]) == 0
        assert run(argv + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_seed_changes_output(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run(["zeno", "--fractions", "3", "--sequences", "100", "--seed", "1",
             "--out", str(a)])
        run(["zeno", "--fractions", "3", "--sequences", "100", "--seed", "2",
             "--out", str(b)])
        assert a.read_bytes() != b.read_bytes()


class TestArtifactFormat:
    def test_header_metadata(self, tmp_path):
        out = tmp_path / "scan.csv"
        assert run(["rabi", "--points", "10", "--seed", "5", "--out", str(out)]) == 0
        meta, columns, rows = read_artifact(out)
        assert meta["seed"] == "5"
        assert meta["version"]
        assert len(meta["config_hash"]) == 12
        assert columns == ["pulse_length_s", "p1"]
        assert len(rows) == 10

    def test_floats_round_trip(self, tmp_path):
        # 17 significant digits parse back to the exact same float
        out = tmp_path / "scan.csv"
        run(["rabi", "--rabi-khz", "2", "--tmax-ms", "2", "--points", "50",
             "--out", str(out)])
        _, _, rows = read_artifact(out)
        omega = 2.0 * math.pi * 2.0 * 1e3
        for t_str, p_str in rows:
            t, p = float(t_str), float(p_str)
            assert p == rabi_excitation_probability(omega, 0.0, t)

    def test_json_meta(self, tmp_path):
        out = tmp_path / "chain.json"
        assert run(["chain", "--n", "3", "--seed", "9", "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert payload["meta"]["seed"] == 9
        assert payload["meta"]["version"]
        assert payload["weak_field_limit"] is True
        assert len(payload["J_hz"]) == 3


class TestChain:
    def test_table_one_value(self, tmp_path, capsys):
        out = tmp_path / "chain.json"
        assert run(["chain", "--species", "yb171", "--n", "10", "--nu1-khz", "100",
                    "--gradient", "25", "--table", "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert payload["J_hz"][1][0] == pytest.approx(54.61, rel=0.01)
        table = capsys.readouterr().out
        lines = table.strip().splitlines()
        assert len(lines) == 11             # header + one row per ion
        assert lines[2].split() == ["2", "54.35"]

    def test_unknown_species_is_config_error(self):
        assert run(["chain", "--species", "unobtainium"]) == 2

    def test_payload_keys(self, tmp_path):
        out = tmp_path / "chain.json"
        run(["chain", "--n", "4", "--out", str(out)])
        payload = json.loads(out.read_text())
        for key in ("zeta", "positions_um", "mode_freqs_khz", "required_gradient", "J_hz"):
            assert key in payload


class TestRabi:
    def test_ramsey_mode(self, tmp_path):
        out = tmp_path / "fringes.csv"
        assert run(["rabi", "--ramsey", "--rabi-khz", "50", "--detuning-hz", "103.9",
                    "--tmax-ms", "15", "--points", "40", "--out", str(out)]) == 0
        _, columns, rows = read_artifact(out)
        assert columns == ["precession_time_s", "p1"]
        assert float(rows[0][1]) == pytest.approx(1.0, abs=1e-4)


class TestEstimateExample:
    def test_self_learning_summary_matches_paper_band(self, tmp_path, capsys):
        # 1000 ideal states at N=12 lands near the 92.5% reference value
        out = tmp_path / "fid.csv"
        assert run(["estimate", "--strategy", "self", "--n", "12", "--states", "1000",
                    "--seed", "1", "--out", str(out)]) == 0
        summary = json.loads((tmp_path / "fid.json").read_text())
        assert 0.905 <= summary["mean"] <= 0.945
        assert summary["strategy"] == "self_learning"
        assert summary["N"] == 12
        _, _, rows = read_artifact(out)
        assert len(rows) == 1000
        capsys.readouterr()   # swallow the stdout copy of the summary


class TestConfigMerging:
    def test_config_file_supplies_defaults(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"sequences": 50, "fractions": "2", "seed": 4}))
        out = tmp_path / "z.csv"
        assert run(["zeno", "--config", str(cfg), "--out", str(out)]) == 0
        meta, _, rows = read_artifact(out)
        assert meta["seed"] == "4"
        assert len(rows) == 1 and rows[0][0] == "2"

    def test_flags_override_config(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"sequences": 50, "seed": 4}))
        out = tmp_path / "z.csv"
        assert run(["zeno", "--config", str(cfg), "--seed", "8", "--fractions", "2",
                    "--out", str(out)]) == 0
        meta, _, _ = read_artifact(out)
        assert meta["seed"] == "8"

    def test_unknown_config_key_rejected(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"squences": 50}))
        assert run(["zeno", "--config", str(cfg)]) == 2

    def test_malformed_config_rejected(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("not json")
        assert run(["zeno", "--config", str(cfg)]) == 2


class TestChannelCommand:
    def test_exact_tomography_payload(self, tmp_path):
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({"variant": "depolarizing", "lambda": 0.2}))
        out = tmp_path / "chan.json"
        assert run(["channel", "--spec", str(spec), "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        np.testing.assert_allclose(payload["m"], (0.6 * np.eye(3)).tolist(), atol=1e-10)
        np.testing.assert_allclose(payload["v"], [0, 0, 0], atol=1e-10)

    def test_sampled_tomography_has_errors(self, tmp_path):
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({"variant": "phase_damping", "lambda": 0.1,
                                    "axis": [0.0, 0.0]}))
        out = tmp_path / "chan.json"
        assert run(["channel", "--spec", str(spec), "--shots", "2000",
                    "--seed", "1", "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert np.max(payload["m_stderr"]) > 0

    def test_missing_spec_is_config_error(self):
        assert run(["channel"]) == 2

    def test_unphysical_spec_is_config_error(self, tmp_path):
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({"variant": "raw", "m": np.eye(3).tolist(),
                                    "v": [0.9, 0.0, 0.0]}))
        assert run(["channel", "--spec", str(spec)]) == 2


class TestZenoModes:
    def test_runlength_mode(self, tmp_path):
        out = tmp_path / "rl.csv"
        assert run(["zeno", "--mode", "runlength", "--theta", "0.6283185307179586",
                    "--pairs", "20000", "--qmax", "5", "--seed", "2",
                    "--out", str(out)]) == 0
        _, columns, rows = read_artifact(out)
        assert columns == ["N_or_q", "theory", "simulated", "stderr"]
        assert len(rows) == 5
        p = math.cos(0.6283185307179586 / 2) ** 2
        assert float(rows[1][1]) == pytest.approx(p, abs=1e-12)
        # stderr reflects actual run counts, not normalized fractions
        for row in rows[1:]:
            assert 0.0 < float(row[3]) < 0.1
            assert abs(float(row[2]) - float(row[1])) < 4 * float(row[3])

    def test_bad_mode_rejected(self):
        assert run(["zeno", "--mode", "sideways"]) == 2

    def test_bad_fractions_rejected(self):
        assert run(["zeno", "--fractions", "a,b"]) == 2

    def test_poisson_detection_flags(self, tmp_path):
        out = tmp_path / "z.csv"
        assert run(["zeno", "--fractions", "2", "--sequences", "200",
                    "--on-mean", "5.3", "--off-mean", "0.2", "--threshold", "0",
                    "--prep-efficiency", "0.82", "--seed", "1", "--out", str(out)]) == 0
        _, _, rows = read_artifact(out)
        assert len(rows) == 1

    def test_incomplete_poisson_flags_rejected(self):
        assert run(["zeno", "--on-mean", "5.3"]) == 2


class TestChainFieldModes:
    def test_local_field_factor_close_to_weak_limit(self, tmp_path):
        out = tmp_path / "c.json"
        run(["chain", "--n", "4", "--out", str(out)])
        weak = json.loads(out.read_text())["J_hz"][1][0]
        run(["chain", "--n", "4", "--no-weak-field", "--b0", "0.001", "--out", str(out)])
        local = json.loads(out.read_text())["J_hz"][1][0]
        assert local != weak
        assert local == pytest.approx(weak, rel=0.02)
        assert json.loads(out.read_text())["weak_field_limit"] is False


class TestConstantsHook:
    def test_version_reports_provenance(self, capsys):
        assert run(["--version"]) == 0
        out = capsys.readouterr().out
        assert "ionqsim" in out and "CODATA-2018" in out

    def test_env_override_in_subprocess(self, tmp_path):
        table = tmp_path / "constants.json"
        table.write_text(json.dumps({"provenance": "TEST-TABLE", "MU_B": 2 * 9.2740100783e-24}))
        env = dict(os.environ, IONQSIM_CONSTANTS=str(table),
                   PYTHONPATH=os.pathsep.join(sys.path))
        version = subprocess.run([sys.executable, "-m", "ionqsim.cli", "--version"],
                                 capture_output=True, text=True, env=env)
        assert "TEST-TABLE" in version.stdout

        out = tmp_path / "chain.json"
        subprocess.run([sys.executable, "-m", "ionqsim.cli", "chain", "--n", "2",
                        "--out", str(out)], check=True, env=env)
        doubled = json.loads(out.read_text())["J_hz"][1][0]
        subprocess.run([sys.executable, "-m", "ionqsim.cli", "chain", "--n", "2",
                        "--out", str(out)], check=True, env=dict(os.environ))
        normal = json.loads(out.read_text())["J_hz"][1][0]
        # J scales with the squared frequency gradient, i.e. mu_B^2
        assert doubled / normal == pytest.approx(4.0, rel=1e-9)
