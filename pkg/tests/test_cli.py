import json
import math

import pytest

from sagnacsim.cli import main


def run_cli(*argv):
    return main(list(argv))


def write_json(path, payload):
    path.write_text(json.dumps(payload))
    return str(path)


@pytest.fixture
def pzt_config(tmp_path):
    return write_json(tmp_path / "pzt.json", {
        "duration_s": 6.0,
        "seed": 7,
        "qkd": {"pulses_per_window": 200000},
        "disturbances": [
            {"kind": "pzt", "position_m": 5000.0, "start_s": 2.0,
             "drive_amplitude_v": 1.2, "frequency_hz": 3000.0,
             "phase_gain_rad_per_v": 0.5},
        ],
    })


@pytest.fixture
def impact_config(tmp_path):
    return write_json(tmp_path / "impact.json", {
        "duration_s": 6.0,
        "seed": 5,
        "perception": {"noise_sigma": 0.0008, "sense_duration_s": 0.0256},
        "disturbances": [
            {"kind": "impact", "position_m": 5000.0, "start_s": 1.0,
             "mass_kg": 0.1, "drop_height_m": 0.1, "width_s": 1e-5,
             "impact_gain": 2.0},
        ],
    })


class TestIntegrated:
    def test_deterministic_output_bytes(self, tmp_path, pzt_config):
        out1, out2 = tmp_path / "run1", tmp_path / "run2"
        assert run_cli("integrated", "--config", pzt_config,
                       "--out-dir", str(out1), "--quiet") == 0
        assert run_cli("integrated", "--config", pzt_config,
                       "--out-dir", str(out2), "--quiet") == 0
        for name in ("report.json", "event_log.jsonl", "qber_vs_time.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_full_sequence_recorded(self, tmp_path, pzt_config):
        out = tmp_path / "run"
        assert run_cli("integrated", "--config", pzt_config,
                       "--out-dir", str(out), "--quiet") == 0
        report = json.loads((out / "report.json").read_text())
        events = [e["event"] for e in report["event_log"]]
        assert "breach_detected" in events
        assert "localization_done" in events
        assert report["localization_reports"]
        position = report["localization_reports"][0]["position_m"]
        assert abs(position - 5000.0) < 200.0
        # report is self-contained: the echoed config re-parses
        from sagnacsim.config import parse_config_dict
        assert parse_config_dict(report["config"]).resolved == \
            report["config"]

    def test_seed_override_changes_output(self, tmp_path, pzt_config):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        run_cli("integrated", "--config", pzt_config, "--out-dir", str(out1),
                "--quiet")
        run_cli("integrated", "--config", pzt_config, "--seed", "8",
                "--out-dir", str(out2), "--quiet")
        r1 = json.loads((out1 / "report.json").read_text())
        r2 = json.loads((out2 / "report.json").read_text())
        assert r1["seed"] == 7 and r2["seed"] == 8
        assert r1["qkd_windows"] != r2["qkd_windows"]


class TestPerceiveAndLocalize:
    def test_impact_trace_localizes(self, tmp_path, impact_config):
        out = tmp_path / "perc"
        assert run_cli("perceive", "--config", impact_config,
                       "--out-dir", str(out), "--quiet") == 0
        report = json.loads((out / "report.json").read_text())
        assert report["localization"] is not None
        assert abs(report["localization"]["position_m"] - 5000.0) < \
            report["localization"]["resolution_m"]
        assert (out / "trace.txt").exists()

        out2 = tmp_path / "loc"
        assert run_cli("localize", "--config", impact_config,
                       "--trace", str(out / "trace.txt"),
                       "--out-dir", str(out2), "--quiet") == 0
        report2 = json.loads((out2 / "report.json").read_text())
        assert report2["localization"]["position_m"] == pytest.approx(
            report["localization"]["position_m"], rel=1e-12)

    def test_pzt_sweep_written(self, tmp_path, pzt_config):
        out = tmp_path / "sweep"
        assert run_cli("perceive", "--config", pzt_config,
                       "--out-dir", str(out), "--quiet") == 0
        table = (out / "amplitude_vs_frequency.csv").read_text().splitlines()
        assert table[0] == "frequency_hz,amplitude_w"
        assert len(table) > 100

    def test_flat_trace_fails_analysis(self, tmp_path):
        cfg = write_json(tmp_path / "quiet.json", {"seed": 3})
        from sagnacsim.fileio import write_trace
        from sagnacsim.perception import synthesize_trace
        from sagnacsim.optics import LoopChannel
        trace = synthesize_trace(
            None, LoopChannel(length_m=30000.0, bias_phase_rad=0.5 * math.pi),
            0.05, 200e3, 0.0019, seed=4)
        path = tmp_path / "flat.txt"
        write_trace(path, trace)
        code = run_cli("localize", "--config", cfg, "--trace", str(path),
                       "--out-dir", str(tmp_path / "out"), "--quiet")
        assert code == 3

    def test_quasi_static_perceive_reports_no_signature(self, tmp_path):
        cfg = write_json(tmp_path / "press.json", {
            "disturbances": [{"kind": "pressure", "position_m": 9000.0,
                              "mass_kg": 0.2}],
        })
        out = tmp_path / "out"
        assert run_cli("perceive", "--config", cfg, "--out-dir", str(out),
                       "--quiet") == 0
        report = json.loads((out / "report.json").read_text())
        assert report["localization"] is None
        assert report["significance"]["peak_to_floor"] < 10.0


class TestWm:
    def test_staircase_masses(self, tmp_path):
        cfg = write_json(tmp_path / "wm.json", {"seed": 2,
                                                "wm": {"noise_sigma": 0.0}})
        out = tmp_path / "out"
        assert run_cli("wm", "--config", cfg, "--masses", "0.1,0.2,0.3",
                       "--out-dir", str(out), "--quiet") == 0
        rows = (out / "icr_vs_mass.csv").read_text().splitlines()
        assert rows[0] == "mass_kg,i_d_w,icr,delta_tau_s,inferred_mass_kg"
        delays = [float(r.split(",")[3]) for r in rows[1:]]
        for delay, expected in zip(delays, (9.81e-18, 1.962e-17, 2.943e-17)):
            assert abs(delay - expected) < 5e-20

    def test_bad_masses_rejected(self, tmp_path):
        assert run_cli("wm", "--masses", "0.1,-0.2",
                       "--out-dir", str(tmp_path)) == 2


class TestSweep:
    def test_loss_sweep_monotone_and_ordered(self, tmp_path):
        cfg = write_json(tmp_path / "base.json", {
            "duration_s": 2.0, "seed": 11,
            "qkd": {"pulses_per_window": 300000},
        })
        out = tmp_path / "out"
        assert run_cli("sweep", "--config", cfg, "--key", "channel.loss_db",
                       "--values", "10,16.5,25", "--out-dir", str(out),
                       "--quiet") == 0
        rows = (out / "sweep.csv").read_text().splitlines()[1:]
        values = [float(r.split(",")[0]) for r in rows]
        rates = [float(r.split(",")[2]) for r in rows]
        assert values == [10.0, 16.5, 25.0]
        assert rates[0] > rates[1] > rates[2]

    def test_unknown_key_rejected(self, tmp_path):
        assert run_cli("sweep", "--key", "channel.nope", "--values", "1",
                       "--out-dir", str(tmp_path)) == 2


class TestErrors:
    def test_invalid_config_exits_2(self, tmp_path, capsys):
        cfg = write_json(tmp_path / "bad.json",
                         {"channel": {"length_m": -1.0}})
        assert run_cli("qkd", "--config", cfg,
                       "--out-dir", str(tmp_path)) == 2
        record = json.loads(capsys.readouterr().err.strip())
        assert record["error"] == "validation"
        assert any("length_m" in p for p in record["problems"])

    def test_missing_trace_exits_2(self, tmp_path):
        assert run_cli("localize", "--trace", "/does/not/exist",
                       "--out-dir", str(tmp_path)) == 2

    def test_out_dir_env_fallback(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SAGNACSIM_OUT_DIR", str(tmp_path / "envout"))
        cfg = write_json(tmp_path / "mini.json",
                         {"duration_s": 1.0, "seed": 1,
                          "qkd": {"pulses_per_window": 10000}})
        assert run_cli("qkd", "--config", cfg, "--quiet") == 0
        assert (tmp_path / "envout" / "report.json").exists()
