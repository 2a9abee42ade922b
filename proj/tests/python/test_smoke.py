import json
import os
import subprocess
import urllib.request
from pathlib import Path

import pytest

import nextmon

SOURCE = Path(os.environ.get("NEXTMON_SOURCE_DIR", Path(__file__).resolve().parents[2]))
CLI = os.environ.get("NEXTMON_CLI")
THERMAL_CONFIG = SOURCE / "config" / "thermal_april.json"

SINGLE_TILE = {"history_depth": 0, "groups": [{"num_tilings": 1, "dims": [{"channel": "x", "lower": -1e6, "upper": 1e6, "tiles": 1}]}]}


def test_gamma_from_tau_exact():
    assert nextmon.gamma_from_tau(50) == 0.98
    assert nextmon.gamma_from_tau(4) == 0.75
    assert nextmon.gamma_from_tau(16) == 0.9375
    with pytest.raises(nextmon.DomainError):
        nextmon.gamma_from_tau(1.0)


def test_tile_coder_shape():
    coder = nextmon.TileCoder(
        {"history_depth": 0, "groups": [{"num_tilings": 8, "dims": [{"channel": "t", "lower": 0, "upper": 10, "tiles": 10}]}]},
        ["t"],
    )
    active = coder.encode([3.3])
    assert len(active) == 8
    assert active == sorted(active)
    assert all(0 <= i < coder.total_features for i in active)
    with pytest.raises(nextmon.ConfigError):
        nextmon.TileCoder({"groups": [{"dims": []}]}, ["t"])


def test_constant_signal_converges():
    for gamma in (0.0, 0.5, 0.9):
        nexter = nextmon.Nexter(SINGLE_TILE, ["x"], [nextmon.Horizon.from_gamma(gamma, "h")], reward_channel="x")
        for _ in range(20000):
            rec = nexter.step([2.0])
        assert rec["predictions"][0] == pytest.approx(2.0 / (1.0 - gamma), rel=1e-3)


def test_predictor_bank_td_error():
    bank = nextmon.PredictorBank([nextmon.Horizon.from_gamma(0.5, "h")], 4, 0.5, 0.0)
    delta = bank.update([0], 1.0, [1])
    assert delta == [1.0]
    assert bank.weights(0) == [0.5, 0.0, 0.0, 0.0]
    assert bank.predict([0, 2]) == [0.5]


def test_ideal_prediction_direct_sum():
    signal = [float((i * 7) % 5) for i in range(200)]
    gamma = 0.8
    out = nextmon.ideal_prediction(signal, gamma)
    k = out["truncation"]
    for t in range(0, out["complete"], 17):
        direct = sum(gamma**j * signal[t + j + 1] for j in range(k))
        assert out["values"][t] == pytest.approx(direct, abs=1e-10)


def test_house_steady_state():
    params = nextmon.HouseParams()
    assert params.full_power_offset == pytest.approx(14.545, abs=1e-3)
    state = nextmon.HouseState(t_in=5.0, t_out=5.0, heater_on=True)
    for _ in range(60 * 24 * 60):
        state = nextmon.step_house(params, state)
    assert state.t_in - state.t_out == pytest.approx(14.545, abs=0.01)
    assert not nextmon.control_hysteresis(nextmon.HouseState(t_in=24.0, t_out=5.0, heater_on=True))


def test_short_run_and_replay():
    config = nextmon.load_config(str(THERMAL_CONFIG))
    config.steps = 1500
    art = nextmon.run_experiment(config)
    assert len(art) == 1500
    assert art.channels == ["t_out", "t_in", "heater", "t_set"]
    metrics = nextmon.metrics(art)
    assert metrics["horizons"][0]["label"] == "50min"
    assert nextmon.replay(art.steps_csv(), config) == {"rows": 1500, "mismatches": 0}


def test_watertank_demo():
    art = nextmon.demo_watertank()
    assert len(art) == 12000
    assert [h.gamma for h in art.config.horizons] == [0.75, 0.9375]


def test_bad_config_dict():
    with pytest.raises(nextmon.ConfigError):
        nextmon.parse_config({"schema_version": 1, "horizons": []}, str(SOURCE))


needs_cli = pytest.mark.skipif(not CLI, reason="NEXTMON_CLI not set")


def run_cli(*args, **kw):
    return subprocess.run([CLI, *map(str, args)], capture_output=True, text=True, timeout=120, **kw)


@needs_cli
def test_cli_run_replay_and_exit_codes(tmp_path):
    out = tmp_path / "thermal"
    r = run_cli("run", THERMAL_CONFIG, "--steps", 800, "-o", out)
    assert r.returncode == 0, r.stderr
    for name in ("steps.csv", "ideal_50min.csv", "events.csv", "metrics.json", "checkpoint.json", "config.json"):
        assert (out / name).exists(), name
    assert run_cli("replay", out / "steps.csv", out / "config.json").returncode == 0

    lines = (out / "steps.csv").read_text().splitlines()
    cells = lines[-1].split(",")
    cells[6] = "999"
    lines[-1] = ",".join(cells)
    tampered = tmp_path / "tampered.csv"
    tampered.write_text("\n".join(lines) + "\n")
    assert run_cli("replay", tampered, out / "config.json").returncode == 1

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"schema_version": 1, "horizons": []}))
    assert run_cli("run", bad).returncode == 2
    assert run_cli("run", tmp_path / "missing.json").returncode == 2
    assert run_cli("frobnicate").returncode == 2


@needs_cli
def test_cli_demo_watertank(tmp_path):
    r = run_cli("demo", "watertank", "-o", tmp_path / "tank")
    assert r.returncode == 0, r.stderr
    assert (tmp_path / "tank" / "ideal_tau16.csv").exists()


@needs_cli
def test_cli_serve_healthz():
    proc = subprocess.Popen([CLI, "serve", str(THERMAL_CONFIG), "--bind", "127.0.0.1:0"], stdout=subprocess.PIPE, text=True)
    try:
        line = proc.stdout.readline()
        assert line.startswith("serving on http://127.0.0.1:")
        port = int(line.split(":")[2].split()[0])
        with urllib.request.urlopen(f"http://127.0.0.1:{port}/healthz", timeout=5) as resp:
            assert json.load(resp)["ok"] is True
    finally:
        proc.terminate()
        assert proc.wait(timeout=10) == 0
