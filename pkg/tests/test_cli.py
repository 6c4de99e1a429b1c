import copy
import json
import math

import numpy as np
import pytest
from scipy.constants import c

from ofdmsar.cli import (ConfigError, DEFAULT_DB_FLOOR, ScenarioConfig,
                         emit_pgm, main, parse_config, run_scenario)
from ofdmsar.pgm import parse_pgm, write_pgm

N, M = 16, 16
DF = 60e3
T_SYM = 0.013
RHO_R = c / (2 * N * DF)
R_BAR = 8 * RHO_R
X_TARGET = math.sqrt(R_BAR**2 - 500.0**2)
SPEED = math.sqrt((c / 3.5e9) * R_BAR / (2 * T_SYM**2 * M))
Y_TARGET = 8 * SPEED * T_SYM

BASE = {
    "radar": {
        "fc_hz": 3.5e9,
        "bandwidth_hz": 2e8,
        "subcarrier_spacing_hz": DF,
        "cp_duration_s": T_SYM - 1 / DF,
        "aperture_time_s": M * T_SYM,
        "n_subcarriers": N,
        "platform": {"height_m": 500.0, "speed_mps": SPEED},
    },
    "scene": {
        "targets": [{"x": X_TARGET, "y": Y_TARGET}],
        "extent": [X_TARGET - 100, X_TARGET + 100,
                   Y_TARGET - 100, Y_TARGET + 100],
    },
    "snr_in_db": 5.0,
    "filter": {"kind": "rf"},
    "trials": 4,
    "seed": 42,
    "azimuth_downsample": 1,
}


def config_text(**overrides):
    doc = copy.deepcopy(BASE)
    doc.update(overrides)
    return json.dumps(doc)


# Parsing ---------------------------------------------------------------------

def test_parse_defaults():
    doc = copy.deepcopy(BASE)
    del doc["filter"], doc["trials"], doc["seed"], doc["azimuth_downsample"]
    scenario = parse_config(json.dumps(doc))
    assert scenario.filters == ("rf", "mf", "wf")
    assert scenario.mode == "data_aided"
    assert scenario.trials == 64
    assert scenario.seed == 0
    assert scenario.constellation == "qam256"
    assert scenario.rcmc_method == "windowed_sinc"
    assert scenario.rcmc_halfwidth == 8
    assert scenario.ka_mode == "reference"
    assert scenario.azimuth_downsample == 10
    assert scenario.outputs.images == ("ac",)
    assert scenario.outputs.grids == ()
    assert scenario.outputs.db_floor == DEFAULT_DB_FLOOR
    assert scenario.snr_db == (5.0,)
    assert scenario.radar.n_symbols == M
    assert scenario.scene.q == 1


def test_parse_paths_in_errors():
    with pytest.raises(ConfigError) as err:
        parse_config(config_text(radar={**BASE["radar"], "fc_hz": "fast"}))
    assert err.value.path == "$.radar.fc_hz"
    with pytest.raises(ConfigError) as err:
        parse_config(config_text(bogus=1))
    assert err.value.path == "$.bogus"
    bad_platform = copy.deepcopy(BASE["radar"])
    del bad_platform["platform"]["height_m"]
    with pytest.raises(ConfigError) as err:
        parse_config(config_text(radar=bad_platform))
    assert err.value.path == "$.radar.platform.height_m"
    with pytest.raises(ConfigError) as err:
        parse_config("{not json")
    assert err.value.path == "$"
    with pytest.raises(ConfigError) as err:
        parse_config(config_text(trials=0))
    assert err.value.path == "$.trials"
    with pytest.raises(ConfigError) as err:
        parse_config(config_text(filter={"kind": "zf"}))
    assert err.value.path == "$.filter.kind"
    with pytest.raises(ConfigError) as err:
        parse_config(config_text(outputs={"images": ["ac", "cooked"]}))
    assert err.value.path == "$.outputs.images[1]"
    missing = {k: v for k, v in BASE.items() if k != "snr_in_db"}
    with pytest.raises(ConfigError) as err:
        parse_config(json.dumps(missing))
    assert err.value.path == "$.snr_in_db"


def test_parse_snr_list_and_dedup_warning():
    scenario = parse_config(config_text(snr_in_db=[0, 5, 10]))
    assert scenario.snr_db == (0.0, 5.0, 10.0)
    with pytest.warns(UserWarning):
        scenario = parse_config(config_text(snr_in_db=[5, 5, 10]))
    assert scenario.snr_db == (5.0, 10.0)
    with pytest.raises(ConfigError):
        parse_config(config_text(snr_in_db=[]))
    with pytest.raises(ConfigError):
        parse_config(config_text(snr_in_db=True))


def test_parse_pilot_srs_rules():
    srs = {"periodicity_slots": 2, "symbols_per_slot": 2,
           "comb_spacing": 4, "n_resource_blocks": 1, "start_subcarrier": 2}
    doc = copy.deepcopy(BASE)
    del doc["azimuth_downsample"]
    doc["mode"] = "pilot_only"
    doc["srs"] = srs
    scenario = parse_config(json.dumps(doc))
    assert scenario.mode == "pilot_only"
    assert scenario.srs.period_symbols == 4
    assert scenario.constellation == "qpsk"
    # srs is mandatory in pilot mode
    with pytest.raises(ConfigError) as err:
        parse_config(config_text(mode="pilot_only"))
    assert err.value.path == "$.srs"
    # decimation follows the pilot period, an explicit downsample is an error
    doc_bad = copy.deepcopy(doc)
    doc_bad["azimuth_downsample"] = 4
    with pytest.raises(ConfigError) as err:
        parse_config(json.dumps(doc_bad))
    assert err.value.path == "$.azimuth_downsample"
    # and srs is meaningless in data-aided mode
    with pytest.raises(ConfigError) as err:
        parse_config(config_text(srs=srs))
    assert err.value.path == "$.srs"


def test_parse_scene_from_pgm(tmp_path):
    pixels = np.zeros((4, 4), dtype=np.uint8)
    pixels[2, 1] = 255
    (tmp_path / "scene.pgm").write_bytes(write_pgm(pixels))
    doc = copy.deepcopy(BASE)
    doc["scene"] = {
        "pgm_path": "scene.pgm",
        "extent": [X_TARGET - 2, X_TARGET + 2, Y_TARGET - 2, Y_TARGET + 2],
    }
    scenario = parse_config(json.dumps(doc), config_dir=tmp_path)
    assert scenario.scene.q == 1
    target = scenario.scene.targets[0]
    assert target.x_m == pytest.approx(X_TARGET + 0.5)
    assert target.y_m == pytest.approx(Y_TARGET - 0.5)
    doc["scene"]["pgm_path"] = "missing.pgm"
    with pytest.raises(ConfigError) as err:
        parse_config(json.dumps(doc), config_dir=tmp_path)
    assert err.value.path == "$.scene.pgm_path"


# PGM rendering ---------------------------------------------------------------

def test_emit_pgm_mapping():
    image = np.array([[1.0, 0.1, 0.0]])  # 0 dB, -20 dB, -inf
    pixels, maxval = parse_pgm(emit_pgm(image, db_floor=-40.0))
    assert maxval == 255
    assert pixels[0, 0] == 255
    assert abs(int(pixels[0, 1]) - 128) <= 1
    assert pixels[0, 2] == 0


def test_emit_pgm_all_zero_and_floor():
    pixels, _ = parse_pgm(emit_pgm(np.zeros((3, 3))))
    assert np.all(pixels == 0)
    # anything at or below the floor clamps to 0
    image = np.array([[1.0, 1e-6]])
    pixels, _ = parse_pgm(emit_pgm(image, db_floor=-40.0))
    assert pixels[0, 1] == 0
    from ofdmsar.errors import ConfigurationError
    with pytest.raises(ConfigurationError):
        emit_pgm(np.empty((0, 3)))
    with pytest.raises(ConfigurationError):
        emit_pgm(image, db_floor=0.0)


def test_emit_pgm_complex_input():
    image = np.array([[3 + 4j, 0.5j]])
    pixels, _ = parse_pgm(emit_pgm(image))
    assert pixels[0, 0] == 255  # |3+4j| = 5 is the peak
    expected = round(255 * (20 * math.log10(0.5 / 5) + 40) / 40)
    assert abs(int(pixels[0, 1]) - expected) <= 1


# Scenario execution ----------------------------------------------------------

def test_run_scenario_artifacts_and_rows(tmp_path):
    scenario = parse_config(config_text(
        snr_in_db=[0, 5], filter={"kind": "all"},
        outputs={"images": ["rc", "ac"], "grids": ["tf"]}))
    out = run_scenario(scenario, tmp_path / "out")
    names = sorted(p.name for p in out.iterdir())
    assert names == ["grid_tf.bin", "image_ac.pgm", "image_rc.pgm",
                     "metrics.json", "nmse_sweep.csv", "profile_azimuth.csv",
                     "profile_range.csv"]
    metrics = json.loads((out / "metrics.json").read_text())
    assert len(metrics["points"]) == 2 * 3  # snr x filter
    point = metrics["points"][0]
    assert point["filter"] == "rf"
    assert point["snr_in_db"] == 0
    assert point["trials"] == 4
    assert point["nmse"] > 0
    sweep = (out / "nmse_sweep.csv").read_text().strip().splitlines()
    assert sweep[0] == "snr_db,filter,nmse,nmse_calibrated"
    assert len(sweep) == 1 + 6
    profile = (out / "profile_range.csv").read_text().strip().splitlines()
    assert profile[0] == "bin,range_m,power_db"
    assert len(profile) == 1 + N
    # the dumped grid parses back at the right stage and size
    from ofdmsar.echo import load_grid
    data, stage = load_grid(str(out / "grid_tf.bin"))
    assert stage == "tf"
    assert data.shape == (N, M)


def test_run_scenario_deterministic(tmp_path):
    scenario = parse_config(config_text(outputs={"images": ["ac"],
                                                 "grids": ["ac"]}))
    out1 = run_scenario(scenario, tmp_path / "a")
    out2 = run_scenario(scenario, tmp_path / "b")
    for name in ("metrics.json", "nmse_sweep.csv", "profile_range.csv",
                 "profile_azimuth.csv", "image_ac.pgm", "grid_ac.bin"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name


def test_run_scenario_pilot_smoke(tmp_path):
    # 64 symbols with a 4-symbol pilot period leave 16 pilot columns;
    # the speed makes the decimated grid critically sampled in azimuth
    m_full, period = 64, 4
    t_pilot = period * T_SYM
    speed = math.sqrt((c / 3.5e9) * R_BAR / (2 * t_pilot**2 * (m_full // period)))
    y_target = 8 * speed * t_pilot
    doc = copy.deepcopy(BASE)
    del doc["azimuth_downsample"]
    doc["radar"] = dict(BASE["radar"],
                        aperture_time_s=m_full * T_SYM,
                        platform={"height_m": 500.0, "speed_mps": speed})
    doc["scene"] = {
        "targets": [{"x": X_TARGET, "y": y_target}],
        "extent": [X_TARGET - 100, X_TARGET + 100,
                   y_target - 100, y_target + 100],
    }
    doc["mode"] = "pilot_only"
    doc["srs"] = {"periodicity_slots": 2, "symbols_per_slot": 2,
                  "comb_spacing": 4, "n_resource_blocks": 1,
                  "start_subcarrier": 2}
    doc["trials"] = 2
    out = run_scenario(parse_config(json.dumps(doc)), tmp_path / "pilot")
    metrics = json.loads((out / "metrics.json").read_text())
    assert all(p["mode"] == "pilot_only" for p in metrics["points"])
    # the pilot grid keeps one symbol per period
    profile = (out / "profile_azimuth.csv").read_text().strip().splitlines()
    assert len(profile) == 1 + m_full // period


# Entry point -----------------------------------------------------------------

def test_main_happy_path(tmp_path, capsys):
    config = tmp_path / "scenario.json"
    config.write_text(config_text())
    out_dir = tmp_path / "artifacts"
    code = main(["--config", str(config), "--out-dir", str(out_dir)])
    assert code == 0
    assert (out_dir / "metrics.json").exists()
    assert str(out_dir) in capsys.readouterr().out


def test_main_overrides(tmp_path):
    config = tmp_path / "scenario.json"
    config.write_text(config_text(snr_in_db=[0, 5]))
    out_dir = tmp_path / "artifacts"
    code = main(["--config", str(config), "--out-dir", str(out_dir),
                 "--filter", "mf", "--snr-db", "10", "--seed", "7"])
    assert code == 0
    rows = (out_dir / "nmse_sweep.csv").read_text().strip().splitlines()
    assert len(rows) == 2  # header + one (10 dB, mf) point
    assert rows[1].startswith("10.0,mf,")


def test_main_config_error_exit_code(tmp_path, capsys):
    config = tmp_path / "bad.json"
    config.write_text(config_text(trials=-1))
    assert main(["--config", str(config)]) == 2
    assert "$.trials" in capsys.readouterr().err
    # pilot override without srs in the config is a config error
    config.write_text(config_text())
    assert main(["--config", str(config), "--mode", "pilot_only"]) == 2


def test_main_missing_file_exit_code(tmp_path, capsys):
    assert main(["--config", str(tmp_path / "nope.json")]) == 1
    assert "error" in capsys.readouterr().err
