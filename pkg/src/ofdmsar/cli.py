"""Scenario runner: JSON config in, imaging artifacts out.

A scenario is a strictly validated JSON document (unknown keys are
rejected; diagnostics name the offending JSON path, e.g. "$.radar.fc_hz").
Running it produces, in the output directory:

  metrics.json          one flat quality report per (snr, filter) point
  image_<stage>.pgm     dB-magnitude images of the requested chain stages
  grid_<stage>.bin      raw complex grid dumps of the requested stages
  profile_range.csv     peak range cut of the ensemble mean power image
  profile_azimuth.csv   peak azimuth cut of the same image
  nmse_sweep.csv        snr_db, filter, nmse, nmse_calibrated per point

Stage images and grid dumps come from the first trial of the first sweep
point; profiles and metrics come from the full ensembles.  Outputs are a
deterministic function of (config, seed).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .echo import STAGE_CODES, draw_noise, grid_to_bytes, synthesize_echo
from .errors import ConfigurationError, OfdmSarError
from .geometry import PlatformGeometry
from .pgm import write_pgm
from .pipeline import (MODES, EnsembleResult, pilot_comb_mask,
                       point_target_report, run_point_ensemble)
from .rd_imaging import KA_MODES, RCMC_METHODS, focus_image
from .scene import Scene, load_scene_pgm, make_point_scene
from .tf_filter import FILTER_KINDS, FilterSpec, apply_tf_filter
from .waveform import (RadarConfig, SrsConfig, SymbolGrid, gen_symbol_grid,
                       make_qam, _QAM_NAMES)

DEFAULT_DB_FLOOR = -40.0
DEFAULT_TRIALS = 64
DEFAULT_DATA_DOWNSAMPLE = 10
_FILTER_CHOICES = FILTER_KINDS + ("all",)


class ConfigError(ConfigurationError):
    """Config validation failure carrying the JSON path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def _require_keys(obj: dict, path: str, required: tuple, optional: tuple):
    unknown = set(obj) - set(required) - set(optional)
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"{path}.{key}", "unknown field")
    for key in required:
        if key not in obj:
            raise ConfigError(f"{path}.{key}", "missing required field")


def _typed(obj: dict, path: str, key: str, kinds, default=None):
    if key not in obj:
        return default
    value = obj[key]
    if kinds is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kinds) or isinstance(value, bool) and kinds is not bool:
        raise ConfigError(f"{path}.{key}",
                          f"expected {getattr(kinds, '__name__', kinds)}, "
                          f"got {type(value).__name__}")
    return value


@dataclass(frozen=True)
class OutputSelection:
    images: tuple[str, ...] = ("ac",)
    grids: tuple[str, ...] = ()
    db_floor: float = DEFAULT_DB_FLOOR


@dataclass(frozen=True)
class ScenarioConfig:
    radar: RadarConfig            # the full (undecimated) signaling grid
    scene: Scene
    filters: tuple[str, ...]
    mode: str
    srs: Optional[SrsConfig]
    snr_db: tuple[float, ...]
    trials: int
    seed: int
    constellation: str
    rcmc_method: str
    rcmc_halfwidth: int
    ka_mode: str
    azimuth_downsample: int
    outputs: OutputSelection


def _parse_platform(obj, path: str) -> PlatformGeometry:
    if not isinstance(obj, dict):
        raise ConfigError(path, "expected an object")
    _require_keys(obj, path, ("height_m", "speed_mps"),
                  ("elevation_angle_rad", "aperture_az_m", "aperture_el_m"))
    kwargs = {"height_m": _typed(obj, path, "height_m", float),
              "speed_mps": _typed(obj, path, "speed_mps", float)}
    for key in ("elevation_angle_rad", "aperture_az_m", "aperture_el_m"):
        if key in obj:
            kwargs[key] = _typed(obj, path, key, float)
    return PlatformGeometry(**kwargs)


def _parse_radar(obj, path: str) -> RadarConfig:
    if not isinstance(obj, dict):
        raise ConfigError(path, "expected an object")
    required = ("fc_hz", "bandwidth_hz", "subcarrier_spacing_hz",
                "cp_duration_s", "aperture_time_s", "n_subcarriers",
                "platform")
    optional = ("symbol_duration_s", "total_symbol_s", "n_symbols")
    _require_keys(obj, path, required, optional)
    kwargs = {key: _typed(obj, path, key, float)
              for key in required[:5]}
    kwargs["n_subcarriers"] = _typed(obj, path, "n_subcarriers", int)
    kwargs["platform"] = _parse_platform(obj["platform"], f"{path}.platform")
    for key in optional[:2]:
        if key in obj:
            kwargs[key] = _typed(obj, path, key, float)
    if "n_symbols" in obj:
        kwargs["n_symbols"] = _typed(obj, path, "n_symbols", int)
    return RadarConfig(**kwargs)


def _parse_scene(obj, path: str, config_dir: Path) -> Scene:
    if not isinstance(obj, dict):
        raise ConfigError(path, "expected an object")
    extent = None
    if "extent" in obj:
        raw = obj["extent"]
        if (not isinstance(raw, list) or len(raw) != 4
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool)
                           for x in raw)):
            raise ConfigError(f"{path}.extent",
                              "expected [x_min, x_max, y_min, y_max]")
        extent = tuple(float(x) for x in raw)
    if "pgm_path" in obj:
        _require_keys(obj, path, ("pgm_path", "extent"),
                      ("threshold", "rcs_scale"))
        pgm_path = _typed(obj, path, "pgm_path", str)
        full = Path(pgm_path)
        if not full.is_absolute():
            full = config_dir / full
        try:
            blob = full.read_bytes()
        except OSError as exc:
            raise ConfigError(f"{path}.pgm_path", f"cannot read {full}: {exc}")
        return load_scene_pgm(
            blob, extent,
            threshold=_typed(obj, path, "threshold", int, 0),
            rcs_scale=_typed(obj, path, "rcs_scale", float, 1.0))
    _require_keys(obj, path, ("targets",), ("extent",))
    raw_targets = obj["targets"]
    if not isinstance(raw_targets, list):
        raise ConfigError(f"{path}.targets", "expected a list of targets")
    for i, entry in enumerate(raw_targets):
        if not isinstance(entry, dict):
            raise ConfigError(f"{path}.targets[{i}]", "expected an object")
    return make_point_scene(raw_targets, extent=extent)


def _parse_srs(obj, path: str) -> SrsConfig:
    if not isinstance(obj, dict):
        raise ConfigError(path, "expected an object")
    fields = ("periodicity_slots", "symbols_per_slot", "comb_spacing",
              "n_resource_blocks", "start_subcarrier")
    _require_keys(obj, path, (), fields)
    kwargs = {key: _typed(obj, path, key, int) for key in fields if key in obj}
    return SrsConfig(**kwargs)


def _parse_outputs(obj, path: str) -> OutputSelection:
    if not isinstance(obj, dict):
        raise ConfigError(path, "expected an object")
    _require_keys(obj, path, (), ("images", "grids", "db_floor"))
    stages = tuple(STAGE_CODES)

    def stage_list(key, default):
        if key not in obj:
            return default
        raw = obj[key]
        if not isinstance(raw, list):
            raise ConfigError(f"{path}.{key}", "expected a list of stage names")
        for i, name in enumerate(raw):
            if name not in stages:
                raise ConfigError(f"{path}.{key}[{i}]",
                                  f"unknown stage {name!r}; expected one of {stages}")
        return tuple(raw)

    return OutputSelection(images=stage_list("images", ("ac",)),
                           grids=stage_list("grids", ()),
                           db_floor=_typed(obj, path, "db_floor", float,
                                           DEFAULT_DB_FLOOR))


def parse_config(text: str, config_dir: Optional[Path] = None) -> ScenarioConfig:
    """Parse and validate a scenario document; errors name the JSON path."""
    config_dir = config_dir or Path.cwd()
    try:
        root = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("$", f"invalid JSON: {exc}")
    if not isinstance(root, dict):
        raise ConfigError("$", "top level must be an object")
    top_required = ("radar", "scene", "snr_in_db")
    top_optional = ("filter", "mode", "srs", "trials", "seed", "constellation",
                    "rcmc", "ka_mode", "azimuth_downsample", "outputs")
    _require_keys(root, "$", top_required, top_optional)

    radar = _parse_radar(root["radar"], "$.radar")
    scene = _parse_scene(root["scene"], "$.scene", config_dir)

    mode = _typed(root, "$", "mode", str, "data_aided")
    if mode not in MODES:
        raise ConfigError("$.mode", f"expected one of {MODES}, got {mode!r}")

    srs = None
    if mode == "pilot_only":
        if "srs" not in root:
            raise ConfigError("$.srs", "required when mode is pilot_only")
        srs = _parse_srs(root["srs"], "$.srs")
        if "azimuth_downsample" in root:
            raise ConfigError("$.azimuth_downsample",
                              "not applicable in pilot_only mode "
                              "(decimation follows the srs periodicity)")
    elif "srs" in root:
        raise ConfigError("$.srs", "only valid when mode is pilot_only")

    filter_obj = root.get("filter", {"kind": "all"})
    if not isinstance(filter_obj, dict):
        raise ConfigError("$.filter", "expected an object")
    _require_keys(filter_obj, "$.filter", ("kind",), ())
    kind = _typed(filter_obj, "$.filter", "kind", str)
    if kind not in _FILTER_CHOICES:
        raise ConfigError("$.filter.kind",
                          f"expected one of {_FILTER_CHOICES}, got {kind!r}")
    filters = FILTER_KINDS if kind == "all" else (kind,)

    raw_snr = root["snr_in_db"]
    if isinstance(raw_snr, (int, float)) and not isinstance(raw_snr, bool):
        snr_list = [float(raw_snr)]
    elif isinstance(raw_snr, list) and raw_snr and all(
            isinstance(x, (int, float)) and not isinstance(x, bool)
            for x in raw_snr):
        snr_list = [float(x) for x in raw_snr]
    else:
        raise ConfigError("$.snr_in_db", "expected a number or non-empty list")
    deduped = list(dict.fromkeys(snr_list))
    if len(deduped) != len(snr_list):
        warnings.warn("duplicate snr_in_db entries removed", UserWarning)
    snr_db = tuple(deduped)

    trials = _typed(root, "$", "trials", int, DEFAULT_TRIALS)
    if trials < 1:
        raise ConfigError("$.trials", f"must be >= 1, got {trials}")
    seed = _typed(root, "$", "seed", int, 0)

    default_constellation = "qpsk" if mode == "pilot_only" else "qam256"
    constellation = _typed(root, "$", "constellation", str,
                           default_constellation)
    if constellation not in _QAM_NAMES:
        raise ConfigError("$.constellation",
                          f"expected one of {tuple(_QAM_NAMES)}, "
                          f"got {constellation!r}")

    rcmc_obj = root.get("rcmc", {})
    if not isinstance(rcmc_obj, dict):
        raise ConfigError("$.rcmc", "expected an object")
    _require_keys(rcmc_obj, "$.rcmc", (), ("method", "halfwidth"))
    rcmc_method = _typed(rcmc_obj, "$.rcmc", "method", str, "windowed_sinc")
    if rcmc_method not in RCMC_METHODS:
        raise ConfigError("$.rcmc.method",
                          f"expected one of {RCMC_METHODS}, got {rcmc_method!r}")
    rcmc_halfwidth = _typed(rcmc_obj, "$.rcmc", "halfwidth", int, 8)
    if rcmc_halfwidth < 1:
        raise ConfigError("$.rcmc.halfwidth", "must be >= 1")

    ka_mode = _typed(root, "$", "ka_mode", str, "reference")
    if ka_mode not in KA_MODES:
        raise ConfigError("$.ka_mode",
                          f"expected one of {KA_MODES}, got {ka_mode!r}")

    downsample = _typed(root, "$", "azimuth_downsample", int,
                        DEFAULT_DATA_DOWNSAMPLE if mode == "data_aided" else 1)
    if downsample < 1:
        raise ConfigError("$.azimuth_downsample", "must be >= 1")

    outputs = _parse_outputs(root.get("outputs", {}), "$.outputs")
    return ScenarioConfig(radar=radar, scene=scene, filters=filters, mode=mode,
                          srs=srs, snr_db=snr_db, trials=trials, seed=seed,
                          constellation=constellation,
                          rcmc_method=rcmc_method,
                          rcmc_halfwidth=rcmc_halfwidth, ka_mode=ka_mode,
                          azimuth_downsample=downsample, outputs=outputs)


def emit_pgm(image: np.ndarray, db_floor: float = DEFAULT_DB_FLOOR) -> bytes:
    """Render a complex or magnitude image as an 8-bit dB-scaled P5 PGM."""
    image = np.asarray(image)
    if image.size == 0:
        raise ConfigurationError("cannot render an empty image")
    if db_floor >= 0:
        raise ConfigurationError(f"db_floor must be < 0, got {db_floor}")
    magnitude = np.abs(image)
    peak = magnitude.max()
    if peak == 0:
        peak = 1.0
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(magnitude / peak)
    pixels = np.rint(255.0 * (db - db_floor) / (0.0 - db_floor))
    pixels = np.clip(pixels, 0, 255).astype(np.uint8)
    return write_pgm(pixels, maxval=255, binary=True)


def _profile_csv(values: np.ndarray, positions: np.ndarray,
                 position_label: str) -> str:
    peak = values.max() if values.max() > 0 else 1.0
    with np.errstate(divide="ignore"):
        db = 10.0 * np.log10(values / peak)
    lines = [f"bin,{position_label},power_db"]
    for i, (pos, level) in enumerate(zip(positions, db)):
        lines.append(f"{i},{float(pos)!r},{float(level)!r}")
    return "\n".join(lines) + "\n"


def _render_stage_artifacts(scenario: ScenarioConfig, cfg: RadarConfig,
                            mask: Optional[np.ndarray],
                            result: EnsembleResult, out_dir: Path) -> None:
    """Stage images/grids from the first trial of the first sweep point."""
    wanted = set(scenario.outputs.images) | set(scenario.outputs.grids)
    if not wanted:
        return
    constellation = make_qam(scenario.constellation)
    symbols = gen_symbol_grid(cfg, constellation, scenario.seed, mask=mask,
                              trials=scenario.trials).data[0]
    echo = synthesize_echo(scenario.scene, cfg,
                           _single_grid(symbols, mask, scenario, cfg),
                           noise_seed=scenario.seed, rcs_seed=scenario.seed)
    filtered = apply_tf_filter(echo, symbols, result.filter_spec)
    stages = {"tf": filtered}
    if wanted - {"tf"}:
        stages.update(
            (name, grid.data) for name, grid in focus_image(
                filtered, cfg=cfg, r_bar_ref_m=result.r_bar_ref_m,
                rcmc_method=scenario.rcmc_method,
                rcmc_halfwidth=scenario.rcmc_halfwidth,
                ka_mode=scenario.ka_mode, collect_stages=True).items())
    for stage in scenario.outputs.images:
        (out_dir / f"image_{stage}.pgm").write_bytes(
            emit_pgm(stages[stage], scenario.outputs.db_floor))
    for stage in scenario.outputs.grids:
        (out_dir / f"grid_{stage}.bin").write_bytes(
            grid_to_bytes(stages[stage], stage=stage))


def _single_grid(symbols: np.ndarray, mask: Optional[np.ndarray],
                 scenario: ScenarioConfig, cfg: RadarConfig) -> SymbolGrid:
    full_mask = (np.ones(symbols.shape, dtype=bool) if mask is None
                 else mask)
    return SymbolGrid(data=symbols, mask=full_mask,
                      constellation=scenario.constellation,
                      seed=scenario.seed)


def run_scenario(scenario: ScenarioConfig, out_dir: Path) -> Path:
    """Execute every (snr, filter) point and write all artifacts."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    constellation = make_qam(scenario.constellation)

    if scenario.mode == "pilot_only":
        cfg_run = scenario.radar.decimated(scenario.srs.period_symbols)
        mask = pilot_comb_mask(cfg_run, scenario.srs)
    else:
        cfg_run = scenario.radar.decimated(scenario.azimuth_downsample)
        mask = None

    points = []
    sweep_rows = []
    first_result = None
    first_cfg = None
    for snr_db in scenario.snr_db:
        snr = 10.0 ** (snr_db / 10.0)
        noise_var = constellation.mean_power / snr
        cfg = replace(cfg_run, snr_in_linear=snr, noise_var=noise_var)
        for kind in scenario.filters:
            spec = FilterSpec(kind=kind, snr_in_linear=snr)
            result = run_point_ensemble(
                scenario.scene, cfg, constellation, spec, scenario.trials,
                scenario.seed, mask=mask, mode=scenario.mode,
                rcmc_method=scenario.rcmc_method, ka_mode=scenario.ka_mode)
            report = point_target_report(result).to_json_dict()
            report["snr_in_db"] = snr_db
            points.append(report)
            sweep_rows.append((snr_db, kind, result.nmse,
                               result.nmse_calibrated))
            if first_result is None:
                first_result = result
                first_cfg = cfg

    (out_dir / "metrics.json").write_text(
        json.dumps({"points": points}, indent=2) + "\n")

    lines = ["snr_db,filter,nmse,nmse_calibrated"]
    lines += [f"{float(s)!r},{f},{float(n)!r},{float(c)!r}"
              for s, f, n, c in sweep_rows]
    (out_dir / "nmse_sweep.csv").write_text("\n".join(lines) + "\n")

    k_q, m_q = first_result.peak_bin
    power = first_result.mean_noisy_power
    v = first_cfg.platform.speed_mps
    (out_dir / "profile_range.csv").write_text(_profile_csv(
        power[:, m_q],
        np.arange(first_cfg.n_subcarriers) * first_cfg.range_pitch_m,
        "range_m"))
    (out_dir / "profile_azimuth.csv").write_text(_profile_csv(
        power[k_q, :],
        np.arange(first_cfg.n_symbols) * v * first_cfg.total_symbol_s,
        "azimuth_m"))

    _render_stage_artifacts(scenario, first_cfg, mask, first_result, out_dir)
    return out_dir


def main(argv: Optional[list] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="ofdmsar",
        description="Simulate OFDM-waveform radar imaging scenarios")
    parser.add_argument("--config", required=True, help="scenario JSON path")
    parser.add_argument("--out-dir", default="out", help="artifact directory")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--filter", choices=_FILTER_CHOICES,
                        help="override the filter selection")
    parser.add_argument("--mode", choices=MODES, help="override the mode")
    parser.add_argument("--snr-db", type=float, action="append",
                        help="override snr sweep (repeatable)")
    args = parser.parse_args(argv)

    try:
        config_path = Path(args.config)
        scenario = parse_config(config_path.read_text(),
                                config_dir=config_path.parent)
        if args.seed is not None:
            scenario = replace(scenario, seed=args.seed)
        if args.filter is not None:
            filters = (FILTER_KINDS if args.filter == "all"
                       else (args.filter,))
            scenario = replace(scenario, filters=filters)
        if args.mode is not None:
            if args.mode == "pilot_only" and scenario.srs is None:
                raise ConfigError("$.srs", "required when mode is pilot_only")
            scenario = replace(scenario, mode=args.mode)
        if args.snr_db:
            scenario = replace(scenario,
                               snr_db=tuple(dict.fromkeys(args.snr_db)))
        out = run_scenario(scenario, Path(args.out_dir))
    except OfdmSarError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
