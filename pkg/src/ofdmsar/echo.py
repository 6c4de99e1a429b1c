"""Temporal-frequency-domain echo synthesis.

For a scene of Q point scatterers the noiseless received grid is

    y_{n,m} = sum_q alpha_q s_{n,m}
              * exp(-j (4 pi / c) n df (dR_{q,m} + Rbar_q))
              * exp(-j (4 pi / c) fc dR_{q,m})

with alpha_q = d_q exp(-j (4 pi / c) fc Rbar_q), dR_{q,m} the first-order
slant-range deviation (v m T_sym - y_q)^2 / (2 Rbar_q), and z ~ CN(0, s^2)
added elementwise.  Equivalently y = H .* s with H the channel matrix of
build_channel_matrix, which this module guarantees to machine precision.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import BinaryIO, Optional, Union

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

from .errors import ConfigurationError, InvalidParameterError, SceneError, StageError
from .scene import PointTarget, Scene
from .waveform import NOISE_STREAM, RCS_STREAM, RadarConfig, SymbolGrid, _philox

_FOUR_PI_OVER_C = 4.0 * np.pi / SPEED_OF_LIGHT


@dataclass(frozen=True)
class EchoGrid:
    """A received N x M temporal-frequency grid plus its provenance."""

    data: np.ndarray
    cfg: RadarConfig
    noise_seed: int = 0
    rcs_seed: int = 0

    def __post_init__(self):
        expected = (self.cfg.n_subcarriers, self.cfg.n_symbols)
        if self.data.shape != expected:
            raise ConfigurationError(
                f"echo grid shape {self.data.shape} != configured {expected}")


def _range_deviation_m(target: PointTarget, cfg: RadarConfig,
                       m_idx: np.ndarray) -> tuple[float, np.ndarray]:
    """(Rbar_q, dR_{q,m}) for all symbol indices."""
    r_bar = target.mean_range_m(cfg.platform)
    offset = cfg.platform.speed_mps * m_idx * cfg.total_symbol_s - target.y_m
    return r_bar, offset ** 2 / (2.0 * r_bar)


def check_cp_margin(scene: Scene, cfg: RadarConfig):
    """Enforce T_cp > max round-trip delay (no inter-symbol interference)."""
    m_idx = np.arange(cfg.n_symbols, dtype=float)
    for i, target in enumerate(scene.targets):
        r_bar, d_r = _range_deviation_m(target, cfg, m_idx)
        delay = 2.0 * (r_bar + float(d_r.max())) / SPEED_OF_LIGHT
        if delay >= cfg.cp_duration_s:
            raise ConfigurationError(
                f"target {i} at ({target.x_m}, {target.y_m}) m has round-trip "
                f"delay {delay * 1e6:.3f} us >= cyclic prefix "
                f"{cfg.cp_duration_s * 1e6:.3f} us")


def build_channel_matrix(scene: Scene, cfg: RadarConfig,
                         amplitudes: Optional[np.ndarray] = None) -> np.ndarray:
    """Sum of per-target rank-structured channel matrices.

    H = sum_q alpha_q * outer(b_q, c_q) .* E_q with
      b_n = exp(-j (4 pi / c) n df Rbar_q)        (range term),
      c_m = exp(-j (4 pi / c) fc dR_{q,m})        (azimuth term),
      E_{n,m} = exp(-j (4 pi / c) n df dR_{q,m})  (coupling / migration term),
    and alpha_q = d_q exp(-j (4 pi / c) fc Rbar_q).  amplitudes overrides
    the raw d_q (defaults to each target's deterministic sqrt(rcs_var)).
    """
    if scene.q == 0:
        raise SceneError("empty scene has no channel matrix")
    if amplitudes is None:
        amplitudes = np.array([np.sqrt(t.rcs_var) for t in scene.targets],
                              dtype=complex)
    amplitudes = np.asarray(amplitudes, dtype=complex)
    if amplitudes.shape != (scene.q,):
        raise InvalidParameterError(
            f"amplitudes shape {amplitudes.shape} != (Q,) = ({scene.q},)")

    n_idx = np.arange(cfg.n_subcarriers, dtype=float)
    m_idx = np.arange(cfg.n_symbols, dtype=float)
    h = np.zeros((cfg.n_subcarriers, cfg.n_symbols), dtype=complex)
    for d_q, target in zip(amplitudes, scene.targets):
        r_bar, d_r = _range_deviation_m(target, cfg, m_idx)
        alpha = d_q * np.exp(-1j * _FOUR_PI_OVER_C * cfg.fc_hz * r_bar)
        b = np.exp(-1j * _FOUR_PI_OVER_C * cfg.subcarrier_spacing_hz * r_bar * n_idx)
        c_row = np.exp(-1j * _FOUR_PI_OVER_C * cfg.fc_hz * d_r)
        coupling = np.exp(-1j * _FOUR_PI_OVER_C * cfg.subcarrier_spacing_hz
                          * np.outer(n_idx, d_r))
        h += alpha * (b[:, None] * c_row[None, :]) * coupling
    return h


def draw_noise(cfg: RadarConfig, noise_seed: int, n_trials: int = 1) -> np.ndarray:
    """i.i.d. CN(0, noise_var) grids, shape (n_trials, N, M)."""
    shape = (n_trials, cfg.n_subcarriers, cfg.n_symbols)
    if cfg.noise_var == 0.0:
        return np.zeros(shape, dtype=complex)
    rng = _philox(noise_seed, NOISE_STREAM)
    parts = rng.standard_normal(shape + (2,))
    return np.sqrt(cfg.noise_var / 2.0) * (parts[..., 0] + 1j * parts[..., 1])


def synthesize_echo(scene: Scene, cfg: RadarConfig, symbols: SymbolGrid,
                    noise_seed: int = 0, rcs_seed: int = 0) -> EchoGrid:
    """One received grid realization for scene, symbols, and seeds.

    Deterministic given (symbols, noise_seed, rcs_seed): random target
    amplitudes come from rcs_seed and the additive CN(0, noise_var) grid
    from noise_seed, each on its own counter-based stream.
    """
    expected = (cfg.n_subcarriers, cfg.n_symbols)
    if symbols.data.shape != expected:
        raise ConfigurationError(
            f"symbol grid shape {symbols.data.shape} != configured {expected}")
    check_cp_margin(scene, cfg)
    if scene.q == 0:
        noiseless = np.zeros(expected, dtype=complex)
    else:
        amps = scene.draw_amplitudes(_philox(rcs_seed, RCS_STREAM), 1)[0]
        noiseless = build_channel_matrix(scene, cfg, amplitudes=amps) * symbols.data
    data = noiseless + draw_noise(cfg, noise_seed, 1)[0]
    return EchoGrid(data=data, cfg=cfg, noise_seed=noise_seed, rcs_seed=rcs_seed)


# Binary grid serialization ------------------------------------------------
#
# 32-byte header: magic "OSAR", u32 version, u32 N, u32 M, u8 stage code,
# 15 pad bytes; then N*M interleaved little-endian float64 (re, im) pairs,
# subcarrier-major.

GRID_MAGIC = b"OSAR"
GRID_VERSION = 1
STAGE_CODES = {"tf": 0, "rc": 1, "rd": 2, "rcmc": 3, "ac": 4}
_STAGE_NAMES = {v: k for k, v in STAGE_CODES.items()}
_HEADER = struct.Struct("<4sIIIB15x")


def grid_to_bytes(data: np.ndarray, stage: str = "tf") -> bytes:
    if stage not in STAGE_CODES:
        raise StageError(f"unknown stage {stage!r}; expected one of {sorted(STAGE_CODES)}")
    if data.ndim != 2:
        raise InvalidParameterError(f"grid must be 2-D, got shape {data.shape}")
    n, m = data.shape
    header = _HEADER.pack(GRID_MAGIC, GRID_VERSION, n, m, STAGE_CODES[stage])
    interleaved = np.empty((n, m, 2), dtype="<f8")
    interleaved[..., 0] = data.real
    interleaved[..., 1] = data.imag
    return header + interleaved.tobytes()


def grid_from_bytes(blob: bytes) -> tuple[np.ndarray, str]:
    if len(blob) < _HEADER.size:
        raise InvalidParameterError(
            f"grid blob shorter than {_HEADER.size}-byte header")
    magic, version, n, m, stage_code = _HEADER.unpack_from(blob)
    if magic != GRID_MAGIC:
        raise InvalidParameterError(f"bad grid magic {magic!r}")
    if version != GRID_VERSION:
        raise InvalidParameterError(f"unsupported grid version {version}")
    if stage_code not in _STAGE_NAMES:
        raise StageError(f"unknown stage code {stage_code}")
    need = _HEADER.size + 16 * n * m
    if len(blob) != need:
        raise InvalidParameterError(
            f"grid blob length {len(blob)} != expected {need}")
    flat = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size)
    pairs = flat.reshape(n, m, 2)
    return pairs[..., 0] + 1j * pairs[..., 1], _STAGE_NAMES[stage_code]


def save_grid(file: Union[str, BinaryIO], data: np.ndarray, stage: str = "tf"):
    blob = grid_to_bytes(data, stage)
    if hasattr(file, "write"):
        file.write(blob)
    else:
        with open(file, "wb") as fh:
            fh.write(blob)


def load_grid(file: Union[str, BinaryIO]) -> tuple[np.ndarray, str]:
    if hasattr(file, "read"):
        blob = file.read()
    else:
        with open(file, "rb") as fh:
            blob = fh.read()
    return grid_from_bytes(blob)
