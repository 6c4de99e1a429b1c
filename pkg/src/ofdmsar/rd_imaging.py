"""Modified range-Doppler focusing chain.

Stages, in fixed order, starting from a filtered temporal-frequency grid:

  tf   -> rc    range compression: unitary inverse DFT over subcarriers
  rc   -> rd    azimuth FFT: unitary forward DFT over symbols, centered
  rd   -> rcmc  range cell migration correction in the Doppler domain
  rcmc -> ac    azimuth compression: quadratic phase match + inverse DFT

Conventions: Doppler bins use the signed/centered index p = bin - M//2
(zero Doppler at bin M//2 of the stored array); range bin k has pitch
c/(2 N df); azimuth output bin m is the symbol index of closest approach.
The stationary-phase analysis helpers (stationary_point, spa_spectrum)
mirror what the chain does implicitly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple, Optional, Union

import numpy as np

from .errors import InvalidParameterError, StageError
from .echo import EchoGrid, STAGE_CODES
from .waveform import RadarConfig

STAGE_ORDER = ("tf", "rc", "rd", "rcmc", "ac")


@dataclass(frozen=True)
class ImageGrid:
    """An N x M grid at a known stage of the focusing chain.

    r_bar_ref_m records the reference range used by RCMC so azimuth
    compression can default to the same value.
    """

    data: np.ndarray
    cfg: RadarConfig
    stage: str
    r_bar_ref_m: Optional[float] = None

    def __post_init__(self):
        if self.stage not in STAGE_ORDER:
            raise StageError(
                f"unknown stage {self.stage!r}; expected one of {STAGE_ORDER}")
        expected = (self.cfg.n_subcarriers, self.cfg.n_symbols)
        if self.data.shape != expected:
            raise InvalidParameterError(
                f"grid shape {self.data.shape} != configured {expected}")

    # Axis metadata ------------------------------------------------------

    @property
    def range_pitch_m(self) -> float:
        return self.cfg.range_pitch_m

    @property
    def azimuth_pitch_m(self) -> float:
        return self.cfg.azimuth_pitch_m

    @property
    def doppler_pitch_hz(self) -> float:
        return self.cfg.doppler_pitch_hz

    @property
    def doppler_zero_bin(self) -> int:
        """Array column holding zero Doppler in the rd/rcmc stages."""
        return self.cfg.n_symbols // 2

    def doppler_bins(self) -> np.ndarray:
        """Signed Doppler index p per stored column."""
        m = self.cfg.n_symbols
        return np.arange(m) - m // 2

    def doppler_freqs_hz(self) -> np.ndarray:
        return self.doppler_bins() * self.doppler_pitch_hz


def _as_stage(grid, expected: str, op: str,
              cfg: Optional[RadarConfig] = None) -> tuple[np.ndarray, RadarConfig, Optional[float]]:
    """Unwrap an input grid, enforcing the stage ordering."""
    if isinstance(grid, ImageGrid):
        if grid.stage != expected:
            raise StageError(
                f"{op} expects a {expected!r}-stage grid, got {grid.stage!r}")
        return grid.data, grid.cfg, grid.r_bar_ref_m
    if isinstance(grid, EchoGrid):
        if expected != "tf":
            raise StageError(f"{op} expects a {expected!r}-stage grid, got an echo grid")
        return grid.data, grid.cfg, None
    data = np.asarray(grid)
    if cfg is None:
        raise InvalidParameterError(f"{op} needs a cfg when given a bare array")
    return data, cfg, None


def range_compress(grid: Union[EchoGrid, ImageGrid, np.ndarray],
                   cfg: Optional[RadarConfig] = None) -> ImageGrid:
    """Per-symbol unitary inverse DFT over subcarriers.

    A scatterer at mean range Rbar contributes the subcarrier phase ramp
    exp(-j 2 pi n Rbar/(N rho_r)), which the inverse DFT collapses onto
    range bin k = Rbar/rho_r with peak gain sqrt(N).
    """
    data, cfg, _ = _as_stage(grid, "tf", "range_compress", cfg)
    n = cfg.n_subcarriers
    out = np.fft.ifft(data, axis=0) * np.sqrt(n)
    return ImageGrid(data=out, cfg=cfg, stage="rc")


def azimuth_fft(grid: Union[ImageGrid, np.ndarray],
                cfg: Optional[RadarConfig] = None) -> ImageGrid:
    """Per-range unitary forward DFT over symbols, zero Doppler centered."""
    data, cfg, _ = _as_stage(grid, "rc", "azimuth_fft", cfg)
    m = cfg.n_symbols
    out = np.fft.fftshift(np.fft.fft(data, axis=1), axes=1) / np.sqrt(m)
    return ImageGrid(data=out, cfg=cfg, stage="rd")


class StationaryPoint(NamedTuple):
    m_tilde: Union[float, np.ndarray]
    in_support: Union[bool, np.ndarray]


def stationary_point(p, cfg: RadarConfig, r_bar_m: float,
                     y_q_m: float) -> StationaryPoint:
    """Symbol index whose instantaneous Doppler equals bin p.

    The azimuth phase -pi K_a T^2 (m - m_q)^2 beaten against the DFT kernel
    -2 pi p m / M is stationary at

        m_tilde = m_q - p / (M T^2 K_a),   m_q = y_q / (v T).

    Returns the (possibly fractional) index and whether it falls inside the
    aperture [0, M).
    """
    k_a = cfg.azimuth_rate_at(r_bar_m)
    t = cfg.total_symbol_s
    v = cfg.platform.speed_mps
    if v <= 0:
        raise InvalidParameterError("stationary point undefined for a static platform")
    p = np.asarray(p, dtype=float)
    m_tilde = y_q_m / (v * t) - p / (cfg.n_symbols * t * t * k_a)
    in_support = (m_tilde >= 0.0) & (m_tilde < cfg.n_symbols)
    if m_tilde.ndim == 0:
        return StationaryPoint(float(m_tilde), bool(in_support))
    return StationaryPoint(m_tilde, in_support)


class SpaResult(NamedTuple):
    value: complex
    m_tilde: float
    in_support: bool


def spa_spectrum(envelope: np.ndarray, a: float, b: float, m_count: int,
                 p) -> SpaResult:
    """Stationary-phase approximation of the length-M DFT of a chirp.

    The signal is u_m = w_m exp(j (a m^2 + b m)) for m = 0..M-1 with
    envelope w given per sample.  The DFT sum at signed bin p has total
    phase a m^2 + (b - 2 pi p / M) m, stationary at
    m_tilde = (2 pi p / M - b) / (2 a); the approximation is

        U_p ~= w(m_tilde) e^{j Phi(m_tilde)} sqrt(2 pi/|2a|) e^{j sgn(a) pi/4}.

    Out-of-support stationary points return value 0 with in_support False.
    """
    envelope = np.asarray(envelope, dtype=float)
    if envelope.ndim != 1 or envelope.size != m_count:
        raise InvalidParameterError(
            f"envelope must be a length-{m_count} vector, got shape {envelope.shape}")
    if a == 0:
        raise InvalidParameterError(
            "degenerate phase: quadratic coefficient a must be nonzero")
    _warn_if_fast_envelope(envelope, a)
    p = float(p)
    m_tilde = (2.0 * np.pi * p / m_count - b) / (2.0 * a)
    in_support = 0.0 <= m_tilde < m_count
    if not in_support:
        return SpaResult(0.0 + 0.0j, m_tilde, False)
    w = float(np.interp(m_tilde, np.arange(m_count), envelope))
    total_phase = (a * m_tilde ** 2 + b * m_tilde
                   - 2.0 * np.pi * p * m_tilde / m_count)
    value = (w * np.exp(1j * total_phase)
             * np.sqrt(2.0 * np.pi / abs(2.0 * a))
             * np.exp(1j * np.sign(a) * np.pi / 4.0))
    return SpaResult(complex(value), m_tilde, True)


def _warn_if_fast_envelope(envelope: np.ndarray, a: float):
    """Warn when the envelope varies comparably fast to the chirp phase.

    The interior envelope variation per sample is compared against the
    phase-rate scale |2a| * M/4 (typical |Phi'| deviation from the
    stationary point); boundary jumps of a finite window are ignored.
    """
    if envelope.size < 4:
        return
    interior = np.abs(np.diff(envelope[1:-1]))
    peak = np.max(np.abs(envelope))
    if peak == 0 or interior.size == 0:
        return
    env_rate = float(interior.max()) / peak
    if env_rate == 0.0:
        return
    phase_rate = abs(2.0 * a) * envelope.size / 4.0
    ratio = phase_rate / env_rate
    if ratio <= 10.0:
        warnings.warn(
            f"envelope varies too fast for the stationary-phase approximation "
            f"(rate ratio {ratio:.2f} <= 10)", RuntimeWarning, stacklevel=3)


def rcm_shift(p, cfg: RadarConfig, r_bar_ref_m: float):
    """Migration of the range peak at Doppler bin p, in fractional bins.

    delta_k = v^2 p^2 / (2 Rbar (K_a M T)^2 rho_r), evaluated at the
    reference range; even in p and quadratic in it.
    """
    if r_bar_ref_m <= 0:
        raise InvalidParameterError(f"reference range must be > 0, got {r_bar_ref_m}")
    k_a = cfg.azimuth_rate_at(r_bar_ref_m)
    v = cfg.platform.speed_mps
    denom = 2.0 * r_bar_ref_m * (k_a * cfg.n_symbols * cfg.total_symbol_s) ** 2 \
        * cfg.range_pitch_m
    return v ** 2 * np.asarray(p, dtype=float) ** 2 / denom


RCMC_METHODS = ("windowed_sinc", "phase_ramp")


def _fractional_shift_sinc(col: np.ndarray, shift: float, halfwidth: int) -> np.ndarray:
    """out[k] = col[k + shift] via a windowed-sinc kernel, circularly.

    Range columns are synthesized from one-sided subcarrier content, so in
    the range domain they ride a near-Nyquist carrier that a sinc kernel
    cannot interpolate directly.  The column is demodulated to band centre
    first and remodulated after, leaving the kernel lowpass content.
    """
    whole = int(np.floor(shift))
    frac = shift - whole
    taps = np.arange(-halfwidth + 1, halfwidth + 1)
    u = taps - frac
    kernel = np.sinc(u) * 0.5 * (1.0 + np.cos(np.pi * u / halfwidth))
    n = col.size
    signs = 1.0 - 2.0 * (np.arange(n) % 2)  # e^{-j pi k}: shift band by -N/2
    idx = (np.arange(n)[:, None] + whole + taps[None, :]) % n
    shifted = (col * signs)[idx] @ kernel
    return shifted * signs * np.exp(1j * np.pi * shift)


def _fractional_shift_ramp(col: np.ndarray, shift: float) -> np.ndarray:
    """Exact cyclic fractional shift via a linear phase ramp.

    The ramp runs over the native one-sided subcarrier indices 0..N-1 (the
    basis range compression synthesizes from), so out[k] = col[k + shift]
    holds exactly for grid content of any shape, and the map is unitary.
    """
    n = col.size
    ramp = np.exp(2j * np.pi * np.arange(n) * (shift / n))
    return np.fft.ifft(np.fft.fft(col) * ramp)


def rcmc(grid: ImageGrid, r_bar_ref_m: float, method: str = "windowed_sinc",
         halfwidth: int = 8) -> ImageGrid:
    """Straighten migration trajectories in the range-Doppler domain.

    Each Doppler column p is advanced along range by its predicted
    migration: out[k, p] = in[k + delta_k(p), p], so a scatterer's energy
    returns to its zero-Doppler range bin for all p.
    """
    if method not in RCMC_METHODS:
        raise InvalidParameterError(
            f"unknown RCMC method {method!r}; expected one of {RCMC_METHODS}")
    if halfwidth < 1:
        raise InvalidParameterError(f"halfwidth must be >= 1, got {halfwidth}")
    data, cfg, _ = _as_stage(grid, "rd", "rcmc")
    shifts = rcm_shift(grid.doppler_bins(), cfg, r_bar_ref_m)
    out = np.empty_like(data)
    for j, shift in enumerate(shifts):
        col = data[:, j]
        if shift == 0.0:
            out[:, j] = col
        elif method == "phase_ramp":
            out[:, j] = _fractional_shift_ramp(col, shift)
        else:
            out[:, j] = _fractional_shift_sinc(col, shift, halfwidth)
    return ImageGrid(data=out, cfg=cfg, stage="rcmc", r_bar_ref_m=r_bar_ref_m)


KA_MODES = ("reference", "per_range_bin")


def azimuth_compress(grid: ImageGrid, ka_mode: str = "reference",
                     r_bar_ref_m: Optional[float] = None) -> ImageGrid:
    """Match the quadratic Doppler phase and return to the azimuth domain.

    Multiplies each Doppler sample by exp(-j pi p^2 / (M^2 T^2 K_a)) plus
    the constant exp(+j pi/4) that cancels the stationary-phase residual,
    then applies the unitary inverse DFT per range row.  K_a is taken at
    the reference range, or per output range bin (k * rho_r) in
    per_range_bin mode.
    """
    if ka_mode not in KA_MODES:
        raise InvalidParameterError(
            f"unknown ka_mode {ka_mode!r}; expected one of {KA_MODES}")
    data, cfg, stored_ref = _as_stage(grid, "rcmc", "azimuth_compress")
    if cfg.platform.speed_mps <= 0:
        raise InvalidParameterError("azimuth compression undefined for a static platform")
    m = cfg.n_symbols
    p = grid.doppler_bins().astype(float)
    mt_sq = (m * cfg.total_symbol_s) ** 2
    lam = cfg.wavelength_m
    v = cfg.platform.speed_mps
    if ka_mode == "reference":
        ref = r_bar_ref_m if r_bar_ref_m is not None else stored_ref
        if ref is None:
            raise InvalidParameterError(
                "reference-range azimuth compression needs r_bar_ref_m "
                "(none stored on the grid)")
        inv_ka = 1.0 / cfg.azimuth_rate_at(ref)
        phase = np.exp(-1j * np.pi * p ** 2 * inv_ka / mt_sq)[None, :]
        ref_out = ref
    else:
        k = np.arange(cfg.n_subcarriers, dtype=float)
        inv_ka = lam * (k * cfg.range_pitch_m) / (2.0 * v ** 2)
        phase = np.exp(-1j * np.pi * np.outer(inv_ka, p ** 2) / mt_sq)
        ref_out = r_bar_ref_m if r_bar_ref_m is not None else stored_ref
    matched = data * phase * np.exp(1j * np.pi / 4.0)
    out = np.fft.ifft(np.fft.ifftshift(matched, axes=1), axis=1) * np.sqrt(m)
    return ImageGrid(data=out, cfg=cfg, stage="ac", r_bar_ref_m=ref_out)


def focus_image(grid: Union[EchoGrid, ImageGrid, np.ndarray],
                cfg: Optional[RadarConfig] = None,
                r_bar_ref_m: Optional[float] = None,
                rcmc_method: str = "windowed_sinc",
                rcmc_halfwidth: int = 8,
                ka_mode: str = "reference",
                collect_stages: bool = False):
    """Run the full chain tf -> rc -> rd -> rcmc -> ac.

    Returns the focused ImageGrid, or a dict of every stage when
    collect_stages is set.
    """
    if r_bar_ref_m is None:
        raise InvalidParameterError("focus_image needs a reference range r_bar_ref_m")
    rc = range_compress(grid, cfg)
    rd = azimuth_fft(rc)
    corrected = rcmc(rd, r_bar_ref_m, method=rcmc_method, halfwidth=rcmc_halfwidth)
    focused = azimuth_compress(corrected, ka_mode=ka_mode)
    if collect_stages:
        return {"rc": rc, "rd": rd, "rcmc": corrected, "ac": focused}
    return focused


def image_to_bytes(grid: ImageGrid) -> bytes:
    """Serialize with the shared binary grid format (stage byte set)."""
    from .echo import grid_to_bytes
    return grid_to_bytes(grid.data, grid.stage)


# Re-export for callers that reason about serialized stages.
SERIAL_STAGE_CODES = STAGE_CODES
