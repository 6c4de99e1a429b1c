"""OFDM waveform configuration, QAM alphabets, and symbol-grid generation.

The transmitted frame is an N x M temporal-frequency grid: N subcarriers
spaced subcarrier_spacing_hz apart, M OFDM symbols of total duration
total_symbol_s (useful part plus cyclic prefix).  Communication payloads
fill every resource element; sounding-reference transmissions occupy a
sparse comb described by SrsConfig.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, NamedTuple, Optional

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

from .errors import ConfigurationError, InvalidParameterError
from .geometry import PlatformGeometry

if TYPE_CHECKING:  # pragma: no cover
    from .tf_filter import FilterSpec

_REL_TOL = 1e-9


@dataclass(frozen=True)
class RadarConfig:
    """Static parameters of one acquisition.

    symbol_duration_s, total_symbol_s and n_symbols may be left None and are
    then derived from the subcarrier spacing, cyclic prefix and aperture
    time.  When given explicitly they must be consistent:
    symbol_duration_s == 1/subcarrier_spacing_hz,
    total_symbol_s == symbol_duration_s + cp_duration_s,
    n_symbols == round(aperture_time_s / total_symbol_s).
    """

    fc_hz: float
    bandwidth_hz: float
    subcarrier_spacing_hz: float
    cp_duration_s: float
    aperture_time_s: float
    n_subcarriers: int
    platform: PlatformGeometry
    symbol_duration_s: Optional[float] = None
    total_symbol_s: Optional[float] = None
    n_symbols: Optional[int] = None
    azimuth_downsample: int = 1
    snr_in_linear: Optional[float] = None
    noise_var: float = 0.0

    def __post_init__(self):
        for name in ("fc_hz", "bandwidth_hz", "subcarrier_spacing_hz",
                     "cp_duration_s", "aperture_time_s"):
            if getattr(self, name) <= 0:
                raise InvalidParameterError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.n_subcarriers < 1:
            raise InvalidParameterError(f"n_subcarriers must be >= 1, got {self.n_subcarriers}")
        if self.azimuth_downsample < 1:
            raise InvalidParameterError(
                f"azimuth_downsample must be >= 1, got {self.azimuth_downsample}")
        if self.noise_var < 0:
            raise InvalidParameterError(f"noise_var must be >= 0, got {self.noise_var}")
        if self.snr_in_linear is not None and self.snr_in_linear <= 0:
            raise InvalidParameterError(
                f"snr_in_linear must be > 0 when given, got {self.snr_in_linear}")

        t_useful = 1.0 / self.subcarrier_spacing_hz
        if self.symbol_duration_s is None:
            object.__setattr__(self, "symbol_duration_s", t_useful)
        elif not math.isclose(self.symbol_duration_s, t_useful, rel_tol=_REL_TOL):
            raise ConfigurationError(
                f"symbol_duration_s {self.symbol_duration_s} is not the reciprocal "
                f"of subcarrier_spacing_hz (expected {t_useful})")

        t_total = self.symbol_duration_s + self.cp_duration_s
        if self.total_symbol_s is None:
            object.__setattr__(self, "total_symbol_s", t_total)
        elif not math.isclose(self.total_symbol_s, t_total, rel_tol=_REL_TOL):
            raise ConfigurationError(
                f"total_symbol_s {self.total_symbol_s} != symbol + cp duration {t_total}")

        m_expected = round(self.aperture_time_s / self.total_symbol_s)
        if self.n_symbols is None:
            object.__setattr__(self, "n_symbols", m_expected)
        elif self.n_symbols != m_expected:
            raise ConfigurationError(
                f"n_symbols {self.n_symbols} != round(aperture / total symbol) {m_expected}")
        if self.n_symbols < 1:
            raise ConfigurationError("aperture shorter than one OFDM symbol")

        occupied = self.n_subcarriers * self.subcarrier_spacing_hz
        if occupied > self.bandwidth_hz * (1 + _REL_TOL):
            raise ConfigurationError(
                f"occupied bandwidth N*df = {occupied:.6g} Hz exceeds "
                f"bandwidth_hz = {self.bandwidth_hz:.6g} Hz")

    # Derived quantities -------------------------------------------------

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / self.fc_hz

    @property
    def prf_hz(self) -> float:
        """Azimuth sampling rate, one sample per OFDM symbol."""
        return 1.0 / self.total_symbol_s

    @property
    def occupied_bandwidth_hz(self) -> float:
        return self.n_subcarriers * self.subcarrier_spacing_hz

    @property
    def range_pitch_m(self) -> float:
        """Range-bin spacing c / (2 N df) of the compressed profile."""
        return SPEED_OF_LIGHT / (2.0 * self.occupied_bandwidth_hz)

    @property
    def unambiguous_range_m(self) -> float:
        """Range window c / (2 df) spanned by the N compressed bins."""
        return SPEED_OF_LIGHT / (2.0 * self.subcarrier_spacing_hz)

    @property
    def azimuth_pitch_m(self) -> float:
        return self.platform.speed_mps * self.total_symbol_s

    @property
    def doppler_pitch_hz(self) -> float:
        return 1.0 / (self.n_symbols * self.total_symbol_s)

    def azimuth_rate_at(self, r_bar_m: float) -> float:
        """Doppler rate 2 v^2 / (lambda R) of a scatterer at range R, Hz/s."""
        if r_bar_m <= 0:
            raise InvalidParameterError(f"range must be > 0, got {r_bar_m}")
        return 2.0 * self.platform.speed_mps ** 2 / (self.wavelength_m * r_bar_m)

    def azimuth_bandwidth_at(self, r_bar_m: float) -> float:
        """Doppler extent K_a * T_a swept over the aperture, Hz."""
        return self.azimuth_rate_at(r_bar_m) * self.aperture_time_s

    # Transformations ----------------------------------------------------

    def decimated(self, step: int) -> "RadarConfig":
        """Configuration of the grid kept after taking every step-th symbol.

        The azimuth sample interval grows to step * total_symbol_s and the
        symbol count drops to n_symbols // step; subcarrier parameters are
        unchanged.  The aperture time is re-derived from the kept symbols.
        """
        if step < 1 or step != int(step):
            raise InvalidParameterError(f"decimation step must be a positive int, got {step}")
        step = int(step)
        if step == 1:
            return self
        m_kept = self.n_symbols // step
        if m_kept < 1:
            raise ConfigurationError(
                f"decimation step {step} leaves no symbols out of {self.n_symbols}")
        t_total = self.total_symbol_s * step
        return replace(
            self,
            cp_duration_s=t_total - self.symbol_duration_s,
            total_symbol_s=t_total,
            n_symbols=m_kept,
            aperture_time_s=m_kept * t_total,
            azimuth_downsample=1,
        )

    def with_noise(self, noise_var: float,
                   snr_in_linear: Optional[float] = None) -> "RadarConfig":
        return replace(self, noise_var=noise_var, snr_in_linear=snr_in_linear)


def nr_config(platform: PlatformGeometry,
              n_subcarriers: int = 3276,
              aperture_time_s: float = 2.0,
              **overrides) -> RadarConfig:
    """A 100 MHz / 30 kHz new-radio style configuration.

    3.5 GHz carrier, 30 kHz subcarrier spacing, cyclic prefix of a quarter
    useful symbol (total symbol 41.667 us), and a 3276-subcarrier grid
    occupying 98.28 MHz of the 100 MHz channel.
    """
    spacing = overrides.pop("subcarrier_spacing_hz", 30e3)
    params = dict(
        fc_hz=3.5e9,
        bandwidth_hz=100e6,
        subcarrier_spacing_hz=spacing,
        cp_duration_s=0.25 / spacing,
        aperture_time_s=aperture_time_s,
        n_subcarriers=n_subcarriers,
        platform=platform,
    )
    params.update(overrides)
    return RadarConfig(**params)


# Constellations ---------------------------------------------------------

@dataclass(frozen=True)
class Constellation:
    """A unit-mean-power QAM alphabet with exact modulus moments."""

    name: str
    points: np.ndarray = field(repr=False)

    @property
    def order(self) -> int:
        return self.points.size

    @property
    def mean_power(self) -> float:
        """E|s|^2, equal to 1 by construction."""
        return float(np.mean(np.abs(self.points) ** 2))

    @property
    def fourth_moment(self) -> float:
        """E|s|^4."""
        return float(np.mean(np.abs(self.points) ** 4))

    @property
    def inverse_power(self) -> float:
        """E[1/|s|^2], the inversion noise-enhancement factor."""
        return float(np.mean(1.0 / np.abs(self.points) ** 2))


_QAM_NAMES = {"qpsk": 4, "qam16": 16, "qam64": 64, "qam256": 256}


def make_qam(name_or_order) -> Constellation:
    """Build a square QAM constellation normalized to unit average power.

    Accepts an order in {4, 16, 64, 256} or a name in
    {"qpsk", "qam16", "qam64", "qam256"}.
    """
    if isinstance(name_or_order, str):
        name = name_or_order.lower()
        if name not in _QAM_NAMES:
            raise InvalidParameterError(
                f"unknown constellation {name_or_order!r}; "
                f"expected one of {sorted(_QAM_NAMES)}")
        order = _QAM_NAMES[name]
    else:
        order = int(name_or_order)
        names = {v: k for k, v in _QAM_NAMES.items()}
        if order not in names:
            raise InvalidParameterError(
                f"unsupported QAM order {order}; expected one of {sorted(names)}")
        name = names[order]
    side = int(round(math.sqrt(order)))
    levels = np.arange(-side + 1, side, 2, dtype=float)
    re, im = np.meshgrid(levels, levels)
    points = (re + 1j * im).ravel()
    points /= math.sqrt(2.0 * (side * side - 1) / 3.0)
    return Constellation(name=name, points=points)


# Filter statistics --------------------------------------------------------

class FilterStats(NamedTuple):
    """Alphabet moments of the filtered spectrum chi = s*g and gain g."""

    chi_mean: float
    chi_var: float
    gain_sq_mean: float

    @property
    def chi_err_sq_mean(self) -> float:
        """E[(chi - 1)^2] = Var[chi] + (E[chi] - 1)^2."""
        return self.chi_var + (self.chi_mean - 1.0) ** 2


def chi_stats(constellation: Constellation, filt: "FilterSpec") -> FilterStats:
    """Exact moments (E[chi], Var[chi], E[|g|^2]) over the alphabet.

    chi = s*g is real and non-negative for all three filters:
    reciprocal g = 1/s gives chi = 1; matched g = conj(s) gives chi = |s|^2;
    Wiener g = conj(s)/(|s|^2 + 1/SNR_in) gives chi = |s|^2/(|s|^2 + 1/SNR_in).
    """
    x = np.abs(constellation.points) ** 2
    kind = filt.kind
    if kind == "rf":
        return FilterStats(1.0, 0.0, float(np.mean(1.0 / x)))
    if kind == "mf":
        chi = x
        gain_sq = x
    elif kind == "wf":
        if filt.snr_in_linear is None or filt.snr_in_linear <= 0:
            raise ConfigurationError("Wiener filter statistics need snr_in_linear > 0")
        gamma = 1.0 / filt.snr_in_linear
        chi = x / (x + gamma)
        gain_sq = x / (x + gamma) ** 2
    else:
        raise ConfigurationError(f"unknown filter kind {kind!r}")
    mean = float(np.mean(chi))
    var = float(np.mean((chi - mean) ** 2))
    return FilterStats(mean, var, float(np.mean(gain_sq)))


# Symbol grids -----------------------------------------------------------

@dataclass(frozen=True)
class SymbolGrid:
    """Realizations of the transmitted temporal-frequency grid.

    data is (N, M) for a single draw or (trials, N, M) for a batch; the
    mask is always a single (N, M) activity pattern shared by all trials.
    """

    data: np.ndarray
    mask: np.ndarray
    constellation: str
    seed: int

    def __post_init__(self):
        if self.data.shape[-2:] != self.mask.shape:
            raise ConfigurationError(
                f"data shape {self.data.shape} != mask shape {self.mask.shape}")


def _philox(seed: int, stream: int) -> np.random.Generator:
    """Counter-based generator; one derived stream per purpose."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(stream,))
    return np.random.Generator(np.random.Philox(ss))


SYMBOL_STREAM = 0
NOISE_STREAM = 1
RCS_STREAM = 2


def gen_symbol_grid(cfg: RadarConfig, constellation: Constellation, seed: int,
                    mask: Optional[np.ndarray] = None,
                    trials: Optional[int] = None) -> SymbolGrid:
    """Draw i.i.d. uniform constellation symbols on the N x M grid.

    The whole batch is drawn in one vectorized pass from a counter-based
    generator keyed by the seed, so the result does not depend on any
    evaluation schedule.  Entries outside the mask are set to zero.  With
    trials=None the data is a single (N, M) grid; with an integer it is a
    (trials, N, M) stack of independent realizations.
    """
    shape = (cfg.n_subcarriers, cfg.n_symbols)
    if mask is None:
        mask = np.ones(shape, dtype=bool)
    elif mask.shape != shape:
        raise ConfigurationError(f"mask shape {mask.shape} != grid shape {shape}")
    draw_shape = shape if trials is None else (trials,) + shape
    rng = _philox(seed, SYMBOL_STREAM)
    indices = rng.integers(0, constellation.order, size=draw_shape)
    data = np.where(mask, constellation.points[indices], 0.0 + 0.0j)
    return SymbolGrid(data=data, mask=mask.copy(), constellation=constellation.name,
                      seed=seed)


# Sounding reference combs ------------------------------------------------

@dataclass(frozen=True)
class SrsConfig:
    """Placement of sounding-reference symbols on the grid.

    One OFDM symbol out of every periodicity_slots * symbols_per_slot
    carries pilots; within it, every comb_spacing-th subcarrier of a block
    of 12 * n_resource_blocks subcarriers starting at start_subcarrier is
    active.
    """

    periodicity_slots: int = 20
    symbols_per_slot: int = 14
    comb_spacing: int = 4
    n_resource_blocks: int = 24
    start_subcarrier: int = 1667

    def __post_init__(self):
        for name in ("periodicity_slots", "symbols_per_slot", "comb_spacing",
                     "n_resource_blocks"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.start_subcarrier < 0:
            raise ConfigurationError(
                f"start_subcarrier must be >= 0, got {self.start_subcarrier}")

    @property
    def span_subcarriers(self) -> int:
        return 12 * self.n_resource_blocks

    @property
    def period_symbols(self) -> int:
        return self.periodicity_slots * self.symbols_per_slot

    def tone_indices(self) -> np.ndarray:
        """Subcarrier indices active in a pilot symbol."""
        return self.start_subcarrier + np.arange(0, self.span_subcarriers,
                                                 self.comb_spacing)


def srs_mask(cfg: RadarConfig, srs: SrsConfig) -> tuple[np.ndarray, float]:
    """Boolean activity mask of the pilot comb and the pilot repetition rate.

    Returns an (N, M) mask that is True on pilot resource elements, and the
    pilot PRF in Hz (one pilot symbol per period_symbols OFDM symbols).
    """
    if srs.start_subcarrier + srs.span_subcarriers > cfg.n_subcarriers:
        raise ConfigurationError(
            f"pilot block [{srs.start_subcarrier}, "
            f"{srs.start_subcarrier + srs.span_subcarriers}) does not fit in "
            f"{cfg.n_subcarriers} subcarriers")
    mask = np.zeros((cfg.n_subcarriers, cfg.n_symbols), dtype=bool)
    cols = np.arange(0, cfg.n_symbols, srs.period_symbols)
    mask[np.ix_(srs.tone_indices(), cols)] = True
    pilot_prf = 1.0 / (srs.period_symbols * cfg.total_symbol_s)
    return mask, pilot_prf
