"""Radar imaging with OFDM communication waveforms.

Synthesizes temporal-frequency echo grids from modulated symbol grids,
removes the data randomness with reciprocal / matched / Wiener filters,
focuses range-Doppler images, and quantifies point-target quality
(NMSE, ISLR, PEL, SNR_out) for data-aided and pilot-only operation.
"""

from .errors import (CapacityError, ConfigurationError, GeometryError,
                     InvalidParameterError, MeasurementError, OfdmSarError,
                     PgmParseError, SceneError, SingularSystemError,
                     StageError)
from .geometry import (PlatformGeometry, beamwidths,
                       envelope_to_phase_rate_ratio, ground_coverage,
                       mean_range, slant_range)
from .waveform import (Constellation, FilterStats, RadarConfig, SrsConfig,
                       SymbolGrid, chi_stats, gen_symbol_grid, make_qam,
                       nr_config, srs_mask)
from .scene import (PointTarget, Scene, load_scene_pgm, make_point_scene,
                    raster_extent, scene_from_descriptor, scene_to_descriptor)
from .echo import (EchoGrid, build_channel_matrix, check_cp_margin,
                   draw_noise, grid_from_bytes, grid_to_bytes, load_grid,
                   save_grid, synthesize_echo)
from .tf_filter import (FilterSpec, apply_tf_filter, channel_mse_analytic,
                        filter_gains)
from .rd_imaging import (ImageGrid, azimuth_compress, azimuth_fft,
                         focus_image, range_compress, rcm_shift, rcmc,
                         spa_spectrum, stationary_point)
from .metrics import (MetricsReport, analytic_point_metrics, doppler_support,
                      ideal_reference_image, identity_residual, islr,
                      measure_mainlobe_width, mse_vs_ideal, nmse, pedestal_level,
                      pel, snr_out, theoretical_resolutions)
from .oracle import ls_reconstruct, ls_residual, rd_vs_ls_compare
from .pipeline import (EnsembleResult, pilot_comb_mask, point_target_report,
                       run_pilot_ensemble, run_point_ensemble)
from .pgm import parse_pgm, write_pgm

__version__ = "0.1.0"

__all__ = [
    "CapacityError", "ConfigurationError", "GeometryError",
    "InvalidParameterError", "MeasurementError", "OfdmSarError",
    "PgmParseError", "SceneError", "SingularSystemError", "StageError",
    "PlatformGeometry", "beamwidths", "envelope_to_phase_rate_ratio",
    "ground_coverage", "mean_range", "slant_range",
    "Constellation", "FilterStats", "RadarConfig", "SrsConfig", "SymbolGrid",
    "chi_stats", "gen_symbol_grid", "make_qam", "nr_config", "srs_mask",
    "PointTarget", "Scene", "load_scene_pgm", "make_point_scene",
    "raster_extent", "scene_from_descriptor", "scene_to_descriptor",
    "EchoGrid", "build_channel_matrix", "check_cp_margin", "draw_noise",
    "grid_from_bytes", "grid_to_bytes", "load_grid", "save_grid",
    "synthesize_echo",
    "FilterSpec", "apply_tf_filter", "channel_mse_analytic", "filter_gains",
    "ImageGrid", "azimuth_compress", "azimuth_fft", "focus_image",
    "range_compress", "rcm_shift", "rcmc", "spa_spectrum", "stationary_point",
    "MetricsReport", "analytic_point_metrics", "doppler_support",
    "ideal_reference_image", "identity_residual", "islr",
    "measure_mainlobe_width", "mse_vs_ideal", "nmse", "pedestal_level", "pel",
    "snr_out", "theoretical_resolutions",
    "ls_reconstruct", "ls_residual", "rd_vs_ls_compare",
    "EnsembleResult", "pilot_comb_mask", "point_target_report",
    "run_pilot_ensemble", "run_point_ensemble",
    "parse_pgm", "write_pgm",
    "__version__",
]
