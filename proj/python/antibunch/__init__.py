"""Photon antibunching simulation and g2 analysis for single color centers.

Thin numpy front end over the C++ core: emitter simulation, two-detector
click generation, coincidence correlation, background correction, g2 fitting
and confocal scan synthesis.
"""

from ._antibunch import (  # noqa: F401
    DataError,
    DetectionConfig,
    EmitterParams,
    FitResult,
    G2Decomposition,
    LineFit,
    ParameterError,
    analytic_g2,
    background_correct,
    cross_correlate,
    emission_rate_per_s,
    fit_g2,
    fit_line_profile,
    g2_decomposition,
    ideal_detection,
    model_g2,
    multi_emitter_dip,
    paper_detection,
    paper_emitter,
    paper_emitter_at_power,
    paper_scan_true_rho,
    render_paper_scan,
    run_pipeline,
    simulate_detection,
    simulate_photon_stream,
)

__version__ = "0.1.0"


def bin_centers(result):
    """Bin centers in ns of a correlation dict returned by cross_correlate."""
    return result["t_ns"] + 0.5 * result["bin_width_ns"]
