"""Hénon map with an FIR filter in its feedback loop.

Fixed points, linear stability, largest Lyapunov exponents and orbit
classification over the five prototype filter families.
"""

__version__ = "0.1.0"

from .analysis import (
    LyapunovEstimate,
    PsdEstimate,
    StabilityReport,
    lyapunov_largest,
    psd_estimate,
    spectral_radius,
)
from .dynamics import (
    FilteredHenonSystem,
    FixedPointPair,
    MapParams,
    Orbit,
    fixed_points,
    iterate,
    jacobian_at,
    step,
)
from .fir_design import (
    EquallySpaced,
    FilterSpec,
    FirCoefficients,
    HammingLowpass,
    Notch,
    NotchPlusNyquist,
    RepeatedNyquist,
    ZeroSet,
    expand_zeros,
    frequency_response,
    gain_of,
    make_prototype,
)
from .sweep import (
    CellResult,
    ExperimentConfig,
    OrbitClass,
    bifurcation_diagram,
    classify_cell,
    run_experiment,
    sample_initial_conditions,
)
