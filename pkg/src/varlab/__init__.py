"""Numerical laboratory for variation operators and bilinear Fourier multipliers.

Modules
-------
spectral_grid
    Periodic sample grids, coefficients, norms and multipliers.
window_atoms
    Certified smooth frequency windows, tents, Fejer kernels, Wiener norms.
varops
    Variation operators, tile-based bilinear multipliers, maximal adjoints.
adversary
    Extremal inputs and exact combinatorial certificates.
lab_harness
    Growth and refinement studies, exponent fits, reports and the CLI.
"""

from .spectral_grid import (
    BandError,
    GridSignal,
    Interval,
    apply_multiplier,
    from_coefficients,
    from_function,
    lp_norm,
    make_grid,
    project_window,
    shift_modulate,
)
from .window_atoms import WindowProfile, build_profile, exp_sum_norm, fejer, tent, wiener_norm
from .varops import (
    bilinear_scale_sup,
    bilinear_tm,
    make_tiles,
    maximal_adjoint,
    square_function,
    v2_translation_square,
    v2res,
)
from .adversary import (
    bichirp_pair,
    chirp_train,
    greedy_cover,
    greedy_cover_continuous,
    greedy_shift,
    orbit_distinct,
    theta_construct,
)
from .lab_harness import GrowthReport, fit_growth, growth_study, refinement_study, run_cli

__version__ = "0.1.0"
