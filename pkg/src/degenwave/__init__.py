"""Conservation laws with p-Laplacian viscosity: multiwave profiles, a finite-volume solver and decay checks."""
from .analysis import NormSeries, RateFit, fit_power_law, fit_rate, gq_diagnostic, perturbation
from .core import FluxModel, GridFunction, Params, make_flux, quad_compact
from .profiles import (barenblatt, contact_wave, exact_rarefaction, multiwave, selfsimilar_constants,
                       smooth_rarefaction, tilde_U)
from .solver import GridSpec, Perturbation, RunConfig, initial_data, run, stable_dt, step

__all__ = [
    "FluxModel", "GridFunction", "Params", "make_flux", "quad_compact",
    "barenblatt", "contact_wave", "exact_rarefaction", "multiwave", "selfsimilar_constants",
    "smooth_rarefaction", "tilde_U",
    "GridSpec", "Perturbation", "RunConfig", "initial_data", "run", "stable_dt", "step",
    "NormSeries", "RateFit", "fit_power_law", "fit_rate", "gq_diagnostic", "perturbation",
]
__version__ = "0.1.0"
