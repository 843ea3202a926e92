"""Generalised functional additive mixed models with compositional covariates.

Count curves observed over a common time domain are modelled on the log scale
as a sum of functional terms: a functional intercept, linear, smooth and
time-varying effects of scalar covariates, function-on-function effects,
effects of finite compositions through their ilr coordinates, effects of
density-valued covariates through their clr transform, and functional random
intercepts with an optional Markov random field structure.  Estimation is
penalised iteratively reweighted least squares under a quasi-Poisson model.
"""

from .bayes_space import Grid
from .data import CurveSet, ModelData
from .fit import FittedModel, extract_composition_effect, extract_effect, fit_model
from .spatial import SpatialGraph, gabriel_graph, mrf_precision
from .terms import TermSpec

__version__ = "0.1.0"

__all__ = [
    "CurveSet",
    "FittedModel",
    "Grid",
    "ModelData",
    "SpatialGraph",
    "TermSpec",
    "extract_composition_effect",
    "extract_effect",
    "fit_model",
    "gabriel_graph",
    "mrf_precision",
]
