"""Functional moving average estimation with the sample innovations algorithm."""

from .basis import BasisSpec, CurveGrid, evaluate, project_curves
from .core import FunctionalSample, center, fpca, lag_cov, scores, tve
from .innovations import FmaModel, fit_fma, innovations_algorithm, predict_one_step
from .simulate import SimConfig, simulate_fma

__version__ = "0.1.0"
