"""Numerical experiments on fractional Sobolev and nonlocal Korn seminorms."""

from .fields import (Affine, Bump, BumpEnsemble, ConvolutionConfig, CutoffInterpolant, MollifiedInterpolant,
                     RawInterpolant, Scaled, make_bump_ensemble, make_counterexample, mollifier_value)
from .geometry import Ball, Box, boundary_distance, collar_volume, contains, inner_offset_contains, ray_exit_distance
from .seminorms import (Estimate, FracParams, QuadratureConfig, extension_gagliardo, extension_x_seminorm,
                        gagliardo_seminorm, hardy_integral, korn_x_seminorm, lp_norm, tail_kernel)

__all__ = [
    "Affine", "Bump", "BumpEnsemble", "ConvolutionConfig", "CutoffInterpolant", "MollifiedInterpolant",
    "RawInterpolant", "Scaled", "make_bump_ensemble", "make_counterexample", "mollifier_value",
    "Ball", "Box", "boundary_distance", "collar_volume", "contains", "inner_offset_contains", "ray_exit_distance",
    "Estimate", "FracParams", "QuadratureConfig", "extension_gagliardo", "extension_x_seminorm",
    "gagliardo_seminorm", "hardy_integral", "korn_x_seminorm", "lp_norm", "tail_kernel",
]
__version__ = "0.1.0"
