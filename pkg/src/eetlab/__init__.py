"""Entanglement-transport laboratory for one-dimensional long-range
interacting spin chains: hop-kernel convolutions, cancellation-safe series
coefficients, single-excitation oracles, and entanglement edge times."""

__version__ = "0.1.0"

from .kernels import KernelSpec, KernelType, classify_kernel, eval_kernel, kernel_sum
from .convolution import ConvTable, conv_table, conv_value, PrecisionUnreachable
from .series import AlphaSeries, PrecisionPolicy, alpha_series, q_curve, truncation_bound
from .magnon import HoppingMatrix, build_hopping, finite_size_bound, propagate
from .lightcone import (EETRecord, eet, ratio_check, scaling_check, slope_fit,
                        sweep, verify_cancellation)

__all__ = [
    "KernelSpec", "KernelType", "classify_kernel", "eval_kernel", "kernel_sum",
    "ConvTable", "conv_table", "conv_value", "PrecisionUnreachable",
    "AlphaSeries", "PrecisionPolicy", "alpha_series", "q_curve", "truncation_bound",
    "HoppingMatrix", "build_hopping", "finite_size_bound", "propagate",
    "EETRecord", "eet", "ratio_check", "scaling_check", "slope_fit", "sweep",
    "verify_cancellation",
]
