"""Interaction kernels: families, evaluation, certified sums, classification.

A kernel J(n) assigns a coupling to every integer site offset n, with J(0) = 0
and J(n) = J(-n). Families:

  power_law         J(n) = J0 / |n|^p                      (needs p > 1)
  sharp_truncated   power law for |n| <= eta, 0 beyond
  soft_truncated    power law for |n| <= eta, times exp(-sigma (|n| - eta)) beyond
  nearest_neighbor  J0 at |n| = 1, 0 elsewhere
  tabulated         explicit symmetric entries, 0 where unspecified
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Optional, Tuple

import numpy as np

__all__ = [
    "KernelSpec",
    "KernelType",
    "KernelSum",
    "eval_kernel",
    "eval_kernel_many",
    "eval_kernel_fraction",
    "kernel_sum",
    "classify_kernel",
    "load_table",
]

FAMILIES = (
    "power_law",
    "sharp_truncated",
    "soft_truncated",
    "nearest_neighbor",
    "tabulated",
)


class KernelType(Enum):
    TYPE1 = "Type1"
    TYPE2 = "Type2"
    INDETERMINATE = "Indeterminate"


class InvalidKernel(ValueError):
    """Raised at construction for non-convergent or malformed kernels."""


@dataclass(frozen=True)
class KernelSpec:
    """Immutable description of an interaction function.

    ``eta`` and ``sigma`` use ``math.inf`` for "no truncation" and "sharp
    truncation" respectively. ``table`` is a sorted tuple of (n, value) pairs
    for the tabulated family (n >= 1; negative offsets mirror automatically).
    """

    family: str
    p: float = math.inf
    J0: float = 1.0
    eta: float = math.inf
    sigma: float = math.inf
    table: Optional[Tuple[Tuple[int, float], ...]] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidKernel(f"unknown family {self.family!r}")
        if self.J0 <= 0:
            raise InvalidKernel("J0 must be positive")
        if self.family == "power_law":
            if not self.p > 1:
                raise InvalidKernel(
                    f"power_law needs p > 1 for absolute convergence, got p={self.p}"
                )
        elif self.family == "sharp_truncated":
            self._check_eta()
            if not math.isfinite(self.p):
                raise InvalidKernel("sharp_truncated needs a finite exponent p")
        elif self.family == "soft_truncated":
            self._check_eta()
            if not (self.sigma > 0 and math.isfinite(self.sigma)):
                raise InvalidKernel("soft_truncated needs a finite positive sigma")
            if not self.p > 1:
                raise InvalidKernel("soft_truncated needs p > 1 (infinite support)")
        elif self.family == "tabulated":
            if not self.table:
                raise InvalidKernel("tabulated kernel needs a nonempty table")
            seen = set()
            for n, _v in self.table:
                if not isinstance(n, int) or n < 1:
                    raise InvalidKernel("table offsets must be integers >= 1")
                if n in seen:
                    raise InvalidKernel(f"duplicate table offset {n}")
                seen.add(n)
            object.__setattr__(self, "table", tuple(sorted(self.table)))

    def _check_eta(self):
        if not (math.isfinite(self.eta) and self.eta >= 1 and self.eta == int(self.eta)):
            raise InvalidKernel(f"eta must be a positive integer, got {self.eta}")

    # -- constructors ------------------------------------------------------

    @classmethod
    def power_law(cls, p: float, J0: float = 1.0) -> "KernelSpec":
        return cls("power_law", p=float(p), J0=J0)

    @classmethod
    def sharp_truncated(cls, p: float, eta: int, J0: float = 1.0) -> "KernelSpec":
        return cls("sharp_truncated", p=float(p), eta=float(eta), J0=J0)

    @classmethod
    def soft_truncated(cls, p: float, eta: int, sigma: float, J0: float = 1.0) -> "KernelSpec":
        return cls("soft_truncated", p=float(p), eta=float(eta), sigma=float(sigma), J0=J0)

    @classmethod
    def nearest_neighbor(cls, J0: float = 1.0) -> "KernelSpec":
        return cls("nearest_neighbor", J0=J0)

    @classmethod
    def tabulated(cls, pairs: Iterable[Tuple[int, float]], J0: float = 1.0) -> "KernelSpec":
        return cls("tabulated", J0=J0, table=tuple((int(n), float(v)) for n, v in pairs))

    # -- structure ---------------------------------------------------------

    @property
    def support_radius(self) -> float:
        """Largest |n| with J(n) != 0 (math.inf for untruncated tails)."""
        if self.family == "nearest_neighbor":
            return 1
        if self.family == "sharp_truncated":
            return int(self.eta)
        if self.family == "tabulated":
            return max((n for n, v in self.table if v != 0.0), default=0)
        return math.inf

    @property
    def is_finite_support(self) -> bool:
        return math.isfinite(self.support_radius)

    def label(self) -> str:
        bits = [self.family]
        if math.isfinite(self.p):
            bits.append(f"p={self.p:g}")
        if math.isfinite(self.eta):
            bits.append(f"eta={self.eta:g}")
        if math.isfinite(self.sigma):
            bits.append(f"sigma={self.sigma:g}")
        if self.J0 != 1.0:
            bits.append(f"J0={self.J0:g}")
        return ",".join(bits)


def eval_kernel(spec: KernelSpec, n: int) -> float:
    """J(n). Exactly symmetric in n -> -n and exactly 0 at n = 0."""
    m = abs(int(n))
    if m == 0:
        return 0.0
    if spec.family == "nearest_neighbor":
        return spec.J0 if m == 1 else 0.0
    if spec.family == "tabulated":
        for k, v in spec.table:
            if k == m:
                return spec.J0 * v
        return 0.0
    if spec.family == "sharp_truncated" and m > spec.eta:
        return 0.0
    val = spec.J0 * float(m) ** (-spec.p)
    if spec.family == "soft_truncated" and m > spec.eta:
        val *= math.exp(-spec.sigma * (m - spec.eta))
    return val


def eval_kernel_many(spec: KernelSpec, ns: np.ndarray) -> np.ndarray:
    """Vectorized eval_kernel over an integer array."""
    m = np.abs(np.asarray(ns, dtype=np.int64)).astype(np.float64)
    safe = np.where(m == 0, 1.0, m)
    if spec.family == "nearest_neighbor":
        return np.where(m == 1, spec.J0, 0.0)
    if spec.family == "tabulated":
        lut = dict(spec.table)
        flat = np.array([spec.J0 * lut.get(int(v), 0.0) if v else 0.0 for v in m.ravel()])
        return flat.reshape(m.shape)
    out = spec.J0 * safe ** (-spec.p)
    out[m == 0] = 0.0
    if spec.family == "sharp_truncated":
        out[m > spec.eta] = 0.0
    elif spec.family == "soft_truncated":
        beyond = m > spec.eta
        out[beyond] *= np.exp(-spec.sigma * (m[beyond] - spec.eta))
    return out


def eval_kernel_fraction(spec: KernelSpec, n: int) -> Fraction:
    """J(n) as an exact rational, when the family/parameters admit one.

    Available for nearest_neighbor, integer-exponent power/sharp families, and
    tabulated kernels; raises ValueError otherwise. J0 is taken at its exact
    binary-float value.
    """
    m = abs(int(n))
    if m == 0:
        return Fraction(0)
    J0 = Fraction(spec.J0)
    if spec.family == "nearest_neighbor":
        return J0 if m == 1 else Fraction(0)
    if spec.family == "tabulated":
        lut = dict(spec.table)
        return J0 * Fraction(lut.get(m, 0.0))
    if spec.family in ("power_law", "sharp_truncated") and spec.p == int(spec.p):
        if spec.family == "sharp_truncated" and m > spec.eta:
            return Fraction(0)
        return J0 / Fraction(m ** int(spec.p))
    raise ValueError(f"no exact rational values for {spec.label()}")


def has_exact_rational_values(spec: KernelSpec) -> bool:
    try:
        eval_kernel_fraction(spec, 1)
        return True
    except ValueError:
        return False


@dataclass(frozen=True)
class KernelSum:
    """Certified total coupling: |S_true - S| <= tail_bound."""

    S: float
    tail_bound: float
    window: int


def _tail_bound(spec: KernelSpec, W: int) -> float:
    """Upper bound on 2 * sum_{n > W} |J(n)| (0 for finite support within W)."""
    if spec.support_radius <= W:
        return 0.0
    if spec.family == "tabulated":
        return 2.0 * spec.J0 * math.fsum(abs(v) for n, v in spec.table if n > W)
    if spec.family == "soft_truncated" and W >= spec.eta:
        # geometric envelope beyond the window
        first = eval_kernel(spec, W + 1)
        r = math.exp(-spec.sigma)
        return 2.0 * first / (1.0 - r)
    # integral comparison for a decreasing power tail (covers a truncated
    # power law whose cutoff lies beyond the window, as an over-estimate)
    p = spec.p
    return 2.0 * spec.J0 * W ** (1.0 - p) / (p - 1.0)


@lru_cache(maxsize=256)
def kernel_sum(spec: KernelSpec, rtol: float = 1e-10, max_window: int = 1 << 22) -> KernelSum:
    """S = sum_n J(n) by partial summation plus a certified tail bound.

    The window doubles until the tail bound is below rtol * |partial sum| or
    the cap is reached; the returned bound always certifies the truth. The
    bound is monotone non-increasing in the window. A small float-rounding
    term is folded into the certificate.
    """
    if spec.is_finite_support:
        W = int(spec.support_radius)
        ns = np.arange(1, W + 1)
        vals = eval_kernel_many(spec, ns)
        S = 2.0 * math.fsum(vals.tolist())
        return KernelSum(S=S, tail_bound=abs(S) * 1e-15, window=W)
    W = 1024
    while True:
        ns = np.arange(1, W + 1)
        vals = eval_kernel_many(spec, ns)
        # ascending-n values are decreasing; sum smallest-first
        S = 2.0 * float(np.sum(vals[::-1]))
        tail = _tail_bound(spec, W)
        if tail <= rtol * abs(S) or W >= max_window:
            rounding = abs(S) * 1e-15 * math.log2(max(W, 2))
            return KernelSum(S=S, tail_bound=tail + rounding, window=W)
        W *= 2


def load_table(path) -> KernelSpec:
    """Read a tabulated kernel from a two-column 'n,value' text file with header."""
    lines = Path(path).read_text().strip().splitlines()
    if not lines:
        raise InvalidKernel(f"empty table file {path}")
    pairs = []
    for line in lines[1:]:
        line = line.strip()
        if not line:
            continue
        n_str, v_str = line.split(",")
        pairs.append((int(n_str), float(v_str)))
    return KernelSpec.tabulated(pairs)


# -- classification --------------------------------------------------------


def _derivatives_analytic(spec: KernelSpec, n: float):
    """(J, J', J'') of the continuous extension at real n >= 1, off any kink."""
    p, J0 = spec.p, spec.J0
    if spec.family in ("power_law", "sharp_truncated") or (
        spec.family == "soft_truncated" and n < spec.eta
    ):
        J = J0 * n ** (-p)
        return J, -p * J / n, p * (p + 1) * J / n**2
    if spec.family == "soft_truncated":
        J = J0 * n ** (-p) * math.exp(-spec.sigma * (n - spec.eta))
        d1 = -(p / n + spec.sigma)
        d2 = d1 * d1 + p / n**2
        return J, J * d1, J * d2
    raise ValueError(f"no continuous extension for {spec.family}")


def classify_kernel(spec: KernelSpec, n_grid: int = 200) -> KernelType:
    """Classify by the strict sign of D(n) = J''(n) - J'(n) J(n) on n in [1, n_grid].

    Type1 when D > 0 at every sample, Type2 when D < 0 at every sample,
    Indeterminate on mixed signs, zeros, or families without a smooth
    continuous extension (sharp cutoffs; the soft family's kink at eta is
    skipped, its smooth pieces are sampled analytically).
    """
    if spec.family in ("nearest_neighbor", "sharp_truncated"):
        return KernelType.INDETERMINATE
    samples = []
    if spec.family == "tabulated":
        lut = dict(spec.table)
        ns = sorted(n for n in lut if 1 <= n <= n_grid)
        # integer-step central differences on the interior of the table
        for n in ns:
            if (n - 1) in lut and (n + 1) in lut:
                J = spec.J0 * lut[n]
                d1 = spec.J0 * (lut[n + 1] - lut[n - 1]) / 2.0
                d2 = spec.J0 * (lut[n + 1] - 2.0 * lut[n] + lut[n - 1])
                samples.append(d2 - d1 * J)
        if not samples:
            return KernelType.INDETERMINATE
    else:
        for n in range(1, n_grid + 1):
            if spec.family == "soft_truncated" and abs(n - spec.eta) < 1:
                continue
            J, d1, d2 = _derivatives_analytic(spec, float(n))
            samples.append(d2 - d1 * J)
    arr = np.asarray(samples)
    if np.all(arr > 0):
        return KernelType.TYPE1
    if np.all(arr < 0):
        return KernelType.TYPE2
    return KernelType.INDETERMINATE
