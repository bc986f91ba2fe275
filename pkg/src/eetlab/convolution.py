"""Repeated self-convolutions J^{*r}(q) of a kernel over a finite window.

J^{*r}(q) sums the product of kernel values over all r-tuples of nonzero
displacements adding up to q (the empty convolution r=0 is the discrete
delta). Rows are built by dynamic programming on the window [-W, W]:
row_r = row_{r-1} convolved with the kernel, with displacements beyond the
window dropped and accounted for in a certified per-row error bound.

Storage is sign + log10 magnitude (rows span huge dynamic ranges across q);
the DP itself runs in float64 with exact power-of-two rescaling. The DP path
is canonical; an FFT path exists purely as a cross-check.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import mpmath as mp
import numpy as np

from .backend import conv_step_sym
from .kernels import KernelSpec, eval_kernel, eval_kernel_many, kernel_sum

__all__ = [
    "ConvTable",
    "conv_table",
    "fft_rows",
    "conv_value",
    "PrecisionUnreachable",
    "export_csv",
    "leading_term_share",
    "single_long_jump_share",
]

LOG10_2 = math.log10(2.0)


class PrecisionUnreachable(RuntimeError):
    """Requested certified precision needs a window beyond the cost budget."""


def abs_kernel_sum(spec: KernelSpec) -> float:
    """Certified upper bound on sum_n |J(n)| (equals S for nonnegative kernels)."""
    ks = kernel_sum(spec)
    if spec.family == "tabulated":
        head = 2.0 * math.fsum(abs(v) * spec.J0 for _n, v in spec.table)
        return head + ks.tail_bound
    return abs(ks.S) + ks.tail_bound


@dataclass
class ConvTable:
    """Rows r = 0..R of J^{*r} on q in [-W, W], in sign/log10 form.

    row_error[r] bounds |stored - exact| uniformly over the row's window.
    ``flagged`` marks tables whose tail bound did not reach the relative
    target at the largest requested q (still returned, per contract).
    """

    spec: KernelSpec
    R: int
    W: int
    signs: np.ndarray      # int8, shape (R+1, 2W+1)
    logmag: np.ndarray     # float64, -inf where the value is exactly 0
    row_error: np.ndarray  # float64, shape (R+1,)
    S: float
    S_abs: float
    flagged: bool = False
    q_max: Optional[int] = None

    def _idx(self, q: int) -> int:
        if abs(q) > self.W:
            raise IndexError(f"|q|={abs(q)} outside window W={self.W}")
        return q + self.W

    def sign_log10(self, r: int, q: int) -> Tuple[int, float]:
        i = self._idx(q)
        return int(self.signs[r, i]), float(self.logmag[r, i])

    def value(self, r: int, q: int) -> float:
        s, lg = self.sign_log10(r, q)
        if s == 0:
            return 0.0
        return s * 10.0 ** lg

    def row(self, r: int) -> np.ndarray:
        """Row r in linear scale (entries below float range flush to 0)."""
        with np.errstate(over="ignore"):
            out = self.signs[r] * 10.0 ** self.logmag[r]
        return np.where(self.signs[r] == 0, 0.0, out)

    def row_sum(self, r: int) -> float:
        return float(math.fsum(self.row(r).tolist()))


def _kernel_window(spec: KernelSpec, W: int) -> np.ndarray:
    k = eval_kernel_many(spec, np.arange(-W, W + 1))
    return np.ascontiguousarray(k, dtype=np.float64)


def _dp_rows(spec: KernelSpec, R: int, W: int):
    """Float64 DP rows with exact power-of-two rescaling.

    Returns (rows, shifts): rows[r] is the full row scaled by 2**-shifts[r].
    Rows are exactly symmetric by construction (only x >= 0 is computed).
    """
    ker = _kernel_window(spec, W)
    rows = []
    shifts = []
    row = np.zeros(2 * W + 1)
    row[W] = 1.0
    rows.append(row)
    shifts.append(0)
    prev = row
    prev_shift = 0
    for _r in range(1, R + 1):
        half = np.zeros(W + 1)
        conv_step_sym(prev, ker, W, half)
        full = np.concatenate([half[:0:-1], half])
        m = np.max(np.abs(full))
        shift = prev_shift
        if m != 0.0 and (m > 1e100 or m < 1e-100):
            k = int(math.floor(math.log2(m)))
            full = full * 2.0 ** (-k)  # exact scaling
            shift = prev_shift + k
        rows.append(full)
        shifts.append(shift)
        prev, prev_shift = full, shift
    return rows, shifts


def _row_error_bounds(spec: KernelSpec, R: int, W: int) -> np.ndarray:
    """Certified uniform |truncated - exact| bound per row.

    err_r <= err_{r-1} * S_abs + 2 * S_abs^{r-1} * tail(W) + rounding, where
    tail(W) bounds the kernel mass beyond the window (both the dropped long
    hops and the dropped far sources are covered by the factor 2), and the
    rounding term is the standard serial-summation bound n*eps*sum|terms|.
    """
    from .kernels import _tail_bound

    S_abs = abs_kernel_sum(spec)
    tail = _tail_bound(spec, W)
    eps = np.finfo(float).eps
    errs = [0.0]
    for r in range(1, R + 1):
        rounding = (2 * W + 1) * eps * S_abs**r
        errs.append(errs[-1] * S_abs + 2.0 * S_abs ** (r - 1) * tail + rounding)
    return np.asarray(errs)


def conv_table(
    spec: KernelSpec,
    R: int,
    W: Optional[int] = None,
    q_max: Optional[int] = None,
    rel_tail_target: float = 1e-3,
    max_window: int = 1 << 15,
) -> ConvTable:
    """Build rows 0..R. Default window max(4*q_max, 512), doubling until the
    row-R error bound at the largest requested q is below the relative target
    (tables that cannot reach it are returned flagged)."""
    if R < 0:
        raise ValueError("R must be >= 0")
    adaptive = W is None
    qm = q_max if q_max is not None else (128 if adaptive else W // 4)
    if adaptive:
        W = max(4 * qm, 512)
    if W < 1 or W < qm:
        raise ValueError("window must cover the largest requested q")
    ks = kernel_sum(spec)
    S_abs = abs_kernel_sum(spec)

    while True:
        errs = _row_error_bounds(spec, R, W)
        rows, shifts = _dp_rows(spec, R, W)
        ref = abs(rows[R][W + qm]) * 2.0 ** shifts[R] if qm <= W else 0.0
        ok = errs[R] <= rel_tail_target * ref if ref > 0 else errs[R] == 0.0
        if ok or not adaptive or W >= max_window:
            break
        W *= 2

    signs = np.zeros((R + 1, 2 * W + 1), dtype=np.int8)
    logmag = np.full((R + 1, 2 * W + 1), -np.inf)
    for r, (row, shift) in enumerate(zip(rows, shifts)):
        nz = row != 0.0
        signs[r, nz] = np.sign(row[nz]).astype(np.int8)
        logmag[r, nz] = np.log10(np.abs(row[nz])) + shift * LOG10_2
    return ConvTable(
        spec=spec,
        R=R,
        W=W,
        signs=signs,
        logmag=logmag,
        row_error=errs,
        S=ks.S,
        S_abs=S_abs,
        flagged=not ok,
        q_max=qm,
    )


def fft_rows(spec: KernelSpec, R: int, W: int) -> np.ndarray:
    """Cross-check path: same recurrence via FFT with 2x zero padding.

    Returns rows in linear scale, shape (R+1, 2W+1). Not the path of record.
    """
    n = 2 * W + 1
    m = 1
    while m < 2 * n:
        m *= 2
    ker = _kernel_window(spec, W)
    kf = np.fft.rfft(ker, m)
    rows = np.zeros((R + 1, n))
    rows[0, W] = 1.0
    cur = rows[0]
    for r in range(1, R + 1):
        full = np.fft.irfft(np.fft.rfft(cur, m) * kf, m)
        # full linear convolution offset: index W maps to q=-W of the result
        cur = full[W : W + n].copy()
        rows[r] = cur
    return rows


# -- single-value recomputation at requested precision ----------------------


def _mp_kernel(spec: KernelSpec, n: int) -> mp.mpf:
    m = abs(int(n))
    if m == 0:
        return mp.mpf(0)
    if spec.family == "nearest_neighbor":
        return mp.mpf(spec.J0) if m == 1 else mp.mpf(0)
    if spec.family == "tabulated":
        lut = dict(spec.table)
        return mp.mpf(spec.J0) * mp.mpf(lut.get(m, 0.0))
    if spec.family == "sharp_truncated" and m > spec.eta:
        return mp.mpf(0)
    val = mp.mpf(spec.J0) * mp.mpf(m) ** (-mp.mpf(spec.p))
    if spec.family == "soft_truncated" and m > spec.eta:
        val *= mp.exp(-mp.mpf(spec.sigma) * (m - spec.eta))
    return val


def _finite_support_value(spec: KernelSpec, r: int, q: int, dps: int):
    """Exact-support DP (no truncation; rounding-only error)."""
    K = int(spec.support_radius)
    with mp.workdps(dps + 10):
        ker = {d: _mp_kernel(spec, d) for d in range(-K, K + 1) if d != 0}
        row = {0: mp.mpf(1)}
        for _k in range(r):
            nxt = {}
            for x, v in row.items():
                if v == 0:
                    continue
                for d, jv in ker.items():
                    if jv == 0:
                        continue
                    nxt[x + d] = nxt.get(x + d, mp.mpf(0)) + v * jv
            row = nxt
        val = row.get(q, mp.mpf(0))
        err = abs(val) * mp.mpf(10) ** (-dps)
        return val, float(err)


def _decay_majorant_A(spec: KernelSpec, k: int) -> float:
    """A_k with |J^{*k}(x)| <= A_k (1+|x|)^{-p} for power-tail kernels.

    A_1 = 2^p J0 (since J(n) <= J0 n^-p <= 2^p J0 (1+n)^-p) and the
    convolution step multiplies by 2^{p+1} (1 + zeta(p)) A_1, using
    max(|d|, |x-d|) >= |x|/2 and summing the short side.
    """
    p = spec.p
    zeta_p = float(mp.zeta(p))
    A1 = 2.0**p * spec.J0
    C = 2.0 ** (p + 1) * (1.0 + zeta_p)
    return A1 * (A1 * C) ** (k - 1)


def conv_value(
    spec: KernelSpec,
    r: int,
    q: int,
    digits: int = 16,
    window_budget: int = 4_000_000,
):
    """J^{*r}(q) recomputed at the requested precision with a certified error.

    Returns (value: mpf, error_bound: float). The truncation target is
    10^(-digits/2) relative; extended-precision DP runs on a window chosen
    from a provable decay majorant. Raises PrecisionUnreachable when the
    certified window exceeds the budget.
    """
    if r < 0:
        raise ValueError("order r must be >= 0")
    q = int(q)
    if r == 0:
        return mp.mpf(1 if q == 0 else 0), 0.0
    if spec.is_finite_support:
        return _finite_support_value(spec, r, q, digits)
    dps = digits + 10
    with mp.workdps(dps):
        if r == 1:
            v = _mp_kernel(spec, q)
            return v, float(abs(v) * mp.mpf(10) ** (-digits))
        p = spec.p
        # rough magnitude estimate for the relative target
        est = r * eval_kernel(spec, max(abs(q) - r + 1, 1)) * max(
            kernel_sum(spec).S, 1.0
        ) ** (r - 2)
        # r <= 2 windows are cheap (single sums): aim below the spec ceiling
        # of 10^(-digits/2), capped so window growth stays affordable; the
        # r >= 3 row DP keeps the ceiling (cost grows steeply there).
        if r <= 2:
            exponent = max(4.0, min(digits - 2.0, max(digits / 2.0, 16.0)))
        else:
            exponent = max(4.0, digits / 2.0)
        target = max(est, 1e-300) * 10.0 ** (-exponent)
        if r == 2:
            # direct sum over d, certified tail 2 * tail1(D) * J(D - |q|)
            D = max(4 * abs(q), 1024)
            while True:
                tail1 = 2.0 * spec.J0 * D ** (1.0 - p) / (p - 1.0)
                bound = 2.0 * tail1 * eval_kernel(spec, max(D - abs(q), 1))
                if bound <= target or D > window_budget:
                    break
                D *= 2
            if bound > target:
                raise PrecisionUnreachable(
                    f"r=2 window {D} exceeds budget {window_budget} "
                    f"(bound {bound:.3e} > target {target:.3e})"
                )
            ds = [d for d in range(-D, D + 1) if d != 0 and d != q]
            v = mp.fsum(_mp_kernel(spec, d) * _mp_kernel(spec, q - d) for d in ds)
            rnd = float(abs(v)) * 10.0 ** (-dps) * len(ds)
            return v, bound + rnd
        # r >= 3: windowed DP; per-step tail from the decay majorant.
        # The DP costs O(r W^2) extended-precision operations, so the window
        # cap is much tighter than the r = 2 direct sum's.
        dp_cap = min(window_budget // (2 * r), 4096)
        S_abs = abs_kernel_sum(spec)
        W = max(4 * abs(q), 256)
        while True:
            step_tails = [
                2.0
                * _decay_majorant_A(spec, 1)
                * _decay_majorant_A(spec, k - 1)
                * (1.0 + max(W - abs(q), 1)) ** (-p)
                * W ** (1.0 - p)
                / (p - 1.0)
                for k in range(2, r + 1)
            ]
            err = 0.0
            for st in step_tails:
                err = err * S_abs + st
            if err <= target or W > dp_cap:
                break
            W *= 2
        if err > target:
            raise PrecisionUnreachable(
                f"r={r} certified window {W} exceeds budget "
                f"(bound {err:.3e} > target {target:.3e})"
            )
        ker = [(d, _mp_kernel(spec, d)) for d in range(-W, W + 1) if d != 0]
        row = {0: mp.mpf(1)}
        for _k in range(r):
            nxt = {}
            for d, jv in ker:
                for x, v in row.items():
                    y = x + d
                    if abs(y) <= W:
                        nxt[y] = nxt.get(y, mp.mpf(0)) + v * jv
            row = nxt
        v = row.get(q, mp.mpf(0))
        rnd = float(abs(v)) * 10.0 ** (-dps) * (2 * W + 1) * r
        return v, err + rnd


# -- Type 1 dominance diagnostics -------------------------------------------


def leading_term_share(spec: KernelSpec, r: int, q: int) -> float:
    """Share of J^{*r}(q) carried by the single leading arrangement
    (r-1 unit hops plus one hop of q-r+1, in all r orderings)."""
    table = conv_table(spec, r, q_max=q)
    total = table.value(r, q)
    if total == 0:
        return 0.0
    first = r * eval_kernel(spec, 1) ** (r - 1) * eval_kernel(spec, q - r + 1)
    return first / total


def single_long_jump_share(spec: KernelSpec, r: int, q: int) -> float:
    """Share of J^{*r}(q) from paths with exactly one hop longer than q/2.

    This is the meaningful few-long-jump dominance statement for Type 1
    kernels; the single leading arrangement alone is not dominant at large q.
    """
    table = conv_table(spec, r, q_max=q)
    total = table.value(r, q)
    if total == 0:
        return 0.0
    cut = q // 2
    short = KernelSpec.tabulated(
        [(n, eval_kernel(spec, n) / spec.J0) for n in range(1, cut + 1)], J0=spec.J0
    )
    short_table = conv_table(short, r - 1, q_max=min((r - 1) * cut, q + table.W // 2))
    acc = 0.0
    for d in range(-table.W, table.W + 1):
        if abs(d) <= cut:
            continue
        x = q - d
        if abs(x) <= short_table.W:
            acc += r * eval_kernel(spec, d) * short_table.value(r - 1, x)
    return acc / total


def export_csv(table: ConvTable, path) -> None:
    """Columns r, q, sign, log10_abs, row_error; one file per table."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "q", "sign", "log10_abs", "row_error"])
        for r in range(table.R + 1):
            for q in range(-table.W, table.W + 1):
                s, lg = table.sign_log10(r, q)
                w.writerow([r, q, s, f"{lg:.12g}", f"{table.row_error[r]:.6g}"])
