"""Taylor coefficients alpha_r of the distance-q transport measure and Q_q(t).

With c_k = J^{*k}(q)/k!, the coefficient of t^{2r} is

    alpha_r = sum_{r1 + r2 = 2r} (-1)^{r1} c_{r1} c_{r2},

an equivalent regrouping of the binomial form binom(2r, r1)/(2r)! that keeps
every factor inside float range. The alternating sum is the destructive
interference itself: far outside the light cone the terms cancel to dozens of
digits, so coefficients are evaluated either exactly (rational kernels with
finite support), by full-support arbitrary-precision DP, or through the
spectral engine, with the digits lost to cancellation recorded per order.

Q_q(t) comes in two forms. The literal form is sum_r alpha_r t^{2r}; the
unitary form sum_r (-1)^r alpha_r t^{2r} equals the single-particle
transition probability |<q| e^{-i t J} |0>|^2 on the infinite chain and is
the default (bounded in [0, 1], cross-checked against the magnon oracle).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence

import mpmath as mp

from .kernels import KernelSpec, eval_kernel_fraction, has_exact_rational_values, kernel_sum
from .spectral import get_engine

__all__ = [
    "PrecisionPolicy",
    "AlphaCoeff",
    "AlphaSeries",
    "alpha_series",
    "alpha_series_batch",
    "QCurve",
    "q_curve",
    "default_rmax",
    "truncation_bound",
    "export_alpha_csv",
    "export_qcurve_csv",
]


@dataclass(frozen=True)
class PrecisionPolicy:
    """Adaptive-precision settings for coefficient evaluation."""

    start_dps: int = 30
    max_dps: int = 600
    stable_rel: float = 1e-6


@dataclass
class AlphaCoeff:
    """One literal-sign coefficient with a certified-interval half width.

    ``suppressed`` marks coefficients whose interval contains zero: expected
    deep inside the destructive-interference regime, and itself evidence of
    suppression. ``cancel_loss`` is log10(largest partial term / |value|).
    """

    r: int
    sign: int
    log10_abs: float
    interval: float
    cancel_loss: float
    suppressed: bool
    exact: Optional[Fraction] = None

    @property
    def magnitude(self) -> float:
        if self.sign == 0:
            return 0.0
        return 10.0 ** self.log10_abs

    def literal(self) -> float:
        return self.sign * self.magnitude

    def unitary(self) -> float:
        return (-1) ** self.r * self.literal()


@dataclass
class AlphaSeries:
    spec: KernelSpec
    q: int
    rmax: int
    coeffs: List[AlphaCoeff]
    precision_digits: int
    method: str
    form_note: str = "literal signs stored; unitary form carries an extra (-1)^r"
    _values: list = field(default_factory=list, repr=False)  # mpf, literal signs

    def coeff(self, r: int) -> AlphaCoeff:
        return self.coeffs[r]

    def value_mp(self, r: int) -> mp.mpf:
        return self._values[r]


def _pack_coeff(r, val, interval, biggest, exact=None) -> AlphaCoeff:
    av = abs(val)
    suppressed = av <= interval
    if av > 0:
        sign = 1 if val > 0 else -1
        lg = float(mp.log10(av)) if not isinstance(val, Fraction) else _frac_log10(av)
        loss = _safe_log10_ratio(biggest, av)
    else:
        sign, lg, loss = 0, -math.inf, 0.0
    return AlphaCoeff(
        r=r, sign=sign, log10_abs=lg, interval=float(interval),
        cancel_loss=loss, suppressed=bool(suppressed), exact=exact,
    )


def _frac_log10(x: Fraction) -> float:
    if x == 0:
        return -math.inf
    return float(mp.log10(mp.mpf(x.numerator)) - mp.log10(mp.mpf(x.denominator)))


def _safe_log10_ratio(big, small) -> float:
    if big == 0 or small == 0:
        return 0.0
    if isinstance(big, Fraction) or isinstance(small, Fraction):
        return max(_frac_log10(Fraction(big)) - _frac_log10(Fraction(small)), 0.0)
    return max(float(mp.log10(big / small)), 0.0)


# -- exact rational path -----------------------------------------------------


def _exact_conv_rows(spec: KernelSpec, kmax: int) -> List[dict]:
    K = int(spec.support_radius)
    ker = {}
    for d in range(-K, K + 1):
        if d == 0:
            continue
        v = eval_kernel_fraction(spec, d)
        if v != 0:
            ker[d] = v
    rows = [{0: Fraction(1)}]
    for _k in range(kmax):
        nxt: dict = {}
        for x, v in rows[-1].items():
            for d, jv in ker.items():
                y = x + d
                nxt[y] = nxt.get(y, Fraction(0)) + v * jv
        rows.append(nxt)
    return rows


def _alpha_exact(spec: KernelSpec, q: int, rmax: int) -> AlphaSeries:
    rows = _exact_conv_rows(spec, 2 * rmax)
    fact = [Fraction(math.factorial(k)) for k in range(2 * rmax + 1)]
    c = [rows[k].get(q, Fraction(0)) / fact[k] for k in range(2 * rmax + 1)]
    coeffs, values = [], []
    for r in range(rmax + 1):
        tot, big = Fraction(0), Fraction(0)
        for k in range(2 * r + 1):
            term = (-1) ** k * c[k] * c[2 * r - k]
            big = max(big, abs(term))
            tot += term
        coeffs.append(_pack_coeff(r, tot, Fraction(0), big, exact=tot))
        values.append(mp.mpf(tot.numerator) / mp.mpf(tot.denominator))
    return AlphaSeries(
        spec=spec, q=q, rmax=rmax, coeffs=coeffs,
        precision_digits=0, method="exact-rational", _values=values,
    )


# -- finite-support extended-precision path ----------------------------------


def _adaptive_levels(evaluate, policy: PrecisionPolicy):
    """Run evaluate(dps) -> list[(value, biggest, interval)] at doubling
    precision until each coefficient is either interval-certified stable to
    the relative target or resolved as suppressed (interval contains zero).
    The per-level intervals already come from two consecutive internal
    precision levels, so a first pass that meets the target is accepted.
    """
    dps = policy.start_dps
    prev = None
    while True:
        res = evaluate(dps)
        certified = all(
            abs(t) <= iv or iv <= policy.stable_rel * abs(t) for (t, _b, iv) in res
        )
        agreed = prev is not None and all(
            abs(t) <= iv or (abs(pt - t) <= policy.stable_rel * abs(t))
            for (t, _b, iv), (pt, _pb, _piv) in zip(res, prev)
        )
        if certified or agreed or dps >= policy.max_dps:
            return res, dps
        prev = res
        dps *= 2


def _assemble(cvals, cerrs, rmax: int, dps: int):
    """Alternating sums over c_k with propagated interval half-widths.

    Interval bookkeeping stays in mpf: high orders of c_k sit far below the
    double-precision floor and would silently drop out of a float
    accumulation.
    """
    res = []
    eps = mp.mpf(10) ** (-(dps - 4))
    for r in range(rmax + 1):
        tot, big = mp.mpf(0), mp.mpf(0)
        interval = mp.mpf(0)
        for k in range(2 * r + 1):
            term = (-1) ** k * cvals[k] * cvals[2 * r - k]
            big = max(big, abs(term))
            tot += term
            interval += cerrs[k] * abs(cvals[2 * r - k]) + abs(cvals[k]) * cerrs[2 * r - k]
        interval += big * eps * (2 * r + 2)
        res.append((tot, big, float(interval)))
    return res


def _alpha_finite_mp(spec: KernelSpec, q: int, rmax: int, policy: PrecisionPolicy) -> AlphaSeries:
    from .convolution import _mp_kernel

    K = int(spec.support_radius)

    def evaluate(dps):
        with mp.workdps(dps):
            ker = {d: _mp_kernel(spec, d) for d in range(-K, K + 1) if d != 0}
            ker = {d: v for d, v in ker.items() if v != 0}
            rows = [{0: mp.mpf(1)}]
            for _k in range(2 * rmax):
                nxt: dict = {}
                for x, v in rows[-1].items():
                    for d, jv in ker.items():
                        y = x + d
                        nxt[y] = nxt.get(y, mp.mpf(0)) + v * jv
                rows.append(nxt)
            cvals = [rows[k].get(q, mp.mpf(0)) / mp.factorial(k)
                     for k in range(2 * rmax + 1)]
            # full-support DP: rounding only, no truncation error
            eps = mp.mpf(10) ** (-(dps - 4))
            cerrs = [abs(v) * eps for v in cvals]
            return _assemble(cvals, cerrs, rmax, dps)

    res, dps = _adaptive_levels(evaluate, policy)
    coeffs = [_pack_coeff(r, t, iv, b) for r, (t, b, iv) in enumerate(res)]
    return AlphaSeries(
        spec=spec, q=q, rmax=rmax, coeffs=coeffs, precision_digits=dps,
        method="finite-support-mp", _values=[t for (t, _b, _iv) in res],
    )


# -- spectral path -----------------------------------------------------------


def _alpha_spectral_batch(spec: KernelSpec, qs, rmax: int, policy: PrecisionPolicy):
    results = {}
    pending = sorted(set(int(q) for q in qs))

    def _res_from_batch(batch, q, dps):
        with mp.workdps(dps + 8):
            fact = [mp.factorial(k) for k in range(2 * rmax + 1)]
            cvals = [batch[(k, q)].value / fact[k] for k in range(2 * rmax + 1)]
            # factorials overflow float64 past k = 170: divide in mpf
            cerrs = [mp.mpf(batch[(k, q)].error) / fact[k]
                     for k in range(2 * rmax + 1)]
            if q != 0:
                cvals[0] = mp.mpf(0)
                cerrs[0] = mp.mpf(0)
            return _assemble(cvals, cerrs, rmax, dps)

    # share one engine pass per precision level across the whole q batch
    dps = policy.start_dps
    remaining = list(pending)
    prev_res: dict = {}
    while remaining:
        eng = get_engine(spec, dps)
        batch = eng.conv_batch(remaining, 2 * rmax)
        next_round = []
        for q in remaining:
            res = _res_from_batch(batch, q, dps)
            certified = all(
                abs(t) <= iv or iv <= policy.stable_rel * abs(t)
                for (t, _b, iv) in res
            )
            agreed = q in prev_res and all(
                abs(t) <= iv or (abs(pt - t) <= policy.stable_rel * abs(t))
                for (t, _b, iv), (pt, _pb, _piv) in zip(res, prev_res[q])
            )
            if certified or agreed or dps >= policy.max_dps:
                coeffs = [_pack_coeff(r, t, iv, b) for r, (t, b, iv) in enumerate(res)]
                results[q] = AlphaSeries(
                    spec=spec, q=q, rmax=rmax, coeffs=coeffs,
                    precision_digits=dps, method="spectral",
                    _values=[t for (t, _b, _iv) in res],
                )
            else:
                prev_res[q] = res
                next_round.append(q)
        remaining = next_round
        dps *= 2
    return results


def _alpha_spectral(spec: KernelSpec, q: int, rmax: int, policy: PrecisionPolicy) -> AlphaSeries:
    return _alpha_spectral_batch(spec, [q], rmax, policy)[q]


def alpha_series(
    spec: KernelSpec,
    q: int,
    rmax: int,
    policy: Optional[PrecisionPolicy] = None,
) -> AlphaSeries:
    """Coefficients alpha_0..alpha_rmax at distance q with literal signs.

    Route selection: exact rationals when the kernel has finite support and
    exactly rational values; full-support extended-precision DP for other
    finite-support kernels; the spectral engine for infinite-support tails.
    """
    if q < 0 or rmax < 0:
        raise ValueError("q and rmax must be nonnegative")
    policy = policy or PrecisionPolicy()
    key = (spec, q, rmax, policy)
    if key in _ALPHA_CACHE:
        return _ALPHA_CACHE[key]
    if spec.is_finite_support and has_exact_rational_values(spec):
        out = _alpha_exact(spec, q, rmax)
    elif spec.is_finite_support:
        out = _alpha_finite_mp(spec, q, rmax, policy)
    else:
        out = _alpha_spectral(spec, q, rmax, policy)
    if len(_ALPHA_CACHE) > 256:
        _ALPHA_CACHE.clear()
    _ALPHA_CACHE[key] = out
    return out


_ALPHA_CACHE: dict = {}


def alpha_series_batch(
    spec: KernelSpec,
    qs: Sequence[int],
    rmax: int,
    policy: Optional[PrecisionPolicy] = None,
) -> dict:
    """alpha_series for several distances at once; the spectral route shares
    one symbol evaluation per quadrature node across the whole batch."""
    policy = policy or PrecisionPolicy()
    if spec.is_finite_support:
        return {q: alpha_series(spec, q, rmax, policy) for q in qs}
    return _alpha_spectral_batch(spec, qs, rmax, policy)


# -- truncation bound and Q curves -------------------------------------------


def _s_upper(spec: KernelSpec) -> float:
    ks = kernel_sum(spec)
    return abs(ks.S) + ks.tail_bound


def truncation_bound(spec: KernelSpec, rmax: int, t: float) -> float:
    """Certified bound on the dropped tail sum_{r > rmax} (2S)^{2r} t^{2r} / (2r)!.

    Valid for both forms by the majorant |alpha_r| <= (2S)^{2r} / (2r)!.
    Summed directly in extended precision; once terms decay geometrically the
    remainder is closed off with a geometric bound.
    """
    if t == 0:
        return 0.0
    x = 2.0 * _s_upper(spec) * abs(t)
    with mp.workdps(30):
        xm = mp.mpf(x)
        total = mp.mpf(0)
        k = 2 * (rmax + 1)
        term = xm**k / mp.factorial(k)
        while True:
            total += term
            ratio = xm**2 / ((k + 1) * (k + 2))
            if ratio < 0.5:
                total += term * ratio / (1 - ratio)
                break
            term *= ratio
            k += 2
        return float(total)


def default_rmax(spec: KernelSpec, t_max: float, target: float = 1e-8) -> int:
    """Smallest order with truncation bound below target at t_max, capped."""
    cap = int(4 * _s_upper(spec) * t_max) + 64
    lo = 0
    while lo < cap and truncation_bound(spec, lo, t_max) >= target:
        lo = max(2 * lo, 8)
    if lo >= cap:
        return cap
    # refine downward
    r = lo
    while r > 0 and truncation_bound(spec, r - 1, t_max) < target:
        r -= 1
    return r


@dataclass
class QSample:
    t: float
    Q: float
    error_bound: float


@dataclass
class QCurve:
    spec: KernelSpec
    q: int
    form: str
    rmax: int
    samples: List[QSample]
    series: AlphaSeries


def q_curve(
    spec: KernelSpec,
    q: int,
    times: Sequence[float],
    form: str = "unitary",
    rmax: Optional[int] = None,
    policy: Optional[PrecisionPolicy] = None,
    tail_target: float = 1e-8,
) -> QCurve:
    """Samples of Q_q(t) on a time grid with per-sample error bounds.

    form="unitary" (default) is the bounded transition-probability form;
    form="literal" evaluates the stored literal signs directly.
    """
    if form not in ("unitary", "literal"):
        raise ValueError("form must be 'unitary' or 'literal'")
    times = [float(t) for t in times]
    if any(t < 0 for t in times):
        raise ValueError("times must be nonnegative")
    t_max = max(times) if times else 0.0
    if rmax is None:
        # bucket upward so neighboring horizons share cached coefficients
        rmax = default_rmax(spec, t_max, tail_target)
        rmax = ((rmax + 15) // 16) * 16 if rmax > 8 else rmax
    else:
        bound = truncation_bound(spec, rmax, t_max)
        if bound >= tail_target:
            first_bad = min(t for t in times if truncation_bound(spec, rmax, t) >= tail_target)
            raise ValueError(
                f"rmax={rmax} insufficient for horizon: truncation bound "
                f"{bound:.3e} >= {tail_target:g}, first failing t={first_bad:g}"
            )
    # working digits to absorb the largest intermediate series term
    x = 2.0 * _s_upper(spec) * t_max
    peak_log10 = 0.0
    if x > 2:
        k = min(2 * rmax, int(x))
        peak_log10 = max(0.0, (k * math.log(x) - math.lgamma(k + 1)) / math.log(10))
    dps = ((int(peak_log10) + 24 + 7) // 8) * 8
    policy = policy or PrecisionPolicy(start_dps=dps)
    if policy.start_dps < dps:
        policy = PrecisionPolicy(start_dps=dps, max_dps=policy.max_dps,
                                 stable_rel=policy.stable_rel)
    series = alpha_series(spec, q, rmax, policy)
    samples = []
    with mp.workdps(dps):
        for t in times:
            tm = mp.mpf(t)
            acc = mp.mpf(0)
            interval = 0.0
            t2r = mp.mpf(1)
            for r in range(rmax + 1):
                a = series.value_mp(r)
                if form == "unitary":
                    a = a * (-1) ** r
                acc += a * t2r
                interval += series.coeff(r).interval * float(t2r)
                t2r *= tm * tm
            err = truncation_bound(spec, rmax, t) + interval + 10.0 ** (peak_log10 - dps + 4)
            samples.append(QSample(t=t, Q=float(acc), error_bound=float(err)))
    return QCurve(spec=spec, q=q, form=form, rmax=rmax, samples=samples, series=series)


# -- exports ------------------------------------------------------------------


def export_alpha_csv(series: AlphaSeries, path) -> None:
    """Columns q, r, sign, log10_abs, cancel_loss_digits, precision_digits, interval_flag."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["q", "r", "sign", "log10_abs", "cancel_loss_digits",
                    "precision_digits", "interval_flag"])
        for cf in series.coeffs:
            w.writerow([
                series.q, cf.r, cf.sign,
                "-inf" if cf.log10_abs == -math.inf else f"{cf.log10_abs:.10g}",
                f"{cf.cancel_loss:.4g}", series.precision_digits,
                "suppressed-below-precision" if cf.suppressed else "resolved",
            ])


def export_qcurve_csv(curve: QCurve, path) -> None:
    """Columns t, Q, error_bound, form."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "Q", "error_bound", "form"])
        for s in curve.samples:
            w.writerow([f"{s.t:.10g}", f"{s.Q:.16g}", f"{s.error_bound:.6g}", curve.form])
