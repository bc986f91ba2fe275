"""Command-line front end.

Configuration is line-oriented ``key = value`` with [section] headers
([kernel], [numeric], [experiment], [output]); flags override file values;
every field defaults to the benchmark setup (p=2.5 sweep grids, q=1000,
threshold 1e-5). Infinite eta/sigma are spelled "inf". All times are in units
of hbar over the unit coupling; outputs are plain UTF-8 CSV with '.' decimals
plus a manifest naming the config hash that produced them (timestamps live
only in manifests, so identical configs give byte-identical data files).
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import math
import os
import sys
import time
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import __version__
from .kernels import (InvalidKernel, KernelSpec, classify_kernel, eval_kernel,
                      kernel_sum, load_table)
from .convolution import PrecisionUnreachable, conv_table, export_csv
from .lightcone import (eet, ratio_check, scaling_check,
                        scaling_spread, slope_fit, spec_for_grid_point, sweep,
                        verify_cancellation, write_sweep_csv)
from .magnon import build_hopping, probability_trace_csv
from .series import (PrecisionPolicy, alpha_series, export_alpha_csv,
                     export_qcurve_csv, q_curve)

# Reference edge times for the default benchmark configuration
# (p=2.5, q=1000, threshold 1e-5), used by repro-table1 reporting.
TABLE1_CONDITIONS = [
    ("eta=5 sigma=inf", 5.0, math.inf),
    ("eta=5 sigma=1.5", 5.0, 1.5),
    ("eta=5 sigma=0.5", 5.0, 0.5),
    ("eta=inf", math.inf, math.inf),
]
TABLE1_REFERENCE = [413.0, 417.0, 431.6, 455.9]

FIG3_P_LIST = [1.7, 1.9, 2.0, 2.1, 2.3, 2.5, 2.9, 3.5]
FIG3_ETA_LIST = [float(e) for e in range(1, 15)] + [math.inf]


@dataclass
class RunConfig:
    """Validated run configuration with benchmark defaults."""

    # kernel group
    family: str = "power_law"
    p: float = 2.5
    eta: float = math.inf
    sigma: float = math.inf
    J0: float = 1.0
    table_path: Optional[str] = None
    # numeric group
    W: Optional[int] = None
    Rmax: Optional[int] = None
    precision: int = 30
    N: Optional[int] = None
    bc: str = "periodic"
    scale: float = 1.0
    diagonal: float = 0.0
    # experiment group
    q: int = 1000
    threshold: float = 1e-5
    t_start: float = 0.0
    t_stop: float = 10.0
    t_points: int = 51
    r: int = 3
    form: str = "unitary"
    p_list: List[float] = field(default_factory=lambda: list(FIG3_P_LIST))
    eta_list: List[float] = field(default_factory=lambda: list(FIG3_ETA_LIST))
    sigma_list: List[float] = field(default_factory=lambda: [math.inf])
    q_list: List[int] = field(default_factory=lambda: [20, 40, 60, 80, 100,
                                                       120, 140, 160, 180, 200])
    # output group
    out_dir: str = ""
    workers: int = 1

    def kernel_spec(self) -> KernelSpec:
        if self.table_path:
            return load_table(self.table_path)
        fam = self.family
        if fam == "power_law" and math.isfinite(self.eta):
            fam = "sharp_truncated" if math.isinf(self.sigma) else "soft_truncated"
        if fam == "power_law":
            return KernelSpec.power_law(self.p, self.J0)
        if fam == "sharp_truncated":
            return KernelSpec.sharp_truncated(self.p, int(self.eta), self.J0)
        if fam == "soft_truncated":
            return KernelSpec.soft_truncated(self.p, int(self.eta), self.sigma, self.J0)
        if fam == "nearest_neighbor":
            return KernelSpec.nearest_neighbor(self.J0)
        raise InvalidKernel(f"cannot build kernel for family {fam!r}")

    def canonical(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, list):
                v = ",".join(str(x) for x in v)
            lines.append(f"{f.name}={v}")
        return "\n".join(lines)

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]


_SECTION_FIELDS = {
    "kernel": ["family", "p", "eta", "sigma", "J0", "table_path"],
    "numeric": ["W", "Rmax", "precision", "N", "bc", "scale", "diagonal"],
    "experiment": ["q", "threshold", "t_start", "t_stop", "t_points", "r",
                   "form", "p_list", "eta_list", "sigma_list", "q_list"],
    "output": ["out_dir", "workers"],
}


def _parse_value(name: str, raw: str):
    raw = raw.strip()
    if name in ("family", "bc", "form", "out_dir", "table_path"):
        return raw
    if name in ("p_list", "eta_list", "sigma_list"):
        return [float(x) for x in raw.split(",") if x.strip()]
    if name == "q_list":
        return [int(x) for x in raw.split(",") if x.strip()]
    if name in ("W", "Rmax", "N"):
        return None if raw.lower() in ("", "none", "auto") else int(raw)
    if name in ("precision", "q", "t_points", "r", "workers"):
        return int(raw)
    return float(raw)  # handles "inf"


def load_config(path) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = cp.read(path)
    if not read:
        raise FileNotFoundError(f"config file {path} not found")
    cfg = RunConfig()
    for section, names in _SECTION_FIELDS.items():
        if not cp.has_section(section):
            continue
        for name in names:
            if cp.has_option(section, name):
                setattr(cfg, name, _parse_value(name, cp.get(section, name)))
    return cfg


def _apply_overrides(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    for f in fields(RunConfig):
        val = getattr(args, f.name, None)
        if val is not None:
            cfg = replace(cfg, **{f.name: val})
    return cfg


def _out_dir(cfg: RunConfig) -> Path:
    d = cfg.out_dir or os.environ.get("EETLAB_OUT", ".")
    p = Path(d)
    p.mkdir(parents=True, exist_ok=True)
    return p


def write_manifest(cfg: RunConfig, out: Path, name: str, wall: float,
                   extra: str = "") -> Path:
    path = out / f"{name}.manifest.txt"
    lines = [
        f"artifact: {name}",
        f"config_hash: {cfg.config_hash()}",
        f"eetlab_version: {__version__}",
        f"numpy_version: {np.__version__}",
        f"wall_seconds: {wall:.3f}",
        f"written_at: {time.strftime('%Y-%m-%dT%H:%M:%S')}",
    ]
    if extra:
        lines.append(extra)
    lines.append("config:")
    lines.extend("  " + ln for ln in cfg.canonical().splitlines())
    path.write_text("\n".join(lines) + "\n")
    return path


# -- subcommand bodies ---------------------------------------------------------


def cmd_kernel_eval(cfg: RunConfig, args) -> int:
    spec = cfg.kernel_spec()
    print(f"{eval_kernel(spec, args.n):.17g}")
    return 0


def cmd_kernel_classify(cfg: RunConfig, args) -> int:
    spec = cfg.kernel_spec()
    print(classify_kernel(spec).value)
    return 0


def cmd_kernel_sum(cfg: RunConfig, args) -> int:
    spec = cfg.kernel_spec()
    ks = kernel_sum(spec)
    print(f"S = {ks.S:.15g}  tail_bound = {ks.tail_bound:.6g}  window = {ks.window}")
    return 0


def cmd_conv(cfg: RunConfig, args) -> int:
    spec = cfg.kernel_spec()
    t0 = time.time()
    table = conv_table(spec, cfg.Rmax if cfg.Rmax is not None else 6,
                       W=cfg.W, q_max=cfg.q if cfg.W is None else None)
    out = _out_dir(cfg)
    name = f"conv_{cfg.config_hash()}"
    export_csv(table, out / f"{name}.csv")
    write_manifest(cfg, out, name, time.time() - t0,
                   extra=f"flagged: {table.flagged}")
    print(out / f"{name}.csv")
    return 0


def cmd_alpha(cfg: RunConfig, args) -> int:
    spec = cfg.kernel_spec()
    t0 = time.time()
    rmax = cfg.Rmax if cfg.Rmax is not None else cfg.r
    series = alpha_series(spec, cfg.q, rmax,
                          PrecisionPolicy(start_dps=cfg.precision))
    out = _out_dir(cfg)
    name = f"alpha_{cfg.config_hash()}"
    export_alpha_csv(series, out / f"{name}.csv")
    write_manifest(cfg, out, name, time.time() - t0,
                   extra=f"method: {series.method}")
    print(out / f"{name}.csv")
    return 0


def cmd_qcurve(cfg: RunConfig, args) -> int:
    spec = cfg.kernel_spec()
    t0 = time.time()
    times = np.linspace(cfg.t_start, cfg.t_stop, cfg.t_points).tolist()
    curve = q_curve(spec, cfg.q, times, form=cfg.form, rmax=cfg.Rmax)
    out = _out_dir(cfg)
    name = f"qcurve_{cfg.config_hash()}"
    export_qcurve_csv(curve, out / f"{name}.csv")
    write_manifest(cfg, out, name, time.time() - t0,
                   extra=f"rmax: {curve.rmax}")
    print(out / f"{name}.csv")
    return 0


def cmd_eet(cfg: RunConfig, args) -> int:
    spec = cfg.kernel_spec()
    t0 = time.time()
    rec = eet(spec, cfg.q, cfg.threshold, method=args.method or "oracle",
              N=cfg.N, scale=cfg.scale, diagonal=cfg.diagonal)
    out = _out_dir(cfg)
    name = f"eet_{cfg.config_hash()}"
    write_sweep_csv([rec], out / f"{name}.csv")
    write_manifest(cfg, out, name, time.time() - t0)
    if rec.censored:
        print("censored (no crossing before t_max)")
    else:
        print(f"EET = {rec.time:.4f}  bracket=({rec.bracket[0]:.4f}, "
              f"{rec.bracket[1]:.4f})  N={rec.N}")
    return 0


def cmd_sweep(cfg: RunConfig, args) -> int:
    t0 = time.time()
    out = _out_dir(cfg)
    name = f"sweep_{cfg.config_hash()}"
    records = sweep(cfg.p_list, cfg.eta_list, cfg.sigma_list, cfg.q,
                    cfg.threshold, out_csv=out / f"{name}.csv",
                    workers=cfg.workers, N=cfg.N, scale=cfg.scale,
                    diagonal=cfg.diagonal)
    write_manifest(cfg, out, name, time.time() - t0,
                   extra=f"records: {len(records)}")
    print(out / f"{name}.csv")
    return 0


def cmd_verify_cancel(cfg: RunConfig, args) -> int:
    p = args.p_exact if args.p_exact is not None else cfg.p
    res = verify_cancellation(cfg.r, cfg.q, p)
    if res == 0:
        print("residual = 0 (exact)")
        return 0
    print(f"residual = {res} (exact)")
    return 1


def cmd_verify_scaling(cfg: RunConfig, args) -> int:
    t0 = time.time()
    pts = scaling_check(cfg.p, cfg.r, cfg.q_list,
                        PrecisionPolicy(start_dps=max(cfg.precision, 35)))
    out = _out_dir(cfg)
    name = f"scaling_{cfg.config_hash()}"
    with open(out / f"{name}.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["q", "beta", "beta_err", "suppressed"])
        for pt in pts:
            w.writerow([pt.q, f"{pt.beta:.10g}", f"{pt.beta_err:.4g}",
                        int(pt.suppressed)])
    spread = scaling_spread(pts)
    write_manifest(cfg, out, name, time.time() - t0,
                   extra=f"max_over_median: {spread:.4g}")
    print(f"max beta / median beta = {spread:.4g}")
    return 0


def cmd_verify_ratio(cfg: RunConfig, args) -> int:
    t0 = time.time()
    qs = [q for q in (args.ratio_qs or [10, 20, 30, 40])]
    pts = ratio_check(qs, p=cfg.p if cfg.p > 2 else 3.0)
    out = _out_dir(cfg)
    name = f"ratio_{cfg.config_hash()}"
    with open(out / f"{name}.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["q", "log10_ratio", "err_decades", "suppressed"])
        for pt in pts:
            w.writerow([pt.q, f"{pt.log10_ratio:.8g}", f"{pt.err_decades:.4g}",
                        int(pt.suppressed)])
    decreasing = all(b.log10_ratio < a.log10_ratio for a, b in zip(pts, pts[1:]))
    write_manifest(cfg, out, name, time.time() - t0,
                   extra=f"strictly_decreasing: {decreasing}")
    print(f"strictly decreasing: {decreasing}")
    return 0


def cmd_slope(cfg: RunConfig, args) -> int:
    spec = cfg.kernel_spec()
    m, resid = slope_fit(spec, cfg.q, form=cfg.form,
                         t_window=(args.t1, args.t2))
    print(f"exponent = {m:.4f}  residual = {resid:.3g}")
    return 0


def cmd_oracle(cfg: RunConfig, args) -> int:
    spec = cfg.kernel_spec()
    t0 = time.time()
    N = cfg.N or 4096
    matrix = build_hopping(spec, N, cfg.bc, cfg.scale, cfg.diagonal)
    times = np.linspace(cfg.t_start, cfg.t_stop, cfg.t_points)
    out = _out_dir(cfg)
    name = f"oracle_{cfg.config_hash()}"
    probability_trace_csv(matrix, times, cfg.q, out / f"{name}.csv")
    write_manifest(cfg, out, name, time.time() - t0)
    print(out / f"{name}.csv")
    return 0


def cmd_repro_table1(cfg: RunConfig, args) -> int:
    t0 = time.time()
    out = _out_dir(cfg)
    name = "table1"
    records = []
    for label, eta_v, sigma_v in TABLE1_CONDITIONS:
        spec = spec_for_grid_point(2.5, eta_v, sigma_v)
        records.append(eet(spec, cfg.q, cfg.threshold, N=cfg.N,
                           scale=cfg.scale, diagonal=cfg.diagonal))
    write_sweep_csv(records, out / f"{name}.csv")
    write_manifest(cfg, out, name, time.time() - t0)
    print(f"{'condition':<18} {'EET':>8} {'reference':>10} {'delta':>8}")
    for (label, _e, _s), rec, ref in zip(TABLE1_CONDITIONS, records,
                                         TABLE1_REFERENCE):
        print(f"{label:<18} {rec.time:8.1f} {ref:10.1f} {rec.time - ref:+8.2f}")
    print(out / f"{name}.csv")
    return 0


def cmd_repro_fig3(cfg: RunConfig, args) -> int:
    t0 = time.time()
    out = _out_dir(cfg)
    name = "fig3_sweep"
    records = sweep(cfg.p_list, cfg.eta_list, [math.inf], cfg.q,
                    cfg.threshold, out_csv=out / f"{name}.csv",
                    workers=cfg.workers, N=cfg.N, scale=cfg.scale,
                    diagonal=cfg.diagonal)
    write_manifest(cfg, out, name, time.time() - t0,
                   extra=f"records: {len(records)}")
    print(out / f"{name}.csv")
    return 0


_COMMANDS = {
    "kernel-eval": cmd_kernel_eval,
    "kernel-classify": cmd_kernel_classify,
    "kernel-sum": cmd_kernel_sum,
    "conv": cmd_conv,
    "alpha": cmd_alpha,
    "qcurve": cmd_qcurve,
    "eet": cmd_eet,
    "sweep": cmd_sweep,
    "verify-cancel": cmd_verify_cancel,
    "verify-scaling": cmd_verify_scaling,
    "verify-ratio": cmd_verify_ratio,
    "slope": cmd_slope,
    "oracle": cmd_oracle,
    "repro-table1": cmd_repro_table1,
    "repro-fig3": cmd_repro_fig3,
}


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", type=str, default=None, help="config file path")
    sp.add_argument("--out", dest="out_dir", type=str, default=None)
    sp.add_argument("--workers", type=int, default=None)
    sp.add_argument("--precision", type=int, default=None, help="working digits")
    for name, typ in [("p", float), ("eta", float), ("sigma", float),
                      ("J0", float), ("q", int), ("threshold", float),
                      ("N", int), ("scale", float), ("diagonal", float),
                      ("r", int), ("t_start", float), ("t_stop", float),
                      ("t_points", int), ("W", int), ("Rmax", int)]:
        sp.add_argument(f"--{name.replace('_', '-')}", dest=name, type=typ,
                        default=None)
    sp.add_argument("--family", type=str, default=None)
    sp.add_argument("--form", type=str, default=None,
                    choices=["unitary", "literal"])
    sp.add_argument("--bc", type=str, default=None, choices=["periodic", "open"])
    sp.add_argument("--table-path", dest="table_path", type=str, default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="eetlab",
        description="entanglement-transport laboratory for long-range spin chains",
    )
    sub = ap.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        sp = sub.add_parser(name)
        _add_common(sp)
        if name == "kernel-eval":
            sp.add_argument("--n", type=int, required=True)
        if name == "eet":
            sp.add_argument("--method", type=str, default=None,
                            choices=["oracle", "series"])
        if name == "verify-cancel":
            sp.add_argument("--p-exact", dest="p_exact", type=str, default=None,
                            help="exact rational exponent, e.g. 5/2")
        if name == "verify-ratio":
            sp.add_argument("--ratio-qs", dest="ratio_qs", type=int, nargs="+",
                            default=None)
        if name == "slope":
            sp.add_argument("--t1", type=float, default=0.1)
            sp.add_argument("--t2", type=float, default=0.5)
    return ap


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        cfg = _apply_overrides(cfg, args)
        return _COMMANDS[args.command](cfg, args)
    except (InvalidKernel, FileNotFoundError, configparser.Error) as exc:
        print(f"error: config-error: {exc}", file=sys.stderr)
        return 2
    except PrecisionUnreachable as exc:
        print(f"error: precision-unreachable: {exc}", file=sys.stderr)
        return 3
    except (ValueError, RuntimeError) as exc:
        print(f"error: numeric-error: {exc}", file=sys.stderr)
        return 4


def main() -> None:  # console entry point
    sys.exit(run())
