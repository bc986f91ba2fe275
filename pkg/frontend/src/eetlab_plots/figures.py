"""Edge-time figure rendering from sweep CSVs.

The main panel draws one EET(eta) curve per decay exponent over the finite
interaction ranges; the infinite-range column sits on a separate narrow panel
(a two-panel axis break), with an inset of the infinite-range EET against the
exponent and the neighbor-limit reference as a horizontal dashed line.
Rendering is a pure function of the CSV: no data synthesis, and identical
input produces structurally identical output.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

REQUIRED_COLUMNS = ["p", "eta", "sigma", "q", "threshold", "eet_time",
                    "t_low", "t_high", "method", "N", "bc", "censored"]

# reference edge times for the benchmark conditions, for optional overlay
TABLE1_REFERENCE = {
    (5.0, math.inf): 413.0,
    (5.0, 1.5): 417.0,
    (5.0, 0.5): 431.6,
    (math.inf, math.inf): 455.9,
}


class MissingColumn(ValueError):
    pass


@dataclass
class SweepRow:
    p: float
    eta: float
    sigma: float
    eet_time: float
    censored: bool


@dataclass
class FigureSpec:
    """Inputs and styling for the edge-time figure."""

    sweep_csv: Path
    eta_max: int = 14
    y_range: Optional[Tuple[float, float]] = None
    overlay_reference: bool = False
    colors: Sequence[str] = field(default_factory=lambda: [
        "#1f3b73", "#2b4f8f", "#3763aa", "#4377c6", "#5e8fd0",
        "#7aa6da", "#95bee4", "#b1d5ee",
    ])


def read_sweep(path) -> List[SweepRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in REQUIRED_COLUMNS:
            if col not in header:
                raise MissingColumn(f"sweep CSV missing column {col!r}")
        rows = []
        for rec in reader:
            rows.append(SweepRow(
                p=float(rec["p"]),
                eta=float(rec["eta"]),
                sigma=float(rec["sigma"]),
                eet_time=float(rec["eet_time"]),
                censored=rec["censored"].strip() not in ("0", "", "False"),
            ))
    return rows


def _series_by_p(rows: List[SweepRow]) -> Dict[float, List[SweepRow]]:
    out: Dict[float, List[SweepRow]] = {}
    for row in rows:
        out.setdefault(row.p, []).append(row)
    for p in out:
        out[p].sort(key=lambda r: r.eta)
    return dict(sorted(out.items()))


def render_fig3(sweep_csv, out_path, spec: Optional[FigureSpec] = None):
    """Render the sweep to a vector-graphics file; returns the figure."""
    spec = spec or FigureSpec(sweep_csv=Path(sweep_csv))
    rows = read_sweep(sweep_csv)
    plt.rcParams["svg.hashsalt"] = "eetlab-plots"

    fig = plt.figure(figsize=(7.0, 5.6))
    # two-panel trick: finite ranges left, the infinite-range column right
    ax = fig.add_axes([0.10, 0.10, 0.64, 0.84])
    ax_inf = fig.add_axes([0.77, 0.10, 0.08, 0.84], sharey=ax)

    live = [r for r in rows if not r.censored]
    if not live:
        ax.annotate("all sweep points censored (no crossing before t_max)",
                    xy=(0.5, 0.5), xycoords="axes fraction", ha="center")
        ax.set_xlabel("interaction range")
        ax.set_ylabel("edge time")
        fig.savefig(out_path, metadata={"Date": None})
        return fig

    series = _series_by_p(rows)
    for idx, (p, srows) in enumerate(series.items()):
        color = spec.colors[idx % len(spec.colors)]
        finite = [r for r in srows if math.isfinite(r.eta) and r.eta <= spec.eta_max]
        xs = [r.eta for r in finite if not r.censored]
        ys = [r.eet_time for r in finite if not r.censored]
        ax.plot(xs, ys, "o-", ms=3.5, lw=1.1, color=color, label=f"p={p:g}")
        cx = [r.eta for r in finite if r.censored]
        if cx:
            # censored points: open markers pinned to the axis floor
            cy = [min(ys) if ys else 0.0] * len(cx)
            ax.plot(cx, cy, "o", mfc="none", ms=5, color=color)
        inf_rows = [r for r in srows if math.isinf(r.eta) and not r.censored]
        for r in inf_rows:
            ax_inf.plot([0.0], [r.eet_time], "o", ms=4, color=color)

    # neighbor-limit reference: the eta = 1 rows are exponent independent
    nn_rows = [r for r in rows if r.eta == 1.0 and not r.censored]
    if nn_rows:
        ax.axhline(nn_rows[0].eet_time, ls="--", lw=0.9, color="black")

    if spec.overlay_reference:
        for (eta, sigma), ref in TABLE1_REFERENCE.items():
            target = ax_inf if math.isinf(eta) else ax
            target.plot([0.0 if math.isinf(eta) else eta], [ref], "x",
                        ms=6, color="#aa3311")

    # inset: infinite-range edge time against the exponent
    ax_ins = fig.add_axes([0.17, 0.58, 0.22, 0.30])
    ps = [p for p, srows in series.items()
          if any(math.isinf(r.eta) and not r.censored for r in srows)]
    vals = [next(r.eet_time for r in series[p]
                 if math.isinf(r.eta) and not r.censored) for p in ps]
    ax_ins.plot(ps, vals, "o", ms=3.5, color="#aa3311")
    if nn_rows:
        ax_ins.axhline(nn_rows[0].eet_time, ls="--", lw=0.8, color="black")
    ax_ins.set_xlabel("p", fontsize=8)
    ax_ins.set_ylabel("EET(inf)", fontsize=8)
    ax_ins.tick_params(labelsize=7)

    ax.set_xlabel("interaction range eta")
    ax.set_ylabel("Entanglement Edge Time")
    ax.set_xlim(0.5, spec.eta_max + 0.5)
    if spec.y_range:
        ax.set_ylim(*spec.y_range)
    ax.legend(fontsize=8, loc="lower right")
    # axis-break cosmetics on the infinite column
    ax_inf.set_xticks([0.0])
    ax_inf.set_xticklabels(["inf"])
    ax_inf.set_xlim(-0.6, 0.6)
    ax_inf.spines["left"].set_visible(False)
    ax_inf.tick_params(left=False, labelleft=False)
    ax.spines["right"].set_visible(False)

    fig.savefig(out_path, metadata={"Date": None})
    return fig


def figure_structure(fig) -> dict:
    """Structural fingerprint: per-axes element counts and rounded
    coordinates (the golden-file comparison object)."""
    out = {"axes": []}
    for ax in fig.axes:
        lines = []
        for ln in ax.get_lines():
            xs = [round(float(x), 6) for x in ln.get_xdata()]
            ys = [round(float(y), 6) for y in ln.get_ydata()]
            lines.append({"n": len(xs), "x": xs, "y": ys})
        out["axes"].append({
            "n_lines": len(lines),
            "lines": lines,
            "n_texts": len(ax.texts),
        })
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description="render an edge-time sweep figure")
    ap.add_argument("sweep_csv")
    ap.add_argument("out_path")
    ap.add_argument("--overlay-reference", action="store_true")
    args = ap.parse_args(argv)
    try:
        spec = FigureSpec(sweep_csv=Path(args.sweep_csv),
                          overlay_reference=args.overlay_reference)
        render_fig3(args.sweep_csv, args.out_path, spec)
    except MissingColumn as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
