"""Writing result tables as CSV, JSON and static SVG figures."""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

FORMATS = ("csv", "json", "svg")


def _plain(x):
    """JSON-safe scalar: numpy types unwrapped, non-finite floats become None."""
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    return x


def _cell(x) -> str:
    x = _plain(x)
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def to_csv(table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = table.all_columns
    w.writerow(cols)
    for row in table.rows:
        w.writerow([_cell(row.get(c)) for c in cols])
    return buf.getvalue()


def to_json(table) -> str:
    cols = table.all_columns
    return json.dumps([{c: _plain(r.get(c)) for c in cols} for r in table.rows], indent=1) + "\n"


def sidecar_json(table) -> str:
    return json.dumps({"experiment": table.experiment, "fit": _plain(table.fit),
                       "instances": _plain(table.details)}, indent=1) + "\n"


def emit(table, fmt: str, path) -> list[Path]:
    """Write ``table`` to ``path`` in ``fmt``; returns the files written.

    CSV and JSON outputs get a ``.details.json`` sidecar with per-instance
    records and any fitted lines.
    """
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "svg":
        path.write_text(render_svg(table))
        return [path]
    path.write_text(to_csv(table) if fmt == "csv" else to_json(table))
    side = path.with_suffix(".details.json")
    side.write_text(sidecar_json(table))
    return [path, side]


# ---------------------------------------------------------------------------
# figures


def _figure():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "ising-continuum"
    return plt


def _num(rows, key):
    return np.array([np.nan if r.get(key) is None else float(r[key]) for r in rows])


def _plot_scaling(ax, table):
    rows = [r for r in table.rows if r["status"] == "ok"]
    bands = sorted({(r["band_lo"], r["band_hi"]) for r in rows})
    for lo, hi in bands:
        pts = [r for r in rows if (r["band_lo"], r["band_hi"]) == (lo, hi)]
        ax.loglog(_num(pts, "N"), _num(pts, "n_iter"), "o", label=f"p in [{lo:g}, {hi:g}]")
    for f in table.fit:
        N = _num(rows, "N")
        xs = np.geomspace(np.nanmin(N), np.nanmax(N), 50)
        ax.loglog(xs, f["prefactor"] * xs ** f["slope"], "-",
                  label=f"{f['prefactor']:.3g} N^{f['slope']:.3f}")
    fixed = [r for r in table.rows if r["status"] == "fixed_budget"]
    if fixed and not rows:
        for b in sorted({r["n_iter"] for r in fixed}):
            pts = [r for r in fixed if r["n_iter"] == b]
            ax.plot(_num(pts, "N"), _num(pts, "p_measured"), "o-", label=f"{b} iterations")
        ax.set_ylabel("ground-state probability")
    else:
        ax.set_ylabel("iterations")
    ax.set_xlabel("N")


def _plot_sweep(ax, table, x, y, lo=None, hi=None):
    for N in sorted({r["N"] for r in table.rows}):
        pts = [r for r in table.rows if r["N"] == N]
        xs, ys = _num(pts, x), _num(pts, y)
        if lo:
            err = np.vstack([ys - _num(pts, lo), _num(pts, hi) - ys])
            ax.errorbar(xs, ys, yerr=err, fmt="o-", capsize=3, label=f"N={N}")
        else:
            ax.plot(xs, ys, "o-", label=f"N={N}")
    ax.set_yscale("symlog", linthresh=1.0)
    ax.set_xlabel(x)
    ax.set_ylabel(f"{y} (search nodes)")


def render_svg(table) -> str:
    plt = _figure()
    exp = table.experiment
    if exp == "connectivity-sweep" and table.rows:
        fig, (ax, ax2) = plt.subplots(2, 1, figsize=(6.4, 6.4), sharex=True)
    else:
        fig, ax = plt.subplots(figsize=(6.4, 4.4))
        ax2 = None
    if not table.rows:
        ax.text(0.5, 0.5, "no data", ha="center", va="center", transform=ax.transAxes)
    elif exp == "scaling":
        _plot_scaling(ax, table)
    elif exp == "rewire-sweep":
        _plot_sweep(ax, table, "percent", "median_cost", "iqr_lo", "iqr_hi")
    elif exp == "connectivity-sweep":
        _plot_sweep(ax, table, "k", "cost_median")
        for N in sorted({r["N"] for r in table.rows}):
            pts = [r for r in table.rows if r["N"] == N]
            ax2.bar(_num(pts, "k"), _num(pts, "p_simple"), alpha=0.6, label=f"N={N}")
        ax2.set_xlabel("k")
        ax2.set_ylabel("p_simple")
        ax2.set_ylim(0, 1.05)
    elif exp == "simple-fraction":
        labels = [f"{r['model']}\n{r['dist']} N={r['N']}" for r in table.rows]
        ax.bar(np.arange(len(labels)), _num(table.rows, "p_simple"))
        ax.set_xticks(np.arange(len(labels)), labels, rotation=60, ha="right", fontsize=7)
        ax.set_ylabel("p_simple")
        ax.set_ylim(0, 1.05)
    ax.set_title(exp)
    for a in (ax, ax2):
        if a is not None and a.get_legend_handles_labels()[0]:
            a.legend(fontsize=8)
    fig.tight_layout()
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buf.getvalue()
