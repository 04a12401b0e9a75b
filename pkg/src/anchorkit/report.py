"""Write sweep results: CSV tables, hand-rolled SVG line charts, a top-anchor table."""
from __future__ import annotations

import csv
import io
import json
import os
from html import escape
from typing import Sequence

from .errors import ConfigError
from .pick import CSV_COLUMNS, EvalReport

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#7f7f7f"]


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_to_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def svg_chart(series: dict, title: str, xlabel: str, ylabel: str, width: int = 480, height: int = 360,
              markers_only: bool = False, desc: str = "") -> str:
    """Minimal self-contained SVG: one polyline (or point set) per named series."""
    pts = [(x, y) for s in series.values() for x, y in s if y is not None]
    if not pts:
        raise ValueError("nothing to plot")
    xs, ys = [p[0] for p in pts], [p[1] for p in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(min(ys), 0.0), max(max(ys), 1.0)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    L, R, T, B = 60, 130, 30, 45
    pw, ph = width - L - R, height - T - B

    def sx(x):
        return L + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return T + ph - (y - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">']
    if desc:
        out.append(f"<desc>{escape(desc)}</desc>")
    out.append(f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>')
    out.append(f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>')
    out.append(f'<rect x="{L}" y="{T}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>')
    for k in range(6):
        yv = y0 + (y1 - y0) * k / 5
        xv = x0 + (x1 - x0) * k / 5
        out.append(f'<line x1="{L - 4}" y1="{sy(yv):.1f}" x2="{L}" y2="{sy(yv):.1f}" stroke="#444"/>')
        out.append(f'<text x="{L - 6}" y="{sy(yv) + 4:.1f}" text-anchor="end">{yv:.2f}</text>')
        out.append(f'<line x1="{sx(xv):.1f}" y1="{T + ph}" x2="{sx(xv):.1f}" y2="{T + ph + 4}" stroke="#444"/>')
        out.append(f'<text x="{sx(xv):.1f}" y="{T + ph + 16}" text-anchor="middle">{xv:.3g}</text>')
    out.append(f'<text x="{L + pw / 2:.1f}" y="{height - 8}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="14" y="{T + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 14 {T + ph / 2:.1f})">{escape(ylabel)}</text>')
    for i, (name, s) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        s = [(x, y) for x, y in s if y is not None]
        if not s:
            continue
        if not markers_only and len(s) > 1:
            path = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in s)
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        for x, y in s:
            out.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="3" fill="{color}"/>')
        ly = T + 12 + 16 * i
        out.append(f'<rect x="{L + pw + 10}" y="{ly - 8}" width="10" height="10" fill="{color}"/>')
        out.append(f'<text x="{L + pw + 24}" y="{ly + 1}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _chosen_settings(report: EvalReport) -> dict:
    """Setting per method used for the vs-K charts.

    Anchors: epsilon 0.05 when present, else the first grid value.  Linear:
    the widest tau whose single-explanation precision is >= 0.95, else the
    most precise tau.
    """
    chosen = {}
    anchor = [r for r in report.singles if r["method"] == "anchor"]
    if anchor:
        vals = [r["setting_value"] for r in anchor]
        chosen["anchor"] = 0.05 if 0.05 in vals else vals[0]
    lime = [r for r in report.singles if r["method"] == "lime"]
    if lime:
        ok = [r for r in lime if r["precision"] is not None and r["precision"] >= 0.95]
        if ok:
            chosen["lime"] = max(r["setting_value"] for r in ok)
        else:
            best = max(lime, key=lambda r: -1.0 if r["precision"] is None else r["precision"])
            chosen["lime"] = best["setting_value"]
    return chosen


def top_anchor_table(anchors, indices, schema, class_names, test_stats=None) -> str:
    lines = []
    for rank, i in enumerate(indices, 1):
        a = anchors[i]
        head = f"{rank}. {a.describe(schema, class_names)}"
        est = a.precision_estimate
        if est is not None:
            head += f"  [precision {est.mean:.3f} (lower {est.lower:.3f}, n={est.n_samples})"
            if test_stats is not None:
                cov, prec = test_stats[i]
                head += f"; test coverage {cov:.3f}"
                if prec is not None:
                    head += f", test precision {prec:.3f}"
            head += "]"
        lines.append(head)
    return "\n".join(lines) + ("\n" if lines else "")


def emit_report(report: EvalReport, out_dir, digest: str = "", seed: int | None = None,
                top_anchors: str | None = None) -> dict:
    """Write ``report.csv``, ``summary.csv``, ``k1.csv``, SVG charts and ``index.json``.

    An empty report yields header-only CSVs and no charts.
    """
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out_dir}: {exc}") from exc
    written = {}

    def put(name, text):
        path = os.path.join(out_dir, name)
        try:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise ConfigError(f"cannot write {path}: {exc}") from exc
        written[name] = path

    put("report.csv", rows_to_csv(report.rows))
    summary = report.summary()
    put("summary.csv", rows_to_csv(summary))
    put("k1.csv", rows_to_csv(report.singles))
    desc = f"config {digest} seed {seed}"

    if report.singles:
        series = {}
        for r in report.singles:
            series.setdefault(r["method"], []).append((r["coverage"], r["precision"]))
        series = {m: sorted(pts) for m, pts in series.items()}
        put("precision_coverage.svg", svg_chart(series, "Precision vs coverage (K=1)", "coverage", "precision",
                                                desc=desc))
    chosen = _chosen_settings(report)
    if summary and chosen:
        for metric in ("precision", "coverage"):
            series = {}
            for r in summary:
                if chosen.get(r["method"]) != r["setting_value"]:
                    continue
                name = f"{r['method']} {r['pick']} ({r['setting_name']}={r['setting_value']:g})"
                series.setdefault(name, []).append((r["K"], r[metric]))
            series = {k: sorted(v) for k, v in sorted(series.items())}
            if any(y is not None for s in series.values() for _, y in s):
                put(f"{metric}_vs_k.svg", svg_chart(series, f"{metric.capitalize()} vs K", "K", metric, desc=desc))
    if top_anchors is not None:
        put("top_anchors.txt", f"# config {digest} seed {seed}\n" + top_anchors)

    index = {"config_digest": digest, "seed": seed, "artifacts": sorted(written)}
    put("index.json", json.dumps(index, sort_keys=True, indent=2) + "\n")
    return written
