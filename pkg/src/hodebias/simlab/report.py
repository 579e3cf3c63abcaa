"""Serialisation of ratio tables and KS reports to CSV, Markdown and JSON."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict
from pathlib import Path

from .experiment import KSReport, RatioCell, RatioRow, RatioTable, estimator_label

RATIO_COLUMNS = ("gamma", "d", "estimator", "order", "median_ratio", "mean_ratio", "failures", "reps", "seed")
KS_COLUMNS = ("estimator", "ks_statistic", "replications", "standardization", "sigma", "seed")


def fmt_ratio(x: float) -> str:
    """Six significant digits; ``nan`` for missing cells."""
    if x is None or not math.isfinite(x):
        return "nan"
    return f"{x:#.6g}"


def to_csv(obj) -> str:
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\r\n")
    if isinstance(obj, RatioTable):
        w.writerow(RATIO_COLUMNS)
        for row in obj.rows:
            for c in row.cells:
                w.writerow([
                    f"{row.gamma:.2f}", row.d, c.estimator, c.order, fmt_ratio(c.median_ratio),
                    fmt_ratio(c.mean_ratio), c.failures, c.reps, obj.seed,
                ])
    elif isinstance(obj, KSReport):
        w.writerow(KS_COLUMNS)
        w.writerow([
            obj.estimator, fmt_ratio(obj.ks_statistic), obj.replications, obj.standardization,
            "" if obj.sigma is None else fmt_ratio(obj.sigma), obj.seed,
        ])
    else:
        raise TypeError(f"cannot emit {type(obj).__name__}")
    return buf.getvalue()


def to_markdown(obj) -> str:
    """One row per ``(gamma, d)`` and one column per estimator (median ratios)."""
    if isinstance(obj, KSReport):
        lines = ["| " + " | ".join(KS_COLUMNS) + " |", "|" + "---|" * len(KS_COLUMNS)]
        sigma = "" if obj.sigma is None else fmt_ratio(obj.sigma)
        vals = [obj.estimator, fmt_ratio(obj.ks_statistic), str(obj.replications),
                obj.standardization, sigma, str(obj.seed)]
        lines.append("| " + " | ".join(vals) + " |")
        return "\n".join(lines) + "\n"
    if not isinstance(obj, RatioTable):
        raise TypeError(f"cannot emit {type(obj).__name__}")
    labels = []
    for row in obj.rows:
        for c in row.cells:
            lab = estimator_label(c.estimator, c.order)
            if lab not in labels:
                labels.append(lab)
    lines = ["| γ | d | " + " | ".join(labels) + " |", "|---|---|" + "---:|" * len(labels)]
    for row in obj.rows:
        by_label = {estimator_label(c.estimator, c.order): c for c in row.cells}
        vals = []
        for lab in labels:
            c = by_label.get(lab)
            vals.append("" if c is None else f"{c.median_ratio:.3f}" if math.isfinite(c.median_ratio) else "nan")
        lines.append(f"| {row.gamma:.2f} | {row.d} | " + " | ".join(vals) + " |")
    return "\n".join(lines) + "\n"


def _json_float(x):
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)  # "nan", "inf", "-inf"
    return x


def _encode(obj):
    if isinstance(obj, dict):
        return {k: _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    return _json_float(obj)


def to_json(obj) -> str:
    if isinstance(obj, RatioTable):
        payload = {"type": "RatioTable", **asdict(obj)}
    elif isinstance(obj, KSReport):
        payload = {"type": "KSReport", **asdict(obj)}
    else:
        raise TypeError(f"cannot emit {type(obj).__name__}")
    return json.dumps(_encode(payload), indent=2, allow_nan=False) + "\n"


def _f(x):
    return float(x) if isinstance(x, str) else x


def from_json(text: str):
    data = json.loads(text)
    kind = data.pop("type", None)
    if kind == "RatioTable":
        rows = []
        for r in data["rows"]:
            cells = [
                RatioCell(c["estimator"], c["order"], _f(c["median_ratio"]), _f(c["mean_ratio"]),
                          c["failures"], c["reps"])
                for c in r["cells"]
            ]
            sq = {k: [_f(v) for v in vals] for k, vals in r["sq_errors"].items()}
            rows.append(RatioRow(r["gamma"], r["d"], cells, sq))
        return RatioTable(rows, data["seed"], data["config"])
    if kind == "KSReport":
        data["ks_statistic"] = _f(data["ks_statistic"])
        data["z_scores"] = [_f(z) for z in data["z_scores"]]
        return KSReport(**data)
    raise ValueError(f"unknown payload type {kind!r}")


def load_json(path) -> RatioTable | KSReport:
    return from_json(Path(path).read_text(encoding="utf-8"))


RENDERERS = {"csv": to_csv, "md": to_markdown, "json": to_json}


def render(obj, fmt: str) -> str:
    try:
        return RENDERERS[fmt](obj)
    except KeyError:
        raise ValueError(f"unknown format {fmt!r}") from None


def emit(obj, fmt: str, path=None) -> str:
    """Render ``obj`` and write it to ``path`` (if given). Returns the text."""
    text = render(obj, fmt)
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text
