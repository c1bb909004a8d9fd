"""Report documents and their JSON, CSV and SVG renderings.

Floats are written with ``repr`` (shortest string that round-trips), so
serialised reports reload bit-for-bit.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .measures import InfoReport, mode_weights

PLOT_FLOOR = 1e-18


def _num(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


@dataclass
class ReportDocument:
    label: str
    thresholds: dict
    report: InfoReport
    spectrum: dict
    tool_version: str
    input_digest: str
    attribution: list = None
    diagnostics: list = None

    def to_dict(self):
        return {
            "label": self.label,
            "thresholds": dict(self.thresholds),
            "report": self.report.to_dict(),
            "spectrum": dict(self.spectrum),
            "attribution": self.attribution,
            "diagnostics": self.diagnostics,
            "tool_version": self.tool_version,
            "input_digest": self.input_digest,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["report"] = InfoReport.from_dict(d["report"])
        return cls(**d)

    def to_json(self):
        return dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def dumps(obj):
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def build_document(label, spectrum, report, tool_version, input_digest, attribution=None, diagnostics=None):
    weights = mode_weights(spectrum)
    return ReportDocument(
        label=label,
        thresholds={"delta": report.delta, "epsilon": report.epsilon},
        report=report,
        spectrum={
            "method": spectrum.method,
            "n_object": spectrum.n_object,
            "values": [float(v) for v in spectrum.values],
            "lambdas": [float(v) for v in weights.lambdas],
        },
        tool_version=tool_version,
        input_digest=input_digest,
        attribution=attribution,
        diagnostics=diagnostics,
    )


def spectrum_csv(spectrum):
    lam = mode_weights(spectrum).lambdas
    rows = ["index,sigma,lambda"]
    rows += [f"{i},{_num(s)},{_num(w)}" for i, (s, w) in enumerate(zip(spectrum.values, lam))]
    return "\n".join(rows) + "\n"


SWEEP_COLUMNS = ("parameter", "entropy", "r_eff", "rank_eps", "capacity", "irreversibility", "hard_loss", "soft_loss")


def sweep_csv(result):
    rows = [",".join(SWEEP_COLUMNS)]
    for value, r in zip(result.values, result.reports):
        rows.append(
            ",".join(
                _num(v)
                for v in (value, r.entropy, r.r_eff, r.rank_eps, r.capacity, r.irreversibility, r.hard_loss, r.soft_loss)
            )
        )
    return "\n".join(rows) + "\n"


# ---------------------------------------------------------------------- svg

WIDTH, HEIGHT = 800, 500
LEFT, RIGHT, TOP, BOTTOM = 80, 20, 30, 60


def _f(x):
    return f"{x:.3f}"


def render_spectrum_svg(spectrum, delta, epsilon, title=None):
    """Log-scale plot of sorted singular values with delta and epsilon lines.

    Zeros (and anything below ``PLOT_FLOOR``) are drawn at the floor. The
    background is shaded by band: hard loss below delta, soft loss between
    delta and epsilon, recoverable above epsilon.
    """
    values = np.maximum(np.asarray(spectrum.values, dtype=float), PLOT_FLOOR)
    d = max(delta, PLOT_FLOOR)
    e = max(epsilon, PLOT_FLOOR)
    lo = math.floor(math.log10(min(values.min(), d, e))) - 1
    hi = math.ceil(math.log10(max(values.max(), e))) + 1
    lo = max(lo, round(math.log10(PLOT_FLOOR)))

    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM
    n = values.size

    def px(i):
        return LEFT + (pw * i / (n - 1) if n > 1 else pw / 2)

    def py(v):
        return TOP + ph * (hi - math.log10(v)) / (hi - lo)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    y_top, y_eps, y_del, y_bot = TOP, py(e), py(d), TOP + ph
    bands = [
        ("recoverable", y_top, y_eps, "#e3f2e1"),
        ("soft-loss", y_eps, y_del, "#fdf1d8"),
        ("hard-loss", y_del, y_bot, "#f8dcdc"),
    ]
    for name, y0, y1, colour in bands:
        if y1 > y0:
            out.append(
                f'<rect class="{name}" x="{LEFT}" y="{_f(y0)}" width="{pw}" height="{_f(y1 - y0)}" fill="{colour}"/>'
            )
    for k in range(lo, hi + 1):
        y = py(10.0**k)
        out.append(f'<line x1="{LEFT}" y1="{_f(y)}" x2="{LEFT + pw}" y2="{_f(y)}" stroke="#ddd" stroke-width="0.5"/>')
        out.append(f'<text x="{LEFT - 6}" y="{_f(y + 4)}" font-size="11" text-anchor="end">1e{k}</text>')
    out.append(
        f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black" stroke-width="1"/>'
    )
    for name, y, colour in (("delta", y_del, "#b22222"), ("epsilon", y_eps, "#1f6f1f")):
        out.append(
            f'<line class="{name}" x1="{LEFT}" y1="{_f(y)}" x2="{LEFT + pw}" y2="{_f(y)}" '
            f'stroke="{colour}" stroke-width="1.5" stroke-dasharray="6 4"/>'
        )
        out.append(f'<text x="{LEFT + pw - 4}" y="{_f(y - 4)}" font-size="12" text-anchor="end" fill="{colour}">{name}</text>')
    pts = " ".join(f"{_f(px(i))},{_f(py(v))}" for i, v in enumerate(values))
    out.append(f'<polyline class="spectrum" points="{pts}" fill="none" stroke="#1f3f8f" stroke-width="1.5"/>')
    out.append(
        f'<text x="{LEFT + pw / 2}" y="{HEIGHT - 20}" font-size="13" text-anchor="middle">mode index (sorted)</text>'
    )
    out.append(
        f'<text x="20" y="{TOP + ph / 2}" font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 20 {TOP + ph / 2})">singular value</text>'
    )
    if title:
        safe = title.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
        out.append(f'<text x="{LEFT}" y="{TOP - 10}" font-size="14">{safe}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
