import math
import re

import numpy as np

from opgauge import (
    GaussianBlur,
    GridSpec,
    SingularSpectrum,
    ThresholdPolicy,
    analytic_spectrum,
    info_report,
)
from opgauge.chain import SweepResult
from opgauge.report import (
    PLOT_FLOOR,
    ReportDocument,
    build_document,
    render_spectrum_svg,
    spectrum_csv,
    sweep_csv,
)


def polyline_points(svg):
    pts = re.search(r'class="spectrum" points="([^"]+)"', svg).group(1)
    return np.array([[float(v) for v in p.split(",")] for p in pts.split()])


def test_document_round_trip():
    s = analytic_spectrum(GaussianBlur(1.3), GridSpec((32,)))
    r = info_report(s, ThresholdPolicy(1 / 3))
    doc = build_document("blur", s, r, "0.1.0", "sha256:abc", attribution=[{"stage": "x", "report": r.to_dict()}])
    back = ReportDocument.from_json(doc.to_json())
    assert back == doc
    assert back.to_json() == doc.to_json()


def test_null_capacity_serialises():
    s = SingularSpectrum.from_values(np.full(4, 0.5))
    r = info_report(s, ThresholdPolicy(0.6))
    text = build_document("a", s, r, "v", "d").to_json()
    assert '"capacity": null' in text and "NaN" not in text


def test_spectrum_csv():
    s = SingularSpectrum.from_values([2.0, 1.0, 1.0])
    lines = spectrum_csv(s).splitlines()
    assert lines[0] == "index,sigma,lambda"
    assert lines[1] == f"0,2.0,{repr(2 / 3)}"
    assert len(lines) == 4


def test_sweep_csv_columns():
    r = info_report(SingularSpectrum.from_values([0.5] * 4), ThresholdPolicy(0.6))
    text = sweep_csv(SweepResult("stages[0].mu", [0.7], [r]))
    header, row = text.splitlines()
    assert header == "parameter,entropy,r_eff,rank_eps,capacity,irreversibility,hard_loss,soft_loss"
    assert row.split(",")[4] == "" and row.split(",")[3] == "0"
    assert float(row.split(",")[1]) == math.log(4)


class TestSvg:
    def test_zeros_clamped(self):
        s = SingularSpectrum.from_values([1, 1, 0, 0])
        svg = render_spectrum_svg(s, 1e-15, 0.5)
        assert "nan" not in svg.lower()
        assert 'viewBox="0 0 800 500"' in svg

    def test_sampling_two_plateaus(self):
        s = SingularSpectrum.from_values([1] * 5 + [0] * 11)
        ys = polyline_points(render_spectrum_svg(s, 1e-14, 0.5))[:, 1]
        assert len(set(ys)) == 2

    def test_blur_monotone(self):
        s = analytic_spectrum(GaussianBlur(1.0), GridSpec((64,)))
        pts = polyline_points(render_spectrum_svg(s, 1e-14, 0.01))
        assert np.all(np.diff(pts[:, 0]) > 0)
        # svg y grows downward: nonincreasing values mean nondecreasing y
        assert np.all(np.diff(pts[:, 1]) >= 0)

    def test_threshold_lines_and_bands(self):
        s = SingularSpectrum.from_values(np.logspace(0, -20, 30))
        svg = render_spectrum_svg(s, 1e-12, 1e-3)
        for cls in ("delta", "epsilon", "hard-loss", "soft-loss", "recoverable"):
            assert f'class="{cls}"' in svg

    def test_deterministic(self):
        s = analytic_spectrum(GaussianBlur(2.0), GridSpec((40,)))
        assert render_spectrum_svg(s, 1e-14, 0.1, "t") == render_spectrum_svg(s, 1e-14, 0.1, "t")

    def test_floor(self):
        assert PLOT_FLOOR == 1e-18
