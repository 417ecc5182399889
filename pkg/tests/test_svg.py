import xml.etree.ElementTree as ET

import numpy as np

from qcmlab import svg


def test_line_chart_is_valid_svg():
    xs = np.logspace(-2, 0, 20)
    text = svg.line_chart([("a", xs, xs ** 2), ("b", xs, np.sqrt(xs))], title="t & u", xlabel="x", ylabel="y",
                          logx=True, logy=True)
    root = ET.fromstring(text)
    assert root.tag.endswith("svg")
    assert root.get("version") == "1.1"
    assert "t &amp; u" in text


def test_line_chart_skips_non_finite():
    text = svg.line_chart([("a", [0.0, 1.0, 2.0], [1.0, np.nan, np.inf])], scatter=True)
    ET.fromstring(text)
    assert "nan" not in text and "inf" not in text


def test_line_chart_empty_series():
    ET.fromstring(svg.line_chart([("a", [], [])]))


def test_decimate_keeps_ends():
    xs = np.arange(10000.0)
    dx, dy = svg.decimate(xs, xs, max_points=100)
    assert dx.size <= 100 and dx[0] == 0.0 and dx[-1] == 9999.0


def test_finite_or():
    assert svg.finite_or(float("inf"), 1.0) == 1.0
    assert svg.finite_or(2.0, 1.0) == 2.0
