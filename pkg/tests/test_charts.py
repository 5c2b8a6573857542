import xml.etree.ElementTree as ET

import pytest

from topiccorr.charts import render_chart
from topiccorr.corpus import YearMonth
from topiccorr.correlate import CorrelationPoint, CorrelationSeries

SVG = "{http://www.w3.org/2000/svg}"


def point(month, score=0.5, method="mean", reason=None):
    return CorrelationPoint(
        pair=("north", "south"), month=YearMonth(2020, month), method=method,
        space="raw", n_topics_a=2, n_topics_b=2, score=score, reason=reason,
    )


def series(scores, method="mean"):
    points = tuple(
        point(m, score=s, method=method,
              reason=None if s is not None else "no topics: empty month")
        for m, s in enumerate(scores, start=1)
    )
    return CorrelationSeries(pair=("north", "south"), points=points)


def render(tmp_path, series_list, **kwargs):
    path = tmp_path / "chart.svg"
    render_chart(series_list, path, **kwargs)
    return path, ET.parse(path).getroot()


def tags(root, name):
    return root.findall(f"{SVG}{name}")


def test_chart_is_wellformed_svg_with_axes(tmp_path):
    _, root = render(tmp_path, [series([0.1, 0.4, 0.3])], title="monthly scores")
    assert root.tag == f"{SVG}svg"
    texts = [t.text for t in tags(root, "text")]
    assert "monthly scores" in texts
    assert "month" in texts and "score" in texts


def test_month_ticks_and_score_labels(tmp_path):
    _, root = render(tmp_path, [series([0.1, 0.4, 0.3])])
    texts = [t.text for t in tags(root, "text")]
    assert {"2020-01", "2020-02", "2020-03"} <= set(texts)
    # five y-axis labels, printed to two decimals
    score_labels = [t for t in texts if t and "." in t and t[0] in "-0123456789"]
    assert len(score_labels) == 5


def test_one_polyline_per_present_run(tmp_path):
    # an absent month splits the line into two runs
    gap = series([0.1, None, 0.3, 0.4])
    _, root = render(tmp_path, [gap])
    assert len(tags(root, "polyline")) == 2
    assert len(tags(root, "circle")) == 3  # one marker per present point


def test_multiple_series_get_legend_entries(tmp_path):
    both = [series([0.1, 0.2, 0.3]), series([0.3, 0.2, 0.1], method="max-match")]
    _, root = render(tmp_path, both)
    legend_texts = [t for t in tags(root, "text") if t.get("class") == "legend"]
    legend_lines = [l for l in tags(root, "line") if l.get("class") == "legend"]
    assert len(legend_texts) == len(legend_lines) == 2
    assert [t.text for t in legend_texts] == [
        "north|south (mean)", "north|south (max-match)",
    ]
    assert len(tags(root, "polyline")) == 2


def test_provenance_is_embedded_as_comment(tmp_path):
    path, _ = render(tmp_path, [series([0.1, 0.2])], provenance="config=abc seed=7")
    assert "<!-- config=abc seed=7 -->" in path.read_text()


def test_render_is_deterministic(tmp_path):
    a = tmp_path / "a.svg"
    b = tmp_path / "b.svg"
    render_chart([series([0.1, 0.2, 0.15])], a, title="t", provenance="p")
    render_chart([series([0.1, 0.2, 0.15])], b, title="t", provenance="p")
    assert a.read_bytes() == b.read_bytes()


def test_flat_and_all_absent_series_still_render(tmp_path):
    _, root = render(tmp_path, [series([0.5, 0.5, 0.5])])
    assert len(tags(root, "polyline")) == 1
    _, root = render(tmp_path, [series([None, None])])
    assert len(tags(root, "polyline")) == 0
    assert len(tags(root, "circle")) == 0


def test_render_rejects_bad_inputs(tmp_path):
    with pytest.raises(ValueError, match="at least one series"):
        render_chart([], tmp_path / "x.svg")
    short = CorrelationSeries(pair=("north", "south"), points=(point(1),))
    with pytest.raises(ValueError, match="same month range"):
        render_chart([series([0.1, 0.2]), short], tmp_path / "x.svg")
