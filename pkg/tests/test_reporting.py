import re

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from splitq.errors import InvalidArgumentError
from splitq.harness import RewardCurve
from splitq.reporting import nice_bounds, read_csv, render_svg, svg_text, svg_y_bounds, write_csv


def curves_2x3():
    return [RewardCurve("q", np.array([0.1, 0.2, 0.3]), np.array([0.01, 0.02, 0.03])),
            RewardCurve("split", np.array([0.4, 0.5, 1 / 3]), np.array([0.0, 0.1, 0.2]),
                        epsilon_off_step=1)]


def test_row_count_and_header(tmp_path):
    path = tmp_path / "c.csv"
    write_csv(curves_2x3(), path)
    lines = path.read_bytes().split(b"\n")
    assert lines[0] == b"step,agent,mean_reward,stderr_reward"
    assert lines[-1] == b""
    assert len(lines) - 2 == 6
    assert b"\r" not in path.read_bytes()
    assert lines[6] == b"2,split,0.333333333,0.2"


def test_identical_inputs_identical_bytes(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_csv(curves_2x3(), a)
    write_csv(curves_2x3(), b)
    assert a.read_bytes() == b.read_bytes()
    render_svg(curves_2x3(), tmp_path / "a.svg")
    render_svg(curves_2x3(), tmp_path / "b.svg")
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=20))
def test_csv_round_trip_at_nine_digits(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("rt") / "c.csv"
    c = RewardCurve("a", np.array(values), np.abs(np.array(values)))
    write_csv([c], path)
    (back,) = read_csv(path)
    assert back.agent == "a"
    assert list(back.mean) == [float("%.9g" % v) for v in values]
    write_csv([back], path.with_suffix(".2"))
    assert path.read_bytes() == path.with_suffix(".2").read_bytes()


def test_read_rejects_bad_files(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("step,agent,mean\n")
    with pytest.raises(InvalidArgumentError):
        read_csv(p)
    p.write_text("step,agent,mean_reward,stderr_reward\n1,a,0.5,0\n")
    with pytest.raises(InvalidArgumentError):
        read_csv(p)


def test_svg_bounds_contain_data_range():
    c = RewardCurve("a", np.linspace(0.0, 10.0, 50), np.zeros(50))
    lo, hi = svg_y_bounds(svg_text([c]))
    assert lo <= 0.0 and hi >= 10.0


def test_svg_layout_elements():
    text = svg_text(curves_2x3())
    assert text.count("<polyline") == 2
    assert ">step</text>" in text and ">average reward</text>" in text
    assert len(re.findall(r'class="epsilon-off"', text)) == 1
    assert ">q</text>" in text and ">split</text>" in text


def test_svg_smoothing_reduces_points():
    c = RewardCurve("a", np.arange(1000, dtype=float), np.zeros(1000))
    pts = re.search(r'points="([^"]+)"', svg_text([c], window=100)).group(1)
    assert len(pts.split()) == 10


@settings(max_examples=100, deadline=None)
@given(st.floats(-1e6, 1e6), st.floats(0, 1e6))
def test_nice_bounds_contain_interval(lo, width):
    hi = lo + width
    a, b, step = nice_bounds(lo, hi)
    assert a <= lo and b >= hi and step > 0 and b > a


def test_empty_curves_rejected(tmp_path):
    with pytest.raises(InvalidArgumentError):
        write_csv([], tmp_path / "x.csv")
    with pytest.raises(InvalidArgumentError):
        svg_text([])


def test_unwritable_path(tmp_path):
    with pytest.raises(OSError):
        write_csv(curves_2x3(), tmp_path / "no" / "such" / "dir.csv")
