import re

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from tlbscope.experiments import SweepCurve
from tlbscope.formats import (in_label_order, matrix_csv, read_matrix_csv, read_solo_csv,
                              read_sweep_csv, solo_csv, sweep_csv)
from tlbscope.render import gray_levels, heatmap_svg
from tlbscope.units import GB, GiB


def test_sweep_csv():
    text = sweep_csv(SweepCurve(((40 * GiB, 1620 * GB), (80 * GiB, 700 * GB)), "global"))
    assert text == "size_bytes,total_gbps\n42949672960,1620.000000\n85899345920,700.000000\n"
    assert read_sweep_csv(text) == [(40 * GiB, 1620.0), (80 * GiB, 700.0)]


def test_matrix_csv_layout():
    text = matrix_csv([[1, 2.5], [2.5, 1]])
    assert text == "sm,0,1\n0,1.000000,2.500000\n1,2.500000,1.000000\n"


square = st.integers(1, 6).flatmap(
    lambda n: arrays(np.float64, (n, n), elements=st.floats(0, 1e4, allow_nan=False)))


@given(square)
def test_matrix_round_trip(m):
    once = read_matrix_csv(matrix_csv(m))[1]
    labels, twice = read_matrix_csv(matrix_csv(once))
    assert np.array_equal(once, twice)
    assert labels == list(range(len(m)))
    assert matrix_csv(once) == matrix_csv(twice)
    assert np.allclose(once, m, atol=5e-7)


def test_matrix_labels_reordered():
    text = matrix_csv([[1, 2], [2, 3]], labels=[1, 0])
    labels, values = read_matrix_csv(text)
    assert labels == [1, 0]
    assert np.array_equal(in_label_order(labels, values), [[3, 2], [2, 1]])


@pytest.mark.parametrize("text", [
    "", "x,0\n0,1\n", "sm,0,1\n0,1,2\n", "sm,0\n0,abc\n", "sm,0,1\n0,1,2\n5,1,2\n",
])
def test_matrix_malformed(text):
    with pytest.raises(ValueError):
        read_matrix_csv(text)


def test_solo_round_trip():
    text = solo_csv([70.0, 70.5])
    assert text == "sm,gbps\n0,70.000000\n1,70.500000\n"
    assert read_solo_csv(text).tolist() == [70.0, 70.5]
    with pytest.raises(ValueError):
        read_solo_csv("sm,gbps\n1,3\n")


def test_gray_levels():
    assert gray_levels([[1, 2], [3, 4]]).tolist() == [[0, 85], [170, 255]]
    assert gray_levels(np.full((3, 3), 7.0)).tolist() == [[128] * 3] * 3


def _cell_fills(svg):
    return re.findall(r'<rect class="cell"[^>]*fill="rgb\((\d+),', svg)


def test_constant_matrix_mid_gray():
    svg = heatmap_svg(np.full((4, 4), 5.0))
    assert _cell_fills(svg) == ["128"] * 16


def test_one_rect_per_cell_and_legend():
    svg = heatmap_svg(np.arange(12.0).reshape(3, 4))
    assert len(_cell_fills(svg)) == 12
    assert "0.000000" in svg and "11.000000" in svg


def test_probe_heatmap_ordering(a100_probe):
    svg = heatmap_svg(a100_probe.pairs / GB)
    fills = np.array(_cell_fills(svg), dtype=int).reshape(108, 108)
    assert fills[0, 1] < fills[0, 2] < fills[0, 8]


def test_heatmap_rejects_empty():
    with pytest.raises(ValueError):
        heatmap_svg(np.zeros((0, 0)))


def test_heatmap_deterministic():
    m = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert heatmap_svg(m) == heatmap_svg(m.copy())
