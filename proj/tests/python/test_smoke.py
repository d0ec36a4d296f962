import math

import numpy as np
import pytest

import boundline as bl

WORLD = "0.05\n0\n0\n-0.05\n1000\n2000\n"


def split_image(w=64, h=48, split=32):
    img = np.zeros((h, w, 3), dtype=np.uint8)
    img[:, :split] = (200, 60, 50)
    img[:, split:] = (40, 90, 200)
    return img


def test_world_file_pixel_center():
    t = bl.parse_world_file(WORLD)
    x, y = t.pixel_to_world(0, 0)
    assert x == pytest.approx(1000.025)
    assert y == pytest.approx(1999.975)


def test_lab_white():
    L, a, b = bl.srgb_to_lab(255, 255, 255)
    assert L == pytest.approx(100.0, abs=1e-3)
    assert abs(a) < 1e-2 and abs(b) < 1e-2


def test_sinuosity_and_colors():
    s = bl.sinuosity([(0, 0), (3, 0), (3, 4)])
    assert s == pytest.approx(5 / 7)
    assert bl.classify_sinuosity(s) == "green"
    assert bl.classify_sinuosity(0.5) == "yellow"
    assert bl.classify_sinuosity(0.2) == "red"
    with pytest.raises(bl.BoundlineError):
        bl.classify_sinuosity(1.5)
    with pytest.raises(bl.BoundlineError):
        bl.sinuosity([(1, 1), (1, 1)])


def test_simplify():
    assert bl.simplify_line([(0, 0), (5, 0.01), (10, 0)], 0.1) == [(0, 0), (10, 0)]


def test_network_and_connect():
    lines = [[(0, 0), (1, 0)], [(0, 0), (-1, 0)], [(0, 0), (0, 1)], [(0, 0), (0, -1)]]
    net = bl.build_network(lines)
    assert len(net.nodes) == 5
    assert len(net.edges) == 4
    assert sorted(net.degrees()) == [1, 1, 1, 1, 4]
    assert net.total_length() == pytest.approx(4.0)
    ends = [i for i, d in enumerate(net.degrees()) if d == 1]
    cand = bl.connect_nodes(net, ends[:2])
    assert cand["color"] in ("red", "yellow", "green")
    assert cand["length_m"] == pytest.approx(2.0)
    doc = net.to_geojson()
    assert doc["type"] == "FeatureCollection"


def test_buffer_and_clean():
    kept = bl.buffer_filter([[(0, 0), (10, 0)]], [[(0, -10), (0, 10)]], 5.0)
    assert len(kept) == 1
    assert kept[0][-1][0] == pytest.approx(5.0)
    cleaned = bl.clean_topology([[(-1, 0), (1, 0)], [(0, -1), (0, 1)]])
    assert len(cleaned) == 4


def test_slic_and_contours_on_split_image():
    t = bl.parse_world_file(WORLD)
    labels, outlines = bl.slic(split_image(), t, region_size=8)
    assert labels.shape == (48, 64)
    assert labels.min() >= 0
    assert outlines
    result = bl.detect_contours(split_image(), t, spectral=False)
    prob = result["probability"]
    assert prob.shape == (48, 64)
    assert 0.0 <= prob.min() and prob.max() <= 1.0


def test_assess_identity():
    line = [(1000.025, 1990.025), (1001.025, 1990.025)]
    report = bl.assess([line], [line])
    assert report["bands"][0]["tp_percent"] == pytest.approx(100.0)
    assert report["counts"][0]["fp"] == 0


def test_errors_carry_kind():
    with pytest.raises(bl.BoundlineError, match="parameter"):
        bl.slic(split_image(), bl.parse_world_file(WORLD), region_size=200)
