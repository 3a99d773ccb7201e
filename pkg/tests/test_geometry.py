import json
import math

import numpy as np
import pytest

from tspd_bounds.geometry import (
    Instance,
    MetricPair,
    Point,
    TruckNorm,
    drone_dist,
    generate_instance,
    load_instance,
    save_instance,
    substream,
    truck_dist,
)

EUC = MetricPair(TruckNorm.EUCLIDEAN, 1.0)
REC = MetricPair(TruckNorm.RECTILINEAR, 1.0)


def test_generate_empty():
    inst = generate_instance(0, 7)
    assert inst.n == 0
    assert inst.points == ()


def test_generate_range():
    inst = generate_instance(5, 42)
    assert inst.n == 5
    for p in inst.points:
        assert 0.0 <= p.x <= 1.0 and 0.0 <= p.y <= 1.0


def test_generate_deterministic():
    a = generate_instance(5, 42)
    b = generate_instance(5, 42)
    assert a.points == b.points
    c = generate_instance(5, 43)
    assert a.points != c.points


def test_generate_negative_n():
    with pytest.raises(ValueError):
        generate_instance(-1, 0)


def test_byte_stream_pure_function_of_seed():
    # the underlying coordinate stream must not depend on anything else
    xs = [substream(99).random(8).tobytes() for _ in range(3)]
    assert xs[0] == xs[1] == xs[2]


def test_truck_dist_345():
    assert truck_dist(EUC, Point(0, 0), Point(3, 4)) == pytest.approx(5.0)
    assert truck_dist(REC, Point(0, 0), Point(3, 4)) == pytest.approx(7.0)
    p = Point(0.3, 0.8)
    assert truck_dist(EUC, p, p) == 0.0
    assert truck_dist(REC, p, p) == 0.0


def test_drone_dist():
    m = MetricPair(TruckNorm.EUCLIDEAN, 2.0)
    assert drone_dist(m, Point(0, 0), Point(3, 4)) == pytest.approx(2.5)
    assert drone_dist(EUC, Point(0, 0), Point(3, 4)) == pytest.approx(
        truck_dist(EUC, Point(0, 0), Point(3, 4)))
    assert drone_dist(m, Point(1, 1), Point(1, 1)) == 0.0


def test_metric_pair_rejects_small_alpha():
    with pytest.raises(ValueError):
        MetricPair(TruckNorm.EUCLIDEAN, 0.5)


def test_symmetry_and_triangle_inequality():
    rng = substream(1234)
    for m in (EUC, REC, MetricPair(TruckNorm.EUCLIDEAN, 2.5)):
        for _ in range(200):
            p, q, r = (Point(*xy) for xy in rng.random((3, 2)))
            assert truck_dist(m, p, q) == pytest.approx(truck_dist(m, q, p), abs=1e-12)
            assert drone_dist(m, p, q) == pytest.approx(drone_dist(m, q, p), abs=1e-12)
            assert truck_dist(m, p, r) <= truck_dist(m, p, q) + truck_dist(m, q, r) + 1e-12
            assert drone_dist(m, p, r) <= drone_dist(m, p, q) + drone_dist(m, q, r) + 1e-12


def test_drone_never_slower_than_truck_euclidean():
    rng = substream(77)
    for alpha in (1.0, 1.5, 3.0):
        m = MetricPair(TruckNorm.EUCLIDEAN, alpha)
        for _ in range(100):
            p, q = (Point(*xy) for xy in rng.random((2, 2)))
            assert drone_dist(m, p, q) <= truck_dist(m, p, q) + 1e-15


def test_instance_file_round_trip(tmp_path):
    inst = generate_instance(9, 3)
    path = tmp_path / "inst.json"
    save_instance(inst, path)
    obj = json.loads(path.read_text())
    assert obj["n"] == 9 and obj["seed"] == 3
    back = load_instance(path)
    assert back.points == inst.points
    assert back.seed == 3


def test_load_rejects_bad_counts(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"n": 3, "seed": None, "points": [[0.1, 0.2]]}))
    with pytest.raises(ValueError):
        load_instance(path)


def test_load_rejects_nonfinite(tmp_path):
    path = tmp_path / "nan.json"
    path.write_text(json.dumps({"n": 1, "seed": None, "points": [[math.nan, 0.2]]}))
    with pytest.raises(ValueError):
        load_instance(path)


def test_coords_shape():
    inst = generate_instance(4, 0)
    c = inst.coords()
    assert c.shape == (4, 2)
    assert np.all((0 <= c) & (c <= 1))
    assert Instance(points=(), seed=None).coords().shape == (0, 2)
