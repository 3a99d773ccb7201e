import itertools
import math

import numpy as np
import pytest

from tspd_bounds.geometry import (
    MetricPair,
    TruckNorm,
    derive_seed,
    generate_instance,
    instance_from_coords,
    substream,
)
from tspd_bounds.ringmodel import Ring, makespan, ring_cost, validate
from tspd_bounds.solvers import (
    _KEY_TSP,
    HeuristicConfig,
    Tour,
    partition_dp,
    scaled_makespan,
    tsp_exact,
    tsp_heuristic,
    tspd_exact,
    tspd_heuristic,
    truck_matrix,
)

EUC = MetricPair(TruckNorm.EUCLIDEAN, 2.0)
FAST = HeuristicConfig(restarts=3, patience=6, moves_per_round=24, tsp_restarts=1)


def both_metrics(alpha):
    return (MetricPair(TruckNorm.EUCLIDEAN, alpha),
            MetricPair(TruckNorm.RECTILINEAR, alpha))


def enumerate_partitions(order, inst, m):
    """Independent oracle: every closed chain over the anchored order with
    every drone choice, costed through the ring model."""
    n = inst.n
    best = math.inf
    for r in range(1, n):
        for cuts in itertools.combinations(range(1, n), r):
            bounds = (0, *cuts, n)
            total = 0.0
            for i, j in zip(bounds, bounds[1:]):
                seg_best = math.inf
                interior = [order[q] for q in range(i + 1, j)]
                choices = [None, *interior]
                for drone in choices:
                    truck = tuple(v for v in interior if v != drone)
                    ring = Ring(start=order[i], end=order[j % n],
                                truck_interior=truck, drone_node=drone)
                    seg_best = min(seg_best, ring_cost(ring, inst, m))
                total += seg_best
            best = min(best, total)
    return best


# --- TSP ---------------------------------------------------------------------

def test_tsp_exact_triangle_perimeter():
    inst = instance_from_coords([[0, 0], [1, 0], [0, 1]])
    tour = tsp_exact(inst, TruckNorm.EUCLIDEAN)
    assert tour.length == pytest.approx(2 + math.sqrt(2))
    assert sorted(tour.order) == [0, 1, 2]


def test_tsp_exact_collinear():
    inst = instance_from_coords([[0, 0], [0.2, 0], [0.9, 0]])
    tour = tsp_exact(inst, TruckNorm.EUCLIDEAN)
    assert tour.length == pytest.approx(1.8)


def test_tsp_exact_size_errors():
    with pytest.raises(ValueError):
        tsp_exact(instance_from_coords([[0, 0]]), TruckNorm.EUCLIDEAN)
    with pytest.raises(ValueError):
        tsp_exact(generate_instance(16, 0), TruckNorm.EUCLIDEAN)


def test_tsp_exact_length_is_consistent():
    inst = generate_instance(8, 123)
    for norm in TruckNorm:
        tour = tsp_exact(inst, norm)
        dist = truck_matrix(inst.coords(), norm)
        o = list(tour.order)
        recomputed = sum(dist[a, b] for a, b in zip(o, o[1:] + o[:1]))
        assert tour.length == pytest.approx(recomputed, abs=1e-9)


def test_tsp_heuristic_unit_square():
    inst = instance_from_coords([[0, 0], [1, 0], [1, 1], [0, 1]])
    tour = tsp_heuristic(inst, TruckNorm.EUCLIDEAN, seed=0, restarts=2)
    assert tour.length == pytest.approx(4.0)


def test_tsp_heuristic_near_exact_small():
    hits = 0
    for i in range(100):
        inst = generate_instance(9, 7000 + i)
        exact = tsp_exact(inst, TruckNorm.EUCLIDEAN)
        heur = tsp_heuristic(inst, TruckNorm.EUCLIDEAN, seed=i, restarts=3)
        assert heur.length >= exact.length - 1e-9
        if heur.length <= exact.length * 1.05:
            hits += 1
    assert hits >= 95


def test_tsp_exact_never_above_heuristic_n9():
    for i in range(100):
        inst = generate_instance(9, 880 + i)
        assert tsp_exact(inst, TruckNorm.EUCLIDEAN).length <= \
            tsp_heuristic(inst, TruckNorm.EUCLIDEAN, seed=i, restarts=2).length + 1e-9


def test_tsp_heuristic_deterministic():
    inst = generate_instance(60, 4)
    a = tsp_heuristic(inst, TruckNorm.RECTILINEAR, seed=9, restarts=3)
    b = tsp_heuristic(inst, TruckNorm.RECTILINEAR, seed=9, restarts=3)
    assert a == b


@pytest.mark.slow
def test_tsp_heuristic_large_rectilinear_scaled_length():
    inst = generate_instance(10_000, 3)
    tour = tsp_heuristic(inst, TruckNorm.RECTILINEAR, seed=1, restarts=1)
    scaled = tour.length / 100.0
    assert 0.90 <= scaled <= 0.95


# --- partition DP ------------------------------------------------------------

def test_partition_alpha_one_never_exceeds_tour():
    for i in range(20):
        inst = generate_instance(10, 300 + i)
        tour = tsp_heuristic(inst, TruckNorm.EUCLIDEAN, seed=i, restarts=2)
        m = MetricPair(TruckNorm.EUCLIDEAN, 1.0)
        sol = partition_dp(tour, inst, m, max_ring=6)
        assert makespan(sol, inst, m) <= tour.length + 1e-9


def test_partition_max_ring_two_is_the_tour():
    inst = generate_instance(9, 77)
    tour = tsp_heuristic(inst, TruckNorm.EUCLIDEAN, seed=0, restarts=2)
    sol = partition_dp(tour, inst, EUC, max_ring=2)
    assert all(r.is_straight() for r in sol.rings)
    assert makespan(sol, inst, EUC) == pytest.approx(tour.length, abs=1e-9)


def test_partition_collinear_hand_enumeration():
    inst = instance_from_coords([[0, 0], [0.1, 0], [0.5, 0], [1, 0]])
    tour = Tour(order=(0, 1, 2, 3), length=2.0)
    sol = partition_dp(tour, inst, EUC, max_ring=4)
    got = makespan(sol, inst, EUC)
    want = enumerate_partitions((0, 1, 2, 3), inst, EUC)
    assert got == pytest.approx(want, abs=1e-12)
    assert validate(sol, inst) == []


def test_partition_matches_enumeration_many_orders():
    rng = substream(404)
    for trial in range(30):
        n = int(rng.integers(4, 9))
        inst = generate_instance(n, 9900 + trial)
        order = tuple(int(v) for v in rng.permutation(n))
        alpha = float(rng.choice([1.0, 2.0, 3.0]))
        for m in both_metrics(alpha):
            sol = partition_dp(Tour(order=order, length=0.0), inst, m, max_ring=n)
            assert makespan(sol, inst, m) == pytest.approx(
                enumerate_partitions(order, inst, m), abs=1e-9)


def test_partition_rejects_bad_input():
    inst = generate_instance(5, 1)
    with pytest.raises(ValueError):
        partition_dp(Tour(order=(0, 1, 2), length=0.0), inst, EUC)
    with pytest.raises(ValueError):
        partition_dp(Tour(order=(0, 1, 2, 3, 4), length=0.0), inst, EUC, max_ring=1)


# --- exact TSPD --------------------------------------------------------------

def test_tspd_exact_two_points():
    inst = instance_from_coords([[0.1, 0.1], [0.7, 0.9]])
    rep = tspd_exact(inst, EUC)
    d = math.hypot(0.6, 0.8)
    assert rep.makespan == pytest.approx(2 * d)
    assert len(rep.solution.rings) == 2
    assert all(r.is_straight() for r in rep.solution.rings)


def test_tspd_exact_collinear_fast_drone():
    # with a very fast drone the truck shuttles across one short gap and the
    # drone serves the far nodes: two rings over the closest pair
    inst = instance_from_coords([[0, 0], [1 / 3, 0], [2 / 3, 0], [1, 0]])
    m = MetricPair(TruckNorm.EUCLIDEAN, 1000.0)
    rep = tspd_exact(inst, m)
    assert rep.makespan == pytest.approx(2 / 3, abs=1e-9)


def test_tspd_exact_size_errors():
    with pytest.raises(ValueError):
        tspd_exact(instance_from_coords([[0, 0]]), EUC)
    with pytest.raises(ValueError):
        tspd_exact(generate_instance(9, 0), EUC)
    with pytest.raises(ValueError):
        tspd_exact(generate_instance(3, 0), EUC, no_straight=True)


def test_tspd_exact_matches_permutation_bruteforce():
    rng = substream(606)
    for trial in range(10):
        n = int(rng.integers(4, 7))
        inst = generate_instance(n, 5150 + trial)
        m = both_metrics(float(rng.choice([1.0, 2.0])))[trial % 2]
        best = math.inf
        for perm in itertools.permutations(range(n)):
            sol = partition_dp(Tour(order=perm, length=0.0), inst, m, max_ring=n)
            best = min(best, makespan(sol, inst, m))
        assert tspd_exact(inst, m).makespan == pytest.approx(best, abs=1e-9)


def test_tspd_exact_report_invariants():
    inst = generate_instance(7, 42)
    rep = tspd_exact(inst, EUC)
    assert rep.method == "exact"
    assert rep.seed is None
    assert validate(rep.solution, inst) == []
    assert rep.makespan == pytest.approx(makespan(rep.solution, inst, EUC), abs=1e-9)


def test_tspd_exact_sandwich_small():
    rng = substream(707)
    for trial in range(30):
        n = int(rng.integers(4, 9))
        inst = generate_instance(n, 6000 + trial)
        alpha = float(rng.choice([1.0, 2.0, 3.0]))
        for m in both_metrics(alpha):
            tsp = tsp_exact(inst, m.truck_norm).length
            tspd = tspd_exact(inst, m).makespan
            assert tsp / (1 + m.alpha) - 1e-9 <= tspd <= tsp + 1e-9


# --- heuristic TSPD ----------------------------------------------------------

def test_tspd_heuristic_never_beats_exact_and_matches_often():
    cfg = HeuristicConfig(restarts=20, patience=6, moves_per_round=24, tsp_restarts=1)
    matches = 0
    for trial in range(30):
        n = 4 + trial % 5
        inst = generate_instance(n, 3500 + trial)
        m = both_metrics(1.0 + trial % 3)[trial % 2]
        ex = tspd_exact(inst, m).makespan
        he = tspd_heuristic(inst, m, seed=trial, config=cfg).makespan
        assert he >= ex - 1e-9
        if abs(he - ex) < 1e-9:
            matches += 1
    assert matches >= 27


def test_tspd_heuristic_deterministic_and_valid():
    inst = generate_instance(40, 11)
    a = tspd_heuristic(inst, EUC, seed=5, config=FAST)
    b = tspd_heuristic(inst, EUC, seed=5, config=FAST)
    assert a.solution == b.solution and a.makespan == b.makespan
    assert a.method == "heuristic" and a.seed == 5
    assert validate(a.solution, inst) == []
    assert a.makespan == pytest.approx(makespan(a.solution, inst, EUC), abs=1e-9)


def test_tspd_heuristic_improves_on_plain_partition():
    # the improvement loop may only decrease the initial tour partition value
    inst = generate_instance(50, 21)
    rep = tspd_heuristic(inst, EUC, seed=3, config=FAST)
    tour = tsp_heuristic(inst, TruckNorm.EUCLIDEAN, derive_seed(3, _KEY_TSP, 0),
                         restarts=FAST.tsp_restarts)
    start = makespan(partition_dp(tour, inst, EUC, FAST.max_ring), inst, EUC)
    assert rep.makespan <= start + 1e-9


def test_tspd_heuristic_alpha_monotone():
    cfg = HeuristicConfig(restarts=3, patience=10)
    for i in range(8):
        inst = generate_instance(60, 88000 + i)
        vals = [tspd_heuristic(inst, MetricPair(TruckNorm.EUCLIDEAN, a),
                               seed=i, config=cfg).makespan
                for a in (1.0, 2.0, 3.0)]
        assert vals[0] >= vals[1] - 1e-9
        assert vals[1] >= vals[2] - 1e-9


def test_tspd_heuristic_rejects_tiny():
    with pytest.raises(ValueError):
        tspd_heuristic(instance_from_coords([[0, 0]]), EUC, seed=0)


# --- scaled makespan and functional axioms on solver output -------------------

def test_scaled_makespan_value():
    rep = tspd_exact(generate_instance(5, 8), EUC)
    assert scaled_makespan(rep, 100) == pytest.approx(rep.makespan / 10.0)
    with pytest.raises(ValueError):
        scaled_makespan(rep, 0)


def test_homogeneity_on_solver_output():
    inst = generate_instance(6, 905)
    lam = 0.5
    scaled = instance_from_coords([[p.x * lam, p.y * lam] for p in inst.points])
    for m in both_metrics(2.0):
        assert tspd_exact(scaled, m).makespan == pytest.approx(
            lam * tspd_exact(inst, m).makespan, abs=1e-9)


def test_translation_invariance_on_solver_output():
    inst = generate_instance(6, 906)
    lam = 0.4
    small = instance_from_coords([[p.x * lam, p.y * lam] for p in inst.points])
    shifted = instance_from_coords([[p.x * lam + 0.3, p.y * lam + 0.5] for p in inst.points])
    for m in both_metrics(2.0):
        assert tspd_exact(shifted, m).makespan == pytest.approx(
            tspd_exact(small, m).makespan, abs=1e-9)
