"""Prototype selection: salience math, salient-instance sets, two-medoid pairs."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from milt.data import Bag, MilDataset, generate_synthetic
from milt.selection import (
    SelectionConfig,
    milsis_select,
    min_dist_to_set,
    positive_probability,
    prototype_dump_csv,
    salience,
    select_med,
    select_pairs,
    select_si,
)


def bag_of(values, label=1, bag_id="b"):
    feats = np.asarray(values, dtype=float)
    if feats.ndim == 1:
        feats = feats[:, None]
    return Bag(bag_id, label, feats)


# -- salience -----------------------------------------------------------------


def test_salience_two_instance_symmetry():
    b = bag_of([[0.0, 0.0], [0.0, 4.0]])
    assert salience(b, 0) == 4.0
    assert salience(b, 1) == 4.0


def test_salience_collinear_oracle():
    # brute force: {0,1,3} -> 0:1+3=4, 1:1+2=3, 3:3+2=5
    b = bag_of([0.0, 1.0, 3.0])
    assert [salience(b, j) for j in range(3)] == [4.0, 3.0, 5.0]


def test_salience_singleton_zero():
    assert salience(bag_of([2.5]), 0) == 0.0


def test_salience_index_error():
    with pytest.raises(IndexError):
        salience(bag_of([0.0, 1.0]), 2)


def test_salience_brute_force_random():
    rng = np.random.default_rng(4)
    for _ in range(50):
        n, d = int(rng.integers(2, 9)), int(rng.integers(1, 6))
        X = rng.normal(size=(n, d))
        b = bag_of(X)
        j = int(rng.integers(n))
        oracle = sum(math.dist(X[j], X[k]) for k in range(n) if k != j)
        assert salience(b, j) == pytest.approx(oracle, abs=1e-12)


def test_salience_invariant_under_reordering():
    rng = np.random.default_rng(8)
    X = rng.normal(size=(6, 3))
    perm = rng.permutation(6)
    a, b = bag_of(X), bag_of(X[perm])
    for j in range(6):
        assert salience(a, perm[j]) == pytest.approx(salience(b, j), rel=1e-12)


# -- min_dist_to_set -------------------------------------------------------------


def test_min_dist_nearest_of_two():
    assert min_dist_to_set(np.zeros(2), np.array([[3, 4], [6, 8]])) == 5.0


def test_min_dist_membership_zero():
    S = np.array([[1.0, 1.0], [2.0, 2.0]])
    assert min_dist_to_set(np.array([2.0, 2.0]), S) == 0.0


def test_min_dist_linear_scan_oracle():
    rng = np.random.default_rng(9)
    for _ in range(50):
        S = rng.normal(size=(20, 4))
        x = rng.normal(size=4)
        oracle = min(math.dist(x, s) for s in S)
        assert min_dist_to_set(x, S) == pytest.approx(oracle, abs=1e-12)


def test_min_dist_empty_set():
    with pytest.raises(ValueError):
        min_dist_to_set(np.zeros(2), np.empty((0, 2)))


# -- positive_probability ----------------------------------------------------------


def test_probability_endpoints():
    assert positive_probability(0.0, 1.0) == 0.0
    assert positive_probability(1.0, 1.0) == pytest.approx(1 - math.exp(-1), abs=1e-15)
    assert positive_probability(1e6, 0.5) == pytest.approx(1.0)


@given(
    d1=st.floats(0, 30),
    d2=st.floats(0, 30),
    sigma=st.floats(1.0, 10.0),
)
def test_probability_monotone_and_bounded(d1, d2, sigma):
    # domain kept below exp underflow so the strict < 1 bound is observable
    p1, p2 = positive_probability(d1, sigma), positive_probability(d2, sigma)
    assert 0.0 <= p1 < 1.0
    if d1 < d2:
        assert p1 <= p2


def test_probability_argmax_agrees_with_distance():
    # monotonicity means ranking by probability == ranking by raw distance
    rng = np.random.default_rng(3)
    dists = rng.uniform(0, 10, size=12)
    probs = [positive_probability(d, 2.0) for d in dists]
    assert int(np.argmax(probs)) == int(np.argmax(dists))


# -- milsis_select ----------------------------------------------------------------


def test_milsis_planted_recovery():
    ds, manifest = generate_synthetic(40, (4, 8), 10, 6.0, seed=2)
    T = milsis_select(ds, 1, SelectionConfig(sal_num=2))
    positives = [b for b in ds.bags if b.label == 1]
    hits = sum((b.bag_id, manifest[b.bag_id]) in T for b in positives)
    assert hits >= 0.95 * len(positives)


def test_milsis_single_instance_forced():
    ds = MilDataset(
        "t",
        [bag_of([[5.0, 5.0]], 1, "pos"), bag_of([[0.0, 0.0], [0.1, 0.1]], 0, "neg")],
    )
    T = milsis_select(ds, 1, SelectionConfig(sal_num=1))
    assert T == {("pos", 0)}


def test_milsis_duplicated_bags_double_t():
    ds, _ = generate_synthetic(20, (3, 5), 6, 4.0, seed=5)
    dup_bags = list(ds.bags) + [
        Bag(b.bag_id + "_dup", b.label, b.features) for b in ds.bags if b.label == 1
    ]
    dup = MilDataset("dup", dup_bags)
    cfg = SelectionConfig(sal_num=2)
    T1 = milsis_select(ds, 1, cfg)
    T2 = milsis_select(dup, 1, cfg)
    assert len(T2) == 2 * len(T1)
    base = {(bid, j) for bid, j in T1}
    assert {(bid.replace("_dup", ""), j) for bid, j in T2} == base


def test_milsis_validates_sides_and_salnum():
    only_pos = MilDataset("p", [bag_of([[1.0]], 1, "a"), bag_of([[2.0]], 1, "b")])
    with pytest.raises(ValueError, match="each side"):
        milsis_select(only_pos, 1)
    ds = MilDataset("s", [bag_of([[1.0]], 1, "a"), bag_of([[0.0]], 0, "b")])
    with pytest.raises(ValueError, match="sal_num"):
        milsis_select(ds, 1, SelectionConfig(sal_num=2))


# -- select_si ---------------------------------------------------------------------


def test_select_si_singletons_forced():
    ds = MilDataset(
        "s",
        [
            bag_of([[4.0, 4.0]], 1, "p0"),
            bag_of([[5.0, 5.0]], 1, "p1"),
            bag_of([[0.0, 0.0]], 0, "n0"),
        ],
    )
    pairs = select_si(ds, 1, SelectionConfig(sal_num=1))
    for p in pairs.values():
        assert p.primary == 0 and p.alternate == 0


def test_select_si_planted_primary():
    ds, manifest = generate_synthetic(40, (4, 8), 10, 6.0, seed=17)
    pairs = select_si(ds, 1)
    positives = [b for b in ds.bags if b.label == 1]
    hits = sum(pairs[b.bag_id].primary == manifest[b.bag_id] for b in positives)
    assert hits >= 0.90 * len(positives)


def test_select_si_symmetric_under_label_swap():
    # mirror-symmetric two-cluster dataset: swapping labels swaps roles but
    # must select the same instances per bag
    offsets = [(0.0, 0.0), (0.3, -0.2), (-0.25, 0.4), (0.1, 0.15)]
    bags = []
    for i in range(4):
        plus = np.array([[5.0 + dx, 5.0 + dy] for dx, dy in offsets]) + i * 0.01
        minus = -plus
        bags.append(Bag(f"p{i}", 1, plus))
        bags.append(Bag(f"n{i}", 0, minus))
    ds = MilDataset("sym", bags)
    swapped = MilDataset(
        "sym2", [Bag(b.bag_id, 1 - b.label, b.features) for b in ds.bags]
    )
    a = select_si(ds, 1, SelectionConfig(sal_num=2))
    b = select_si(swapped, 1, SelectionConfig(sal_num=2))
    for bid in a:
        assert (a[bid].primary, a[bid].alternate) == (b[bid].primary, b[bid].alternate)


# -- select_med ----------------------------------------------------------------------


def exhaustive_medoid_pair(features, tie_tol=1e-12):
    """Oracle: best (a, b) by total within-cluster distance, lexicographic ties.

    Also returns every pair whose cost ties the optimum within ``tie_tol``;
    when several pairs tie at that precision, float-path differences make the
    winning indices implementation-defined, so index checks should skip.
    """
    X = np.asarray(features, dtype=float)
    n = len(X)
    D = np.array([[math.dist(X[i], X[j]) for j in range(n)] for i in range(n)])
    costs = {}
    best, best_cost = None, math.inf
    for a in range(n):
        for b in range(a + 1, n):
            cost = sum(min(D[t, a], D[t, b]) for t in range(n))
            costs[(a, b)] = cost
            if cost < best_cost:
                best, best_cost = (a, b), cost
    co_optimal = {p for p, c in costs.items() if c <= best_cost + tie_tol}
    return best, best_cost, D, co_optimal


def test_med_two_cluster_example():
    b = bag_of([0.0, 0.1, 10.0, 10.1, 10.2])
    pair = select_med(b)
    assert pair.primary == 3  # 10.1 medoid of the larger cluster
    assert pair.alternate in (0, 1)


def test_med_singleton():
    p = select_med(bag_of([7.0]))
    assert (p.primary, p.alternate) == (0, 0)


def test_med_all_identical_tie():
    p = select_med(bag_of([2.0, 2.0, 2.0, 2.0]))
    assert (p.primary, p.alternate) == (0, 1)


def test_med_matches_exhaustive_oracle_small_bags():
    rng = np.random.default_rng(11)
    for _ in range(60):
        n, d = int(rng.integers(2, 13)), int(rng.integers(1, 5))
        X = rng.normal(size=(n, d))
        pair = select_med(bag_of(X))
        (a, b), cost, D, co_optimal = exhaustive_medoid_pair(X)
        got = tuple(sorted((pair.primary, pair.alternate)))
        if len(co_optimal) == 1:
            assert got == (a, b)
        else:
            assert got in co_optimal  # sub-tolerance ties: any co-optimum is valid
        achieved = sum(min(D[t, pair.primary], D[t, pair.alternate]) for t in range(n))
        assert achieved == pytest.approx(cost, abs=1e-12)


def test_med_alternating_reasonable_large_bags():
    rng = np.random.default_rng(13)
    # two clear 1-D clusters, 20 points: alternation must find the split
    X = np.concatenate([rng.normal(0, 0.3, 12), rng.normal(9, 0.3, 8)])
    pair = select_med(bag_of(X))
    assert (X[pair.primary] < 3) != (X[pair.alternate] < 3)
    assert X[pair.primary] < 3  # larger cluster is the low one


def test_scale_invariance_of_selection():
    ds, _ = generate_synthetic(20, (3, 6), 5, 4.0, seed=19)
    scaled = MilDataset(
        "scaled", [Bag(b.bag_id, b.label, b.features * 3.5) for b in ds.bags]
    )
    for method in ("si", "med"):
        a = select_pairs(ds, method)
        b = select_pairs(scaled, method)
        for bid in a:
            assert (a[bid].primary, a[bid].alternate) == (b[bid].primary, b[bid].alternate)


def test_select_pairs_multiclass_uses_own_class_run():
    from milt.data import generate_multiclass

    ds, manifest = generate_multiclass(3, 8, (4, 6), 6, 4.0, seed=3)
    pairs = select_pairs(ds, "si")
    assert set(pairs) == set(ds.bag_ids())
    hits = sum(pairs[b.bag_id].primary in manifest[b.bag_id] for b in ds.bags)
    assert hits >= 0.8 * len(ds.bags)


def test_prototype_dump_format():
    ds, _ = generate_synthetic(4, (2, 3), 3, 2.0, seed=1)
    pairs = select_pairs(ds, "med")
    out = prototype_dump_csv(pairs, ds.bag_ids())
    lines = out.strip().split("\n")
    assert lines[0] == "bag_id,method,b_ix,b_iy"
    assert len(lines) == 5
    assert lines[1].startswith("bag000,med,")
