"""Metrics and the unattended benchmark pipeline."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from milt.data import Bag, MilDataset, SplitSpec, generate_synthetic
from milt.evaluation import positioning_experiment, run_benchmark, score
from milt.svm import SvmConfig

from conftest import two_mode_dataset


# -- score -----------------------------------------------------------------------


def test_score_perfect_diagonal():
    m = score(np.diag([5, 5]))
    assert m == {"accuracy": 1.0, "precision": 1.0, "recall": 1.0, "f1": 1.0}


def test_score_hand_confusion():
    # oracle by hand for [[3,1],[2,4]]:
    # acc = 7/10; P0 = 3/5, P1 = 4/5 -> macro 0.7
    # R0 = 3/4, R1 = 4/6 -> macro 17/24; F1s = 2/3, 8/11 -> macro 23/33
    m = score(np.array([[3, 1], [2, 4]]))
    assert m["accuracy"] == pytest.approx(0.7)
    assert m["precision"] == pytest.approx(0.7)
    assert m["recall"] == pytest.approx((0.75 + 4 / 6) / 2)
    assert m["f1"] == pytest.approx((2 / 3 + 8 / 11) / 2)


def test_score_never_predicted_class_zero_by_convention():
    m = score(np.array([[4, 0], [2, 0]]))
    # class 1 never predicted: precision(1) = 0/0 -> 0
    assert m["precision"] == pytest.approx((4 / 6 + 0.0) / 2)


def test_score_rejects_bad_shapes():
    with pytest.raises(ValueError):
        score(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        score(np.zeros((0, 0)))
    with pytest.raises(ValueError):
        score(np.zeros((2, 2)))


@given(st.integers(0, 30), st.integers(0, 30), st.integers(0, 30), st.integers(0, 30))
def test_score_permutation_equivariance(a, b, c, d):
    M = np.array([[a + 1, b], [c, d + 1]])  # +1 keeps rows non-empty
    direct = score(M)
    swapped = score(M[::-1, ::-1])  # simultaneous row+column permutation
    assert direct["accuracy"] == pytest.approx(swapped["accuracy"])
    assert direct["precision"] == pytest.approx(swapped["precision"])
    assert direct["recall"] == pytest.approx(swapped["recall"])
    assert direct["f1"] == pytest.approx(swapped["f1"])


# -- run_benchmark -------------------------------------------------------------------


def test_benchmark_planted_si_accuracy():
    ds, _ = generate_synthetic(40, (4, 8), 10, 6.0, seed=3)
    res = run_benchmark(ds, "si", SplitSpec(0.3, seed=5), SvmConfig())
    assert res.accuracy >= 0.9
    assert res.n_train + res.n_test == 40
    assert res.matching + res.non_matching == res.n_test


def test_benchmark_planted_singleton_both_methods():
    # single-instance bags: each bag IS its planted/background draw, the one
    # planted-synthetic shape whose larger-cluster medoid is the concept
    ds, _ = generate_synthetic(60, (1, 1), 6, 6.0, seed=4)
    for method in ("si", "med"):
        res = run_benchmark(ds, method, SplitSpec(0.3, seed=6), SvmConfig())
        assert res.accuracy >= 0.9, method


def test_benchmark_med_on_majority_concept_bags():
    # medoid selection carries the class when the concept cluster dominates
    rng = np.random.default_rng(11)
    bags = []
    for i in range(30):
        n = int(rng.integers(4, 7))
        feats = 4.0 + rng.normal(0, 1.0, (n, 4))
        feats[0] = rng.normal(0, 1.0, 4)  # one background straggler
        bags.append(Bag(f"p{i}", 1, feats))
    for i in range(30):
        n = int(rng.integers(4, 7))
        bags.append(Bag(f"n{i}", 0, rng.normal(0, 1.0, (n, 4))))
    ds = MilDataset("majority", bags)
    res = run_benchmark(ds, "med", SplitSpec(0.3, seed=7), SvmConfig())
    assert res.accuracy >= 0.9


def test_benchmark_smallest_pipeline():
    # combined suggestion draws from both pools, so each class contributes at
    # least two training bags; 6 bags is the smallest dataset that still
    # leaves a test bag. A 2-bag dataset cannot and must say so.
    ds, _ = generate_synthetic(6, (2, 4), 4, 3.0, seed=8)
    res = run_benchmark(ds, "med", SplitSpec(0.3, seed=9), SvmConfig())
    assert res.n_train == 4 and res.n_test == 2
    assert res.confusion is not None
    tiny, _ = generate_synthetic(2, (2, 4), 4, 3.0, seed=8)
    with pytest.raises(ValueError, match="no test bags"):
        run_benchmark(tiny, "med", SplitSpec(0.5, seed=9), SvmConfig())


def test_benchmark_deterministic():
    ds, _ = generate_synthetic(30, (3, 6), 6, 4.0, seed=10)
    a = run_benchmark(ds, "si", SplitSpec(0.3, seed=11), SvmConfig())
    b = run_benchmark(ds, "si", SplitSpec(0.3, seed=11), SvmConfig())
    assert a.to_dict() == b.to_dict()


def test_benchmark_scaling_flag_runs():
    ds, _ = generate_synthetic(30, (3, 6), 6, 4.0, seed=12)
    res = run_benchmark(ds, "si", SplitSpec(0.3, seed=13), SvmConfig(), scale=True)
    assert res.accuracy >= 0.8


def test_auto_policy_never_decreases_training_accuracy():
    # separable synthetics; ties allowed, >= 80% of 20 seeds
    from milt.evaluation import _auto_update_round
    from milt.miltree import build_miltree, classify_positions, suggest_training
    from milt.session import Session

    good = 0
    for seed in range(1, 21):
        ds, _ = generate_synthetic(100, (4, 8), 3, 6.0, seed=seed)
        tree, _ = build_miltree(ds, "med")
        positions = classify_positions(tree)
        s = Session(ds, tree, SvmConfig())
        s.set_training(suggest_training(tree, positions, 0.3, seed))
        acc0 = s.train().metrics["accuracy"]
        _auto_update_round(s, s.classmatch_training())
        acc1 = s.train().metrics["accuracy"]
        good += acc1 >= acc0
    assert good >= 16


# -- positioning experiment ------------------------------------------------------------


def test_positioning_trend_combined_dominates():
    wins = 0
    for seed in range(1, 11):
        ds = two_mode_dataset(seed)
        res = positioning_experiment(ds, "si", SplitSpec(0.15, seed=seed), SvmConfig())
        accs = {m: r.accuracy for m, r in res.items()}
        wins += accs["combined"] >= accs["external"] and accs["combined"] >= accs["internal"]
    assert wins >= 7


def test_positioning_identical_bags_all_equal():
    feats = np.ones((3, 4))
    bags = [Bag(f"a{i}", 1, feats) for i in range(20)]
    bags += [Bag(f"b{i}", 0, feats) for i in range(20)]
    ds = MilDataset("flat", bags)
    res = positioning_experiment(ds, "med", SplitSpec(0.3, seed=1), SvmConfig())
    accs = {m: r.accuracy for m, r in res.items()}
    assert len(set(accs.values())) == 1


def test_positioning_row_sums():
    ds = two_mode_dataset(2)
    res = positioning_experiment(ds, "si", SplitSpec(0.2, seed=2), SvmConfig())
    for r in res.values():
        assert r.matching + r.non_matching == r.n_test


def test_positioning_requires_40_bags():
    ds, _ = generate_synthetic(20, (2, 4), 4, 3.0, seed=3)
    with pytest.raises(ValueError, match="40"):
        positioning_experiment(ds, "med", SplitSpec(0.3, seed=1), SvmConfig())
