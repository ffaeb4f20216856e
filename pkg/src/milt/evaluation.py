"""Scoring primitives and the unattended benchmark pipeline.

The benchmark mirrors the interactive loop without a human: build the tree,
suggest a training set from the external/internal pools, train, apply one
automatic update round (swap to alternates for the medoid method, add
alternate rows for the salience method), retrain, and score the held-out
bags. Macro-averaged precision/recall/F1 in all reports.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import MilDataset, SplitSpec
from .selection import SelectionConfig
from .svm import SvmConfig

__all__ = ["score", "EvalResult", "run_benchmark", "positioning_experiment", "minmax_transform"]


def score(confusion: np.ndarray) -> dict[str, float]:
    """Accuracy and macro precision/recall/F1 from a (true x predicted) matrix.

    Per-class ratios use the 0/0 -> 0 convention; per-class F1 is the harmonic
    mean of that class's precision and recall, then averaged.
    """
    M = np.asarray(confusion, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.size == 0:
        raise ValueError("confusion matrix must be square and non-empty")
    total = M.sum()
    if total == 0:
        raise ValueError("confusion matrix is empty")
    diag = np.diag(M)
    col = M.sum(axis=0)
    row = M.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(col > 0, diag / np.where(col > 0, col, 1), 0.0)
        recall = np.where(row > 0, diag / np.where(row > 0, row, 1), 0.0)
        denom = precision + recall
        f1 = np.where(denom > 0, 2 * precision * recall / np.where(denom > 0, denom, 1), 0.0)
    return {
        "accuracy": float(diag.sum() / total),
        "precision": float(precision.mean()),
        "recall": float(recall.mean()),
        "f1": float(f1.mean()),
    }


def minmax_transform(ds: MilDataset, bag_ids) -> "callable":
    """Per-feature min-max scaler fitted on the given bags' instances."""
    pool = np.vstack([ds.bag(bid).features for bid in sorted(bag_ids)])
    lo = pool.min(axis=0)
    span = pool.max(axis=0) - lo
    span[span == 0] = 1.0  # constant features pass through at 0

    def transform(x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - lo) / span

    return transform


@dataclass
class EvalResult:
    dataset: str
    method: str
    split: dict
    mode: str
    accuracy: float
    precision: float
    recall: float
    f1: float
    confusion: list[list[int]]
    n_train: int
    n_test: int
    matching: int
    non_matching: int
    actions: dict[str, int]

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _auto_update_round(session, report) -> dict[str, int]:
    """Case-study policy: retarget or reinforce misclassified training bags."""
    wrong = report.misclassified
    counts = {"swapped": 0, "added": 0}
    if session.miltree.method == "med":
        targets = [
            bid for bid in wrong
            if session.miltree.pairs[bid].alternate != session.slots[bid].classifier
        ]
        if targets:
            session.swap_to_alternative(targets)
            counts["swapped"] = len(targets)
    else:
        for bid in wrong:
            pair = session.miltree.pairs[bid]
            slot = session.slots[bid]
            if pair.alternate == slot.classifier or pair.alternate in slot.extras:
                continue
            session.add_prototype(bid, pair.alternate)
            counts["added"] += 1
    return counts


def run_benchmark(
    ds: MilDataset,
    method: str,
    split: SplitSpec,
    svm_cfg: SvmConfig | None = None,
    sel_cfg: SelectionConfig | None = None,
    rounds: int = 1,
    scale: bool = False,
    mode: str = "combined",
) -> EvalResult:
    """End-to-end unattended run; scores test bags only."""
    from .miltree import build_miltree, classify_positions, suggest_training
    from .session import Session

    svm_cfg = svm_cfg or SvmConfig()
    tree, _ = build_miltree(ds, method, sel_cfg)
    positions = classify_positions(tree)
    train_ids = suggest_training(tree, positions, split.train_fraction, split.seed, mode=mode)
    test_ids = [bid for bid in ds.bag_ids() if bid not in train_ids]

    transform = minmax_transform(ds, train_ids) if scale else None
    session = Session(ds, tree, svm_cfg, feature_transform=transform)
    session.set_training(train_ids)
    report = session.train()
    actions = {"swapped": 0, "added": 0, "rounds": rounds}
    for _ in range(rounds):
        counts = _auto_update_round(session, report)
        actions["swapped"] += counts["swapped"]
        actions["added"] += counts["added"]
        report = session.train()

    # test-only scoring: each held-out bag is its classifier-prototype row
    if not test_ids:
        raise ValueError(
            "no test bags left after training suggestion; dataset too small for this fraction"
        )
    k = ds.n_classes
    confusion = np.zeros((k, k), dtype=int)
    X = np.vstack(
        [session._row(bid, session.slots[bid].classifier) for bid in test_ids]
    )
    predicted = session.model.predict(X)
    for bid, pred in zip(test_ids, predicted):
        confusion[ds.bag(bid).label, int(pred)] += 1
    metrics = score(confusion)
    matching = int(np.trace(confusion))
    return EvalResult(
        dataset=ds.name,
        method=tree.method,
        split={"train_fraction": split.train_fraction, "seed": split.seed,
               "stratified": split.stratified},
        mode=mode,
        accuracy=metrics["accuracy"],
        precision=metrics["precision"],
        recall=metrics["recall"],
        f1=metrics["f1"],
        confusion=[[int(v) for v in row] for row in confusion],
        n_train=len(train_ids),
        n_test=len(test_ids),
        matching=matching,
        non_matching=len(test_ids) - matching,
        actions=actions,
    )


def positioning_experiment(
    ds: MilDataset,
    method: str,
    split: SplitSpec,
    svm_cfg: SvmConfig | None = None,
    sel_cfg: SelectionConfig | None = None,
    rounds: int = 1,
    scale: bool = False,
) -> dict[str, EvalResult]:
    """Three runs differing only in the training-pool mode."""
    if len(ds.bags) < 40:
        raise ValueError("positioning experiment needs at least 40 bags")
    return {
        mode: run_benchmark(ds, method, split, svm_cfg, sel_cfg, rounds, scale, mode=mode)
        for mode in ("external", "internal", "combined")
    }
