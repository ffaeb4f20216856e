"""Interactive workbench state: training membership, model, updates, replay.

A session owns mutable state layered over an immutable dataset + tree:
which bags train the model, which instance represents each bag in the
classifier, extra prototype rows, and a linear history of update actions.
The projection prototype is never touched, so the bag-space layout is stable
across any action sequence. The model is invalidated by every update and
must be retrained explicitly.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import MilDataset
from .evaluation import score
from .miltree import BagSlots, MilTree, build_miltree, initial_slots
from .svm import MulticlassModel, SvmConfig, train_multiclass
from .selection import SelectionConfig

__all__ = ["Session", "ClassMatchReport", "UpdateAction", "ErrorBranch"]


@dataclass(frozen=True)
class UpdateAction:
    kind: str  # swap_to_alternative | set_prototype | add_prototype | add_bags
    bags: tuple[str, ...]
    instance_index: int | None = None
    timestamp: float = 0.0

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "bags": list(self.bags),
            "instance_index": self.instance_index,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "UpdateAction":
        return cls(
            kind=d["kind"],
            bags=tuple(d["bags"]),
            instance_index=d.get("instance_index"),
            timestamp=d.get("timestamp", 0.0),
        )


@dataclass
class ClassMatchReport:
    scope: str  # "training" | "all"
    statuses: dict[str, str]  # bag_id -> "correct" | "misclassified"
    confusion: np.ndarray
    metrics: dict[str, float]

    @property
    def misclassified(self) -> list[str]:
        return [bid for bid, s in self.statuses.items() if s == "misclassified"]

    def to_dict(self) -> dict:
        return {
            "scope": self.scope,
            "statuses": self.statuses,
            "confusion": [[int(v) for v in row] for row in self.confusion],
            "metrics": {k: float(v) for k, v in self.metrics.items()},
        }


@dataclass(frozen=True)
class ErrorBranch:
    node_id: int
    error_rate: float
    n_leaves: int
    bag_ids: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "node_id": self.node_id,
            "error_rate": self.error_rate,
            "n_leaves": self.n_leaves,
            "bag_ids": list(self.bag_ids),
        }


class Session:
    """Single-writer workbench session over one dataset."""

    def __init__(
        self,
        dataset: MilDataset,
        miltree: MilTree,
        svm_cfg: SvmConfig | None = None,
        feature_transform=None,
    ):
        self.dataset = dataset
        self.miltree = miltree
        self.svm_cfg = svm_cfg or SvmConfig()
        self.slots: dict[str, BagSlots] = initial_slots(miltree.pairs)
        self.initial_training: list[str] = []
        self.model: MulticlassModel | None = None
        self.history: list[UpdateAction] = []
        self.feature_transform = feature_transform  # optional row-scaling hook

    # -- membership ----------------------------------------------------------

    @property
    def training(self) -> set[str]:
        extra = [a for a in self.history if a.kind == "add_bags"]
        out = set(self.initial_training)
        for a in extra:
            out.update(a.bags)
        return out

    def set_training(self, bag_ids) -> None:
        """Reset the training membership (clears history and slots)."""
        ids = list(bag_ids)
        for bid in ids:
            self.dataset.bag(bid)
        self.initial_training = sorted(set(ids))
        self.history.clear()
        self.slots = initial_slots(self.miltree.pairs)
        self.model = None

    # -- rows ------------------------------------------------------------

    def _row(self, bag_id: str, index: int) -> np.ndarray:
        feats = self.dataset.bag(bag_id).features[index]
        if self.feature_transform is not None:
            feats = self.feature_transform(feats)
        return np.asarray(feats, dtype=float)

    def _training_matrix(self) -> tuple[np.ndarray, np.ndarray]:
        members = self.training
        rows, labels = [], []
        for bag in self.dataset.bags:  # dataset order keeps retraining deterministic
            if bag.bag_id not in members:
                continue
            slot = self.slots[bag.bag_id]
            rows.append(self._row(bag.bag_id, slot.classifier))
            labels.append(bag.label)
            for idx in slot.extras:
                rows.append(self._row(bag.bag_id, idx))
                labels.append(bag.label)
        return np.vstack(rows), np.asarray(labels, dtype=int)

    # -- training and reports ---------------------------------------------

    def train(self) -> ClassMatchReport:
        """Fit the one-vs-all model and report the training-scope class match."""
        members = self.training
        if not members:
            raise ValueError("training set is empty")
        labels_present = {self.dataset.bag(b).label for b in members}
        if len(labels_present) < 2:
            raise ValueError("training set covers a single class")
        X, y = self._training_matrix()
        self.model = train_multiclass(X, y, self.svm_cfg)
        return self._classmatch(scope="training")

    def _classmatch(self, scope: str) -> ClassMatchReport:
        if self.model is None:
            raise ValueError("no trained model; call train() first")
        if scope == "training":
            bags = [b for b in self.dataset.bags if b.bag_id in self.training]
        elif scope == "all":
            bags = self.dataset.bags
        else:
            raise ValueError(f"unknown scope {scope!r}")
        k = self.dataset.n_classes
        confusion = np.zeros((k, k), dtype=int)
        statuses: dict[str, str] = {}
        X = np.vstack([self._row(b.bag_id, self.slots[b.bag_id].classifier) for b in bags])
        predicted = self.model.predict(X)
        for bag, pred in zip(bags, predicted):
            confusion[bag.label, int(pred)] += 1
            statuses[bag.bag_id] = "correct" if int(pred) == bag.label else "misclassified"
        return ClassMatchReport(scope, statuses, confusion, score(confusion))

    def classmatch_training(self) -> ClassMatchReport:
        return self._classmatch("training")

    def classmatch_all(self) -> ClassMatchReport:
        return self._classmatch("all")

    # -- update actions ------------------------------------------------------

    def _log(self, kind: str, bags, instance_index: int | None = None) -> None:
        self.history.append(
            UpdateAction(kind, tuple(bags), instance_index, timestamp=time.time())
        )
        self.model = None  # explicit retrain required after every update

    def swap_to_alternative(self, bag_ids) -> None:
        """Point each bag's classifier prototype at its alternate candidate."""
        ids = list(bag_ids)
        for bid in ids:
            self.dataset.bag(bid)
        for bid in ids:
            self.slots[bid].classifier = self.miltree.pairs[bid].alternate
        self._log("swap_to_alternative", ids)

    def set_prototype(self, bag_id: str, index: int) -> None:
        bag = self.dataset.bag(bag_id)
        if not 0 <= index < bag.n_instances:
            raise IndexError(f"instance index {index} out of range for bag {bag_id!r}")
        self.slots[bag_id].classifier = index
        self._log("set_prototype", [bag_id], index)

    def add_prototype(self, bag_id: str, index: int | None = None) -> None:
        """Add an extra training row (defaults to the alternate candidate)."""
        bag = self.dataset.bag(bag_id)
        if bag_id not in self.training:
            raise ValueError(f"bag {bag_id!r} is not in the training set")
        if index is None:
            index = self.miltree.pairs[bag_id].alternate
        if not 0 <= index < bag.n_instances:
            raise IndexError(f"instance index {index} out of range for bag {bag_id!r}")
        slot = self.slots[bag_id]
        if index == slot.classifier or index in slot.extras:
            raise ValueError(f"instance {index} of bag {bag_id!r} already contributes a row")
        slot.extras.append(index)
        self._log("add_prototype", [bag_id], index)

    def add_bags(self, bag_ids) -> None:
        ids = list(bag_ids)
        current = self.training
        for bid in ids:
            self.dataset.bag(bid)
            if bid in current:
                raise ValueError(f"bag {bid!r} is already in the training set")
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate bag ids in add_bags")
        self._log("add_bags", ids)

    # -- error branches -------------------------------------------------------

    def error_branches(self, report: ClassMatchReport) -> list[ErrorBranch]:
        """Virtual nodes (>= 3 leaves) ranked by error rate over their leaves."""
        if report.scope != "all":
            raise ValueError("error_branches needs an all-scope report")
        bt = self.miltree.bag_tree
        kids = bt.children()
        order = []
        stack = [bt.root]
        while stack:
            node = stack.pop()
            order.append(node)
            stack.extend(c for c, _ in kids[node])
        leaves_below: dict[int, list[int]] = {}
        for node in reversed(order):
            if bt.is_leaf(node):
                leaves_below[node] = [node]
            else:
                acc: list[int] = []
                for child, _ in kids[node]:
                    acc.extend(leaves_below[child])
                leaves_below[node] = acc
        branches = []
        for node in range(bt.n_leaves, bt.n_nodes):
            leaf_ids = leaves_below.get(node, [])
            if len(leaf_ids) < 3:
                continue
            bag_ids = tuple(self.dataset.bags[leaf].bag_id for leaf in sorted(leaf_ids))
            wrong = sum(1 for bid in bag_ids if report.statuses.get(bid) == "misclassified")
            rate = wrong / len(bag_ids)
            if rate > 0:
                branches.append(ErrorBranch(node, rate, len(bag_ids), bag_ids))
        branches.sort(key=lambda b: (-b.error_rate, -b.n_leaves, b.node_id))
        return branches

    # -- persistence ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset.name,
            "dataset_hash": self.dataset.content_hash(),
            "method": self.miltree.method,
            "svm": {
                "variant": self.svm_cfg.variant,
                "c": self.svm_cfg.c,
                "nu": self.svm_cfg.nu,
                "tolerance": self.svm_cfg.tolerance,
                "max_passes": self.svm_cfg.max_passes,
            },
            "selection": {
                "sigma": self.miltree.cfg.sigma,
                "sal_num": self.miltree.cfg.sal_num,
                "medoid_max_iter": self.miltree.cfg.medoid_max_iter,
            },
            "initial_training": list(self.initial_training),
            "slots": {bid: s.to_dict() for bid, s in sorted(self.slots.items())},
            "history": [a.to_dict() for a in self.history],
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True), encoding="utf-8")

    @classmethod
    def restore(cls, payload: dict, dataset: MilDataset) -> "Session":
        """Rebuild a session from its JSON payload by replaying history."""
        if payload.get("dataset_hash") and payload["dataset_hash"] != dataset.content_hash():
            raise ValueError("dataset content does not match the saved session")
        sel = SelectionConfig(**payload.get("selection", {}))
        svm = SvmConfig(**payload.get("svm", {}))
        tree, _ = build_miltree(dataset, payload["method"], sel)
        session = cls(dataset, tree, svm)
        session.set_training(payload.get("initial_training", []))
        for entry in payload.get("history", []):
            action = UpdateAction.from_dict(entry)
            if action.kind == "swap_to_alternative":
                session.swap_to_alternative(list(action.bags))
            elif action.kind == "set_prototype":
                session.set_prototype(action.bags[0], int(action.instance_index))
            elif action.kind == "add_prototype":
                session.add_prototype(action.bags[0], int(action.instance_index))
            elif action.kind == "add_bags":
                session.add_bags(list(action.bags))
            else:
                raise ValueError(f"unknown action kind {action.kind!r}")
        return session

    @classmethod
    def load(cls, path: str | Path, dataset: MilDataset) -> "Session":
        return cls.restore(json.loads(Path(path).read_text(encoding="utf-8")), dataset)
