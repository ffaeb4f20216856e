"""Two-level tree over a MIL dataset.

The bag-space tree is an NJ tree over each bag's projection-prototype feature
vector; instance-space trees are built lazily per bag. The projection
prototype is frozen at build time so the layout never moves, while the
classification prototype may be retargeted by a session. Bag positions are
classified external/internal by counting virtual nodes on the path to the
tree's topological center, against the median count.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np

from .data import MilDataset, rng_for
from .njtree import NjTree, euclidean_matrix, nj_build, radial_layout
from .selection import PrototypePair, SelectionConfig, select_pairs

__all__ = [
    "BagSlots",
    "BagPosition",
    "MilTree",
    "build_miltree",
    "initial_slots",
    "instance_tree",
    "classify_positions",
    "suggest_training",
]


@dataclass
class BagSlots:
    """Prototype bookkeeping for one bag.

    ``projection`` (export key proto_proj) is frozen after the tree is built;
    ``classifier`` (proto_class) is what sessions retarget; ``extras`` are
    additional instance indices contributing training rows.
    """

    bag_id: str
    projection: int
    classifier: int
    extras: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "bag_id": self.bag_id,
            "proto_proj": self.projection,
            "proto_class": self.classifier,
            "extras": list(self.extras),
        }


@dataclass(frozen=True)
class BagPosition:
    bag_id: str
    kind: str  # "external" | "internal"
    depth_score: float


class MilTree:
    """Bag-space NJ tree plus a lazy cache of per-bag instance trees."""

    def __init__(
        self,
        dataset: MilDataset,
        method: str,
        cfg: SelectionConfig,
        bag_tree: NjTree,
        pairs: dict[str, PrototypePair],
    ):
        self.dataset = dataset
        self.method = method
        self.cfg = cfg
        self.bag_tree = bag_tree
        self.pairs = pairs
        self._instance_trees: dict[str, NjTree] = {}
        self._lock = threading.Lock()

    def instance_tree(self, bag_id: str) -> NjTree:
        """NJ tree over one bag's instances (leaf id = instance index), cached."""
        bag = self.dataset.bag(bag_id)  # raises on unknown id
        with self._lock:
            cached = self._instance_trees.get(bag_id)
            if cached is not None:
                return cached
            tree = radial_layout(nj_build(euclidean_matrix(bag.features)))
            self._instance_trees[bag_id] = tree
            return tree

    def export_bag_tree(self, slots: dict[str, BagSlots] | None = None,
                        positions: dict[str, BagPosition] | None = None) -> dict:
        """Bag-space tree dict; leaves annotated when slots/positions given."""
        payload = self.bag_tree.to_dict()
        for node in payload["nodes"]:
            if node["kind"] != "leaf":
                continue
            bag = self.dataset.bags[node["item"]]
            node["bag_id"] = bag.bag_id
            node["label"] = bag.label
            if positions is not None:
                node["position"] = positions[bag.bag_id].kind
            if slots is not None:
                node["proto_proj"] = slots[bag.bag_id].projection
                node["proto_class"] = slots[bag.bag_id].classifier
        return payload

    def export_instance_tree(self, bag_id: str, slots: dict[str, BagSlots] | None = None) -> dict:
        tree = self.instance_tree(bag_id)
        bag = self.dataset.bag(bag_id)
        payload = tree.to_dict()
        pair = self.pairs[bag_id]
        payload["bag_id"] = bag_id
        payload["label"] = bag.label
        payload["b_ix"] = pair.primary
        payload["b_iy"] = pair.alternate
        if slots is not None:
            payload["proto_proj"] = slots[bag_id].projection
            payload["proto_class"] = slots[bag_id].classifier
        return payload


def initial_slots(pairs: dict[str, PrototypePair]) -> dict[str, BagSlots]:
    """Fresh slots with both prototypes at the primary candidate."""
    return {
        bid: BagSlots(bag_id=bid, projection=p.primary, classifier=p.primary)
        for bid, p in pairs.items()
    }


def build_miltree(
    ds: MilDataset, method: str, cfg: SelectionConfig | None = None
) -> tuple[MilTree, dict[str, BagSlots]]:
    """Select prototype pairs, build the bag-space tree, lay it out."""
    cfg = cfg or SelectionConfig()
    pairs = select_pairs(ds, method, cfg)
    proto_vectors = np.vstack([b.features[pairs[b.bag_id].primary] for b in ds.bags])
    bag_tree = radial_layout(nj_build(euclidean_matrix(proto_vectors)))
    tree = MilTree(ds, method.lower(), cfg, bag_tree, pairs)
    return tree, initial_slots(pairs)


def instance_tree(tree: MilTree, bag_id: str) -> NjTree:
    return tree.instance_tree(bag_id)


def classify_positions(tree: MilTree) -> dict[str, BagPosition]:
    """External/internal split by virtual-node count on the path to the center.

    depth_score counts the virtual nodes on the leaf-to-center path (center
    included when virtual); a bag is external when its score exceeds the
    median score, internal otherwise.
    """
    bt = tree.bag_tree
    center = bt.topological_center()
    scores: dict[str, float] = {}
    for leaf in range(bt.n_leaves):
        path = bt.path_nodes(leaf, center)
        scores[tree.dataset.bags[leaf].bag_id] = float(
            sum(1 for node in path if not bt.is_leaf(node))
        )
    median = float(np.median(list(scores.values())))
    return {
        bid: BagPosition(bid, "external" if s > median else "internal", s)
        for bid, s in scores.items()
    }


def suggest_training(
    tree: MilTree,
    positions: dict[str, BagPosition],
    fraction: float,
    seed: int,
    mode: str = "combined",
) -> set[str]:
    """Pick a training set per class from the external/internal pools.

    Combined mode draws ceil(fraction * class_size / 2) bags from each pool,
    spilling into the other pool when one runs dry; external/internal modes
    draw the full ceil(fraction * class_size) from a single pool with the
    same spill rule. Deterministic for a given seed.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must be in (0, 1)")
    if mode not in ("combined", "external", "internal"):
        raise ValueError(f"unknown mode {mode!r}")
    ds = tree.dataset
    counts = ds.class_counts()
    if any(n == 0 for n in counts.values()):
        raise ValueError("a class has zero bags")
    rng = rng_for(seed)
    chosen: set[str] = set()
    for c in sorted(counts):
        ids = [b.bag_id for b in ds.bags if b.label == c]
        ext = [bid for bid in ids if positions[bid].kind == "external"]
        inn = [bid for bid in ids if positions[bid].kind == "internal"]

        def draw(pool: list[str], k: int) -> list[str]:
            k = min(k, len(pool))
            if k == 0:
                return []
            idx = rng.choice(len(pool), size=k, replace=False)
            return [pool[t] for t in sorted(idx)]

        if mode == "combined":
            want = _ceil(len(ids) * fraction / 2.0)
            take_ext = draw(ext, want)
            take_int = draw(inn, want)
            short = 2 * want - len(take_ext) - len(take_int)
            if short > 0:
                spill_pool = [bid for bid in (ext + inn) if bid not in take_ext + take_int]
                take_ext += draw(spill_pool, short)
            picked = take_ext + take_int
        else:
            want = _ceil(len(ids) * fraction)
            first, second = (ext, inn) if mode == "external" else (inn, ext)
            picked = draw(first, want)
            if len(picked) < want:
                picked += draw([bid for bid in second if bid not in picked], want - len(picked))
        chosen.update(picked)
    return chosen


def _ceil(x: float) -> int:
    """Ceiling that forgives float dust (20*0.3 -> 6, not 7)."""
    return math.ceil(round(x, 9))
