"""Per-bag instance-prototype selection.

Two methods compute a (primary, alternate) candidate pair per bag:

* salience ranking ("si") — rank a bag's instances by the sum of their
  within-bag distances, locate globally optimal positive/negative instances
  through rough + fine selection, and orient each bag's ranking by whichever
  endpoint lies farther from the opposite class's optimal instance;
* two-medoid clustering ("med") — label-free 2-medoid split of each bag,
  primary = medoid of the larger cluster.

Primary candidates seed both the tree placement and the classifier; the
alternate is what interactive updates swap in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .data import Bag, MilDataset

__all__ = [
    "SelectionConfig",
    "PrototypePair",
    "salience",
    "bag_saliences",
    "min_dist_to_set",
    "positive_probability",
    "milsis_select",
    "select_si",
    "select_med",
    "select_pairs",
    "prototype_dump_csv",
]


@dataclass(frozen=True)
class SelectionConfig:
    sigma: float = 1.0
    sal_num: int = 2
    medoid_max_iter: int = 100

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")
        if self.sal_num < 1:
            raise ValueError("sal_num must be >= 1")


@dataclass(frozen=True)
class PrototypePair:
    """Primary (b_ix) and alternate (b_iy) instance indices for one bag."""

    bag_id: str
    primary: int
    alternate: int
    method: str  # "si" | "med"


def bag_saliences(bag: Bag) -> np.ndarray:
    """Salience of every instance: sum of distances to its bag mates."""
    if bag.n_instances == 1:
        return np.zeros(1)
    return cdist(bag.features, bag.features).sum(axis=1)


def salience(bag: Bag, j: int) -> float:
    """Sum of Euclidean distances from instance j to the rest of its bag."""
    if not 0 <= j < bag.n_instances:
        raise IndexError(f"instance index {j} out of range for bag {bag.bag_id!r}")
    return float(bag_saliences(bag)[j])


def min_dist_to_set(x: np.ndarray, S: np.ndarray) -> float:
    """Minimum Euclidean distance from x to any row of S."""
    S = np.atleast_2d(np.asarray(S, dtype=float))
    if S.shape[0] == 0:
        raise ValueError("reference set is empty")
    x = np.asarray(x, dtype=float).reshape(1, -1)
    return float(cdist(x, S).min())


def positive_probability(dist: float, sigma: float) -> float:
    """1 - exp(-dist / sigma^2): likelihood proxy that grows with distance."""
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    if dist < 0:
        raise ValueError("distance must be >= 0")
    return 1.0 - math.exp(-dist / (sigma * sigma))


def _salience_order(bag: Bag) -> np.ndarray:
    """Instance indices sorted by descending salience; ties keep input order."""
    sal = bag_saliences(bag)
    return np.argsort(-sal, kind="stable")


def _stack_instances(bags: list[Bag]) -> np.ndarray:
    return np.vstack([b.features for b in bags])


def _milsis_orders(
    ds: MilDataset, positive_class: int, cfg: SelectionConfig
) -> dict[str, np.ndarray]:
    """Oriented salience rankings of the positive bags (Algorithm-1 core).

    Rough selection finds, per positive bag, which salience-ranking endpoint
    is farther from the pooled negative instances, tracking the global
    maximizer as the optimal positive. Fine selection picks the negative
    instance farthest from that optimum and orients each bag's ranking to
    start at the endpoint farther from it; the first entry of an oriented
    ranking is the bag's true positive instance.
    """
    pos_bags = ds.bags_of_class(positive_class)
    neg_bags = [b for b in ds.bags if b.label != positive_class]
    if not pos_bags or not neg_bags:
        raise ValueError("need at least one bag on each side of the positive class")

    neg_pool = _stack_instances(neg_bags)

    # Rough selection: global optimal positive instance.
    max_dist = -1.0
    opt_pos: np.ndarray | None = None
    for bag in pos_bags:
        order = _salience_order(bag)
        top, bottom = bag.features[order[0]], bag.features[order[-1]]
        d_top = min_dist_to_set(top, neg_pool)
        d_bottom = min_dist_to_set(bottom, neg_pool)
        # Ties prefer the max-salience endpoint so the optimum is always set.
        cand, d_cand = (top, d_top) if d_top >= d_bottom else (bottom, d_bottom)
        if opt_pos is None or d_cand > max_dist:
            max_dist, opt_pos = d_cand, cand

    # Fine selection: optimal negative = farthest negative from the optimum.
    neg_d = cdist(neg_pool, opt_pos.reshape(1, -1)).ravel()
    opt_neg = neg_pool[int(np.argmax(neg_d))]

    orders: dict[str, np.ndarray] = {}
    for bag in pos_bags:
        order = _salience_order(bag)
        top, bottom = bag.features[order[0]], bag.features[order[-1]]
        if np.linalg.norm(top - opt_neg) > np.linalg.norm(bottom - opt_neg):
            orders[bag.bag_id] = order
        else:
            orders[bag.bag_id] = order[::-1]
    return orders


def milsis_select(
    ds: MilDataset, positive_class: int, cfg: SelectionConfig | None = None
) -> set[tuple[str, int]]:
    """Salient-instance selection: the set T of likely-true positive instances.

    T keeps the first ``sal_num`` instances of each positive bag's oriented
    salience ranking (see _milsis_orders). Returns (bag_id, index) tuples.
    """
    cfg = cfg or SelectionConfig()
    pos_bags = ds.bags_of_class(positive_class)
    neg_bags = [b for b in ds.bags if b.label != positive_class]
    if not pos_bags or not neg_bags:
        raise ValueError("need at least one bag on each side of the positive class")
    small = min(b.n_instances for b in pos_bags)
    if cfg.sal_num > small:
        raise ValueError(f"sal_num={cfg.sal_num} exceeds smallest positive bag size {small}")
    orders = _milsis_orders(ds, positive_class, cfg)
    T: set[tuple[str, int]] = set()
    for bid, order in orders.items():
        T.update((bid, int(j)) for j in order[: cfg.sal_num])
    return T


def _oriented_pair(bag: Bag, opposite_optimum: np.ndarray) -> tuple[int, int]:
    """(primary, alternate) after orienting the salience ranking.

    The ranking runs from the endpoint farther from the opposite class's
    optimal instance; ties keep the descending-salience direction.
    """
    order = _salience_order(bag)
    if bag.n_instances == 1:
        return 0, 0
    top, bottom = bag.features[order[0]], bag.features[order[-1]]
    if np.linalg.norm(bottom - opposite_optimum) > np.linalg.norm(top - opposite_optimum):
        order = order[::-1]
    return int(order[0]), int(order[1])


def select_si(
    ds: MilDataset, positive_class: int, cfg: SelectionConfig | None = None
) -> dict[str, PrototypePair]:
    """Salience-based prototype pairs for every bag (both class sides).

    Each positive bag contributes one true positive (the head of its oriented
    ranking); each negative bag's true negative is the salience endpoint
    farther from those true positives; the optimal negative maximizes
    min-distance to all positive instances; the optimal positive maximizes
    distance to that optimal negative. Every bag then gets its pair from the
    salience ranking oriented by the opposite class's optimal instance.
    """
    cfg = cfg or SelectionConfig()
    orders = _milsis_orders(ds, positive_class, cfg)
    pos_bags = ds.bags_of_class(positive_class)
    neg_bags = [b for b in ds.bags if b.label != positive_class]
    true_pos = np.vstack(
        [ds.bag(bid).features[int(order[0])] for bid, order in sorted(orders.items())]
    )
    pos_pool = _stack_instances(pos_bags)

    # True negative per negative bag: ranking endpoint farther from the true positives.
    true_negs: list[np.ndarray] = []
    for bag in neg_bags:
        order = _salience_order(bag)
        top, bottom = bag.features[order[0]], bag.features[order[-1]]
        if min_dist_to_set(top, true_pos) >= min_dist_to_set(bottom, true_pos):
            true_negs.append(top)
        else:
            true_negs.append(bottom)

    # Optimal negative: true negative farthest (min-distance) from the positive side.
    tn = np.vstack(true_negs)
    opt_neg = tn[int(np.argmax(cdist(tn, pos_pool).min(axis=1)))]
    # Optimal positive: positive instance farthest from the optimal negative.
    opt_pos = pos_pool[int(np.argmax(cdist(pos_pool, opt_neg.reshape(1, -1)).ravel()))]

    pairs: dict[str, PrototypePair] = {}
    for bag in ds.bags:
        opposite = opt_neg if bag.label == positive_class else opt_pos
        primary, alternate = _oriented_pair(bag, opposite)
        pairs[bag.bag_id] = PrototypePair(bag.bag_id, primary, alternate, "si")
    return pairs


# ---------------------------------------------------------------------------
# Two-medoid selection
# ---------------------------------------------------------------------------


def _pair_objective(D: np.ndarray, a: int, b: int) -> float:
    return float(np.minimum(D[:, a], D[:, b]).sum())


def _assign(D: np.ndarray, a: int, b: int) -> np.ndarray:
    """Boolean mask: True = cluster of medoid a. Medoids stay in their own
    cluster; distance ties go to the lower-indexed medoid."""
    closer_a = D[:, a] < D[:, b] if a > b else D[:, a] <= D[:, b]
    closer_a[a] = True
    closer_a[b] = False
    return closer_a


def _exhaustive_two_medoids(D: np.ndarray) -> tuple[int, int]:
    n = D.shape[0]
    best = (0, 1)
    best_cost = math.inf
    for a in range(n):
        for b in range(a + 1, n):
            cost = _pair_objective(D, a, b)
            if cost < best_cost:  # ties keep the lexicographically first pair
                best, best_cost = (a, b), cost
    return best


def _alternating_two_medoids(D: np.ndarray, max_iter: int) -> tuple[int, int]:
    """Assign/update alternation from the farthest pair to a fixed point."""
    n = D.shape[0]
    flat = int(np.argmax(D))  # row-major: lexicographically first maximum
    a, b = sorted(divmod(flat, n))
    for _ in range(max_iter):
        mask = _assign(D, a, b)
        new = []
        for cluster in (mask, ~mask):
            idx = np.flatnonzero(cluster)
            sums = D[np.ix_(idx, idx)].sum(axis=1)
            new.append(int(idx[int(np.argmin(sums))]))
        new_a, new_b = sorted(new)
        if (new_a, new_b) == (a, b):
            break
        a, b = new_a, new_b
    return a, b


def select_med(bag: Bag, cfg: SelectionConfig | None = None) -> PrototypePair:
    """Two-medoid prototype pair for one bag (no labels involved).

    Primary = medoid of the larger cluster; ties go to the medoid closer to
    the bag centroid, then to the lower instance index. Bags with at most 12
    instances are solved by exhaustive pair search (guaranteed optimal);
    larger bags use the alternating search seeded at the farthest pair.
    """
    cfg = cfg or SelectionConfig()
    n = bag.n_instances
    if n == 1:
        return PrototypePair(bag.bag_id, 0, 0, "med")
    D = cdist(bag.features, bag.features)
    if n == 2:
        a, b = 0, 1
    elif n <= 12:
        a, b = _exhaustive_two_medoids(D)
    else:
        a, b = _alternating_two_medoids(D, cfg.medoid_max_iter)

    mask = _assign(D, a, b)
    size_a, size_b = int(mask.sum()), int((~mask).sum())
    if size_a != size_b:
        primary, alternate = (a, b) if size_a > size_b else (b, a)
    else:
        centroid = bag.features.mean(axis=0)
        da = float(np.linalg.norm(bag.features[a] - centroid))
        db = float(np.linalg.norm(bag.features[b] - centroid))
        if da < db:
            primary, alternate = a, b
        elif db < da:
            primary, alternate = b, a
        else:
            primary, alternate = min(a, b), max(a, b)
    return PrototypePair(bag.bag_id, primary, alternate, "med")


def select_pairs(
    ds: MilDataset, method: str, cfg: SelectionConfig | None = None
) -> dict[str, PrototypePair]:
    """Prototype pairs for the whole dataset.

    "med" runs per bag. "si" runs once with class 1 positive on binary data;
    with three or more classes each bag takes its pair from the one-vs-all
    pass where its own class is the positive side.
    """
    cfg = cfg or SelectionConfig()
    method = method.lower()
    if method == "med":
        return {b.bag_id: select_med(b, cfg) for b in ds.bags}
    if method != "si":
        raise ValueError(f"unknown selection method {method!r}")
    present = sorted(ds.class_counts())
    if len(present) < 2:
        raise ValueError("salience selection needs at least two populated classes")
    if len(present) == 2:
        return select_si(ds, positive_class=present[1], cfg=cfg)
    pairs: dict[str, PrototypePair] = {}
    for c in present:
        run = select_si(ds, positive_class=c, cfg=cfg)
        for bag in ds.bags_of_class(c):
            pairs[bag.bag_id] = run[bag.bag_id]
    return pairs


def prototype_dump_csv(pairs: dict[str, PrototypePair], bag_order: list[str]) -> str:
    """Audit CSV: ``bag_id,method,b_ix,b_iy`` in dataset bag order."""
    lines = ["bag_id,method,b_ix,b_iy"]
    for bid in bag_order:
        p = pairs[bid]
        lines.append(f"{p.bag_id},{p.method},{p.primary},{p.alternate}")
    return "\n".join(lines) + "\n"
