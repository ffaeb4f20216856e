"""Multiple-instance dataset model, CSV ingestion, splits, and synthetic data.

A dataset is a list of bags; each bag is a labeled (n_i, d) block of instance
feature vectors. Bags are immutable after loading and safe to share across
threads. All seeded randomness goes through the Philox counter-based
generator so splits and synthetic corpora are reproducible across platforms.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "Instance",
    "Bag",
    "MilDataset",
    "SplitSpec",
    "load_csv",
    "loads_csv",
    "save_csv",
    "dumps_csv",
    "convert_musk_uci",
    "split",
    "generate_synthetic",
    "generate_multimodal",
    "generate_multiclass",
    "save_synthetic",
    "rng_for",
]


def rng_for(seed: int) -> np.random.Generator:
    """Philox4x64 generator for the given seed (portable, counter-based)."""
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


@dataclass(frozen=True)
class Instance:
    """One feature vector inside a bag."""

    bag_id: str
    index_in_bag: int
    features: np.ndarray


class Bag:
    """A labeled set of instances, stored as an (n_i, d) float array."""

    __slots__ = ("bag_id", "label", "features")

    def __init__(self, bag_id: str, label: int, features: np.ndarray):
        features = np.asarray(features, dtype=float)
        if features.ndim != 2 or features.shape[0] < 1:
            raise ValueError(f"bag {bag_id!r}: features must be a non-empty 2-D array")
        if not np.all(np.isfinite(features)):
            raise ValueError(f"bag {bag_id!r}: non-finite feature value")
        if label < 0:
            raise ValueError(f"bag {bag_id!r}: negative label {label}")
        self.bag_id = bag_id
        self.label = int(label)
        self.features = features
        self.features.setflags(write=False)

    @property
    def n_instances(self) -> int:
        return self.features.shape[0]

    @property
    def dimension(self) -> int:
        return self.features.shape[1]

    def instance(self, j: int) -> Instance:
        if not 0 <= j < self.n_instances:
            raise IndexError(f"bag {self.bag_id!r}: instance index {j} out of range")
        return Instance(self.bag_id, j, self.features[j])

    def __repr__(self) -> str:
        return f"Bag({self.bag_id!r}, label={self.label}, n={self.n_instances})"


class MilDataset:
    """A named collection of bags with dense integer class ids."""

    def __init__(self, name: str, bags: list[Bag], class_names: list[str] | None = None):
        if not bags:
            raise ValueError("dataset needs at least one bag")
        dims = {b.dimension for b in bags}
        if len(dims) != 1:
            raise ValueError(f"inconsistent feature dimensions: {sorted(dims)}")
        ids = [b.bag_id for b in bags]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate bag ids")
        n_classes = max(b.label for b in bags) + 1
        if class_names is None:
            class_names = [str(c) for c in range(max(n_classes, 2))]
        if n_classes > len(class_names):
            raise ValueError("bag label outside class_names range")
        self.name = name
        self.bags = list(bags)
        self.class_names = list(class_names)
        self.dimension = bags[0].dimension
        self._by_id = {b.bag_id: b for b in self.bags}

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def n_instances(self) -> int:
        return sum(b.n_instances for b in self.bags)

    def bag(self, bag_id: str) -> Bag:
        try:
            return self._by_id[bag_id]
        except KeyError:
            raise KeyError(f"unknown bag id {bag_id!r}") from None

    def bag_ids(self) -> list[str]:
        return [b.bag_id for b in self.bags]

    def bags_of_class(self, label: int) -> list[Bag]:
        return [b for b in self.bags if b.label == label]

    def class_counts(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for b in self.bags:
            counts[b.label] = counts.get(b.label, 0) + 1
        return counts

    def content_hash(self) -> str:
        """SHA-256 of the canonical CSV serialization."""
        return hashlib.sha256(dumps_csv(self).encode("utf-8")).hexdigest()

    def __repr__(self) -> str:
        return (
            f"MilDataset({self.name!r}, bags={len(self.bags)}, "
            f"instances={self.n_instances}, d={self.dimension})"
        )


@dataclass(frozen=True)
class SplitSpec:
    """Train/test partition parameters."""

    train_fraction: float
    seed: int
    stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(f"train_fraction must be in (0,1), got {self.train_fraction}")


# ---------------------------------------------------------------------------
# CSV interchange: header `bag_id,label,f0,...,f{d-1}`, one row per instance.
# ---------------------------------------------------------------------------


def loads_csv(text: str, name: str = "dataset") -> MilDataset:
    """Parse a dataset from CSV text. See load_csv for the format."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("empty file") from None
    header = [h.strip() for h in header]
    if len(header) < 3 or header[0] != "bag_id" or header[1] != "label":
        raise ValueError(f"malformed header: expected 'bag_id,label,f0,...', got {header[:3]}")
    d = len(header) - 2
    expected = ["f%d" % k for k in range(d)]
    if header[2:] != expected:
        raise ValueError("malformed header: feature columns must be f0..f%d" % (d - 1))

    order: list[str] = []
    rows: dict[str, list[np.ndarray]] = {}
    labels: dict[str, int] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue  # tolerate trailing blank line
        if len(row) != d + 2:
            raise ValueError(f"line {lineno}: expected {d + 2} fields, got {len(row)}")
        bag_id = row[0].strip()
        try:
            label = int(row[1])
        except ValueError:
            raise ValueError(f"line {lineno}: label {row[1]!r} is not an integer") from None
        if label < 0:
            raise ValueError(f"line {lineno}: negative label {label}")
        try:
            feats = np.array([float(v) for v in row[2:]], dtype=float)
        except ValueError:
            raise ValueError(f"line {lineno}: non-numeric feature value") from None
        if not np.all(np.isfinite(feats)):
            raise ValueError(f"line {lineno}: non-finite feature value")
        if bag_id in labels:
            if labels[bag_id] != label:
                raise ValueError(
                    f"line {lineno}: bag {bag_id!r} has inconsistent labels "
                    f"({labels[bag_id]} vs {label})"
                )
        else:
            labels[bag_id] = label
            order.append(bag_id)
            rows[bag_id] = []
        rows[bag_id].append(feats)

    if not order:
        raise ValueError("empty file")
    bags = [Bag(bid, labels[bid], np.vstack(rows[bid])) for bid in order]
    return MilDataset(name, bags)


def load_csv(path: str | Path) -> MilDataset:
    """Load a dataset from a CSV file.

    Format: UTF-8, header row ``bag_id,label,f0,...,f{d-1}``, then one row per
    instance. Rows of a bag may be interleaved; within-bag order follows row
    order. Labels are non-negative integers and must agree across a bag's rows.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    return loads_csv(text, name=path.stem)


def dumps_csv(ds: MilDataset) -> str:
    """Serialize to canonical CSV (shortest round-trip float repr, LF lines)."""
    out = io.StringIO()
    d = ds.dimension
    out.write("bag_id,label," + ",".join("f%d" % k for k in range(d)) + "\n")
    for bag in ds.bags:
        for j in range(bag.n_instances):
            feats = ",".join(repr(float(v)) for v in bag.features[j])
            out.write(f"{bag.bag_id},{bag.label},{feats}\n")
    return out.getvalue()


def save_csv(ds: MilDataset, path: str | Path) -> None:
    Path(path).write_text(dumps_csv(ds), encoding="utf-8")


def convert_musk_uci(path: str | Path, name: str = "musk1") -> MilDataset:
    """Convert the UCI Musk ``.data`` layout to a dataset.

    UCI rows are ``molecule_name,conformation_name,f1..f166,class``; the
    molecule name becomes the bag id, conformation names are dropped, and the
    class column maps to {0,1}.
    """
    path = Path(path)
    order: list[str] = []
    rows: dict[str, list[np.ndarray]] = {}
    labels: dict[str, int] = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) < 4:
                raise ValueError(f"line {lineno}: too few fields for musk layout")
            bag_id = parts[0].strip().strip('"')
            cls = int(float(parts[-1]))
            if cls not in (0, 1):
                raise ValueError(f"line {lineno}: class must be 0/1, got {parts[-1]!r}")
            feats = np.array([float(v) for v in parts[2:-1]], dtype=float)
            if bag_id in labels:
                if labels[bag_id] != cls:
                    raise ValueError(f"line {lineno}: bag {bag_id!r} label conflict")
            else:
                labels[bag_id] = cls
                order.append(bag_id)
                rows[bag_id] = []
            rows[bag_id].append(feats)
    if not order:
        raise ValueError("empty file")
    bags = [Bag(bid, labels[bid], np.vstack(rows[bid])) for bid in order]
    return MilDataset(name, bags)


# ---------------------------------------------------------------------------
# Splitting
# ---------------------------------------------------------------------------


def _largest_remainder_counts(class_sizes: dict[int, int], fraction: float) -> dict[int, int]:
    """Per-class train counts: floor of the target plus largest-remainder top-up."""
    total_target = round(fraction * sum(class_sizes.values()))
    targets = {c: fraction * n for c, n in class_sizes.items()}
    counts = {c: math.floor(t) for c, t in targets.items()}
    leftover = total_target - sum(counts.values())
    if leftover > 0:
        by_remainder = sorted(
            class_sizes, key=lambda c: (-(targets[c] - counts[c]), c)
        )
        for c in by_remainder[:leftover]:
            counts[c] += 1
    return counts


def split(ds: MilDataset, spec: SplitSpec) -> tuple[set[str], set[str]]:
    """Partition bag ids into (train, test), deterministic given the seed.

    Stratified mode preserves class proportions within one bag per class.
    Raises if the resulting train set would miss a class entirely.
    """
    rng = rng_for(spec.seed)
    present = ds.class_counts()
    if spec.stratified:
        counts = _largest_remainder_counts(present, spec.train_fraction)
        if any(counts[c] == 0 for c in present):
            bad = [c for c in present if counts[c] == 0]
            raise ValueError(f"fraction {spec.train_fraction} yields empty train class(es) {bad}")
        train: set[str] = set()
        for c in sorted(present):
            ids = [b.bag_id for b in ds.bags if b.label == c]
            chosen = rng.choice(len(ids), size=counts[c], replace=False)
            train.update(ids[k] for k in sorted(chosen))
    else:
        n_train = round(spec.train_fraction * len(ds.bags))
        ids = ds.bag_ids()
        chosen = rng.choice(len(ids), size=n_train, replace=False)
        train = {ids[k] for k in sorted(chosen)}
        got = {ds.bag(b).label for b in train}
        if got != set(present):
            raise ValueError("train set misses a class; use stratified=True or another seed")
    test = set(ds.bag_ids()) - train
    return train, test


# ---------------------------------------------------------------------------
# Synthetic corpora with a planted positive concept
# ---------------------------------------------------------------------------


def _draw_sizes(rng, n_bags: int, inst_per_bag: tuple[int, int]) -> np.ndarray:
    lo, hi = inst_per_bag
    if lo < 1 or hi < lo:
        raise ValueError(f"invalid instance-count range {inst_per_bag}")
    return rng.integers(lo, hi + 1, size=n_bags)


def generate_synthetic(
    n_bags: int,
    inst_per_bag: tuple[int, int],
    d: int,
    planted_shift: float,
    seed: int,
    noise: float = 1.0,
) -> tuple[MilDataset, dict[str, int]]:
    """Binary MIL corpus with one planted positive instance per positive bag.

    Positive bags hold exactly one instance drawn around ``planted_shift * 1``
    plus background instances around the origin; negative bags hold background
    instances and, with probability 0.25, one instance from the positive
    component (negative bags may contain positive instances). Returns the
    dataset and a manifest mapping positive bag ids to their planted index.
    """
    if n_bags % 2 != 0:
        raise ValueError("n_bags must be even")
    if d < 2:
        raise ValueError("d must be >= 2")
    if planted_shift < 0:
        raise ValueError("planted_shift must be >= 0")
    rng = rng_for(seed)
    sizes = _draw_sizes(rng, n_bags, inst_per_bag)
    center = planted_shift * np.ones(d)
    bags: list[Bag] = []
    manifest: dict[str, int] = {}
    half = n_bags // 2
    for i in range(n_bags):
        positive = i < half
        n = int(sizes[i])
        feats = rng.normal(0.0, noise, size=(n, d))
        bag_id = f"bag{i:03d}"
        if positive:
            j = int(rng.integers(n))
            feats[j] = center + rng.normal(0.0, noise, size=d)
            manifest[bag_id] = j
        elif rng.random() < 0.25 and n >= 2:
            j = int(rng.integers(n))
            feats[j] = center + rng.normal(0.0, noise, size=d)
        bags.append(Bag(bag_id, 1 if positive else 0, feats))
    return MilDataset(f"synth{seed}", bags), manifest


def _mode_centers(d: int, shift: float, modes: int) -> np.ndarray:
    """Orthogonal interleaved-block concept centers.

    Mode k owns the dimensions congruent to k (mod modes), scaled so every
    center sits shift*sqrt(d) from the origin regardless of the mode count.
    Pairwise center distances are then sqrt(2) times the center norm: an
    instance planted at one concept lies farther from a rival concept than
    background noise does, which the salience orientation relies on.
    """
    centers = np.zeros((modes, d))
    idx = np.arange(d)
    value = shift * math.sqrt(modes)
    for k in range(modes):
        centers[k, idx % modes == k] = value
    return centers


def generate_multimodal(
    n_bags: int,
    inst_per_bag: tuple[int, int],
    d: int,
    planted_shift: float,
    seed: int,
    noise: float = 1.0,
    modes: int = 2,
    contamination: float = 0.25,
) -> tuple[MilDataset, dict[str, dict[str, int]]]:
    """Binary corpus whose positive class has ``modes`` planted sub-clusters.

    Like generate_synthetic but the planted instance of positive bag i is
    drawn around one of ``modes`` distinct centers (round-robin, so the modes
    are equally represented). Manifest: bag id -> {"planted": index, "mode": k}.
    """
    if n_bags % 2 != 0:
        raise ValueError("n_bags must be even")
    if d < modes:
        raise ValueError("d must be >= modes")
    rng = rng_for(seed)
    sizes = _draw_sizes(rng, n_bags, inst_per_bag)
    centers = _mode_centers(d, planted_shift, modes)
    bags: list[Bag] = []
    manifest: dict[str, dict[str, int]] = {}
    half = n_bags // 2
    for i in range(n_bags):
        positive = i < half
        n = int(sizes[i])
        feats = rng.normal(0.0, noise, size=(n, d))
        bag_id = f"bag{i:03d}"
        if positive:
            mode = i % modes
            j = int(rng.integers(n))
            feats[j] = centers[mode] + rng.normal(0.0, noise, size=d)
            manifest[bag_id] = {"planted": j, "mode": mode}
        elif rng.random() < contamination and n >= 2:
            j = int(rng.integers(n))
            mode = int(rng.integers(modes))
            feats[j] = centers[mode] + rng.normal(0.0, noise, size=d)
        bags.append(Bag(bag_id, 1 if positive else 0, feats))
    return MilDataset(f"multimodal{seed}", bags), manifest


def generate_multiclass(
    n_classes: int,
    bags_per_class: int,
    inst_per_bag: tuple[int, int],
    d: int,
    planted_shift: float,
    seed: int,
    noise: float = 1.0,
    planted_per_bag: int = 1,
) -> tuple[MilDataset, dict[str, list[int]]]:
    """Multiclass corpus: bags of class c plant instances at center c.

    ``planted_per_bag > 1`` plants several concept instances per bag (capped
    at the bag size), the regime where reinforcing a bag with its alternate
    prototype adds signal instead of background noise.
    """
    if n_classes < 2:
        raise ValueError("need >= 2 classes")
    if d < n_classes:
        raise ValueError("d must be >= n_classes")
    if planted_per_bag < 1:
        raise ValueError("planted_per_bag must be >= 1")
    rng = rng_for(seed)
    sizes = _draw_sizes(rng, n_classes * bags_per_class, inst_per_bag)
    centers = _mode_centers(d, planted_shift, n_classes)
    bags: list[Bag] = []
    manifest: dict[str, list[int]] = {}
    i = 0
    for c in range(n_classes):
        for _ in range(bags_per_class):
            n = int(sizes[i])
            feats = rng.normal(0.0, noise, size=(n, d))
            k = min(planted_per_bag, n)
            planted = rng.choice(n, size=k, replace=False)
            for j in planted:
                feats[j] = centers[c] + rng.normal(0.0, noise, size=d)
            bag_id = f"bag{i:03d}"
            manifest[bag_id] = sorted(int(j) for j in planted)
            bags.append(Bag(bag_id, c, feats))
            i += 1
    return MilDataset(f"multiclass{seed}", bags), manifest


def save_synthetic(ds: MilDataset, manifest: dict, path: str | Path) -> None:
    """Write the CSV plus its JSON manifest sidecar (`<path>.manifest.json`)."""
    path = Path(path)
    save_csv(ds, path)
    sidecar = path.with_suffix(path.suffix + ".manifest.json")
    sidecar.write_text(json.dumps(manifest, indent=0, sort_keys=True), encoding="utf-8")
