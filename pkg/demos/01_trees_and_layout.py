"""Build a neighbor-joining tree from raw vectors and lay it out radially.

Run from the repo root:  python3 demos/01_trees_and_layout.py
Writes demos/out/bag_tree.png and demos/out/bag_tree.json.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from milt.data import load_csv
from milt.njtree import euclidean_matrix, nj_build, radial_layout

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

# A tiny hand-made example first: the classic additive four-point matrix.
D = np.array(
    [
        [0, 3, 5, 3],
        [3, 0, 6, 4],
        [5, 6, 0, 4],
        [3, 4, 4, 0],
    ],
    dtype=float,
)
tree = nj_build(D)
print("four-point tree:", tree.to_newick(["A", "B", "C", "D"]))
print("induced distances equal the input:",
      np.allclose(tree.leaf_distance_matrix(), D))

# Now a real bag-space tree: one leaf per bag of the planted demo dataset,
# positioned by each bag's first instance for illustration.
ds = load_csv(Path(__file__).parents[1] / "data" / "planted.csv")
vectors = np.vstack([bag.features[0] for bag in ds.bags])
bag_tree = radial_layout(nj_build(euclidean_matrix(vectors)))
(OUT / "bag_tree.json").write_text(bag_tree.to_json())
print(f"bag tree: {bag_tree.n_leaves} leaves, {bag_tree.n_virtual} virtual nodes, "
      f"{len(bag_tree.edges)} edges")

fig, ax = plt.subplots(figsize=(7, 7))
for a, b, _, _ in bag_tree.edges:
    ax.plot(*zip(bag_tree.pos[a], bag_tree.pos[b]), color="0.8", lw=0.8, zorder=1)
labels = np.array([bag.label for bag in ds.bags])
ax.scatter(*bag_tree.pos[: len(ds.bags)].T, c=np.where(labels == 1, "crimson", "steelblue"),
           s=22, zorder=2)
ax.set_aspect("equal")
ax.set_axis_off()
ax.set_title("bag-space NJ tree (red = positive bags)")
fig.savefig(OUT / "bag_tree.png", dpi=150, bbox_inches="tight")
print(f"wrote {OUT / 'bag_tree.png'}")
