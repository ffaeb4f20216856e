"""Neighbor-joining tree construction and equal-angle radial layout.

Canonical NJ: at each step the pair minimizing
``Q(i,j) = D[i,j] - (r_i + r_j) / (m' - 2)`` is joined under a new virtual
node with branch lengths ``s_iu = D[i,j]/2 + (r_i - r_j) / (2 (m' - 2))`` and
``s_ju = D[i,j] - s_iu``, after which ``D[k,u] = (D[i,k] + D[j,k] - D[i,j]) / 2``.
This form reconstructs additive matrices exactly, which the test suite relies
on. Ties in the criterion resolve to the lexicographically smallest active
index pair. Negative computed branch lengths are clamped to zero for display
and downstream use; the raw value is kept on the edge.
"""

from __future__ import annotations

import json
import math
from collections import deque

import numpy as np
from scipy.spatial.distance import cdist

__all__ = ["NjTree", "euclidean_matrix", "nj_build", "radial_layout", "validate_distance_matrix"]


def euclidean_matrix(vectors) -> np.ndarray:
    """Symmetric matrix of pairwise Euclidean distances with a zero diagonal."""
    X = np.asarray(vectors, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("need a non-empty list of equal-length vectors")
    D = cdist(X, X)
    np.fill_diagonal(D, 0.0)
    return D


def validate_distance_matrix(D: np.ndarray) -> np.ndarray:
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError(f"distance matrix must be square, got shape {D.shape}")
    if not np.all(np.isfinite(D)):
        raise ValueError("distance matrix has non-finite entries")
    if np.any(D < 0):
        raise ValueError("distance matrix has negative entries")
    scale = max(1.0, float(np.max(D))) if D.size else 1.0
    if np.max(np.abs(D - D.T)) > 1e-9 * scale:
        raise ValueError("distance matrix is not symmetric")
    D = 0.5 * (D + D.T)  # exact symmetry for deterministic scans
    np.fill_diagonal(D, 0.0)
    return D


class NjTree:
    """Unrooted binary tree with node ids 0..N-1.

    Ids below ``n_leaves`` are leaves (the leaf id doubles as the input item
    index); higher ids are virtual nodes in creation order. Edges are stored
    as ``(parent, child, length, raw_length)`` where the parent is the node
    that subsumed the child during construction, so edge orientation matches
    the rooted view from ``root`` (the last-created virtual node).
    """

    def __init__(self, n_leaves: int):
        if n_leaves < 1:
            raise ValueError("tree needs at least one leaf")
        self.n_leaves = n_leaves
        self.n_virtual = 0
        self.edges: list[tuple[int, int, float, float]] = []
        self.pos: np.ndarray | None = None
        self.root = 0

    # -- structure ---------------------------------------------------------

    @property
    def n_nodes(self) -> int:
        return self.n_leaves + self.n_virtual

    def is_leaf(self, node: int) -> bool:
        return node < self.n_leaves

    def add_virtual(self) -> int:
        node = self.n_nodes
        self.n_virtual += 1
        return node

    def add_edge(self, parent: int, child: int, length: float, raw: float | None = None):
        if length < 0:
            raise ValueError("edge length must be >= 0 (clamp before adding)")
        self.edges.append((parent, child, float(length), float(length if raw is None else raw)))

    def neighbors(self) -> list[list[tuple[int, float]]]:
        adj: list[list[tuple[int, float]]] = [[] for _ in range(self.n_nodes)]
        for a, b, length, _ in self.edges:
            adj[a].append((b, length))
            adj[b].append((a, length))
        for lst in adj:
            lst.sort()
        return adj

    def children(self) -> list[list[tuple[int, float]]]:
        """Rooted child lists (ascending child id) from ``root``."""
        adj = self.neighbors()
        kids: list[list[tuple[int, float]]] = [[] for _ in range(self.n_nodes)]
        seen = [False] * self.n_nodes
        seen[self.root] = True
        queue = deque([self.root])
        while queue:
            node = queue.popleft()
            for other, length in adj[node]:
                if not seen[other]:
                    seen[other] = True
                    kids[node].append((other, length))
                    queue.append(other)
        return kids

    def leaf_distance_matrix(self) -> np.ndarray:
        """Pairwise path lengths between leaves along (clamped) edge lengths."""
        adj = self.neighbors()
        n = self.n_leaves
        out = np.zeros((n, n))
        for leaf in range(n):
            dist = np.full(self.n_nodes, -1.0)
            dist[leaf] = 0.0
            queue = deque([leaf])
            while queue:
                node = queue.popleft()
                for other, length in adj[node]:
                    if dist[other] < 0:
                        dist[other] = dist[node] + length
                        queue.append(other)
            out[leaf] = dist[:n]
        return 0.5 * (out + out.T)

    def topological_center(self) -> int:
        """Node minimizing hop eccentricity; ties go to the lowest id."""
        if self.n_nodes == 1:
            return 0
        adj = self.neighbors()
        best_node, best_ecc = 0, math.inf
        for start in range(self.n_nodes):
            depth = np.full(self.n_nodes, -1)
            depth[start] = 0
            queue = deque([start])
            ecc = 0
            while queue:
                node = queue.popleft()
                ecc = max(ecc, int(depth[node]))
                for other, _ in adj[node]:
                    if depth[other] < 0:
                        depth[other] = depth[node] + 1
                        queue.append(other)
            if ecc < best_ecc:
                best_node, best_ecc = start, ecc
        return best_node

    def path_nodes(self, a: int, b: int) -> list[int]:
        """Nodes on the unique a..b path, endpoints included."""
        adj = self.neighbors()
        prev = np.full(self.n_nodes, -1)
        prev[a] = a
        queue = deque([a])
        while queue:
            node = queue.popleft()
            if node == b:
                break
            for other, _ in adj[node]:
                if prev[other] < 0:
                    prev[other] = node
                    queue.append(other)
        path = [b]
        while path[-1] != a:
            path.append(int(prev[path[-1]]))
        return path[::-1]

    # -- export ------------------------------------------------------------

    def to_dict(self) -> dict:
        nodes = []
        for node in range(self.n_nodes):
            entry: dict = {"id": node, "kind": "leaf" if self.is_leaf(node) else "virtual"}
            if self.is_leaf(node):
                entry["item"] = node
            if self.pos is not None:
                entry["x"] = float(self.pos[node, 0])
                entry["y"] = float(self.pos[node, 1])
            nodes.append(entry)
        edges = [{"a": a, "b": b, "length": length} for a, b, length, _ in self.edges]
        return {"nodes": nodes, "edges": edges}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def to_newick(self, names: list[str] | None = None) -> str:
        """Newick string with edge lengths, rooted at ``root``."""
        kids = self.children()

        def name_of(node: int) -> str:
            if self.is_leaf(node):
                return names[node] if names is not None else f"L{node}"
            return ""

        rendered: dict[int, str] = {}
        for node in reversed(_preorder(self.root, kids)):  # children first
            if not kids[node]:
                rendered[node] = name_of(node)
            else:
                inner = ",".join(f"{rendered[c]}:{length:.12g}" for c, length in kids[node])
                rendered[node] = f"({inner}){name_of(node)}"
        return rendered[self.root] + ";"


def nj_build(D: np.ndarray) -> NjTree:
    """Build an NJ tree from a validated distance matrix.

    m = 1 yields a lone leaf; m = 2 a single edge of length D[0,1]; otherwise
    m - 2 virtual nodes are inserted and the surviving pair is joined by the
    final edge, for 2m - 3 edges total.
    """
    D = validate_distance_matrix(D)
    m = D.shape[0]
    tree = NjTree(m)
    if m == 1:
        return tree
    if m == 2:
        tree.add_edge(0, 1, max(D[0, 1], 0.0), D[0, 1])
        tree.root = 0
        return tree

    active = list(range(m))
    W = D.copy()
    while len(active) > 2:
        k = len(active)
        r = W.sum(axis=0)
        Q = W - (r[:, None] + r[None, :]) / (k - 2)
        Q[np.tril_indices(k)] = np.inf  # scan the upper triangle only
        i, j = divmod(int(np.argmin(Q)), k)  # row-major argmin = lexicographic tie-break
        dij = W[i, j]
        raw_i = 0.5 * dij + (r[i] - r[j]) / (2.0 * (k - 2))
        raw_j = dij - raw_i
        u = tree.add_virtual()
        tree.add_edge(u, active[i], max(raw_i, 0.0), raw_i)
        tree.add_edge(u, active[j], max(raw_j, 0.0), raw_j)
        merged = 0.5 * (W[i, :] + W[j, :] - dij)
        W[i, :] = merged
        W[:, i] = merged
        W[i, i] = 0.0
        W = np.delete(np.delete(W, j, axis=0), j, axis=1)
        active[i] = u
        del active[j]

    last = tree.n_nodes - 1  # final virtual node; always one of the survivors
    other = active[0] if active[1] == last else active[1]
    tree.add_edge(last, other, max(W[0, 1], 0.0), W[0, 1])
    tree.root = last
    return tree


def radial_layout(tree: NjTree, min_edge: float = 0.0) -> NjTree:
    """Fill 2-D positions with the equal-angle layout and return the tree.

    Each subtree gets an angular wedge proportional to its leaf count; a node
    sits at its parent plus max(edge length, ``min_edge``) along the wedge
    bisector. Purely a function of the structure, so identical trees receive
    identical coordinates.
    """
    n = tree.n_nodes
    pos = np.zeros((n, 2))
    if n > 1:
        kids = tree.children()
        leaf_count = [0] * n
        for node in reversed(_preorder(tree.root, kids)):  # children before parents
            leaf_count[node] = 1 if tree.is_leaf(node) else sum(leaf_count[c] for c, _ in kids[node])
        # wedge = (start, end); the root owns the full circle
        wedge = {tree.root: (0.0, 2.0 * math.pi)}
        for node in _preorder(tree.root, kids):
            start, end = wedge[node]
            cursor = start
            subtree_leaves = sum(leaf_count[c] for c, _ in kids[node]) or 1
            for child, length in kids[node]:
                width = (end - start) * leaf_count[child] / subtree_leaves
                mid = cursor + width / 2.0
                step = max(length, min_edge)
                pos[child] = pos[node] + step * np.array([math.cos(mid), math.sin(mid)])
                wedge[child] = (cursor, cursor + width)
                cursor += width
    tree.pos = pos
    return tree


def _preorder(root: int, kids: list[list[tuple[int, float]]]) -> list[int]:
    order: list[int] = []
    stack = [root]
    while stack:
        node = stack.pop()
        order.append(node)
        for child, _ in reversed(kids[node]):
            stack.append(child)
    return order
