"""Hierarchical k-means retrieval tree over per-image curation features.

The tree clusters on one feature kind per level (default pose, then
lighting); the final level is flat, storing expression features per image.
Queries pick the q_i nearest cluster centers at each level and the q_n
nearest expression features at the leaves.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import TooFewPoints

DEFAULT_FEATURE_ORDER = ("pose", "lighting", "expression")


@dataclass(frozen=True)
class IndexConfig:
    feature_order: tuple = DEFAULT_FEATURE_ORDER
    branch_factors: tuple = (9, 3)   # k_1 .. k_{n-1}; the last level is flat
    kmeans_seed: int = 0
    kmeans_max_iter: int = 100

    def __post_init__(self):
        if len(self.branch_factors) != len(self.feature_order) - 1:
            raise ValueError("need one branch factor per non-leaf level")
        if any(k < 1 for k in self.branch_factors):
            raise ValueError("branch factors must be positive")


@dataclass
class ClusterNode:
    """One node of the retrieval tree.

    Non-leaf nodes carry children clustered on the next level's feature.
    Leaf nodes store their members flat: source ids plus expression
    features, in dataset order.
    """

    level: int
    center: np.ndarray | None
    children: list = field(default_factory=list)
    member_ids: list = field(default_factory=list)
    member_features: np.ndarray | None = None

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def iter_members(self):
        if self.is_leaf:
            yield from self.member_ids
        else:
            for child in self.children:
                yield from child.iter_members()


def kmeans(points: np.ndarray, k: int, seed: int = 0, max_iter: int = 100):
    """Lloyd's algorithm with k-means++ seeding.

    Deterministic for a given seed.  Clusters that empty out are reseeded
    to the point currently farthest from its assigned center, so every
    returned cluster is non-empty.

    Returns (centers (k, d), assignments (n,)).
    """
    points = np.asarray(points, dtype=float)
    n = len(points)
    if n < k:
        raise TooFewPoints(f"{n} points < {k} clusters")
    if k < 1:
        raise ValueError("k must be >= 1")

    rng = np.random.default_rng(seed)

    # k-means++ seeding
    centers = np.empty((k, points.shape[1]))
    first = int(rng.integers(n))
    centers[0] = points[first]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0:
            # all remaining points coincide with chosen centers
            centers[i] = points[int(rng.integers(n))]
            continue
        probs = d2 / total
        centers[i] = points[int(rng.choice(n, p=probs))]
        d2 = np.minimum(d2, ((points - centers[i]) ** 2).sum(axis=1))

    assignments = np.zeros(n, dtype=int)
    for _ in range(max_iter):
        dists = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_assign = dists.argmin(axis=1)

        # reseed empty clusters to the globally farthest point
        for ci in range(k):
            if not np.any(new_assign == ci):
                far = int(dists[np.arange(n), new_assign].argmax())
                new_assign[far] = ci
                centers[ci] = points[far]
                dists[:, ci] = ((points - centers[ci]) ** 2).sum(axis=1)

        if np.array_equal(new_assign, assignments) and _ > 0:
            break
        assignments = new_assign
        for ci in range(k):
            centers[ci] = points[assignments == ci].mean(axis=0)

    return centers, assignments


def kmeans_objective(points: np.ndarray, centers: np.ndarray,
                     assignments: np.ndarray) -> float:
    points = np.asarray(points, dtype=float)
    return float(((points - centers[assignments]) ** 2).sum())


def build_index(records: list, config: IndexConfig | None = None) -> ClusterNode:
    """Build the retrieval tree.

    records: list of (source_id, features) where features is a dict holding
    one vector per kind in config.feature_order.
    """
    config = config or IndexConfig()
    for sid, feats in records:
        for kind in config.feature_order:
            if kind not in feats:
                raise ValueError(f"record {sid!r} missing feature {kind!r}")

    root = ClusterNode(level=0, center=None)
    _split(root, records, config, seed=config.kmeans_seed)
    return root


def _split(node: ClusterNode, records: list, config: IndexConfig, seed: int):
    level = node.level
    if level == len(config.branch_factors):
        # Flat leaf level: store expression features in dataset order.
        kind = config.feature_order[level]
        node.member_ids = [sid for sid, _ in records]
        node.member_features = np.stack([np.asarray(f[kind], dtype=float)
                                         for _, f in records])
        return

    kind = config.feature_order[level]
    k = min(config.branch_factors[level], len(records))
    points = np.stack([np.asarray(f[kind], dtype=float) for _, f in records])
    centers, assignments = kmeans(points, k, seed=seed,
                                  max_iter=config.kmeans_max_iter)
    for ci in range(k):
        members = [rec for rec, a in zip(records, assignments) if a == ci]
        child = ClusterNode(level=level + 1, center=centers[ci])
        _split(child, members, config, seed=seed + 1 + ci)
        node.children.append(child)


def query(root: ClusterNode, query_features: dict, match_counts: tuple,
          config: IndexConfig | None = None) -> list:
    """Retrieve source ids for a query, q_i matches per level.

    At cluster levels the q_i nearest centers (Euclidean) are selected under
    each chosen parent; at the leaf level the q_n nearest expression
    features.  Under-full clusters return what they have.  Expression ties
    break toward the lower source id.

    Results are grouped by selected cluster path, nearest path first.
    """
    config = config or IndexConfig()
    if len(match_counts) != len(config.feature_order):
        raise ValueError("need one match count per level")
    if any(q < 1 for q in match_counts):
        raise ValueError("match counts must be >= 1")

    frontier = [root]
    for level, kind in enumerate(config.feature_order[:-1]):
        q = match_counts[level]
        target = np.asarray(query_features[kind], dtype=float)
        next_frontier = []
        for node in frontier:
            dists = [float(((c.center - target) ** 2).sum()) for c in node.children]
            order = np.argsort(dists, kind="stable")[:q]
            next_frontier.extend(node.children[i] for i in order)
        frontier = next_frontier

    leaf_kind = config.feature_order[-1]
    q_leaf = match_counts[-1]
    target = np.asarray(query_features[leaf_kind], dtype=float)
    results = []
    for leaf in frontier:
        if leaf.member_features is None or not len(leaf.member_ids):
            continue
        dists = ((leaf.member_features - target) ** 2).sum(axis=1)
        order = sorted(range(len(dists)),
                       key=lambda i: (dists[i], leaf.member_ids[i]))
        results.extend(leaf.member_ids[i] for i in order[:q_leaf])
    return results


# ---------------------------------------------------------------------------
# Serialization (structured text, exact float round trip)
# ---------------------------------------------------------------------------

def node_to_dict(node: ClusterNode) -> dict:
    d = {"level": node.level,
         "center": None if node.center is None else node.center.tolist()}
    if node.is_leaf:
        d["member_ids"] = list(node.member_ids)
        d["member_features"] = (None if node.member_features is None
                                else node.member_features.tolist())
    else:
        d["children"] = [node_to_dict(c) for c in node.children]
    return d


def node_from_dict(d: dict) -> ClusterNode:
    node = ClusterNode(
        level=d["level"],
        center=None if d["center"] is None else np.array(d["center"], dtype=float),
    )
    if "children" in d:
        node.children = [node_from_dict(c) for c in d["children"]]
    else:
        node.member_ids = list(d.get("member_ids", []))
        mf = d.get("member_features")
        node.member_features = None if mf is None else np.array(mf, dtype=float)
    return node
