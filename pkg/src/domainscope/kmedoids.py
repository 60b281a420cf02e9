"""K-medoids over a precomputed distance matrix.

The solver is PAM (greedy BUILD initialization, then best-improvement SWAP)
with all ties broken by lowest node id, which makes results deterministic and
invariant under permutation of the input rows. A brute-force enumerator serves
as the reference for small instances.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from .corpus import CorpusTree

BRUTE_FORCE_LIMIT = 100_000


@dataclass(frozen=True)
class DistanceMatrix:
    ids: tuple[int, ...]
    d: np.ndarray  # (n, n) symmetric, zero diagonal, non-negative

    def __post_init__(self):
        n = len(self.ids)
        if self.d.shape != (n, n):
            raise ValueError(f"distance matrix shape {self.d.shape} does not match {n} ids")
        if len(set(self.ids)) != n:
            raise ValueError("duplicate ids in distance matrix")
        if np.any(self.d < 0):
            raise ValueError("distances must be non-negative")
        if np.any(np.diag(self.d) != 0):
            raise ValueError("distance matrix diagonal must be zero")
        if not np.array_equal(self.d, self.d.T):
            raise ValueError("distance matrix must be symmetric")

    def __len__(self) -> int:
        return len(self.ids)

    @staticmethod
    def from_tree(tree: CorpusTree, ids: list[int]) -> "DistanceMatrix":
        n = len(ids)
        d = np.zeros((n, n), dtype=np.int64)
        for i in range(n):
            for j in range(i + 1, n):
                d[i, j] = d[j, i] = tree.distance(ids[i], ids[j])
        return DistanceMatrix(tuple(ids), d)


@dataclass(frozen=True)
class Clustering:
    medoids: tuple[int, ...]          # node ids, ascending
    assignment: dict[int, int]        # node id -> medoid id (nearest, ties -> lowest id)
    cost: float                       # sum of member-to-medoid distances

    def members(self, medoid: int) -> list[int]:
        return sorted(i for i, m in self.assignment.items() if m == medoid)

    def clusters(self) -> list[list[int]]:
        return [self.members(m) for m in self.medoids]


def _assign(dm: DistanceMatrix, medoid_pos: list[int]) -> tuple[dict[int, int], float]:
    """Nearest-medoid assignment by position; ties go to the lowest medoid id."""
    ids = dm.ids
    order = sorted(medoid_pos, key=lambda p: ids[p])
    assignment: dict[int, int] = {}
    cost = 0.0
    for i in range(len(ids)):
        best = min(order, key=lambda p: (dm.d[i, p], ids[p]))
        assignment[ids[i]] = ids[best]
        cost += float(dm.d[i, best])
    return assignment, cost


def _cost(dm: DistanceMatrix, medoid_pos) -> float:
    cols = dm.d[:, list(medoid_pos)]
    return float(cols.min(axis=1).sum())


def _build_start(dm: DistanceMatrix, k: int, positions, first) -> list[int]:
    """Greedy BUILD: seed with `first`, then repeatedly add the point with the
    largest cost reduction (ties -> lowest id)."""
    medoids = [first]
    while len(medoids) < k:
        current = dm.d[:, medoids].min(axis=1)
        candidates = [p for p in positions if p not in medoids]
        best = min(
            candidates,
            key=lambda p: (-np.maximum(current - dm.d[:, p], 0.0).sum(), dm.ids[p]),
        )
        medoids.append(best)
    return medoids


def _swap_descent(dm: DistanceMatrix, positions, medoids: list[int]) -> tuple[list[int], float]:
    """Apply the single best-improving medoid/non-medoid exchange until none helps."""
    cost = _cost(dm, medoids)
    while True:
        best_swap = None
        best_cost = cost
        for m in sorted(medoids, key=lambda p: dm.ids[p]):
            for h in positions:
                if h in medoids:
                    continue
                trial = [h if p == m else p for p in medoids]
                trial_cost = _cost(dm, trial)
                if trial_cost < best_cost - 1e-12:
                    best_cost = trial_cost
                    best_swap = (m, h)
        if best_swap is None:
            return medoids, cost
        m, h = best_swap
        medoids = [h if p == m else p for p in medoids]
        cost = best_cost


def pam(dm: DistanceMatrix, k: int, seed: int | None = None) -> Clustering:
    """Multi-start PAM; deterministic regardless of seed.

    Runs SWAP descent from the classic BUILD start (seeded with the 1-medoid
    optimum) and from one BUILD start forced on each point, then keeps the
    cheapest converged solution (cost ties -> lexicographically smallest medoid
    ids). The extra starts cost little at the p matrix sizes this pipeline
    produces and remove BUILD's occasional local trap; the seed parameter is
    accepted for interface stability but there is no random choice to make.
    """
    n = len(dm)
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range for {n} points")

    positions = sorted(range(n), key=lambda p: dm.ids[p])
    classic_first = min(positions, key=lambda p: (dm.d[:, p].sum(), dm.ids[p]))
    starts = [classic_first] + [p for p in positions if p != classic_first]

    best_ids = None
    best_medoids = None
    best_cost = np.inf
    for first in starts:
        medoids, cost = _swap_descent(dm, positions, _build_start(dm, k, positions, first))
        medoid_ids = tuple(sorted(dm.ids[p] for p in medoids))
        if cost < best_cost - 1e-12 or (abs(cost - best_cost) <= 1e-12
                                        and medoid_ids < best_ids):
            best_cost = cost
            best_ids = medoid_ids
            best_medoids = medoids
    assignment, cost = _assign(dm, best_medoids)
    return Clustering(best_ids, assignment, cost)


def brute_force_medoids(dm: DistanceMatrix, k: int) -> Clustering:
    """Globally optimal medoid set by exhaustive enumeration (reference solver)."""
    n = len(dm)
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range for {n} points")
    if comb(n, k) > BRUTE_FORCE_LIMIT:
        raise ValueError(f"instance too large for brute force: C({n},{k}) > {BRUTE_FORCE_LIMIT}")
    order = sorted(range(n), key=lambda p: dm.ids[p])
    best_set = None
    best_cost = np.inf
    for combo in combinations(order, k):
        c = _cost(dm, list(combo))
        if c < best_cost - 1e-12:
            best_cost = c
            best_set = combo
    assignment, cost = _assign(dm, list(best_set))
    return Clustering(tuple(sorted(dm.ids[p] for p in best_set)), assignment, cost)


def merge_clusters(tree: CorpusTree, clustering: Clustering, eta: float) -> Clustering:
    """Union clusters whose medoids sit closer than eta in the tree.

    After the union-find pass each merged group re-elects the member with the
    lowest within-group distance sum as medoid (ties -> lowest id), and every
    point is reassigned to its nearest surviving medoid. Idempotent for a
    fixed eta.
    """
    medoids = list(clustering.medoids)
    parent = {m: m for m in medoids}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in combinations(medoids, 2):
        if tree.distance(a, b) < eta:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)

    groups: dict[int, list[int]] = {}
    for node, medoid in clustering.assignment.items():
        groups.setdefault(find(medoid), []).append(node)

    new_medoids = []
    for members in groups.values():
        members = sorted(members)
        best = min(members, key=lambda c: (sum(tree.distance(c, x) for x in members), c))
        new_medoids.append(best)
    new_medoids = sorted(new_medoids)

    assignment: dict[int, int] = {}
    cost = 0.0
    for node in clustering.assignment:
        best = min(new_medoids, key=lambda m: (tree.distance(node, m), m))
        assignment[node] = best
        cost += tree.distance(node, best)
    return Clustering(tuple(new_medoids), assignment, cost)


def mean_silhouette(dm: DistanceMatrix, clustering: Clustering) -> float:
    """Mean silhouette width on the precomputed distances.

    Singleton-cluster points score 0, and a single-cluster partition scores 0
    overall, so the k scan below can include k=1 on a common scale.
    """
    ids = list(dm.ids)
    pos = {node: i for i, node in enumerate(ids)}
    clusters = clustering.clusters()
    if len(clusters) <= 1:
        return 0.0
    scores = []
    for ci, members in enumerate(clusters):
        for node in members:
            i = pos[node]
            if len(members) == 1:
                scores.append(0.0)
                continue
            a = np.mean([dm.d[i, pos[m]] for m in members if m != node])
            b = min(
                np.mean([dm.d[i, pos[m]] for m in other])
                for cj, other in enumerate(clusters)
                if cj != ci
            )
            denom = max(a, b)
            scores.append(0.0 if denom == 0 else (b - a) / denom)
    return float(np.mean(scores))


def choose_k(dm: DistanceMatrix, k_max: int = 5) -> int:
    """Pick the cluster count with the best mean silhouette; ties -> smallest k."""
    n = len(dm)
    best_k, best_score = 1, -np.inf
    for k in range(1, min(k_max, n) + 1):
        score = mean_silhouette(dm, pam(dm, k))
        if score > best_score + 1e-12:
            best_k, best_score = k, score
    return best_k
