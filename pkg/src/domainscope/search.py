"""Per-class domain search over the corpus.

Pipeline per class: score every leaf functionally on a capped, seeded sample
subset; keep leaves at or above the threshold (none -> not_found); cluster the
survivors on tree distances with K-medoids; merge nearby clusters; rank
clusters by the combined objective; filter the winning cluster's samples down
to those the oracle assigns to the class.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .corpus import CorpusTree, Selection
from .errors import CorpusError, OracleError
from .expansion import ExpansionConfig, expand
from .kmedoids import DistanceMatrix, choose_k, merge_clusters, pam
from .oracle import Oracle
from .scoring import ObjectiveConfig, ScoreCard, combined_score, semantic_score

STATUS_FOUND = "found"
STATUS_NOT_FOUND = "not_found"


@dataclass(frozen=True)
class SearchConfig:
    theta: float = 0.5            # functional-score bar a leaf must reach to survive
    leaf_sample_cap: int = 50     # samples drawn per leaf for scoring
    alpha: float = 0.5
    eta: float = 4.0              # medoid merge threshold, in tree edges
    k_override: int | None = None
    survivor_cap: int = 25
    workers: int = 4
    seed: int = 0
    expansion: ExpansionConfig | None = None

    def __post_init__(self):
        if not 0.0 < self.theta <= 1.0:
            raise ValueError(f"theta must be in (0, 1], got {self.theta}")
        if self.leaf_sample_cap < 1 or self.survivor_cap < 1:
            raise ValueError("caps must be positive")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def expansion_for(self, tree: CorpusTree) -> ExpansionConfig:
        """Expansion settings, defaulting the suite by sample shape."""
        if self.expansion is not None:
            return self.expansion
        suite = "full-geometric" if len(tree.sample_shape()) == 3 else "perturb-only"
        return ExpansionConfig(seed=self.seed, suite=suite)


@dataclass(frozen=True)
class ClassReport:
    class_index: int
    status: str
    leaf_scores: tuple[tuple[int, float], ...]  # ranked descending, ties by node id
    chosen_nodes: tuple[int, ...]
    chosen_labels: tuple[str, ...]
    selection: Selection
    score_card: ScoreCard | None
    pre_filter_count: int
    post_filter_count: int

    @property
    def found(self) -> bool:
        return self.status == STATUS_FOUND


def capped_indices(tree: CorpusTree, leaf: int, cfg: SearchConfig) -> np.ndarray:
    """Per-leaf scoring subset: all samples, or a seeded draw of leaf_sample_cap."""
    count = len(tree.node(leaf).samples)
    if count <= cfg.leaf_sample_cap:
        return np.arange(count)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, leaf]))
    picked = rng.choice(count, size=cfg.leaf_sample_cap, replace=False)
    return np.sort(picked)


def leaf_label_arrays(oracle: Oracle, tree: CorpusTree,
                      cfg: SearchConfig) -> dict[int, np.ndarray]:
    """Oracle labels of every leaf's expanded scoring subset.

    Labels do not depend on the class under investigation, so one pass serves
    all classes of a model search.
    """
    expansion = cfg.expansion_for(tree)
    labels: dict[int, np.ndarray] = {}
    for leaf in tree.leaf_ids():
        subset = tree.node(leaf).samples.take(capped_indices(tree, leaf, cfg))
        labels[leaf] = oracle.classify_batch(expand(subset, expansion))
    return labels


def score_all_leaves(oracle: Oracle, tree: CorpusTree, class_index: int,
                     cfg: SearchConfig,
                     labels: dict[int, np.ndarray] | None = None
                     ) -> list[tuple[int, float]]:
    """Functional score of every leaf for one class, ranked descending
    (ties by ascending node id)."""
    if tree.leaf_count() == 0:
        raise CorpusError("corpus has no leaves")
    if not 0 <= class_index < oracle.info():
        raise ValueError(f"class index {class_index} out of range")
    if labels is None:
        labels = leaf_label_arrays(oracle, tree, cfg)
    scored = [(leaf, float(np.mean(arr == class_index))) for leaf, arr in labels.items()]
    return sorted(scored, key=lambda item: (-item[1], item[0]))


def filter_selection(oracle: Oracle, tree: CorpusTree, class_index: int,
                     selection: Selection) -> Selection:
    """Keep only members whose original (unexpanded) sample maps to the class."""
    selection.validate(tree)
    if len(selection) == 0:
        return selection
    labels = oracle.classify_batch(selection.gather(tree))
    kept = tuple(member for member, label in zip(selection.members, labels)
                 if label == class_index)
    return Selection(class_index, kept)


def _not_found(class_index: int, leaf_scores) -> ClassReport:
    return ClassReport(
        class_index=class_index,
        status=STATUS_NOT_FOUND,
        leaf_scores=tuple(leaf_scores),
        chosen_nodes=(),
        chosen_labels=(),
        selection=Selection(class_index, ()),
        score_card=None,
        pre_filter_count=0,
        post_filter_count=0,
    )


def search_class(oracle: Oracle, tree: CorpusTree, class_index: int,
                 cfg: SearchConfig,
                 labels: dict[int, np.ndarray] | None = None) -> ClassReport:
    """Run the full pipeline for one class."""
    leaf_scores = score_all_leaves(oracle, tree, class_index, cfg, labels)
    survivors = [(leaf, s) for leaf, s in leaf_scores if s >= cfg.theta]
    if not survivors:
        return _not_found(class_index, leaf_scores)
    survivors = survivors[:cfg.survivor_cap]
    survivor_ids = sorted(leaf for leaf, _ in survivors)
    score_of = dict(survivors)

    dm = DistanceMatrix.from_tree(tree, survivor_ids)
    k = cfg.k_override if cfg.k_override is not None else choose_k(dm)
    clustering = merge_clusters(tree, pam(dm, k), cfg.eta)

    objective = ObjectiveConfig(alpha=cfg.alpha)
    ranked = []
    for members in clustering.clusters():
        cluster_sel = _cluster_selection(tree, class_index, members, cfg)
        functional = float(np.mean([score_of[leaf] for leaf in members]))
        semantic = semantic_score(tree, cluster_sel)
        combined = combined_score(functional, semantic, objective)
        ranked.append((combined, functional, semantic, tuple(members), cluster_sel))
    ranked.sort(key=lambda r: (-r[0], -r[1], r[3]))
    combined, functional, semantic, chosen, selection = ranked[0]

    pre_count = len(selection)
    filtered = filter_selection(oracle, tree, class_index, selection)
    if len(filtered) == 0:
        # survivors existed but no original sample maps to the class
        return _not_found(class_index, leaf_scores)
    return ClassReport(
        class_index=class_index,
        status=STATUS_FOUND,
        leaf_scores=tuple(leaf_scores),
        chosen_nodes=chosen,
        chosen_labels=tuple(tree.node(leaf).label for leaf in chosen),
        selection=filtered,
        score_card=ScoreCard(class_index, functional, semantic, combined),
        pre_filter_count=pre_count,
        post_filter_count=len(filtered),
    )


def _cluster_selection(tree: CorpusTree, class_index: int, members,
                       cfg: SearchConfig) -> Selection:
    pairs = []
    for leaf in members:
        pairs.extend((leaf, int(i)) for i in capped_indices(tree, leaf, cfg))
    return Selection(class_index, tuple(pairs))


def search_model(oracle: Oracle, tree: CorpusTree,
                 cfg: SearchConfig) -> list[ClassReport]:
    """Independent per-class searches for every class the oracle reports.

    Leaf labels are computed once and shared; classes run concurrently when
    cfg.workers > 1 with identical results to a sequential run. If any class
    fails on the oracle, the raised error carries the completed reports as
    partial_reports.
    """
    n = oracle.info()
    labels = leaf_label_arrays(oracle, tree, cfg)

    def run(i: int):
        try:
            return search_class(oracle, tree, i, cfg, labels)
        except OracleError as e:
            return e

    if cfg.workers == 1 or n == 1:
        outcomes = [run(i) for i in range(n)]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(pool.map(run, range(n)))

    failures = [o for o in outcomes if isinstance(o, OracleError)]
    if failures:
        error = OracleError(
            f"{len(failures)} of {n} classes failed: {failures[0]}"
        )
        error.partial_reports = [o for o in outcomes if isinstance(o, ClassReport)]
        raise error
    return outcomes
