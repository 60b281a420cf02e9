"""Domain search pipeline: leaf ranking, thresholding, clustering, filtering."""

import numpy as np
import pytest

from domainscope.corpus import Selection
from domainscope.errors import OracleError
from domainscope.expansion import ExpansionConfig
from domainscope.oracle import MockRule, mock_oracle
from domainscope.search import (
    SearchConfig,
    filter_selection,
    score_all_leaves,
    search_class,
    search_model,
)
from domainscope.synthetic import PlantSpec, generate, sibling_leaf_classes

from conftest import make_tree

REGION = MockRule(kind="region-threshold", num_classes=10, seed=0)


def perturb_cfg(seed=0, **kwargs):
    expansion = ExpansionConfig(variants_per_sample=8, epsilon=0.03,
                                seed=seed, suite="perturb-only")
    return SearchConfig(seed=seed, expansion=expansion, **kwargs)


def binned_rows(rng, count, center, width=8, jitter=0.005):
    base = np.full((count, width), center) + rng.uniform(-jitter, jitter, (count, width))
    return base.astype(np.float32)


@pytest.fixture
def banded_tree():
    """Two subtrees scored differently by the mean-bin rule for class 5.

    leaf 3: 8 samples near 0.55  -> score 1.0
    leaf 4: 4 near 0.55, 4 near 0.95 -> score 0.5
    leaf 5: 5 near 0.55, 3 near 0.95 -> score 0.625 (own subtree)
    """
    rng = np.random.default_rng(0)
    samples = {
        3: binned_rows(rng, 8, 0.55),
        4: np.vstack([binned_rows(rng, 4, 0.55), binned_rows(rng, 4, 0.95)]),
        5: np.vstack([binned_rows(rng, 5, 0.55), binned_rows(rng, 3, 0.95)]),
    }
    return make_tree([None, 0, 0, 1, 1, 2], leaf_samples=samples)


@pytest.fixture
def planted(tmp_path):
    classes = sibling_leaf_classes(3, 3, 3, 3, seed=5)
    spec = PlantSpec(classes=classes, seed=5)
    tree, rule, truth = generate(spec, tmp_path / "corpus")
    return tree, mock_oracle(rule), truth


# -- score_all_leaves ------------------------------------------------------------

def test_constant_oracle_scores_every_leaf_one(banded_tree):
    oracle = mock_oracle(MockRule(kind="region-threshold", num_classes=1))
    ranked = score_all_leaves(oracle, banded_tree, 0, perturb_cfg())
    assert [s for _, s in ranked] == [1.0, 1.0, 1.0]


def test_ranked_output_covers_every_leaf(planted):
    tree, oracle, _ = planted
    ranked = score_all_leaves(oracle, tree, 0, perturb_cfg(seed=5))
    assert len(ranked) == tree.leaf_count()
    scores = [s for _, s in ranked]
    assert scores == sorted(scores, reverse=True)


def test_planted_pair_ranks_top_two(banded_tree):
    ranked = score_all_leaves(mock_oracle(REGION), banded_tree, 5, perturb_cfg())
    assert dict(ranked) == pytest.approx({3: 1.0, 4: 0.5, 5: 0.625})
    top_two = [leaf for leaf, _ in ranked[:2]]
    assert top_two == [3, 5]


def test_ties_rank_by_node_id(banded_tree):
    oracle = mock_oracle(MockRule(kind="region-threshold", num_classes=1))
    ranked = score_all_leaves(oracle, banded_tree, 0, perturb_cfg())
    assert [leaf for leaf, _ in ranked] == [3, 4, 5]


# -- search_class -----------------------------------------------------------------

def test_uniform_oracle_finds_nothing(banded_tree):
    oracle = mock_oracle(MockRule(kind="uniform-random", num_classes=10, seed=1))
    for class_index in range(10):
        report = search_class(oracle, banded_tree, class_index, perturb_cfg(seed=1))
        assert report.status == "not_found"
        assert len(report.selection) == 0
        assert report.score_card is None


def test_planted_siblings_recovered_exactly(planted):
    tree, oracle, truth = planted
    for class_index, leaf_set in enumerate(truth):
        report = search_class(oracle, tree, class_index, perturb_cfg(seed=5))
        assert report.status == "found"
        assert report.chosen_nodes == tuple(sorted(leaf_set))
        assert report.chosen_labels == tuple(
            f"leaf-{leaf}" for leaf in sorted(leaf_set)
        )


def test_alpha_one_reduces_to_mean_functional(banded_tree):
    report = search_class(mock_oracle(REGION), banded_tree, 5,
                          perturb_cfg(alpha=1.0))
    # cluster {3,4} mean 0.75 beats cluster {5} at 0.625
    assert report.chosen_nodes == (3, 4)
    assert report.score_card.functional == pytest.approx(0.75)
    assert report.score_card.combined == pytest.approx(0.75)


def test_low_alpha_prefers_coherent_cluster(banded_tree):
    report = search_class(mock_oracle(REGION), banded_tree, 5,
                          perturb_cfg(alpha=0.1))
    # cluster {5} is a single leaf: semantic 1.0 outweighs its lower mean score
    assert report.chosen_nodes == (5,)
    assert report.score_card.semantic == 1.0


def test_theta_is_inclusive(banded_tree):
    report = search_class(mock_oracle(REGION), banded_tree, 5, perturb_cfg())
    survivors = {leaf for leaf, s in report.leaf_scores if s >= 0.5}
    assert survivors == {3, 4, 5}  # leaf 4 sits exactly at theta


def test_raising_theta_shrinks_survivors(banded_tree):
    low = search_class(mock_oracle(REGION), banded_tree, 5, perturb_cfg(theta=0.5))
    high = search_class(mock_oracle(REGION), banded_tree, 5, perturb_cfg(theta=0.7))
    low_survivors = {leaf for leaf, s in low.leaf_scores if s >= 0.5}
    high_survivors = {leaf for leaf, s in high.leaf_scores if s >= 0.7}
    assert high_survivors <= low_survivors
    assert high.chosen_nodes == (3,)


def test_not_found_iff_no_survivor(banded_tree):
    oracle = mock_oracle(REGION)
    found = search_class(oracle, banded_tree, 5, perturb_cfg())
    missing = search_class(oracle, banded_tree, 0, perturb_cfg())
    assert found.status == "found"
    assert missing.status == "not_found"
    assert max(s for _, s in missing.leaf_scores) < 0.5


def test_post_filter_never_exceeds_pre(banded_tree):
    report = search_class(mock_oracle(REGION), banded_tree, 5, perturb_cfg(alpha=1.0))
    assert report.post_filter_count <= report.pre_filter_count
    # leaf 4 keeps only its 4 in-bin originals
    assert report.pre_filter_count == 16
    assert report.post_filter_count == 12


def test_k_override_forces_single_cluster(banded_tree):
    report = search_class(mock_oracle(REGION), banded_tree, 5,
                          perturb_cfg(k_override=1, eta=0.0))
    assert report.chosen_nodes == (3, 4, 5)


# -- filter_selection ----------------------------------------------------------------

def test_filter_constant_oracle_is_identity(banded_tree):
    oracle = mock_oracle(MockRule(kind="region-threshold", num_classes=1))
    sel = Selection(0, ((3, 0), (4, 1), (5, 2)))
    assert filter_selection(oracle, banded_tree, 0, sel) == sel


def test_filter_never_matching_class_empties(banded_tree):
    oracle = mock_oracle(REGION)
    sel = Selection(0, ((3, 0), (4, 1)))
    filtered = filter_selection(oracle, banded_tree, 0, sel)
    assert len(filtered) == 0


def test_filter_idempotent(banded_tree):
    oracle = mock_oracle(REGION)
    sel = Selection(5, tuple((4, i) for i in range(8)))
    once = filter_selection(oracle, banded_tree, 5, sel)
    twice = filter_selection(oracle, banded_tree, 5, once)
    assert once == twice
    assert len(once) == 4


# -- search_model ----------------------------------------------------------------------

def test_single_class_model(banded_tree):
    oracle = mock_oracle(MockRule(kind="region-threshold", num_classes=1))
    reports = search_model(oracle, banded_tree, perturb_cfg())
    assert len(reports) == 1
    assert reports[0].status == "found"


def test_planted_model_reports_disjoint_classes(planted):
    tree, oracle, truth = planted
    reports = search_model(oracle, tree, perturb_cfg(seed=5))
    assert [r.class_index for r in reports] == [0, 1, 2]
    chosen = [set(r.chosen_nodes) for r in reports]
    assert all(r.status == "found" for r in reports)
    for i, leaf_set in enumerate(truth):
        assert chosen[i] == set(leaf_set)
    assert chosen[0] & chosen[1] == set()
    assert chosen[0] & chosen[2] == set()
    assert chosen[1] & chosen[2] == set()


def test_search_is_deterministic_across_runs_and_workers(planted):
    tree, _, _ = planted
    # fresh oracles from the same rule so the runs share nothing in memory
    rule = MockRule(kind="uniform-random", num_classes=4, seed=9)
    sequential = search_model(mock_oracle(rule), tree, perturb_cfg(seed=9, workers=1))
    threaded = search_model(mock_oracle(rule), tree, perturb_cfg(seed=9, workers=4))
    assert sequential == threaded


def test_partial_reports_on_budget_exhaustion(planted):
    tree, _, _ = planted
    rule = MockRule(kind="uniform-random", num_classes=4, seed=9)
    oracle = mock_oracle(rule, budget=100)  # far below one leaf pass
    with pytest.raises(OracleError, match="budget exhausted"):
        search_model(oracle, tree, perturb_cfg(seed=9))


def test_query_count_shared_across_classes(planted):
    tree, oracle, _ = planted
    search_model(oracle, tree, perturb_cfg(seed=5))
    # 27 leaves x 50 capped samples x 9 expanded, each classified exactly once
    assert oracle.query_count == 27 * 50 * 9
