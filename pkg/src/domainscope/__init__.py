"""domainscope: infer the training-data domain of a hard-label black-box
classifier by searching a hierarchical corpus for a high-scoring selection."""

from .corpus import (
    CorpusNode,
    CorpusTree,
    SampleSet,
    Selection,
    closeness,
    leaf_ids,
    load_corpus,
    tree_distance,
    write_corpus,
)
from .errors import ConfigError, CorpusError, OracleError, OutOfVocabulary
from .expansion import ExpansionConfig, expand, transform_one
from .kmedoids import Clustering, DistanceMatrix, brute_force_medoids, merge_clusters, pam
from .labelsim import EmbeddingTable, load_embeddings, phrase_similarity, verify_report
from .oracle import MockRule, Oracle, mock_oracle, parse_oracle_spec, remote_oracle
from .report import RunReport, build_run_report, format_report, load_report, write_report
from .scoring import (
    ObjectiveConfig,
    ScoreCard,
    combined_score,
    functional_score,
    overall_scores,
    semantic_score,
)
from .search import (
    ClassReport,
    SearchConfig,
    filter_selection,
    score_all_leaves,
    search_class,
    search_model,
)
from .synthetic import PlantSpec, generate, recovery_jaccard, sibling_leaf_classes

__version__ = "0.1.0"
