"""Run reports: a line-based structured text format with stable field order.

Reports serialize byte-deterministically: fixed precision for floats, sorted
selections, and no timing data in the file (wall time goes to the run log so
identical runs produce identical bytes). The parser accepts exactly what the
writer emits and re-validates totals on load.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

from .corpus import Selection
from .errors import ConfigError
from .expansion import ExpansionConfig
from .scoring import ScoreCard, overall_scores
from .search import ClassReport, SearchConfig, STATUS_FOUND, STATUS_NOT_FOUND

REPORT_HEADER = "domainscope-report v1"
TOOL_VERSION = "0.1.0"


@dataclass(frozen=True)
class RunReport:
    seed: int
    oracle_spec: str
    corpus_path: str
    num_classes: int
    query_count: int
    config: SearchConfig
    class_reports: tuple[ClassReport, ...]
    total_functional: float
    total_semantic: float
    tool_version: str = TOOL_VERSION
    wall_time_s: float | None = None  # logged, never serialized (byte determinism)


def build_run_report(oracle, tree, cfg: SearchConfig, class_reports,
                     oracle_spec: str, corpus_path: str,
                     wall_time_s: float | None = None) -> RunReport:
    cards = [r.score_card for r in class_reports if r.score_card is not None]
    total_f, total_s = overall_scores(cards)
    cfg = replace(cfg, expansion=cfg.expansion_for(tree))  # echo what actually ran
    return RunReport(
        seed=cfg.seed,
        oracle_spec=oracle_spec,
        corpus_path=corpus_path,
        num_classes=len(class_reports),
        query_count=oracle.query_count,
        config=cfg,
        class_reports=tuple(class_reports),
        total_functional=total_f,
        total_semantic=total_s,
        wall_time_s=wall_time_s,
    )


# -- selection compression ------------------------------------------------------

def _compress_selection(selection: Selection) -> str:
    by_leaf: dict[int, list[int]] = {}
    for leaf, idx in selection.members:
        by_leaf.setdefault(leaf, []).append(idx)
    parts = []
    for leaf in sorted(by_leaf):
        runs = []
        indices = sorted(by_leaf[leaf])
        start = prev = indices[0]
        for i in indices[1:]:
            if i == prev + 1:
                prev = i
                continue
            runs.append(f"{start}-{prev}" if prev > start else f"{start}")
            start = prev = i
        runs.append(f"{start}-{prev}" if prev > start else f"{start}")
        parts.append(f"{leaf}:{','.join(runs)}")
    return " ".join(parts)


def _expand_selection(class_index: int, text: str) -> Selection:
    members = []
    for part in text.split():
        leaf_text, runs = part.split(":", 1)
        leaf = int(leaf_text)
        for run in runs.split(","):
            if "-" in run:
                lo, hi = run.split("-")
                members.extend((leaf, i) for i in range(int(lo), int(hi) + 1))
            else:
                members.append((leaf, int(run)))
    return Selection(class_index, tuple(members))


# -- writer ---------------------------------------------------------------------

def _fmt(value: float) -> str:
    return f"{value:.4f}"


def format_report(run: RunReport) -> str:
    cfg = run.config
    exp = cfg.expansion or ExpansionConfig(seed=cfg.seed)
    lines = [
        REPORT_HEADER,
        f"tool_version: {run.tool_version}",
        f"seed: {run.seed}",
        f"oracle: {run.oracle_spec}",
        f"corpus: {run.corpus_path}",
        f"num_classes: {run.num_classes}",
        f"query_count: {run.query_count}",
        "config:",
        f"  alpha: {_fmt(cfg.alpha)}",
        f"  theta: {_fmt(cfg.theta)}",
        f"  eta: {_fmt(cfg.eta)}",
        f"  k: {'auto' if cfg.k_override is None else cfg.k_override}",
        f"  leaf_sample_cap: {cfg.leaf_sample_cap}",
        f"  survivor_cap: {cfg.survivor_cap}",
        f"  workers: {cfg.workers}",
        f"  variants: {exp.variants_per_sample}",
        f"  epsilon: {_fmt(exp.epsilon)}",
        f"  max_translate: {_fmt(exp.max_translate)}",
        f"  max_rotate_deg: {_fmt(exp.max_rotate_deg)}",
        f"  max_perspective_jitter: {_fmt(exp.max_perspective_jitter)}",
        f"  suite: {exp.suite}",
        "totals:",
        f"  functional: {_fmt(run.total_functional)}",
        f"  semantic: {_fmt(run.total_semantic)}",
    ]
    for report in run.class_reports:
        lines.append(f"class {report.class_index}:")
        lines.append(f"  status: {report.status}")
        scores = " ".join(f"{leaf}={_fmt(s)}" for leaf, s in report.leaf_scores)
        lines.append(f"  leaf_scores: {scores}")
        lines.append(f"  chosen_nodes: {' '.join(str(n) for n in report.chosen_nodes)}".rstrip())
        lines.append(f"  chosen_labels: {json.dumps(list(report.chosen_labels))}")
        if report.score_card is None:
            lines.append("  functional: -")
            lines.append("  semantic: -")
            lines.append("  combined: -")
        else:
            lines.append(f"  functional: {_fmt(report.score_card.functional)}")
            lines.append(f"  semantic: {_fmt(report.score_card.semantic)}")
            lines.append(f"  combined: {_fmt(report.score_card.combined)}")
        lines.append(f"  pre_filter_count: {report.pre_filter_count}")
        lines.append(f"  post_filter_count: {report.post_filter_count}")
        lines.append(f"  selection: {_compress_selection(report.selection)}".rstrip())
    return "\n".join(lines) + "\n"


def write_report(run: RunReport, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(format_report(run))
    return path


# -- parser ----------------------------------------------------------------------

class _Lines:
    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.pos = 0

    def peek(self) -> str | None:
        return self.lines[self.pos] if self.pos < len(self.lines) else None

    def next(self) -> str:
        line = self.peek()
        if line is None:
            raise ConfigError("unexpected end of report")
        self.pos += 1
        return line

    def expect_field(self, key: str) -> str:
        line = self.next().strip()
        prefix = f"{key}:"
        if not line.startswith(prefix):
            raise ConfigError(f"report parse error: expected {key!r}, got {line!r}")
        return line[len(prefix):].strip()


def load_report(path: str | Path) -> RunReport:
    """Parse a tool-produced report and re-validate its totals."""
    text = Path(path).read_text()
    rd = _Lines(text)
    if rd.next() != REPORT_HEADER:
        raise ConfigError(f"not a {REPORT_HEADER} file: {path}")
    tool_version = rd.expect_field("tool_version")
    seed = int(rd.expect_field("seed"))
    oracle_spec = rd.expect_field("oracle")
    corpus_path = rd.expect_field("corpus")
    num_classes = int(rd.expect_field("num_classes"))
    query_count = int(rd.expect_field("query_count"))

    rd.expect_field("config")
    alpha = float(rd.expect_field("alpha"))
    theta = float(rd.expect_field("theta"))
    eta = float(rd.expect_field("eta"))
    k_text = rd.expect_field("k")
    leaf_cap = int(rd.expect_field("leaf_sample_cap"))
    survivor_cap = int(rd.expect_field("survivor_cap"))
    workers = int(rd.expect_field("workers"))
    variants = int(rd.expect_field("variants"))
    epsilon = float(rd.expect_field("epsilon"))
    max_translate = float(rd.expect_field("max_translate"))
    max_rotate = float(rd.expect_field("max_rotate_deg"))
    max_persp = float(rd.expect_field("max_perspective_jitter"))
    suite = rd.expect_field("suite")
    cfg = SearchConfig(
        theta=theta, leaf_sample_cap=leaf_cap, alpha=alpha, eta=eta,
        k_override=None if k_text == "auto" else int(k_text),
        survivor_cap=survivor_cap, workers=workers, seed=seed,
        expansion=ExpansionConfig(
            variants_per_sample=variants, epsilon=epsilon,
            max_translate=max_translate, max_rotate_deg=max_rotate,
            max_perspective_jitter=max_persp, seed=seed, suite=suite,
        ),
    )

    rd.expect_field("totals")
    total_f = float(rd.expect_field("functional"))
    total_s = float(rd.expect_field("semantic"))

    reports = []
    while rd.peek() is not None:
        head = rd.next().strip()
        if not head.startswith("class ") or not head.endswith(":"):
            raise ConfigError(f"report parse error: expected class header, got {head!r}")
        class_index = int(head[len("class "):-1])
        status = rd.expect_field("status")
        if status not in (STATUS_FOUND, STATUS_NOT_FOUND):
            raise ConfigError(f"bad status {status!r}")
        scores_text = rd.expect_field("leaf_scores")
        leaf_scores = tuple(
            (int(entry.split("=")[0]), float(entry.split("=")[1]))
            for entry in scores_text.split()
        )
        chosen_text = rd.expect_field("chosen_nodes")
        chosen = tuple(int(n) for n in chosen_text.split())
        labels_text = rd.expect_field("chosen_labels")
        chosen_labels = tuple(json.loads(labels_text))
        f_text = rd.expect_field("functional")
        s_text = rd.expect_field("semantic")
        c_text = rd.expect_field("combined")
        card = None
        if f_text != "-":
            card = ScoreCard(class_index, float(f_text), float(s_text), float(c_text))
        pre = int(rd.expect_field("pre_filter_count"))
        post = int(rd.expect_field("post_filter_count"))
        selection = _expand_selection(class_index, rd.expect_field("selection"))
        reports.append(ClassReport(
            class_index=class_index, status=status, leaf_scores=leaf_scores,
            chosen_nodes=chosen, chosen_labels=chosen_labels, selection=selection,
            score_card=card, pre_filter_count=pre, post_filter_count=post,
        ))

    run = RunReport(
        seed=seed, oracle_spec=oracle_spec, corpus_path=corpus_path,
        num_classes=num_classes, query_count=query_count, config=cfg,
        class_reports=tuple(reports), total_functional=total_f,
        total_semantic=total_s, tool_version=tool_version,
    )
    validate_report(run)
    return run


def validate_report(run: RunReport) -> None:
    """Check structural invariants: one report per class, totals consistent."""
    indices = [r.class_index for r in run.class_reports]
    if sorted(indices) != list(range(run.num_classes)):
        raise ConfigError("report must contain every class exactly once")
    for r in run.class_reports:
        if r.found and len(r.selection) == 0:
            raise ConfigError(f"class {r.class_index}: found status with empty selection")
    cards = [r.score_card for r in run.class_reports if r.score_card is not None]
    total_f, total_s = overall_scores(cards)
    if abs(total_f - run.total_functional) > 1e-3 or abs(total_s - run.total_semantic) > 1e-3:
        raise ConfigError("report totals do not match per-class score cards")
