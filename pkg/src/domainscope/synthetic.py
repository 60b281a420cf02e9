"""Synthetic corpora with planted ground truth.

Leaves of a perfect arity^depth tree own samples drawn from disjoint
axis-aligned cells of [0,1]^D (a 2-axis lattice), and a mock rule labels
points by the cell they fall in. Because samples keep a margin to their cell
walls larger than the expansion perturbation, the true leaves score 1.0
functionally, which makes recovery measurable.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .corpus import CorpusNode, CorpusTree, SampleSet, write_corpus
from .oracle import MockRule

DEFAULT_MARGIN = 0.07
DEFAULT_PERTURBATION = 0.03  # must match the expansion default the margin protects against


@dataclass(frozen=True)
class PlantSpec:
    depth: int = 3
    arity: int = 3
    dims: int = 16
    samples_per_leaf: int = 60
    classes: tuple[tuple[int, ...], ...] = ()  # leaf-id sets, disjoint
    noise_rate: float = 0.0
    margin: float = DEFAULT_MARGIN
    perturbation: float = DEFAULT_PERTURBATION
    seed: int = 0

    def __post_init__(self):
        if self.depth < 0 or self.arity < 1:
            raise ValueError("depth must be >= 0 and arity >= 1")
        if self.dims < 2:
            raise ValueError("cell lattice needs dims >= 2")
        if self.samples_per_leaf < 1:
            raise ValueError("samples_per_leaf must be positive")
        flat = [leaf for cls in self.classes for leaf in cls]
        if len(flat) != len(set(flat)):
            raise ValueError("class leaf sets must be disjoint")
        if self.margin <= 2 * self.perturbation:
            raise ValueError(
                f"infeasible margins: margin {self.margin} must exceed "
                f"2 x perturbation {self.perturbation}"
            )


def tree_skeleton(depth: int, arity: int) -> tuple[list[tuple[int, int | None, list[int]]], list[int]]:
    """Heap-ordered perfect tree: node i's children are arity*i+1 .. arity*i+arity.

    Returns ([(id, parent, children)...], leaf_ids).
    """
    internal = (arity ** depth - 1) // (arity - 1) if arity > 1 else depth
    total = internal + arity ** depth
    nodes = []
    for i in range(total):
        first = arity * i + 1
        children = list(range(first, first + arity)) if first < total else []
        parent = None if i == 0 else (i - 1) // arity
        nodes.append((i, parent, children))
    leaves = [i for i, _, ch in nodes if not ch]
    return nodes, leaves


def sibling_leaf_classes(depth: int, arity: int, num_classes: int, per_class: int,
                         seed: int = 0) -> tuple[tuple[int, ...], ...]:
    """Pick ground-truth classes as sibling groups: each class is per_class
    leaf children of one distinct last-level internal node."""
    if per_class > arity:
        raise ValueError(f"per_class {per_class} exceeds arity {arity}")
    nodes, leaves = tree_skeleton(depth, arity)
    leaf_set = set(leaves)
    parents = sorted({nodes[leaf][1] for leaf in leaves})
    if num_classes > len(parents):
        raise ValueError(f"only {len(parents)} leaf parents for {num_classes} classes")
    rng = np.random.default_rng(np.random.SeedSequence([seed, len(leaves)]))
    chosen = rng.choice(len(parents), size=num_classes, replace=False)
    classes = []
    for pi in sorted(int(c) for c in chosen):
        children = [c for c in nodes[parents[pi]][2] if c in leaf_set]
        classes.append(tuple(children[:per_class]))
    return tuple(classes)


def _cell_grid(num_leaves: int, margin: float) -> int:
    grid = math.ceil(math.sqrt(num_leaves))
    width = 1.0 / grid
    if width - 2 * margin <= 0:
        raise ValueError(
            f"infeasible margins: {num_leaves} leaves need cell width {width:.4f} "
            f"> 2 x margin {margin}"
        )
    return grid


def plant_rule(spec: PlantSpec, leaf_ids: list[int]) -> MockRule:
    grid = _cell_grid(len(leaf_ids), spec.margin)
    cell_classes = {}
    for class_index, leaf_set in enumerate(spec.classes):
        for leaf in leaf_set:
            cell = leaf_ids.index(leaf)
            cell_classes[str(cell)] = class_index
    return MockRule(
        kind="leaf-affinity",
        num_classes=max(1, len(spec.classes)),
        seed=spec.seed,
        params={
            "grid_side": grid,
            "axes": [0, 1],
            "cell_classes": cell_classes,
            "noise_rate": spec.noise_rate,
        },
    )


def generate(spec: PlantSpec, out_dir: str | Path) -> tuple[CorpusTree, MockRule, tuple[tuple[int, ...], ...]]:
    """Write a planted corpus directory and its rule/truth sidecars.

    Emits manifest + sample blocks, plus rule.json, truth.json, and
    plant_spec.json so a run is reproducible from the directory alone.
    """
    skeleton, leaf_ids = tree_skeleton(spec.depth, spec.arity)
    for cls in spec.classes:
        for leaf in cls:
            if leaf not in leaf_ids:
                raise ValueError(f"planted class references non-leaf node {leaf}")

    grid = _cell_grid(len(leaf_ids), spec.margin)
    width = 1.0 / grid
    nodes = []
    for node_id, parent, children in skeleton:
        samples = None
        if not children:
            cell = leaf_ids.index(node_id)
            cx, cy = cell % grid, cell // grid
            rng = np.random.default_rng(np.random.SeedSequence([spec.seed, node_id]))
            block = rng.uniform(0.0, 1.0, size=(spec.samples_per_leaf, spec.dims))
            block[:, 0] = rng.uniform(cx * width + spec.margin,
                                      (cx + 1) * width - spec.margin,
                                      size=spec.samples_per_leaf)
            block[:, 1] = rng.uniform(cy * width + spec.margin,
                                      (cy + 1) * width - spec.margin,
                                      size=spec.samples_per_leaf)
            samples = SampleSet((spec.dims,), block.astype(np.float32))
            label = f"leaf-{node_id}"
        else:
            label = "root" if parent is None else f"group-{node_id}"
        nodes.append(CorpusNode(node_id, label, parent, tuple(children), samples))

    tree = CorpusTree(nodes)
    out = Path(out_dir)
    write_corpus(tree, out)
    rule = plant_rule(spec, leaf_ids)
    (out / "rule.json").write_text(rule.to_json() + "\n")
    (out / "truth.json").write_text(
        json.dumps([sorted(cls) for cls in spec.classes], indent=2) + "\n"
    )
    (out / "plant_spec.json").write_text(
        json.dumps(asdict(spec), indent=2, sort_keys=True) + "\n"
    )
    return tree, rule, spec.classes


def recovery_jaccard(report, truth) -> float:
    """|chosen ∩ truth| / |chosen ∪ truth| over leaf-id sets.

    Accepts a per-class search report (reads its chosen_nodes) or a bare
    iterable of node ids.
    """
    chosen = set(getattr(report, "chosen_nodes", report))
    truth = set(truth)
    union = chosen | truth
    if not union:
        return 1.0
    return len(chosen & truth) / len(union)
