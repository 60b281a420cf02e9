"""Hierarchical corpus: a rooted labeled tree whose leaves own sample blocks.

Internal nodes stand for the union of their children; the union is never
materialized, callers iterate leaf descendants instead. Trees are immutable
after construction and safe to share across threads (ancestor tables are
precomputed once).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CorpusError

MANIFEST_NAME = "manifest.json"
SAMPLE_DTYPE = np.dtype("<f4")


@dataclass(frozen=True)
class SampleSet:
    """A block of samples sharing one shape, one row per sample, values in [0,1]."""

    shape: tuple[int, ...]
    data: np.ndarray  # (count, prod(shape)) float32, row-major

    def __post_init__(self):
        width = int(np.prod(self.shape))
        if self.data.ndim != 2 or self.data.shape[1] != width:
            raise CorpusError(
                f"sample block has row width {self.data.shape!r}, expected (_, {width})"
            )
        if self.data.dtype != np.float32:
            raise CorpusError(f"sample block dtype {self.data.dtype}, expected float32")

    def __len__(self) -> int:
        return self.data.shape[0]

    def row(self, i: int) -> np.ndarray:
        return self.data[i]

    def take(self, indices) -> "SampleSet":
        return SampleSet(self.shape, self.data[np.asarray(indices, dtype=int)])

    @staticmethod
    def concat(parts: list["SampleSet"]) -> "SampleSet":
        if not parts:
            raise CorpusError("cannot concatenate zero sample sets")
        shape = parts[0].shape
        for p in parts:
            if p.shape != shape:
                raise CorpusError("sample shape mismatch in concatenation")
        return SampleSet(shape, np.concatenate([p.data for p in parts], axis=0))


@dataclass(frozen=True)
class CorpusNode:
    id: int
    label: str
    parent: int | None
    children: tuple[int, ...]
    samples: SampleSet | None = None

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass(frozen=True)
class Selection:
    """Per-class set of (leaf node-id, sample index) pairs; deduplicated and sorted."""

    class_index: int
    members: tuple[tuple[int, int], ...]

    def __post_init__(self):
        deduped = tuple(sorted(set(self.members)))
        object.__setattr__(self, "members", deduped)

    def __len__(self) -> int:
        return len(self.members)

    def validate(self, tree: "CorpusTree") -> None:
        for leaf, idx in self.members:
            node = tree.node(leaf)
            if node.samples is None:
                raise CorpusError(f"selection references non-leaf node {leaf}")
            if not 0 <= idx < len(node.samples):
                raise CorpusError(f"selection index {idx} out of range for leaf {leaf}")

    def leaf_ids(self) -> list[int]:
        return sorted({leaf for leaf, _ in self.members})

    def gather(self, tree: "CorpusTree") -> SampleSet:
        """Materialize the selected original samples, in member order."""
        rows = [tree.node(leaf).samples.row(idx) for leaf, idx in self.members]
        shape = tree.sample_shape()
        return SampleSet(shape, np.stack(rows) if rows else
                         np.zeros((0, int(np.prod(shape))), dtype=np.float32))


class CorpusTree:
    """Validated rooted tree over dense node ids 0..N-1 with tree-metric queries."""

    def __init__(self, nodes: list[CorpusNode]):
        self.nodes = list(nodes)
        self._validate_structure()
        self._build_ancestor_tables()
        self._leaf_ids = [n.id for n in self.nodes if n.is_leaf]
        self._validate_samples()

    # -- construction / validation -------------------------------------------

    def _validate_structure(self) -> None:
        n = len(self.nodes)
        if n == 0:
            raise CorpusError("corpus has no nodes")
        for pos, node in enumerate(self.nodes):
            if node.id != pos:
                raise CorpusError(f"node ids must be dense 0..{n - 1}; found {node.id} at {pos}")
            if list(node.children) != sorted(set(node.children)):
                raise CorpusError(f"children of node {node.id} must be sorted and unique")
            for c in node.children:
                if not 0 <= c < n:
                    raise CorpusError(f"dangling node reference: child {c} of node {node.id}")
                if c == node.id:
                    raise CorpusError(f"node {node.id} lists itself as child")
            if node.parent is not None and not 0 <= node.parent < n:
                raise CorpusError(f"dangling node reference: parent {node.parent} of node {node.id}")

        roots = [node.id for node in self.nodes if node.parent is None]
        if len(roots) != 1:
            raise CorpusError(f"expected exactly one root, found {len(roots)}")
        self.root = roots[0]

        # parent/child cross-consistency
        for node in self.nodes:
            for c in node.children:
                if self.nodes[c].parent != node.id:
                    raise CorpusError(
                        f"node {c} has parent {self.nodes[c].parent} but is a child of {node.id}"
                    )
        child_counts = sum(len(node.children) for node in self.nodes)
        if child_counts != n - 1:
            raise CorpusError("parent/child links do not form a tree")

        # reachability from the root doubles as the cycle check
        seen = [False] * n
        stack = [self.root]
        order = []
        while stack:
            v = stack.pop()
            if seen[v]:
                raise CorpusError("cycle detected in corpus tree")
            seen[v] = True
            order.append(v)
            stack.extend(self.nodes[v].children)
        if not all(seen):
            raise CorpusError("corpus tree is disconnected")
        self._dfs_order = order

    def _build_ancestor_tables(self) -> None:
        # plain lists: scalar indexing dominates lca(), and lists beat ndarray there
        n = len(self.nodes)
        depth = [0] * n
        for v in self._dfs_order:
            p = self.nodes[v].parent
            depth[v] = 0 if p is None else depth[p] + 1
        self._depth = depth

        levels = max(1, int(math.ceil(math.log2(max(2, n)))))
        up = [[v if self.nodes[v].parent is None else self.nodes[v].parent
               for v in range(n)]]
        for k in range(1, levels):
            prev = up[k - 1]
            up.append([prev[prev[v]] for v in range(n)])
        self._up = up

    def _validate_samples(self) -> None:
        shape = None
        for node in self.nodes:
            if node.is_leaf:
                if node.samples is None or len(node.samples) == 0:
                    raise CorpusError(f"leaf {node.id} has no samples")
                if shape is None:
                    shape = node.samples.shape
                elif node.samples.shape != shape:
                    raise CorpusError(
                        f"sample shape mismatch: leaf {node.id} has {node.samples.shape}, "
                        f"expected {shape}"
                    )
                block = node.samples.data
                if block.size and (block.min() < 0.0 or block.max() > 1.0):
                    raise CorpusError(f"leaf {node.id} has sample values outside [0,1]")
            elif node.samples is not None:
                raise CorpusError(f"internal node {node.id} must not carry samples")
        self._sample_shape = shape

    # -- queries ---------------------------------------------------------------

    def __len__(self) -> int:
        return len(self.nodes)

    def node(self, node_id: int) -> CorpusNode:
        if not 0 <= node_id < len(self.nodes):
            raise CorpusError(f"invalid node id {node_id}")
        return self.nodes[node_id]

    def sample_shape(self) -> tuple[int, ...]:
        return self._sample_shape

    def leaf_ids(self) -> list[int]:
        """All leaf node-ids in ascending order."""
        return list(self._leaf_ids)

    def leaf_count(self) -> int:
        return len(self._leaf_ids)

    def depth_of(self, node_id: int) -> int:
        self.node(node_id)
        return self._depth[node_id]

    def max_depth(self) -> int:
        return max(self._depth)

    def leaf_descendants(self, node_id: int) -> list[int]:
        """Leaves under a node (the node itself if it is a leaf), ascending."""
        self.node(node_id)
        out = []
        stack = [node_id]
        while stack:
            v = stack.pop()
            if self.nodes[v].is_leaf:
                out.append(v)
            else:
                stack.extend(self.nodes[v].children)
        return sorted(out)

    def lca(self, a: int, b: int) -> int:
        n = len(self.nodes)
        if not (0 <= a < n and 0 <= b < n):
            raise CorpusError(f"invalid node id {a if not 0 <= a < n else b}")
        depth = self._depth
        up = self._up
        da, db = depth[a], depth[b]
        if da < db:
            a, b, da, db = b, a, db, da
        diff = da - db
        k = 0
        while diff:
            if diff & 1:
                a = up[k][a]
            diff >>= 1
            k += 1
        if a == b:
            return a
        for k in range(len(up) - 1, -1, -1):
            row = up[k]
            if row[a] != row[b]:
                a = row[a]
                b = row[b]
        return up[0][a]

    def distance(self, a: int, b: int) -> int:
        """Edge count of the unique shortest path between two nodes."""
        c = self.lca(a, b)
        return self._depth[a] + self._depth[b] - 2 * self._depth[c]

    def closeness(self, a: int, b: int) -> float:
        """Proximity in (0,1], decaying with path length: 1/(1+distance)."""
        return 1.0 / (1.0 + self.distance(a, b))


# -- interface-level aliases for the tree-metric queries ------------------------

def tree_distance(tree: CorpusTree, a: int, b: int) -> int:
    return tree.distance(a, b)


def closeness(tree: CorpusTree, a: int, b: int) -> float:
    return tree.closeness(a, b)


def leaf_ids(tree: CorpusTree) -> list[int]:
    return tree.leaf_ids()


# -- on-disk format --------------------------------------------------------------

def load_corpus(path: str | Path) -> CorpusTree:
    """Load and validate a corpus directory (manifest.json + raw f32 blocks)."""
    root = Path(path)
    manifest_path = root / MANIFEST_NAME
    if not manifest_path.is_file():
        raise CorpusError(f"missing {MANIFEST_NAME} in {root}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as e:
        raise CorpusError(f"malformed manifest: {e}") from e
    if not isinstance(manifest, dict) or "nodes" not in manifest:
        raise CorpusError("malformed manifest: missing 'nodes' list")

    entries = manifest["nodes"]
    nodes: list[CorpusNode] = []
    for entry in sorted(entries, key=lambda e: e.get("id", -1)):
        try:
            node_id = int(entry["id"])
            label = str(entry["label"])
            parent = entry["parent"]
            children = tuple(int(c) for c in entry["children"])
        except (KeyError, TypeError, ValueError) as e:
            raise CorpusError(f"malformed manifest node entry: {entry!r}") from e
        parent = None if parent is None else int(parent)

        samples = None
        if "samples_file" in entry:
            try:
                shape = tuple(int(d) for d in entry["shape"])
                count = int(entry["count"])
            except (KeyError, TypeError, ValueError) as e:
                raise CorpusError(f"node {node_id}: samples_file needs shape and count") from e
            block_path = root / entry["samples_file"]
            if not block_path.is_file():
                raise CorpusError(f"node {node_id}: missing sample block {block_path.name}")
            width = int(np.prod(shape))
            raw = np.fromfile(block_path, dtype=SAMPLE_DTYPE)
            if raw.size != count * width:
                raise CorpusError(
                    f"node {node_id}: block {block_path.name} holds {raw.size} values, "
                    f"expected {count * width}"
                )
            samples = SampleSet(shape, raw.reshape(count, width))
        nodes.append(CorpusNode(node_id, label, parent, children, samples))

    return CorpusTree(nodes)


def write_corpus(tree: CorpusTree, path: str | Path) -> Path:
    """Write a corpus directory; load_corpus(write_corpus(t)) is bit-exact."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    for node in tree.nodes:
        entry: dict = {
            "id": node.id,
            "label": node.label,
            "parent": node.parent,
            "children": list(node.children),
        }
        if node.samples is not None:
            block_name = f"node_{node.id:05d}.f32"
            node.samples.data.astype(SAMPLE_DTYPE, copy=False).tofile(root / block_name)
            entry["samples_file"] = block_name
            entry["shape"] = list(node.samples.shape)
            entry["count"] = len(node.samples)
        entries.append(entry)
    manifest = {"nodes": entries}
    (root / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2) + "\n")
    return root
