"""Command-line entry points.

Subcommands: search, score, export, verify-labels, gen-synthetic, info.
Every flag has a config-file equivalent (JSON file named by the
DOMAIN_SCOPE_CONFIG environment variable); explicit flags win. Exit codes:
0 ok, 2 corpus error, 3 oracle error, 4 config error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

from .corpus import load_corpus
from .errors import ConfigError, CorpusError, OracleError, OutOfVocabulary
from .expansion import ExpansionConfig
from .labelsim import load_embeddings, verify_report
from .oracle import parse_oracle_spec
from .report import build_run_report, format_report, load_report
from .scoring import functional_score
from .search import SearchConfig, capped_indices, search_model
from .synthetic import PlantSpec, generate, sibling_leaf_classes

EXIT_OK = 0
EXIT_CORPUS = 2
EXIT_ORACLE = 3
EXIT_CONFIG = 4

CONFIG_ENV = "DOMAIN_SCOPE_CONFIG"

# flag destinations that a config file may set
_CONFIGURABLE = {
    "oracle", "corpus", "alpha", "theta", "eta", "k", "variants", "epsilon",
    "seed", "workers", "budget", "out", "leaf_cap", "survivor_cap", "suite",
    "max_translate", "max_rotate_deg", "max_perspective_jitter", "batch_size",
}


def _search_flags(p: argparse.ArgumentParser, need_oracle=True, need_corpus=True):
    p.add_argument("--oracle", required=False,
                   help="oracle spec: http(s) URL, mock:<rule.json>, or mock:<kind>,n=..,seed=..")
    p.add_argument("--corpus", required=False, help="corpus directory")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--k", type=int, default=None, help="fixed cluster count (default: silhouette scan)")
    p.add_argument("--variants", type=int, default=None, help="expansion variants per sample")
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--max-translate", dest="max_translate", type=float, default=None)
    p.add_argument("--max-rotate-deg", dest="max_rotate_deg", type=float, default=None)
    p.add_argument("--max-perspective-jitter", dest="max_perspective_jitter",
                   type=float, default=None)
    p.add_argument("--suite", choices=["full-geometric", "perturb-only"], default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--budget", type=int, default=None, help="max oracle queries")
    p.add_argument("--leaf-cap", dest="leaf_cap", type=int, default=None,
                   help="samples scored per leaf")
    p.add_argument("--survivor-cap", dest="survivor_cap", type=int, default=None)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="domainscope",
        description="Infer the training-data domain of a hard-label black-box classifier",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("search", help="run the per-class domain search and write a report")
    _search_flags(p)
    p.add_argument("--out", default=None, help="report file path")

    p = sub.add_parser("score", help="print the functional score of one leaf for one class")
    _search_flags(p)
    p.add_argument("--class-index", type=int, required=True)
    p.add_argument("--node", type=int, required=True)

    p = sub.add_parser("export", help="write the filtered per-class datasets from a report")
    p.add_argument("--report", required=True)
    p.add_argument("--corpus", default=None)
    p.add_argument("--out", default=None, help="output dataset directory")

    p = sub.add_parser("verify-labels", help="compare chosen node labels against a hypothesis")
    p.add_argument("--report", required=True)
    p.add_argument("--embeddings", required=True, help="token-vector text file")
    p.add_argument("--class-index", type=int, required=True)
    p.add_argument("--hypothesis", required=True)

    p = sub.add_parser("gen-synthetic", help="generate a planted corpus with rule and truth")
    p.add_argument("--out", default=None)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--arity", type=int, default=3)
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--per-class", dest="per_class", type=int, default=3)
    p.add_argument("--dims", type=int, default=16)
    p.add_argument("--samples-per-leaf", dest="samples_per_leaf", type=int, default=60)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("info", help="describe a corpus and/or an oracle")
    p.add_argument("--corpus", default=None)
    p.add_argument("--oracle", default=None)
    return parser


def _apply_config_file(args: argparse.Namespace) -> None:
    path = os.environ.get(CONFIG_ENV)
    if not path:
        return
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    for key, value in raw.items():
        dest = key.replace("-", "_")
        if dest not in _CONFIGURABLE:
            raise ConfigError(f"unknown config key {key!r} in {path}")
        if hasattr(args, dest) and getattr(args, dest) is None:
            setattr(args, dest, value)


def _search_config(args) -> SearchConfig:
    def pick(name, default):
        value = getattr(args, name, None)
        return default if value is None else value

    seed = int(pick("seed", 0))
    try:
        return SearchConfig(
            theta=float(pick("theta", 0.5)),
            leaf_sample_cap=int(pick("leaf_cap", 50)),
            alpha=float(pick("alpha", 0.5)),
            eta=float(pick("eta", 4.0)),
            k_override=getattr(args, "k", None),
            survivor_cap=int(pick("survivor_cap", 25)),
            workers=int(pick("workers", 4)),
            seed=seed,
        )
    except ValueError as e:
        raise ConfigError(str(e)) from e


def _expansion_from(args, tree, cfg: SearchConfig) -> ExpansionConfig:
    def pick(name, default):
        value = getattr(args, name, None)
        return default if value is None else value

    base = cfg.expansion_for(tree)
    return ExpansionConfig(
        variants_per_sample=int(pick("variants", base.variants_per_sample)),
        epsilon=float(pick("epsilon", base.epsilon)),
        max_translate=float(pick("max_translate", base.max_translate)),
        max_rotate_deg=float(pick("max_rotate_deg", base.max_rotate_deg)),
        max_perspective_jitter=float(pick("max_perspective_jitter",
                                          base.max_perspective_jitter)),
        seed=cfg.seed,
        suite=pick("suite", base.suite),
    )


def _require(args, name: str):
    value = getattr(args, name, None)
    if value is None:
        raise ConfigError(f"--{name.replace('_', '-')} is required (flag or config file)")
    return value


def _open_oracle(args):
    spec = _require(args, "oracle")
    kwargs = {}
    if getattr(args, "budget", None) is not None:
        kwargs["budget"] = int(args.budget)
    if getattr(args, "batch_size", None) is not None:
        kwargs["batch_size"] = int(args.batch_size)
    if getattr(args, "workers", None) is not None:
        kwargs["workers"] = int(args.workers)
    return parse_oracle_spec(spec, **kwargs)


# -- subcommands ---------------------------------------------------------------

def cmd_search(args) -> int:
    cfg = _search_config(args)
    tree = load_corpus(_require(args, "corpus"))
    oracle = _open_oracle(args)
    cfg = replace(cfg, expansion=_expansion_from(args, tree, cfg))
    out = Path(_require(args, "out"))

    started = time.monotonic()
    reports = search_model(oracle, tree, cfg)
    elapsed = time.monotonic() - started
    run = build_run_report(oracle, tree, cfg, reports,
                           oracle_spec=args.oracle, corpus_path=str(args.corpus),
                           wall_time_s=elapsed)
    text = format_report(run)
    tmp = out.with_name(out.name + ".tmp")
    tmp.write_text(text)
    tmp.replace(out)

    found = sum(1 for r in reports if r.found)
    print(f"searched {len(reports)} classes: {found} found, "
          f"{len(reports) - found} not found", file=sys.stderr)
    print(f"queries: {oracle.query_count}  wall_time: {elapsed:.2f}s", file=sys.stderr)
    print(f"report written to {out}", file=sys.stderr)
    return EXIT_OK


def cmd_score(args) -> int:
    cfg = _search_config(args)
    tree = load_corpus(_require(args, "corpus"))
    oracle = _open_oracle(args)
    cfg = replace(cfg, expansion=_expansion_from(args, tree, cfg))
    if args.node not in tree.leaf_ids():
        raise CorpusError(f"node {args.node} is not a leaf of the corpus")
    if not 0 <= args.class_index < oracle.info():
        raise ConfigError(f"class index {args.class_index} out of range")
    subset = tree.node(args.node).samples.take(capped_indices(tree, args.node, cfg))
    score = functional_score(oracle, args.class_index, subset, cfg.expansion)
    print(f"{score:.4f}")
    return EXIT_OK


def cmd_export(args) -> int:
    run = load_report(args.report)
    corpus_path = args.corpus or run.corpus_path
    tree = load_corpus(corpus_path)
    found = [r for r in run.class_reports if r.found]
    if not found:
        raise ConfigError("report contains no found classes; nothing to export")
    out = Path(_require(args, "out"))
    out.mkdir(parents=True, exist_ok=True)

    entries = []
    for r in found:
        r.selection.validate(tree)
        block = r.selection.gather(tree)
        name = f"class_{r.class_index:03d}.f32"
        block.data.astype("<f4").tofile(out / name)
        entries.append({
            "class_index": r.class_index,
            "samples_file": name,
            "count": len(block),
            "shape": list(block.shape),
        })
    manifest = {"source_report": str(args.report), "classes": entries}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"exported {len(entries)} classes to {out}", file=sys.stderr)
    return EXIT_OK


def cmd_verify_labels(args) -> int:
    run = load_report(args.report)
    matches = [r for r in run.class_reports if r.class_index == args.class_index]
    if not matches:
        raise ConfigError(f"report has no class {args.class_index}")
    report = matches[0]
    if not report.found:
        raise ConfigError(f"class {args.class_index} was not found; nothing to verify")
    table = load_embeddings(args.embeddings)
    try:
        summary = verify_report(table, report, args.hypothesis)
    except OutOfVocabulary as e:
        raise ConfigError(str(e)) from e
    for node_id, label, sim in summary.per_node:
        value = "oov" if sim is None else f"{sim:.4f}"
        print(f"{node_id}\t{label}\t{value}")
    mean = "oov" if summary.mean is None else f"{summary.mean:.4f}"
    print(f"mean\t{summary.hypothesis}\t{mean}")
    return EXIT_OK


def cmd_gen_synthetic(args) -> int:
    seed = int(args.seed) if args.seed is not None else 0
    try:
        classes = sibling_leaf_classes(args.depth, args.arity, args.classes,
                                       args.per_class, seed)
        spec = PlantSpec(
            depth=args.depth, arity=args.arity, dims=args.dims,
            samples_per_leaf=args.samples_per_leaf, classes=classes,
            noise_rate=args.noise, seed=seed,
        )
        out = Path(_require(args, "out"))
        tree, rule, truth = generate(spec, out)
    except ValueError as e:
        raise ConfigError(str(e)) from e
    print(f"corpus: {len(tree)} nodes, {tree.leaf_count()} leaves -> {out}", file=sys.stderr)
    print(f"rule: {out / 'rule.json'}  truth: {out / 'truth.json'}", file=sys.stderr)
    return EXIT_OK


def cmd_info(args) -> int:
    if args.corpus is None and args.oracle is None:
        raise ConfigError("info needs --corpus and/or --oracle")
    if args.corpus is not None:
        tree = load_corpus(args.corpus)
        sample_count = sum(len(tree.node(l).samples) for l in tree.leaf_ids())
        print(f"corpus: {args.corpus}")
        print(f"  nodes: {len(tree)}")
        print(f"  leaves: {tree.leaf_count()}")
        print(f"  depth: {tree.max_depth()}")
        print(f"  sample_shape: {'x'.join(str(d) for d in tree.sample_shape())}")
        print(f"  samples: {sample_count}")
    if args.oracle is not None:
        oracle = _open_oracle(args)
        print(f"oracle: {args.oracle}")
        print(f"  num_classes: {oracle.info()}")
    return EXIT_OK


_COMMANDS = {
    "search": cmd_search,
    "score": cmd_score,
    "export": cmd_export,
    "verify-labels": cmd_verify_labels,
    "gen-synthetic": cmd_gen_synthetic,
    "info": cmd_info,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config_file(args)
        return _COMMANDS[args.command](args)
    except CorpusError as e:
        print(f"corpus error: {e}", file=sys.stderr)
        return EXIT_CORPUS
    except OracleError as e:
        print(f"oracle error: {e}", file=sys.stderr)
        return EXIT_ORACLE
    except (ConfigError, ValueError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
