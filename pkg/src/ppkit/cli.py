"""Batch command-line frontend chaining the pipeline stages.

Subcommands: ``extract`` (saved HTML page -> cleaned HTML + policy XML
skeleton), ``structure`` (pre-extracted policy HTML -> policy XML),
``train`` (labeled corpus -> model bundles), ``eval`` (bundles ->
per-concept report CSVs), ``compare`` (types x split modes sweep),
``stats`` (concept coverage CSV), ``kappa`` (agreement between two
annotation passes).

Configuration comes from a key=value file (``--config`` flag, or the
``PPKIT_CONFIG`` environment variable) overridden by command-line flags;
flags win. Every command writes its outputs to files and prints only a
short summary to stdout; there are no interactive prompts. Exit code 0
means zero per-item failures; partial progress is reported, never
hidden.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .classifiers import (DEFAULT_MIN_POS, DEFAULT_UPSAMPLE_RATIO,
                          load_bundle, predict_nodes, save_bundle, train_lcn,
                          train_lcpn)
from .corpus import (Corpus, corpus_agreement, corpus_statistics, load_corpus,
                     split_document_level, split_segment_level,
                     write_statistics_csv)
from .errors import ExtractionError, PpkitError
from .evaluation import (DEFAULT_MIN_SUPPORT, compare_frameworks,
                         evaluate_run, format_summary_table,
                         write_report_csv)
from .extraction import (ExtractionConfig, extract_pp_element,
                         find_policy_links, strip_irrelevant_elements)
from .features import (FeatureConfig, fit_resources, load_embeddings,
                       load_keywords, load_shipped_keywords)
from .html_dom import body_or_root, parse_html, serialize_html, text_length
from .ppxml import parse_ppxml, serialize_ppxml, validate_document
from .structure import load_block_model, structure_document
from .taxonomy import Taxonomy, load_shipped_taxonomy, load_taxonomy

CONFIG_ENV = "PPKIT_CONFIG"


@dataclass
class PipelineConfig:
    corpus_dir: str | None = None
    taxonomy_file: str | None = None
    keyword_file: str | None = None
    embedding_store: str | None = None
    model_dir: str = "models"
    report_dir: str = "reports"
    block_model: str | None = None
    r_h: float = 0.55
    min_policy_chars: int = 200
    split_mode: str = "document"
    split_seed: int = 0
    n_test: int | None = None
    test_fraction: float = 0.2
    type_ids: tuple[int, ...] = (1,)
    modes: tuple[str, ...] = ("segment", "document")
    seeds: tuple[int, ...] = (0,)
    min_pos: int = DEFAULT_MIN_POS
    min_support: int = DEFAULT_MIN_SUPPORT
    upsample_ratio: float = DEFAULT_UPSAMPLE_RATIO
    jobs: int = 1


def _parse_int_tuple(raw: str) -> tuple[int, ...]:
    return tuple(int(part) for part in raw.split(",") if part.strip())


def _parse_str_tuple(raw: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in raw.split(",") if part.strip())


_FIELD_PARSERS = {
    "r_h": float,
    "test_fraction": float,
    "upsample_ratio": float,
    "min_policy_chars": int,
    "split_seed": int,
    "n_test": int,
    "min_pos": int,
    "min_support": int,
    "jobs": int,
    "type_ids": _parse_int_tuple,
    "seeds": _parse_int_tuple,
    "modes": _parse_str_tuple,
}


def parse_config_file(path) -> dict[str, str]:
    """key=value lines; blank lines and `#` comments ignored."""
    values: dict[str, str] = {}
    for lineno, line in enumerate(
            Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise PpkitError(f"{path}:{lineno}: expected key=value, "
                             f"got {stripped!r}")
        key, _, value = stripped.partition("=")
        values[key.strip()] = value.strip()
    return values


def build_pipeline_config(config_path: str | None,
                          overrides: dict) -> PipelineConfig:
    """Defaults < config file < flags (flags win)."""
    cfg = PipelineConfig()
    known = {f.name for f in fields(PipelineConfig)}
    path = config_path or os.environ.get(CONFIG_ENV)
    if path:
        for key, raw in parse_config_file(path).items():
            if key not in known:
                raise PpkitError(f"{path}: unknown config key {key!r}")
            parser = _FIELD_PARSERS.get(key, str)
            try:
                cfg = replace(cfg, **{key: parser(raw)})
            except ValueError as exc:
                raise PpkitError(f"{path}: bad value for {key}: {raw!r} "
                                 f"({exc})") from None
    updates = {}
    for key, raw in overrides.items():
        if raw is None or key not in known:
            continue
        parser = _FIELD_PARSERS.get(key, str)
        updates[key] = parser(raw) if isinstance(raw, str) else raw
    return replace(cfg, **updates)


def _load_taxonomy(cfg: PipelineConfig) -> Taxonomy:
    if cfg.taxonomy_file:
        # A user-supplied hierarchy may be any well-formed shape; only the
        # shipped artifact is pinned to its canonical node counts.
        return load_taxonomy(cfg.taxonomy_file, enforce_counts=False)
    return load_shipped_taxonomy()


def _load_keywords(cfg: PipelineConfig, taxonomy: Taxonomy):
    if cfg.keyword_file:
        return load_keywords(cfg.keyword_file, taxonomy)
    needed = [t for t in cfg.type_ids
              if FeatureConfig.from_type_id(t).use_keywords]
    if not needed:
        return None
    if cfg.taxonomy_file:
        # The shipped keyword table names only the shipped concepts.
        raise PpkitError(
            f"keyword_file required for type {needed[0]} with a custom "
            f"taxonomy"
        )
    return load_shipped_keywords(taxonomy)


def _load_corpus(cfg: PipelineConfig, taxonomy: Taxonomy) -> Corpus:
    if not cfg.corpus_dir:
        raise PpkitError("corpus_dir required (set it in the config file or "
                         "pass --corpus-dir)")
    return load_corpus(cfg.corpus_dir, taxonomy)


def _make_split(cfg: PipelineConfig, corpus: Corpus):
    if cfg.split_mode == "document":
        n_test = cfg.n_test
        if n_test is None:
            n_docs = len(corpus.documents)
            n_test = min(max(int(round(cfg.test_fraction * n_docs)), 1),
                         n_docs - 1)
        return split_document_level(corpus, n_test, cfg.split_seed)
    if cfg.split_mode == "segment":
        return split_segment_level(corpus, cfg.test_fraction, cfg.split_seed)
    raise PpkitError(f"unknown split_mode {cfg.split_mode!r}")


def _bundle_dir(cfg: PipelineConfig, type_id: int) -> Path:
    return Path(cfg.model_dir) / (
        f"type{type_id:02d}_{cfg.split_mode}_seed{cfg.split_seed}"
    )


# Subcommands ----------------------------------------------------------------

def _structure_from_html(pp_root, cfg: PipelineConfig, source: str):
    model = load_block_model(cfg.block_model) if cfg.block_model else None
    return structure_document(pp_root, model=model, source=source)


def _write_document_outputs(doc, input_path: Path,
                            out_dir: str | None) -> list[str]:
    """Write `<stem>.ppxml` (and `<stem>.findings.txt` when the validator
    has findings); returns the findings."""
    target_dir = Path(out_dir) if out_dir else input_path.parent
    target_dir.mkdir(parents=True, exist_ok=True)
    (target_dir / f"{input_path.stem}.ppxml").write_bytes(
        serialize_ppxml(doc)
    )
    findings = validate_document(doc)
    findings_path = target_dir / f"{input_path.stem}.findings.txt"
    if findings:
        findings_path.write_text("\n".join(findings) + "\n", encoding="utf-8")
    elif findings_path.exists():
        findings_path.unlink()
    return findings


def cmd_extract(cfg: PipelineConfig, args) -> int:
    failures: list[str] = []
    n_findings = 0
    for name in args.inputs:
        path = Path(name)
        try:
            tree = parse_html(path.read_text(encoding="utf-8",
                                             errors="replace"))
            cleaned = strip_irrelevant_elements(tree)
            clean_dir = Path(args.out_dir) if args.out_dir else path.parent
            clean_dir.mkdir(parents=True, exist_ok=True)
            (clean_dir / f"{path.stem}.clean.html").write_text(
                serialize_html(cleaned), encoding="utf-8"
            )
            pp_element = extract_pp_element(body_or_root(cleaned),
                                            ExtractionConfig(r_h=cfg.r_h))
            n_chars = text_length(pp_element)
            if n_chars < cfg.min_policy_chars:
                links = find_policy_links(tree)
                if links:
                    listing = "\n".join(f"  {text} -> {href}"
                                        for text, href in links)
                    detail = f"candidate policy links:\n{listing}"
                else:
                    detail = "no candidate policy links found"
                raise ExtractionError(
                    f"no policy-bearing element found (best candidate has "
                    f"{n_chars} visible characters, need "
                    f">= {cfg.min_policy_chars}); {detail}"
                )
            doc = _structure_from_html(pp_element, cfg, source=path.name)
            n_findings += len(_write_document_outputs(doc, path,
                                                      args.out_dir))
        except (PpkitError, OSError) as exc:
            failures.append(f"{name}: {exc}")
    return _report_batch("extract", len(args.inputs), failures, n_findings)


def cmd_structure(cfg: PipelineConfig, args) -> int:
    """Like extract, but the input is already the policy content — no
    policy-element search (the escalation path after manual extraction)."""
    failures: list[str] = []
    n_findings = 0
    for name in args.inputs:
        path = Path(name)
        try:
            tree = parse_html(path.read_text(encoding="utf-8",
                                             errors="replace"))
            cleaned = strip_irrelevant_elements(tree)
            doc = _structure_from_html(body_or_root(cleaned), cfg,
                                       source=path.name)
            n_findings += len(_write_document_outputs(doc, path,
                                                      args.out_dir))
        except (PpkitError, OSError) as exc:
            failures.append(f"{name}: {exc}")
    return _report_batch("structure", len(args.inputs), failures, n_findings)


def _report_batch(verb: str, n_inputs: int, failures: list[str],
                  n_findings: int) -> int:
    ok = n_inputs - len(failures)
    print(f"{verb}: {ok}/{n_inputs} inputs processed, "
          f"{n_findings} validation findings")
    for line in failures:
        print(f"failed: {line}", file=sys.stderr)
    return 1 if failures else 0


def cmd_train(cfg: PipelineConfig, args) -> int:
    taxonomy = _load_taxonomy(cfg)
    corpus = _load_corpus(cfg, taxonomy)
    split = _make_split(cfg, corpus)
    keywords = _load_keywords(cfg, taxonomy)
    store = (load_embeddings(cfg.embedding_store)
             if cfg.embedding_store else None)
    failures: list[str] = []
    for type_id in cfg.type_ids:
        try:
            feature_cfg = FeatureConfig.from_type_id(type_id)
            resources = fit_resources(feature_cfg, corpus,
                                      split.train_node_keys(corpus), taxonomy,
                                      keywords=keywords, store=store)
            if feature_cfg.architecture == "lcn":
                classifier = train_lcn(
                    corpus, split, feature_cfg, taxonomy, resources,
                    min_pos=cfg.min_pos, upsample_ratio=cfg.upsample_ratio,
                    seed=cfg.split_seed,
                )
            else:
                classifier = train_lcpn(corpus, split, feature_cfg, taxonomy,
                                        resources, seed=cfg.split_seed)
            bundle = _bundle_dir(cfg, type_id)
            save_bundle(classifier, taxonomy, bundle, resources=resources,
                        split=split)
            print(f"train: type {type_id} -> {bundle} "
                  f"({len(classifier.models)} models, "
                  f"{len(classifier.skipped)} skipped)")
        except PpkitError as exc:
            failures.append(f"type {type_id}: {exc}")
    for line in failures:
        print(f"failed: {line}", file=sys.stderr)
    return 1 if failures else 0


def cmd_eval(cfg: PipelineConfig, args) -> int:
    taxonomy = _load_taxonomy(cfg)
    corpus = _load_corpus(cfg, taxonomy)
    store = (load_embeddings(cfg.embedding_store)
             if cfg.embedding_store else None)
    report_dir = Path(cfg.report_dir)
    report_dir.mkdir(parents=True, exist_ok=True)
    failures: list[str] = []
    for type_id in cfg.type_ids:
        try:
            bundle = _bundle_dir(cfg, type_id)
            if not bundle.is_dir():
                raise PpkitError(f"model bundle not found: {bundle} "
                                 f"(run `ppkit train` first)")
            classifier, resources, split = load_bundle(bundle, taxonomy)
            if classifier.cfg.source == "embedding":
                if store is None:
                    raise PpkitError(
                        f"embedding store required for type {type_id}"
                    )
                resources.store = store
            if split is None:
                split = _make_split(cfg, corpus)
            test_keys = split.test_node_keys(corpus)
            predictions = predict_nodes(classifier, corpus, test_keys,
                                        taxonomy, resources)
            report = evaluate_run(predictions, corpus, test_keys, taxonomy,
                                  min_support=cfg.min_support)
            out = report_dir / (f"report_type{type_id:02d}_{split.mode}"
                                f"_seed{split.seed}.csv")
            write_report_csv(report, out, type_id, split.mode)
            print(f"eval: type {type_id} ({split.mode}, seed {split.seed}) "
                  f"macro-F1 level-1 {report.macro_f1_level1:.6f}, "
                  f"all {report.macro_f1_all:.6f} -> {out}")
        except PpkitError as exc:
            failures.append(f"type {type_id}: {exc}")
    for line in failures:
        print(f"failed: {line}", file=sys.stderr)
    return 1 if failures else 0


def cmd_compare(cfg: PipelineConfig, args) -> int:
    taxonomy = _load_taxonomy(cfg)
    corpus = _load_corpus(cfg, taxonomy)
    keywords = _load_keywords(cfg, taxonomy)
    store = (load_embeddings(cfg.embedding_store)
             if cfg.embedding_store else None)
    result = compare_frameworks(
        corpus, taxonomy, type_ids=list(cfg.type_ids),
        modes=list(cfg.modes), seeds=list(cfg.seeds), keywords=keywords,
        store=store, test_fraction=cfg.test_fraction, min_pos=cfg.min_pos,
        min_support=cfg.min_support, upsample_ratio=cfg.upsample_ratio,
        out_dir=cfg.report_dir,
    )
    print(format_summary_table(result), end="")
    print(f"compare: {len(result.runs)} runs -> {cfg.report_dir}")
    return 1 if result.skipped else 0


def cmd_stats(cfg: PipelineConfig, args) -> int:
    taxonomy = _load_taxonomy(cfg)
    corpus = _load_corpus(cfg, taxonomy)
    rows = corpus_statistics(corpus, taxonomy,
                             descendant_inclusive=args.descendant_inclusive)
    report_dir = Path(cfg.report_dir)
    report_dir.mkdir(parents=True, exist_ok=True)
    out = report_dir / "coverage.csv"
    write_statistics_csv(rows, out)
    summary = corpus.summary()
    print(f"stats: {summary['documents']} documents, "
          f"{summary['titles']} titles, {summary['paragraphs']} paragraphs, "
          f"{summary['labeled_nodes']} labeled nodes -> {out}")
    return 0


def cmd_kappa(cfg: PipelineConfig, args) -> int:
    taxonomy = _load_taxonomy(cfg)
    corpus_a = load_corpus(args.corpus_a, taxonomy)
    corpus_b = load_corpus(args.corpus_b, taxonomy)
    agreement = corpus_agreement(corpus_a, corpus_b, taxonomy)
    report_dir = Path(cfg.report_dir)
    report_dir.mkdir(parents=True, exist_ok=True)
    out = report_dir / "kappa.csv"
    with open(out, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["doc_id", "kappa"])
        for doc_id, value in sorted(agreement["per_document"].items()):
            writer.writerow([doc_id, f"{value:.6f}"])
    print(f"kappa: mean {agreement['mean']:.6f} over "
          f"{len(agreement['per_document'])} documents "
          f"(unit: {agreement['unit']}) -> {out}")
    return 0


# Argument parsing -----------------------------------------------------------

def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("pipeline configuration")
    group.add_argument("--corpus-dir", dest="corpus_dir")
    group.add_argument("--taxonomy-file", dest="taxonomy_file")
    group.add_argument("--keyword-file", dest="keyword_file")
    group.add_argument("--embedding-store", dest="embedding_store")
    group.add_argument("--model-dir", dest="model_dir")
    group.add_argument("--report-dir", dest="report_dir")
    group.add_argument("--block-model", dest="block_model")
    group.add_argument("--r-h", dest="r_h")
    group.add_argument("--min-policy-chars", dest="min_policy_chars")
    group.add_argument("--split-mode", dest="split_mode",
                       choices=["document", "segment"])
    group.add_argument("--split-seed", dest="split_seed")
    group.add_argument("--n-test", dest="n_test")
    group.add_argument("--test-fraction", dest="test_fraction")
    group.add_argument("--types", dest="type_ids",
                       help="comma-separated feature type ids (1-12)")
    group.add_argument("--modes", dest="modes",
                       help="comma-separated split modes for compare")
    group.add_argument("--seeds", dest="seeds",
                       help="comma-separated seeds for compare")
    group.add_argument("--min-pos", dest="min_pos")
    group.add_argument("--min-support", dest="min_support")
    group.add_argument("--upsample-ratio", dest="upsample_ratio")
    group.add_argument("--jobs", dest="jobs",
                       help="accepted for interface stability; processing "
                            "is sequential and deterministic")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ppkit",
        description="Privacy-policy structuring and concept-classification "
                    "pipeline.",
    )
    parser.add_argument("--config", help=f"key=value config file (default: "
                                         f"${CONFIG_ENV})")
    sub = parser.add_subparsers(dest="command", required=True)

    p_extract = sub.add_parser(
        "extract", help="saved HTML pages -> cleaned HTML + policy XML")
    p_extract.add_argument("inputs", nargs="+")
    p_extract.add_argument("--out-dir", dest="out_dir")
    _add_config_flags(p_extract)
    p_extract.set_defaults(func=cmd_extract)

    p_structure = sub.add_parser(
        "structure", help="pre-extracted policy HTML -> policy XML")
    p_structure.add_argument("inputs", nargs="+")
    p_structure.add_argument("--out-dir", dest="out_dir")
    _add_config_flags(p_structure)
    p_structure.set_defaults(func=cmd_structure)

    p_train = sub.add_parser("train", help="labeled corpus -> model bundles")
    _add_config_flags(p_train)
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="model bundles -> report CSVs")
    _add_config_flags(p_eval)
    p_eval.set_defaults(func=cmd_eval)

    p_compare = sub.add_parser(
        "compare", help="types x split-modes sweep with summary table")
    _add_config_flags(p_compare)
    p_compare.set_defaults(func=cmd_compare)

    p_stats = sub.add_parser("stats", help="per-concept coverage CSV")
    p_stats.add_argument("--descendant-inclusive", action="store_true")
    _add_config_flags(p_stats)
    p_stats.set_defaults(func=cmd_stats)

    p_kappa = sub.add_parser(
        "kappa", help="agreement between two annotation passes")
    p_kappa.add_argument("corpus_a")
    p_kappa.add_argument("corpus_b")
    _add_config_flags(p_kappa)
    p_kappa.set_defaults(func=cmd_kappa)
    return parser


_CONFIG_KEYS = (
    "corpus_dir", "taxonomy_file", "keyword_file", "embedding_store",
    "model_dir", "report_dir", "block_model", "r_h", "min_policy_chars",
    "split_mode", "split_seed", "n_test", "test_fraction", "type_ids",
    "modes", "seeds", "min_pos", "min_support", "upsample_ratio", "jobs",
)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = {key: getattr(args, key, None) for key in _CONFIG_KEYS}
        cfg = build_pipeline_config(args.config, overrides)
        return args.func(cfg, args)
    except PpkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
