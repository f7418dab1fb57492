"""Per-concept scoring and the segment-vs-document comparison harness.

The central measurement this module supports: the same classifier family
scored under a segment-level split (nodes pooled across documents before
splitting, so a document can straddle train and test) versus a
document-level split (whole documents held out). Pooled splitting leaks
document-specific vocabulary into training and overstates performance on
genuinely unseen policies; ``compare_frameworks`` makes that gap visible
per feature type.

Gold positives are descendant-inclusive by default — a node counts
positive for a concept when its label set contains the concept or any
descendant — mirroring how per-concept training positives are defined.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from .classifiers import (DEFAULT_MIN_POS, DEFAULT_UPSAMPLE_RATIO,
                          HierarchyClassifier, expanded_labels, predict_nodes,
                          train_lcn, train_lcpn)
from .corpus import (Corpus, NodeKey, SplitSpec, save_split,
                     split_document_level, split_segment_level)
from .errors import EvaluationError, FeatureError
from .features import (EmbeddingStore, FeatureConfig, KeywordTable,
                       fit_resources)
from .forest import ForestConfig
from .network import NetworkConfig
from .taxonomy import Taxonomy

DEFAULT_MIN_SUPPORT = 5
REPORT_HEADER = ["type_id", "mode", "concept_id", "level", "tp", "fp", "fn",
                 "tn", "precision", "recall", "f1", "support"]
SUMMARY_HEADER = ["type_id", "architecture", "mode", "seed",
                  "macro_f1_level1", "macro_f1_all", "n_qualified",
                  "n_qualified_level1", "best_f1_count"]


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def precision_recall_f1(counts: ConfusionCounts) -> tuple[float, float, float]:
    """(P, R, F1) with the zero-denominator-means-zero convention."""
    tp, fp, fn = counts.tp, counts.fp, counts.fn
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    if precision + recall == 0.0:
        return precision, recall, 0.0
    f1 = 2.0 * precision * recall / (precision + recall)
    return precision, recall, f1


@dataclass(frozen=True)
class ConceptMetrics:
    concept_id: str
    level: int
    counts: ConfusionCounts
    precision: float
    recall: float
    f1: float
    support: int  # gold positive test nodes = tp + fn


@dataclass
class MetricsReport:
    rows: list[ConceptMetrics]
    qualified: tuple[str, ...]  # support >= min_support, taxonomy order
    qualified_level1: tuple[str, ...]
    macro_f1_level1: float
    macro_f1_all: float
    min_support: int
    n_nodes: int

    def row(self, concept_id: str) -> ConceptMetrics:
        for entry in self.rows:
            if entry.concept_id == concept_id:
                return entry
        raise EvaluationError(f"unknown concept id {concept_id!r} in report")


def gold_label_sets(corpus: Corpus, keys: list[NodeKey], taxonomy: Taxonomy,
                    exact_labels: bool = False) -> dict[NodeKey, frozenset]:
    """Per-node gold concept sets (ancestor-expanded unless exact)."""
    out = {}
    for key in keys:
        labels = corpus.nodes[key].labels
        out[key] = (frozenset(labels) if exact_labels
                    else expanded_labels(labels, taxonomy))
    return out


def evaluate_run(predictions: dict[NodeKey, set], corpus: Corpus,
                 test_keys: list[NodeKey], taxonomy: Taxonomy,
                 min_support: int = DEFAULT_MIN_SUPPORT,
                 exact_labels: bool = False) -> MetricsReport:
    """Per-concept confusion over the test nodes, plus macro averages over
    the concepts whose gold support reaches min_support."""
    if set(predictions) != set(test_keys):
        raise EvaluationError("prediction/gold key mismatch")
    gold = gold_label_sets(corpus, test_keys, taxonomy,
                           exact_labels=exact_labels)
    rows = []
    for concept_id in taxonomy.ordered_ids:
        tp = fp = fn = tn = 0
        for key in test_keys:
            in_gold = concept_id in gold[key]
            in_pred = concept_id in predictions[key]
            if in_gold and in_pred:
                tp += 1
            elif in_pred:
                fp += 1
            elif in_gold:
                fn += 1
            else:
                tn += 1
        counts = ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn)
        precision, recall, f1 = precision_recall_f1(counts)
        rows.append(ConceptMetrics(
            concept_id=concept_id, level=taxonomy.node(concept_id).level,
            counts=counts, precision=precision, recall=recall, f1=f1,
            support=tp + fn,
        ))
    qualified = tuple(r.concept_id for r in rows if r.support >= min_support)
    qualified_set = set(qualified)
    qualified_level1 = tuple(
        r.concept_id for r in rows
        if r.concept_id in qualified_set and r.level == 1
    )
    by_id = {r.concept_id: r for r in rows}
    macro_all = (sum(by_id[c].f1 for c in qualified) / len(qualified)
                 if qualified else 0.0)
    macro_level1 = (
        sum(by_id[c].f1 for c in qualified_level1) / len(qualified_level1)
        if qualified_level1 else 0.0
    )
    return MetricsReport(
        rows=rows, qualified=qualified, qualified_level1=qualified_level1,
        macro_f1_level1=macro_level1, macro_f1_all=macro_all,
        min_support=min_support, n_nodes=len(test_keys),
    )


def write_report_csv(report: MetricsReport, path, type_id: int,
                     mode: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(REPORT_HEADER)
        for row in report.rows:
            writer.writerow([
                type_id, mode, row.concept_id, row.level,
                row.counts.tp, row.counts.fp, row.counts.fn, row.counts.tn,
                f"{row.precision:.6f}", f"{row.recall:.6f}", f"{row.f1:.6f}",
                row.support,
            ])


def best_f1_tally(reports: dict[int, MetricsReport]) -> dict[int, int]:
    """Per type: for how many qualified concepts it reaches the best F1
    among the compared types. Ties count for every tied type, so the
    tallies may sum to more than the number of concepts."""
    tally = {type_id: 0 for type_id in reports}
    concepts = sorted({
        concept_id for report in reports.values()
        for concept_id in report.qualified
    })
    for concept_id in concepts:
        scores = {
            type_id: report.row(concept_id).f1
            for type_id, report in reports.items()
            if concept_id in report.qualified
        }
        best = max(scores.values())
        for type_id, score in scores.items():
            if score == best:
                tally[type_id] += 1
    return tally


@dataclass
class RunResult:
    type_id: int
    architecture: str
    mode: str
    seed: int
    report: MetricsReport
    classifier: HierarchyClassifier


@dataclass
class ComparisonResult:
    runs: list[RunResult] = field(default_factory=list)
    # (mode, seed) -> type_id -> best-F1 count
    tallies: dict[tuple[str, int], dict[int, int]] = field(default_factory=dict)
    skipped: list[tuple[int, str, int, str]] = field(default_factory=list)

    def run(self, type_id: int, mode: str, seed: int) -> RunResult:
        for entry in self.runs:
            if (entry.type_id, entry.mode, entry.seed) == (type_id, mode,
                                                           seed):
                return entry
        raise EvaluationError(
            f"no run for type {type_id}, mode {mode!r}, seed {seed}"
        )

    def macro_f1(self, type_id: int, mode: str, level1: bool = True) -> float:
        """Mean macro F1 across seeds for one (type, mode) cell."""
        values = [
            (run.report.macro_f1_level1 if level1 else run.report.macro_f1_all)
            for run in self.runs
            if run.type_id == type_id and run.mode == mode
        ]
        if not values:
            raise EvaluationError(
                f"no runs for type {type_id}, mode {mode!r}"
            )
        return sum(values) / len(values)


def _clamped_test_count(n_documents: int, fraction: float) -> int:
    return min(max(int(round(fraction * n_documents)), 1), n_documents - 1)


def compare_frameworks(corpus: Corpus, taxonomy: Taxonomy,
                       type_ids: list[int], modes: list[str],
                       seeds: list[int],
                       keywords: KeywordTable | None = None,
                       store: EmbeddingStore | None = None,
                       test_fraction: float = 0.2,
                       min_pos: int = DEFAULT_MIN_POS,
                       min_support: int = DEFAULT_MIN_SUPPORT,
                       upsample_ratio: float = DEFAULT_UPSAMPLE_RATIO,
                       forest_config: ForestConfig | None = None,
                       network_config: NetworkConfig | None = None,
                       current_dim: int | None = None,
                       parent_dim: int | None = None,
                       out_dir=None) -> ComparisonResult:
    """Train and score every (type, mode, seed) combination.

    Types whose required resources are absent (embedding store, keyword
    table) are skipped with a warning rather than aborting the sweep.
    When ``out_dir`` is given, each run's split and per-concept report are
    written there together with the summary CSV and a readable table.
    """
    if not type_ids or not modes or not seeds:
        raise EvaluationError("need at least one type, mode and seed")
    for mode in modes:
        if mode not in ("document", "segment"):
            raise EvaluationError(f"unknown split mode {mode!r}")
    result = ComparisonResult()
    out_path = None
    if out_dir is not None:
        out_path = Path(out_dir)
        out_path.mkdir(parents=True, exist_ok=True)
    for mode in modes:
        for seed in seeds:
            if mode == "document":
                n_test = _clamped_test_count(len(corpus.documents),
                                             test_fraction)
                split = split_document_level(corpus, n_test, seed)
            else:
                split = split_segment_level(corpus, test_fraction, seed)
            if out_path is not None:
                save_split(split, out_path / f"split_{mode}_seed{seed}.txt")
            test_keys = split.test_node_keys(corpus)
            train_keys = split.train_node_keys(corpus)
            group_reports: dict[int, MetricsReport] = {}
            for type_id in type_ids:
                dims = {}
                if current_dim is not None:
                    dims["current_dim"] = current_dim
                if parent_dim is not None:
                    dims["parent_dim"] = parent_dim
                cfg = FeatureConfig.from_type_id(type_id, **dims)
                try:
                    resources = fit_resources(cfg, corpus, train_keys,
                                              taxonomy, keywords=keywords,
                                              store=store)
                except FeatureError as exc:
                    reason = str(exc)
                    warnings.warn(f"skipping type {type_id} ({mode}, "
                                  f"seed {seed}): {reason}")
                    result.skipped.append((type_id, mode, seed, reason))
                    continue
                if cfg.architecture == "lcn":
                    classifier = train_lcn(
                        corpus, split, cfg, taxonomy, resources,
                        min_pos=min_pos, upsample_ratio=upsample_ratio,
                        forest_config=forest_config, seed=seed,
                    )
                else:
                    classifier = train_lcpn(
                        corpus, split, cfg, taxonomy, resources,
                        network_config=network_config, seed=seed,
                    )
                predictions = predict_nodes(classifier, corpus, test_keys,
                                            taxonomy, resources)
                report = evaluate_run(predictions, corpus, test_keys,
                                      taxonomy, min_support=min_support)
                group_reports[type_id] = report
                result.runs.append(RunResult(
                    type_id=type_id, architecture=cfg.architecture,
                    mode=mode, seed=seed, report=report,
                    classifier=classifier,
                ))
                if out_path is not None:
                    name = f"report_type{type_id:02d}_{mode}_seed{seed}.csv"
                    write_report_csv(report, out_path / name, type_id, mode)
            if group_reports:
                result.tallies[(mode, seed)] = best_f1_tally(group_reports)
    if out_path is not None:
        write_summary_csv(result, out_path / "summary.csv")
        (out_path / "summary.txt").write_text(
            format_summary_table(result), encoding="utf-8"
        )
    return result


def write_summary_csv(result: ComparisonResult, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(SUMMARY_HEADER)
        for run in result.runs:
            tally = result.tallies.get((run.mode, run.seed), {})
            writer.writerow([
                run.type_id, run.architecture, run.mode, run.seed,
                f"{run.report.macro_f1_level1:.6f}",
                f"{run.report.macro_f1_all:.6f}",
                len(run.report.qualified),
                len(run.report.qualified_level1),
                tally.get(run.type_id, 0),
            ])


def format_summary_table(result: ComparisonResult) -> str:
    """Readable per-run table plus the per-group best-F1 tallies."""
    lines = []
    header = (f"{'type':>4}  {'arch':<4}  {'mode':<8}  {'seed':>4}  "
              f"{'macroF1-L1':>10}  {'macroF1-all':>11}  {'qualified':>9}  "
              f"{'best-F1':>7}")
    lines.append(header)
    lines.append("-" * len(header))
    for run in result.runs:
        tally = result.tallies.get((run.mode, run.seed), {})
        lines.append(
            f"{run.type_id:>4}  {run.architecture:<4}  {run.mode:<8}  "
            f"{run.seed:>4}  {run.report.macro_f1_level1:>10.6f}  "
            f"{run.report.macro_f1_all:>11.6f}  "
            f"{len(run.report.qualified):>9}  "
            f"{tally.get(run.type_id, 0):>7}"
        )
    if result.skipped:
        lines.append("")
        lines.append("skipped runs:")
        for type_id, mode, seed, reason in result.skipped:
            lines.append(f"  type {type_id} ({mode}, seed {seed}): {reason}")
    return "\n".join(lines) + "\n"
