"""Recursive top-down taxonomy construction and JSON (de)serialization."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator

import numpy as np

from .assignment import BM25Params, build_subcorpus, compute_doc_embeddings
from .corpus import Corpus, TermSet
from .embedding import EmbeddingTable, TrainConfig, train_skipgram
from .splitter import DegenerateSplitError, SplitAudit, SplitResult, adaptive_split, select_label

logger = logging.getLogger(__name__)

MODES = ("full", "no_ac", "no_le")


class TaxonomySchemaError(ValueError):
    """A taxonomy file violates the JSON schema or a tree invariant."""


@dataclass
class TopicNode:
    """One taxonomy node: a ranked term cluster with its documents and children."""

    node_id: int
    level: int
    label: int | None  # term id; None at the root (rendered as "*")
    terms: list[tuple[int, float]]
    doc_ids: set[int] = field(default_factory=set)
    num_docs: int = 0
    center: np.ndarray | None = None
    children: list["TopicNode"] = field(default_factory=list)
    embedding_ref: str | None = None  # key of the table that split this node
    leaf_reason: str | None = None

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def term_ids(self) -> set[int]:
        return {t for t, _ in self.terms}


@dataclass
class BuildConfig:
    """Settings for one taxonomy build.

    ``l_max`` is the total number of levels including the root (the root
    sits at level 0, so l_max=1 builds a root-only tree). ``mode`` selects
    the full pipeline or one of its ablations: ``no_ac`` disables the
    push-up of general terms (threshold treated as 0), ``no_le`` reuses the
    corpus-wide embeddings at every level instead of retraining per topic.
    """

    k: int = 5
    delta: float = 0.25
    l_max: int = 4
    min_terms_to_split: int | None = None  # default: 4 * k
    min_docs: int = 100
    m_step: int = 100
    mode: str = "full"
    seed: int = 1
    global_embedding: TrainConfig = field(default_factory=TrainConfig)
    local_embedding: TrainConfig = field(default_factory=lambda: TrainConfig(min_count=2))
    bm25: BM25Params = field(default_factory=BM25Params)
    max_split_iterations: int = 10

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if not 0.0 <= self.delta < 1.0:
            raise ValueError("delta must be in [0, 1)")
        if self.l_max < 1:
            raise ValueError("l_max must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.min_terms_to_split is not None and self.min_terms_to_split < 2 * self.k:
            raise ValueError("min_terms_to_split must be at least 2*k")

    @property
    def effective_min_terms(self) -> int:
        return self.min_terms_to_split if self.min_terms_to_split is not None else 4 * self.k

    @property
    def effective_delta(self) -> float:
        return 0.0 if self.mode == "no_ac" else self.delta


@dataclass
class Taxonomy:
    """A built or imported topic tree plus the resources to interpret it."""

    root: TopicNode
    term_set: TermSet
    tables: dict[str, EmbeddingTable] = field(default_factory=dict)
    config: BuildConfig | None = None

    def nodes(self) -> Iterator[TopicNode]:
        stack = [self.root]
        while stack:
            node = stack.pop(0)
            yield node
            stack = node.children + stack

    def depth(self) -> int:
        return max(n.level for n in self.nodes()) + 1

    def node_count(self) -> int:
        return sum(1 for _ in self.nodes())


def _display_ranking(
    previous_terms: list[tuple[int, float]],
    result: SplitResult,
    term_set: TermSet,
) -> list[tuple[int, float]]:
    """Re-rank a parent's term list after its split: terms retained in some
    child first (by score), then pushed-up terms (by their best score against
    the final clusters), then terms that could not enter the split, keeping
    their previous scores."""
    key = lambda ts: (-ts[1], term_set.term(ts[0]))
    retained = sorted((pair for child in result.children for pair in child), key=key)
    pushed = sorted(((t, result.pushed_scores[t]) for t in result.pushed_up), key=key)
    seen = {t for t, _ in retained} | result.pushed_up
    leftovers = sorted(((t, s) for t, s in previous_terms if t not in seen), key=key)
    return retained + pushed + leftovers


class _Builder:
    def __init__(self, corpus: Corpus, config: BuildConfig, taxonomy: Taxonomy,
                 audit_sink=None):
        self.corpus = corpus
        self.config = config
        self.taxonomy = taxonomy
        self.audit_sink = audit_sink  # callable(node_id, list[SplitAudit]) or None
        self.next_id = 1
        self._doc_embeddings: dict[str, list] = {}

    def run(self) -> None:
        self._split_node(self.taxonomy.root, "global")

    def _doc_embeddings_for(self, table_key: str):
        if table_key not in self._doc_embeddings:
            embeddings, skipped = compute_doc_embeddings(
                self.corpus, self.taxonomy.tables[table_key]
            )
            if skipped:
                logger.info(
                    "%d documents without a usable embedding under table %r",
                    skipped, table_key,
                )
            self._doc_embeddings[table_key] = embeddings
        return self._doc_embeddings[table_key]

    def _split_node(self, node: TopicNode, table_key: str) -> None:
        config = self.config
        table = self.taxonomy.tables[table_key]
        candidates = [t for t, _ in node.terms if t in table]
        threshold = max(config.effective_min_terms, 2 * config.k)
        if len(candidates) < threshold:
            node.leaf_reason = f"too_few_terms({len(candidates)}<{threshold})"
            return
        audit: list[SplitAudit] | None = [] if self.audit_sink else None
        try:
            result = adaptive_split(
                candidates,
                node.doc_ids,
                self.corpus,
                table,
                config.k,
                config.effective_delta,
                seed=config.seed + node.node_id,
                params=config.bm25,
                max_iterations=config.max_split_iterations,
                audit=audit,
            )
        except DegenerateSplitError as exc:
            node.leaf_reason = f"degenerate_split({exc})"
            logger.warning("node %d not split: %s", node.node_id, exc)
            return
        finally:
            if self.audit_sink and audit:
                self.audit_sink(node.node_id, audit)
        node.embedding_ref = table_key

        for j in range(config.k):
            child = TopicNode(
                node_id=self.next_id,
                level=node.level + 1,
                label=select_label(result.children[j], self.corpus.term_set),
                terms=result.children[j],
                doc_ids=result.child_docs[j],
                num_docs=len(result.child_docs[j]),
                center=result.centers[j],
            )
            self.next_id += 1
            node.children.append(child)
        node.terms = _display_ranking(node.terms, result, self.corpus.term_set)

        for child in node.children:
            if child.level >= config.l_max - 1:
                child.leaf_reason = "max_depth"
                continue
            child_key = self._table_for_child(child, table_key)
            if child_key is not None:
                self._split_node(child, child_key)

    def _table_for_child(self, child: TopicNode, parent_table_key: str) -> str | None:
        """Pick (or train) the embedding table that will split this child."""
        config = self.config
        if config.mode == "no_le":
            return "global"
        if len(child.terms) < max(config.effective_min_terms, 2 * config.k):
            child.leaf_reason = f"too_few_terms({len(child.terms)})"
            return None
        doc_embeddings = self._doc_embeddings_for(parent_table_key)
        subcorpus_ids = build_subcorpus(
            child.doc_ids, child.center, doc_embeddings, config.min_docs, config.m_step
        )
        docs = [self.corpus.documents[d] for d in sorted(subcorpus_ids)]
        local_cfg = replace(
            config.local_embedding, seed=config.local_embedding.seed + child.node_id
        )
        try:
            table = train_skipgram(
                docs, local_cfg, self.corpus.term_set, trained_on=f"node{child.node_id}"
            )
        except ValueError as exc:
            child.leaf_reason = f"local_embedding_failed({exc})"
            logger.warning("node %d local embedding failed: %s", child.node_id, exc)
            return None
        key = f"local:{child.node_id}"
        self.taxonomy.tables[key] = table
        return key


def build_taxonomy(
    corpus: Corpus,
    config: BuildConfig,
    global_table: EmbeddingTable | None = None,
    audit_sink=None,
) -> Taxonomy:
    """Build the topic tree top-down.

    The root holds every term and every document and is split with the
    corpus-wide embeddings; deeper topics are split with embeddings retrained
    on their own sub-corpus (except in ``no_le`` mode). Nodes whose split
    fails become leaves with the reason recorded instead of failing the
    build. Deterministic for a fixed corpus, config and seed.
    """
    if global_table is None:
        global_table = train_skipgram(
            corpus.documents, config.global_embedding, corpus.term_set, trained_on="global"
        )
    root = TopicNode(
        node_id=0,
        level=0,
        label=None,
        terms=[(t, 0.0) for t in range(len(corpus.term_set))],
        doc_ids=set(range(corpus.num_docs)),
        num_docs=corpus.num_docs,
    )
    taxonomy = Taxonomy(root, corpus.term_set, {"global": global_table}, config)
    if config.l_max == 1:
        root.leaf_reason = "max_depth"
        return taxonomy
    _Builder(corpus, config, taxonomy, audit_sink).run()
    logger.info(
        "built taxonomy: %d nodes, depth %d, mode %s",
        taxonomy.node_count(), taxonomy.depth(), config.mode,
    )
    return taxonomy


def export_taxonomy(taxonomy: Taxonomy, path: str | Path, top_n: int = 8) -> None:
    """Write the tree as JSON: each node carries its label, level, top-n
    (term, score) pairs, document count and children. Scores are rounded to
    6 decimal places; output is byte-stable for identical trees."""
    if top_n < 1:
        raise ValueError("top_n must be >= 1")
    term_set = taxonomy.term_set

    def node_dict(node: TopicNode) -> dict:
        return {
            "label": "*" if node.label is None else term_set.term(node.label),
            "level": node.level,
            "terms": [
                {"term": term_set.term(t), "score": round(float(s), 6)}
                for t, s in node.terms[:top_n]
            ],
            "num_docs": node.num_docs,
            "children": [node_dict(c) for c in node.children],
        }

    payload = json.dumps(node_dict(taxonomy.root), indent=2, ensure_ascii=False) + "\n"
    Path(path).write_text(payload, encoding="utf-8")


def import_taxonomy(path: str | Path) -> Taxonomy:
    """Read a taxonomy JSON file back into a validated tree.

    Term ids are assigned from the strings found in the file; embedding
    tables are not part of the format, so ``tables`` comes back empty.
    Raises TaxonomySchemaError naming the offending node path.
    """
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise TaxonomySchemaError(f"not valid JSON: {exc}") from exc

    strings: list[str] = []

    def collect(obj, where: str) -> None:
        if not isinstance(obj, dict):
            raise TaxonomySchemaError(f"{where}: node must be an object")
        for key in ("label", "level", "terms", "num_docs", "children"):
            if key not in obj:
                raise TaxonomySchemaError(f"{where}: missing key {key!r}")
        if not isinstance(obj["terms"], list):
            raise TaxonomySchemaError(f"{where}: 'terms' must be a list")
        for i, entry in enumerate(obj["terms"]):
            if (
                not isinstance(entry, dict)
                or not isinstance(entry.get("term"), str)
                or not isinstance(entry.get("score"), (int, float))
            ):
                raise TaxonomySchemaError(f"{where}: bad term entry at index {i}")
            strings.append(entry["term"])
        if isinstance(obj["label"], str) and obj["label"] != "*":
            strings.append(obj["label"])
        if not isinstance(obj["children"], list):
            raise TaxonomySchemaError(f"{where}: 'children' must be a list")
        for i, child in enumerate(obj["children"]):
            collect(child, f"{where}/children[{i}]")

    collect(data, "root")
    term_set = TermSet(strings)
    counter = {"next_id": 0}

    def build(obj, level: int, where: str) -> TopicNode:
        if obj["level"] != level:
            raise TaxonomySchemaError(
                f"{where}: level {obj['level']} but parent implies {level}"
            )
        if not isinstance(obj["num_docs"], int) or obj["num_docs"] < 0:
            raise TaxonomySchemaError(f"{where}: 'num_docs' must be a non-negative integer")
        label = obj["label"]
        if not isinstance(label, str):
            raise TaxonomySchemaError(f"{where}: 'label' must be a string")
        node = TopicNode(
            node_id=counter["next_id"],
            level=level,
            label=None if label == "*" else term_set.id_of[label],
            terms=[(term_set.id_of[e["term"]], float(e["score"])) for e in obj["terms"]],
            num_docs=obj["num_docs"],
        )
        counter["next_id"] += 1
        node.children = [
            build(child, level + 1, f"{where}/children[{i}]")
            for i, child in enumerate(obj["children"])
        ]
        seen: dict[int, int] = {}
        for i, child in enumerate(node.children):
            for t in child.term_ids():
                if t in seen:
                    raise TaxonomySchemaError(
                        f"{where}: term {term_set.term(t)!r} appears in children "
                        f"[{seen[t]}] and [{i}]"
                    )
                seen[t] = i
        return node

    if data["level"] != 0:
        raise TaxonomySchemaError("root: level must be 0")
    root = build(data, 0, "root")
    return Taxonomy(root, term_set)
