"""Cluster-validity scoring and human-annotation packet generation."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .embedding import EmbeddingTable
from .taxonomy import Taxonomy, TopicNode

logger = logging.getLogger(__name__)


def db_index(clusters: Sequence[tuple[np.ndarray, np.ndarray]]) -> float:
    """Davies-Bouldin index over cosine geometry.

    Each cluster is a ``(members, center)`` pair; scatter is the mean of
    (1 - cos(member, center)), separation between two clusters is
    (1 - cos(center_i, center_j)), and the index averages each cluster's
    worst-case (scatter_i + scatter_j) / separation_ij. Lower is better.
    Raises on coincident centers.
    """
    if len(clusters) < 2:
        raise ValueError("db_index needs at least 2 clusters")
    scatters = []
    centers = []
    for members, center in clusters:
        members = np.asarray(members, dtype=np.float64)
        if members.ndim != 2 or len(members) == 0:
            raise ValueError("each cluster needs a non-empty (n, dim) member matrix")
        members = members / np.linalg.norm(members, axis=1)[:, None]
        center = np.asarray(center, dtype=np.float64)
        center = center / np.linalg.norm(center)
        scatters.append(float(np.mean(1.0 - members @ center)))
        centers.append(center)
    k = len(clusters)
    centers = np.vstack(centers)
    sep = 1.0 - centers @ centers.T
    total = 0.0
    for i in range(k):
        worst = -np.inf
        for j in range(k):
            if i == j:
                continue
            if sep[i, j] <= 1e-12:
                raise ValueError(f"degenerate cluster pair ({i}, {j}): coincident centers")
            worst = max(worst, (scatters[i] + scatters[j]) / sep[i, j])
        total += worst
    return total / k


@dataclass
class DBEntry:
    node_id: int
    label: str
    level: int
    num_clusters: int
    db: float


@dataclass
class DBReport:
    """Davies-Bouldin values per split node, plus their mean."""

    entries: list[DBEntry] = field(default_factory=list)
    skipped: list[tuple[int, str]] = field(default_factory=list)

    @property
    def mean_db(self) -> float | None:
        if not self.entries:
            return None
        return sum(e.db for e in self.entries) / len(self.entries)

    def to_dict(self) -> dict:
        return {
            "mean_db": None if self.mean_db is None else round(self.mean_db, 6),
            "nodes": [
                {
                    "node_id": e.node_id,
                    "label": e.label,
                    "level": e.level,
                    "num_clusters": e.num_clusters,
                    "db": round(e.db, 6),
                }
                for e in self.entries
            ],
            "skipped": [{"node_id": n, "reason": r} for n, r in self.skipped],
        }


def _node_label(taxonomy: Taxonomy, node: TopicNode) -> str:
    return "*" if node.label is None else taxonomy.term_set.term(node.label)


def db_report(taxonomy: Taxonomy, default_table: EmbeddingTable | None = None) -> DBReport:
    """Score every node with >= 2 children.

    Each split is evaluated in the embedding space that produced it (the
    node's own table) when available, falling back to ``default_table`` for
    imported trees. Children's centers are recomputed as the normalized mean
    of their member vectors in that space.
    """
    report = DBReport()
    for node in taxonomy.nodes():
        if len(node.children) < 2:
            continue
        table = None
        if node.embedding_ref is not None:
            table = taxonomy.tables.get(node.embedding_ref)
        if table is None:
            table = default_table
        if table is None:
            report.skipped.append((node.node_id, "no embedding table"))
            continue
        clusters = []
        usable = True
        for child in node.children:
            vectors = [table.vector(t) for t, _ in child.terms if t in table]
            if not vectors:
                report.skipped.append(
                    (node.node_id, f"child {child.node_id} has no embeddable terms")
                )
                usable = False
                break
            members = np.asarray(vectors, dtype=np.float64)
            members = members / np.linalg.norm(members, axis=1)[:, None]
            mean = members.sum(axis=0)
            norm = np.linalg.norm(mean)
            if norm == 0.0:
                report.skipped.append(
                    (node.node_id, f"child {child.node_id} has a degenerate center")
                )
                usable = False
                break
            clusters.append((members, mean / norm))
        if not usable:
            continue
        try:
            value = db_index(clusters)
        except ValueError as exc:
            report.skipped.append((node.node_id, str(exc)))
            continue
        report.entries.append(
            DBEntry(node.node_id, _node_label(taxonomy, node), node.level,
                    len(node.children), value)
        )
    return report


def _write_jsonl(path: str | Path, records: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def _top_terms(taxonomy: Taxonomy, node: TopicNode, n: int) -> list[str]:
    return [taxonomy.term_set.term(t) for t, _ in node.terms[:n]]


def make_relation_packet(
    taxonomy: Taxonomy, top_n: int, seed: int, path: str | Path
) -> int:
    """Write one JSONL record per parent-child pair for human judgment.

    Records carry stable ids derived from the node ids and are emitted in
    a seed-shuffled order; no answer key exists for this task.
    """
    records = []
    for node in taxonomy.nodes():
        for child in node.children:
            records.append(
                {
                    "record_id": f"rel-{node.node_id:04d}-{child.node_id:04d}",
                    "parent_terms": _top_terms(taxonomy, node, top_n),
                    "child_terms": _top_terms(taxonomy, child, top_n),
                }
            )
    rng = np.random.default_rng(seed)
    rng.shuffle(records)
    _write_jsonl(path, records)
    logger.info("relation packet: %d pairs -> %s", len(records), path)
    return len(records)


def make_intrusion_packet(
    taxonomy: Taxonomy, seed: int, quiz_path: str | Path, key_path: str | Path
) -> int:
    """Write a term-intrusion quiz and its answer key.

    Every non-root node with at least 5 terms and a sibling yields one
    record: its top-5 terms plus one term drawn from a random sibling,
    shuffled. The key file maps record id to the intruder's position.
    Nodes without a sibling (or with too few terms) are skipped with a
    warning.
    """
    rng = np.random.default_rng(seed)
    quiz: list[dict] = []
    key: list[dict] = []
    for node in taxonomy.nodes():
        for child in node.children:
            siblings = [s for s in node.children if s is not child and s.terms]
            if not siblings:
                logger.warning("node %d has no sibling with terms; skipped", child.node_id)
                continue
            if len(child.terms) < 5:
                logger.warning(
                    "node %d has only %d terms (< 5); skipped", child.node_id, len(child.terms)
                )
                continue
            sibling = siblings[int(rng.integers(len(siblings)))]
            intruder_id = sibling.terms[int(rng.integers(len(sibling.terms)))][0]
            intruder = taxonomy.term_set.term(intruder_id)
            items = _top_terms(taxonomy, child, 5) + [intruder]
            order = rng.permutation(len(items))
            shuffled = [items[i] for i in order]
            position = int(np.flatnonzero(order == len(items) - 1)[0])
            record_id = f"intr-{child.node_id:04d}"
            quiz.append({"record_id": record_id, "terms": shuffled})
            key.append(
                {"record_id": record_id, "intruder_position": position, "intruder": intruder}
            )
    _write_jsonl(quiz_path, quiz)
    _write_jsonl(key_path, key)
    logger.info("intrusion packet: %d quizzes -> %s (key: %s)", len(quiz), quiz_path, key_path)
    return len(quiz)
