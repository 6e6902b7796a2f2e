"""Adaptive topic splitting: spherical clustering with iterative push-up of general terms.

A split alternates two moves until the candidate term set stabilizes:
cluster the candidates on the unit sphere, then drop from each cluster the
terms whose representativeness falls below a threshold. Dropped terms are
returned to the parent topic; the survivors define the child topics.
Representativeness is the geometric mean of a term's popularity inside a
cluster's documents and its concentration there relative to the sibling
clusters' pseudo-documents.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .assignment import BM25Params, SubTopicDocs, assign_documents
from .cluster import spherical_kmeans
from .corpus import Corpus, TermSet
from .embedding import EmbeddingTable

logger = logging.getLogger(__name__)


class DegenerateSplitError(RuntimeError):
    """A split collapsed (emptied cluster, unusable sub-corpus, too few terms)."""


@dataclass(frozen=True)
class RepresentativenessScore:
    term_id: int
    cluster: int
    pop: float
    con: float
    r: float


@dataclass
class SplitAudit:
    """State captured after one split iteration, for debugging and validation."""

    iteration: int
    members: list[list[int]]
    subdocs: SubTopicDocs
    scores: list[RepresentativenessScore]
    removed: list[int]

    def to_json_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "members": self.members,
            "scores": [
                {"term": s.term_id, "cluster": s.cluster, "pop": s.pop, "con": s.con, "r": s.r}
                for s in self.scores
            ],
            "removed": self.removed,
        }


@dataclass
class SplitResult:
    """Outcome of one adaptive split.

    ``children[j]`` lists the retained (term id, score) pairs of cluster j
    in descending score order; ``pushed_up`` holds the terms returned to the
    parent. The two together partition the candidate set that entered the
    split. ``pushed_scores`` gives each pushed-up term its best score
    against the final clusters, for parent-side display ranking.
    """

    children: list[list[tuple[int, float]]]
    pushed_up: set[int]
    iterations: int
    centers: np.ndarray
    child_docs: list[set[int]]
    unassigned_docs: set[int]
    pushed_scores: dict[int, float]


def popularity(term_id: int, subdocs: SubTopicDocs, cluster: int) -> float:
    """Normalized log-frequency of the term in the cluster's documents:
    log(tf+1) / log(total tokens). Can exceed 1 when one term dominates a
    tiny sub-corpus; values are only compared, never clamped."""
    total = subdocs.pseudo_len[cluster]
    if total <= 1:
        raise ValueError(f"degenerate sub-corpus: cluster {cluster} has {total} tokens")
    return math.log(subdocs.pseudo_counts[cluster].get(term_id, 0) + 1) / math.log(total)


def bm25_rel(term_id: int, cluster: int, subdocs: SubTopicDocs, params: BM25Params) -> float:
    """BM25 relevance of the term to one cluster's pseudo-document, scored
    over the collection of all K pseudo-documents (smoothed idf, floored at 0)."""
    tf = subdocs.pseudo_counts[cluster].get(term_id, 0)
    if tf == 0:
        return 0.0
    avg_len = subdocs.avg_len
    if avg_len == 0.0:
        return 0.0
    df = subdocs.doc_freq(term_id)
    idf = max(0.0, math.log((subdocs.k - df + 0.5) / (df + 0.5) + 1.0))
    norm = 1.0 - params.b + params.b * subdocs.pseudo_len[cluster] / avg_len
    return idf * tf * (params.k1 + 1.0) / (tf + params.k1 * norm)


def concentration(
    term_id: int, subdocs: SubTopicDocs, cluster: int, params: BM25Params
) -> float:
    """Softmax-style contrast of the term's relevance to one cluster versus
    all clusters: exp(rel_k) / (1 + sum_j exp(rel_j)). Terms absent
    everywhere get 1/(1+K); terms equally relevant everywhere stay below 1/K."""
    rels = [bm25_rel(term_id, j, subdocs, params) for j in range(subdocs.k)]
    return math.exp(rels[cluster]) / (1.0 + sum(math.exp(r) for r in rels))


def representativeness(
    term_id: int, subdocs: SubTopicDocs, cluster: int, params: BM25Params
) -> RepresentativenessScore:
    """Geometric mean of popularity and concentration."""
    pop = popularity(term_id, subdocs, cluster)
    con = concentration(term_id, subdocs, cluster, params)
    return RepresentativenessScore(term_id, cluster, pop, con, math.sqrt(pop * con))


def select_label(ranked_terms: list[tuple[int, float]], term_set: TermSet) -> int:
    """The cluster's highest-scoring term; ties go to the lexicographically
    smallest term string."""
    if not ranked_terms:
        raise ValueError("cannot label an empty cluster")
    return min(ranked_terms, key=lambda ts: (-ts[1], term_set.term(ts[0])))[0]


def adaptive_split(
    terms: Iterable[int],
    doc_ids: Iterable[int],
    corpus: Corpus,
    table: EmbeddingTable,
    k: int,
    delta: float,
    seed: int,
    params: BM25Params = BM25Params(),
    max_iterations: int = 10,
    restarts: int = 3,
    audit: list[SplitAudit] | None = None,
) -> SplitResult:
    """Split a parent topic's terms into k child clusters, pushing general terms up.

    Loop: spherical k-means over the current candidates (re-seeded
    deterministically each iteration), assign the parent's documents to the
    clusters, score every term in its own cluster, and remove terms scoring
    below ``delta``. Stops when an iteration removes nothing (fixpoint) or
    after ``max_iterations``. With delta=0 this reduces to plain spherical
    k-means. Raises DegenerateSplitError when a cluster empties, a cluster's
    documents carry <= 1 token, or fewer than k candidates remain.
    """
    candidates = sorted(set(terms))
    if len(candidates) < 2 * k:
        raise ValueError(f"parent has {len(candidates)} terms; need at least {2 * k}")
    missing = [t for t in candidates if t not in table]
    if missing:
        raise ValueError(f"embeddings missing for {len(missing)} parent terms")
    doc_ids = set(doc_ids)

    pushed_up: set[int] = set()
    iteration = 0
    while True:
        iteration += 1
        if len(candidates) < k:
            raise DegenerateSplitError(
                f"{len(candidates)} candidate terms left for k={k} at iteration {iteration}"
            )
        assign = spherical_kmeans(
            {t: table.vector(t) for t in candidates},
            k,
            seed=seed + iteration - 1,
            restarts=restarts,
        )
        subdocs = assign_documents(doc_ids, assign.member_of, corpus, k)
        clusters = [[t for t in candidates if assign.member_of[t] == j] for j in range(k)]
        try:
            scores = [
                representativeness(t, subdocs, j, params)
                for j, members in enumerate(clusters)
                for t in members
            ]
        except ValueError as exc:
            raise DegenerateSplitError(str(exc)) from exc
        score_of = {s.term_id: s for s in scores}
        removed = [s.term_id for s in scores if s.r < delta]

        if audit is not None:
            audit.append(SplitAudit(iteration, clusters, subdocs, scores, removed))

        if not removed:
            ranked_children = [
                sorted(
                    ((t, score_of[t].r) for t in members),
                    key=lambda ts: (-ts[1], corpus.term_set.term(ts[0])),
                )
                for members in clusters
            ]
            pushed_scores = {
                t: max(
                    representativeness(t, subdocs, j, params).r for j in range(k)
                )
                for t in pushed_up
            }
            logger.debug(
                "split converged after %d iteration(s): %s retained, %d pushed up",
                iteration, [len(c) for c in clusters], len(pushed_up),
            )
            return SplitResult(
                ranked_children,
                pushed_up,
                iteration,
                assign.centers,
                subdocs.doc_ids,
                subdocs.unassigned,
                pushed_scores,
            )

        pushed_up.update(removed)
        removed_set = set(removed)
        pruned = [[t for t in members if t not in removed_set] for members in clusters]
        if any(len(members) == 0 for members in pruned):
            raise DegenerateSplitError(
                f"a child cluster lost all its terms at iteration {iteration}"
            )
        candidates = sorted(t for members in pruned for t in members)

        if iteration >= max_iterations:
            # iteration cap: keep the pruned clusters from this round
            ranked_children = [
                sorted(
                    ((t, score_of[t].r) for t in members),
                    key=lambda ts: (-ts[1], corpus.term_set.term(ts[0])),
                )
                for members in pruned
            ]
            pushed_scores = {
                t: max(
                    representativeness(t, subdocs, j, params).r for j in range(k)
                )
                for t in pushed_up
            }
            logger.debug(
                "split stopped at iteration cap %d: %s retained, %d pushed up",
                max_iterations, [len(c) for c in pruned], len(pushed_up),
            )
            return SplitResult(
                ranked_children,
                pushed_up,
                iteration,
                assign.centers,
                subdocs.doc_ids,
                subdocs.unassigned,
                pushed_scores,
            )
