"""Document-to-topic assignment and retrieval-based sub-corpus expansion."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import Corpus
from .embedding import EmbeddingTable

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BM25Params:
    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self):
        if self.k1 <= 0:
            raise ValueError("k1 must be > 0")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError("b must be in [0, 1]")


@dataclass
class SubTopicDocs:
    """Per-cluster document sets and their concatenated pseudo-documents.

    ``pseudo_counts[j]`` maps term id to its occurrence count over all
    documents assigned to cluster j, and ``pseudo_len[j]`` is the total
    token count; both are exactly the sums over the member documents.
    """

    doc_ids: list[set[int]]
    pseudo_counts: list[dict[int, int]]
    pseudo_len: list[int]
    unassigned: set[int]

    @property
    def k(self) -> int:
        return len(self.doc_ids)

    @property
    def avg_len(self) -> float:
        return sum(self.pseudo_len) / len(self.pseudo_len)

    def doc_freq(self, term_id: int) -> int:
        """Number of pseudo-documents containing the term."""
        return sum(1 for counts in self.pseudo_counts if term_id in counts)


@dataclass
class DocEmbedding:
    doc_id: int
    vector: np.ndarray  # unit-normalized


def _global_idf(corpus: Corpus) -> np.ndarray:
    # idf over the full corpus keeps sibling scores comparable
    df = np.maximum(corpus.term_doc_freq, 1)
    return np.log(corpus.num_docs / df)


def compute_doc_embeddings(
    corpus: Corpus, table: EmbeddingTable
) -> tuple[list[DocEmbedding], int]:
    """TF-IDF weighted average of term input vectors, unit-normalized per doc.

    Documents whose weighted average is the zero vector (no in-table terms,
    or all weights zero) are excluded; returns ``(embeddings, n_excluded)``.
    """
    idf = _global_idf(corpus)
    embeddings: list[DocEmbedding] = []
    skipped = 0
    for doc in corpus.documents:
        acc = np.zeros(table.dim, dtype=np.float64)
        for t, cnt in Counter(doc.tokens).items():
            if t in table:
                acc += cnt * idf[t] * table.vector(t)
        norm = np.linalg.norm(acc)
        if norm == 0.0:
            skipped += 1
            continue
        embeddings.append(DocEmbedding(doc.doc_id, acc / norm))
    if skipped:
        logger.debug("%d documents had zero-vector embeddings and were excluded", skipped)
    return embeddings, skipped


def assign_documents(
    doc_ids: Iterable[int],
    membership: Mapping[int, int],
    corpus: Corpus,
    k: int,
) -> SubTopicDocs:
    """Assign each document to the cluster its terms support most.

    A document's score for cluster j is the sum of tf-idf weights of its
    tokens whose term belongs to j; it goes to the top-scoring cluster among
    those hit by at least one token (ties to the lowest index). Documents
    hitting no clustered term are left unassigned.
    """
    idf = _global_idf(corpus)
    sets: list[set[int]] = [set() for _ in range(k)]
    unassigned: set[int] = set()
    for d in sorted(set(doc_ids)):
        scores = np.zeros(k, dtype=np.float64)
        hit = np.zeros(k, dtype=bool)
        for t, cnt in Counter(corpus.documents[d].tokens).items():
            j = membership.get(t)
            if j is not None:
                scores[j] += cnt * idf[t]
                hit[j] = True
        if not hit.any():
            unassigned.add(d)
            continue
        scores[~hit] = -np.inf
        sets[int(np.argmax(scores))].add(d)

    pseudo_counts: list[dict[int, int]] = []
    pseudo_len: list[int] = []
    for j in range(k):
        counts: Counter[int] = Counter()
        for d in sets[j]:
            counts.update(corpus.documents[d].tokens)
        pseudo_counts.append(dict(counts))
        pseudo_len.append(int(sum(counts.values())))
    return SubTopicDocs(sets, pseudo_counts, pseudo_len, unassigned)


def retrieve_expansion(
    center: np.ndarray,
    doc_embeddings: Sequence[DocEmbedding],
    m: int,
    exclude: Iterable[int] = (),
) -> list[int]:
    """Top-m documents by cosine to the center direction, ties by doc id."""
    if m <= 0:
        return []
    excluded = set(exclude)
    center = np.asarray(center, dtype=np.float64)
    norm = np.linalg.norm(center)
    if norm == 0.0:
        raise ValueError("zero center vector")
    center = center / norm
    candidates = [de for de in doc_embeddings if de.doc_id not in excluded]
    if not candidates:
        return []
    ids = np.array([de.doc_id for de in candidates])
    cos = np.array([float(de.vector @ center) for de in candidates])
    order = np.lexsort((ids, -cos))
    return [int(ids[i]) for i in order[:m]]


def build_subcorpus(
    seed_docs: Iterable[int],
    center: np.ndarray,
    doc_embeddings: Sequence[DocEmbedding],
    min_docs: int = 100,
    m_step: int = 100,
) -> set[int]:
    """Grow a topic's sub-corpus to at least ``min_docs`` documents.

    Starts from the clustering-based set and repeatedly adds the next
    ``m_step`` retrieval-ranked documents (by cosine to the topic center)
    until the floor is met or the corpus is exhausted.
    """
    selected = set(seed_docs)
    while len(selected) < min_docs:
        batch = retrieve_expansion(center, doc_embeddings, m_step, exclude=selected)
        if not batch:
            logger.warning(
                "sub-corpus expansion exhausted at %d docs (wanted >= %d)",
                len(selected), min_docs,
            )
            break
        selected.update(batch)
    return selected
