"""Skip-gram term embeddings trained with negative sampling, plus similarity search."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import Document, TermSet

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for one embedding training run."""

    dim: int = 100
    window: int = 5
    negatives: int = 5
    epochs: int = 10
    initial_lr: float = 0.025
    min_count: int = 5
    seed: int = 1

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("dim must be >= 2")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.negatives < 1:
            raise ValueError("negatives must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.initial_lr <= 0:
            raise ValueError("initial_lr must be > 0")
        if self.min_count < 1:
            raise ValueError("min_count must be >= 1")


def _sigmoid(x):
    # tanh form is stable for large |x|
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def pair_loss_and_grad(v_t, v_w, negative_vectors):
    """Negative-sampling loss for one (center, context) pair, with exact gradients.

    loss = -log s(v_t . v_w) - sum_n log s(-v_t . v_n)

    Returns ``(loss, grad_t, grad_w, grad_negs)`` where the gradients have
    the same shapes as the inputs.
    """
    v_t = np.asarray(v_t, dtype=np.float64)
    v_w = np.asarray(v_w, dtype=np.float64)
    negs = np.asarray(negative_vectors, dtype=np.float64).reshape(-1, v_t.size)
    pos_dot = float(v_t @ v_w)
    neg_dots = negs @ v_t
    # -log sigmoid(x) == logaddexp(0, -x), stable for any x
    loss = float(np.logaddexp(0.0, -pos_dot) + np.logaddexp(0.0, neg_dots).sum())
    g_pos = _sigmoid(pos_dot) - 1.0
    g_negs = _sigmoid(neg_dots)
    grad_t = g_pos * v_w + g_negs @ negs
    grad_w = g_pos * v_t
    grad_negs = g_negs[:, None] * v_t[None, :]
    return loss, grad_t, grad_w, grad_negs


class EmbeddingTable:
    """Dense term vectors keyed by term id.

    ``input_vectors`` holds the center-word vectors used everywhere
    downstream (similarity, clustering, document embeddings);
    ``context_vectors`` holds the output-side vectors and is only present
    on freshly trained tables (the text format stores input vectors only).
    """

    def __init__(
        self,
        term_set: TermSet,
        term_ids,
        input_vectors: np.ndarray,
        context_vectors: np.ndarray | None = None,
        trained_on: str = "",
        epoch_losses: Sequence[float] | None = None,
    ):
        self.term_set = term_set
        self.term_ids = np.asarray(term_ids, dtype=np.int64)
        self.input_vectors = input_vectors
        self.context_vectors = context_vectors
        self.trained_on = trained_on
        self.epoch_losses = list(epoch_losses or [])
        self.row_of = {int(t): i for i, t in enumerate(self.term_ids)}
        if len(self.term_ids) != len(self.input_vectors):
            raise ValueError("term_ids and input_vectors disagree on vocabulary size")

    @property
    def dim(self) -> int:
        return self.input_vectors.shape[1]

    def __len__(self) -> int:
        return len(self.term_ids)

    def __contains__(self, term_id: int) -> bool:
        return term_id in self.row_of

    def vector(self, term_id: int) -> np.ndarray:
        return self.input_vectors[self.row_of[term_id]]

    def term_string(self, row: int) -> str:
        return self.term_set.term(int(self.term_ids[row]))

    def save(self, path: str | Path) -> None:
        """Write the text format: header '<dim> <vocab_size>', then one
        '<term> <f1> ... <fdim>' record per term. Floats are printed with 9
        significant digits so float32 values round-trip exactly."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"{self.dim} {len(self)}\n")
            for row in range(len(self)):
                floats = " ".join(f"{float(x):.9g}" for x in self.input_vectors[row])
                fh.write(f"{self.term_string(row)} {floats}\n")

    def restrict(self, term_set: TermSet) -> "EmbeddingTable":
        """Re-key the table onto another term set, keeping only the terms it
        knows. Used to line up a saved table with an imported taxonomy."""
        rows = [
            (term_set.id_of[self.term_string(row)], row)
            for row in range(len(self))
            if self.term_string(row) in term_set
        ]
        ids = [tid for tid, _ in rows]
        vectors = self.input_vectors[[row for _, row in rows]]
        return EmbeddingTable(term_set, ids, vectors, trained_on=self.trained_on)

    @classmethod
    def load(cls, path: str | Path, term_set: TermSet | None = None) -> "EmbeddingTable":
        """Read the text format. Without a term set, one is synthesized from
        the file so the table is usable standalone (e.g. for queries)."""
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().split()
            if len(header) != 2:
                raise ValueError(f"bad embedding header in {path}: expected 'dim vocab_size'")
            dim, vocab_size = int(header[0]), int(header[1])
            terms: list[str] = []
            vectors = np.empty((vocab_size, dim), dtype=np.float32)
            for row in range(vocab_size):
                parts = fh.readline().split()
                if len(parts) != dim + 1:
                    raise ValueError(f"bad embedding record at row {row} in {path}")
                terms.append(parts[0])
                vectors[row] = np.array([np.float32(x) for x in parts[1:]], dtype=np.float32)
        if term_set is None:
            term_set = TermSet(terms)
            ids = [term_set.id_of[t] for t in terms]
        else:
            missing = [t for t in terms if t not in term_set]
            if missing:
                raise ValueError(f"embedding file has {len(missing)} terms unknown to the term set")
            ids = [term_set.id_of[t] for t in terms]
        return cls(term_set, ids, vectors, trained_on=f"loaded:{path}")


def _context_pairs(doc_rows: np.ndarray, offsets: np.ndarray):
    """All (center, context) row pairs for one document, in position order."""
    n = len(doc_rows)
    idx = np.arange(n)
    ctx_pos = idx[:, None] + offsets[None, :]
    valid = (ctx_pos >= 0) & (ctx_pos < n)
    centers = np.repeat(idx, valid.sum(axis=1))
    contexts = ctx_pos[valid]
    return doc_rows[centers], doc_rows[contexts]


def train_skipgram(
    corpus_view: Sequence[Document],
    config: TrainConfig,
    term_set: TermSet,
    trained_on: str = "corpus",
) -> EmbeddingTable:
    """Train skip-gram vectors with negative sampling over a document view.

    Stochastic gradient descent runs single-threaded with one update step
    per document (gradients are taken at the pre-update parameters), a
    linearly decaying learning rate, and negatives drawn from the unigram
    distribution raised to 0.75. Training is bit-reproducible for a fixed
    seed. Raises if the filtered vocabulary has fewer than two terms or the
    loss stops being finite.
    """
    if not corpus_view:
        raise ValueError("empty corpus view")
    counts: Counter[int] = Counter()
    for doc in corpus_view:
        counts.update(doc.tokens)
    vocab_ids = sorted(t for t, c in counts.items() if c >= config.min_count)
    if len(vocab_ids) < 2:
        raise ValueError(
            f"vocabulary too small: {len(vocab_ids)} terms with count >= {config.min_count}"
        )
    row_of = {t: i for i, t in enumerate(vocab_ids)}
    doc_rows = [
        np.array([row_of[t] for t in doc.tokens if t in row_of], dtype=np.int64)
        for doc in corpus_view
    ]

    n_vocab, dim = len(vocab_ids), config.dim
    rng = np.random.default_rng(config.seed)
    input_vec = ((rng.random((n_vocab, dim), dtype=np.float32) - 0.5) / dim).astype(np.float32)
    context_vec = np.zeros((n_vocab, dim), dtype=np.float32)

    freq = np.array([counts[t] for t in vocab_ids], dtype=np.float64) ** 0.75
    noise_cum = np.cumsum(freq / freq.sum())
    noise_cum[-1] = 1.0

    offsets = np.array(
        [o for o in range(-config.window, config.window + 1) if o != 0], dtype=np.int64
    )
    total_tokens = config.epochs * sum(len(r) for r in doc_rows)
    min_lr = config.initial_lr / 100.0
    processed = 0
    epoch_losses: list[float] = []

    for epoch in range(config.epochs):
        loss_sum = 0.0
        n_pairs_epoch = 0
        for rows in doc_rows:
            alpha = np.float32(
                max(min_lr, config.initial_lr * (1.0 - processed / max(total_tokens, 1)))
            )
            processed += len(rows)
            if len(rows) < 2:
                continue
            centers, contexts = _context_pairs(rows, offsets)
            n_pairs = len(centers)
            negs = np.searchsorted(noise_cum, rng.random((n_pairs, config.negatives)))
            # drop negatives that collide with the positive context word
            keep = negs != contexts[:, None]

            v_t = input_vec[centers]
            v_w = context_vec[contexts]
            v_n = context_vec[negs]
            pos_dots = np.einsum("pd,pd->p", v_t, v_w)
            neg_dots = np.einsum("pd,pnd->pn", v_t, v_n)

            loss_sum += float(np.logaddexp(0.0, -pos_dots).sum(dtype=np.float64))
            loss_sum += float((np.logaddexp(0.0, neg_dots) * keep).sum(dtype=np.float64))
            n_pairs_epoch += n_pairs

            g_pos = (_sigmoid(pos_dots) - 1.0).astype(np.float32)
            g_neg = (_sigmoid(neg_dots) * keep).astype(np.float32)
            grad_center = g_pos[:, None] * v_w + np.einsum("pn,pnd->pd", g_neg, v_n)
            np.add.at(input_vec, centers, -alpha * grad_center)
            np.add.at(context_vec, contexts, -alpha * g_pos[:, None] * v_t)
            np.add.at(
                context_vec,
                negs.reshape(-1),
                (-alpha * g_neg[..., None] * v_t[:, None, :]).reshape(-1, dim),
            )
        epoch_loss = loss_sum / max(n_pairs_epoch, 1)
        if not np.isfinite(epoch_loss):
            raise ValueError(f"non-finite training loss at epoch {epoch}: lower initial_lr")
        epoch_losses.append(epoch_loss)
        logger.debug("[%s] epoch %d/%d loss %.6f", trained_on, epoch + 1, config.epochs, epoch_loss)
    logger.info(
        "trained %d x %d embeddings on %d docs (%s), final loss %.6f",
        n_vocab, dim, len(corpus_view), trained_on, epoch_losses[-1],
    )
    term_ids = np.array(vocab_ids, dtype=np.int64)
    return EmbeddingTable(term_set, term_ids, input_vec, context_vec, trained_on, epoch_losses)


def nearest_terms(table: EmbeddingTable, query: int, k: int) -> list[tuple[int, float]]:
    """Top-k terms by cosine similarity to the query term's input vector.

    The query itself is excluded; ties break on the smaller term id.
    """
    if query not in table:
        raise KeyError(f"unknown query term id: {query}")
    X = table.input_vectors.astype(np.float64)
    norms = np.linalg.norm(X, axis=1)
    safe = np.where(norms == 0.0, 1.0, norms)
    q_row = table.row_of[query]
    q = X[q_row] / safe[q_row]
    cos = (X @ q) / safe
    cos[norms == 0.0] = 0.0
    order = np.lexsort((table.term_ids, -cos))
    out: list[tuple[int, float]] = []
    for i in order:
        if i == q_row:
            continue
        out.append((int(table.term_ids[i]), float(cos[i])))
        if len(out) == k:
            break
    return out
