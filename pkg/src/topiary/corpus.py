"""Corpus ingestion: term mining, greedy tokenization, frequency statistics."""

from __future__ import annotations

import logging
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

logger = logging.getLogger(__name__)

# Words that cannot form a term on their own; n-grams consisting only of
# these are discarded during mining.
STOPWORDS = frozenset(
    """
    a about above after again against all am an and any are as at be because
    been before being below between both but by can cannot could did do does
    doing down during each few for from further had has have having he her
    here hers herself him himself his how i if in into is it its itself just
    me more most my myself no nor not now of off on once only or other our
    ours ourselves out over own same she should so some such than that the
    their theirs them themselves then there these they this those through to
    too under until up very was we were what when where which while who whom
    why will with would you your yours yourself yourselves
    """.split()
)

_WORD_RE = re.compile(r"[a-z0-9_\-]+")


def clean_words(text: str) -> list[str]:
    """Lowercase and split into words, keeping only [a-z0-9_-] runs."""
    return [w for w in _WORD_RE.findall(text.lower()) if any(c.isalnum() for c in w)]


@dataclass
class Document:
    """One document as a sequence of term ids; multi-word terms are single tokens."""

    doc_id: int
    tokens: list[int]


class TermSet:
    """Bijection between term strings and dense integer ids.

    Ids are assigned in the order terms are supplied, so the same input
    always produces the same mapping. Multi-word terms are stored with
    their words joined by underscores.
    """

    def __init__(self, terms: Iterable[str]):
        self.terms: list[str] = []
        self.id_of: dict[str, int] = {}
        for term in terms:
            if term and term not in self.id_of:
                self.id_of[term] = len(self.terms)
                self.terms.append(term)
        # longest term in words, used by the greedy tokenizer
        self.max_words = max((t.count("_") + 1 for t in self.terms), default=1)

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self.id_of

    def __iter__(self) -> Iterator[str]:
        return iter(self.terms)

    def term(self, term_id: int) -> str:
        return self.terms[term_id]

    def save(self, path: str | Path) -> None:
        """Write one term per line (words joined by underscore)."""
        Path(path).write_text("\n".join(self.terms) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "TermSet":
        """Read a term list file: one term per line, blank lines ignored."""
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls(line.strip() for line in lines if line.strip())


@dataclass
class Corpus:
    """Tokenized documents plus corpus-wide term statistics.

    Immutable after loading; ``doc_id`` equals the document's position in
    ``documents``. ``term_freq[t]`` is the total number of occurrences of
    term ``t`` and ``term_doc_freq[t]`` the number of documents containing
    it, both recomputable from ``documents``.
    """

    documents: list[Document]
    term_set: TermSet
    term_freq: np.ndarray
    term_doc_freq: np.ndarray
    num_dropped: int = 0

    @property
    def num_docs(self) -> int:
        return len(self.documents)

    @property
    def total_tokens(self) -> int:
        return int(self.term_freq.sum())


def _stopword_only(term: str, stopwords: frozenset[str]) -> bool:
    return all(w in stopwords for w in term.split("_"))


def mine_terms(
    raw_docs: Iterable[str],
    min_count: int = 10,
    max_ngram: int = 3,
    stopwords: frozenset[str] = STOPWORDS,
    clean: bool = True,
) -> TermSet:
    """Mine the seed-term vocabulary as frequent contiguous n-grams.

    Every n-gram with n <= ``max_ngram`` and corpus frequency >= ``min_count``
    becomes a term, except n-grams made up entirely of stopwords. Terms are
    returned in sorted order so ids are stable.
    """
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    if max_ngram < 1:
        raise ValueError("max_ngram must be >= 1")
    counts: Counter[str] = Counter()
    for doc in raw_docs:
        words = clean_words(doc) if clean else doc.split()
        for n in range(1, max_ngram + 1):
            for i in range(len(words) - n + 1):
                counts["_".join(words[i : i + n])] += 1
    kept = sorted(
        t for t, c in counts.items() if c >= min_count and not _stopword_only(t, stopwords)
    )
    logger.info("mined %d terms (min_count=%d, max_ngram=%d)", len(kept), min_count, max_ngram)
    return TermSet(kept)


def tokenize(raw_doc: str, term_set: TermSet, doc_id: int = 0, clean: bool = True) -> Document:
    """Segment text into term ids by greedy longest match, left to right.

    At each position the longest term (up to the term set's longest n-gram)
    starting there is emitted and consumed; words that start no term are
    dropped.
    """
    words = clean_words(raw_doc) if clean else raw_doc.split()
    tokens: list[int] = []
    i, n_words = 0, len(words)
    while i < n_words:
        matched = False
        for n in range(min(term_set.max_words, n_words - i), 0, -1):
            candidate = "_".join(words[i : i + n])
            if candidate in term_set:
                tokens.append(term_set.id_of[candidate])
                i += n
                matched = True
                break
        if not matched:
            i += 1
    return Document(doc_id, tokens)


def load_corpus(path: str | Path, term_set: TermSet, fmt: str = "text") -> Corpus:
    """Load a corpus file (one document per line) and tokenize against a term set.

    ``fmt`` selects preprocessing: "text" cleans and lowercases before
    segmentation, "tokens" trusts whitespace-separated tokens as-is (terms
    pre-joined with underscores). Documents with no in-vocabulary terms are
    dropped and counted in ``num_dropped``.
    """
    if fmt not in ("text", "tokens"):
        raise ValueError(f"unknown corpus format: {fmt!r} (expected 'text' or 'tokens')")
    documents: list[Document] = []
    dropped = 0
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            doc = tokenize(line, term_set, doc_id=len(documents), clean=(fmt == "text"))
            if doc.tokens:
                documents.append(doc)
            else:
                dropped += 1
    if not documents:
        raise ValueError(f"zero documents with in-vocabulary terms in {path}")
    term_freq = np.zeros(len(term_set), dtype=np.int64)
    term_doc_freq = np.zeros(len(term_set), dtype=np.int64)
    for doc in documents:
        for t, c in Counter(doc.tokens).items():
            term_freq[t] += c
            term_doc_freq[t] += 1
    if dropped:
        logger.info("dropped %d empty documents while loading %s", dropped, path)
    return Corpus(documents, term_set, term_freq, term_doc_freq, dropped)
