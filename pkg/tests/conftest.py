"""Shared fixtures: planted corpora, trained tables, and the ablation build grid."""

from __future__ import annotations

import json

import pytest

import synth
from topiary import BuildConfig, TrainConfig, build_taxonomy, db_report, train_skipgram

PLANTED_SEED = 7
ABLATION_SEEDS = (1, 2, 3, 4, 5)
MODES = ("full", "no_ac", "no_le")


def planted_train_config(seed: int, min_count: int, epochs: int) -> TrainConfig:
    return TrainConfig(dim=24, window=4, negatives=4, epochs=epochs,
                       min_count=min_count, seed=seed)


def planted_build_config(mode: str = "full", seed: int = 1, delta: float = 0.25,
                         l_max: int = 3) -> BuildConfig:
    return BuildConfig(
        k=3, delta=delta, l_max=l_max, mode=mode, seed=seed,
        min_docs=100, m_step=100,
        global_embedding=planted_train_config(seed, 5, 5),
        local_embedding=planted_train_config(seed, 2, 4),
    )


def small_build_config(mode: str = "full", seed: int = 1, delta: float = 0.25,
                       **overrides) -> BuildConfig:
    settings = dict(
        k=2, delta=delta, l_max=2, mode=mode, seed=seed, min_docs=60, m_step=30,
        global_embedding=TrainConfig(dim=12, window=3, negatives=3, epochs=3,
                                     min_count=3, seed=seed),
        local_embedding=TrainConfig(dim=12, window=3, negatives=3, epochs=2,
                                    min_count=2, seed=seed),
    )
    settings.update(overrides)
    return BuildConfig(**settings)


@pytest.fixture(scope="session")
def planted2():
    """The 3-topics x 3-subtopics corpus: (planted, corpus)."""
    planted = synth.two_level(seed=PLANTED_SEED)
    return planted, synth.to_corpus(planted)


@pytest.fixture(scope="session")
def planted_table(planted2):
    _, corpus = planted2
    return train_skipgram(corpus.documents, planted_train_config(1, 5, 5),
                          corpus.term_set, "global")


@pytest.fixture(scope="session")
def small_planted():
    """A faster 2x2 planted corpus for structural unit tests."""
    planted = synth.two_level(
        n_topics=2, n_sub=2, terms_per_sub=10, n_general=6,
        n_docs=480, doc_len=14, p_general=0.004, p_topic=0.25, seed=13,
    )
    return planted, synth.to_corpus(planted)


@pytest.fixture(scope="session")
def small_table(small_planted):
    _, corpus = small_planted
    return train_skipgram(
        corpus.documents,
        TrainConfig(dim=12, window=3, negatives=3, epochs=3, min_count=3, seed=1),
        corpus.term_set, "global",
    )


@pytest.fixture(scope="session")
def ablation_builds(planted2):
    """{(mode, seed): (taxonomy, mean_db)} over the full mode/seed grid.

    The global table is shared across modes of one seed: training is
    deterministic, so each mode would reproduce it bit-for-bit anyway.
    """
    _, corpus = planted2
    out = {}
    for seed in ABLATION_SEEDS:
        table = train_skipgram(corpus.documents, planted_train_config(seed, 5, 5),
                               corpus.term_set, "global")
        for mode in MODES:
            taxonomy = build_taxonomy(
                corpus, planted_build_config(mode=mode, seed=seed), global_table=table
            )
            out[(mode, seed)] = (taxonomy, db_report(taxonomy).mean_db)
    return out


@pytest.fixture(scope="session")
def cli_corpus(tmp_path_factory):
    """Tiny corpus + term list + config file on disk for CLI tests."""
    root = tmp_path_factory.mktemp("cli_data")
    planted = synth.two_level(
        n_topics=2, n_sub=2, terms_per_sub=8, n_general=4,
        n_docs=240, doc_len=12, p_general=0.01, p_topic=0.25, seed=17,
    )
    corpus_path = root / "corpus.txt"
    corpus_path.write_text("\n".join(planted.lines) + "\n", encoding="utf-8")
    terms_path = root / "terms.txt"
    terms_path.write_text("\n".join(planted.terms) + "\n", encoding="utf-8")
    config_path = root / "config.json"
    config_path.write_text(
        json.dumps(
            {
                "workers": 1,
                "build": {
                    "k": 2,
                    "delta": 0.25,
                    "l_max": 2,
                    "min_docs": 40,
                    "m_step": 20,
                    "seed": 1,
                    "global_embedding": {
                        "dim": 12, "window": 3, "negatives": 3,
                        "epochs": 3, "min_count": 3, "seed": 1,
                    },
                    "local_embedding": {
                        "dim": 12, "window": 3, "negatives": 3,
                        "epochs": 2, "min_count": 2, "seed": 1,
                    },
                },
            },
            indent=2,
        ),
        encoding="utf-8",
    )
    return {"corpus": corpus_path, "terms": terms_path, "config": config_path,
            "planted": planted}
