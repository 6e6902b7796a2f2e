"""Acceptance suite: every shipping criterion at its stated tolerance.

Each test prints one ``ACCEPTANCE <n> PASS|FAIL`` line (visible with
``pytest -rA`` or ``-s``).
"""

import time
from collections import Counter
from contextlib import contextmanager

import numpy as np

import synth
from conftest import ABLATION_SEEDS, planted_build_config, small_build_config
from reference import (
    fd_pair_gradients,
    ref_bm25,
    ref_concentration,
    ref_db_index,
    ref_popularity,
    ref_representativeness,
    ref_spherical_kmeans,
)
from topiary import (
    BM25Params,
    TrainConfig,
    adaptive_split,
    build_taxonomy,
    db_index,
    export_taxonomy,
    pair_loss_and_grad,
    spherical_kmeans,
)
from topiary.cli import main as cli_main
from topiary.splitter import (
    DegenerateSplitError,
    bm25_rel,
    concentration,
    popularity,
    representativeness,
)
from test_splitter import make_subdocs


@contextmanager
def criterion(number, description):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {number} FAIL {description}")
        raise
    print(f"ACCEPTANCE {number} PASS {description}")


def _close(got, want, rel=1e-9):
    assert abs(got - want) <= rel * max(1.0, abs(want)), (got, want)


def test_criterion_1_formula_oracles():
    with criterion(1, "pop/con/bm25/r/db match straight-line references at 1e-9"):
        rng = np.random.default_rng(101)
        params = BM25Params()
        started = time.perf_counter()
        for _ in range(1000):
            k = int(rng.integers(2, 7))
            counts = []
            for _ in range(k):
                terms = rng.choice(30, size=int(rng.integers(2, 10)), replace=False)
                counts.append({int(t): int(rng.integers(1, 50)) for t in terms})
            subdocs = make_subdocs(counts)
            term = int(rng.integers(0, 30))
            cluster = int(rng.integers(0, k))
            _close(popularity(term, subdocs, cluster),
                   ref_popularity(counts[cluster], term))
            _close(bm25_rel(term, cluster, subdocs, params),
                   ref_bm25(term, cluster, counts))
            _close(concentration(term, subdocs, cluster, params),
                   ref_concentration(term, cluster, counts))
            _close(representativeness(term, subdocs, cluster, params).r,
                   ref_representativeness(term, cluster, counts))
        for _ in range(1000):
            k = int(rng.integers(2, 6))
            clusters = [
                (rng.normal(size=(int(rng.integers(1, 9)), 6)), rng.normal(size=6))
                for _ in range(k)
            ]
            _close(db_index(clusters), ref_db_index(clusters))
        elapsed = time.perf_counter() - started
        assert elapsed < 10.0, f"oracle sweep took {elapsed:.1f}s"


def test_criterion_2_gradient_check():
    with criterion(2, "pair gradients match central finite differences (h=1e-5, 1e-4 rel)"):
        rng = np.random.default_rng(202)
        for _ in range(20):
            dim = int(rng.integers(3, 12))
            v_t = rng.normal(scale=0.6, size=dim)
            v_w = rng.normal(scale=0.6, size=dim)
            negs = [rng.normal(scale=0.6, size=dim) for _ in range(int(rng.integers(1, 6)))]
            _, g_t, g_w, g_n = pair_loss_and_grad(v_t, v_w, negs)
            fd_t, fd_w, fd_n = fd_pair_gradients(v_t, v_w, negs, h=1e-5)
            for got, want in [(g_t, fd_t), (g_w, fd_w), (g_n, fd_n)]:
                err = np.abs(got - want) / np.maximum(np.abs(want), 1e-6)
                assert err.max() < 1e-4


def test_criterion_3_spherical_kmeans():
    with criterion(3, "k-means: monotone objective, idempotent fixpoint, matches Lloyd oracle"):
        rng = np.random.default_rng(303)
        for trial in range(100):
            n = int(rng.integers(8, 40))
            k = int(rng.integers(2, 5))
            dim = int(rng.integers(3, 8))
            vectors = {i: rng.normal(size=dim) for i in range(n)}
            result = spherical_kmeans(vectors, k=k, seed=trial)
            assert (np.diff(result.objective_history) >= -1e-9).all()
            again = spherical_kmeans(vectors, k=k, seed=trial,
                                     init_centers=result.centers)
            assert again.member_of == result.member_of
            np.testing.assert_allclose(again.centers, result.centers, atol=1e-12)
        for trial in range(10):
            vectors = {i: rng.normal(size=5) for i in range(30)}
            mine = spherical_kmeans(vectors, k=3, seed=1000 + trial)
            ref_members, _, ref_objective = ref_spherical_kmeans(
                vectors, k=3, seed=1000 + trial
            )
            assert mine.member_of == ref_members
            _close(mine.objective, ref_objective)


def test_criterion_4_split_termination():
    with criterion(4, "adaptive split terminates within min(|terms|, 10) iterations, "
                      "partition invariant holds every iteration"):
        rng = np.random.default_rng(404)
        completed = aborted = 0
        for _ in range(50):
            corpus, table, terms, k, delta = synth.random_split_instance(rng)
            audit = []
            try:
                result = adaptive_split(
                    terms, range(corpus.num_docs), corpus, table,
                    k=k, delta=delta, seed=int(rng.integers(100_000)), audit=audit,
                )
            except DegenerateSplitError:
                aborted += 1
            else:
                completed += 1
                assert result.iterations <= min(len(terms), 10)
                retained = {t for child in result.children for t, _ in child}
                assert retained | result.pushed_up == set(terms)
                assert not retained & result.pushed_up
            removed_so_far: set = set()
            for record in audit:
                members = {t for cluster in record.members for t in cluster}
                assert members | removed_so_far == set(terms)
                assert not members & removed_so_far
                removed_so_far |= set(record.removed)
        assert completed >= 40, f"only {completed} of 50 instances completed"
        print(f"  criterion 4 detail: {completed} completed, {aborted} aborted cleanly")


def _placement_stats(planted, corpus, taxonomy):
    term = corpus.term_set.term
    children = taxonomy.root.children
    correct = total = 0
    for child in children:
        votes = Counter(planted.topic_of.get(term(t)) for t, _ in child.terms)
        votes.pop(None, None)
        majority = votes.most_common(1)[0][0] if votes else None
        for t, _ in child.terms:
            name = term(t)
            if name in planted.topic_of:
                total += 1
                correct += planted.topic_of[name] == majority
    child_terms = {t for child in children for t, _ in child.terms}
    generals_at_root = sum(
        1 for g in planted.general
        if g in corpus.term_set and corpus.term_set.id_of[g] not in child_terms
    )
    return correct / max(total, 1), generals_at_root / max(len(planted.general), 1)


def test_criterion_5_planted_recovery(planted2):
    with criterion(5, "planted 3x3 hierarchy recovered (>=90% placement, >=80% generals up)"):
        planted, corpus = planted2
        started = time.perf_counter()
        outcomes = {}
        passed_delta = None
        for delta in (0.25, 0.15):
            taxonomy = build_taxonomy(corpus, planted_build_config(delta=delta))
            placement, generals_up = _placement_stats(planted, corpus, taxonomy)
            outcomes[delta] = (placement, generals_up)
            if placement >= 0.9 and generals_up >= 0.8:
                passed_delta = delta
                break
        elapsed = time.perf_counter() - started
        assert passed_delta is not None, f"no delta in (0.25, 0.15) qualified: {outcomes}"
        assert elapsed < 300.0, f"recovery took {elapsed:.0f}s"
        placement, generals_up = outcomes[passed_delta]
        print(f"  criterion 5 detail: delta={passed_delta}, placement={placement:.3f}, "
              f"generals_up={generals_up:.2f}, {elapsed:.0f}s")


def test_criterion_6_ablation_ordering(ablation_builds):
    with criterion(6, "mean DB: full <= no_ac and full <= no_le over 5 seeds"):
        means = {
            mode: float(np.mean([ablation_builds[(mode, seed)][1]
                                 for seed in ABLATION_SEEDS]))
            for mode in ("full", "no_ac", "no_le")
        }
        assert means["full"] <= means["no_ac"], means
        assert means["full"] <= means["no_le"], means
        print(f"  criterion 6 detail: {means}")


def test_criterion_7_mode_equivalence(small_planted, tmp_path):
    with criterion(7, "no_ac output byte-identical to full with delta=0 at fixed seed"):
        _, corpus = small_planted
        tax_no_ac = build_taxonomy(corpus, small_build_config(mode="no_ac", delta=0.25))
        tax_full0 = build_taxonomy(corpus, small_build_config(mode="full", delta=0.0))
        a, b = tmp_path / "no_ac.json", tmp_path / "full0.json"
        export_taxonomy(tax_no_ac, a)
        export_taxonomy(tax_full0, b)
        assert a.read_bytes() == b.read_bytes()


def test_criterion_8_cli_determinism(cli_corpus, tmp_path):
    with criterion(8, "two cold builds produce byte-identical taxonomy JSON"):
        outputs = []
        for run in ("one", "two"):
            out = tmp_path / f"out_{run}"
            code = cli_main([
                "build",
                "--corpus", str(cli_corpus["corpus"]),
                "--terms", str(cli_corpus["terms"]),
                "--config", str(cli_corpus["config"]),
                "--out", str(out),
                "--cache-dir", str(tmp_path / f"cache_{run}"),
                "--log-level", "WARNING",
            ])
            assert code == 0
            outputs.append((out / "taxonomy.json").read_bytes())
        assert outputs[0] == outputs[1]


def test_criterion_9_structural_settings():
    with criterion(9, "k=5, l_max=4: exactly 5 children at every split node, depth <= 4"):
        planted = synth.three_level(seed=11)
        corpus = synth.to_corpus(planted)
        config = planted_build_config(mode="no_le", seed=1, delta=0.0, l_max=4)
        config = type(config)(
            k=5, delta=0.0, l_max=4, mode="no_le", seed=1,
            global_embedding=TrainConfig(dim=24, window=4, negatives=4, epochs=5,
                                         min_count=5, seed=1),
        )
        taxonomy = build_taxonomy(corpus, config)
        split_nodes = [n for n in taxonomy.nodes() if n.children]
        assert split_nodes
        assert all(len(n.children) == 5 for n in split_nodes)
        assert taxonomy.depth() <= 4
        assert taxonomy.depth() == 4  # the settings really produce four levels
        print(f"  criterion 9 detail: {len(split_nodes)} split nodes, "
              f"depth {taxonomy.depth()}, {taxonomy.node_count()} nodes")
