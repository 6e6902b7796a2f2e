"""Command-line interface: build, eval, query, ablate, print-config."""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import os
import shutil
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import RunConfig
from .corpus import Corpus, TermSet, load_corpus, mine_terms
from .embedding import EmbeddingTable, nearest_terms, train_skipgram
from .evaluation import db_report, make_intrusion_packet, make_relation_packet
from .report import plot_ablation, plot_db_report, write_ablation_csv, write_db_csv
from .taxonomy import (
    MODES,
    BuildConfig,
    build_taxonomy,
    export_taxonomy,
    import_taxonomy,
)

logger = logging.getLogger(__name__)


# -----------------------------
# Config assembly
# -----------------------------


def _deep_update(base: dict, extra: dict) -> dict:
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _deep_update(base[key], value)
        else:
            base[key] = value
    return base


def _apply_set(data: dict, assignment: str) -> None:
    """Apply one --set KEY=VALUE override; dotted keys navigate the tree and
    values are parsed as JSON when possible (strings otherwise)."""
    if "=" not in assignment:
        raise ValueError(f"--set expects KEY=VALUE, got {assignment!r}")
    key, raw = assignment.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = data
    parts = key.split(".")
    for part in parts[:-1]:
        if part not in node or not isinstance(node[part], dict):
            raise ValueError(f"--set: unknown config group {part!r} in {key!r}")
        node = node[part]
    if parts[-1] not in node:
        raise ValueError(f"--set: unknown config key {key!r}")
    node[parts[-1]] = value


def _assemble_config(args: argparse.Namespace) -> RunConfig:
    data = RunConfig().to_dict()
    if getattr(args, "config", None):
        file_data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        if not isinstance(file_data, dict):
            raise ValueError(f"config file {args.config} must hold a JSON object")
        _deep_update(data, file_data)
    for assignment in getattr(args, "set", None) or []:
        _apply_set(data, assignment)
    flag_map = {
        "corpus": "corpus",
        "terms": "term_list",
        "corpus_format": "corpus_format",
        "out": "output_dir",
        "top_n": "top_n",
        "workers": "workers",
        "log_level": "log_level",
        "mine_min_count": "mine_min_count",
        "mine_max_ngram": "mine_max_ngram",
    }
    for flag, key in flag_map.items():
        value = getattr(args, flag, None)
        if value is not None:
            data[key] = value
    build_flags = {"mode": "mode", "k": "k", "delta": "delta", "l_max": "l_max",
                   "seed": "seed", "min_docs": "min_docs"}
    for flag, key in build_flags.items():
        value = getattr(args, flag, None)
        if value is not None:
            data["build"][key] = value
    return RunConfig.from_dict(data)


def _setup_logging(level_name: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level_name.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        datefmt="%H:%M:%S",
    )


# -----------------------------
# Stage caching
# -----------------------------


def _hash_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _stage_key(material: dict) -> str:
    blob = json.dumps(material, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _run_stage(cache_dir: Path, stage: str, key: str, out_path: Path, produce) -> bool:
    """Produce ``out_path`` via the cache: on a hit the cached bytes are
    copied out verbatim, otherwise ``produce(out_path)`` runs and the result
    is stored. Returns True on a cache hit."""
    cached = cache_dir / f"{stage}-{key}{out_path.suffix}"
    if cached.is_file():
        shutil.copyfile(cached, out_path)
        logger.info("[%s] cache hit (%s)", stage, key)
        return True
    produce(out_path)
    shutil.copyfile(out_path, cached)
    logger.info("[%s] computed and cached (%s)", stage, key)
    return False


# -----------------------------
# Commands
# -----------------------------


def cmd_build(args: argparse.Namespace) -> int:
    stage = "config"
    try:
        cfg = _assemble_config(args)
        _setup_logging(cfg.log_level)
        cfg.validate_paths()
        out_dir = Path(cfg.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        cache_dir = cfg.resolved_cache_dir(args.cache_dir)
        cache_dir.mkdir(parents=True, exist_ok=True)
        corpus_hash = _hash_file(cfg.corpus)
        manifest: dict = {"config": cfg.to_dict(), "stages": {}}

        stage = "terms"
        terms_path = out_dir / "terms.txt"
        if cfg.term_list:
            key = _stage_key({"kind": "external", "file": _hash_file(cfg.term_list)})
            produce = lambda p: TermSet.load(cfg.term_list).save(p)
        else:
            key = _stage_key(
                {
                    "kind": "mined",
                    "corpus": corpus_hash,
                    "min_count": cfg.mine_min_count,
                    "max_ngram": cfg.mine_max_ngram,
                    "format": cfg.corpus_format,
                }
            )

            def produce(p, _cfg=cfg):
                with open(_cfg.corpus, encoding="utf-8") as fh:
                    term_set = mine_terms(
                        fh,
                        min_count=_cfg.mine_min_count,
                        max_ngram=_cfg.mine_max_ngram,
                        clean=(_cfg.corpus_format == "text"),
                    )
                if not len(term_set):
                    raise ValueError("mining produced an empty term set")
                term_set.save(p)

        hit = _run_stage(cache_dir, "terms", key, terms_path, produce)
        manifest["stages"]["terms"] = {"key": key, "cache_hit": hit}
        term_set = TermSet.load(terms_path)
        terms_hash = _hash_file(terms_path)

        stage = "corpus"
        corpus = load_corpus(cfg.corpus, term_set, cfg.corpus_format)
        logger.info(
            "corpus: %d documents, %d terms, %d tokens (%d empty docs dropped)",
            corpus.num_docs, len(term_set), corpus.total_tokens, corpus.num_dropped,
        )

        stage = "embedding"
        emb_path = out_dir / "embeddings.txt"
        key = _stage_key(
            {
                "corpus": corpus_hash,
                "terms": terms_hash,
                "format": cfg.corpus_format,
                "train": dataclasses.asdict(cfg.build.global_embedding),
            }
        )
        hit = _run_stage(
            cache_dir,
            "embedding",
            key,
            emb_path,
            lambda p: train_skipgram(
                corpus.documents, cfg.build.global_embedding, term_set, trained_on="global"
            ).save(p),
        )
        manifest["stages"]["embedding"] = {"key": key, "cache_hit": hit}
        global_table = EmbeddingTable.load(emb_path, term_set)

        stage = "taxonomy"
        tax_path = out_dir / "taxonomy.json"
        key = _stage_key(
            {
                "corpus": corpus_hash,
                "embeddings": _hash_file(emb_path),
                "build": dataclasses.asdict(cfg.build),
                "top_n": cfg.top_n,
            }
        )
        audit_sink = None
        if args.split_audit:
            audit_dir = out_dir / "split_audit"
            audit_dir.mkdir(exist_ok=True)

            def audit_sink(node_id, audits, _dir=audit_dir):
                with open(_dir / f"node{node_id:04d}.jsonl", "w", encoding="utf-8") as fh:
                    for a in audits:
                        fh.write(json.dumps(a.to_json_dict(), ensure_ascii=False) + "\n")

        def produce_taxonomy(p):
            taxonomy = build_taxonomy(corpus, cfg.build, global_table, audit_sink=audit_sink)
            export_taxonomy(taxonomy, p, top_n=cfg.top_n)

        hit = _run_stage(cache_dir, "taxonomy", key, tax_path, produce_taxonomy)
        manifest["stages"]["taxonomy"] = {"key": key, "cache_hit": hit}

        stage = "validate"
        imported = import_taxonomy(tax_path)
        manifest["result"] = {
            "nodes": imported.node_count(),
            "depth": imported.depth(),
            "outputs": ["terms.txt", "embeddings.txt", "taxonomy.json"],
        }
        (out_dir / "build_manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        logger.info("build complete: %s (%d nodes, depth %d)",
                    tax_path, imported.node_count(), imported.depth())
        return 0
    except Exception as exc:  # noqa: BLE001 - stage-tagged CLI boundary
        if args.traceback:
            raise
        print(f"error [build:{stage}]: {exc}", file=sys.stderr)
        return 1


def cmd_eval(args: argparse.Namespace) -> int:
    stage = "load"
    try:
        _setup_logging(args.log_level or "INFO")
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        taxonomy = import_taxonomy(args.taxonomy)
        table = EmbeddingTable.load(args.embeddings).restrict(taxonomy.term_set)
        meta = {"taxonomy": str(args.taxonomy), "embeddings": str(args.embeddings)}
        if args.corpus:
            corpus = load_corpus(args.corpus, taxonomy.term_set, args.corpus_format)
            meta["corpus"] = {"documents": corpus.num_docs, "tokens": corpus.total_tokens}

        stage = "db_report"
        report = db_report(taxonomy, default_table=table)
        payload = {"meta": meta, **report.to_dict()}
        (out_dir / "db_report.json").write_text(
            json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )
        write_db_csv(report, out_dir / "db_report.csv")
        plot_db_report(report, out_dir / "db_report.png")

        stage = "packets"
        n_rel = make_relation_packet(
            taxonomy, top_n=args.top_n, seed=args.seed, path=out_dir / "relation_packet.jsonl"
        )
        n_intr = make_intrusion_packet(
            taxonomy,
            seed=args.seed,
            quiz_path=out_dir / "intrusion_quiz.jsonl",
            key_path=out_dir / "intrusion_key.jsonl",
        )

        stage = "validate"
        for name in ("relation_packet.jsonl", "intrusion_quiz.jsonl", "intrusion_key.jsonl"):
            with open(out_dir / name, encoding="utf-8") as fh:
                for line in fh:
                    json.loads(line)
        logger.info(
            "eval complete: %d scored nodes, %d relation pairs, %d intrusion quizzes",
            len(report.entries), n_rel, n_intr,
        )
        return 0
    except Exception as exc:  # noqa: BLE001
        if args.traceback:
            raise
        print(f"error [eval:{stage}]: {exc}", file=sys.stderr)
        return 1


def cmd_query(args: argparse.Namespace) -> int:
    try:
        _setup_logging(args.log_level or "WARNING")
        table = EmbeddingTable.load(args.embeddings)
        if args.term not in table.term_set:
            print(f"error [query]: term {args.term!r} not in embedding vocabulary",
                  file=sys.stderr)
            return 1
        results = nearest_terms(table, table.term_set.id_of[args.term], args.k)
        width = max([len(args.term)] + [len(table.term_set.term(t)) for t, _ in results])
        print(f"{'term':<{width}}  cosine")
        for term_id, cosine in results:
            print(f"{table.term_set.term(term_id):<{width}}  {cosine:+.6f}")
        return 0
    except Exception as exc:  # noqa: BLE001
        if args.traceback:
            raise
        print(f"error [query]: {exc}", file=sys.stderr)
        return 1


def _ablate_one(corpus: Corpus, config: BuildConfig, table: EmbeddingTable,
                mode: str, out_dir: str, top_n: int):
    mode_config = dataclasses.replace(config, mode=mode)
    taxonomy = build_taxonomy(corpus, mode_config, global_table=table)
    export_taxonomy(taxonomy, Path(out_dir) / f"taxonomy-{mode}.json", top_n=top_n)
    return mode, db_report(taxonomy)


def cmd_ablate(args: argparse.Namespace) -> int:
    stage = "config"
    try:
        cfg = _assemble_config(args)
        _setup_logging(cfg.log_level)
        cfg.validate_paths()
        out_dir = Path(cfg.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)

        stage = "corpus"
        if cfg.term_list:
            term_set = TermSet.load(cfg.term_list)
        else:
            with open(cfg.corpus, encoding="utf-8") as fh:
                term_set = mine_terms(
                    fh,
                    min_count=cfg.mine_min_count,
                    max_ngram=cfg.mine_max_ngram,
                    clean=(cfg.corpus_format == "text"),
                )
        corpus = load_corpus(cfg.corpus, term_set, cfg.corpus_format)

        stage = "embedding"
        table = train_skipgram(
            corpus.documents, cfg.build.global_embedding, term_set, trained_on="global"
        )

        stage = "modes"
        workers = cfg.workers if cfg.workers > 0 else (os.cpu_count() or 1)
        workers = min(workers, len(MODES))
        results: dict[str, object] = {}
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [
                    pool.submit(_ablate_one, corpus, cfg.build, table, mode,
                                str(out_dir), cfg.top_n)
                    for mode in MODES
                ]
                for future in futures:
                    mode, report = future.result()
                    results[mode] = report
        else:
            for mode in MODES:
                mode_name, report = _ablate_one(corpus, cfg.build, table, mode,
                                                str(out_dir), cfg.top_n)
                results[mode_name] = report

        stage = "report"
        results = {mode: results[mode] for mode in MODES}
        payload = {
            "seed": cfg.build.seed,
            "modes": {mode: report.to_dict() for mode, report in results.items()},
        }
        (out_dir / "ablation_db.json").write_text(
            json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )
        write_ablation_csv(results, out_dir / "ablation_db.csv")
        plot_ablation(results, out_dir / "ablation_db.png")
        for mode, report in results.items():
            mean = report.mean_db
            logger.info("mode %-6s mean DB = %s", mode,
                        "n/a" if mean is None else f"{mean:.6f}")
        return 0
    except Exception as exc:  # noqa: BLE001
        if args.traceback:
            raise
        print(f"error [ablate:{stage}]: {exc}", file=sys.stderr)
        return 1


def cmd_print_config(args: argparse.Namespace) -> int:
    print(json.dumps(RunConfig().to_dict(), indent=2, sort_keys=True))
    return 0


# -----------------------------
# Argument parsing
# -----------------------------


def _add_common_build_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--corpus", help="corpus file: one document per line")
    parser.add_argument("--terms", help="term list file (skips mining)")
    parser.add_argument("--corpus-format", dest="corpus_format",
                        choices=["text", "tokens"], help="corpus preprocessing mode")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override any config key (dotted path), repeatable")
    parser.add_argument("--mode", choices=list(MODES), help="pipeline mode")
    parser.add_argument("--k", type=int, help="children per split")
    parser.add_argument("--delta", type=float, help="representativeness threshold")
    parser.add_argument("--l-max", dest="l_max", type=int, help="maximum number of levels")
    parser.add_argument("--seed", type=int, help="build seed")
    parser.add_argument("--min-docs", dest="min_docs", type=int,
                        help="sub-corpus floor before retrieval expansion stops")
    parser.add_argument("--mine-min-count", dest="mine_min_count", type=int,
                        help="mining frequency threshold")
    parser.add_argument("--mine-max-ngram", dest="mine_max_ngram", type=int,
                        help="mining n-gram ceiling")
    parser.add_argument("--top-n", dest="top_n", type=int,
                        help="terms per node in exports")
    parser.add_argument("--workers", type=int, help="parallel workers (0 = auto)")
    parser.add_argument("--log-level", dest="log_level", help="logging level")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="topiary",
        description="Build, query and evaluate topic taxonomies from text corpora.",
    )
    parser.add_argument("--traceback", action="store_true",
                        help="re-raise errors instead of printing a summary")
    sub = parser.add_subparsers(dest="command", required=True)

    p_build = sub.add_parser("build", help="run the full pipeline with stage caching")
    _add_common_build_flags(p_build)
    p_build.add_argument("--cache-dir", dest="cache_dir", help="stage cache directory")
    p_build.add_argument("--split-audit", action="store_true",
                         help="dump per-iteration split audits as JSONL")
    p_build.set_defaults(func=cmd_build)

    p_eval = sub.add_parser("eval", help="score a taxonomy and emit annotation packets")
    p_eval.add_argument("--taxonomy", required=True, help="taxonomy JSON file")
    p_eval.add_argument("--embeddings", required=True, help="embedding table file")
    p_eval.add_argument("--corpus", help="corpus file (optional, adds stats)")
    p_eval.add_argument("--corpus-format", dest="corpus_format",
                        choices=["text", "tokens"], default="text")
    p_eval.add_argument("--out", default="eval_out", help="output directory")
    p_eval.add_argument("--top-n", dest="top_n", type=int, default=8)
    p_eval.add_argument("--seed", type=int, default=1)
    p_eval.add_argument("--log-level", dest="log_level", default="INFO")
    p_eval.set_defaults(func=cmd_eval)

    p_query = sub.add_parser("query", help="nearest terms by cosine similarity")
    p_query.add_argument("--embeddings", required=True, help="embedding table file")
    p_query.add_argument("--term", required=True, help="query term (words joined by _)")
    p_query.add_argument("-k", type=int, default=5, help="number of neighbors")
    p_query.add_argument("--log-level", dest="log_level", default="WARNING")
    p_query.set_defaults(func=cmd_query)

    p_ablate = sub.add_parser("ablate", help="run all modes and compare cluster quality")
    _add_common_build_flags(p_ablate)
    p_ablate.set_defaults(func=cmd_ablate)

    p_print = sub.add_parser("print-config", help="print the full default configuration")
    p_print.set_defaults(func=cmd_print_config)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
