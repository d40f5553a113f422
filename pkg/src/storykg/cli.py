"""Command-line interface: one subcommand per workflow."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench as bench_mod
from . import metrics
from .concepts import TierLexicon, extract_candidates
from .corpus import convert_sections_csv, load_corpus
from .gloss import GlossProvider
from .kgstore import (
    KnowledgeIndex,
    build_index,
    load_snapshot,
    open_dump,
    save_snapshot,
)
from .ranker import RankingConfig, rank
from .records import (
    RecordStore,
    export_dataset,
    format_statistics,
    import_dataset,
    summary_statistics,
)
from .relations import RelationKind, relation_from_name
from .validation import (
    ValidationStore,
    ValidationTask,
    agreement_report,
    sample_tasks,
)


def _load_relations_file(path: str) -> frozenset[RelationKind]:
    kinds = set()
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        kind = relation_from_name(line)
        if kind is None:
            raise SystemExit(f"unknown relation in {path}: {line!r}")
        kinds.add(kind)
    if not kinds:
        raise SystemExit(f"relations file {path} is empty")
    return frozenset(kinds)


def _load_split_map(path: str) -> dict[str, str]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise SystemExit("splits file must be a JSON object {story_id: split}")
    return {str(k): str(v) for k, v in data.items()}


def cmd_ingest(args: argparse.Namespace) -> int:
    relations = _load_relations_file(args.relations) if args.relations else None
    with open_dump(args.dump) as fh:
        index = build_index(fh, relations=relations)
    save_snapshot(index, args.out)
    stats = index.stats
    print(
        f"ingested {stats.accepted} lines ({len(index)} unique triples), "
        f"skipped {stats.skipped}, {stats.error_count} malformed"
    )
    for lineno, message in stats.errors[:10]:
        print(f"  line {lineno}: {message}", file=sys.stderr)
    for kind, count in sorted(
        index.relation_counts.items(), key=lambda kv: -kv[1]
    ):
        print(f"  {kind.phrase:<20} {count}")
    print(f"snapshot written to {args.out}")
    return 0


def cmd_rank(args: argparse.Namespace) -> int:
    index = load_snapshot(args.snapshot)
    from .kgstore import normalize_concept

    concept = normalize_concept(args.concept)
    ranked = rank(index.lookup(concept), RankingConfig(top_k=args.top_k))
    if args.json:
        print(json.dumps([r.to_dict() for r in ranked], indent=2, sort_keys=True))
        return 0
    if not ranked:
        print(f"no knowledge found for {concept!r}")
        return 0
    print(f"{'triple':<60} {'s_mean':>8} {'w':>8} {'score':>8}")
    for r in ranked:
        print(
            f"{r.triple.as_text():<60} {r.mean_similarity:>8.4f} "
            f"{r.triple.weight:>8.3f} {r.score:>8.4f}"
        )
    return 0


def cmd_candidates(args: argparse.Namespace) -> int:
    lexicon = (
        TierLexicon.from_file(args.lexicon) if args.lexicon else TierLexicon.packaged()
    )
    text = Path(args.section_file).read_text(encoding="utf-8")
    pretagged = None
    if args.pretagged:
        # a single JSON object, or the matching record in a JSONL file
        raw = Path(args.pretagged).read_text(encoding="utf-8")
        try:
            pretagged = json.loads(raw)
        except json.JSONDecodeError:
            records = [json.loads(l) for l in raw.splitlines() if l.strip()]
            pretagged = next(
                (r for r in records if r.get("text") == text), records[0]
            )
    candidates = extract_candidates(text, lexicon, pretagged=pretagged)
    for c in candidates:
        roles = f" roles={','.join(sorted(c.roles))}" if c.roles else ""
        spans = ",".join(f"{s}-{e}" for s, e in c.spans)
        print(f"{c.lemma:<20} {c.pos:<10} spans={spans}{roles}")
    return 0


def cmd_gloss(args: argparse.Namespace) -> int:
    provider = GlossProvider(
        cache_path=args.cache,
        fixtures_dir=args.fixtures,
    )
    from .kgstore import normalize_concept

    gloss = provider.fetch(
        normalize_concept(args.word), mode="offline" if args.offline else "live"
    )
    print(json.dumps(gloss.to_dict(), indent=2, sort_keys=True))
    return 0


def _build_context(args: argparse.Namespace):
    from .api import ServiceContext

    index = load_snapshot(args.snapshot) if args.snapshot else KnowledgeIndex(())
    sections = load_corpus(args.corpus) if args.corpus else []
    lexicon = (
        TierLexicon.from_file(args.lexicon) if args.lexicon else TierLexicon.packaged()
    )
    store = RecordStore(args.store)
    gloss_provider = None
    if args.gloss_cache or args.gloss_fixtures:
        gloss_provider = GlossProvider(
            cache_path=args.gloss_cache, fixtures_dir=args.gloss_fixtures
        )
    tasks = []
    if args.tasks and Path(args.tasks).exists():
        with Path(args.tasks).open("r", encoding="utf-8") as fh:
            tasks = [
                ValidationTask.from_dict(json.loads(line))
                for line in fh
                if line.strip()
            ]
    validation_store = ValidationStore(args.validation_store) if args.validation_store else None
    split_map = _load_split_map(args.splits) if args.splits else {}
    return ServiceContext(
        index=index,
        sections=sections,
        lexicon=lexicon,
        store=store,
        gloss_provider=gloss_provider,
        gloss_mode="live" if args.gloss_live else "offline",
        validation_store=validation_store,
        tasks=tasks,
        split_map=split_map,
    )


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .api import create_app

    ctx = _build_context(args)
    app = create_app(ctx, static_dir=args.static)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    store = RecordStore(args.store)
    split_map = _load_split_map(args.splits)
    exported = export_dataset(store, split_map, path=args.out)
    print(f"exported {len(exported)} records to {args.out}")
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    if args.infile:
        records = import_dataset(args.infile)
    else:
        store = RecordStore(args.store)
        split_map = _load_split_map(args.splits) if args.splits else {}
        from .records import export_record

        records = [
            export_record(r, r.split or split_map.get(r.story_id, "train"))
            for r in store
        ]
    if args.split:
        records = [r for r in records if r.get("split") == args.split]
    report = summary_statistics(records)
    if args.json:
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        print(format_statistics(report))
    return 0


def cmd_audit(args: argparse.Namespace) -> int:
    store = RecordStore(args.store)
    findings = store.audit()
    if not findings:
        print(f"audit clean: {len(store)} records")
        return 0
    for finding in findings:
        print(f"{finding['record_id']}:")
        for violation in finding["violations"]:
            print(f"  VIOLATION {violation}")
        for warning in finding["warnings"]:
            print(f"  warning   {warning}")
    return 1 if any(f["violations"] for f in findings) else 0


def cmd_validate_sample(args: argparse.Namespace) -> int:
    store = RecordStore(args.store)
    split_map = _load_split_map(args.splits) if args.splits else None
    tasks = sample_tasks(
        store,
        n=args.n,
        seed=args.seed,
        validators=args.validators.split(","),
        split=args.split,
        split_map=split_map,
    )
    with Path(args.out).open("w", encoding="utf-8") as fh:
        for task in tasks:
            fh.write(json.dumps(task.to_dict(), sort_keys=True) + "\n")
    print(f"sampled {len(tasks)} validation tasks to {args.out}")
    return 0


def cmd_validate_report(args: argparse.Namespace) -> int:
    store = ValidationStore(args.validation_store)
    report = agreement_report(store)
    if args.json:
        print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    else:
        print(f"tasks:            {report.n}")
        print(f"top-3 agreement:  {report.top3_agreement:.2%}")
        print(f"top-1 agreement:  {report.top1_agreement:.2%}")
        print(f"QA Rouge-L F1:    {report.rouge_l_f1:.3f}")
        if report.embedding_similarity is not None:
            print(f"embedding cosine: {report.embedding_similarity:.3f}")
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    candidates = Path(args.candidate).read_text(encoding="utf-8").splitlines()
    reference_lines = Path(args.refs).read_text(encoding="utf-8").splitlines()
    if len(candidates) != len(reference_lines):
        raise SystemExit(
            f"{len(candidates)} candidates vs {len(reference_lines)} reference lines"
        )
    scores = []
    for cand, refs in zip(candidates, reference_lines):
        references = [r for r in refs.split("\t") if r.strip()]
        scores.append(metrics.rouge_l_multi_ref(cand, references, args.reduction))
    n = len(scores)
    print(f"pairs:     {n}")
    print(f"precision: {sum(s.precision for s in scores) / n:.4f}")
    print(f"recall:    {sum(s.recall for s in scores) / n:.4f}")
    print(f"f1:        {sum(s.f1 for s in scores) / n:.4f}")
    return 0


def cmd_dataset_stats(args: argparse.Namespace) -> int:
    records = import_dataset(args.infile)
    report = summary_statistics(records)
    print(format_statistics(report))
    print()
    counts = metrics.question_type_counts(r["question"] for r in records)
    total = sum(counts.values())
    print(f"{'question type':<15} {'count':>8} {'share':>8}")
    for qtype in list(metrics.INTERROGATIVES) + [metrics.QUESTION_TYPE_OTHER]:
        count = counts.get(qtype, 0)
        print(f"{qtype:<15} {count:>8} {count / total:>8.2%}")
        print(f"QTYPE\t{qtype}\t{count}\t{count / total:.6f}")
    print()
    dist = metrics.relation_distribution(records)
    print(f"{'relation':<22} {'share':>8}")
    for kind, fraction in dist.items():
        print(f"{kind.phrase:<22} {fraction:>8.2%}")
        print(f"RELATION\t{kind.phrase}\t{fraction:.6f}")
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    records = import_dataset(args.data)
    if args.split:
        records = [r for r in records if r.get("split") == args.split]
    items = bench_mod.items_from_export(records)
    strategy, shots = bench_mod.parse_strategy(args.strategy)
    template = bench_mod.build_template(args.variant, strategy, shots)
    demo_pool = []
    if args.demos:
        demo_records = import_dataset(args.demos)
        demo_pool = bench_mod.demos_from_export(demo_records, args.variant)
    if args.endpoint == "stub":
        endpoint = bench_mod.hash_stub(args.variant)
        repeats = args.repeats or 1
    else:
        if not args.base_url or not args.model:
            raise SystemExit("--base-url and --model are required for --endpoint http")
        endpoint = bench_mod.HttpChatEndpoint(args.base_url, args.model)
        repeats = args.repeats or 3
    reports = bench_mod.run_bench_repeated(
        items, template, endpoint, args.seed, demo_pool=demo_pool, repeats=repeats
    )
    out = Path(args.out)
    with out.open("w", encoding="utf-8") as fh:
        for report in reports:
            fh.write(report.to_json_lines())
    for report in reports:
        agg = report.aggregate
        mean_f1 = agg["mean_qa_f1"]
        print(
            f"seed={agg['seed']} n={agg['n_items']} parsed={agg['n_parsed']} "
            f"mean_qa_f1={mean_f1 if mean_f1 is None else round(mean_f1, 4)} "
            f"parse_failures={agg['parse_failure_rate']:.2%}"
        )
    print(f"report written to {out}")
    return 0


def cmd_convert_corpus(args: argparse.Namespace) -> int:
    count = 0
    with Path(args.out).open("w", encoding="utf-8") as fh:
        for record in convert_sections_csv(args.csv):
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
            count += 1
    print(f"wrote {count} sections to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="storykg",
        description="Knowledge-guided QA annotation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="build an index snapshot from an assertions dump")
    p.add_argument("--dump", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--relations", help="file restricting the relation whitelist")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("rank", help="rank a concept's triples from a snapshot")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--concept", required=True)
    p.add_argument("--top-k", type=int, default=6)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("candidates", help="extract candidate concepts from a section")
    p.add_argument("--section-file", required=True)
    p.add_argument("--lexicon")
    p.add_argument("--pretagged", help="JSON file with externally tagged tokens/roles")
    p.set_defaults(func=cmd_candidates)

    p = sub.add_parser("gloss", help="fetch the dictionary gloss for a word")
    p.add_argument("word")
    p.add_argument("--offline", action="store_true")
    p.add_argument("--cache", help="cache file path")
    p.add_argument("--fixtures", help="fixture directory")
    p.set_defaults(func=cmd_gloss)

    p = sub.add_parser("serve", help="start the annotation HTTP service")
    p.add_argument("--snapshot")
    p.add_argument("--corpus")
    p.add_argument("--store", required=True)
    p.add_argument("--lexicon")
    p.add_argument("--splits")
    p.add_argument("--tasks", help="validation tasks JSONL")
    p.add_argument("--validation-store")
    p.add_argument("--gloss-cache")
    p.add_argument("--gloss-fixtures")
    p.add_argument("--gloss-live", action="store_true")
    p.add_argument("--static", help="serve a built UI from this directory")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("export", help="export the record store as a dataset")
    p.add_argument("--store", required=True)
    p.add_argument("--splits", required=True, help="JSON {story_id: split} map")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("stats", help="summary statistics over records")
    p.add_argument("--in", dest="infile", help="export file")
    p.add_argument("--store")
    p.add_argument("--splits")
    p.add_argument("--split", choices=["train", "val", "test"])
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("audit", help="re-check every stored record's invariants")
    p.add_argument("--store", required=True)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("validate", help="cross-validation workflows")
    vsub = p.add_subparsers(dest="validate_command", required=True)
    ps = vsub.add_parser("sample", help="sample annotation records into tasks")
    ps.add_argument("--store", required=True)
    ps.add_argument("-n", type=int, default=50)
    ps.add_argument("--seed", type=int, required=True)
    ps.add_argument("--validators", required=True, help="comma-separated ids")
    ps.add_argument("--split", choices=["train", "val", "test"])
    ps.add_argument("--splits", help="JSON split map (when records carry none)")
    ps.add_argument("--out", required=True)
    ps.set_defaults(func=cmd_validate_sample)
    pr = vsub.add_parser("report", help="agreement report over recorded results")
    pr.add_argument("--validation-store", required=True)
    pr.add_argument("--json", action="store_true")
    pr.set_defaults(func=cmd_validate_report)

    p = sub.add_parser("score", help="Rouge-L between candidate and reference files")
    p.add_argument("--candidate", required=True)
    p.add_argument("--refs", required=True, help="tab-separated references per line")
    p.add_argument("--reduction", choices=["max", "mean"], default="max")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("dataset-stats", help="dataset distribution tables")
    p.add_argument("--in", dest="infile", required=True)
    p.set_defaults(func=cmd_dataset_stats)

    p = sub.add_parser("bench", help="run the QA-generation benchmark")
    p.add_argument("--data", required=True, help="export file with ground truths")
    p.add_argument("--split", choices=["train", "val", "test"])
    p.add_argument("--variant", choices=list(bench_mod.VARIANTS), required=True)
    p.add_argument("--strategy", default="zero_shot", help="zero_shot|few_shot:K|cot")
    p.add_argument("--endpoint", choices=["stub", "http"], default="stub")
    p.add_argument("--base-url")
    p.add_argument("--model")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--demos", help="export file the demonstrations are drawn from")
    p.add_argument("--repeats", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("convert-corpus", help="convert a sections CSV to corpus JSONL")
    p.add_argument("--csv", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_convert_corpus)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
