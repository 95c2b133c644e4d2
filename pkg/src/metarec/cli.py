"""Command line entry point: ingest, build, serve, refresh, bench, eval."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from metarec.catalog import load_catalog, load_schema
from metarec.encoder import BackendConfig, BackendKind
from metarec.errors import MetarecError
from metarec.rerank import RerankConfig
from metarec.service import (
    EngineConfig,
    ServiceState,
    build_snapshot,
    create_app,
    load_snapshot,
    save_snapshot,
)


def _engine_config(args: argparse.Namespace) -> EngineConfig:
    if getattr(args, "config", None):
        return EngineConfig.from_file(args.config)
    backend = BackendConfig(
        kind=BackendKind(getattr(args, "backend", "stub")),
        dim=getattr(args, "dim", 384),
        endpoint=getattr(args, "endpoint", None),
    )
    rerank = RerankConfig(
        batch_size=getattr(args, "batch_size", 4),
        top_n=getattr(args, "top_n", 5),
        k=getattr(args, "k", 100),
    )
    return EngineConfig(backend=backend, rerank=rerank, budget=getattr(args, "budget", 512))


def cmd_ingest(args: argparse.Namespace) -> int:
    schema = load_schema(args.schema)
    catalog = load_catalog(schema, args.catalog)
    print(f"ok: {len(catalog)} documents, {len(schema.features)} features")
    return 0


def cmd_build(args: argparse.Namespace) -> int:
    cfg = _engine_config(args)
    schema = load_schema(args.schema)
    catalog = load_catalog(schema, args.catalog)
    snapshot = build_snapshot(catalog, cfg)
    save_snapshot(snapshot, args.out)
    print(f"built snapshot: {len(catalog)} docs -> {args.out}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    cfg = _engine_config(args)
    state = ServiceState(cfg=cfg, schema_path=args.schema, catalog_path=args.catalog)
    state.install(load_snapshot(args.snapshot))
    app = create_app(state)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_refresh(args: argparse.Namespace) -> int:
    if args.url:
        import httpx

        resp = httpx.post(f"{args.url.rstrip('/')}/v1/refresh", timeout=args.timeout)
        print(resp.json())
        return 0 if resp.status_code == 202 else 1
    if not (args.schema and args.catalog and args.out):
        print("refresh needs either --url or --schema/--catalog/--out", file=sys.stderr)
        return 2
    # Offline mode: rebuild snapshot files in place.
    return cmd_build(args)


def cmd_bench(args: argparse.Namespace) -> int:
    from metarec.evalkit import bench, report_csv, report_markdown
    from metarec.rerank import run_pipeline

    cfg = _engine_config(args)
    snapshot = load_snapshot(args.snapshot)
    if args.queries:
        queries = [
            line.strip()
            for line in Path(args.queries).read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
    else:
        from metarec.fixtures import bench_queries

        queries = bench_queries()
    batch_sizes = [int(b) for b in args.batch_sizes.split(",")]

    def run(query: str, b: int) -> None:
        run_pipeline(
            query,
            snapshot.index,
            snapshot.prompts,
            RerankConfig(batch_size=b, top_n=cfg.rerank.top_n, k=cfg.rerank.k),
            cfg.backend,
        )

    report = bench(run, queries, batch_sizes, label=args.label)
    print(report_markdown([report]))
    if args.csv:
        report_csv([report], args.csv)
        print(f"wrote {args.csv}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    from metarec.evalkit import (
        annotator_bias,
        bucketize_query,
        load_annotations,
        table2_summary,
    )

    records = load_annotations(args.annotations)
    counts = table2_summary(records)
    bias = annotator_bias(records)
    print(json.dumps(
        {
            "queries": len(records),
            "buckets": {bucket.value: n for bucket, n in counts.items()},
            "annotator_means": list(bias.means),
            "annotator_spread": bias.spread,
        },
        indent=2,
    ))
    if args.per_query:
        for rec in records:
            avg, bucket = bucketize_query(rec)
            print(f"{rec.query_id}\t{avg:.2f}\t{bucket.value}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="metarec")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_engine_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--backend", choices=["stub", "remote"], default="stub")
        p.add_argument("--endpoint", help="remote backend base URL")
        p.add_argument("--dim", type=int, default=384)
        p.add_argument("--batch-size", dest="batch_size", type=int, default=4)
        p.add_argument("--top-n", dest="top_n", type=int, default=5)
        p.add_argument("-k", "--top-k", dest="k", type=int, default=100)
        p.add_argument("--budget", type=int, default=512)

    p = sub.add_parser("ingest", help="validate a schema + catalog pair")
    p.add_argument("--schema", required=True)
    p.add_argument("--catalog", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("build", help="compile prompts and build the index files")
    p.add_argument("--schema", required=True)
    p.add_argument("--catalog", required=True)
    p.add_argument("--out", required=True)
    add_engine_flags(p)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("serve", help="serve a built snapshot over HTTP")
    p.add_argument("--snapshot", required=True, help="snapshot directory from build")
    p.add_argument("--schema", help="schema path, enables /v1/refresh")
    p.add_argument("--catalog", help="catalog path, enables /v1/refresh")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    add_engine_flags(p)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("refresh", help="trigger a running service refresh or rebuild files")
    p.add_argument("--url", help="base URL of a running service")
    p.add_argument("--timeout", type=float, default=120.0)
    p.add_argument("--schema")
    p.add_argument("--catalog")
    p.add_argument("--out")
    add_engine_flags(p)
    p.set_defaults(func=cmd_refresh)

    p = sub.add_parser("bench", help="latency sweep over batch sizes")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--queries", help="query file, one per line (default: 31 synthetic)")
    p.add_argument("--batch-sizes", default="1,2,4,8,16,32,64")
    p.add_argument("--label", default="local")
    p.add_argument("--csv", help="also write a CSV report")
    add_engine_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("eval", help="aggregate annotator relevance scores")
    p.add_argument("--annotations", required=True, help="JSONL annotations file")
    p.add_argument("--per-query", action="store_true")
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except MetarecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
