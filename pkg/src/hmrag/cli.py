"""Command-line surface: ingest, build, query, feedback, eval, export, synth."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bench import (
    Variant,
    build_variant_indexes,
    load_queries,
    run_benchmark,
    scaling_probe,
    write_report,
)
from .config import EngineConfig
from .controller import PHASES, STRATEGIES
from .engine import apply_feedback, run_query
from .index_store import IndexStore, digest, index_lock, ingest
from .metrics import load_judgments
from .synth import SynthSpec, generate
from .tree import export_structure


def _load_config(args) -> EngineConfig:
    cfg = EngineConfig.load(getattr(args, "config", None))
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    return cfg


def _emit(args, payload: dict, human: str) -> None:
    if getattr(args, "json", False):
        print(json.dumps(payload, sort_keys=True, default=str))
    else:
        print(human)


def cmd_ingest(args) -> int:
    cfg = _load_config(args)
    if args.text_only:
        cfg.multimodal = False
    out = ingest(args.manifest, args.out, cfg, force=args.force)
    _emit(
        args,
        {"index": str(out), "digest": digest(out)},
        f"ingested {args.manifest} -> {out}\ndigest {digest(out)}",
    )
    return 0


def cmd_build(args) -> int:
    store = IndexStore(args.index)
    with index_lock(store.dir):
        tree = store.build(force=args.force)
    _emit(
        args,
        {"root": tree.root_id, "nodes": len(tree.nodes), "digest": digest(store.dir)},
        f"built tree root={tree.root_id} nodes={len(tree.nodes)}\ndigest {digest(store.dir)}",
    )
    return 0


def cmd_query(args) -> int:
    store = IndexStore(args.index)
    tree = store.load_tree()
    outcome = run_query(
        store,
        tree,
        args.query,
        phase=args.phase,
        strategy_override=args.strategy,
        top_k=args.top_k,
    )
    routing = outcome.routing
    payload = {
        "query_id": outcome.query_id,
        "strategy": outcome.result.strategy,
        "overridden": outcome.overridden,
        "band": routing.band,
        "entropy": routing.entropy,
        "distribution": dict(
            zip(("factual", "procedural", "analytical", "synthesized"),
                routing.distribution.as_tuple())
        ),
        "items": [
            {
                "rank": rank,
                "node_id": i.node_id,
                "score": i.score,
                "level": i.level,
                "modality": i.modality_tags,
                "snippet": i.snippet,
            }
            for rank, i in enumerate(outcome.result.items, start=1)
        ],
        "response": outcome.response,
    }
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    else:
        print(f"query_id: {outcome.query_id}")
        print(
            f"routing: entropy={routing.entropy:.4f} band={routing.band} "
            f"strategy={outcome.result.strategy}"
            + (" (override)" if outcome.overridden else "")
        )
        print(f"distribution: {payload['distribution']}")
        for item in payload["items"]:
            print(
                f"{item['rank']:>3}. {item['node_id']}  score={item['score']:.4f} "
                f"level={item['level']} [{','.join(item['modality'])}]"
            )
        print("--- response ---")
        print(outcome.response)
    return 0


def cmd_feedback(args) -> int:
    store = IndexStore(args.index)
    with index_lock(store.dir):
        state = apply_feedback(store, args.query_id, args.reward)
    _emit(
        args,
        {"query_id": args.query_id, "update_count": state.update_count},
        f"feedback applied for {args.query_id}; updates so far: {state.update_count}",
    )
    return 0


def cmd_eval(args) -> int:
    cfg = _load_config(args)
    workdir = Path(args.workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    out: dict = {}
    if args.scale:
        result = scaling_probe(workdir, seed=cfg.seed)
        out["scaling"] = {
            "sizes": result["sizes"],
            "build_seconds": result["build_seconds"],
            "query_seconds": result["query_seconds"],
            "figure": str(result["figure"]),
        }
    if args.manifest:
        if not (args.queries and args.judgments):
            print("error: --manifest requires --queries and --judgments", file=sys.stderr)
            return 2
        variants = build_variant_indexes(args.manifest, workdir, cfg)
        report = run_benchmark(
            variants,
            load_queries(args.queries),
            load_judgments(args.judgments),
            top_k=cfg.top_k,
        )
        paths = write_report(report, workdir / "report")
        out["report"] = {k: str(v) for k, v in paths.items()}
        out["cells"] = {
            name: {"ndcg": c.ndcg_mean, "sga": c.sga, "tda": c.tda}
            for name, c in report.cells.items()
        }
    if not out:
        print("nothing to do: pass a manifest with queries/judgments and/or --scale",
              file=sys.stderr)
        return 2
    if args.json:
        print(json.dumps(out, sort_keys=True))
    else:
        for name, cell in out.get("cells", {}).items():
            print(f"{name}: ndcg={cell['ndcg']:.4f} sga={cell['sga']:.4f} tda={cell['tda']:.4f}")
        if "scaling" in out:
            s = out["scaling"]
            print(f"scaling: sizes={s['sizes']} build={['%.2f' % t for t in s['build_seconds']]}s")
        for k, v in out.get("report", {}).items():
            print(f"report {k}: {v}")
    return 0


def cmd_export(args) -> int:
    store = IndexStore(args.index)
    tree = store.load_tree()
    sys.stdout.write(export_structure(tree))
    return 0


def cmd_synth(args) -> int:
    spec = SynthSpec(
        seed=args.seed or 0,
        docs=args.docs,
        pages_per_doc=args.pages_per_doc,
        tokens_per_page=args.tokens_per_page,
        image_density=args.image_density,
        topics=args.topics,
        n_queries=args.queries,
        image_query_fraction=args.image_query_fraction,
    )
    paths = generate(spec, args.out)
    _emit(
        args,
        {k: str(v) for k, v in paths.items()},
        "\n".join(f"{k}: {v}" for k, v in paths.items()),
    )
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hmrag", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--json", action="store_true", help="machine-readable output")

    p = sub.add_parser("ingest", help="chunk, caption, and embed a corpus manifest")
    common(p)
    p.add_argument("manifest")
    p.add_argument("out")
    p.add_argument("--force", action="store_true")
    p.add_argument("--text-only", action="store_true", help="ignore visual content")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("build", help="build the summary tree over an ingested index")
    common(p)
    p.add_argument("index")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("query", help="route and run a query against an index")
    common(p)
    p.add_argument("index")
    p.add_argument("query")
    p.add_argument("--phase", default="rescue", choices=PHASES)
    p.add_argument("--strategy", default=None, choices=STRATEGIES,
                   help="bypass the controller with a fixed strategy")
    p.add_argument("--top-k", type=int, default=None)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("feedback", help="apply a reward to a past query's routing")
    common(p)
    p.add_argument("index")
    p.add_argument("query_id")
    p.add_argument("reward", type=float)
    p.set_defaults(func=cmd_feedback)

    p = sub.add_parser("eval", help="run the benchmark matrix and/or scaling probe")
    common(p)
    p.add_argument("--manifest")
    p.add_argument("--queries")
    p.add_argument("--judgments")
    p.add_argument("--workdir", default="eval_out")
    p.add_argument("--scale", action="store_true", help="2k/3k chunk scaling probe")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("export", help="print the tree structure as a node/edge list")
    common(p)
    p.add_argument("index")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("synth", help="generate a synthetic corpus with queries and judgments")
    common(p)
    p.add_argument("out")
    p.add_argument("--docs", type=int, default=4)
    p.add_argument("--pages-per-doc", type=int, default=4)
    p.add_argument("--tokens-per-page", type=int, default=120)
    p.add_argument("--image-density", type=float, default=0.5)
    p.add_argument("--topics", type=int, default=2)
    p.add_argument("--queries", type=int, default=12)
    p.add_argument("--image-query-fraction", type=float, default=0.4)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
