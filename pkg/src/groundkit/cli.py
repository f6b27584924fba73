"""``groundkit`` command line.

Exit codes: 0 success, 1 data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .config import ConfigError, GlobalConfig, load_config, override
from .corpus import CorpusError, load_corpus, validate_corpus

log = logging.getLogger("groundkit")

EXIT_OK, EXIT_DATA, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _csv(s: str) -> list[str]:
    return [x.strip() for x in s.split(",") if x.strip()]


def _floats(s: str) -> list[float]:
    try:
        return [float(x) for x in _csv(s)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {s!r}") from None


def _write_jsonl(path: Path, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in rows:
            fh.write(json.dumps(r, ensure_ascii=False) + "\n")


def _read_jsonl(path: Path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


# --------------------------------------------------------------------------- commands


def cmd_validate(args, cfg: GlobalConfig) -> int:
    corpus = load_corpus(_need_corpus(cfg))
    report = validate_corpus(corpus, strict=args.strict)
    for d in report.diagnostics:
        log.log(logging.ERROR if d.severity == "error" else logging.WARNING, "%s %s: %s", d.code, d.record_id, d.message)
    summary = {"errors": report.errors, "warnings": report.warnings}
    if args.out:
        Path(args.out).write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    print(json.dumps(summary))
    return EXIT_DATA if report.errors else EXIT_OK


def cmd_stats(args, cfg: GlobalConfig) -> int:
    from .stats import compute_stats, emit_report

    corpus = load_corpus(_need_corpus(cfg))
    s = compute_stats(corpus, shards=cfg.workers)
    text = emit_report(s, "json", out=args.out)
    if args.table:
        sys.stdout.write(emit_report(s, "table", name=corpus.name))
    elif not args.out:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_dedup(args, cfg: GlobalConfig) -> int:
    from .dedup import DedupConfig, dedup_elements

    corpus = load_corpus(_need_corpus(cfg))
    dcfg = DedupConfig(
        hamming_threshold=cfg.dedup.threshold,
        label_mode=cfg.dedup.label_mode,
        min_crop_px=cfg.dedup.min_crop_px,
    )
    reps, report = dedup_elements(corpus, dcfg, seed=cfg.seed, workers=cfg.workers)
    sizes = {rep: len(members) for rep, members in report.clusters.items()}
    _write_jsonl(Path(args.out), (
        {"element_id": eid, "screenshot_id": corpus.elements[eid].screenshot_id, "cluster_size": sizes[eid]}
        for eid in reps
    ))
    if args.report:
        Path(args.report).write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    log.info("dedup: %d elements -> %d unique (%d skipped)", report.input_count, report.unique_count, len(report.skipped))
    return EXIT_OK


def cmd_synth(args, cfg: GlobalConfig) -> int:
    from .instructions import ClientConfig, SpatialConfig, synthesize, write_pool

    corpus = load_corpus(_need_corpus(cfg))
    ids = [r["element_id"] for r in _read_jsonl(Path(args.unique))]
    client = ClientConfig.from_env(
        model=cfg.synth.model, max_in_flight=cfg.synth.max_in_flight, max_retries=cfg.synth.max_retries
    )
    if not client.configured:
        log.info("no model endpoint configured; running template-only subkinds")
    result = synthesize(
        corpus,
        ids,
        kinds=cfg.synth.kinds,
        seed=cfg.seed,
        client_cfg=client,
        spatial_cfg=SpatialConfig(max_gap_px=cfg.synth.max_gap_px),
        workers=cfg.workers,
        retry_rejected=cfg.synth.retry_rejected,
    )
    meta = {"corpus": str(Path(_need_corpus(cfg)).resolve()), "seed": cfg.seed, "kinds": sorted(cfg.synth.kinds)}
    write_pool(result, args.out, meta)
    log.info("synth: %s", {k.value: len(v) for k, v in result.samples.items()})
    return EXIT_OK


def cmd_export_sft(args, cfg: GlobalConfig) -> int:
    from .instructions import Kind, MixSpec, export_sft, read_pool, sample_mix

    pool, meta = read_pool(args.pool)
    corpus_path = cfg.corpus or meta.get("corpus")
    if not corpus_path:
        raise UsageError("--corpus is required (pool has no recorded corpus)")
    if cfg.mix.total is None:
        raise UsageError("--total is required")
    fr = cfg.mix.fractions
    if len(fr) != 3:
        raise UsageError("--mix needs three fractions: direct,functional,spatial")
    spec = MixSpec(total=cfg.mix.total, fractions=dict(zip((Kind.DIRECT, Kind.FUNCTIONAL, Kind.SPATIAL), fr)))
    dataset = sample_mix(pool, spec, cfg.seed)
    n = export_sft(dataset, load_corpus(corpus_path), args.out)
    log.info("export-sft: wrote %d records to %s", n, args.out)
    return EXIT_OK


def _pool_ids(path: Path) -> list[str]:
    if path.is_dir():
        from .instructions import read_pool

        samples, _ = read_pool(path)
        return sorted({s.element_id for rows in samples.values() for s in rows})
    return [r["element_id"] for r in _read_jsonl(path)]


def cmd_select_rl(args, cfg: GlobalConfig) -> int:
    from .instructions import select_rl_unseen

    pool = _pool_ids(Path(args.pool))
    used = set()
    for ex in args.exclude or []:
        used.update(r["element_id"] for r in _read_jsonl(Path(ex)))
    picked = select_rl_unseen(pool, used, args.k, cfg.seed)
    rows = ({"element_id": eid} for eid in picked)
    if args.out:
        _write_jsonl(Path(args.out), rows)
    else:
        for r in rows:
            print(json.dumps(r))
    log.info("select-rl: %d of %d unseen", len(picked), len(set(pool) - used))
    return EXIT_OK


def cmd_reward_server(args, cfg: GlobalConfig) -> int:
    from .reward_server import RewardServer, parse_listen, serve_stdio

    if args.stdio:
        serve_stdio(sys.stdin, sys.stdout)
        return EXIT_OK
    listen = cfg.reward_server.listen
    if not listen:
        raise UsageError("reward-server needs --listen <host:port> or --stdio")
    try:
        addr = parse_listen(listen)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    with RewardServer(addr) as server:
        log.info("reward server listening on %s:%d", *server.server_address[:2])
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass
    return EXIT_OK


def cmd_eval(args, cfg: GlobalConfig) -> int:
    from .evaluation import load_benchmark, load_predictions, report_table, score

    if not cfg.eval.coord_space:
        raise UsageError("--coord-space is required (pixel, unit or milli); it is never guessed")
    bench_path = Path(args.benchmark)
    report = score(
        load_benchmark(bench_path),
        load_predictions(args.pred),
        coord_space=cfg.eval.coord_space,
        strict_ids=cfg.eval.strict_ids,
        exclusive_bounds=cfg.eval.exclusive_bounds,
        pick=cfg.eval.pick,
        image_root=bench_path.parent,
    )
    layout = args.by or []
    try:
        table, mirror = report_table(report, layout)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    out = report.to_dict()
    out["table"] = mirror
    if args.out:
        Path(args.out).write_text(json.dumps(out, indent=2) + "\n", encoding="utf-8")
    sys.stdout.write(table)
    return EXIT_OK


def _need_corpus(cfg: GlobalConfig) -> str:
    if not cfg.corpus:
        raise UsageError("--corpus is required")
    return cfg.corpus


# --------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--config", help="JSON config file (flags override it)")
    g.add_argument("--seed", type=int, help="random seed (default 0)")
    g.add_argument("--workers", type=int, help="worker count (default $GROUNDKIT_WORKERS or 1)")
    g.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="log level (default INFO)")

    parser = argparse.ArgumentParser(prog="groundkit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"groundkit {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    p = sub.add_parser("validate", parents=[common], help="check a corpus against its schema and invariants")
    p.add_argument("--corpus", help="corpus directory or manifest.json")
    p.add_argument("--strict", action="store_true", help="treat out-of-image and degenerate boxes as errors")
    p.add_argument("--out", help="write the full diagnostic report as JSON")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("stats", parents=[common], help="corpus statistics")
    p.add_argument("--corpus", help="corpus directory or manifest.json")
    p.add_argument("--out", help="write the JSON report here")
    p.add_argument("--table", action="store_true", help="print a one-row summary table")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("dedup", parents=[common], help="collapse near-duplicate elements")
    p.add_argument("--corpus", help="corpus directory or manifest.json")
    p.add_argument("--threshold", type=int, help="max Hamming distance between hashes (default 5)")
    p.add_argument("--label-mode", choices=["exact", "normalized"], help="label matching (default normalized)")
    p.add_argument("--min-crop-px", type=int, help="pad smaller crops to this size (default 8)")
    p.add_argument("--out", required=True, help="unique element ids (JSONL)")
    p.add_argument("--report", help="dedup report (JSON)")
    p.set_defaults(func=cmd_dedup)

    p = sub.add_parser("synth", parents=[common], help="synthesize grounding instructions")
    p.add_argument("--corpus", help="corpus directory or manifest.json")
    p.add_argument("--unique", required=True, help="unique element ids from dedup (JSONL)")
    p.add_argument("--kinds", type=_csv, help="comma list of direct,functional,spatial")
    p.add_argument("--max-gap-px", type=float, help="max gap for 'between' anchors (default 200)")
    p.add_argument("--retry-rejected", type=int, help="extra attempts for rejected model responses (default 0)")
    p.add_argument("--model", help="model name sent to the endpoint")
    p.add_argument("--max-in-flight", type=int, help="concurrent model requests (default 4)")
    p.add_argument("--max-retries", type=int, help="retries per failed request (default 3)")
    p.add_argument("--out", required=True, help="pool output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("export-sft", parents=[common], help="sample the training mix and write SFT JSONL")
    p.add_argument("--pool", required=True, help="pool directory from synth")
    p.add_argument("--corpus", help="override the corpus recorded in the pool")
    p.add_argument("--mix", type=_floats, help="direct,functional,spatial fractions (default 0.5,0.35,0.15)")
    p.add_argument("--total", type=int, help="number of samples")
    p.add_argument("--out", required=True, help="SFT JSONL path")
    p.set_defaults(func=cmd_export_sft)

    p = sub.add_parser("select-rl", parents=[common], help="pick unseen elements for RL")
    p.add_argument("--pool", required=True, help="unique ids JSONL or pool directory")
    p.add_argument("--exclude", action="append", help="JSONL with element_id fields to exclude (repeatable)")
    p.add_argument("--k", type=int, required=True, help="number of elements")
    p.add_argument("--out", help="output JSONL (default stdout)")
    p.set_defaults(func=cmd_select_rl)

    p = sub.add_parser("reward-server", parents=[common], help="serve rewards over NDJSON")
    m = p.add_mutually_exclusive_group()
    m.add_argument("--listen", help="host:port to listen on")
    m.add_argument("--stdio", action="store_true", help="read requests from stdin, answer on stdout")
    p.set_defaults(func=cmd_reward_server)

    p = sub.add_parser("eval", parents=[common], help="score predictions against a benchmark")
    p.add_argument("--benchmark", required=True, help="benchmark JSONL")
    p.add_argument("--pred", required=True, help="predictions JSONL")
    p.add_argument("--coord-space", choices=["pixel", "unit", "milli"], help="coordinate space of text predictions")
    p.add_argument("--by", type=_csv, help="comma list of tag keys to break down by")
    p.add_argument("--strict-ids", action="store_true", default=None, help="count unknown-id predictions as failures")
    p.add_argument("--exclusive-bounds", action="store_true", default=None, help="box edges count as misses")
    p.add_argument("--pick", choices=["last", "first"], help="which coordinate pair to use (default last)")
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(func=cmd_eval)
    return parser


_FLAG_KEYS = {
    "corpus": "corpus",
    "seed": "seed",
    "workers": "workers",
    "log_level": "log_level",
    "threshold": "dedup.threshold",
    "label_mode": "dedup.label_mode",
    "min_crop_px": "dedup.min_crop_px",
    "kinds": "synth.kinds",
    "max_gap_px": "synth.max_gap_px",
    "retry_rejected": "synth.retry_rejected",
    "model": "synth.model",
    "max_in_flight": "synth.max_in_flight",
    "max_retries": "synth.max_retries",
    "mix": "mix.fractions",
    "total": "mix.total",
    "coord_space": "eval.coord_space",
    "strict_ids": "eval.strict_ids",
    "exclusive_bounds": "eval.exclusive_bounds",
    "pick": "eval.pick",
    "listen": "reward_server.listen",
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = load_config(args.config)
        ns = vars(args)
        override(cfg, {key: ns.get(flag) for flag, key in _FLAG_KEYS.items() if flag in ns})
    except (ConfigError, OSError) as exc:
        print(f"groundkit: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(
        level=getattr(logging, str(cfg.log_level).upper(), logging.INFO),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )
    log.info("resolved config: %s", json.dumps(cfg.to_dict(), sort_keys=True))
    try:
        return args.func(args, cfg)
    except UsageError as exc:
        print(f"groundkit {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CorpusError, ValueError, KeyError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_DATA


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
