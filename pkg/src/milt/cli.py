"""Command-line entry points: ingest, tree export, benchmarks, API server."""

from __future__ import annotations

import argparse
import csv as csv_mod
import io
import json
import sys
from pathlib import Path

from .data import MilDataset, SplitSpec, convert_musk_uci, load_csv, save_csv
from .evaluation import EvalResult, positioning_experiment, run_benchmark
from .miltree import build_miltree, classify_positions
from .selection import SelectionConfig
from .svm import SvmConfig


def _resolve_dataset(name_or_path: str, data_dir: str) -> MilDataset:
    p = Path(name_or_path)
    if p.exists():
        return load_csv(p)
    candidate = Path(data_dir) / f"{name_or_path}.csv"
    if candidate.exists():
        return load_csv(candidate)
    raise SystemExit(
        f"error: dataset {name_or_path!r} not found (no file and no {candidate})"
    )


def _svm_config(args) -> SvmConfig:
    return SvmConfig(variant=args.svm, c=args.c, nu=args.nu)


def _result_rows(res: EvalResult) -> list[tuple[str, str]]:
    return [
        ("dataset", res.dataset),
        ("method", res.method),
        ("mode", res.mode),
        ("train/test", f"{res.n_train}/{res.n_test}"),
        ("matching", f"{res.matching} ({100 * res.matching / max(res.n_test, 1):.1f}%)"),
        ("non-matching", f"{res.non_matching} ({100 * res.non_matching / max(res.n_test, 1):.1f}%)"),
        ("accuracy", f"{100 * res.accuracy:.2f}%"),
        ("precision", f"{100 * res.precision:.2f}%"),
        ("recall", f"{100 * res.recall:.2f}%"),
        ("f1", f"{res.f1:.4f}"),
        ("swapped", str(res.actions.get("swapped", 0))),
        ("added", str(res.actions.get("added", 0))),
    ]


def _print_table(rows: list[tuple[str, ...]], out=None) -> None:
    out = out or sys.stdout
    widths = [max(len(str(r[i])) for r in rows) for i in range(len(rows[0]))]
    for r in rows:
        out.write("  ".join(str(v).ljust(w) for v, w in zip(r, widths)).rstrip() + "\n")


def _print_csv(rows: list[tuple[str, ...]], out=None) -> None:
    out = out or sys.stdout
    buf = io.StringIO()
    writer = csv_mod.writer(buf)
    for r in rows:
        writer.writerow(r)
    out.write(buf.getvalue())


def cmd_ingest(args) -> int:
    src = Path(args.csv)
    if not src.exists():
        raise SystemExit(f"error: {src} does not exist")
    name = args.name or src.stem
    ds = convert_musk_uci(src, name=name) if args.musk_uci else load_csv(src)
    data_dir = Path(args.data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    dest = data_dir / f"{name}.csv"
    save_csv(ds, dest)
    counts = ds.class_counts()
    by_class = "/".join(str(counts.get(c, 0)) for c in sorted(counts))
    print(
        f"ingested {name}: {len(ds.bags)} bags ({by_class}), "
        f"{ds.n_instances} instances, d={ds.dimension} -> {dest}"
    )
    return 0


def cmd_tree(args) -> int:
    ds = _resolve_dataset(args.dataset, args.data_dir)
    tree, slots = build_miltree(ds, args.method, SelectionConfig())
    positions = classify_positions(tree)
    payload = tree.export_bag_tree(slots, positions)
    text = json.dumps(payload, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}: {len(payload['nodes'])} nodes, {len(payload['edges'])} edges")
    else:
        print(text)
    return 0


def cmd_bench(args) -> int:
    ds = _resolve_dataset(args.dataset, args.data_dir)
    res = run_benchmark(
        ds,
        args.method,
        SplitSpec(args.split, seed=args.seed),
        _svm_config(args),
        SelectionConfig(),
        rounds=args.rounds,
        scale=args.scale,
    )
    rows = _result_rows(res)
    (_print_csv if args.csv else _print_table)(rows)
    return 0


def cmd_positions(args) -> int:
    ds = _resolve_dataset(args.dataset, args.data_dir)
    results = positioning_experiment(
        ds,
        args.method,
        SplitSpec(args.split, seed=args.seed),
        _svm_config(args),
        SelectionConfig(),
        rounds=args.rounds,
        scale=args.scale,
    )
    header = ("", "external", "internal", "combined")
    order = ["external", "internal", "combined"]
    rows: list[tuple[str, ...]] = [header]
    rows.append(
        ("matching bags", *(f"{results[m].matching} ({100 * results[m].matching / max(results[m].n_test, 1):.1f}%)" for m in order))
    )
    rows.append(
        ("non-matching bags", *(f"{results[m].non_matching} ({100 * results[m].non_matching / max(results[m].n_test, 1):.1f}%)" for m in order))
    )
    for metric in ("accuracy", "precision", "recall"):
        rows.append((metric, *(f"{100 * getattr(results[m], metric):.2f}%" for m in order)))
    (_print_csv if args.csv else _print_table)(rows)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .api import create_app

    app = create_app(args.data_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="milt",
        description="Multiple-instance learning workbench: trees, prototypes, benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_ing = sub.add_parser("ingest", help="validate a CSV (or UCI musk file) into the data dir")
    p_ing.add_argument("csv")
    p_ing.add_argument("--musk-uci", action="store_true", help="input uses the UCI musk .data layout")
    p_ing.add_argument("--name", default=None)
    p_ing.add_argument("--data-dir", default="data")
    p_ing.set_defaults(func=cmd_ingest)

    p_tree = sub.add_parser("tree", help="build the bag-space tree and export JSON")
    p_tree.add_argument("dataset")
    p_tree.add_argument("--method", choices=("si", "med"), required=True)
    p_tree.add_argument("--out", default=None)
    p_tree.add_argument("--data-dir", default="data")
    p_tree.set_defaults(func=cmd_tree)

    def add_bench_args(p):
        p.add_argument("dataset")
        p.add_argument("--method", choices=("si", "med"), required=True)
        p.add_argument("--split", type=float, default=0.3)
        p.add_argument("--seed", type=int, default=1)
        p.add_argument("--svm", choices=("c", "nu"), default="c")
        p.add_argument("--c", type=float, default=1.0)
        p.add_argument("--nu", type=float, default=0.6)
        p.add_argument("--rounds", type=int, default=1)
        p.add_argument("--scale", action="store_true", help="min-max scale features for the SVM")
        p.add_argument("--csv", action="store_true", help="emit CSV instead of an aligned table")
        p.add_argument("--data-dir", default="data")

    p_bench = sub.add_parser("bench", help="unattended benchmark run")
    add_bench_args(p_bench)
    p_bench.set_defaults(func=cmd_bench)

    p_pos = sub.add_parser("positions", help="external/internal/combined training-set experiment")
    add_bench_args(p_pos)
    p_pos.set_defaults(func=cmd_positions)

    p_srv = sub.add_parser("serve", help="run the HTTP API")
    p_srv.add_argument("--port", type=int, default=8000)
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--data-dir", default="data")
    p_srv.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        raise SystemExit(f"error: {exc}") from exc


if __name__ == "__main__":
    sys.exit(main())
