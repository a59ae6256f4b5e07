"""Command line front end.

Subcommands:

  prepare   read the raw train/test CSVs, apply ordering/enrichment
            variants, and cache the prepared feature columns
  run       score one model over a prepared variant and report AUCs
  grid      full model x ordering x enrichment sweep with seed averaging
  report    re-render a report CSV as a markdown table

Every flag can also be supplied through an environment variable named
ANOMSTREAM_<FLAG> (dashes become underscores, e.g. ANOMSTREAM_DATA_DIR,
ANOMSTREAM_DUMP_SCORES). Explicit flags win over the environment.

Exit codes: 0 success, 1 when at least one run failed, 2 on usage errors.
"""

import argparse
import csv
import hashlib
import os
import sys
from typing import Dict, List, Optional, Sequence, Tuple

from .core import AnomstreamError
from .eval import (
    REPORT_COLUMNS,
    format_report_markdown,
    run_grid,
    write_report_csv,
    write_report_markdown,
)
from .ingest import (
    PreparedSplit,
    ProcessNameTable,
    enrich_parent_names,
    load_split,
    prepare_split,
    read_prepared,
    sort_split,
    write_prepared,
)
from .params import KINDS, default_params, load_params_file

TRAIN_FILE = "labelled_training_data.csv"
TEST_FILE = "labelled_testing_data.csv"


def _progress(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def _env(name: str) -> Optional[str]:
    return os.environ.get("ANOMSTREAM_" + name.upper().replace("-", "_"))


def _parse_seeds(text: str) -> List[int]:
    """"0,1,2" or "0..4" (inclusive)."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(part) for part in text.split(",") if part.strip() != ""]


def _parse_tristate(text: str) -> List[bool]:
    return {"true": [True], "false": [False], "both": [False, True]}[text]


def _tristate(parser, flag: str, text: str) -> List[bool]:
    """Like _parse_tristate, but a usage error for bad values.

    Needed because argparse only checks `choices` for values typed on the
    command line, not for defaults pulled from the environment.
    """
    try:
        return _parse_tristate(text)
    except KeyError:
        parser.error(f"--{flag}: expected true, false or both, got {text!r}")


def _schema_tag(enriched: bool) -> str:
    from .preprocess import BASE_FEATURES, ENRICHED_FEATURE

    names = list(BASE_FEATURES) + ([ENRICHED_FEATURE] if enriched else [])
    return hashlib.sha1(",".join(names).encode()).hexdigest()[:8]


def _cache_path(cache_dir: str, which: str, srt: bool, enr: bool) -> str:
    name = "{}_{}_{}_{}.csv".format(
        which, "sorted" if srt else "orig", "enriched" if enr else "plain",
        _schema_tag(enr),
    )
    return os.path.join(cache_dir, name)


def _prepare_variants(
    data_dir: str,
    cache_dir: str,
    variants: Sequence[Tuple[bool, bool]],
    progress=_progress,
) -> Dict[Tuple[bool, bool], Tuple[PreparedSplit, PreparedSplit]]:
    """Load or build the prepared (train, test) pair for each variant.

    The raw CSVs are read at most once; each requested variant is
    materialized into its own cache file under cache_dir.
    """
    out: Dict[Tuple[bool, bool], Tuple[PreparedSplit, PreparedSplit]] = {}
    missing = [v for v in variants
               if not (os.path.exists(_cache_path(cache_dir, "train", *v))
                       and os.path.exists(_cache_path(cache_dir, "test", *v)))]
    for srt, enr in variants:
        if (srt, enr) in missing:
            continue
        progress(f"cached: sorted={srt} enriched={enr}")
        out[(srt, enr)] = (
            read_prepared(_cache_path(cache_dir, "train", srt, enr)),
            read_prepared(_cache_path(cache_dir, "test", srt, enr)),
        )
    if not missing:
        return out
    os.makedirs(cache_dir, exist_ok=True)
    train_path = os.path.join(data_dir, TRAIN_FILE)
    test_path = os.path.join(data_dir, TEST_FILE)
    progress(f"loading {train_path}")
    raw_train = load_split(train_path, "train")
    progress(f"loading {test_path}")
    raw_test = load_split(test_path, "test")
    for srt in (False, True):
        todo = [v for v in missing if v[0] == srt]
        if not todo:
            continue
        if srt:
            train = sort_split(raw_train)
            test = sort_split(raw_test)
        else:
            train, test = raw_train, raw_test
        for _, enr in todo:
            if enr:
                table = ProcessNameTable()
                enrich_parent_names(train, table)
                enrich_parent_names(test, table)
            prep_train = prepare_split(train, enriched=enr)
            prep_test = prepare_split(test, enriched=enr)
            for which, prep in (("train", prep_train), ("test", prep_test)):
                path = _cache_path(cache_dir, which, srt, enr)
                write_prepared(path, prep)
                progress(f"wrote {path}")
            out[(srt, enr)] = (prep_train, prep_test)
    return out


def _load_params(path: Optional[str]):
    if path is None:
        return {kind: default_params(kind) for kind in KINDS}
    return load_params_file(path)


def _add_data_flags(p: argparse.ArgumentParser, tristate_default: str = "false") -> None:
    p.add_argument("--data-dir", default=_env("data-dir"),
                   help="directory holding the raw train/test CSVs")
    p.add_argument("--sorted", default=_env("sorted") or tristate_default,
                   choices=["true", "false", "both"],
                   help="replay in (host, timestamp) order")
    p.add_argument("--enriched", default=_env("enriched") or tristate_default,
                   choices=["true", "false", "both"],
                   help="add the looked-up parent process name feature")


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seeds", default=_env("seeds") or "0,1,2,3,4",
                   help='comma list or inclusive range, e.g. "0,1,2" or "0..4"')
    p.add_argument("--params", default=_env("params"),
                   help="INI file overriding model parameters")
    p.add_argument("--dump-scores", default=_env("dump-scores"), metavar="DIR",
                   help="write one per-event score CSV per run into DIR")
    p.add_argument("--timing", default=_env("timing") or "per-event",
                   choices=["per-event", "stopwatch"],
                   help="per-event sums the scoring clock around each event; "
                        "stopwatch times the whole replay loop")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anomstream",
        description="streaming anomaly detection over process event logs",
        epilog="environment fallbacks: ANOMSTREAM_<FLAG>, e.g. "
               "ANOMSTREAM_DATA_DIR, ANOMSTREAM_SEEDS",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_prep = sub.add_parser("prepare", help="build the prepared feature cache")
    _add_data_flags(p_prep, tristate_default="both")
    p_prep.add_argument("--out", default=_env("out"),
                        help="cache directory (default: <data-dir>/prepared)")

    p_run = sub.add_parser("run", help="run one model")
    _add_data_flags(p_run)
    _add_run_flags(p_run)
    p_run.add_argument("--model", required=_env("model") is None,
                       default=_env("model"), choices=list(KINDS))
    p_run.add_argument("--out", default=_env("out") or "report.csv",
                       help="report CSV path (a .md twin is written beside it)")

    # the grid's whole point is the sweep, so both axes default to "both"
    p_grid = sub.add_parser("grid", help="sweep models x orderings x enrichment")
    _add_data_flags(p_grid, tristate_default="both")
    _add_run_flags(p_grid)
    p_grid.add_argument("--model", action="append", default=None,
                        choices=list(KINDS) + ["all"],
                        help="repeatable; default all")
    p_grid.add_argument("--workers", type=int, default=None,
                        help="forked processes over grid cells (default "
                             "ANOMSTREAM_WORKERS or 1); keep 1 for clean "
                             "per-event timings")
    p_grid.add_argument("--out", default=_env("out") or "report.csv")

    p_rep = sub.add_parser("report", help="render a report CSV as markdown")
    p_rep.add_argument("csv", help="report CSV produced by run/grid")
    p_rep.add_argument("--out", default=_env("out"),
                       help="markdown output path (default: stdout)")
    return parser


def _require_data_dir(parser: argparse.ArgumentParser, args) -> str:
    if not args.data_dir:
        parser.error("--data-dir is required (or set ANOMSTREAM_DATA_DIR)")
    return args.data_dir


def _cmd_prepare(parser, args) -> int:
    data_dir = _require_data_dir(parser, args)
    cache_dir = args.out or os.path.join(data_dir, "prepared")
    variants = [(s, e) for s in _tristate(parser, "sorted", args.sorted)
                for e in _tristate(parser, "enriched", args.enriched)]
    _prepare_variants(data_dir, cache_dir, variants)
    return 0


def _cmd_run_or_grid(parser, args, kinds: List[str], workers: int) -> int:
    data_dir = _require_data_dir(parser, args)
    try:
        seeds = _parse_seeds(args.seeds)
    except ValueError:
        parser.error(f"--seeds could not be parsed: {args.seeds!r}")
    if not seeds or len(set(seeds)) != len(seeds):
        parser.error(f"--seeds must be distinct and non-empty, got {args.seeds!r}")
    if args.timing not in ("per-event", "stopwatch"):
        parser.error(f"--timing: expected per-event or stopwatch, got {args.timing!r}")
    try:
        params_by_kind = _load_params(args.params)
    except (AnomstreamError, OSError) as exc:
        parser.error(f"--params: {exc}")
    sorted_opts = _tristate(parser, "sorted", args.sorted)
    enriched_opts = _tristate(parser, "enriched", args.enriched)
    cache_dir = os.path.join(data_dir, "prepared")
    variants = [(s, e) for s in sorted_opts for e in enriched_opts]
    prepared = _prepare_variants(data_dir, cache_dir, variants)
    if args.dump_scores:
        os.makedirs(args.dump_scores, exist_ok=True)
    report = run_grid(
        kinds, params_by_kind, prepared, seeds,
        sorted_options=sorted_opts, enriched_options=enriched_opts,
        timing=args.timing, workers=workers,
        dump_dir=args.dump_scores, progress=_progress,
    )
    write_report_csv(args.out, report)
    md_path = os.path.splitext(args.out)[0] + ".md"
    write_report_markdown(md_path, report)
    _progress(f"wrote {args.out} and {md_path}")
    for f in report.failures:
        _progress("FAILED {model} sorted={sorted} enriched={enriched} "
                  "seed={seed}: {error}".format(**f))
    return 0 if report.ok else 1


def _cmd_report(parser, args) -> int:
    rows = []
    with open(args.csv, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != list(REPORT_COLUMNS):
            parser.error(f"{args.csv} is not a report CSV "
                         f"(columns {reader.fieldnames})")
        for rec in reader:
            row = dict(rec)
            for key in ("sorted", "enriched"):
                row[key] = row[key] == "true"
            for key in REPORT_COLUMNS[3:]:
                row[key] = float(row[key])
            rows.append(row)
    from .eval import GridReport

    text = format_report_markdown(GridReport(rows=rows))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        print(text, end="")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "prepare":
            return _cmd_prepare(parser, args)
        if args.command == "run":
            if args.model not in KINDS:  # env fallback bypasses choices
                parser.error(f"--model: unknown model {args.model!r}")
            return _cmd_run_or_grid(parser, args, [args.model], workers=1)
        if args.command == "grid":
            models = args.model or (_env("model") or "all").split(",")
            if "all" in models:
                models = list(KINDS)
            bad = [m for m in models if m not in KINDS]
            if bad:
                parser.error(f"unknown model(s): {', '.join(bad)}")
            try:
                workers = args.workers if args.workers is not None else int(_env("workers") or "1")
            except ValueError:
                parser.error(f"--workers: not an integer: {_env('workers')!r}")
            if workers < 1:
                parser.error("--workers must be >= 1")
            # dedupe, keep order
            models = list(dict.fromkeys(models))
            return _cmd_run_or_grid(parser, args, models, workers=workers)
        if args.command == "report":
            return _cmd_report(parser, args)
    except (AnomstreamError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    raise AssertionError(args.command)


if __name__ == "__main__":
    sys.exit(main())
