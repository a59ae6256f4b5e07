"""Prequential benchmark harness.

Replays train then test through a detector, timing each event's stream
work (ordinal coding, scaling, score, learn); computes rank-based ROC-AUC
for both label columns over the test portion only; aggregates seeds into
one report row per (model, sorted, enriched) cell.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import rankdata

from .core import DegenerateLabelsError, RunResult
from .ingest import PreparedSplit
from .preprocess import SCALER_FOR_KIND, OrdinalEncoder, RunningScaler

REPORT_COLUMNS = (
    "model",
    "sorted",
    "enriched",
    "time_mean_s",
    "time_std_s",
    "auc_evil_mean",
    "auc_evil_std",
    "auc_sus_mean",
    "auc_sus_std",
)


def roc_auc(scores, labels) -> float:
    """P(score_pos > score_neg) + 0.5 P(equal), via average ranks.

    Equals the pairwise-counting definition; ties get half credit. All
    intermediate sums are exact in float (ranks are multiples of 0.5 well
    below 2**52), so the result is numer/den correctly rounded.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError(f"shape mismatch: {scores.shape} vs {labels.shape}")
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabelsError(f"need both classes, got {n_pos} positives of {labels.size}")
    ranks = rankdata(scores, method="average")
    numer = float(ranks[pos].sum()) - n_pos * (n_pos + 1) / 2.0
    return numer / (n_pos * n_neg)


@dataclass
class ExperimentConfig:
    kind: str
    params: object
    sorted: bool = False
    enriched: bool = False
    seeds: Sequence[int] = (0, 1, 2, 3, 4)
    timing: str = "per-event"  # per-event | stopwatch

    def __post_init__(self):
        if not self.seeds:
            raise ValueError("seeds must be non-empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be distinct")
        if self.timing not in ("per-event", "stopwatch"):
            raise ValueError(f"unknown timing mode {self.timing!r}")


def replay(detector, x: np.ndarray, scaler: Optional[RunningScaler] = None,
           timing: str = "per-event") -> Tuple[np.ndarray, float]:
    """Prequential pass over pre-built vectors; returns (scores, seconds).

    Used by synthetic suites; the dataset path goes through run_one, which
    also folds ordinal coding into the timed region.
    """
    n = x.shape[0]
    scores = np.empty(n, dtype=np.float64)
    clock = time.perf_counter
    total = 0.0
    if timing == "stopwatch":
        t0 = clock()
        for i in range(n):
            v = x[i]
            if scaler is not None:
                v = scaler.fit_transform_one(v)
            scores[i] = detector.process_one(v)
        total = clock() - t0
    else:
        for i in range(n):
            t0 = clock()
            v = x[i]
            if scaler is not None:
                v = scaler.fit_transform_one(v)
            scores[i] = detector.process_one(v)
            total += clock() - t0
    return scores, total


def _stream_scores(detector, encoder: OrdinalEncoder,
                   scaler: Optional[RunningScaler], prep: PreparedSplit,
                   timing: str) -> Tuple[np.ndarray, float]:
    n = len(prep)
    d = prep.dim
    numeric = prep.numeric
    proc = prep.process_names
    evn = prep.event_names
    parent = prep.parent_names
    scores = np.empty(n, dtype=np.float64)
    clock = time.perf_counter
    total = 0.0
    vec = np.empty(d, dtype=np.float64)
    per_event = timing == "per-event"
    if not per_event:
        t_start = clock()
    for i in range(n):
        if per_event:
            t0 = clock()
        vec[:6] = numeric[i]
        vec[6] = encoder.encode("processName", proc[i])
        vec[7] = encoder.encode("eventName", evn[i])
        if parent is not None:
            vec[8] = encoder.encode("parentProcessName", parent[i])
        v = scaler.fit_transform_one(vec) if scaler is not None else vec
        scores[i] = detector.process_one(v)
        if per_event:
            total += clock() - t0
    if not per_event:
        total = clock() - t_start
    return scores, total


def run_one(cfg: ExperimentConfig, seed: int, train: PreparedSplit,
            test: PreparedSplit) -> RunResult:
    """One (config, seed) replay over train then test."""
    from . import make_detector

    if train.dim != test.dim:
        raise ValueError(f"split dims differ: {train.dim} vs {test.dim}")
    detector = make_detector(cfg.kind, params=cfg.params, seed=seed)
    columns = ["processName", "eventName"]
    if train.enriched:
        columns.append("parentProcessName")
    encoder = OrdinalEncoder(columns)
    mode = SCALER_FOR_KIND.get(cfg.kind)
    scaler = RunningScaler(mode, train.dim) if mode else None

    s_train, t_train = _stream_scores(detector, encoder, scaler, train, cfg.timing)
    s_test, t_test = _stream_scores(detector, encoder, scaler, test, cfg.timing)

    return RunResult(
        detector=cfg.kind,
        sorted=cfg.sorted,
        enriched=cfg.enriched,
        seed=seed,
        scores=np.concatenate([s_train, s_test]),
        total_time_seconds=t_train + t_test,
        roc_auc_evil=roc_auc(s_test, test.evil),
        roc_auc_sus=roc_auc(s_test, test.sus),
        n_train=len(train),
        n_test=len(test),
    )


@dataclass
class GridReport:
    rows: List[dict] = field(default_factory=list)
    failures: List[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def _mean_std(values: List[float]) -> Tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    mean = float(arr.mean())
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return mean, std


def _dump_path(dump_dir: str, kind: str, srt: bool, enr: bool, seed: int) -> str:
    import os

    name = "scores_{}_{}_{}_seed{}.csv".format(
        kind, "sorted" if srt else "orig", "enriched" if enr else "plain", seed
    )
    return os.path.join(dump_dir, name)


def run_cell(
    kind: str,
    srt: bool,
    enr: bool,
    params: object,
    seeds: Sequence[int],
    train: PreparedSplit,
    test: PreparedSplit,
    timing: str = "per-event",
    dump_dir: Optional[str] = None,
    on_result: Optional[Callable[[RunResult], None]] = None,
    progress: Optional[Callable[[str], None]] = None,
) -> Tuple[Optional[dict], List[dict]]:
    """All seeds of one (model, sorted, enriched) cell -> (row, failures)."""
    cfg = ExperimentConfig(
        kind=kind, params=params, sorted=srt, enriched=enr,
        seeds=tuple(seeds), timing=timing,
    )
    times, evils, suses = [], [], []
    failures: List[dict] = []
    for seed in seeds:
        try:
            rr = run_one(cfg, seed, train, test)
        except Exception as exc:
            failures.append(
                {"model": kind, "sorted": srt, "enriched": enr,
                 "seed": seed, "error": f"{type(exc).__name__}: {exc}"}
            )
            continue
        if dump_dir is not None:
            write_score_dump(_dump_path(dump_dir, kind, srt, enr, seed),
                             rr, test.sus, test.evil)
        if on_result is not None:
            on_result(rr)
        if progress is not None:
            n = rr.n_train + rr.n_test
            eps = n / rr.total_time_seconds if rr.total_time_seconds > 0 else float("inf")
            progress(f"{kind} sorted={srt} enriched={enr} seed={seed}: "
                     f"{n} events, {eps:.0f} events/s")
        times.append(rr.total_time_seconds)
        evils.append(rr.roc_auc_evil)
        suses.append(rr.roc_auc_sus)
    if not times:
        return None, failures
    tm, ts = _mean_std(times)
    em, es = _mean_std(evils)
    sm, ss = _mean_std(suses)
    row = {"model": kind, "sorted": srt, "enriched": enr,
           "time_mean_s": tm, "time_std_s": ts,
           "auc_evil_mean": em, "auc_evil_std": es,
           "auc_sus_mean": sm, "auc_sus_std": ss}
    return row, failures


_POOL_DATA: dict = {}


def _pool_cell(args):
    kind, srt, enr = args
    d = _POOL_DATA
    train, test = d["prepared"][(srt, enr)]
    return run_cell(kind, srt, enr, d["params_by_kind"].get(kind), d["seeds"],
                    train, test, d["timing"], d["dump_dir"])


def run_grid(
    kinds: Sequence[str],
    params_by_kind: Dict[str, object],
    prepared: Dict[Tuple[bool, bool], Tuple[PreparedSplit, PreparedSplit]],
    seeds: Sequence[int],
    sorted_options: Sequence[bool] = (False, True),
    enriched_options: Sequence[bool] = (False, True),
    timing: str = "per-event",
    workers: int = 1,
    dump_dir: Optional[str] = None,
    on_result: Optional[Callable[[RunResult], None]] = None,
    progress: Optional[Callable[[str], None]] = None,
) -> GridReport:
    """Every (model, sorted, enriched, seed) cell; failures don't abort.

    ``prepared`` maps (sorted, enriched) to its (train, test) splits; only
    requested combinations need to be present. workers > 1 distributes
    whole cells over forked processes (timing numbers then reflect the
    contention; keep workers=1 for clean throughput measurements).
    """
    cells = [(k, s, e) for k in kinds for s in sorted_options for e in enriched_options]
    report = GridReport()
    done = 0
    if workers > 1:
        import multiprocessing as mp

        _POOL_DATA.update(
            prepared=prepared, params_by_kind=params_by_kind,
            seeds=tuple(seeds), timing=timing, dump_dir=dump_dir,
        )
        try:
            ctx = mp.get_context("fork")
            with ctx.Pool(processes=workers) as pool:
                for row, fails in pool.imap(_pool_cell, cells):
                    if row is not None:
                        report.rows.append(row)
                    report.failures.extend(fails)
                    done += 1
                    if progress is not None:
                        progress(f"cells done: {done}/{len(cells)}")
        finally:
            _POOL_DATA.clear()
        order = {c: i for i, c in enumerate(cells)}
        report.rows.sort(key=lambda r: order[(r["model"], r["sorted"], r["enriched"])])
        return report
    for kind, srt, enr in cells:
        train, test = prepared[(srt, enr)]
        row, fails = run_cell(
            kind, srt, enr, params_by_kind.get(kind), seeds, train, test,
            timing, dump_dir, on_result, progress,
        )
        if row is not None:
            report.rows.append(row)
        report.failures.extend(fails)
        done += 1
        if progress is not None:
            progress(f"cells done: {done}/{len(cells)}")
    return report


# -- report output ------------------------------------------------------


def write_report_csv(path: str, report: GridReport) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS)
        w.writeheader()
        for row in report.rows:
            out = dict(row)
            out["sorted"] = str(bool(row["sorted"])).lower()
            out["enriched"] = str(bool(row["enriched"])).lower()
            for k in REPORT_COLUMNS[3:]:
                out[k] = f"{row[k]:.6f}"
            w.writerow(out)


def format_report_markdown(report: GridReport) -> str:
    headers = ["model", "sorted", "enriched", "time (s)", "AUC evil", "AUC sus"]
    body = []
    for r in report.rows:
        body.append([
            r["model"],
            "yes" if r["sorted"] else "no",
            "yes" if r["enriched"] else "no",
            f"{r['time_mean_s']:.3f} ± {r['time_std_s']:.3f}",
            f"{r['auc_evil_mean']:.3f} ± {r['auc_evil_std']:.3f}",
            f"{r['auc_sus_mean']:.3f} ± {r['auc_sus_std']:.3f}",
        ])
    widths = [max(len(h), *(len(row[i]) for row in body)) if body else len(h)
              for i, h in enumerate(headers)]
    def line(cells):
        return "| " + " | ".join(c.ljust(w) for c, w in zip(cells, widths)) + " |"
    out = [line(headers), "|" + "|".join("-" * (w + 2) for w in widths) + "|"]
    out += [line(row) for row in body]
    if report.failures:
        out.append("")
        out.append(f"{len(report.failures)} failed cell(s):")
        for f in report.failures:
            out.append(
                f"- {f['model']} sorted={f['sorted']} enriched={f['enriched']} "
                f"seed={f['seed']}: {f['error']}"
            )
    return "\n".join(out) + "\n"


def write_report_markdown(path: str, report: GridReport) -> None:
    with open(path, "w") as fh:
        fh.write(format_report_markdown(report))


def write_score_dump(path: str, rr: RunResult, sus: np.ndarray, evil: np.ndarray) -> None:
    """Per-run score trace: test-portion rows with both labels."""
    test_scores = rr.scores[rr.n_train:]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "score", "evil", "sus"])
        for i in range(test_scores.shape[0]):
            w.writerow([i, repr(float(test_scores[i])), int(evil[i]), int(sus[i])])
