"""Shared builders for the test suite: synthetic event CSVs and small
detector parameter sets that cross every phase boundary quickly."""

import csv

import numpy as np

from anomstream.params import (
    HSTreeParams,
    IForestASDParams,
    ILOFParams,
    KitNetParams,
    LODAParams,
    OCSVMParams,
    RRCFParams,
    RSHashParams,
    StormParams,
    XStreamParams,
)

# raw-file column order, including the two passthrough columns the
# loader must tolerate but ignores
RAW_COLUMNS = (
    "timestamp", "processId", "threadId", "parentProcessId", "userId",
    "mountNamespace", "processName", "hostName", "eventId", "eventName",
    "stackAddresses", "argsNum", "returnValue", "args", "sus", "evil",
)

PROC_NAMES = ("sh", "ps", "sshd", "systemd", "cron", "amazon-ssm-agen")
EVENT_NAMES = ("openat", "close", "security_file_open", "sched_process_exit",
               "cap_capable")


def synth_rows(n, seed, n_hosts=3, evil_frac=0.0, sus_frac=0.1):
    """Rows shaped like the labelled kernel-event CSVs, as dicts."""
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(n):
        pid = int(rng.integers(1, 400))
        rows.append({
            "timestamp": round(float(rng.uniform(0.0, 500.0)), 3),
            "processId": pid,
            "threadId": pid,
            "parentProcessId": int(rng.integers(0, 400)),
            "userId": int(rng.choice([0, 0, 1000, 1001])),
            "mountNamespace": int(rng.choice([4026531840, 4026532232])),
            "processName": str(rng.choice(PROC_NAMES)),
            "hostName": "ip-10-100-1-%d" % rng.integers(1, n_hosts + 1),
            "eventId": int(rng.choice([3, 42, 157, 1005])),
            "eventName": str(rng.choice(EVENT_NAMES)),
            "stackAddresses": "[140061080586799]",
            "argsNum": int(rng.integers(0, 6)),
            "returnValue": int(rng.choice([0, 0, 0, -2, 21])),
            "args": "[]",
            "sus": int(rng.random() < sus_frac),
            "evil": int(rng.random() < evil_frac),
        })
    return rows


def write_beth_csv(path, rows, columns=RAW_COLUMNS):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns), extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row[k] for k in columns})


def small_params():
    """Every detector tuned so the stream leaves warmup within ~100 events."""
    return {
        "HSTree": HSTreeParams(n_trees=5, depth=6, window=40),
        "IForestASD": IForestASDParams(window=60, n_trees=10, subsample=32),
        "ILOF": ILOFParams(k_neighbors=4, max_points=60),
        "KitNet": KitNetParams(max_autoencoder_size=3, grace_feature_map=30,
                               grace_training=40),
        "LODA": LODAParams(n_projections=10, n_bins=8, window=30),
        "OCSVM": OCSVMParams(),
        "RRCF": RRCFParams(n_trees=6, tree_capacity=48),
        "RSHash": RSHashParams(n_components=10, sample_size=40,
                               n_hash_tables=3, table_width=2 ** 10),
        "Storm": StormParams(window=50, radius=1.5),
        "XStream": XStreamParams(n_projections=8, n_chains=6, chain_depth=4,
                                 window=30),
    }


def gauss_stream(n, d, seed):
    return np.random.default_rng(seed).normal(size=(n, d))


def planted_stream(n, d, seed, offset=25.0, outlier_at=None):
    """Tight unit-variance blob with one far point planted in it.

    Returns (X, idx). The planted row sits well past 5 sigma in every
    coordinate, so any density/isolation score should rank it last.
    """
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    idx = (3 * n) // 4 if outlier_at is None else outlier_at
    X[idx] = offset + rng.random(d)
    return X, idx


def replay(det, X):
    return np.array([det.process_one(x) for x in np.asarray(X, dtype=float)])


def toy_stream(kind, seed, n=400):
    """Per-detector toy stream: (X, outlier_mask, eval_start).

    Each detector gets the kind of contrast it is built to see (far point
    for density/distance models, negated direction for the linear SVM,
    novel probe for the reconstruction ensemble). Outliers are planted
    every tenth event once the warm-up region has passed; scores before
    eval_start are warm-up output and excluded from comparisons.
    """
    rng = np.random.default_rng(seed * 7919 + 13)
    d = 4

    def plant(X, make_outlier, eval_start):
        mask = np.zeros(len(X), dtype=bool)
        for i in range(eval_start + 5, len(X), 10):
            X[i] = make_outlier()
            mask[i] = True
        return X, mask, eval_start

    if kind == "HSTree":
        X = rng.uniform(0.40, 0.60, size=(n, d))
        return plant(X, lambda: rng.uniform(0.96, 1.0, size=d), 80)
    if kind == "IForestASD":
        X = rng.uniform(0.45, 0.55, size=(n, d))
        return plant(X, lambda: 3.0 + rng.random(d), 60)
    if kind == "ILOF":
        X = rng.normal(size=(n, d))
        far = lambda: rng.choice([-12.0, 12.0], size=d) + rng.normal(size=d)
        return plant(X, far, 20)
    if kind == "KitNet":
        v = rng.uniform(0.2, 0.8, size=d)
        X = v + rng.normal(scale=0.01, size=(n, d))
        return plant(X, lambda: (1.0 - v) + rng.normal(scale=0.01, size=d), 75)
    if kind == "LODA":
        # bimodal stream; probes sit in the empty gap between the modes,
        # so every projection's histogram sees them in near-empty bins
        modes = rng.choice([-2.0, 2.0], size=n)
        X = modes[:, None] * np.ones(d) + rng.normal(scale=0.05, size=(n, d))
        return plant(X, lambda: rng.normal(scale=0.05, size=d), 40)
    if kind == "OCSVM":
        v = np.array([1.0, 0.5, 0.25, 0.75])
        X = np.tile(v, (n, 1))
        return plant(X, lambda: -v, 60)
    if kind == "RRCF":
        X = rng.normal(size=(n, d))
        return plant(X, lambda: 15.0 + rng.random(d), 60)
    if kind == "RSHash":
        # two heavy modes at the range edges; gap probes land in grid
        # cells only other probes occupy, so their min-counts stay low
        modes = rng.choice([-2.0, 2.0], size=n)
        X = modes[:, None] * np.ones(d) + rng.normal(scale=0.05, size=(n, d))
        return plant(X, lambda: rng.normal(scale=0.05, size=d), 50)
    if kind == "Storm":
        X = rng.normal(size=(n, d))
        return plant(X, lambda: 15.0 + rng.normal(size=d), 20)
    if kind == "XStream":
        centers = np.array([[-2.0] * d, [2.0] * d])
        X = centers[rng.integers(0, 2, size=n)] + 0.3 * rng.normal(size=(n, d))
        return plant(X, lambda: 10.0 + rng.random(d), 70)
    raise ValueError(kind)


def make_prepared(rows, enriched=False):
    """PreparedSplit built straight from synthetic row dicts."""
    from anomstream.ingest import PreparedSplit

    n = len(rows)
    numeric = np.empty((n, 6))
    parent = [] if enriched else None
    for i, r in enumerate(rows):
        numeric[i] = [
            1.0 if r["processId"] > 2 else 0.0,
            1.0 if r["parentProcessId"] > 2 else 0.0,
            1.0 if r["userId"] >= 1000 else 0.0,
            1.0 if r["returnValue"] < 0 else 0.0,
            float(r["eventId"]),
            float(r["argsNum"]),
        ]
        if parent is not None:
            parent.append(rows[i - 1]["processName"] if i else "unknown")
    return PreparedSplit(
        numeric,
        [r["processName"] for r in rows],
        [r["eventName"] for r in rows],
        parent,
        np.array([r["sus"] for r in rows], dtype=np.int64),
        np.array([r["evil"] for r in rows], dtype=np.int64),
    )
