"""Shared builders for toy projects and synthetic datasets."""

from __future__ import annotations

import numpy as np

from defectseq.dataset import MetricVector, ProjectHistory, VersionSnapshot, make_metric_vector
from defectseq.history import Hvsm, HvsmSet

TOY_SCHEMA = ("loc", "x")

# presence pattern of the 7-file lifecycle project: 5 versions, anchor "v4"
# fA spans everything, fB/fC/fD progressively newer, fE/fF/fG gone by v4
TOY_PRESENCE = {
    "fA": ("v1", "v2", "v3", "v4", "v5"),
    "fB": ("v2", "v3", "v4"),
    "fC": ("v3", "v4"),
    "fD": ("v4",),
    "fE": ("v1", "v2", "v3"),
    "fF": ("v1", "v2"),
    "fG": ("v1",),
}

TOY_BUGS = {"fA": 2, "fB": 0, "fC": 1, "fD": 0}  # labels at v4


def toy_history() -> ProjectHistory:
    versions = []
    for i, vid in enumerate(("v1", "v2", "v3", "v4", "v5"), start=1):
        files = {}
        labels = {}
        for key, present in TOY_PRESENCE.items():
            if vid not in present:
                continue
            files[key] = make_metric_vector([10 * i, float(i)], TOY_SCHEMA)
            labels[key] = TOY_BUGS.get(key, 0) if vid == "v4" else 0
        versions.append(VersionSnapshot(version_id=vid, files=files, labels=labels))
    return ProjectHistory(name="toy", versions=tuple(versions))


def hvsm_from_rows(rows: np.ndarray, label: int | None, schema=None, key="f") -> Hvsm:
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if schema is None:
        schema = tuple(f"m{i}" for i in range(rows.shape[1]))
    return Hvsm(
        key=key,
        version_ids=tuple(f"v{i}" for i in range(rows.shape[0])),
        sequence=tuple(
            MetricVector(values=row, schema=tuple(schema), loc=0) for row in rows
        ),
        label=label,
    )


def hvsm_set(samples, anchor="v", window=None) -> HvsmSet:
    """samples: iterable of (rows, label) pairs."""
    items = tuple(
        hvsm_from_rows(rows, label, key=f"f{i:04d}") for i, (rows, label) in enumerate(samples)
    )
    max_t = max(item.length for item in items)
    return HvsmSet(anchor_version=anchor, items=items, window=window or max_t)


def write_trend_project(
    root,
    n_files: int = 80,
    seed: int = 5,
    n_noise: int = 2,
    clean_test: bool = False,
):
    """Write a four-version metrics-table project whose labels follow the
    trend of one metric; returns the version ids and csv paths.

    Each file's trend metric rises strictly across all four versions for
    positives and falls for negatives, with the third version's value
    N(0,1) for both classes.  ``clean_test`` zeroes every bug count at the
    final version.
    """
    rng = np.random.default_rng(seed)
    version_ids = ("u1", "u2", "u3", "u4")
    schema = ("loc", "trend") + tuple(f"n{i}" for i in range(n_noise))
    rows = {vid: [] for vid in version_ids}
    for i in range(n_files):
        label = 1 if i % 2 == 0 else 0
        loc = int(rng.integers(10, 101))
        x3 = rng.normal()
        g = np.abs(rng.normal(size=3)) + 0.1
        if label:
            trend = (x3 - g[0] - g[1], x3 - g[1], x3, x3 + g[2])
        else:
            trend = (x3 + g[0] + g[1], x3 + g[1], x3, x3 - g[2])
        for vid, value in zip(version_ids, trend):
            noise = rng.normal(size=n_noise)
            bug = label if vid in ("u3", "u4") else 0
            if clean_test and vid == "u4":
                bug = 0
            rows[vid].append(
                [f"f{i:04d}", loc, float(value), *noise.tolist(), bug]
            )
    paths = {}
    for vid in version_ids:
        lines = ["name," + ",".join(schema) + ",bug"]
        for row in rows[vid]:
            lines.append(",".join(str(x) for x in row))
        path = root / f"trend-{vid}.csv"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        paths[vid] = path
    return version_ids, paths, schema


def trend_samples(n: int, seed: int, n_noise: int = 3, T: int = 3):
    """Sequences whose label hinges on a strict upward trend of one metric.

    The trend metric's final value is N(0,1) for both classes, so a
    single-version look at the last step carries no signal; only the path
    to it does.  Positives rise strictly to the final value, negatives fall
    strictly to it.  Returns (samples, final_rows) where final_rows are the
    last-step vectors.
    """
    rng = np.random.default_rng(seed)
    samples = []
    final_rows = []
    for i in range(n):
        label = 1 if i % 2 == 0 else 0
        final = rng.normal()
        gaps = np.abs(rng.normal(size=T - 1)) + 0.1
        path = [final]
        for gap in gaps:
            path.append(path[-1] - gap if label else path[-1] + gap)
        trend = np.array(path[::-1])  # ascending toward the final value
        rows = np.column_stack([trend, rng.normal(size=(T, n_noise))])
        samples.append((rows, label))
        final_rows.append(rows[-1])
    return samples, np.asarray(final_rows)
