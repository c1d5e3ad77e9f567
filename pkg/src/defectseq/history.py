"""Per-file version sequences and their extraction into training samples.

For an anchor version v, every file present in v yields one sample: the
file's metric vectors over its trailing run of consecutive versions ending
at v, at most ``window`` versions long.  Files absent from v but seen
earlier are dead and yield nothing.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass

import numpy as np

from .dataset import MetricVector, ProjectHistory, binarize_label


class Lifecycle(enum.Enum):
    DEVELOPING = "developing"
    NEWBORN = "newborn"
    DEAD = "dead"


@dataclass(frozen=True, eq=False)
class Hvsm:
    """One file's historical version sequence of metrics.

    ``version_ids`` are consecutive versions of the project ending at the
    anchor; ``sequence`` holds the aligned metric vectors.  ``label`` is the
    binarized bug label at the anchor, or None when unknown.
    """

    key: str
    version_ids: tuple[str, ...]
    sequence: tuple[MetricVector, ...]
    label: int | None

    def __post_init__(self):
        if len(self.version_ids) != len(self.sequence) or not self.sequence:
            raise ValueError("sequence and version_ids must align and be non-empty")
        schemas = {vec.schema for vec in self.sequence}
        if len(schemas) != 1:
            raise ValueError(f"mixed schemas in sequence for {self.key!r}")

    @property
    def length(self) -> int:
        return len(self.sequence)

    @property
    def schema(self) -> tuple[str, ...]:
        return self.sequence[0].schema


@dataclass(frozen=True, eq=False)
class HvsmSet:
    """All samples extracted at one anchor version."""

    anchor_version: str
    items: tuple[Hvsm, ...]
    window: int

    @property
    def m(self) -> int:
        return len(self.items)

    @property
    def schema(self) -> tuple[str, ...]:
        return self.items[0].schema if self.items else ()


def classify_file(history: ProjectHistory, v: str, key: str) -> Lifecycle:
    """Lifecycle of ``key`` at version ``v``.

    Developing: present at v and in some earlier version.  Newborn: first
    appears at v.  Dead: seen earlier but absent from v.
    """
    idx = history.index(v)
    present_now = key in history.versions[idx].files
    present_before = any(
        key in history.versions[i].files for i in range(idx)
    )
    if present_now:
        return Lifecycle.DEVELOPING if present_before else Lifecycle.NEWBORN
    if present_before:
        return Lifecycle.DEAD
    raise KeyError(f"file {key!r} never seen up to version {v!r}")


def lifecycle_counts(history: ProjectHistory, v: str) -> dict[Lifecycle, int]:
    """Counts of developing/newborn files in v and of files dead at v."""
    idx = history.index(v)
    now = set(history.versions[idx].files)
    before: set[str] = set()
    for i in range(idx):
        before |= set(history.versions[i].files)
    return {
        Lifecycle.DEVELOPING: len(now & before),
        Lifecycle.NEWBORN: len(now - before),
        Lifecycle.DEAD: len(before - now),
    }


def developing_fraction(history: ProjectHistory, v: str) -> float:
    """Share of version v's files that existed in an earlier version."""
    counts = lifecycle_counts(history, v)
    total = counts[Lifecycle.DEVELOPING] + counts[Lifecycle.NEWBORN]
    return counts[Lifecycle.DEVELOPING] / total if total else 0.0


def extract_hvsm_set(
    history: ProjectHistory,
    v: str,
    window: int | None = None,
) -> HvsmSet:
    """Extract one sample per file present at anchor version ``v``.

    A file's sequence spans its longest run of consecutive-version presence
    ending at v, truncated to the trailing ``window`` versions.  ``window``
    of None means the whole available history.  Items are ordered by file
    key for reproducible batching.
    """
    anchor_idx = history.index(v)
    if window is None:
        window = anchor_idx + 1
    if window < 1:
        raise ValueError("window must be at least 1")
    anchor = history.versions[anchor_idx]
    items: list[Hvsm] = []
    for key in sorted(anchor.files):
        start = anchor_idx
        while (
            start > 0
            and anchor_idx - start + 1 < window
            and key in history.versions[start - 1].files
        ):
            start -= 1
        version_ids = tuple(
            history.versions[i].version_id for i in range(start, anchor_idx + 1)
        )
        sequence = tuple(
            history.versions[i].files[key] for i in range(start, anchor_idx + 1)
        )
        bug = anchor.labels.get(key)
        label = binarize_label(bug) if bug is not None else None
        items.append(Hvsm(key=key, version_ids=version_ids, sequence=sequence, label=label))
    return HvsmSet(anchor_version=v, items=tuple(items), window=window)


def average_length(s: HvsmSet) -> float:
    """Mean sequence length over the set's samples."""
    if not s.items:
        return 0.0
    return sum(item.length for item in s.items) / len(s.items)


@dataclass(frozen=True, eq=False)
class Normalizer:
    """Per-dimension z-score parameters, fit on training data only.

    Dimensions whose spread is below 1e-12 keep std 1 so constant metrics
    pass through as plain mean shifts.
    """

    mean: np.ndarray
    std: np.ndarray
    schema: tuple[str, ...]

    def transform(self, values: np.ndarray) -> np.ndarray:
        return (np.asarray(values, dtype=float) - self.mean) / self.std


def fit_normalizer(train: HvsmSet) -> Normalizer:
    """Population mean/std over every vector of every training sequence."""
    if not train.items:
        raise ValueError("cannot fit a normalizer on an empty set")
    rows = np.vstack([vec.values for item in train.items for vec in item.sequence])
    return fit_normalizer_rows(rows, train.schema)


def fit_normalizer_rows(rows: np.ndarray, schema: tuple[str, ...]) -> Normalizer:
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2 or rows.shape[0] == 0:
        raise ValueError("need a non-empty 2-d array of feature rows")
    mean = rows.mean(axis=0)
    std = rows.std(axis=0)
    std = np.where(std < 1e-12, 1.0, std)
    return Normalizer(mean=mean, std=std, schema=schema)


def apply_normalizer(n: Normalizer, s: HvsmSet) -> HvsmSet:
    """Z-score every vector of every sample; order, labels, lengths unchanged."""
    if s.items and s.schema != n.schema:
        raise ValueError("normalizer schema does not match the set's schema")
    items = []
    for item in s.items:
        sequence = tuple(
            MetricVector(values=n.transform(vec.values), schema=vec.schema, loc=vec.loc)
            for vec in item.sequence
        )
        items.append(
            Hvsm(
                key=item.key,
                version_ids=item.version_ids,
                sequence=sequence,
                label=item.label,
            )
        )
    return HvsmSet(anchor_version=s.anchor_version, items=tuple(items), window=s.window)


def hvsm_set_to_csv(s: HvsmSet) -> str:
    """Debug dump: one row per (file, step) with the step's metric values."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["name", "version", "T", "step", *s.schema, "label"])
    for item in s.items:
        for step, (version_id, vec) in enumerate(zip(item.version_ids, item.sequence), 1):
            writer.writerow(
                [
                    item.key,
                    version_id,
                    item.length,
                    step,
                    *map(repr, vec.values.tolist()),
                    "" if item.label is None else item.label,
                ]
            )
    return out.getvalue()
