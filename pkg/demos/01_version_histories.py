#!/usr/bin/env python3
"""Walk through file lifecycles and sequence extraction on a tiny project.

Seven files drift in and out of five releases: one lives through all of
them, three are newer arrivals, three disappear before the anchor release.
The anchor is version v4; everything present there yields one training
sample whose sequence covers its trailing run of consecutive releases.
"""

import numpy as np

from defectseq.dataset import ProjectHistory, VersionSnapshot, make_metric_vector
from defectseq.history import (
    classify_file,
    developing_fraction,
    extract_hvsm_set,
    hvsm_set_to_csv,
    lifecycle_counts,
)

SCHEMA = ("loc", "complexity")

PRESENCE = {
    "core/Engine.java": ("v1", "v2", "v3", "v4", "v5"),
    "core/Parser.java": ("v2", "v3", "v4"),
    "util/Cache.java": ("v3", "v4"),
    "util/Pool.java": ("v4",),
    "legacy/Old.java": ("v1", "v2", "v3"),
    "legacy/Tmp.java": ("v1", "v2"),
    "legacy/Once.java": ("v1",),
}

BUGS_AT_V4 = {"core/Engine.java": 2, "core/Parser.java": 0, "util/Cache.java": 1, "util/Pool.java": 0}


def build_history() -> ProjectHistory:
    rng = np.random.default_rng(7)
    versions = []
    for vid in ("v1", "v2", "v3", "v4", "v5"):
        files = {
            key: make_metric_vector([int(rng.integers(50, 500)), round(float(rng.uniform(1, 30)), 1)], SCHEMA)
            for key, present in PRESENCE.items()
            if vid in present
        }
        labels = {key: BUGS_AT_V4.get(key, 0) if vid == "v4" else 0 for key in files}
        versions.append(VersionSnapshot(version_id=vid, files=files, labels=labels))
    return ProjectHistory(name="demo", versions=tuple(versions))


def main() -> None:
    history = build_history()
    anchor = "v4"

    print(f"=== lifecycle states at {anchor} ===")
    for key in PRESENCE:
        state = classify_file(history, anchor, key)
        print(f"  {key:22s} {state.value}")
    counts = lifecycle_counts(history, anchor)
    print("  counts:", {state.value: n for state, n in counts.items()})
    print(f"  developing share: {developing_fraction(history, anchor):.1%}")

    print(f"\n=== sequences extracted at {anchor} (window 4) ===")
    s = extract_hvsm_set(history, anchor, window=4)
    for item in s.items:
        print(f"  {item.key:22s} T={item.length}  versions={'-'.join(item.version_ids)}  label={item.label}")

    print("\n=== debug dump (one row per file and step) ===")
    print(hvsm_set_to_csv(s))


if __name__ == "__main__":
    main()
