"""On-disk format for published fragments, reports and run manifests.

Fragment CSV: ``eq`` column, one column per feature holding ``lower..upper``
(or the bare value when the cell is not generalized), then the class column.
EC-level classes list each published class value once and leave the
ambiguous slots blank.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .data import Fragment, format_number
from .mondrian import EC_LEVEL, TUPLE_LEVEL, AnonymizedFragment, EquivalenceClass
from .reconstruct.joins import VIOLATION_HEADER, Violation

MANIFEST = "manifest.json"


def format_cell(lower: float, upper: float) -> str:
    if lower == upper:
        return format_number(lower)
    return f"{format_number(lower)}..{format_number(upper)}"


def parse_cell(cell: str) -> tuple[float, float]:
    lo, sep, hi = cell.partition("..")
    if sep:
        return float(lo), float(hi)
    v = float(cell)
    return v, v


def _class_cells(eq: EquivalenceClass) -> list[str]:
    if eq.mode == EC_LEVEL:
        return sorted(eq.ec_values) + [""] * eq.ambiguous_slots
    return [c for c in sorted(eq.class_counts) for _ in range(eq.class_counts[c])]


def write_fragment(fragment: AnonymizedFragment, names: Sequence[str], path: str | Path,
                   class_name: str = "class", debug: bool = False) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        header = ["eq"] + list(names) + [class_name]
        if debug:
            header.append("segment")
        w.writerow(header)
        for i, eq in enumerate(fragment.classes):
            cells = [format_cell(lo, hi) for lo, hi in zip(eq.lower, eq.upper)]
            for c in _class_cells(eq):
                row = [i] + cells + [c]
                if debug:
                    row.append("" if eq.segment_id is None else eq.segment_id)
                w.writerow(row)


def read_fragment(path: str | Path, attributes: Sequence[int], k: int, mode: str = TUPLE_LEVEL,
                  l: int | None = None) -> AnonymizedFragment:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty fragment file")
    header, body = rows[0], rows[1:]
    n_feat = len(attributes)
    debug = header[-1] == "segment"
    if header[0] != "eq" or len(header) != n_feat + 2 + debug:
        raise ValueError(f"{path}: header does not match {n_feat} features")
    groups: dict[str, list[list[str]]] = {}
    for r in body:
        groups.setdefault(r[0], []).append(r)
    classes = []
    for key, members in groups.items():
        box = [parse_cell(c) for c in members[0][1:1 + n_feat]]
        labels = [r[1 + n_feat] for r in members]
        segment = members[0][-1] if debug else ""
        lower = np.array([b[0] for b in box])
        upper = np.array([b[1] for b in box])
        seg = int(segment) if segment != "" else None
        if mode == EC_LEVEL:
            values = frozenset(c for c in labels if c != "")
            classes.append(EquivalenceClass(lower, upper, {}, len(labels), mode=EC_LEVEL,
                                            ec_values=values, segment_id=seg))
        else:
            counts: dict[str, int] = {}
            for c in labels:
                counts[c] = counts.get(c, 0) + 1
            classes.append(EquivalenceClass(lower, upper, counts, len(labels), segment_id=seg))
    return AnonymizedFragment(Fragment(tuple(attributes)), k, classes, l)


def write_violations(violations: Iterable[Violation], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(VIOLATION_HEADER)
        for v in violations:
            w.writerow(v.row())


def write_manifest(out_dir: str | Path, manifest: dict) -> None:
    Path(out_dir, MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_manifest(out_dir: str | Path) -> dict:
    path = Path(out_dir, MANIFEST)
    if not path.exists():
        raise FileNotFoundError(path)
    return json.loads(path.read_text(encoding="utf-8"))


def load_published(out_dir: str | Path) -> tuple[dict, list[AnonymizedFragment]]:
    manifest = read_manifest(out_dir)
    frags = []
    for entry in manifest["fragments"]:
        frags.append(read_fragment(Path(out_dir, entry["file"]), entry["attribute_indices"],
                                   manifest["k"], entry["mode"], manifest.get("l")))
    return manifest, frags
