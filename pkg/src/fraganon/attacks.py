"""Adversary-side checks on published fragments: join auditing and membership disclosure."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .data import Dataset
from .ldiversity import verify_pipeline
from .mondrian import EC_LEVEL, AnonymizedFragment, EquivalenceClass
from .reconstruct.graph import delta_violations
from .reconstruct.joins import Violation, check_all_subsets


class AmbiguousMatchError(ValueError):
    """A subject falls into more than one class box of a single fragment."""


def _expected_counts(eq: EquivalenceClass) -> dict[str, Fraction]:
    # EC-level: every value has the same expected frequency over uniformly drawn versions
    if eq.mode == EC_LEVEL:
        share = Fraction(eq.size, len(eq.ec_values))
        return {c: share for c in eq.ec_values}
    return {c: Fraction(n) for c, n in eq.class_counts.items()}


def _multiway_size(counts: Sequence[dict]) -> Fraction:
    shared = set(counts[0])
    for c in counts[1:]:
        shared &= set(c)
    total = Fraction(0)
    for v in shared:
        p = Fraction(1)
        for c in counts:
            p *= c[v]
        total += p
    return total


def match_classes(subject_qis: Sequence[Sequence[float]], fragments: Sequence[AnonymizedFragment]) -> list[int | None]:
    """Index of the class containing the subject in each fragment (None when no box matches)."""
    if len(subject_qis) != len(fragments):
        raise ValueError("need one value vector per fragment")
    out = []
    for f, (qis, frag) in enumerate(zip(subject_qis, fragments)):
        hits = frag.locate(qis)
        if len(hits) > 1:
            raise AmbiguousMatchError(f"subject matches {len(hits)} classes in fragment {f}")
        out.append(hits[0] if hits else None)
    return out


def membership_likelihood(subject_qis: Sequence[Sequence[float]], fragments: Sequence[AnonymizedFragment]) -> Fraction:
    """|EQ_1i x ... x EQ_np| / |F_1 x ... x F_n| for the classes matching the subject.

    The denominator sums the multiway join size over every combination of
    classes, which factorizes per class value into a product of fragment totals.
    """
    matched = match_classes(subject_qis, fragments)
    if any(m is None for m in matched):
        return Fraction(0)
    numerator = _multiway_size([_expected_counts(frag.classes[m]) for frag, m in zip(fragments, matched)])
    totals = []
    for frag in fragments:
        acc: dict[str, Fraction] = {}
        for eq in frag.classes:
            for c, n in _expected_counts(eq).items():
                acc[c] = acc.get(c, Fraction(0)) + n
        totals.append(acc)
    denominator = _multiway_size(totals)
    if denominator == 0:
        return Fraction(0)
    return numerator / denominator


def subject_vectors(row: np.ndarray, fragments: Sequence[AnonymizedFragment], feature_pos: dict[int, int]) -> list[np.ndarray]:
    """Split one full feature row into per-fragment value vectors."""
    return [np.array([row[feature_pos[a]] for a in frag.fragment.feature_indices]) for frag in fragments]


@dataclass
class AuditReport:
    k: int
    l: int | None = None
    delta: float | None = None
    checks: dict[str, bool] = field(default_factory=dict)
    violations: list[Violation] = field(default_factory=list)
    ldiv_failures: list = field(default_factory=list)
    small_classes: list[tuple[int, int, int]] = field(default_factory=list)
    membership: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def text(self) -> str:
        lines = [f"audit k={self.k} l={self.l} delta={self.delta}"]
        for name, ok in self.checks.items():
            lines.append(f"  {'PASS' if ok else 'FAIL'}  {name}")
        for v in self.violations[:50]:
            lines.append(f"    violation: {v.fragment_a}[{':'.join(map(str, v.eq_a))}] x "
                         f"{v.fragment_b}[{':'.join(map(str, v.eq_b))}] = {v.value} (threshold {v.threshold})")
        for key, x, y, fail in self.ldiv_failures[:50]:
            lines.append(f"    l-diversity join failure {key}: F{x + 1}[{fail.eq_a}] x F{y + 1}[{fail.eq_b}] "
                         f"size={fail.join_size} distinct={fail.distinct} expected={fail.expected}")
        for f, i, size in self.small_classes[:50]:
            lines.append(f"    class F{f + 1}[{i}] has {size} < k tuples")
        if self.membership:
            stats = ", ".join(f"{k}={v:.6g}" for k, v in self.membership.items())
            lines.append(f"  membership likelihood: {stats}")
        return "\n".join(lines) + "\n"


def audit(published: Sequence[AnonymizedFragment], k: int, l: int | None = None, delta: float | None = None,
          original: Dataset | None = None, members: int = 100, non_members: int = 100,
          seed: int = 0, noise: float = 0.05) -> AuditReport:
    report = AuditReport(k, l, delta)
    names = [f"F{i + 1}" for i in range(len(published))]

    for f, frag in enumerate(published):
        for i, eq in enumerate(frag.classes):
            if eq.size < k:
                report.small_classes.append((f, i, eq.size))
    report.checks["fragment k-anonymity"] = not report.small_classes

    if l is not None:
        low = [(f, i) for f, frag in enumerate(published) for i, eq in enumerate(frag.classes)
               if len(eq.class_values) < l]
        report.checks["fragment l-diversity"] = not low
        report.ldiv_failures = verify_pipeline(published, k)
        report.checks["l-diversity join (same-segment chunks)"] = not report.ldiv_failures
    elif len(published) > 1:
        if all(frag.mode == EC_LEVEL for frag in published):
            report.violations = delta_violations(published, 0.5 if delta is None else delta, k, names)
            report.checks["delta-selectivity"] = not report.violations
        else:
            report.violations = check_all_subsets(published, k, names)
            report.checks["k-anonymity non-reconstructability"] = not report.violations

    if original is not None and (members or non_members):
        report.membership = _membership_stats(published, original, members, non_members, seed, noise)
    return report


def _membership_stats(published, original: Dataset, members: int, non_members: int, seed: int, noise: float) -> dict:
    rng = np.random.default_rng(seed)
    values = original.features()
    feature_pos = {a: j for j, a in enumerate(original.feature_origin())}
    span = values.max(axis=0) - values.min(axis=0)
    picks = rng.choice(original.row_count, size=min(members, original.row_count), replace=False)
    subjects = [values[i] for i in picks]
    for i in rng.choice(original.row_count, size=non_members):
        subjects.append(values[i] + rng.normal(0, noise, size=values.shape[1]) * span)
    likes, ambiguous = [], 0
    for row in subjects:
        try:
            likes.append(float(membership_likelihood(subject_vectors(row, published, feature_pos), published)))
        except AmbiguousMatchError:
            ambiguous += 1
    stats = {"subjects": float(len(subjects)), "ambiguous": float(ambiguous)}
    if likes:
        arr = np.array(likes)
        stats.update(min=float(arr.min()), median=float(np.median(arr)), max=float(arr.max()))
    return stats
