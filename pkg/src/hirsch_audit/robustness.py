"""Perturbation operators and sensitivity experiments.

Errors in the long tails of a rank-citation profile (a top paper losing
citations, bogus low-cited records appearing) move the mean citation rate
but leave h untouched. The helpers here apply such errors to a profile and
record both metrics before and after.
"""

from __future__ import annotations

import csv
import io
import math
import random
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyProfileError, UnknownPublicationError, ValidationError
from .metrics import CitationProfile, PubKey, format_mean, h_index, mean_citations, rank_profile

KINDS = ("shortchange_top", "inject_bogus", "split_record", "drop_record")
SENSITIVITY_COLUMNS = ["label", "h_before", "h_after", "mean_before", "mean_after", "h_changed"]


@dataclass(frozen=True)
class Perturbation:
    kind: str
    key: Optional[PubKey] = None
    delta: Optional[int] = None
    n_records: Optional[int] = None
    count_each: Optional[int] = None
    fraction: Optional[float] = None
    label: Optional[str] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown perturbation kind {self.kind!r}")
        if self.kind in ("shortchange_top", "split_record", "drop_record") and self.key is None:
            raise ValidationError(f"{self.kind} needs a target key")
        if self.kind == "shortchange_top" and (self.delta is None or self.delta <= 0):
            raise ValidationError("shortchange_top needs delta > 0")
        if self.kind == "inject_bogus":
            if self.n_records is None or self.n_records < 0:
                raise ValidationError("inject_bogus needs n_records >= 0")
            if self.count_each is None or self.count_each < 0:
                raise ValidationError("inject_bogus needs count_each >= 0")
        if self.kind == "split_record" and (self.fraction is None or not 0 < self.fraction < 1):
            raise ValidationError("split_record needs 0 < fraction < 1")

    @classmethod
    def shortchange_top(cls, key, delta, label=None):
        return cls("shortchange_top", key=key, delta=delta, label=label)

    @classmethod
    def inject_bogus(cls, n_records, count_each, label=None):
        return cls("inject_bogus", n_records=n_records, count_each=count_each, label=label)

    @classmethod
    def split_record(cls, key, fraction, label=None):
        return cls("split_record", key=key, fraction=fraction, label=label)

    @classmethod
    def drop_record(cls, key, label=None):
        return cls("drop_record", key=key, label=label)

    def describe(self) -> str:
        if self.label:
            return self.label
        if self.kind == "shortchange_top":
            return f"shortchange_top({self.key.label()}, {self.delta})"
        if self.kind == "inject_bogus":
            return f"inject_bogus({self.n_records}, {self.count_each})"
        if self.kind == "split_record":
            return f"split_record({self.key.label()}, {self.fraction})"
        return f"drop_record({self.key.label()})"


def _index_of(profile: CitationProfile, key: PubKey) -> int:
    for i, (k, _) in enumerate(profile.entries):
        if k == key:
            return i
    raise UnknownPublicationError(f"no publication {key.label()} in profile")


def _fresh_key(base: PubKey, suffix: str, taken: set) -> PubKey:
    n = 1
    while True:
        title = f"{base.title_norm} {suffix}{'' if n == 1 else n}".strip()
        key = replace(base, title_norm=title)
        if key not in taken:
            return key
        n += 1


def apply_perturbation(profile: CitationProfile, p: Perturbation, seed: int = 0) -> CitationProfile:
    """Return a new profile with one error applied; the input is not modified."""
    entries = list(profile.entries)
    if p.kind == "inject_bogus":
        rng = random.Random(seed)
        taken = {k for k, _ in entries}
        years = sorted({k.year for k, _ in entries}) or [2000]
        for i in range(p.n_records):
            token = f"{rng.getrandbits(32):08x}"
            base = PubKey(f"bogus {token}", "bogus", rng.choice(years))
            key = _fresh_key(base, "", taken) if base in taken else base
            taken.add(key)
            entries.append((key, p.count_each))
        return rank_profile(entries)

    idx = _index_of(profile, p.key)
    key, count = entries[idx]
    if p.kind == "shortchange_top":
        entries[idx] = (key, max(0, count - p.delta))
    elif p.kind == "drop_record":
        del entries[idx]
    elif p.kind == "split_record":
        first = math.floor(count * p.fraction)
        taken = {k for k, _ in entries}
        entries[idx] = (key, first)
        entries.append((_fresh_key(key, "split", taken), count - first))
    return rank_profile(entries)


@dataclass(frozen=True)
class SensitivityRow:
    label: str
    h_before: int
    h_after: int
    mean_before: Optional[Fraction]
    mean_after: Optional[Fraction]

    @property
    def h_changed(self) -> bool:
        return self.h_before != self.h_after

    def as_row(self, places: int = 2) -> list:
        def fmt(m):
            return "" if m is None else format_mean(m, places)

        return [
            self.label,
            self.h_before,
            self.h_after,
            fmt(self.mean_before),
            fmt(self.mean_after),
            str(self.h_changed).lower(),
        ]


def _mean_or_none(profile):
    try:
        return mean_citations(profile)
    except EmptyProfileError:
        return None


def sensitivity_report(profile: CitationProfile, plan: Sequence[Perturbation], seed: int = 0) -> list[SensitivityRow]:
    """Apply each perturbation separately to the base profile."""
    if not plan:
        raise ValidationError("perturbation plan is empty")
    h0 = h_index(profile)
    m0 = _mean_or_none(profile)
    rows = []
    for i, p in enumerate(plan):
        after = apply_perturbation(profile, p, seed + i)
        rows.append(SensitivityRow(p.describe(), h0, h_index(after), m0, _mean_or_none(after)))
    return rows


def sensitivity_csv(rows: Sequence[SensitivityRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SENSITIVITY_COLUMNS)
    for row in rows:
        writer.writerow(row.as_row())
    return buf.getvalue()


def generate_synthetic_profile(
    a: float, b: float, n_pubs: int, noise_sigma: float = 0.0, seed: int = 0
) -> CitationProfile:
    """Counts round(a * rank**b * exp(eps)), eps ~ N(0, sigma^2), clamped at 0."""
    if n_pubs < 1:
        raise ValidationError("n_pubs must be >= 1")
    if noise_sigma < 0:
        raise ValidationError("noise_sigma must be >= 0")
    ranks = np.arange(1, n_pubs + 1, dtype=float)
    values = a * ranks**b
    if noise_sigma > 0:
        values = values * np.exp(np.random.default_rng(seed).normal(0.0, noise_sigma, n_pubs))
    counts = np.maximum(np.floor(values + 0.5), 0).astype(int)
    return rank_profile(
        (PubKey(f"synthetic {r}", "synthetic", 2000, 1, r), int(c)) for r, c in zip(range(1, n_pubs + 1), counts)
    )


def random_profile(rng: random.Random, max_size: int = 200, max_count: int = 500, min_size: int = 0) -> CitationProfile:
    n = rng.randint(min_size, max_size)
    return rank_profile(
        (PubKey(f"pub {i}", "random", 2000), rng.randint(0, max_count)) for i in range(n)
    )


# -- randomized robustness trials -----------------------------------------


@dataclass
class TrialSummary:
    name: str
    trials: int = 0
    null_trials: int = 0
    h_violations: int = 0
    mean_unchanged: int = 0

    @property
    def ok(self) -> bool:
        return self.h_violations == 0 and self.mean_unchanged == 0

    def line(self) -> str:
        return (
            f"{self.name}: {self.trials} trials, {self.h_violations} h violations, "
            f"{self.mean_unchanged} non-null trials with unchanged mean ({self.null_trials} null)"
        )


def upper_tail_trials(n_trials: int = 1000, seed: int = 0, max_size: int = 200, max_count: int = 500) -> TrialSummary:
    """Short-change a publication counted toward h without pushing it below h."""
    rng = random.Random(seed)
    out = TrialSummary("upper-tail shortchange")
    while out.trials < n_trials:
        prof = random_profile(rng, max_size, max_count, min_size=1)
        h = h_index(prof)
        above = [(k, c) for k, c in prof.entries if c > h]
        if not above:
            continue
        key, count = rng.choice(above)
        delta = rng.randint(1, count - h)
        after = apply_perturbation(prof, Perturbation.shortchange_top(key, delta), rng.randrange(2**31))
        out.trials += 1
        if h_index(after) != h:
            out.h_violations += 1
        if mean_citations(after) >= mean_citations(prof):
            out.mean_unchanged += 1
    return out


def bogus_injection_trials(n_trials: int = 1000, seed: int = 0, max_size: int = 200, max_count: int = 500) -> TrialSummary:
    """Append bogus records carrying at most h citations each."""
    rng = random.Random(seed)
    out = TrialSummary("bogus-record injection")
    for _ in range(n_trials):
        prof = random_profile(rng, max_size, max_count, min_size=1)
        h = h_index(prof)
        n = rng.randint(1, 50)
        each = rng.randint(0, h)
        after = apply_perturbation(prof, Perturbation.inject_bogus(n, each), rng.randrange(2**31))
        out.trials += 1
        if h_index(after) != h:
            out.h_violations += 1
        if each == mean_citations(prof):
            out.null_trials += 1
        elif mean_citations(after) == mean_citations(prof):
            out.mean_unchanged += 1
    return out


def split_trials(n_trials: int = 1000, seed: int = 0, max_size: int = 200, max_count: int = 500) -> TrialSummary:
    """Split a record with count > 2h into two shares of at least h + 1; h may rise by one."""
    rng = random.Random(seed)
    out = TrialSummary("guarded record split")
    while out.trials < n_trials:
        prof = random_profile(rng, max_size, max_count, min_size=1)
        h = h_index(prof)
        big = [(k, c) for k, c in prof.entries if c > 2 * h and c >= 2 * (h + 1)]
        if not big:
            continue
        key, count = rng.choice(big)
        first = rng.randint(h + 1, count - (h + 1))
        # pick a fraction whose floor lands exactly on `first`
        fraction = (first + 0.5) / count
        after = apply_perturbation(prof, Perturbation.split_record(key, fraction), rng.randrange(2**31))
        out.trials += 1
        if h_index(after) not in (h, h + 1):
            out.h_violations += 1
    return out
