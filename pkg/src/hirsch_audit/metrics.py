"""Citation profiles and the scalar/curve metrics computed over them."""

from __future__ import annotations

import datetime
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import (
    DuplicateKeyError,
    EmptyProfileError,
    InsufficientDataError,
    ValidationError,
)

# publications can carry next year's date ahead of print
MAX_YEAR = datetime.date.today().year + 1


@dataclass(frozen=True)
class PubKey:
    """Identity of one publication: normalized title/venue plus year, volume, page."""

    title_norm: str
    venue_norm: str
    year: int
    volume: Optional[int] = None
    first_page: Optional[int] = None

    def __post_init__(self):
        if not isinstance(self.year, int) or not 1500 < self.year <= MAX_YEAR:
            raise ValidationError(f"year out of range: {self.year!r}")

    @property
    def has_locator(self) -> bool:
        return self.volume is not None and self.first_page is not None

    @property
    def locator(self):
        return (self.venue_norm, self.year, self.volume, self.first_page)

    def sort_key(self):
        # None sorts before any integer
        return (
            self.title_norm,
            self.venue_norm,
            self.year,
            (0, 0) if self.volume is None else (1, self.volume),
            (0, 0) if self.first_page is None else (1, self.first_page),
        )

    def label(self) -> str:
        parts = [self.venue_norm or "-", str(self.year)]
        if self.volume is not None:
            parts.append(str(self.volume))
        if self.first_page is not None:
            parts.append(str(self.first_page))
        text = " ".join(parts)
        if self.title_norm:
            text += f" [{self.title_norm}]"
        return text

    def to_dict(self) -> dict:
        return {
            "title": self.title_norm,
            "venue": self.venue_norm,
            "year": self.year,
            "volume": self.volume,
            "first_page": self.first_page,
        }


def ranking_key(key: PubKey, count: int):
    return (-count, key.year, key.sort_key())


@dataclass(frozen=True)
class CitationProfile:
    """Publications ranked by citation count, highest first."""

    entries: tuple[tuple[PubKey, int], ...]

    def __post_init__(self):
        seen = set()
        prev = None
        for key, count in self.entries:
            if key in seen:
                raise DuplicateKeyError(f"duplicate publication: {key.label()}")
            seen.add(key)
            if count < 0:
                raise ValidationError(f"negative count for {key.label()}")
            if prev is not None and count > prev:
                raise ValidationError("profile counts must be non-increasing")
            prev = count

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def counts(self) -> list[int]:
        return [c for _, c in self.entries]

    @property
    def keys(self) -> list[PubKey]:
        return [k for k, _ in self.entries]

    def count_of(self, key: PubKey) -> int:
        for k, c in self.entries:
            if k == key:
                return c
        raise KeyError(key)


def rank_profile(pubs: Iterable[tuple[PubKey, int]]) -> CitationProfile:
    """Rank publications by count desc, then year asc, then key order.

    Raises DuplicateKeyError when the same PubKey appears twice.
    """
    pubs = list(pubs)
    seen = set()
    for key, _ in pubs:
        if key in seen:
            raise DuplicateKeyError(f"duplicate publication: {key.label()}")
        seen.add(key)
    ordered = sorted(pubs, key=lambda kc: ranking_key(kc[0], kc[1]))
    return CitationProfile(tuple((k, int(c)) for k, c in ordered))


def _counts(values) -> list[int]:
    if isinstance(values, CitationProfile):
        return values.counts
    return list(values)


def h_index(counts) -> int:
    """Largest n such that at least n of the counts are >= n."""
    ordered = sorted(_counts(counts), reverse=True)
    h = 0
    for rank, c in enumerate(ordered, start=1):
        if c >= rank:
            h = rank
        else:
            break
    return h


def total_citations(counts) -> int:
    return sum(_counts(counts))


def mean_citations(counts) -> Fraction:
    """Exact mean citations per publication (the impact-factor style average)."""
    values = _counts(counts)
    if not values:
        raise EmptyProfileError("mean of an empty profile is undefined")
    return Fraction(sum(values), len(values))


def format_mean(value: Fraction, places: int = 2) -> str:
    return f"{float(value):.{places}f}"


@dataclass(frozen=True)
class PowerFit:
    """Y = a * X**b fitted by least squares on log(rank), log(count)."""

    a: float
    b: float
    r2: float
    n_points: int

    def predict(self, rank) -> float:
        return self.a * rank**self.b


def fit_power_law(values: Sequence[float], ranks: Optional[Sequence[float]] = None) -> PowerFit:
    """Fit a power curve to positive values; ranks default to 1..n."""
    if ranks is None:
        ranks = range(1, len(values) + 1)
    pairs = [(float(r), float(v)) for r, v in zip(ranks, values) if v > 0 and r >= 1]
    if len(pairs) < 2:
        raise InsufficientDataError("power fit needs at least 2 positive-count entries")
    x = np.log([r for r, _ in pairs])
    y = np.log([v for _, v in pairs])
    if np.ptp(x) == 0:
        raise InsufficientDataError("power fit needs at least 2 distinct ranks")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (intercept + slope * x)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    r2 = 1.0 if ss_tot == 0 else max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    return PowerFit(a=math.exp(intercept), b=float(slope), r2=r2, n_points=len(pairs))


def fit_power_curve(profile: CitationProfile) -> PowerFit:
    """Fit the rank-citation (Zipf) curve; zero-count entries are skipped."""
    return fit_power_law(profile.counts)
