import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hirsch_audit.errors import DuplicateKeyError, EmptyProfileError, InsufficientDataError, ValidationError
from hirsch_audit.metrics import (
    CitationProfile,
    PubKey,
    fit_power_curve,
    fit_power_law,
    format_mean,
    h_index,
    mean_citations,
    rank_profile,
    total_citations,
)

# raw columns of the individual top-20 listing, blanks omitted
GS_RAW = [172, 57, 53, 35, 40, 29, 30, 26, 15, 9, 15, 13, 11, 11, 10, 10, 6]
WOS_RAW = [96, 50, 53, 41, 40, 36, 32, 10, 19, 17, 16, 12, 13, 6, 8, 2, 9, 9, 7]
JOURNAL_MAX = [206, 90, 78, 75, 73, 70, 54, 53, 51, 48, 45, 45, 44, 43, 41, 41, 41, 40, 39, 36,
               35, 35, 34, 34, 32, 31, 30, 30, 29, 29, 28, 27, 26, 26, 25, 25, 25, 25, 24, 24]
TABLE3_CITES = [177, 58, 53, 42, 42, 40, 36, 32, 26, 22, 19, 19, 17, 16, 14, 13, 12, 11, 11, 9]


def brute_h(counts):
    return max(n for n in range(len(counts) + 1) if sum(c >= n for c in counts) >= n)


def key(i, year=2000):
    return PubKey(f"p{i}", "v", year)


counts_st = st.lists(st.integers(min_value=0, max_value=300), max_size=60)


@pytest.mark.parametrize(
    "counts,expected",
    [
        (GS_RAW, 11),
        (WOS_RAW, 12),
        ([], 0),
        ([5] * 10, 5),
        (JOURNAL_MAX, 29),
        ([0, 0, 0], 0),
        ([1], 1),
    ],
)
def test_h_index_examples(counts, expected):
    assert len(GS_RAW) == 17 and len(WOS_RAW) == 19 and len(JOURNAL_MAX) == 40
    assert h_index(counts) == expected


def test_h_index_accepts_profiles_and_generators():
    prof = rank_profile((key(i), c) for i, c in enumerate(GS_RAW))
    assert h_index(prof) == 11
    assert h_index(c for c in GS_RAW) == 11


def test_mean_and_total():
    assert mean_citations([2, 4]) == 3
    assert mean_citations(GS_RAW) == Fraction(542, 17)
    assert format_mean(mean_citations(GS_RAW)) == "31.88"
    assert total_citations([]) == 0
    assert total_citations([1, 2, 3]) == 6
    assert total_citations(GS_RAW) == 542
    with pytest.raises(EmptyProfileError):
        mean_citations([])


def test_rank_profile_tie_break_on_year():
    prof = rank_profile([(key("b", 1993), 13), (key("a", 1991), 13)])
    assert [k.year for k in prof.keys] == [1991, 1993]


def test_rank_profile_is_order_independent():
    pubs = [(key(i, 1990 + i % 7), c) for i, c in enumerate(GS_RAW)]
    first = rank_profile(pubs)
    rng = random.Random(3)
    for _ in range(20):
        rng.shuffle(pubs)
        assert rank_profile(pubs) == first
    assert first.counts == sorted(GS_RAW, reverse=True)


def test_rank_profile_rejects_duplicates():
    with pytest.raises(DuplicateKeyError):
        rank_profile([(key(1), 3), (key(1), 4)])


def test_profile_invariants_enforced():
    with pytest.raises(ValidationError):
        CitationProfile(((key(1), 1), (key(2), 5)))
    with pytest.raises(ValidationError):
        CitationProfile(((key(1), -1),))


def test_pubkey_year_range():
    with pytest.raises(ValidationError):
        PubKey("x", "v", 1400)
    with pytest.raises(ValidationError):
        PubKey("x", "v", 3000)


def test_fit_recovers_rounded_power_curve():
    counts = [math.floor(100 * r**-1 + 0.5) for r in range(1, 51)]
    fit = fit_power_curve(rank_profile((key(i), c) for i, c in enumerate(counts)))
    assert fit.a == pytest.approx(100, rel=0.05)
    assert fit.b == pytest.approx(-1, rel=0.05)


def test_fit_on_union_counts_matches_closed_form_oracle():
    # frozen from a closed-form least-squares computation on the 20 log-log points
    prof = rank_profile((key(i), c) for i, c in enumerate(TABLE3_CITES))
    fit = fit_power_curve(prof)
    assert fit.a == pytest.approx(158.77423029666042, rel=1e-6)
    assert fit.b == pytest.approx(-0.8835010003592093, rel=1e-6)
    assert fit.r2 == pytest.approx(0.9549181462810701, rel=1e-6)
    assert fit.n_points == 20


@pytest.mark.parametrize("a,b", [(100, -1), (3.5, -0.4), (250, -1.7), (12, 0.3)])
def test_fit_exact_on_unrounded_data(a, b):
    fit = fit_power_law([a * r**b for r in range(1, 41)])
    assert fit.a == pytest.approx(a, rel=1e-6)
    assert fit.b == pytest.approx(b, rel=1e-6)
    assert fit.r2 == pytest.approx(1.0)


def test_fit_skips_zero_counts_and_needs_two_points():
    prof = rank_profile([(key(1), 10), (key(2), 5), (key(3), 0)])
    assert fit_power_curve(prof).n_points == 2
    with pytest.raises(InsufficientDataError):
        fit_power_curve(rank_profile([(key(1), 7)]))
    with pytest.raises(InsufficientDataError):
        fit_power_curve(rank_profile([(key(1), 7), (key(2), 0)]))


@given(counts_st)
def test_h_bounded_by_size_and_max(counts):
    h = h_index(counts)
    assert h <= len(counts)
    assert h <= max(counts, default=0)


@given(counts_st, st.randoms())
def test_permutation_invariance(counts, rnd):
    shuffled = list(counts)
    rnd.shuffle(shuffled)
    assert h_index(shuffled) == h_index(counts)
    if counts:
        assert mean_citations(shuffled) == mean_citations(counts)


@given(counts_st, st.data())
def test_monotone_in_counts_and_entries(counts, data):
    h = h_index(counts)
    if counts:
        i = data.draw(st.integers(0, len(counts) - 1))
        bumped = list(counts)
        bumped[i] += 1
        assert h_index(bumped) >= h
    extra = data.draw(st.integers(0, 300))
    assert h_index(counts + [extra]) >= h


@settings(max_examples=300)
@given(counts_st)
def test_matches_brute_force(counts):
    assert h_index(counts) == brute_h(counts)


@given(counts_st, st.data())
def test_upper_tail_changes_leave_h(counts, data):
    h = h_index(counts)
    above = [i for i, c in enumerate(counts) if c > h]
    if not above:
        return
    i = data.draw(st.sampled_from(above))
    raised = list(counts)
    raised[i] += data.draw(st.integers(1, 1000))
    assert h_index(raised) == h
    lowered = list(counts)
    lowered[i] = data.draw(st.integers(h, counts[i] - 1)) if counts[i] - 1 >= h else h
    assert h_index(lowered) == h
    assert mean_citations(raised) != mean_citations(counts)
    if lowered[i] != counts[i]:
        assert mean_citations(lowered) != mean_citations(counts)


@given(counts_st, st.data())
def test_lower_tail_additions_leave_h(counts, data):
    h = h_index(counts)
    added = data.draw(st.lists(st.integers(0, h), min_size=1, max_size=30))
    assert h_index(counts + added) == h
    if counts:
        changed = mean_citations(counts + added) != mean_citations(counts)
        assert changed == (mean_citations(added) != mean_citations(counts))
