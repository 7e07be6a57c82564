from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hirsch_audit.errors import UnknownPublicationError, ValidationError
from hirsch_audit.ingest import normalize_key
from hirsch_audit.metrics import PubKey, fit_power_curve, h_index, rank_profile
from hirsch_audit.robustness import (
    Perturbation,
    apply_perturbation,
    bogus_injection_trials,
    generate_synthetic_profile,
    sensitivity_csv,
    sensitivity_report,
    split_trials,
    upper_tail_trials,
)
from hirsch_audit.verify import combine_max

BOOK = normalize_key("Modelling Forest Growth and Yield", "Book", 1994)


@pytest.fixture
def table3_profile(table3_matched):
    return combine_max(table3_matched)


def test_shortchange_book(table3_profile):
    after = apply_perturbation(table3_profile, Perturbation.shortchange_top(BOOK, 30))
    assert after.count_of(BOOK) == 147
    assert h_index(table3_profile) == h_index(after) == 14
    assert table3_profile.count_of(BOOK) == 177


def test_shortchange_floors_at_zero():
    prof = rank_profile([(PubKey("a", "v", 2000), 3)])
    after = apply_perturbation(prof, Perturbation.shortchange_top(PubKey("a", "v", 2000), 10))
    assert after.counts == [0]


def test_inject_bogus_keeps_h(table3_profile):
    after = apply_perturbation(table3_profile, Perturbation.inject_bogus(10, 1), seed=4)
    assert len(after) == len(table3_profile) + 10
    assert h_index(after) == h_index(table3_profile)
    assert apply_perturbation(table3_profile, Perturbation.inject_bogus(10, 1), seed=4) == after


def test_drop_zero_count_entry():
    keys = [PubKey(f"p{i}", "v", 2000) for i in range(4)]
    prof = rank_profile(zip(keys, [5, 3, 2, 0]))
    after = apply_perturbation(prof, Perturbation.drop_record(keys[3]))
    assert len(after) == 3 and h_index(after) == h_index(prof)


def test_split_record_shares(table3_profile):
    after = apply_perturbation(table3_profile, Perturbation.split_record(BOOK, 0.3))
    assert after.count_of(BOOK) == 53
    assert sum(after.counts) == sum(table3_profile.counts)
    assert len(after) == len(table3_profile) + 1


def test_unknown_key():
    prof = rank_profile([(PubKey("a", "v", 2000), 3)])
    with pytest.raises(UnknownPublicationError):
        apply_perturbation(prof, Perturbation.drop_record(BOOK))


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(kind="shortchange_top", key=BOOK, delta=0),
        dict(kind="inject_bogus", n_records=2, count_each=-1),
        dict(kind="split_record", key=BOOK, fraction=1.0),
        dict(kind="split_record", key=BOOK, fraction=0.0),
        dict(kind="teleport"),
        dict(kind="drop_record"),
    ],
)
def test_invalid_perturbations(kwargs):
    with pytest.raises(ValidationError):
        Perturbation(**kwargs)


def test_sensitivity_shortchange(table3_profile):
    (row,) = sensitivity_report(table3_profile, [Perturbation.shortchange_top(BOOK, 30)])
    assert (row.h_before, row.h_after, row.h_changed) == (14, 14, False)
    assert row.mean_before - row.mean_after == Fraction(3, 2)


def test_sensitivity_null_change():
    key = PubKey("z", "v", 2000)
    prof = rank_profile([(PubKey("a", "v", 2000), 4), (key, 0)])
    (row,) = sensitivity_report(prof, [Perturbation.shortchange_top(key, 5)])
    assert row.h_before == row.h_after and row.mean_before == row.mean_after


def test_sensitivity_bogus(table3_profile):
    (row,) = sensitivity_report(table3_profile, [Perturbation.inject_bogus(20, 1)])
    assert (row.h_before, row.h_after) == (14, 14)
    assert row.mean_after < row.mean_before
    assert row.mean_after == Fraction(sum(table3_profile.counts) + 20, 40)


def test_sensitivity_is_deterministic(table3_profile):
    plan = [Perturbation.inject_bogus(5, 2), Perturbation.split_record(BOOK, 0.5)]
    a = sensitivity_report(table3_profile, plan, seed=9)
    assert a == sensitivity_report(table3_profile, plan, seed=9)
    assert sensitivity_csv(a).splitlines()[0] == "label,h_before,h_after,mean_before,mean_after,h_changed"


def test_empty_plan_rejected(table3_profile):
    with pytest.raises(ValidationError):
        sensitivity_report(table3_profile, [])


def test_synthetic_profile_noiseless():
    prof = generate_synthetic_profile(100, -1, 50, 0.0, seed=123)
    assert prof.counts[:5] == [100, 50, 33, 25, 20]
    assert prof == generate_synthetic_profile(100, -1, 50, 0.0, seed=7)
    fit = fit_power_curve(prof)
    assert fit.b == pytest.approx(-1, rel=0.05)


def test_synthetic_single_entry():
    prof = generate_synthetic_profile(0.4, -1, 1)
    assert len(prof) == 1
    assert h_index(prof) == min(1, prof.counts[0])


def test_synthetic_noise_is_seeded():
    a = generate_synthetic_profile(80, -0.9, 60, 0.3, seed=1)
    assert a == generate_synthetic_profile(80, -0.9, 60, 0.3, seed=1)
    assert a != generate_synthetic_profile(80, -0.9, 60, 0.3, seed=2)
    assert min(a.counts) >= 0


profiles = st.lists(st.integers(0, 200), min_size=1, max_size=50).map(
    lambda cs: rank_profile((PubKey(f"p{i}", "v", 2000), c) for i, c in enumerate(cs))
)


@given(profiles, st.data())
def test_split_guard_property(prof, data):
    h = h_index(prof)
    big = [(k, c) for k, c in prof.entries if c >= 2 * (h + 1)]
    if not big:
        return
    key, count = data.draw(st.sampled_from(big))
    first = data.draw(st.integers(h + 1, count - h - 1))
    after = apply_perturbation(prof, Perturbation.split_record(key, (first + 0.5) / count))
    assert after.count_of(key) == first
    assert h_index(after) in (h, h + 1)


@given(profiles, st.integers(0, 10_000))
def test_perturbations_do_not_mutate_input(prof, seed):
    snapshot = prof.entries
    apply_perturbation(prof, Perturbation.inject_bogus(3, 0), seed)
    assert prof.entries == snapshot


def test_trial_runners_small():
    for runner in (upper_tail_trials, bogus_injection_trials, split_trials):
        summary = runner(50, seed=1)
        assert summary.trials == 50 and summary.ok, summary.line()
