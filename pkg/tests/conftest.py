from pathlib import Path

import pytest

from hirsch_audit.ingest import (
    CorrectionsLedger,
    apply_corrections,
    dedup_within_source,
    load_ledger,
    match_across_sources,
    parse_records,
)

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def load_matched(stem, ledger=None, suffix=".jsonl"):
    per = {}
    edits = load_ledger(FIXTURES / ledger) if ledger else None
    for tag in ("gs", "wos"):
        recs = parse_records(FIXTURES / f"{stem}_{tag}{suffix}", source_id=tag)
        if edits is not None:
            recs = apply_corrections(recs, CorrectionsLedger(tuple(e for e in edits.edits if e.source_id == tag)))
        recs, _ = dedup_within_source(recs)
        per[tag] = recs
    return match_across_sources(per)


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def table1_matched():
    return load_matched("table1")


@pytest.fixture
def table2_matched():
    return load_matched("table1", ledger="table2_ledger.jsonl")


@pytest.fixture
def table3_matched():
    return load_matched("table3")


@pytest.fixture
def table4_matched():
    return load_matched("table4")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance")
        for line in RESULTS:
            terminalreporter.write_line(line)
