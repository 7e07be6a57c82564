"""Combining sources, union checks, self-citation exclusion and the verification report."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .errors import NeedsCitingDataError, ValidationError
from .ingest import CitingDoc, MatchedPublication, SourceRecord
from .metrics import CitationProfile, PubKey, h_index, rank_profile, ranking_key

CANDIDATE_RULES = ("le", "lt")
SELF_CITE_MODES = ("strict", "broad")
DEFAULT_WINDOW = 2


def combine_max(matched: Sequence[MatchedPublication]) -> CitationProfile:
    """One entry per publication carrying the largest count any source reports."""
    return rank_profile((m.key, m.max_count) for m in matched)


def source_profile(matched: Sequence[MatchedPublication], source_id: str) -> CitationProfile:
    return rank_profile(
        (m.key, m.per_source[source_id].count) for m in matched if source_id in m.per_source
    )


def source_ids(matched: Iterable[MatchedPublication]) -> list[str]:
    return sorted({s for m in matched for s in m.per_source})


def interim_h(matched: Sequence[MatchedPublication]) -> int:
    return h_index(m.max_count for m in matched)


def is_union_candidate(max_count: int, sum_count: int, h: int, rule: str = "le") -> bool:
    if rule not in CANDIDATE_RULES:
        raise ValidationError(f"candidate rule must be one of {CANDIDATE_RULES}")
    below = max_count <= h if rule == "le" else max_count < h
    return below and sum_count > h


def union_check_candidates(
    matched: Sequence[MatchedPublication], h: int, rule: str = "le"
) -> list[MatchedPublication]:
    """Publications not yet counted toward h whose pooled sources could lift them past it."""
    hits = [
        m for m in matched
        if len(m.per_source) > 1 and is_union_candidate(m.max_count, m.sum_count, h, rule)
    ]
    return sorted(hits, key=lambda m: (-m.sum_count,) + ranking_key(m.key, m.max_count))


def union_citations(*records: SourceRecord) -> int:
    """Number of distinct citing documents across the given records."""
    ids = set()
    for rec in records:
        if rec.citing is None:
            raise NeedsCitingDataError(f"{rec.source_id}: {rec.key.label()} has no citing list")
        ids.update(doc.cite_id for doc in rec.citing)
    return len(ids)


def union_docs(records: Iterable[SourceRecord]) -> list[CitingDoc]:
    by_id: dict[str, CitingDoc] = {}
    for rec in records:
        if rec.citing is None:
            raise NeedsCitingDataError(f"{rec.source_id}: {rec.key.label()} has no citing list")
        for doc in rec.citing:
            if doc.cite_id in by_id:
                merged = by_id[doc.cite_id].authors + tuple(
                    a for a in doc.authors if a not in by_id[doc.cite_id].authors
                )
                by_id[doc.cite_id] = CitingDoc(doc.cite_id, merged)
            else:
                by_id[doc.cite_id] = doc
    return list(by_id.values())


def exclude_self_citations(
    citing: Sequence[CitingDoc],
    focal_authors,
    mode: str = "broad",
    coauthors=(),
) -> int:
    """Count citing documents that share no author with the cited work.

    strict: only ``focal_authors`` mark a self-citation.
    broad: any of ``focal_authors`` or the publication's ``coauthors`` does.
    """
    if mode not in SELF_CITE_MODES:
        raise ValidationError(f"self-citation mode must be one of {SELF_CITE_MODES}")
    focal = {a for a in focal_authors if a}
    if not focal:
        raise ValidationError("self-citation exclusion needs at least one focal author")
    flagged = set(focal)
    if mode == "broad":
        flagged.update(a for a in coauthors if a)
    return sum(1 for doc in citing if flagged.isdisjoint(doc.authors))


def threshold_worklist(profile: CitationProfile, h: int, window: int = DEFAULT_WINDOW) -> list[tuple[PubKey, int]]:
    """Entries with count in [h - window, h]: where a few hidden citations would move h."""
    if window < 0:
        raise ValidationError("window must be >= 0")
    if h <= 0:
        return []
    lo = h - window
    return [(k, c) for k, c in profile.entries if lo <= c <= h]


def discrepancy_pct(h_values: Iterable[int]) -> Optional[float]:
    """Spread of h across sources relative to the largest: |h_a - h_b| / max(h_a, h_b)."""
    values = list(h_values)
    if len(values) < 2:
        return None
    top = max(values)
    if top == 0:
        return 0.0
    return (top - min(values)) / top


@dataclass
class CombinedEntry:
    key: PubKey
    count_by_source: dict[str, int]
    max_count: int
    sum_count: int
    union_count: Optional[int] = None
    self_excluded_count: Optional[int] = None
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        if self.union_count is not None and not self.max_count <= self.union_count <= self.sum_count:
            raise ValidationError(
                f"{self.key.label()}: union {self.union_count} outside [{self.max_count}, {self.sum_count}]"
            )
        if self.self_excluded_count is not None and self.self_excluded_count > self.cites:
            raise ValidationError(f"{self.key.label()}: self-excluded count exceeds citations")

    @property
    def cites(self) -> int:
        """Best verified count: the union where examined, else the max."""
        return self.max_count if self.union_count is None else self.union_count

    @property
    def final_count(self) -> int:
        return self.cites if self.self_excluded_count is None else self.self_excluded_count

    def to_dict(self) -> dict:
        return {
            "key": self.key.to_dict(),
            "label": self.key.label(),
            "count_by_source": dict(self.count_by_source),
            "max_count": self.max_count,
            "sum_count": self.sum_count,
            "union_count": self.union_count,
            "self_excluded_count": self.self_excluded_count,
            "flags": list(self.flags),
        }


@dataclass
class VerificationReport:
    interim_h: int
    union_h: int
    self_excluded_h: int
    per_source_h: dict[str, int]
    discrepancy_pct: Optional[float]
    worklist: list[CombinedEntry]
    union_candidates: list[CombinedEntry]
    entries: list[CombinedEntry]
    window: int = DEFAULT_WINDOW
    candidate_rule: str = "le"
    self_cite_mode: str = "broad"
    rounds: int = 1
    claimed_h: dict[str, int] = field(default_factory=dict)
    claimed_discrepancy_pct: Optional[float] = None
    annotations: list[str] = field(default_factory=list)

    def to_records(self) -> list[dict]:
        """Structured form, one dict per output line; field order is fixed."""
        out = [
            {
                "record": "summary",
                "interim_h": self.interim_h,
                "union_h": self.union_h,
                "self_excluded_h": self.self_excluded_h,
                "discrepancy_pct": _round(self.discrepancy_pct),
                "claimed_discrepancy_pct": _round(self.claimed_discrepancy_pct),
                "window": self.window,
                "candidate_rule": self.candidate_rule,
                "self_cite_mode": self.self_cite_mode,
                "rounds": self.rounds,
                "n_publications": len(self.entries),
            }
        ]
        for sid, h in self.per_source_h.items():
            out.append({"record": "source", "source": sid, "h": h, "claimed_h": self.claimed_h.get(sid)})
        for e in self.worklist:
            out.append({"record": "worklist", **e.to_dict()})
        for e in self.union_candidates:
            out.append({"record": "candidate", **e.to_dict()})
        for rank, e in enumerate(self.entries, start=1):
            out.append({"record": "entry", "rank": rank, **e.to_dict()})
        for note in self.annotations:
            out.append({"record": "annotation", "text": note})
        return out

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in self.to_records())

    def to_text(self) -> str:
        lines = ["h-index verification report", ""]
        for sid, h in self.per_source_h.items():
            claim = self.claimed_h.get(sid)
            extra = f" (claimed {claim})" if claim is not None else ""
            lines.append(f"  {sid:<10} h = {h}{extra}")
        lines.append(f"  {'max':<10} h = {self.interim_h}  (interim)")
        lines.append(f"  {'union':<10} h = {self.union_h}")
        lines.append(f"  {'self-excl':<10} h = {self.self_excluded_h}  (mode: {self.self_cite_mode})")
        if self.discrepancy_pct is not None:
            lines.append(f"  cross-source discrepancy: {100 * self.discrepancy_pct:.1f}%")
        if self.claimed_discrepancy_pct is not None:
            lines.append(f"  discrepancy of claimed values: {100 * self.claimed_discrepancy_pct:.1f}%")
        lines.append("")
        lines.append(f"Threshold worklist (max count in [{self.interim_h - self.window}, {self.interim_h}]):")
        if not self.worklist:
            lines.append("  (none)")
        for e in self.worklist:
            lines.append(f"  {e.max_count:>5}  {e.key.label()}  {_by_source(e)}")
        lines.append("")
        rule = "max <= h" if self.candidate_rule == "le" else "max < h"
        lines.append(f"Union-check candidates ({rule} and sum > h):")
        if not self.union_candidates:
            lines.append("  (none)")
        for e in self.union_candidates:
            union = "-" if e.union_count is None else str(e.union_count)
            flags = f"  [{', '.join(e.flags)}]" if e.flags else ""
            lines.append(
                f"  max {e.max_count:>4}  sum {e.sum_count:>4}  union {union:>4}  {e.key.label()}{flags}"
            )
        lines.append("")
        lines.append("Ranked publications:")
        lines.append(f"  {'rank':>4} {'max':>5} {'sum':>5} {'cites':>5} {'self':>5}  publication")
        for rank, e in enumerate(self.entries, start=1):
            self_c = "" if e.self_excluded_count is None else str(e.self_excluded_count)
            lines.append(
                f"  {rank:>4} {e.max_count:>5} {e.sum_count:>5} {e.cites:>5} {self_c:>5}  {e.key.label()}"
            )
        if self.annotations:
            lines.append("")
            lines.append("Notes:")
            lines.extend(f"  - {note}" for note in self.annotations)
        return "\n".join(lines) + "\n"


def _round(x):
    return None if x is None else round(x, 6)


def _by_source(e: CombinedEntry) -> str:
    return " ".join(f"{s}={c}" for s, c in e.count_by_source.items())


def _self_citing_docs(m: MatchedPublication, upgraded: bool) -> Optional[list[CitingDoc]]:
    recs = list(m.per_source.values())
    if upgraded:
        return union_docs(recs)
    best = [r for r in recs if r.count == m.max_count and r.citing is not None]
    if not best:
        return None
    return list(best[0].citing)


def derive_focal_authors(matched: Sequence[MatchedPublication]) -> set[str]:
    """Authors appearing on every publication that lists authors at all."""
    common = None
    for m in matched:
        names = set(m.authors)
        if not names:
            continue
        common = names if common is None else common & names
    return common or set()


def build_verification_report(
    matched: Sequence[MatchedPublication],
    window: int = DEFAULT_WINDOW,
    candidate_rule: str = "le",
    self_cite_mode: str = "broad",
    focal_authors=None,
    claimed_h: Optional[Mapping[str, int]] = None,
) -> VerificationReport:
    """Run the verification workflow over matched publications.

    Union checks repeat with the updated h until no new candidate appears,
    so the result equals upgrading every publication with citing data.
    """
    if candidate_rule not in CANDIDATE_RULES:
        raise ValidationError(f"candidate rule must be one of {CANDIDATE_RULES}")
    if self_cite_mode not in SELF_CITE_MODES:
        raise ValidationError(f"self-citation mode must be one of {SELF_CITE_MODES}")
    if window < 0:
        raise ValidationError("window must be >= 0")
    matched = list(matched)
    sids = source_ids(matched)
    annotations = []
    per_source_h = {s: h_index(source_profile(matched, s)) for s in sids}
    h0 = interim_h(matched)

    union: dict[PubKey, int] = {}
    unverified: set[PubKey] = set()
    found_at: dict[PubKey, int] = {}
    h = h0
    rounds = 0
    while True:
        rounds += 1
        fresh = [m for m in union_check_candidates(matched, h, candidate_rule) if m.key not in found_at]
        if not fresh:
            break
        for m in fresh:
            found_at[m.key] = h
            try:
                union[m.key] = union_citations(*m.per_source.values())
            except NeedsCitingDataError:
                unverified.add(m.key)
        h = h_index(union.get(m.key, m.max_count) for m in matched)
    if rounds > 2:
        annotations.append(f"union checks needed {rounds - 1} rounds before h settled at {h}")

    focal = set(focal_authors) if focal_authors else derive_focal_authors(matched)
    self_counts: dict[PubKey, int] = {}
    if not focal:
        annotations.append("no focal author known; self-citations not excluded")
    else:
        for m in matched:
            docs = _self_citing_docs(m, m.key in union)
            if docs is None:
                continue
            self_counts[m.key] = exclude_self_citations(docs, focal, self_cite_mode, coauthors=m.authors)

    entries = []
    for m in matched:
        flags = []
        if m.key in unverified:
            flags.append("union_unverified")
        if m.key in found_at and m.sum_count - found_at[m.key] == 1:
            flags.append("marginal")
        entries.append(
            CombinedEntry(
                key=m.key,
                count_by_source=m.counts,
                max_count=m.max_count,
                sum_count=m.sum_count,
                union_count=union.get(m.key),
                self_excluded_count=self_counts.get(m.key),
                flags=tuple(flags),
            )
        )
    entries.sort(key=lambda e: ranking_key(e.key, e.cites))
    by_key = {e.key: e for e in entries}

    profile = rank_profile((m.key, m.max_count) for m in matched)
    worklist = [by_key[k] for k, _ in threshold_worklist(profile, h0, window)]
    candidates = [by_key[k] for k in found_at]
    marginal = [e for e in candidates if "marginal" in e.flags]
    for e in marginal:
        annotations.append(
            f"{e.key.label()} passes the candidate rule only because sum {e.sum_count} = h + 1; "
            "it can reach h + 1 only if the sources share no citing document"
        )

    union_h = h_index(e.cites for e in entries)
    self_h = h_index(e.final_count for e in entries)

    claimed = {k: int(v) for k, v in (claimed_h or {}).items()}
    claimed_disc = None
    for sid, value in sorted(claimed.items()):
        if sid in per_source_h:
            got = per_source_h[sid]
        elif sid in ("max", "combined"):
            got = h0
        else:
            annotations.append(f"claimed h for unknown source {sid!r} ignored")
            continue
        if got != value:
            annotations.append(f"{sid}: h computed from the records is {got}, claimed value is {value}")
    if len(sids) >= 2 and any(s in claimed for s in sids):
        claimed_disc = discrepancy_pct(claimed.get(s, per_source_h[s]) for s in sids)

    return VerificationReport(
        interim_h=h0,
        union_h=union_h,
        self_excluded_h=self_h,
        per_source_h=per_source_h,
        discrepancy_pct=discrepancy_pct(per_source_h.values()),
        worklist=worklist,
        union_candidates=candidates,
        entries=entries,
        window=window,
        candidate_rule=candidate_rule,
        self_cite_mode=self_cite_mode,
        rounds=rounds,
        claimed_h=claimed,
        claimed_discrepancy_pct=claimed_disc,
        annotations=annotations,
    )
