"""Reading citation exports, normalizing identity, repairing and matching records.

Two export layouts are accepted:

* delimited text with a header row
  ``source,title,venue,year,volume,first_page,authors,citation_count``
  (``authors`` is ``;``-separated);
* line-delimited JSON objects with the same fields plus an optional
  ``citing`` list of ``{"cite_id": ..., "authors": [...]}``.
"""

from __future__ import annotations

import csv
import json
import logging
import re
import unicodedata
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from rapidfuzz.distance import Levenshtein

from .errors import (
    AmbiguousMatchError,
    ParseError,
    UnidentifiableRecordError,
    UnknownPublicationError,
    ValidationError,
)
from .metrics import PubKey, ranking_key

log = logging.getLogger(__name__)

CSV_FIELDS = ["source", "title", "venue", "year", "volume", "first_page", "authors", "citation_count"]
DEFAULT_MAX_EDIT_DISTANCE = 3

# normalized alias -> canonical venue code; codes also map to themselves
DEFAULT_VENUE_ALIASES = {
    "forest ecology and management": "fem",
    "for ecol manage": "fem",
    "for ecol manag": "fem",
    "forest science": "fs",
    "forest sci": "fs",
    "for sci": "fs",
    "ecological modelling": "ecomod",
    "ecological modeling": "ecomod",
    "ecol model": "ecomod",
    "ecol modell": "ecomod",
    "journal of tropical forest science": "jtfs",
    "j trop for sci": "jtfs",
    "canadian journal of forest research": "cjfr",
    "can j forest res": "cjfr",
    "can j for res": "cjfr",
    "photogrammetric engineering and remote sensing": "pers",
    "photogramm eng and remote sensing": "pers",
    "photogramm eng rem s": "pers",
    "photogramm eng remote sens": "pers",
}


def normalize_text(text: Optional[str]) -> str:
    """Casefold, strip diacritics and punctuation, collapse whitespace."""
    if not text:
        return ""
    text = unicodedata.normalize("NFKD", str(text))
    text = "".join(ch for ch in text if not unicodedata.combining(ch))
    text = text.casefold().replace("&", " and ")
    text = re.sub(r"[^\w\s]|_", " ", text)
    return re.sub(r"\s+", " ", text).strip()


def normalize_author(name: str) -> str:
    return normalize_text(name)


class VenueAliases:
    """Alias table mapping venue spellings to canonical codes."""

    def __init__(self, extra: Optional[Mapping[str, str]] = None, use_defaults: bool = True):
        self._table: dict[str, str] = {}
        if use_defaults:
            self.update(DEFAULT_VENUE_ALIASES)
        if extra:
            self.update(extra)

    def update(self, mapping: Mapping[str, str]):
        for alias, code in mapping.items():
            code_n = normalize_text(code)
            if not code_n:
                raise ValidationError(f"empty venue code for alias {alias!r}")
            self._table[normalize_text(alias)] = code_n
            self._table[code_n] = code_n

    @classmethod
    def from_file(cls, path) -> "VenueAliases":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))

    def canonical(self, venue: Optional[str]) -> str:
        venue_n = normalize_text(venue)
        return self._table.get(venue_n, venue_n)


_DEFAULT_ALIASES = VenueAliases()


def _opt_int(value, what: str) -> Optional[int]:
    if value is None:
        return None
    if isinstance(value, bool):
        raise ValidationError(f"{what} must be an integer, got {value!r}")
    if isinstance(value, int):
        return value
    text = str(value).strip()
    if not text:
        return None
    try:
        return int(text)
    except ValueError:
        raise ValidationError(f"{what} must be an integer, got {value!r}") from None


def normalize_key(
    title=None,
    venue=None,
    year=None,
    volume=None,
    first_page=None,
    aliases: Optional[VenueAliases] = None,
) -> PubKey:
    aliases = aliases or _DEFAULT_ALIASES
    title_n = normalize_text(title)
    venue_n = aliases.canonical(venue)
    year_i = _opt_int(year, "year")
    if not title_n and not venue_n and year_i is None:
        raise UnidentifiableRecordError("record has no title, venue or year")
    if year_i is None:
        raise ValidationError(f"record {title_n or venue_n!r} has no year")
    if not title_n and not venue_n:
        raise UnidentifiableRecordError(f"record from {year_i} has neither title nor venue")
    return PubKey(
        title_norm=title_n,
        venue_norm=venue_n,
        year=year_i,
        volume=_opt_int(volume, "volume"),
        first_page=_opt_int(first_page, "first_page"),
    )


def key_from_mapping(data: Mapping, aliases: Optional[VenueAliases] = None) -> PubKey:
    return normalize_key(
        data.get("title"),
        data.get("venue"),
        data.get("year"),
        data.get("volume"),
        data.get("first_page"),
        aliases=aliases,
    )


@dataclass(frozen=True)
class CitingDoc:
    cite_id: str
    authors: tuple[str, ...] = ()


@dataclass(frozen=True)
class SourceRecord:
    """One publication's citation evidence as reported by one source."""

    source_id: str
    key: PubKey
    count: int
    citing: Optional[tuple[CitingDoc, ...]] = None
    authors: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.source_id:
            raise ValidationError("source_id must be non-empty")
        if not isinstance(self.count, int) or self.count < 0:
            raise ValidationError(f"citation count must be a nonnegative integer: {self.count!r}")
        if self.citing is not None:
            if len(self.citing) != self.count:
                raise ValidationError(
                    f"{self.key.label()}: {len(self.citing)} citing docs but count {self.count}"
                )
            ids = [c.cite_id for c in self.citing]
            if len(set(ids)) != len(ids):
                raise ValidationError(f"{self.key.label()}: duplicate cite_id in citing list")


def _citing_from_json(items, where) -> tuple[CitingDoc, ...]:
    docs = []
    for item in items:
        if not isinstance(item, Mapping) or "cite_id" not in item:
            raise ParseError("citing entries need a cite_id", *where)
        authors = item.get("authors") or []
        if isinstance(authors, str):
            authors = authors.split(";")
        docs.append(
            CitingDoc(
                cite_id=str(item["cite_id"]),
                authors=tuple(a for a in (normalize_author(x) for x in authors) if a),
            )
        )
    return tuple(docs)


def _split_authors(value) -> tuple[str, ...]:
    if not value:
        return ()
    if isinstance(value, str):
        value = value.split(";")
    return tuple(a for a in (normalize_author(x) for x in value) if a)


def _record_from_row(row: Mapping, where, source_id, aliases) -> SourceRecord:
    src = (row.get("source") or "").strip() or source_id
    if not src:
        raise ParseError("row has no source tag", *where)
    if source_id and src != source_id:
        raise ValidationError(f"{where[0]}:{where[1]}: row tagged {src!r}, expected {source_id!r}")
    raw_count = row.get("citation_count")
    if raw_count is None or (isinstance(raw_count, str) and not raw_count.strip()):
        raise ParseError("missing citation_count", *where)
    try:
        count = int(str(raw_count).strip())
    except ValueError:
        raise ParseError(f"citation_count is not an integer: {raw_count!r}", *where) from None
    if count < 0:
        raise ValidationError(f"{where[0]}:{where[1]}: negative citation count {count}")
    try:
        key = key_from_mapping(row, aliases)
    except ValidationError as exc:
        raise type(exc)(f"{where[0]}:{where[1]}: {exc}") from None
    citing = None
    if row.get("citing") is not None:
        citing = _citing_from_json(row["citing"], where)
    try:
        return SourceRecord(src, key, count, citing, _split_authors(row.get("authors")))
    except ValidationError as exc:
        raise ValidationError(f"{where[0]}:{where[1]}: {exc}") from None


def _looks_like_jsonl(path: Path) -> bool:
    if path.suffix.lower() in (".jsonl", ".ndjson", ".json"):
        return True
    if path.suffix.lower() in (".csv", ".tsv", ".txt"):
        return False
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                return line.lstrip().startswith("{")
    return False


def parse_records(path, source_id: Optional[str] = None, aliases: Optional[VenueAliases] = None) -> list[SourceRecord]:
    """Read one export file (either layout) into SourceRecords.

    Rows with an empty ``source`` cell take ``source_id``; rows tagged with
    a different source are rejected.
    """
    path = Path(path)
    if _looks_like_jsonl(path):
        return _parse_jsonl(path, source_id, aliases)
    return _parse_csv(path, source_id, aliases)


def _parse_csv(path: Path, source_id, aliases) -> list[SourceRecord]:
    delimiter = "\t" if path.suffix.lower() == ".tsv" else ","
    records = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        header = next(reader, None)
        if header is None:
            return records
        header = [h.strip() for h in header]
        missing = [f for f in CSV_FIELDS if f not in header]
        if missing:
            raise ParseError(f"header lacks columns {missing}", str(path), 1)
        for row in reader:
            line = reader.line_num
            if not any(cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", str(path), line)
            records.append(_record_from_row(dict(zip(header, row)), (str(path), line), source_id, aliases))
    return records


def _parse_jsonl(path: Path, source_id, aliases) -> list[SourceRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON ({exc.msg})", str(path), line_no) from None
            if not isinstance(obj, dict):
                raise ParseError("each line must be a JSON object", str(path), line_no)
            records.append(_record_from_row(obj, (str(path), line_no), source_id, aliases))
    return records


def record_to_dict(rec: SourceRecord, with_citing: bool = True) -> dict:
    out = {"source": rec.source_id}
    out.update(rec.key.to_dict())
    out["authors"] = list(rec.authors)
    out["citation_count"] = rec.count
    if with_citing and rec.citing is not None:
        out["citing"] = [{"cite_id": c.cite_id, "authors": list(c.authors)} for c in rec.citing]
    return out


def write_records_csv(records: Iterable[SourceRecord], path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        for rec in records:
            row = record_to_dict(rec, with_citing=False)
            row["authors"] = ";".join(row["authors"])
            writer.writerow({k: "" if row[k] is None else row[k] for k in CSV_FIELDS})


def write_records_jsonl(records: Iterable[SourceRecord], path):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(record_to_dict(rec), ensure_ascii=False) + "\n")


# -- duplicate repair ------------------------------------------------------


def titles_close(a: PubKey, b: PubKey, max_edit_distance: int) -> bool:
    if not a.title_norm or not b.title_norm or a.year != b.year:
        return False
    d = Levenshtein.distance(a.title_norm, b.title_norm, score_cutoff=max_edit_distance)
    return d <= max_edit_distance


def _clusters(n: int, linked) -> list[list[int]]:
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if linked(i, j):
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


def _merge_group(members: Sequence[SourceRecord]) -> SourceRecord:
    """Fold typo-duplicates into the best-cited member's key."""
    keep = min(members, key=lambda r: ranking_key(r.key, r.count))
    authors = []
    for rec in members:
        for a in rec.authors:
            if a not in authors:
                authors.append(a)
    count = sum(r.count for r in members)
    citing = None
    if all(r.citing is not None for r in members):
        by_id = {}
        for rec in members:
            for doc in rec.citing:
                by_id.setdefault(doc.cite_id, doc)
        citing = tuple(by_id.values())
        if len(citing) != count:
            log.warning(
                "%s: merged citing lists overlap; count set to %d distinct citing docs (was %d)",
                keep.key.label(), len(citing), count,
            )
            count = len(citing)
    elif any(r.citing is not None for r in members):
        log.warning("%s: citing lists dropped, not every merged record carries one", keep.key.label())
    return SourceRecord(keep.source_id, keep.key, count, citing, tuple(authors))


@dataclass(frozen=True)
class MergeEvent:
    kept: PubKey
    absorbed: tuple[PubKey, ...]
    counts: tuple[int, ...]
    merged_count: int


@dataclass
class DuplicateReport:
    source_id: Optional[str]
    merges: list[MergeEvent] = field(default_factory=list)

    def __len__(self):
        return len(self.merges)

    def lines(self) -> list[str]:
        out = []
        for m in self.merges:
            absorbed = "; ".join(k.label() for k in m.absorbed)
            out.append(
                f"{self.source_id}: merged {absorbed} into {m.kept.label()} "
                f"(counts {'+'.join(map(str, m.counts))} -> {m.merged_count})"
            )
        return out


def dedup_within_source(
    records: Sequence[SourceRecord], max_edit_distance: int = DEFAULT_MAX_EDIT_DISTANCE
) -> tuple[list[SourceRecord], DuplicateReport]:
    """Merge records of one source that share a locator or nearly share a title."""
    records = list(records)
    sources = {r.source_id for r in records}
    if len(sources) > 1:
        raise ValidationError(f"dedup_within_source expects one source, got {sorted(sources)}")
    report = DuplicateReport(next(iter(sources)) if sources else None)

    def linked(i, j):
        # distinct locators mark distinct papers even when titles are close
        return records_match(records[i].key, records[j].key, max_edit_distance)

    out = []
    for group in _clusters(len(records), linked):
        members = [records[i] for i in group]
        if len(members) == 1:
            out.append(members[0])
            continue
        merged = _merge_group(members)
        ordered = sorted(members, key=lambda r: ranking_key(r.key, r.count))
        report.merges.append(
            MergeEvent(
                kept=merged.key,
                absorbed=tuple(r.key for r in ordered if r is not ordered[0]),
                counts=tuple(r.count for r in ordered),
                merged_count=merged.count,
            )
        )
        out.append(merged)
    return out, report


# -- corrections ledger ----------------------------------------------------

EDIT_OPS = ("set_count", "merge_records", "delete_record", "set_key", "add_record")


@dataclass(frozen=True)
class Edit:
    op: str
    source_id: str
    key: PubKey
    new_count: Optional[int] = None
    other_key: Optional[PubKey] = None
    new_key: Optional[PubKey] = None
    authors: tuple[str, ...] = ()
    reason: str = ""

    def __post_init__(self):
        if self.op not in EDIT_OPS:
            raise ValidationError(f"unknown ledger op {self.op!r}")
        if self.op in ("set_count", "add_record"):
            if self.new_count is None:
                raise ValidationError(f"{self.op} needs new_count")
            if self.new_count < 0:
                raise ValidationError(f"{self.op} to negative count {self.new_count}")
        if self.op == "merge_records" and self.other_key is None:
            raise ValidationError("merge_records needs other_key")
        if self.op == "set_key" and self.new_key is None:
            raise ValidationError("set_key needs new_key")


@dataclass(frozen=True)
class CorrectionsLedger:
    edits: tuple[Edit, ...] = ()

    def __len__(self):
        return len(self.edits)


def _edit_from_json(obj: Mapping, where, aliases) -> Edit:
    try:
        op = obj["op"]
        source = obj["source"]
        key = key_from_mapping(obj["key"], aliases)
    except KeyError as exc:
        raise ParseError(f"ledger edit lacks field {exc.args[0]!r}", *where) from None
    new_count = obj.get("new_count", obj.get("count"))
    other = obj.get("other_key")
    new_key = obj.get("new_key")
    try:
        return Edit(
            op=op,
            source_id=source,
            key=key,
            new_count=_opt_int(new_count, "new_count"),
            other_key=key_from_mapping(other, aliases) if other else None,
            new_key=key_from_mapping(new_key, aliases) if new_key else None,
            authors=_split_authors(obj.get("authors")),
            reason=obj.get("reason", ""),
        )
    except ValidationError as exc:
        raise ValidationError(f"{where[0]}:{where[1]}: {exc}") from None


def load_ledger(path, aliases: Optional[VenueAliases] = None) -> CorrectionsLedger:
    edits = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON ({exc.msg})", str(path), line_no) from None
            edits.append(_edit_from_json(obj, (str(path), line_no), aliases))
    return CorrectionsLedger(tuple(edits))


def edit_to_dict(edit: Edit) -> dict:
    out = {"op": edit.op, "source": edit.source_id, "key": edit.key.to_dict()}
    if edit.new_count is not None:
        out["new_count"] = edit.new_count
    if edit.other_key is not None:
        out["other_key"] = edit.other_key.to_dict()
    if edit.new_key is not None:
        out["new_key"] = edit.new_key.to_dict()
    if edit.authors:
        out["authors"] = list(edit.authors)
    out["reason"] = edit.reason
    return out


def _find(records: list[SourceRecord], source_id: str, key: PubKey) -> Optional[int]:
    for i, rec in enumerate(records):
        if rec.source_id == source_id and rec.key == key:
            return i
    return None


def _resolve(out, edits: Sequence[Edit], pos: int, source_id: str, key: PubKey) -> Optional[int]:
    """Index of ``key``, or of the name a later rename in the ledger gives it."""
    idx = _find(out, source_id, key)
    current = key
    for later in edits[pos + 1:]:
        if idx is not None:
            break
        if later.op == "set_key" and later.source_id == source_id and later.key == current:
            current = later.new_key
            idx = _find(out, source_id, current)
    return idx


def apply_corrections(records: Sequence[SourceRecord], ledger: CorrectionsLedger) -> list[SourceRecord]:
    """Apply ledger edits in order; returns a new list.

    Edits whose effect is already present (a merge whose duplicate is gone,
    a rename already done, an added record already there) are no-ops, so
    re-applying a ledger to corrected data changes nothing.
    """
    out = list(records)
    edits = ledger.edits
    for pos, edit in enumerate(edits):
        where = f"{edit.op} {edit.source_id}:{edit.key.label()}"
        if edit.op == "add_record":
            if _resolve(out, edits, pos, edit.source_id, edit.key) is not None:
                log.warning("%s: record already present, skipped", where)
                continue
            out.append(SourceRecord(edit.source_id, edit.key, edit.new_count, None, edit.authors))
            continue
        idx = _find(out, edit.source_id, edit.key)
        if edit.op == "delete_record":
            if idx is None:
                log.warning("%s: no such record, nothing deleted", where)
            else:
                del out[idx]
            continue
        if edit.op == "set_key":
            if idx is None:
                if _find(out, edit.source_id, edit.new_key) is not None:
                    continue
                if _resolve(out, edits, pos, edit.source_id, edit.new_key) is not None:
                    continue
                raise UnknownPublicationError(f"{where}: no such record")
            if edit.new_key != edit.key and _find(out, edit.source_id, edit.new_key) is not None:
                raise ValidationError(f"{where}: target key already exists; use merge_records")
            out[idx] = replace(out[idx], key=edit.new_key)
            continue
        if idx is None:
            idx = _resolve(out, edits, pos, edit.source_id, edit.key)
        if idx is None:
            raise UnknownPublicationError(f"{where}: no such record")
        rec = out[idx]
        if edit.op == "set_count":
            citing = rec.citing
            if citing is not None and len(citing) != edit.new_count:
                log.warning("%s: citing list no longer matches count, dropped", where)
                citing = None
            out[idx] = replace(rec, count=edit.new_count, citing=citing)
        elif edit.op == "merge_records":
            j = _resolve(out, edits, pos, edit.source_id, edit.other_key)
            if j is None or j == idx:
                log.warning("%s: duplicate %s already absent", where, edit.other_key.label())
                continue
            merged = _merge_group([rec, out[j]])
            out[idx] = replace(merged, key=rec.key)
            del out[j]
    return out


# -- cross-source matching -------------------------------------------------


@dataclass
class MatchedPublication:
    """Records from different sources believed to denote one publication."""

    key: PubKey
    per_source: dict[str, SourceRecord]

    def __post_init__(self):
        if not self.per_source:
            raise ValidationError("a matched publication needs at least one source")

    @property
    def counts(self) -> dict[str, int]:
        return {s: r.count for s, r in self.per_source.items()}

    @property
    def max_count(self) -> int:
        return max(r.count for r in self.per_source.values())

    @property
    def sum_count(self) -> int:
        return sum(r.count for r in self.per_source.values())

    @property
    def authors(self) -> tuple[str, ...]:
        names = []
        for rec in self.per_source.values():
            for a in rec.authors:
                if a not in names:
                    names.append(a)
        return tuple(names)


def records_match(a: PubKey, b: PubKey, max_edit_distance: int = DEFAULT_MAX_EDIT_DISTANCE) -> bool:
    if a == b:
        return True
    if a.year != b.year:
        return False
    if a.has_locator and b.has_locator:
        return a.locator == b.locator
    return titles_close(a, b, max_edit_distance)


def _canonical_key(records: Sequence[SourceRecord]) -> PubKey:
    return min(
        (r.key for r in records),
        key=lambda k: (not k.has_locator, not k.title_norm, k.sort_key()),
    )


def match_across_sources(
    per_source, max_edit_distance: int = DEFAULT_MAX_EDIT_DISTANCE
) -> list[MatchedPublication]:
    """Cluster records across sources; each cluster holds at most one record per source.

    ``per_source`` is a mapping source_id -> records or a sequence of record lists.
    """
    if isinstance(per_source, Mapping):
        lists = [per_source[s] for s in sorted(per_source)]
    else:
        lists = list(per_source)
    records = [r for lst in lists for r in lst]
    records.sort(key=lambda r: (r.source_id, r.key.sort_key(), r.count))

    by_year: dict[int, list[int]] = {}
    for i, rec in enumerate(records):
        by_year.setdefault(rec.key.year, []).append(i)

    out = []
    for year in sorted(by_year):
        idx = by_year[year]
        block = [records[i] for i in idx]

        def linked(i, j, block=block):
            a, b = block[i], block[j]
            return a.source_id != b.source_id and records_match(a.key, b.key, max_edit_distance)

        for group in _clusters(len(block), linked):
            members = [block[i] for i in group]
            per = {}
            for rec in members:
                if rec.source_id in per:
                    raise AmbiguousMatchError(
                        f"{rec.source_id}: {per[rec.source_id].key.label()} and {rec.key.label()} "
                        "fall in one cluster; resolve with a ledger edit"
                    )
                per[rec.source_id] = rec
            out.append(MatchedPublication(_canonical_key(members), dict(sorted(per.items()))))
    out.sort(key=lambda m: m.key.sort_key())
    return out
