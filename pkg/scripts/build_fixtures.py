#!/usr/bin/env python3
"""Write the bundled fixture exports under fixtures/.

Counts are transcribed from the published individual (top-20) and journal
(top-40) tables. Citing-document lists exist only for the records a
verifier would examine; their identifiers and author names are synthetic
placeholders chosen so that set sizes, overlaps and self-citation tallies
reproduce the published union and self-excluded counts.

Run from the repository root:  python scripts/build_fixtures.py
"""

import csv
import json
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "fixtures"
FIELDS = ["source", "title", "venue", "year", "volume", "first_page", "authors", "citation_count"]
FOCAL = "Focal Author"
FEM = "Forest Ecology and Management"
FEM_ABBR = "For. Ecol. Manage."

BOOK = ("Modelling Forest Growth and Yield", "Book", 1994, None, None)
REPORT = ("A Sustainable Forest Future", "Report", 1999, None, None)

# (identity, gs raw, wos raw) in the order printed for the raw export
TABLE1 = [
    (BOOK, 172, 96),
    (("", "Forest Science", 1995, 41, 7), 57, 50),
    (("", "Ecological Modelling", 1997, 98, 1), 53, 53),
    (("", FEM, 1995, 71, 267), 35, 41),
    (REPORT, 40, None),
    (("", FEM, 1991, 42, 143), None, 40),
    (("", FEM, 1989, 27, 245), 29, 36),
    (("", FEM, 1995, 71, 251), 30, 32),
    (("", FEM, 2003, 172, 229), 26, 10),
    (("", "Journal of Tropical Forest Science", 1991, 4, 59), 15, 19),
    (("", FEM, 1992, 54, 257), 9, 17),
    (("", "Forest Science", 1991, 37, 1656), 15, 16),
    (("", "Ambio", 1993, 22, 225), 13, 12),
    (("", FEM, 2001, 150, 27), None, 13),
    (("", FEM, 1994, 69, 299), 11, 6),
    (("", "Canadian Journal of Forest Research", 1992, 22, 1235), 11, 8),
    (("", "Agroforestry Forum", 1998, 9, 47), 10, 2),
    (("", FEM, 1997, 94, 149), 10, 9),
    (("", "Photogramm. Eng. and Remote Sensing", 1990, 56, 1383), 6, 9),
    (("", FEM, 2001, 150, 79), None, 7),
]

# typo-split duplicate of the book in the WoS export
BOOK_TYPO = ("Modelling Forest Growth and Yeild", "Book", 1994, None, None)
BOOK_TYPO_COUNT = 46

MULTI_AUTHOR = {
    ("", FEM, 2001, 150, 27): [FOCAL, "Coauthor A", "Coauthor B", "Coauthor C"],
    ("", FEM, 2001, 150, 79): [FOCAL, "Coauthor D"],
}

LEDGER = [
    ("gs", "set_count", BOOK, 177, "book citations split across variant GS entries"),
    ("gs", "set_count", ("", "Forest Science", 1995, 41, 7), 58, "variant GS entry folded in"),
    ("gs", "set_count", ("", FEM, 1995, 71, 267), 41, "variant GS entries folded in"),
    ("gs", "set_count", ("", FEM, 1989, 27, 245), 30, "variant GS entry folded in"),
    ("gs", "set_count", ("", "Ambio", 1993, 22, 225), 14, "variant GS entry folded in"),
    ("gs", "set_count", ("", "Agroforestry Forum", 1998, 9, 47), 11, "variant GS entry folded in"),
    ("gs", "add_record", ("", FEM, 1991, 42, 143), 27, "GS entry without author tag"),
    ("gs", "add_record", ("", FEM, 2001, 150, 27), 19, "GS entry without author tag"),
    ("gs", "add_record", ("", FEM, 2001, 150, 79), 11, "GS entry without author tag"),
    ("gs", "set_count", REPORT, 42, "variant GS entry folded in"),
    ("wos", "merge_records", BOOK, BOOK_TYPO, "typographic duplicate of the book title"),
    ("wos", "set_count", ("", "Forest Science", 1995, 41, 7), 52, "citations with mistyped page"),
    ("wos", "set_count", ("", FEM, 1995, 71, 267), 42, "citation with mistyped volume"),
    ("wos", "set_count", ("", "Ambio", 1993, 22, 225), 13, "citation with mistyped year"),
    ("wos", "set_count", ("", FEM, 2001, 150, 79), 8, "citation with mistyped page"),
    ("wos", "set_count", ("", FEM, 1994, 69, 299), 7, "citation with mistyped page"),
    ("wos", "set_count", ("", FEM, 1997, 94, 149), 10, "citation with mistyped page"),
]

# corrected counts, abbreviated venues as in the corrected listing
T3 = {
    "book": (BOOK, 177, 142),
    "fs95": (("", "Forest Science", 1995, 41, 7), 58, 52),
    "em97": (("", "Ecological Modelling", 1997, 98, 1), 53, 53),
    "fem95a": (("", FEM_ABBR, 1995, 71, 267), 41, 42),
    "report": (REPORT, 42, None),
    "fem91": (("", FEM_ABBR, 1991, 42, 143), 27, 40),
    "fem89": (("", FEM_ABBR, 1989, 27, 245), 30, 36),
    "fem95b": (("", FEM_ABBR, 1995, 71, 251), 30, 32),
    "fem03": (("", FEM_ABBR, 2003, 172, 229), 26, 10),
    "ambio": (("", "Ambio", 1993, 22, 225), 14, 13),
    "jtfs": (("", "J. Trop. For. Sci.", 1991, 4, 59), 15, 19),
    "fem01a": (("", FEM_ABBR, 2001, 150, 27), 19, 13),
    "fem92": (("", FEM_ABBR, 1992, 54, 257), 9, 17),
    "fs91": (("", "Forest Science", 1991, 37, 1656), 15, 16),
    "fem01b": (("", FEM_ABBR, 2001, 150, 79), 11, 8),
    "fem94": (("", FEM_ABBR, 1994, 69, 299), 11, 7),
    "fem97": (("", FEM_ABBR, 1997, 94, 149), 10, 10),
    "cjfr": (("", "Can. J. Forest Res.", 1992, 22, 1235), 11, 8),
    "agro": (("", "Agroforestry Forum", 1998, 9, 47), 11, 2),
    "pers": (("", "Photogramm. Eng. Rem. S.", 1990, 56, 1383), 6, 9),
}
T3_AUTHORS = {"fem01a": [FOCAL, "Coauthor A", "Coauthor B", "Coauthor C"], "fem01b": [FOCAL, "Coauthor D"]}

# shared citing docs between GS and WoS for the union-checked records
T3_OVERLAP = {"ambio": 5, "fem01b": 5, "fem94": 5, "fem97": 8, "cjfr": 8, "pers": 6}
# records examined for self-citations: tag -> [(authors of self-citing doc, how many)]
T3_SELF = {
    "ambio": [([FOCAL], 2)],
    "jtfs": [([FOCAL], 2)],
    "fem01a": [([FOCAL], 2), (["Coauthor A"], 3), (["Coauthor B"], 2), (["Coauthor C", "Coauthor A"], 2)],
    "fem92": [([FOCAL], 1)],
    "fs91": [([FOCAL], 1)],
    "fem01b": [([FOCAL], 2), (["Coauthor D"], 2)],
}

# (first author, vol, page, gs, wos)
TABLE4 = [
    ("Dise N B", 71, 153, 139, 206), ("Aide T M", 77, 77, 90, 89), ("Brown I F", 75, 175, 78, 70),
    ("Verissimo A", 72, 39, 75, 63), ("Wright R F", 71, 1, 39, 73), ("Boxman A W", 71, 7, 40, 70),
    ("Emmett B A", 71, 45, 24, 54), ("Tietema A", 71, 143, 30, 53), ("Zimmerman J K", 77, 65, 40, 51),
    ("Larsen J B", 73, 85, 36, 48), ("Schowalter T D", 78, 115, 38, 45), ("Moldan F", 71, 89, 23, 45),
    ("Brandrud T E", 71, 111, 34, 44), ("Sheil D", 77, 11, 43, 42), ("Liu J G", 73, 157, 41, 39),
    ("Silva J N M", 71, 267, 35, 41), ("Gundersen P", 71, 75, 20, 41), ("Zou X M", 78, 147, 26, 40),
    ("Wright R F", 71, 163, 39, 38), ("Houllier F", 74, 91, 34, 36), ("Butterfield J", 79, 63, 29, 35),
    ("Brais S", 76, 181, 25, 35), ("Lurz P W W", 79, 79, 29, 34), ("Emmett B A", 71, 61, None, 34),
    ("Soares P", 71, 251, 30, 32), ("Bredemeier M", 71, 31, 19, 31), ("Herrera J", 76, 197, 30, 17),
    ("Barros A C", 77, 87, 30, 15), ("Ranger J", 72, 167, 22, 29), ("Ashton M S", 72, 1, 20, 29),
    ("Degraaf R M", 79, 227, 14, 28), ("Madsen P", 72, 251, 19, 27), ("Butterfield R P", 75, 111, 23, 26),
    ("Wright R F", 71, 133, 21, 26), ("Maass J M", 74, 171, 25, 24), ("Iida S", 73, 197, 25, 23),
    ("Bosac C", 74, 103, 16, 25), ("Stuanes A O", 71, 99, 11, 25), ("Pausas J G", 78, 39, 24, 23),
    ("Bren L J", 75, 1, 15, 24),
]


def row(source, ident, count, authors, citing=None):
    title, venue, year, vol, page = ident
    out = {
        "source": source,
        "title": title,
        "venue": venue,
        "year": year,
        "volume": vol,
        "first_page": page,
        "authors": authors,
        "citation_count": count,
    }
    if citing is not None:
        out["citing"] = citing
    return out


def write_pair(stem, rows):
    with open(OUT / f"{stem}.jsonl", "w", encoding="utf-8") as fh:
        for r in rows:
            fh.write(json.dumps(r, ensure_ascii=False) + "\n")
    with open(OUT / f"{stem}.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=FIELDS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            flat = {k: r[k] for k in FIELDS}
            flat["authors"] = ";".join(r["authors"])
            w.writerow({k: "" if v is None else v for k, v in flat.items()})


def key_obj(ident):
    title, venue, year, vol, page = ident
    return {"title": title, "venue": venue, "year": year, "volume": vol, "first_page": page}


def table1():
    gs, wos = [], []
    for ident, g, w in TABLE1:
        authors = MULTI_AUTHOR.get(ident, [FOCAL])
        if g is not None:
            gs.append(row("gs", ident, g, authors))
        if w is not None:
            wos.append(row("wos", ident, w, authors))
    wos.append(row("wos", BOOK_TYPO, BOOK_TYPO_COUNT, [FOCAL]))
    write_pair("table1_gs", gs)
    write_pair("table1_wos", wos)


def ledger():
    with open(OUT / "table2_ledger.jsonl", "w", encoding="utf-8") as fh:
        for source, op, ident, value, reason in LEDGER:
            edit = {"op": op, "source": source, "key": key_obj(ident)}
            if op == "merge_records":
                edit["other_key"] = key_obj(value)
            else:
                edit["new_count"] = value
            if op == "add_record":
                edit["authors"] = MULTI_AUTHOR.get(ident, [FOCAL])
            edit["reason"] = reason
            fh.write(json.dumps(edit) + "\n")


def citing_lists(tag, n_gs, n_wos):
    """Citing docs for one record: shared ids first, then source-specific ones."""
    shared = T3_OVERLAP.get(tag, 0)
    total = (n_gs or 0) + (n_wos or 0) - shared if n_gs and n_wos else max(n_gs or 0, n_wos or 0)
    authors = []
    for names, times in T3_SELF.get(tag, []):
        authors.extend([names] * times)
    docs = []
    for i in range(total):
        names = authors[i] if i < len(authors) else [f"Citing Author {tag} {i + 1}"]
        docs.append({"cite_id": f"{tag}-{i + 1:03d}", "authors": names})
    if n_gs and n_wos:
        # gs holds the shared block plus its own, wos the shared block plus the rest
        gs_docs = docs[:n_gs]
        wos_docs = docs[:shared] + docs[n_gs:]
        return gs_docs, wos_docs
    return docs, docs


def table3():
    gs, wos = [], []
    examined = set(T3_OVERLAP) | set(T3_SELF)
    for tag, (ident, g, w) in T3.items():
        authors = T3_AUTHORS.get(tag, [FOCAL])
        gs_c = wos_c = None
        if tag in T3_OVERLAP:
            gs_c, wos_c = citing_lists(tag, g, w)
        elif tag in examined:
            # only the source supplying the max count is examined
            docs, _ = citing_lists(tag, max(g, w), None)
            if g >= w:
                gs_c = docs
            else:
                wos_c = docs
        if g is not None:
            gs.append(row("gs", ident, g, authors, gs_c))
        if w is not None:
            wos.append(row("wos", ident, w, authors, wos_c))
    write_pair("table3_gs", gs)
    write_pair("table3_wos", wos)
    plan = [
        {"kind": "shortchange_top", "key": key_obj(BOOK), "delta": 30, "label": "book loses 30 citations"},
        {"kind": "inject_bogus", "n_records": 20, "count_each": 1, "label": "20 bogus records, 1 citation each"},
        {"kind": "drop_record", "key": key_obj(REPORT), "label": "report censored"},
        {"kind": "split_record", "key": key_obj(("", FEM_ABBR, 1995, 71, 267)), "fraction": 0.5,
         "label": "FEM 71:267 split in two"},
    ]
    with open(OUT / "table3_plan.jsonl", "w", encoding="utf-8") as fh:
        for p in plan:
            fh.write(json.dumps(p) + "\n")


def table4():
    gs, wos = [], []
    for author, vol, page, g, w in TABLE4:
        ident = ("", FEM, 1995, vol, page)
        if g is not None:
            gs.append(row("gs", ident, g, [author]))
        wos.append(row("wos", ident, w, [author]))
    write_pair("table4_gs", gs)
    write_pair("table4_wos", wos)
    config = {
        "source": {"gs": "table4_gs.jsonl", "wos": "table4_wos.jsonl"},
        "claimed": {"gs": 25, "wos": 29, "max": 29},
    }
    (OUT / "table4_config.json").write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")


if __name__ == "__main__":
    OUT.mkdir(exist_ok=True)
    table1()
    ledger()
    table3()
    table4()
    print(f"fixtures written to {OUT}")
