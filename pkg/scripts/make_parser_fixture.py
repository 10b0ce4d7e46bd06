"""Regenerate the bundled parser fixture and its expectation file.

One table below defines every element of the fixture; this script writes
both the XML and the expected-parse JSON from it with hand-rolled
serializers, deliberately independent of the package's own parser and
store code so the test compares two unrelated derivations.

Run from the repository root:

    python scripts/make_parser_fixture.py
"""

from __future__ import annotations

import json
from pathlib import Path

OUT_DIR = Path(__file__).resolve().parent.parent / "tests" / "data"


def A(display: str, xml: str | None = None) -> dict:
    """An author cell: expected display text plus its raw XML form."""
    return {"display": display, "xml": xml if xml is not None else display}


def _xml_escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


# The parsed records, in document order.  "title_xml"/"source_xml" override
# the raw XML body when it differs from the plain text (entities, markup).
RECORDS: list[dict] = []


def R(key, kind, title, authors, source="", year=0, title_xml=None, source_field=None, source_xml=None):
    RECORDS.append(
        {
            "key": key,
            "kind": kind,
            "title": title,
            "title_xml": title_xml,
            "source": source,
            "source_field": source_field or ("journal" if kind == "article" else "booktitle"),
            "source_xml": source_xml,
            "year": year,
            "authors": authors,
        }
    )


# --- hand-crafted records exercising specific parser behavior -----------

R(
    "journals/tods/LiL01",
    "article",
    "Optimizing Joins over Distributed Streams",
    [A("Bing Li 0001"), A("Wei Zhang")],
    source="ACM Trans. Database Syst.",
    year=2001,
)
R(
    "journals/tods/LiW02",
    "article",
    "Access Paths for Temporal Data",
    [A("Bing Li 0002"), A("Lei Wang")],
    source="ACM Trans. Database Syst.",
    year=2002,
)
R(
    "conf/sigmod/ChenW03",
    "inproceedings",
    "Schätzung von Kardinalitäten",
    [A("Jürgen Müller", "J&uuml;rgen M&uuml;ller"), A("René François", "Ren&eacute; Fran&ccedil;ois")],
    source="SIGMOD Conference",
    year=2003,
    title_xml="Sch&auml;tzung von Kardinalit&auml;ten",
)
R(
    "journals/vldb/WangW04",
    "article",
    "Answering Queries on Encrypted Data",
    [A("Yu Wang"), A("Yan Wang")],
    source="VLDB J.",
    year=2004,
)
R(
    "conf/icde/Chen05",
    "inproceedings",
    "Learning to Rank with Partially Labeled Data",
    [A("Jian-Min Chen")],
    source="ICDE",
    year=2005,
)
R(
    "journals/jacm/Smith06",
    "article",
    "On the Complexity of Nested Queries",
    [A("A. B. Smith")],
    source="J. ACM",
    year=2006,
)
R(
    "journals/cacm/Madonna07",
    "article",
    "A Note on Single Names",
    [A("Madonna")],
    source="Commun. ACM",
    year=2007,
)
R(
    "journals/corr/abs-0801-0001",
    "article",
    "Indexing k-mers in log n Space",
    [A("Li Wei"), A("Wei Li")],
    year=2008,
    title_xml="Indexing <i>k</i>-mers in log <i>n</i> Space",
)
R(
    "conf/www/GarciaO09",
    "inproceedings",
    "Entity Resolution at Web Scale",
    [A("María García"), A("Øyvind Ås")],
    source="WWW",
    year=2009,
)
R(
    "journals/tkde/X10",
    "article",
    "H2O: A Hybrid Storage Engine",
    [A("Xiao-Feng Xu"), A("Bing Li 0001")],
    source="IEEE Trans. Knowl. Data Eng.",
    title_xml="H<sub>2</sub>O: A Hybrid Storage Engine",
)

# --- bulk records filling the fixture to 50 -----------------------------

_FIRST = ["Yong", "Ying", "Yun", "Hua", "Ming", "Jing", "Feng", "Hong"]
_LAST = ["Chen", "Liu", "Zhao", "Sun"]
_VENUE_J = ["Inf. Syst.", "Data Knowl. Eng.", "Inf. Process. Lett."]
_VENUE_C = ["CIKM", "KDD", "EDBT"]
_TOPIC = [
    "Query Optimization",
    "Stream Processing",
    "Graph Matching",
    "Schema Mapping",
    "Index Compression",
    "Record Linkage",
    "View Maintenance",
    "Load Shedding",
]

for i in range(40):
    kind = "article" if i % 2 == 0 else "inproceedings"
    first = _FIRST[i % len(_FIRST)]
    co_first = _FIRST[(i + 3) % len(_FIRST)]
    last = _LAST[i % len(_LAST)]
    co_last = _LAST[(i + 1) % len(_LAST)]
    authors = [A(f"{first} {last}"), A(f"{co_first} {co_last}")]
    if i % 5 == 0:
        authors.append(A(f"{_FIRST[(i + 5) % len(_FIRST)]} {_LAST[(i + 2) % len(_LAST)]}"))
    venue = _VENUE_J[i % 3] if kind == "article" else _VENUE_C[i % 3]
    R(
        f"{'journals/is' if kind == 'article' else 'conf/cikm'}/F{i:02d}",
        kind,
        f"{_TOPIC[i % len(_TOPIC)]} Revisited: Part {i + 1}",
        authors,
        source=venue,
        year=2010 + (i % 12),
    )

assert len(RECORDS) == 50, len(RECORDS)

# Elements the parser must skip, interleaved between records: either a kind
# outside the default filter, or a malformed publication element.
SKIPPED_XML = [
    '<www key="homepages/x/BingLi1"><author>Bing Li 0001</author><title>Home Page</title></www>',
    '<phdthesis key="phd/de/Muller2003"><author>J&uuml;rgen M&uuml;ller</author>'
    "<title>Kardinalit&auml;tssch&auml;tzung</title><year>2003</year></phdthesis>",
    '<proceedings key="conf/sigmod/2003"><title>SIGMOD 2003 Proceedings</title></proceedings>',
    '<article key="journals/broken/NoTitle11"><author>Ghost Writer</author><journal>Nowhere</journal></article>',
    '<inproceedings key="conf/broken/NoAuthors12"><title>An Orphan Paper</title><booktitle>NOCONF</booktitle></inproceedings>',
    "<article><author>Key Less</author><title>A Paper Without a Key</title></article>",
    '<masterthesis key="ms/x/Y"><author>M Student</author><title>A Thesis</title></masterthesis>',
]

EXPECTED_COUNTERS = {
    "records": 50,
    "skipped_missing_title": 1,
    "skipped_missing_authors": 1,
    "skipped_missing_key": 1,
    "skipped_other_kinds": 4,
    "empty_source": 1,
}


def record_xml(rec: dict) -> str:
    lines = [f'<{rec["kind"]} key="{rec["key"]}" mdate="2020-07-01">']
    for author in rec["authors"]:
        lines.append(f'<author>{author["xml"]}</author>')
    title = rec["title_xml"] if rec["title_xml"] is not None else _xml_escape(rec["title"])
    lines.append(f"<title>{title}</title>")
    if rec["year"]:
        lines.append(f'<year>{rec["year"]}</year>')
    if rec["source"]:
        source = rec["source_xml"] if rec["source_xml"] is not None else _xml_escape(rec["source"])
        lines.append(f'<{rec["source_field"]}>{source}</{rec["source_field"]}>')
    lines.append(f'<ee>https://doi.org/10.0000/{rec["key"].replace("/", ".")}</ee>')
    lines.append(f"</{rec['kind']}>")
    return "\n".join(lines)


def split_suffix(display: str) -> tuple[str, int]:
    parts = display.rsplit(" ", 1)
    if len(parts) == 2 and len(parts[1]) == 4 and parts[1].isdigit() and int(parts[1]) > 0:
        return parts[0], int(parts[1])
    return display, 0


def main() -> None:
    chunks = ['<?xml version="1.0"?>', '<!DOCTYPE dblp SYSTEM "dblp.dtd">', "<dblp>"]
    skipped = iter(SKIPPED_XML)
    for i, rec in enumerate(RECORDS):
        if i % 7 == 3:
            nxt = next(skipped, None)
            if nxt:
                chunks.append(nxt)
        chunks.append(record_xml(rec))
    for nxt in skipped:
        chunks.append(nxt)
    chunks.append("</dblp>")
    (OUT_DIR / "dblp_fixture.xml").write_bytes(("\n".join(chunks) + "\n").encode("utf-8"))

    expected = {
        "counters": EXPECTED_COUNTERS,
        "records": [
            {
                "key": rec["key"],
                "kind": rec["kind"],
                "title": rec["title"],
                "source": rec["source"],
                "year": rec["year"],
                "authors": [
                    {
                        "display": a["display"],
                        "base": split_suffix(a["display"])[0],
                        "index": split_suffix(a["display"])[1],
                    }
                    for a in rec["authors"]
                ],
            }
            for rec in RECORDS
        ],
    }
    (OUT_DIR / "dblp_fixture.expected.json").write_text(
        json.dumps(expected, ensure_ascii=False, indent=1) + "\n", encoding="utf-8"
    )
    print(f"wrote {len(RECORDS)} records and {len(SKIPPED_XML)} skipped elements to {OUT_DIR}")


if __name__ == "__main__":
    main()
