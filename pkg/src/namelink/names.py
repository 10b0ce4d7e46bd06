"""Name normalization, variate derivation and the author registry.

Every author is reachable under two name variates: the full normalized name
and the atomic variate (first-name initial plus last name).  The registry
indexes both and answers "how many known authors does this name string
correspond to" queries, which drive routing: 0 means a new author, 1 means a
direct assignment, and more than 1 means a block model has to decide.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field
from typing import Iterable

from .records import AuthorId, BibRecord, parse_author_id

_WS_RE = re.compile(r"\s+")


@dataclass(frozen=True)
class NormalizedName:
    """Ordered name tokens: no periods, no internal whitespace, never empty."""

    tokens: tuple[str, ...]

    def render(self) -> str:
        return " ".join(self.tokens)

    def key(self) -> str:
        """Case-folded render, used wherever names are compared or indexed."""
        return self.render().casefold()

    @property
    def first_name(self) -> str:
        """All tokens but the last, space-joined; empty for single-token names."""
        return " ".join(self.tokens[:-1])

    @property
    def last_name(self) -> str:
        return self.tokens[-1]


def normalize_name(raw: str) -> NormalizedName:
    """Canonicalize a printed name: NFC, suffix digits dropped, periods
    removed, hyphens split, whitespace collapsed.

    Raises ValueError when nothing survives normalization.
    """
    if not raw or not raw.strip():
        raise ValueError("name is empty")
    text = unicodedata.normalize("NFC", raw.strip())
    text = parse_author_id(text).base_name  # strip "… 0001" display suffixes
    text = text.replace(".", "").replace("-", " ")
    tokens = tuple(t for t in _WS_RE.split(text) if t)
    if not tokens:
        raise ValueError(f"name {raw!r} is empty after normalization")
    return NormalizedName(tokens)


@dataclass(frozen=True)
class AtomicVariate:
    """Most abbreviated form of a name: uppercased initial plus last token."""

    initial: str
    last: str

    def render(self) -> str:
        return f"{self.initial} {self.last}"

    def key(self) -> str:
        return self.render().casefold()


def atomic_variate(name: NormalizedName) -> AtomicVariate:
    """First character of the first token, uppercased, plus the last token.

    Single-token names use that token for both roles, so "Madonna" maps to
    "M Madonna"; this keeps the function total for degenerate inputs.
    """
    return AtomicVariate(initial=name.tokens[0][0].upper(), last=name.tokens[-1])


def name_variates(name: NormalizedName) -> set[str]:
    """The rendered full name and its atomic variate; one element when they
    coincide (e.g. the name is already of initial-plus-last shape)."""
    by_key: dict[str, str] = {}
    for display in (name.render(), atomic_variate(name).render()):
        by_key.setdefault(display.casefold(), display)
    return set(by_key.values())


@dataclass(frozen=True)
class NameForms:
    """The two renderings of one name, plus the matching target-first-name
    strings: abbreviated samples never mix with full-name samples, so every
    consumer picks one column or the other."""

    full: str
    anv: str
    full_first: str
    anv_first: str


def name_forms(name: NormalizedName) -> NameForms:
    atom = atomic_variate(name)
    return NameForms(
        full=name.render(),
        anv=atom.render(),
        full_first=name.first_name,
        anv_first=atom.initial,
    )


@dataclass
class VariateEntry:
    display: str
    authors: set[AuthorId] = field(default_factory=set)


@dataclass(frozen=True)
class RAResult:
    """Correspondence frequency of a name: how many authors it can denote."""

    count: int
    candidates: frozenset[AuthorId]


class AuthorRegistry:
    """Index from rendered name variates (case-folded) to author identities.

    Counters: L distinct authors, M distinct full names, K distinct atomic
    variates.  Built single-writer over one corpus pass, then immutable.
    """

    def __init__(self):
        self.by_variate: dict[str, VariateEntry] = {}
        self.authors: dict[AuthorId, NormalizedName] = {}
        self._full_keys: set[str] = set()
        self._atomic_keys: set[str] = set()

    @property
    def author_count(self) -> int:
        return len(self.authors)

    @property
    def name_count(self) -> int:
        return len(self._full_keys)

    @property
    def variate_count(self) -> int:
        return len(self._atomic_keys)

    def atomic_keys(self) -> set[str]:
        """Case-folded keys of every atomic variate seen (the block keys)."""
        return set(self._atomic_keys)

    def add_author(self, author: AuthorId) -> None:
        if author in self.authors:
            return
        name = normalize_name(author.base_name)
        self.authors[author] = name
        atom = atomic_variate(name)
        self._full_keys.add(name.key())
        self._atomic_keys.add(atom.key())
        for display in (name.render(), atom.render()):
            entry = self.by_variate.setdefault(display.casefold(), VariateEntry(display))
            entry.authors.add(author)

    def add_record(self, record: BibRecord) -> None:
        for mention in record.authors:
            self.add_author(mention.author_id)

    def display_variate(self, key: str) -> str:
        return self.by_variate[key.casefold()].display

    def export_lines(self) -> Iterable[str]:
        """Inspection dump: one "variate<TAB>id; id; …" line per variate."""
        for key in sorted(self.by_variate):
            entry = self.by_variate[key]
            ids = "; ".join(a.render() for a in sorted(entry.authors))
            yield f"{entry.display}\t{ids}"


def build_author_registry(corpus: Iterable[BibRecord]) -> AuthorRegistry:
    registry = AuthorRegistry()
    for record in corpus:
        registry.add_record(record)
    return registry


def resolve_name(registry: AuthorRegistry, raw_name: str) -> RAResult:
    """Count the registry authors whose variate set contains this name."""
    try:
        name = normalize_name(raw_name)
    except ValueError:
        return RAResult(0, frozenset())
    entry = registry.by_variate.get(name.key())
    if entry is None:
        return RAResult(0, frozenset())
    return RAResult(len(entry.authors), frozenset(entry.authors))
