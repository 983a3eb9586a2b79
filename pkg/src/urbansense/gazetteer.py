"""Place-name recognition and geocoding against a loaded gazetteer.

The matcher works over normalized text (see text.normalize) in four modes:
exact surface match of the canonical name (score 1.0), case/accent-folded
match (0.95), alias match (0.9), and fuzzy match (0.9 x similarity) with a
length-scaled Levenshtein budget. A contextual filter then drops low-score
matches that lack a nearby spatial cue, which is what keeps single common
words ("corso") from flooding the results.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Union

from .errors import GazetteerFormatError
from .model import GeoPoint, GeoProvenance, Message, ResolvedGeo
from .text import _TOKEN_RE, normalize, token_spans

CSV_HEADER = ["id", "canonical_name", "kind", "lat", "lon", "aliases", "context_cues"]

# Spatial prepositions that count as context cues for any entry. English and
# Italian, matching the corpus the default fixtures target.
DEFAULT_PREPOSITIONS = ("at", "in", "near", "to", "from", "verso", "a", "presso")


class PlaceKind(Enum):
    STREET = "street"
    MALL = "mall"
    CINEMA = "cinema"
    MUSEUM = "museum"
    LANDMARK = "landmark"
    NEIGHBORHOOD = "neighborhood"
    PUB = "pub"
    BAR = "bar"
    SHOP = "shop"
    STORE = "store"
    GYM = "gym"
    OTHER = "other"


class MatchMode(Enum):
    EXACT = "exact"
    NORMALIZED = "normalized"
    ALIAS = "alias"
    FUZZY = "fuzzy"


_MODE_SCORES = {MatchMode.EXACT: 1.0, MatchMode.NORMALIZED: 0.95, MatchMode.ALIAS: 0.9}

FUZZY_MIN_NAME_LEN = 5
FUZZY_CHARS_PER_EDIT = 8


@dataclass(frozen=True)
class GazetteerEntry:
    id: str
    canonical_name: str
    kind: PlaceKind
    location: GeoPoint
    aliases: tuple[str, ...] = ()
    context_cues: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.id:
            raise ValueError("entry id must be non-empty")
        if not self.canonical_name.strip():
            raise ValueError("canonical_name must be non-empty")
        folded = [a.casefold() for a in self.aliases]
        if len(set(folded)) != len(folded):
            raise ValueError(f"entry {self.id}: aliases not case-fold unique")


@dataclass(frozen=True)
class ToponymMatch:
    entry_id: str
    span: tuple[int, int]  # offsets into the normalized text
    mode: MatchMode
    score: float
    matched_name: str  # the gazetteer name (canonical or alias) that matched

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError("score outside [0, 1]")
        if self.mode is MatchMode.FUZZY and self.score >= 1.0:
            raise ValueError("fuzzy match cannot score 1.0")


@dataclass(frozen=True)
class MatchConfig:
    """Tunables for the contextual false-positive filter."""

    prepositions: tuple[str, ...] = DEFAULT_PREPOSITIONS
    single_word_floor: float = 0.95
    multi_word_floor: float = 0.9
    context_window: int = 3


DEFAULT_MATCH_CONFIG = MatchConfig()


@dataclass(frozen=True)
class _NameRecord:
    entry_id: str
    raw: str  # name as written in the gazetteer
    key: str  # token-joined normalized form
    raw_key: str  # token-joined raw form (case preserved), for exact matching
    n_tokens: int
    is_alias: bool


class GazetteerIndex:
    """Immutable lookup structure over gazetteer entries."""

    def __init__(self, entries: list[GazetteerEntry]):
        self.entries: dict[str, GazetteerEntry] = {}
        self._by_key: dict[str, list[_NameRecord]] = {}
        self._fuzzy_by_n: dict[int, list[_NameRecord]] = {}
        self._cues: dict[str, frozenset[str]] = {}
        self.max_name_tokens = 1
        for e in entries:
            if e.id in self.entries:
                raise ValueError(f"duplicate gazetteer id {e.id!r}")
            self.entries[e.id] = e
            self._cues[e.id] = frozenset(normalize(c) for c in e.context_cues)
            for raw, is_alias in [(e.canonical_name, False)] + [(a, True) for a in e.aliases]:
                key = _name_key(raw)
                if not key:
                    raise ValueError(f"entry {e.id}: name {raw!r} normalizes to nothing")
                n_tokens = key.count(" ") + 1
                rec = _NameRecord(
                    entry_id=e.id,
                    raw=raw,
                    key=key,
                    raw_key=" ".join(_TOKEN_RE.findall(raw)),
                    n_tokens=n_tokens,
                    is_alias=is_alias,
                )
                self._by_key.setdefault(rec.key, []).append(rec)
                if _fuzzy_budget(rec.key) > 0:
                    self._fuzzy_by_n.setdefault(n_tokens, []).append(rec)
                self.max_name_tokens = max(self.max_name_tokens, n_tokens)

    def __len__(self) -> int:
        return len(self.entries)

    def lookup_name(self, name: str) -> list[GazetteerEntry]:
        """Entries whose canonical name or alias equals `name` after normalization."""
        recs = self._by_key.get(_name_key(name), [])
        seen: dict[str, GazetteerEntry] = {}
        for r in recs:
            seen.setdefault(r.entry_id, self.entries[r.entry_id])
        return list(seen.values())

    def cues_for(self, entry_id: str) -> frozenset[str]:
        return self._cues[entry_id]


def _name_key(name: str) -> str:
    return " ".join(_TOKEN_RE.findall(normalize(name)))


def _split_list(cell: str) -> tuple[str, ...]:
    if not cell.strip():
        return ()
    return tuple(part.strip() for part in cell.split("|") if part.strip())


def load_gazetteer(source: Union[str, Iterable[str], io.TextIOBase]) -> GazetteerIndex:
    """Build an index from CSV text (header required, see CSV_HEADER).

    `source` is a file path, an open text stream, or an iterable of lines.
    Malformed rows raise GazetteerFormatError carrying the 1-based line number.
    """
    if isinstance(source, str):
        with open(source, encoding="utf-8", newline="") as fh:
            return load_gazetteer(fh)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise GazetteerFormatError("missing header row", line=1)
    if header != CSV_HEADER:
        raise GazetteerFormatError(
            f"bad header {header!r}, expected {CSV_HEADER!r}", line=1
        )
    entries: list[GazetteerEntry] = []
    seen_ids: set[str] = set()
    for row in reader:
        line = reader.line_num
        if not row:
            continue
        if len(row) != len(CSV_HEADER):
            raise GazetteerFormatError(f"expected {len(CSV_HEADER)} fields, got {len(row)}", line=line)
        raw_id, name, kind_s, lat_s, lon_s, aliases_s, cues_s = row
        if raw_id in seen_ids:
            raise GazetteerFormatError(f"duplicate id {raw_id!r}", line=line)
        try:
            kind = PlaceKind(kind_s)
        except ValueError:
            raise GazetteerFormatError(f"unknown kind {kind_s!r}", line=line)
        try:
            location = GeoPoint(float(lat_s), float(lon_s))
        except ValueError as exc:
            raise GazetteerFormatError(str(exc), line=line)
        try:
            entry = GazetteerEntry(
                id=raw_id,
                canonical_name=name,
                kind=kind,
                location=location,
                aliases=_split_list(aliases_s),
                context_cues=_split_list(cues_s),
            )
        except ValueError as exc:
            raise GazetteerFormatError(str(exc), line=line)
        seen_ids.add(raw_id)
        entries.append(entry)
    return GazetteerIndex(entries)


def _levenshtein_capped(a: str, b: str, cap: int) -> int:
    """Edit distance, giving up (returning cap+1) once the cap is exceeded."""
    if a == b:
        return 0
    if abs(len(a) - len(b)) > cap:
        return cap + 1
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        row_min = i
        for j, cb in enumerate(b, 1):
            cost = 0 if ca == cb else 1
            v = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
            cur.append(v)
            row_min = min(row_min, v)
        if row_min > cap:
            return cap + 1
        prev = cur
    return prev[-1]


def _fuzzy_budget(name_key: str) -> int:
    if len(name_key) < FUZZY_MIN_NAME_LEN:
        return 0
    return max(1, len(name_key) // FUZZY_CHARS_PER_EDIT)


@dataclass(frozen=True)
class _Candidate:
    start: int
    end: int
    entry_id: str
    mode: MatchMode
    score: float
    matched_name: str


def match_candidates(text: str, index: GazetteerIndex) -> list[ToponymMatch]:
    """All maximal non-overlapping toponym matches, ordered by span start.

    Longer spans win over shorter ones; on equal spans higher score wins,
    then earlier start, then lexicographic entry id.
    """
    if not text:
        return []
    spans = token_spans(text)
    if not spans:
        return []
    raw_tokens = _TOKEN_RE.findall(text)
    raw_aligned = len(raw_tokens) == len(spans)

    candidates: list[_Candidate] = []
    n_tokens = len(spans)
    for i in range(n_tokens):
        for n in range(1, min(index.max_name_tokens, n_tokens - i) + 1):
            window = spans[i : i + n]
            key = " ".join(tok for tok, _, _ in window)
            start, end = window[0][1], window[-1][2]
            raw_joined = " ".join(raw_tokens[i : i + n]) if raw_aligned else None
            best: dict[str, _Candidate] = {}

            def offer(rec: _NameRecord, mode: MatchMode, score: float):
                cur = best.get(rec.entry_id)
                if cur is None or score > cur.score:
                    best[rec.entry_id] = _Candidate(start, end, rec.entry_id, mode, score, rec.raw)

            for rec in index._by_key.get(key, []):
                if not rec.is_alias and raw_joined == rec.raw_key:
                    offer(rec, MatchMode.EXACT, _MODE_SCORES[MatchMode.EXACT])
                elif rec.is_alias:
                    offer(rec, MatchMode.ALIAS, _MODE_SCORES[MatchMode.ALIAS])
                else:
                    offer(rec, MatchMode.NORMALIZED, _MODE_SCORES[MatchMode.NORMALIZED])
            klen = len(key)
            for rec in index._fuzzy_by_n.get(n, ()):
                if rec.key == key:
                    continue
                budget = _fuzzy_budget(rec.key)
                if abs(klen - len(rec.key)) > budget:
                    continue
                # a single edit leaves at least one end of the string intact
                if budget == 1 and key[0] != rec.key[0] and key[-1] != rec.key[-1]:
                    continue
                dist = _levenshtein_capped(key, rec.key, budget)
                if dist > budget:
                    continue
                sim = 1.0 - dist / max(klen, len(rec.key))
                offer(rec, MatchMode.FUZZY, 0.9 * sim)
            candidates.extend(best.values())

    # Greedy selection: longest span first, then score, position, entry id.
    candidates.sort(key=lambda c: (-(c.end - c.start), -c.score, c.start, c.entry_id))
    taken: list[_Candidate] = []
    for c in candidates:
        if all(c.end <= t.start or c.start >= t.end for t in taken):
            taken.append(c)
    taken.sort(key=lambda c: c.start)
    return [
        ToponymMatch(c.entry_id, (c.start, c.end), c.mode, c.score, c.matched_name)
        for c in taken
    ]


def filter_by_context(
    matches: list[ToponymMatch],
    text: str,
    index: GazetteerIndex,
    config: MatchConfig = DEFAULT_MATCH_CONFIG,
) -> list[ToponymMatch]:
    """Drop probable false positives.

    A match survives if any of:
      (a) it is a perfect-score match on a multi-word name;
      (b) a context cue of its entry, or a spatial preposition, appears in
          the few tokens just before the span;
      (c) its score clears the floor for its name shape (single- vs multi-word).
    """
    if not matches:
        return []
    spans = token_spans(text)
    preps = frozenset(normalize(p) for p in config.prepositions)
    kept: list[ToponymMatch] = []
    for m in matches:
        multi_word = " " in _name_key(m.matched_name)
        if m.score >= 1.0 and multi_word:
            kept.append(m)
            continue
        floor = config.multi_word_floor if multi_word else config.single_word_floor
        if m.score >= floor:
            kept.append(m)
            continue
        cues = index.cues_for(m.entry_id) | preps
        before = [tok for tok, s, _ in spans if s < m.span[0]]
        if any(tok in cues for tok in before[-config.context_window :]):
            kept.append(m)
    return kept


def best_match(matches: list[ToponymMatch]) -> Optional[ToponymMatch]:
    """Highest score; ties broken by earliest span, then entry id."""
    if not matches:
        return None
    return min(matches, key=lambda m: (-m.score, m.span[0], m.entry_id))


def retained_matches(
    text: str, index: GazetteerIndex, config: MatchConfig = DEFAULT_MATCH_CONFIG
) -> list[ToponymMatch]:
    return filter_by_context(match_candidates(text, index), text, index, config)


def geoparse_entry(
    text: str, index: GazetteerIndex, config: MatchConfig = DEFAULT_MATCH_CONFIG
) -> Optional[str]:
    """Entry id of the best retained match in the text, if any."""
    best = best_match(retained_matches(text, index, config))
    return None if best is None else best.entry_id


def geocode(
    msg: Message, index: GazetteerIndex, config: MatchConfig = DEFAULT_MATCH_CONFIG
) -> Optional[ResolvedGeo]:
    """Resolve a message to coordinates.

    A declared position always wins and skips geoparsing entirely; otherwise
    the best retained toponym (if any) supplies the location.
    """
    if msg.declared_geo is not None:
        return ResolvedGeo(msg.declared_geo, GeoProvenance.DECLARED)
    best = best_match(retained_matches(msg.text, index, config))
    if best is None:
        return None
    return ResolvedGeo(index.entries[best.entry_id].location, GeoProvenance.GEOPARSED)
