"""Per-message annotation: topics, emotion, incident templates, relevance.

All classifiers are lexicon-driven and pure. Multi-word lexicon terms are
supported everywhere by matching token n-grams, so "piazza del popolo" can
be a keyword just like "riot".
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence, Union

from .errors import InvalidTemplateError
from .model import (
    EMOTION_ORDER,
    NEUTRAL,
    EmotionLabel,
    EnrichedMessage,
    GeoPoint,
    GeoProvenance,
    Message,
    RelevanceVerdict,
    ResolvedGeo,
    TimeWindow,
    distance_to_polyline_m,
)
from .gazetteer import GazetteerIndex, MatchConfig, DEFAULT_MATCH_CONFIG, best_match, geocode, retained_matches
from .text import tokenize

DEFAULT_RELEVANCE_THRESHOLD = 0.95


# ---------------------------------------------------------------------------
# Topics


@dataclass(frozen=True)
class TopicDomain:
    id: str
    keywords: tuple[tuple[str, float], ...]  # (term, weight)
    threshold: float = 1.0

    def __post_init__(self):
        if not self.id:
            raise ValueError("domain id must be non-empty")
        if self.threshold <= 0:
            raise ValueError(f"domain {self.id}: threshold must be positive")


class Taxonomy:
    def __init__(self, domains: Sequence[TopicDomain]):
        self.domains: dict[str, TopicDomain] = {}
        for d in domains:
            if d.id in self.domains:
                raise ValueError(f"duplicate domain id {d.id!r}")
            self.domains[d.id] = d
        self._term_index: dict[str, list[tuple[str, float]]] = {}
        self.max_term_tokens = 1
        for d in domains:
            for term, weight in d.keywords:
                key = " ".join(tokenize(term))
                if not key:
                    raise ValueError(f"domain {d.id}: keyword {term!r} normalizes to nothing")
                self._term_index.setdefault(key, []).append((d.id, weight))
                self.max_term_tokens = max(self.max_term_tokens, key.count(" ") + 1)

    def __len__(self) -> int:
        return len(self.domains)


def load_taxonomy(source: Union[str, io.TextIOBase, list]) -> Taxonomy:
    """Taxonomy from JSON: list of {id, keywords: [{term, weight}], threshold}."""
    data = _load_json(source)
    if not isinstance(data, list):
        raise ValueError("taxonomy JSON must be a list of domains")
    domains = []
    for item in data:
        domains.append(
            TopicDomain(
                id=item["id"],
                keywords=tuple((kw["term"], float(kw["weight"])) for kw in item.get("keywords", [])),
                threshold=float(item.get("threshold", 1.0)),
            )
        )
    return Taxonomy(domains)


def _load_json(source: Union[str, io.TextIOBase, list, dict]):
    if isinstance(source, (list, dict)):
        return source
    if isinstance(source, str):
        with open(source, encoding="utf-8") as fh:
            return json.load(fh)
    return json.load(source)


def _ngram_presence(tokens: list[str], max_n: int) -> set[str]:
    grams: set[str] = set()
    for n in range(1, max_n + 1):
        for i in range(len(tokens) - n + 1):
            grams.add(" ".join(tokens[i : i + n]))
    return grams


def _ngram_counts(tokens: list[str], max_n: int) -> dict[str, int]:
    counts: dict[str, int] = {}
    for n in range(1, max_n + 1):
        for i in range(len(tokens) - n + 1):
            g = " ".join(tokens[i : i + n])
            counts[g] = counts.get(g, 0) + 1
    return counts


def classify_topics(text: str, taxonomy: Taxonomy) -> frozenset[str]:
    """Domain ids whose keyword-weight sum over the text reaches the threshold.

    Each distinct keyword counts once however often it repeats; repetition is
    emphasis, not new evidence of another domain.
    """
    tokens = tokenize(text)
    if not tokens:
        return frozenset()
    present = _ngram_presence(tokens, taxonomy.max_term_tokens)
    scores: dict[str, float] = {}
    for gram in present:
        for domain_id, weight in taxonomy._term_index.get(gram, ()):
            scores[domain_id] = scores.get(domain_id, 0.0) + weight
    return frozenset(
        d for d, s in scores.items() if s >= taxonomy.domains[d].threshold
    )


# ---------------------------------------------------------------------------
# Emotion

LEXICON_HEADER = ["term", "emotion", "weight"]


class EmotionLexicon:
    def __init__(self, terms: dict[str, tuple[str, float]]):
        self.terms = terms
        self.max_term_tokens = max((t.count(" ") + 1 for t in terms), default=1)


def load_emotion_lexicon(source: Union[str, Iterable[str], io.TextIOBase]) -> EmotionLexicon:
    """Lexicon from CSV `term,emotion,weight` (header required)."""
    if isinstance(source, str):
        with open(source, encoding="utf-8", newline="") as fh:
            return load_emotion_lexicon(fh)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("emotion lexicon: missing header row")
    if header != LEXICON_HEADER:
        raise ValueError(f"emotion lexicon: bad header {header!r}")
    terms: dict[str, tuple[str, float]] = {}
    for row in reader:
        if not row:
            continue
        if len(row) != 3:
            raise ValueError(f"emotion lexicon line {reader.line_num}: expected 3 fields")
        term, emotion, weight_s = row
        if emotion not in EMOTION_ORDER:
            raise ValueError(f"emotion lexicon line {reader.line_num}: unknown emotion {emotion!r}")
        key = " ".join(tokenize(term))
        if not key:
            raise ValueError(f"emotion lexicon line {reader.line_num}: empty term")
        weight = float(weight_s)
        if weight <= 0:
            raise ValueError(f"emotion lexicon line {reader.line_num}: weight must be positive")
        terms[key] = (emotion, weight)
    return EmotionLexicon(terms)


def classify_emotion(text: str, lexicon: EmotionLexicon) -> EmotionLabel:
    """Dominant primary emotion with its share of the total emotional weight.

    Every occurrence of a term adds its weight. Ties go to the fixed order
    of the eight primaries; no matches at all means neutral.
    """
    tokens = tokenize(text)
    if not tokens:
        return NEUTRAL
    counts = _ngram_counts(tokens, lexicon.max_term_tokens)
    sums = {e: 0.0 for e in EMOTION_ORDER}
    total = 0.0
    for gram, n in counts.items():
        hit = lexicon.terms.get(gram)
        if hit is None:
            continue
        emotion, weight = hit
        sums[emotion] += weight * n
        total += weight * n
    if total == 0.0:
        return NEUTRAL
    primary = max(EMOTION_ORDER, key=lambda e: (sums[e], -EMOTION_ORDER.index(e)))
    return EmotionLabel(primary, sums[primary] / total)


# ---------------------------------------------------------------------------
# Incident templates

WILDCARD = None  # pattern element standing for any (possibly empty) token gap


class TemplateCategory(Enum):
    VIOLENCE = "violence"
    LAW_INFRINGEMENT = "law_infringement"
    INJURY = "injury"
    JOYFUL = "joyful"
    CURIOSITY = "curiosity"
    OTHER = "other"


@dataclass(frozen=True)
class Template:
    id: str
    category: TemplateCategory
    pattern: tuple[Optional[str], ...]  # literal tokens and WILDCARD entries

    def __post_init__(self):
        if not any(tok is not WILDCARD for tok in self.pattern):
            raise InvalidTemplateError(f"template {self.id!r} has no literal token")


def compile_template(
    spec: str,
    *,
    id: str = "adhoc",
    category: TemplateCategory = TemplateCategory.OTHER,
) -> Template:
    """Parse a whitespace-separated pattern where `?` is a wildcard gap.

    Literal tokens are normalized; a literal that normalizes to several
    tokens ("can't stop") contributes each of them in order.
    """
    parts = spec.split()
    pattern: list[Optional[str]] = []
    for part in parts:
        if part == "?":
            pattern.append(WILDCARD)
        else:
            toks = tokenize(part)
            if not toks:
                raise InvalidTemplateError(f"token {part!r} normalizes to nothing")
            pattern.extend(toks)
    if not pattern or all(tok is WILDCARD for tok in pattern):
        raise InvalidTemplateError(f"template spec {spec!r} has no literal token")
    return Template(id=id, category=category, pattern=tuple(pattern))


def match_template(t: Template, text: str) -> bool:
    """True iff the full token sequence of `text` fits the pattern.

    Wildcards absorb any number of tokens, including zero; literal order
    must be preserved.
    """
    tokens = tokenize(text)
    pattern = t.pattern
    # dp[j]: pattern consumed so far can produce tokens[:j]
    dp = [True] + [False] * len(tokens)
    for elem in pattern:
        if elem is WILDCARD:
            # wildcard extends any reachable prefix to all longer ones
            reachable = False
            for j in range(len(dp)):
                reachable = reachable or dp[j]
                dp[j] = reachable
        else:
            new = [False] * len(dp)
            for j in range(1, len(dp)):
                new[j] = dp[j - 1] and tokens[j - 1] == elem
            dp = new
    return dp[-1]


def load_templates(source: Union[str, io.TextIOBase, list]) -> list[Template]:
    """Template dictionary from JSON: list of {id, category, pattern}."""
    data = _load_json(source)
    if not isinstance(data, list):
        raise ValueError("template JSON must be a list")
    templates = []
    seen: set[str] = set()
    for item in data:
        if item["id"] in seen:
            raise ValueError(f"duplicate template id {item['id']!r}")
        seen.add(item["id"])
        templates.append(
            compile_template(
                item["pattern"],
                id=item["id"],
                category=TemplateCategory(item["category"]),
            )
        )
    return templates


DANGER_CATEGORIES = frozenset(
    {TemplateCategory.VIOLENCE, TemplateCategory.LAW_INFRINGEMENT, TemplateCategory.INJURY}
)
POSITIVE_CATEGORIES = frozenset({TemplateCategory.JOYFUL, TemplateCategory.CURIOSITY})


# ---------------------------------------------------------------------------
# Relevance


@dataclass(frozen=True)
class EventSpec:
    """The event being monitored: where it moves, when, and what it is about."""

    name: str
    path: tuple[GeoPoint, ...]
    buffer_m: float
    window: TimeWindow
    place_ids: frozenset[str] = frozenset()
    terms: tuple[tuple[str, float], ...] = ()
    content_norm: float = 1.0

    def __post_init__(self):
        if not self.path:
            raise ValueError("event path must be non-empty")
        if self.buffer_m <= 0:
            raise ValueError("buffer_m must be positive")
        if self.content_norm <= 0:
            raise ValueError("content_norm must be positive")


def load_event_spec(source: Union[str, io.TextIOBase, dict]) -> EventSpec:
    """EventSpec from JSON with path as [[lat, lon], ...] and window {start, duration}."""
    data = _load_json(source)
    return EventSpec(
        name=data["name"],
        path=tuple(GeoPoint(lat, lon) for lat, lon in data["path"]),
        buffer_m=float(data["buffer_m"]),
        window=TimeWindow(float(data["window"]["start"]), float(data["window"]["duration"])),
        place_ids=frozenset(data.get("place_ids", [])),
        terms=tuple((t["term"], float(t["weight"])) for t in data.get("terms", [])),
        content_norm=float(data.get("content_norm", 1.0)),
    )


def assess_relevance(
    msg: Message,
    resolved_geo: Optional[ResolvedGeo],
    toponym_scores: Sequence[tuple[str, float]],
    ev: EventSpec,
    threshold: float = DEFAULT_RELEVANCE_THRESHOLD,
) -> RelevanceVerdict:
    """Score the three independent ways a message can belong to the event.

    Geographic origin and explicit place naming are gated on the event
    window; content discussion is not (people talk about an event before
    and after it).
    """
    geo = 0.0
    if (
        resolved_geo is not None
        and ev.window.contains(msg.ts)
        and distance_to_polyline_m(resolved_geo.point, list(ev.path)) <= ev.buffer_m
    ):
        geo = 1.0
    toponym = 0.0
    if ev.window.contains(msg.ts):
        for entry_id, score in toponym_scores:
            if entry_id in ev.place_ids:
                toponym = max(toponym, score)
    tokens = tokenize(msg.text)
    max_n = max((t.count(" ") + 1 for t, _ in ev.terms), default=1)
    present = _ngram_presence(tokens, max_n) if tokens else set()
    term_sum = sum(w for t, w in ev.terms if " ".join(tokenize(t)) in present)
    content = min(1.0, term_sum / ev.content_norm)
    combined = max(geo, toponym, content)
    return RelevanceVerdict(
        geo=geo,
        toponym=toponym,
        content=content,
        combined=combined,
        accepted=combined >= threshold,
    )


# ---------------------------------------------------------------------------
# Orchestration


class Enricher:
    """Runs the full per-message annotation pass. Immutable and thread-safe."""

    def __init__(
        self,
        gazetteer: GazetteerIndex,
        taxonomy: Taxonomy,
        lexicon: EmotionLexicon,
        templates: Sequence[Template],
        event: Optional[EventSpec] = None,
        threshold: float = DEFAULT_RELEVANCE_THRESHOLD,
        match_config: MatchConfig = DEFAULT_MATCH_CONFIG,
    ):
        self.gazetteer = gazetteer
        self.taxonomy = taxonomy
        self.lexicon = lexicon
        self.templates = tuple(templates)
        self.event = event
        self.threshold = threshold
        self.match_config = match_config

    def enrich(self, msg: Message) -> EnrichedMessage:
        matches = retained_matches(msg.text, self.gazetteer, self.match_config)
        if msg.declared_geo is not None:
            resolved = ResolvedGeo(msg.declared_geo, GeoProvenance.DECLARED)
        else:
            best = best_match(matches)
            resolved = (
                ResolvedGeo(self.gazetteer.entries[best.entry_id].location, GeoProvenance.GEOPARSED)
                if best
                else None
            )
        toponym_scores = tuple((m.entry_id, m.score) for m in matches)
        topics = classify_topics(msg.text, self.taxonomy)
        emotion = classify_emotion(msg.text, self.lexicon)
        hits = tuple(
            (t.category.value, t.id) for t in self.templates if match_template(t, msg.text)
        )
        if self.event is not None:
            relevance = assess_relevance(msg, resolved, toponym_scores, self.event, self.threshold)
        else:
            # No event to be relevant to: modality scores are honestly zero
            # and the effective acceptance threshold drops to zero, so every
            # message stays in scope for the analytics.
            relevance = RelevanceVerdict(0.0, 0.0, 0.0, 0.0, True)
        return EnrichedMessage(
            base=msg,
            resolved_geo=resolved,
            topics=topics,
            emotion=emotion,
            relevance=relevance,
            template_hits=hits,
            toponym_scores=toponym_scores,
        )
