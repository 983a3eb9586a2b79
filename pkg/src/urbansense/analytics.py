"""Windowed spatial and social analytics over enriched messages.

Every function here is a pure function of its inputs and configuration;
repeated evaluation is bit-identical. Stateful accumulation lives in
state.AnalyticsState, which calls into these.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence

from .enrichment import DANGER_CATEGORIES, POSITIVE_CATEGORIES, TemplateCategory
from .errors import InvalidCommunitySizeError, MessageNotFoundError, OutOfBoundsError, UndefinedBearingError
from .model import (
    CellIndex,
    EnrichedMessage,
    GeoPoint,
    GridSpec,
    TimeWindow,
    bearing,
    cell_of,
    haversine_m,
)

DEFAULT_WINDOW_S = 300.0
DEFAULT_BASELINE_WINDOWS = 3
DEFAULT_TRIGGER_RATIO = 3.0
DEFAULT_BURST_MIN_COUNT = 10
DEFAULT_Z_RATIO = 4.0
DEFAULT_GATHERING_MIN_COUNT = 20
DEFAULT_GROWTH_RATIO = 3.0
DEFAULT_EMERGING_MIN_COUNT = 10
DEFAULT_SECTORS = 8
DEFAULT_GUIDANCE_RADIUS_M = 500.0


def window_start(ts: float, window_s: float = DEFAULT_WINDOW_S) -> float:
    """Start of the absolutely aligned window containing ts."""
    return math.floor(ts / window_s) * window_s


# ---------------------------------------------------------------------------
# Types


@dataclass(frozen=True)
class CellSeries:
    cell: CellIndex
    counts: tuple[tuple[TimeWindow, int], ...]

    def __post_init__(self):
        prev_end: Optional[float] = None
        for w, n in self.counts:
            if n < 0:
                raise ValueError("counts must be non-negative")
            if prev_end is not None and w.start != prev_end:
                raise ValueError("windows must be contiguous and increasing")
            prev_end = w.end


@dataclass(frozen=True)
class HeatSurface:
    grid: GridSpec
    window: TimeWindow
    heights: tuple[tuple[int, ...], ...]  # heights[iy][ix]

    def __post_init__(self):
        if len(self.heights) != self.grid.ny or any(len(r) != self.grid.nx for r in self.heights):
            raise ValueError("heights shape must match grid")
        if any(h < 0 for row in self.heights for h in row):
            raise ValueError("heights must be non-negative")

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.heights)


class AlertKind(Enum):
    BURST = "burst"
    GATHERING = "gathering"


@dataclass(frozen=True)
class TrendAlert:
    kind: AlertKind
    cell: CellIndex
    window: TimeWindow
    observed: int
    baseline: float
    ratio: float

    def __post_init__(self):
        expected = self.observed / max(self.baseline, 1.0)
        if abs(self.ratio - expected) > 1e-9:
            raise ValueError("ratio must equal observed / max(baseline, 1)")


class EdgeKind(Enum):
    SHARED_TOPIC = "shared_topic"
    INTERACTION = "interaction"


@dataclass(frozen=True)
class SimilarityGraph:
    nodes: frozenset[str]
    edges: frozenset[tuple[str, str, EdgeKind]]  # endpoints id-ordered

    def __post_init__(self):
        for a, b, _ in self.edges:
            if a >= b:
                raise ValueError(f"edge ({a}, {b}) endpoints must be id-ordered and distinct")
            if a not in self.nodes or b not in self.nodes:
                raise ValueError("edge endpoint not in nodes")


@dataclass(frozen=True)
class Community:
    members: frozenset[str]
    internal_weight: float


class SectorColor(Enum):
    RED = "red"
    GREEN = "green"
    NEUTRAL = "neutral"


@dataclass(frozen=True)
class Sector:
    color: SectorColor
    danger_count: int
    positive_count: int


@dataclass(frozen=True)
class SectorDisplay:
    center: GeoPoint
    radius_m: float
    sectors: tuple[Sector, ...]

    def __post_init__(self):
        if len(self.sectors) < 4:
            raise ValueError("at least 4 sectors required")


# ---------------------------------------------------------------------------
# Binning and surfaces

Matrix = tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class BinResult:
    window_s: float
    counts: dict[float, Matrix]  # window start -> heights[iy][ix]
    skipped: int


def _zero_matrix(grid: GridSpec) -> list[list[int]]:
    return [[0] * grid.nx for _ in range(grid.ny)]


def _freeze(m: list[list[int]]) -> Matrix:
    return tuple(tuple(row) for row in m)


def bin_messages(
    msgs: Iterable[EnrichedMessage],
    grid: GridSpec,
    window_s: float = DEFAULT_WINDOW_S,
    windows: Optional[Sequence[TimeWindow]] = None,
) -> BinResult:
    """Count accepted, geolocated, in-bbox messages per (window, cell).

    With explicit `windows`, only those are populated and out-of-window
    messages are skipped; otherwise windows are derived from the data on
    absolute alignment (floor(ts / window_s)).
    """
    work: dict[float, list[list[int]]] = {}
    if windows is not None:
        for w in windows:
            if w.duration != window_s:
                raise ValueError("explicit windows must have the configured duration")
            work[w.start] = _zero_matrix(grid)
    skipped = 0
    for em in msgs:
        p = em.geo
        if not em.relevance.accepted or p is None:
            skipped += 1
            continue
        try:
            cell = cell_of(p, grid)
        except OutOfBoundsError:
            skipped += 1
            continue
        start = window_start(em.base.ts, window_s)
        if windows is not None and start not in work:
            skipped += 1
            continue
        work.setdefault(start, _zero_matrix(grid))[cell.iy][cell.ix] += 1
    return BinResult(
        window_s=window_s,
        counts={s: _freeze(m) for s, m in sorted(work.items())},
        skipped=skipped,
    )


def build_surface(counts: Matrix, grid: GridSpec, window: TimeWindow) -> HeatSurface:
    """Wrap one window's counts as control-point heights, verbatim.

    Any smoothing or interpolation is a rendering concern and must not leak
    into these numbers: the sum of heights is the message count.
    """
    return HeatSurface(grid=grid, window=window, heights=counts)


# ---------------------------------------------------------------------------
# Alerts


def detect_bursts(
    series: CellSeries,
    baseline_windows: int = DEFAULT_BASELINE_WINDOWS,
    trigger_ratio: float = DEFAULT_TRIGGER_RATIO,
    min_count: int = DEFAULT_BURST_MIN_COUNT,
) -> list[TrendAlert]:
    """Temporal outliers: a window whose count jumps off its trailing mean.

    The trailing mean is taken over up to `baseline_windows` previous windows
    (fewer when history is short) and clamped to at least 1 so early windows
    and dead cells cannot produce infinite ratios.
    """
    if baseline_windows < 1:
        raise ValueError("baseline_windows must be >= 1")
    if trigger_ratio <= 1:
        raise ValueError("trigger_ratio must be > 1")
    alerts: list[TrendAlert] = []
    counts = [n for _, n in series.counts]
    for i, (window, n) in enumerate(series.counts):
        history = counts[max(0, i - baseline_windows) : i]
        baseline = sum(history) / len(history) if history else 0.0
        basis = max(baseline, 1.0)
        if n >= min_count and n >= trigger_ratio * basis:
            alerts.append(
                TrendAlert(
                    kind=AlertKind.BURST,
                    cell=series.cell,
                    window=window,
                    observed=n,
                    baseline=baseline,
                    ratio=n / basis,
                )
            )
    return alerts


def detect_gatherings(
    counts: Matrix,
    grid: GridSpec,
    window: TimeWindow,
    z_ratio: float = DEFAULT_Z_RATIO,
    min_count: int = DEFAULT_GATHERING_MIN_COUNT,
) -> list[TrendAlert]:
    """Spatial outliers within one window: cells far above the occupied mean.

    The baseline is the mean over nonzero cells, except when only a single
    cell is nonzero: comparing a cell against itself is meaningless, so the
    global mean (zeros included) is used instead. Both baselines are clamped
    to at least 1 in the trigger comparison, same as burst detection.
    """
    flat = [(CellIndex(ix, iy), counts[iy][ix]) for iy in range(grid.ny) for ix in range(grid.nx)]
    nonzero = [n for _, n in flat if n > 0]
    if not nonzero:
        return []
    if len(nonzero) == 1:
        baseline = sum(n for _, n in flat) / len(flat)
    else:
        baseline = sum(nonzero) / len(nonzero)
    basis = max(baseline, 1.0)
    alerts: list[TrendAlert] = []
    for cell, n in flat:
        if n >= min_count and n >= z_ratio * basis:
            alerts.append(
                TrendAlert(
                    kind=AlertKind.GATHERING,
                    cell=cell,
                    window=window,
                    observed=n,
                    baseline=baseline,
                    ratio=n / basis,
                )
            )
    return alerts


# ---------------------------------------------------------------------------
# Graphs and communities


def build_similarity_graph(
    msgs: Sequence[EnrichedMessage], include_mentions: bool = True
) -> SimilarityGraph:
    """Connect messages that share a topic or directly interact.

    Interaction means a reply in either direction or, unless disabled, one
    message mentioning the other's author. Shared-topic and interaction
    edges between the same pair coexist as two edges.
    """
    nodes = frozenset(m.base.id for m in msgs)
    edges: set[tuple[str, str, EdgeKind]] = set()
    for i, a in enumerate(msgs):
        for b in msgs[i + 1 :]:
            if a.base.id == b.base.id:
                continue
            lo, hi = sorted((a.base.id, b.base.id))
            if a.topics & b.topics:
                edges.add((lo, hi, EdgeKind.SHARED_TOPIC))
            interact = a.base.reply_to == b.base.id or b.base.reply_to == a.base.id
            if include_mentions and not interact:
                interact = (
                    b.base.author_id in a.base.mentions or a.base.author_id in b.base.mentions
                )
            if interact:
                edges.add((lo, hi, EdgeKind.INTERACTION))
    return SimilarityGraph(nodes=nodes, edges=frozenset(edges))


def conversation_length(msg_id: str, msgs: Sequence[EnrichedMessage]) -> int:
    """Size of the reply tree rooted at msg_id, the root included."""
    by_id = {m.base.id: m for m in msgs}
    if msg_id not in by_id:
        raise MessageNotFoundError(f"unknown message id {msg_id!r}")
    children: dict[str, list[str]] = {}
    for m in msgs:
        if m.base.reply_to is not None:
            children.setdefault(m.base.reply_to, []).append(m.base.id)
    seen: set[str] = set()
    stack = [msg_id]
    count = 0
    while stack:
        cur = stack.pop()
        if cur in seen:
            raise ValueError(f"reply cycle detected at {cur!r}")
        seen.add(cur)
        count += 1
        stack.extend(children.get(cur, ()))
    return count


def build_interaction_graph(
    msgs: Sequence[EnrichedMessage], include_mentions: bool = True
) -> dict[tuple[str, str], int]:
    """Author-to-author interaction counts (replies and optionally mentions)."""
    by_id = {m.base.id: m for m in msgs}
    weights: dict[tuple[str, str], int] = {}

    def bump(a: str, b: str):
        if a == b:
            return
        key = (a, b) if a < b else (b, a)
        weights[key] = weights.get(key, 0) + 1

    for m in msgs:
        if m.base.reply_to is not None and m.base.reply_to in by_id:
            bump(m.base.author_id, by_id[m.base.reply_to].base.author_id)
        if include_mentions:
            for mentioned in m.base.mentions:
                bump(m.base.author_id, mentioned)
    return weights


def extract_community(
    edges: dict[tuple[str, str], float],
    k: int,
    authors: Optional[Iterable[str]] = None,
) -> Community:
    """Greedy densest-k author group.

    Seeds with the heaviest edge (ties: lexicographically smallest pair),
    then repeatedly adds the author contributing the most internal weight,
    ties to the lexicographically smallest id. With no edges at all the
    group is just the k lexicographically first authors at weight zero.
    """
    if k < 2:
        raise InvalidCommunitySizeError(f"community size must be >= 2, got {k}")
    all_authors: set[str] = set(authors) if authors is not None else set()
    norm_edges: dict[tuple[str, str], float] = {}
    for (a, b), w in edges.items():
        if a == b:
            raise ValueError(f"self-interaction for author {a!r}")
        key = (a, b) if a < b else (b, a)
        norm_edges[key] = norm_edges.get(key, 0.0) + w
        all_authors.update(key)
    if k > len(all_authors):
        raise InvalidCommunitySizeError(
            f"community size {k} exceeds author count {len(all_authors)}"
        )
    ordered = sorted(all_authors)
    if norm_edges:
        seed = min(norm_edges.items(), key=lambda kv: (-kv[1], kv[0]))[0]
        members = {seed[0], seed[1]}
    else:
        members = set(ordered[:2])
    while len(members) < k:
        best_author = None
        best_gain = -1.0
        for a in ordered:
            if a in members:
                continue
            gain = sum(
                w
                for (x, y), w in norm_edges.items()
                if (x == a and y in members) or (y == a and x in members)
            )
            if gain > best_gain:
                best_author, best_gain = a, gain
        assert best_author is not None
        members.add(best_author)
    weight = sum(w for (a, b), w in norm_edges.items() if a in members and b in members)
    return Community(members=frozenset(members), internal_weight=weight)


# ---------------------------------------------------------------------------
# Emerging topics


def emerging_topics(
    windowed_counts: Sequence[dict[str, int]],
    growth_ratio: float = DEFAULT_GROWTH_RATIO,
    min_count: int = DEFAULT_EMERGING_MIN_COUNT,
) -> list[tuple[str, float]]:
    """Topics whose frequency jumped between the last two windows.

    Ratio is current/previous with previous clamped to 1 so brand-new topics
    rank by their raw count. Ranked by ratio, then count, then id.
    """
    if len(windowed_counts) < 2:
        raise ValueError("need at least 2 windows")
    prev, cur = windowed_counts[-2], windowed_counts[-1]
    out = []
    for topic, n in cur.items():
        ratio = n / max(prev.get(topic, 0), 1)
        if n >= min_count and ratio >= growth_ratio:
            out.append((topic, ratio))
    out.sort(key=lambda tr: (-tr[1], -cur[tr[0]], tr[0]))
    return out


# ---------------------------------------------------------------------------
# Guidance sectors and tracked users


def compute_sectors(
    center: GeoPoint,
    radius_m: float,
    msgs: Iterable[EnrichedMessage],
    n_sectors: int = DEFAULT_SECTORS,
    danger_cells: Optional[set[CellIndex]] = None,
    grid: Optional[GridSpec] = None,
) -> SectorDisplay:
    """Color the compass around a position from nearby message content.

    Sector i covers bearings [i*360/N, (i+1)*360/N). A message is dangerous
    if it carries a violence/law-infringement/injury template hit or sits in
    an alert-bearing cell; red wins over green in every sector. Messages at
    exactly the center have no bearing and are skipped.
    """
    if n_sectors < 4:
        raise ValueError(f"need at least 4 sectors, got {n_sectors}")
    if radius_m <= 0:
        raise ValueError("radius_m must be positive")
    danger_cells = danger_cells or set()
    width = 360.0 / n_sectors
    danger = [0] * n_sectors
    positive = [0] * n_sectors
    for em in msgs:
        p = em.geo
        if p is None or haversine_m(center, p) > radius_m:
            continue
        try:
            b = bearing(center, p)
        except UndefinedBearingError:
            continue
        idx = min(int(b / width), n_sectors - 1)
        cats = {TemplateCategory(c) for c, _ in em.template_hits}
        is_danger = bool(cats & DANGER_CATEGORIES)
        if not is_danger and grid is not None and danger_cells:
            try:
                is_danger = cell_of(p, grid) in danger_cells
            except OutOfBoundsError:
                is_danger = False
        if is_danger:
            danger[idx] += 1
        if cats & POSITIVE_CATEGORIES:
            positive[idx] += 1
    sectors = []
    for d, pos in zip(danger, positive):
        if d > 0:
            color = SectorColor.RED
        elif pos > 0:
            color = SectorColor.GREEN
        else:
            color = SectorColor.NEUTRAL
        sectors.append(Sector(color=color, danger_count=d, positive_count=pos))
    return SectorDisplay(center=center, radius_m=radius_m, sectors=tuple(sectors))


def track_users(
    msgs: Iterable[EnrichedMessage], tracked: set[str]
) -> dict[str, tuple[GeoPoint, float]]:
    """Most recent resolved position per tracked author; absent if never located."""
    last: dict[str, tuple[GeoPoint, float]] = {}
    for em in msgs:
        author = em.base.author_id
        if author not in tracked or em.geo is None:
            continue
        prev = last.get(author)
        if prev is None or em.base.ts >= prev[1]:
            last[author] = (em.geo, em.base.ts)
    return last
