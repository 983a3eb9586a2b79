"""Core data model: geographic primitives, time windows and the message types.

Everything here is immutable after construction and safe to share across
threads. Coordinates are WGS84 degrees; timestamps are UTC epoch seconds.
Cell indexing is done in plain lat/lon degrees (city-scale boxes make the
distortion negligible) with a lower-inclusive / upper-exclusive rule and
max-edge clamping so boundary points are never lost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Optional

from .errors import OutOfBoundsError, UndefinedBearingError

EARTH_RADIUS_M = 6_371_000.0


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise ValueError(f"non-finite coordinates: ({self.lat}, {self.lon})")
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude {self.lon} outside [-180, 180]")


@dataclass(frozen=True)
class BoundingBox:
    min: GeoPoint
    max: GeoPoint

    def __post_init__(self):
        if not (self.min.lat < self.max.lat and self.min.lon < self.max.lon):
            raise ValueError("bounding box must have min.lat < max.lat and min.lon < max.lon")

    def contains(self, p: GeoPoint) -> bool:
        return self.min.lat <= p.lat <= self.max.lat and self.min.lon <= p.lon <= self.max.lon


@dataclass(frozen=True)
class GridSpec:
    bbox: BoundingBox
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("grid must have nx >= 1 and ny >= 1")

    @property
    def cell_width(self) -> float:
        return (self.bbox.max.lon - self.bbox.min.lon) / self.nx

    @property
    def cell_height(self) -> float:
        return (self.bbox.max.lat - self.bbox.min.lat) / self.ny


@dataclass(frozen=True)
class CellIndex:
    ix: int
    iy: int


@dataclass(frozen=True)
class TimeWindow:
    start: float
    duration: float

    def __post_init__(self):
        if not math.isfinite(self.start):
            raise ValueError("window start must be finite")
        if self.duration <= 0:
            raise ValueError("window duration must be positive")

    @property
    def end(self) -> float:
        return self.start + self.duration

    def contains(self, ts: float) -> bool:
        return self.start <= ts < self.end


class Source(Enum):
    TWITTER_LIKE = "twitter-like"
    PHOTO_LIKE = "photo-like"
    CHECKIN_LIKE = "checkin-like"
    GRAPH_LIKE = "graph-like"
    DIRECT_INPUT = "direct-input"


class GeoProvenance(Enum):
    DECLARED = "declared"
    GEOPARSED = "geoparsed"


@dataclass(frozen=True)
class Message:
    """One raw social post as ingested, before any enrichment."""

    id: str
    source: Source
    author_id: str
    ts: float
    text: str
    declared_geo: Optional[GeoPoint] = None
    reply_to: Optional[str] = None
    mentions: tuple[str, ...] = ()
    origin_label: Optional[str] = None  # free-form network name, e.g. a concrete site

    def __post_init__(self):
        if not self.id:
            raise ValueError("message id must be non-empty")
        if not math.isfinite(self.ts):
            raise ValueError("message timestamp must be finite")
        if self.reply_to == self.id:
            raise ValueError(f"message {self.id} replies to itself")


@dataclass(frozen=True)
class ResolvedGeo:
    point: GeoPoint
    provenance: GeoProvenance


@dataclass(frozen=True)
class EmotionLabel:
    primary: str  # one of EMOTION_ORDER or "neutral"
    intensity: float

    def __post_init__(self):
        if (self.primary == "neutral") != (self.intensity == 0.0):
            raise ValueError("neutral iff intensity 0")
        if not 0.0 <= self.intensity <= 1.0:
            raise ValueError("intensity outside [0, 1]")


# Fixed tie-break order for emotion classification; "neutral" is the
# no-evidence fallback and never competes.
EMOTION_ORDER = (
    "joy",
    "trust",
    "fear",
    "surprise",
    "sadness",
    "disgust",
    "anger",
    "anticipation",
)

NEUTRAL = EmotionLabel("neutral", 0.0)


@dataclass(frozen=True)
class RelevanceVerdict:
    geo: float
    toponym: float
    content: float
    combined: float
    accepted: bool

    def __post_init__(self):
        expected = max(self.geo, self.toponym, self.content)
        if abs(self.combined - expected) > 1e-12:
            raise ValueError("combined must equal max(geo, toponym, content)")


@dataclass(frozen=True)
class EnrichedMessage:
    """A message plus all per-message annotations the pipeline produces."""

    base: Message
    resolved_geo: Optional[ResolvedGeo]
    topics: frozenset[str]
    emotion: EmotionLabel
    relevance: RelevanceVerdict
    template_hits: tuple[tuple[str, str], ...] = ()  # (category, template id)
    toponym_scores: tuple[tuple[str, float], ...] = field(default=(), repr=False)

    @property
    def geo(self) -> Optional[GeoPoint]:
        return self.resolved_geo.point if self.resolved_geo else None


def cell_of(p: GeoPoint, g: GridSpec) -> CellIndex:
    """Map a point to its grid cell.

    Cells are lower-inclusive / upper-exclusive; points exactly on the max
    edge of the box map to the last cell so the partition covers the closed
    bbox. Raises OutOfBoundsError for points outside the box.
    """
    if not g.bbox.contains(p):
        raise OutOfBoundsError(f"point ({p.lat}, {p.lon}) outside grid bbox")
    ix = int((p.lon - g.bbox.min.lon) / g.cell_width)
    iy = int((p.lat - g.bbox.min.lat) / g.cell_height)
    if ix >= g.nx:
        ix = g.nx - 1
    if iy >= g.ny:
        iy = g.ny - 1
    return CellIndex(ix, iy)


def bearing(a: GeoPoint, b: GeoPoint) -> float:
    """Initial great-circle bearing from a to b, degrees in [0, 360).

    0 is north, 90 is east. Raises UndefinedBearingError for identical points.
    """
    if a == b:
        raise UndefinedBearingError(f"bearing undefined for identical points ({a.lat}, {a.lon})")
    lat1 = math.radians(a.lat)
    lat2 = math.radians(b.lat)
    dlon = math.radians(b.lon - a.lon)
    y = math.sin(dlon) * math.cos(lat2)
    x = math.cos(lat1) * math.sin(lat2) - math.sin(lat1) * math.cos(lat2) * math.cos(dlon)
    deg = math.degrees(math.atan2(y, x)) % 360.0
    # atan2 can land exactly on 360.0 after the modulo when rounding up
    return 0.0 if deg >= 360.0 else deg


def haversine_m(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters, Earth radius fixed at 6,371,000 m."""
    lat1, lon1 = math.radians(a.lat), math.radians(a.lon)
    lat2, lon2 = math.radians(b.lat), math.radians(b.lon)
    dlat = lat2 - lat1
    dlon = lon2 - lon1
    h = math.sin(dlat / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def distance_to_polyline_m(p: GeoPoint, path: list[GeoPoint]) -> float:
    """Minimum distance from a point to a polyline, in meters.

    Segments are treated in a local equirectangular projection around the
    point (longitude scaled by cos(lat)); exact enough at city scale and
    fully deterministic.
    """
    if not path:
        raise ValueError("polyline must be non-empty")
    if len(path) == 1:
        return haversine_m(p, path[0])
    coslat = math.cos(math.radians(p.lat))

    def project(q: GeoPoint) -> tuple[float, float]:
        return (q.lon - p.lon) * coslat, q.lat - p.lat

    best = float("inf")
    px, py = 0.0, 0.0
    for a, b in zip(path, path[1:]):
        ax, ay = project(a)
        bx, by = project(b)
        dx, dy = bx - ax, by - ay
        seg_len2 = dx * dx + dy * dy
        if seg_len2 == 0.0:
            t = 0.0
        else:
            t = max(0.0, min(1.0, ((px - ax) * dx + (py - ay) * dy) / seg_len2))
        cx, cy = ax + t * dx, ay + t * dy
        deg = math.hypot(cx - px, cy - py)
        best = min(best, deg * math.pi / 180.0 * EARTH_RADIUS_M)
    return best


def parse_iso8601(value: str) -> float:
    """ISO-8601 UTC timestamp to epoch seconds (accepts trailing 'Z')."""
    raw = value.strip()
    if raw.endswith("Z"):
        raw = raw[:-1] + "+00:00"
    dt = datetime.fromisoformat(raw)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def format_iso8601(ts: float) -> str:
    """Epoch seconds to ISO-8601 UTC with a 'Z' suffix.

    Sub-second precision is preserved only when present, keeping serialized
    logs byte-stable across roundtrips.
    """
    dt = datetime.fromtimestamp(ts, tz=timezone.utc)
    if ts == int(ts):
        return dt.strftime("%Y-%m-%dT%H:%M:%SZ")
    return dt.isoformat().replace("+00:00", "Z")
