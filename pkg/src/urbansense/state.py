"""Streaming analytics state: one writer applies enriched messages in
timestamp order; every change is journaled as an UpdateEvent with a strictly
increasing seq, so feeds and reconnecting stream consumers can replay from
any point. Readers only ever see immutable journal entries and exported
snapshots.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from . import analytics
from .analytics import Matrix, TrendAlert, window_start
from .errors import OutOfBoundsError
from .model import CellIndex, EnrichedMessage, GeoPoint, GridSpec, TimeWindow, cell_of

UPDATE_KINDS = ("message", "alert", "surface", "emerging")


@dataclass(frozen=True)
class UpdateEvent:
    seq: int
    kind: str
    payload: dict

    def __post_init__(self):
        if self.kind not in UPDATE_KINDS:
            raise ValueError(f"unknown update kind {self.kind!r}")
        if self.seq < 1:
            raise ValueError("seq starts at 1")


@dataclass(frozen=True)
class StateConfig:
    grid: GridSpec
    window_s: float = analytics.DEFAULT_WINDOW_S
    baseline_windows: int = analytics.DEFAULT_BASELINE_WINDOWS
    trigger_ratio: float = analytics.DEFAULT_TRIGGER_RATIO
    burst_min_count: int = analytics.DEFAULT_BURST_MIN_COUNT
    z_ratio: float = analytics.DEFAULT_Z_RATIO
    gathering_min_count: int = analytics.DEFAULT_GATHERING_MIN_COUNT
    growth_ratio: float = analytics.DEFAULT_GROWTH_RATIO
    emerging_min_count: int = analytics.DEFAULT_EMERGING_MIN_COUNT
    community_k: int = 8
    include_mentions: bool = True
    count_all: bool = False  # surfaces count every geolocated message, not just accepted


def message_payload(em: EnrichedMessage) -> dict:
    """Wire form of an enriched message, carried by journal/stream/feeds."""
    base = em.base
    payload: dict = {
        "id": base.id,
        "source": base.source.value,
        "author": base.author_id,
        "ts": base.ts,
        "text": base.text,
        "reply_to": base.reply_to,
        "mentions": list(base.mentions),
        "topics": sorted(em.topics),
        "categories": sorted({c for c, _ in em.template_hits}),
        "template_ids": sorted(t for _, t in em.template_hits),
        "emotion": {"primary": em.emotion.primary, "intensity": em.emotion.intensity},
        "relevance": {
            "geo": em.relevance.geo,
            "toponym": em.relevance.toponym,
            "content": em.relevance.content,
            "combined": em.relevance.combined,
            "accepted": em.relevance.accepted,
        },
    }
    if em.resolved_geo is not None:
        payload["lat"] = em.resolved_geo.point.lat
        payload["lon"] = em.resolved_geo.point.lon
        payload["provenance"] = em.resolved_geo.provenance.value
    else:
        payload["lat"] = None
        payload["lon"] = None
        payload["provenance"] = None
    return payload


def alert_payload(alert: TrendAlert) -> dict:
    return {
        "kind": alert.kind.value,
        "ix": alert.cell.ix,
        "iy": alert.cell.iy,
        "window_start": alert.window.start,
        "window_s": alert.window.duration,
        "observed": alert.observed,
        "baseline": alert.baseline,
        "ratio": alert.ratio,
    }


def grid_payload(grid: GridSpec) -> dict:
    return {
        "bbox": [grid.bbox.min.lat, grid.bbox.min.lon, grid.bbox.max.lat, grid.bbox.max.lon],
        "nx": grid.nx,
        "ny": grid.ny,
    }


class AnalyticsState:
    """Accumulates windowed analytics; not thread-safe by itself.

    Callers must funnel all apply()/flush() calls through one writer. A
    window closes when a message from a later window arrives (input is in
    timestamp order), or on flush(); closing emits that window's alerts,
    its surface, and the refreshed emerging-topics list.
    """

    def __init__(self, config: StateConfig):
        self.config = config
        self.journal: list[UpdateEvent] = []
        self.messages: list[EnrichedMessage] = []
        self._counts: dict[float, dict[tuple[int, int], int]] = {}
        self._topic_counts: dict[float, dict[str, int]] = {}
        self._open_window: Optional[float] = None
        self._first_window: Optional[float] = None
        self._closed_through: Optional[float] = None
        self._alert_events: list[UpdateEvent] = []
        self._latest_emerging: list[dict] = []
        self._danger_cells: set[CellIndex] = set()
        self._tracked: set[str] = set()
        self._tracked_last: dict[str, tuple[GeoPoint, float]] = {}

    # -- writer side --------------------------------------------------------

    @property
    def seq(self) -> int:
        return len(self.journal)

    def _emit(self, kind: str, payload: dict) -> UpdateEvent:
        ev = UpdateEvent(seq=len(self.journal) + 1, kind=kind, payload=payload)
        self.journal.append(ev)
        return ev

    def apply(self, em: EnrichedMessage):
        ws = window_start(em.base.ts, self.config.window_s)
        if self._closed_through is not None and ws <= self._closed_through:
            raise ValueError(
                f"message {em.base.id} belongs to already-closed window {ws}"
            )
        if self._open_window is None:
            self._open_window = ws
            self._first_window = ws if self._first_window is None else self._first_window
        elif ws > self._open_window:
            self._close(self._open_window)
            self._open_window = ws
        elif ws < self._open_window:
            raise ValueError(
                f"message {em.base.id} out of order: window {ws} precedes open window"
            )
        self.messages.append(em)
        self._emit("message", message_payload(em))
        counted = em.relevance.accepted or self.config.count_all
        if counted and em.geo is not None:
            try:
                cell = cell_of(em.geo, self.config.grid)
            except OutOfBoundsError:
                cell = None
            if cell is not None:
                per_cell = self._counts.setdefault(ws, {})
                per_cell[(cell.ix, cell.iy)] = per_cell.get((cell.ix, cell.iy), 0) + 1
        topic_counts = self._topic_counts.setdefault(ws, {})
        for t in em.topics:
            topic_counts[t] = topic_counts.get(t, 0) + 1
        if em.base.author_id in self._tracked and em.geo is not None:
            prev = self._tracked_last.get(em.base.author_id)
            if prev is None or em.base.ts >= prev[1]:
                self._tracked_last[em.base.author_id] = (em.geo, em.base.ts)

    def flush(self):
        """Close the open window; call when the input stream ends."""
        if self._open_window is not None:
            self._close(self._open_window)
            self._open_window = None

    def _matrix(self, ws: float) -> Matrix:
        grid = self.config.grid
        rows = [[0] * grid.nx for _ in range(grid.ny)]
        for (ix, iy), n in self._counts.get(ws, {}).items():
            rows[iy][ix] = n
        return tuple(tuple(r) for r in rows)

    def _close(self, ws: float):
        cfg = self.config
        window = TimeWindow(ws, cfg.window_s)
        alerts: list[TrendAlert] = []
        # Burst check per occupied cell, over a contiguous series from the
        # stream's first window (zero-filled) so the trailing mean matches
        # the batch computation exactly.
        first = self._first_window if self._first_window is not None else ws
        series_start = max(first, ws - cfg.baseline_windows * cfg.window_s)
        starts = []
        s = series_start
        while s <= ws:
            starts.append(s)
            s += cfg.window_s
        occupied = sorted(self._counts.get(ws, {}).keys(), key=lambda c: (c[1], c[0]))
        for ix, iy in occupied:
            counts = tuple(
                (TimeWindow(st, cfg.window_s), self._counts.get(st, {}).get((ix, iy), 0))
                for st in starts
            )
            series = analytics.CellSeries(cell=CellIndex(ix, iy), counts=counts)
            for alert in analytics.detect_bursts(
                series, cfg.baseline_windows, cfg.trigger_ratio, cfg.burst_min_count
            ):
                if alert.window.start == ws:
                    alerts.append(alert)
        alerts.extend(
            analytics.detect_gatherings(
                self._matrix(ws), cfg.grid, window, cfg.z_ratio, cfg.gathering_min_count
            )
        )
        for alert in alerts:
            self._danger_cells.add(alert.cell)
            self._alert_events.append(self._emit("alert", alert_payload(alert)))
        self._emit(
            "surface",
            {
                "window_start": ws,
                "window_s": cfg.window_s,
                "grid": grid_payload(cfg.grid),
                "heights": [list(row) for row in self._matrix(ws)],
            },
        )
        known = sorted(self._topic_counts.keys())
        if len(known) >= 2 and known[-1] == ws:
            pair = [self._topic_counts[known[-2]], self._topic_counts[known[-1]]]
            ranked = analytics.emerging_topics(pair, cfg.growth_ratio, cfg.emerging_min_count)
            self._latest_emerging = [
                {"topic": t, "ratio": r, "count": pair[1][t]} for t, r in ranked
            ]
        else:
            self._latest_emerging = []
        self._emit("emerging", {"window_start": ws, "topics": self._latest_emerging})
        self._closed_through = ws

    # -- reader side ---------------------------------------------------------

    def events_since(self, since_seq: int, kind: Optional[str] = None) -> list[UpdateEvent]:
        evs = self.journal[max(0, since_seq):]
        if kind is None:
            return list(evs)
        return [e for e in evs if e.kind == kind]

    def alerts_since(self, since_seq: int) -> list[UpdateEvent]:
        return [e for e in self._alert_events if e.seq > since_seq]

    def latest_emerging(self) -> list[dict]:
        return list(self._latest_emerging)

    def surface_payload(self, ws: Optional[float] = None) -> dict:
        """Surface JSON for a window; zeros for windows with no messages."""
        cfg = self.config
        if ws is None:
            if self._counts:
                ws = max(self._counts.keys())
            elif self._open_window is not None:
                ws = self._open_window
            elif self._closed_through is not None:
                ws = self._closed_through
        heights = (
            [list(row) for row in self._matrix(ws)]
            if ws is not None
            else [[0] * cfg.grid.nx for _ in range(cfg.grid.ny)]
        )
        return {
            "window_start": ws,
            "window_s": cfg.window_s,
            "grid": grid_payload(cfg.grid),
            "heights": heights,
        }

    def known_windows(self) -> list[float]:
        out = set(self._counts.keys()) | set(self._topic_counts.keys())
        return sorted(out)

    def communities_payload(self) -> list[dict]:
        edges = analytics.build_interaction_graph(
            self.messages, include_mentions=self.config.include_mentions
        )
        authors = sorted({m.base.author_id for m in self.messages})
        k = min(self.config.community_k, len(authors))
        if k < 2:
            return []
        community = analytics.extract_community(
            {k2: float(v) for k2, v in edges.items()}, k, authors=authors
        )
        return [
            {
                "members": sorted(community.members),
                "internal_weight": community.internal_weight,
            }
        ]

    def guidance_payload(
        self, center: GeoPoint, radius_m: float, n_sectors: int
    ) -> dict:
        display = analytics.compute_sectors(
            center,
            radius_m,
            self.messages,
            n_sectors=n_sectors,
            danger_cells=self._danger_cells,
            grid=self.config.grid,
        )
        return {
            "center": {"lat": display.center.lat, "lon": display.center.lon},
            "radius_m": display.radius_m,
            "sectors": [
                {
                    "color": s.color.value,
                    "danger_count": s.danger_count,
                    "positive_count": s.positive_count,
                }
                for s in display.sectors
            ],
        }

    def set_tracked(self, authors: set[str]):
        """Replace the tracked set; positions recomputed from full history."""
        self._tracked = set(authors)
        self._tracked_last = analytics.track_users(self.messages, self._tracked)

    def tracked_payload(self) -> dict:
        return {
            "tracked": sorted(self._tracked),
            "positions": {
                author: {"lat": p.lat, "lon": p.lon, "ts": ts}
                for author, (p, ts) in sorted(self._tracked_last.items())
            },
        }

    def export_snapshot(self, ws: Optional[float] = None) -> dict:
        """Full-state export; canonical JSON of this dict is the determinism
        and recovery yardstick."""
        surface = self.surface_payload(ws)
        window = (
            None
            if surface["window_start"] is None
            else {"start": surface["window_start"], "duration": surface["window_s"]}
        )
        return {
            "window": window,
            "surface": {"grid": surface["grid"], "heights": surface["heights"]},
            "alerts": [dict(e.payload, seq=e.seq) for e in self._alert_events],
            "emerging": self.latest_emerging(),
            "communities": self.communities_payload(),
        }


def snapshot_json(snapshot: dict) -> str:
    """Canonical byte form used for identity comparisons."""
    return json.dumps(snapshot, ensure_ascii=False, sort_keys=True, separators=(",", ":"))
