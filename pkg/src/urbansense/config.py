"""Engine configuration: packaged fixture defaults, JSON overrides via an
explicit path or the URBANSENSE_CONFIG environment variable, and builders
that turn a config into the live pipeline objects."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from . import analytics
from .enrichment import (
    DEFAULT_RELEVANCE_THRESHOLD,
    Enricher,
    EventSpec,
    load_emotion_lexicon,
    load_event_spec,
    load_taxonomy,
    load_templates,
)
from .gazetteer import GazetteerIndex, load_gazetteer
from .model import BoundingBox, GeoPoint, GridSpec
from .state import StateConfig

ENV_VAR = "URBANSENSE_CONFIG"
FIXTURES_DIR = Path(__file__).parent / "fixtures"

DEFAULT_BBOX = (41.8, 12.4, 42.0, 12.6)
DEFAULT_STREAM_BUFFER = 256


@dataclass(frozen=True)
class EngineConfig:
    gazetteer_path: str = str(FIXTURES_DIR / "gazetteer_rome.csv")
    taxonomy_path: str = str(FIXTURES_DIR / "taxonomy.json")
    lexicon_path: str = str(FIXTURES_DIR / "emotion_lexicon.csv")
    templates_path: str = str(FIXTURES_DIR / "templates.json")
    products_path: str = str(FIXTURES_DIR / "products.json")
    phrases_path: str = str(FIXTURES_DIR / "phrases.json")
    scenario_path: str = str(FIXTURES_DIR / "scenario_protest.json")
    event: Optional[object] = None  # path or inline JSON dict; None = no event
    relevance_threshold: float = DEFAULT_RELEVANCE_THRESHOLD
    bbox: tuple[float, float, float, float] = DEFAULT_BBOX
    nx: int = 64
    ny: int = 64
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
    count_all: bool = False
    stream_buffer: int = DEFAULT_STREAM_BUFFER
    snapshot_every: int = 1000

    def grid(self) -> GridSpec:
        min_lat, min_lon, max_lat, max_lon = self.bbox
        box = BoundingBox(GeoPoint(min_lat, min_lon), GeoPoint(max_lat, max_lon))
        return GridSpec(bbox=box, nx=self.nx, ny=self.ny)

    def state_config(self) -> StateConfig:
        return StateConfig(
            grid=self.grid(),
            window_s=self.window_s,
            baseline_windows=self.baseline_windows,
            trigger_ratio=self.trigger_ratio,
            burst_min_count=self.burst_min_count,
            z_ratio=self.z_ratio,
            gathering_min_count=self.gathering_min_count,
            growth_ratio=self.growth_ratio,
            emerging_min_count=self.emerging_min_count,
            community_k=self.community_k,
            include_mentions=self.include_mentions,
            count_all=self.count_all,
        )


_FIELD_NAMES = {
    "gazetteer_path",
    "taxonomy_path",
    "lexicon_path",
    "templates_path",
    "products_path",
    "phrases_path",
    "scenario_path",
    "event",
    "relevance_threshold",
    "bbox",
    "nx",
    "ny",
    "window_s",
    "baseline_windows",
    "trigger_ratio",
    "burst_min_count",
    "z_ratio",
    "gathering_min_count",
    "growth_ratio",
    "emerging_min_count",
    "community_k",
    "include_mentions",
    "count_all",
    "stream_buffer",
    "snapshot_every",
}


def config_from_dict(data: dict, base: Optional[EngineConfig] = None) -> EngineConfig:
    base = base or EngineConfig()
    unknown = set(data) - _FIELD_NAMES
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    updates = dict(data)
    if "bbox" in updates:
        updates["bbox"] = tuple(updates["bbox"])
    return replace(base, **updates)


def load_config(path: Optional[str] = None) -> EngineConfig:
    """Config from an explicit path, else $URBANSENSE_CONFIG, else defaults."""
    path = path or os.environ.get(ENV_VAR)
    if not path:
        return EngineConfig()
    with open(path, encoding="utf-8") as fh:
        return config_from_dict(json.load(fh))


def resolve_event(config: EngineConfig) -> Optional[EventSpec]:
    if config.event is None:
        return None
    if isinstance(config.event, dict):
        return load_event_spec(config.event)
    return load_event_spec(str(config.event))


def build_enricher(
    config: EngineConfig,
    gazetteer: Optional[GazetteerIndex] = None,
    event: Optional[EventSpec] = None,
) -> Enricher:
    return Enricher(
        gazetteer=gazetteer if gazetteer is not None else load_gazetteer(config.gazetteer_path),
        taxonomy=load_taxonomy(config.taxonomy_path),
        lexicon=load_emotion_lexicon(config.lexicon_path),
        templates=load_templates(config.templates_path),
        event=event if event is not None else resolve_event(config),
        threshold=config.relevance_threshold,
    )


def load_fixture_products(config: EngineConfig) -> list[dict]:
    if not config.products_path or not os.path.exists(config.products_path):
        return []
    with open(config.products_path, encoding="utf-8") as fh:
        return json.load(fh)
