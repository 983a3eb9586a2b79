"""The running engine: one enrichment pipeline feeding one analytics state,
with optional durability and the curation registry (watch topics, products,
tracked users).

All mutations funnel through a single lock so the service can accept
concurrent requests while the analytics writer stays single-threaded.
Reads return plain JSON-ready dicts copied out under the same lock.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Optional

from .config import EngineConfig, build_enricher, load_fixture_products
from .enrichment import Enricher
from .errors import UrbanSenseError
from .ingestion import EventLog
from .model import GeoPoint, Message
from .state import AnalyticsState, UpdateEvent
from .store import MessageStore
from .text import tokenize

WATCH_TOPIC_ORIGINS = ("operator", "promoted-from-emerging")
PRODUCT_VISIBILITY = ("draft", "published")


class CurationError(UrbanSenseError):
    """Invalid curation request; carries an HTTP-ish status code."""

    def __init__(self, message: str, status: int):
        super().__init__(message)
        self.status = status


@dataclass
class WatchTopic:
    id: str
    label: str
    terms: list[dict]  # {"term": str, "weight": float}
    created_ts: float
    origin: str = "operator"

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "label": self.label,
            "terms": [dict(t) for t in self.terms],
            "created_ts": self.created_ts,
            "origin": self.origin,
        }


@dataclass
class Product:
    id: str
    name: str
    filters: list[dict]  # each: {categories?, topics?, bbox?, emotion?}
    visibility: str = "draft"

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "filters": [dict(f) for f in self.filters],
            "visibility": self.visibility,
        }


_FILTER_KEYS = {"categories", "topics", "bbox", "emotion"}


def validate_filters(filters) -> list[dict]:
    if not isinstance(filters, list) or not filters:
        raise CurationError("a product needs at least one filter", 400)
    out = []
    for f in filters:
        if not isinstance(f, dict) or not f:
            raise CurationError("each filter must be a non-empty object", 400)
        unknown = set(f) - _FILTER_KEYS
        if unknown:
            raise CurationError(f"unknown filter keys: {sorted(unknown)}", 400)
        if "bbox" in f:
            box = f["bbox"]
            if not (isinstance(box, list) and len(box) == 4):
                raise CurationError("filter bbox must be [min_lat, min_lon, max_lat, max_lon]", 400)
        out.append(dict(f))
    return out


def matches_filter(payload: dict, f: dict) -> bool:
    """One message-event payload against one filter; clauses AND together."""
    if "categories" in f:
        if not set(payload.get("categories", ())) & set(f["categories"]):
            return False
    if "topics" in f:
        if not set(payload.get("topics", ())) & set(f["topics"]):
            return False
    if "bbox" in f:
        lat, lon = payload.get("lat"), payload.get("lon")
        if lat is None or lon is None:
            return False
        min_lat, min_lon, max_lat, max_lon = f["bbox"]
        if not (min_lat <= lat <= max_lat and min_lon <= lon <= max_lon):
            return False
    if "emotion" in f:
        if payload.get("emotion", {}).get("primary") != f["emotion"]:
            return False
    return True


def matches_product(payload: dict, product: Product) -> bool:
    return any(matches_filter(payload, f) for f in product.filters)


def _term_keys(terms) -> list[str]:
    keys = []
    for t in terms:
        key = " ".join(tokenize(t["term"]))
        if key:
            keys.append(key)
    return keys


def _text_has_term(text: str, key: str) -> bool:
    tokens = tokenize(text)
    n = key.count(" ") + 1
    grams = {" ".join(tokens[i : i + n]) for i in range(len(tokens) - n + 1)}
    return key in grams


class Engine:
    """Owns the pipeline and all mutable state behind one lock."""

    def __init__(self, config: EngineConfig, store_dir: Optional[str] = None):
        self.config = config
        self.enricher: Enricher = build_enricher(config)
        self.state = AnalyticsState(config.state_config())
        self.lock = threading.RLock()
        self.watch_topics: dict[str, WatchTopic] = {}
        self.products: dict[str, Product] = {}
        self._counter = 0
        self.store: Optional[MessageStore] = None
        for raw in load_fixture_products(config):
            product = Product(
                id=raw["id"],
                name=raw["name"],
                filters=validate_filters(raw["filters"]),
                visibility=raw.get("visibility", "published"),
            )
            self.products[product.id] = product
        if store_dir is not None:
            self.store = MessageStore(store_dir, snapshot_every=config.snapshot_every)
            recovered = self.store.recover()
            for msg in recovered.messages:
                self._apply(msg, persist=False)
            self._load_curation(recovered.curation)

    # -- ingest ---------------------------------------------------------------

    def _apply(self, msg: Message, persist: bool = True):
        em = self.enricher.enrich(msg)
        self.state.apply(em)
        if persist and self.store is not None:
            self.store.append(msg)

    def apply_message(self, msg: Message):
        with self.lock:
            self._apply(msg)

    def apply_log(self, log: EventLog):
        with self.lock:
            for msg in log.messages:
                self._apply(msg)

    def flush(self):
        with self.lock:
            self.state.flush()
            if self.store is not None:
                self.store.compact()

    # -- curation -------------------------------------------------------------

    def _next_id(self, prefix: str) -> str:
        self._counter += 1
        return f"{prefix}{self._counter:04d}"

    def _persist_curation(self):
        if self.store is None:
            return
        doc = {
            "watch_topics": [t.to_dict() for t in self.watch_topics.values()],
            "products": [p.to_dict() for p in self.products.values()],
            "tracked_users": sorted(self.state.tracked_payload()["tracked"]),
            "counter": self._counter,
        }
        self.store.save_curation(doc)

    def _load_curation(self, doc: dict):
        for raw in doc.get("watch_topics", ()):
            topic = WatchTopic(
                id=raw["id"],
                label=raw["label"],
                terms=list(raw["terms"]),
                created_ts=raw["created_ts"],
                origin=raw.get("origin", "operator"),
            )
            self.watch_topics[topic.id] = topic
        for raw in doc.get("products", ()):
            self.products[raw["id"]] = Product(
                id=raw["id"],
                name=raw["name"],
                filters=list(raw["filters"]),
                visibility=raw.get("visibility", "draft"),
            )
        if doc.get("tracked_users"):
            self.state.set_tracked(set(doc["tracked_users"]))
        self._counter = doc.get("counter", self._counter)

    def create_watch_topic(self, body: dict) -> dict:
        label = body.get("label")
        terms = body.get("terms")
        origin = body.get("origin", "operator")
        if not label or not isinstance(label, str):
            raise CurationError("label is required", 400)
        if not isinstance(terms, list) or not terms:
            raise CurationError("terms must be a non-empty list", 400)
        for t in terms:
            if not isinstance(t, dict) or not t.get("term"):
                raise CurationError("each term needs a 'term' string", 400)
        if origin not in WATCH_TOPIC_ORIGINS:
            raise CurationError(f"origin must be one of {WATCH_TOPIC_ORIGINS}", 400)
        unknown = set(body) - {"label", "terms", "origin", "created_ts"}
        if unknown:
            raise CurationError(f"unknown fields: {sorted(unknown)}", 400)
        with self.lock:
            if any(t.label == label for t in self.watch_topics.values()):
                raise CurationError(f"watch topic label {label!r} already exists", 409)
            topic = WatchTopic(
                id=self._next_id("wt"),
                label=label,
                terms=[{"term": t["term"], "weight": float(t.get("weight", 1.0))} for t in terms],
                created_ts=float(body.get("created_ts", 0.0)),
                origin=origin,
            )
            self.watch_topics[topic.id] = topic
            self._persist_curation()
            return topic.to_dict()

    def list_watch_topics(self) -> list[dict]:
        with self.lock:
            return [t.to_dict() for t in self.watch_topics.values()]

    def get_watch_topic(self, topic_id: str, with_matches: bool = True) -> dict:
        with self.lock:
            topic = self.watch_topics.get(topic_id)
            if topic is None:
                raise CurationError(f"unknown watch topic {topic_id!r}", 404)
            out = topic.to_dict()
            if with_matches:
                keys = _term_keys(topic.terms)
                out["matches"] = [
                    {"id": em.base.id, "ts": em.base.ts, "lat": None, "lon": None}
                    | (
                        {"lat": em.geo.lat, "lon": em.geo.lon}
                        if em.geo is not None
                        else {}
                    )
                    for em in self.state.messages
                    if any(_text_has_term(em.base.text, k) for k in keys)
                ]
            return out

    def delete_watch_topic(self, topic_id: str):
        with self.lock:
            if topic_id not in self.watch_topics:
                raise CurationError(f"unknown watch topic {topic_id!r}", 404)
            del self.watch_topics[topic_id]
            self._persist_curation()

    def create_product(self, body: dict) -> dict:
        name = body.get("name")
        if not name or not isinstance(name, str):
            raise CurationError("name is required", 400)
        visibility = body.get("visibility", "draft")
        if visibility not in PRODUCT_VISIBILITY:
            raise CurationError(f"visibility must be one of {PRODUCT_VISIBILITY}", 400)
        unknown = set(body) - {"name", "filters", "visibility"}
        if unknown:
            raise CurationError(f"unknown fields: {sorted(unknown)}", 400)
        filters = validate_filters(body.get("filters"))
        with self.lock:
            if any(p.name == name for p in self.products.values()):
                raise CurationError(f"product name {name!r} already exists", 409)
            product = Product(
                id=self._next_id("prod"), name=name, filters=filters, visibility=visibility
            )
            self.products[product.id] = product
            self._persist_curation()
            return product.to_dict()

    def list_products(self) -> list[dict]:
        with self.lock:
            return [p.to_dict() for p in self.products.values()]

    def product_feed(self, product_id: str, since_seq: int) -> list[dict]:
        """Message events matching the product, each exactly once, seq order."""
        with self.lock:
            product = self.products.get(product_id)
            if product is None:
                raise CurationError(f"unknown product {product_id!r}", 404)
            out = []
            for ev in self.state.events_since(since_seq, kind="message"):
                if matches_product(ev.payload, product):
                    out.append({"seq": ev.seq, "kind": ev.kind, "payload": ev.payload})
            return out

    # -- queries --------------------------------------------------------------

    def surface(self, ws: Optional[float] = None) -> dict:
        with self.lock:
            return self.state.surface_payload(ws)

    def alerts_since(self, since_seq: int) -> list[dict]:
        with self.lock:
            return [
                {"seq": e.seq, "kind": e.kind, "payload": e.payload}
                for e in self.state.alerts_since(since_seq)
            ]

    def emerging(self) -> list[dict]:
        with self.lock:
            return self.state.latest_emerging()

    def guidance(self, lat: float, lon: float, radius_m: float, sectors: int) -> dict:
        with self.lock:
            return self.state.guidance_payload(GeoPoint(lat, lon), radius_m, sectors)

    def tracked_users(self) -> dict:
        with self.lock:
            return self.state.tracked_payload()

    def set_tracked_users(self, authors: list[str]) -> dict:
        with self.lock:
            self.state.set_tracked(set(authors))
            self._persist_curation()
            return self.state.tracked_payload()

    def events_since(self, since_seq: int) -> list[UpdateEvent]:
        with self.lock:
            return self.state.events_since(since_seq)

    def snapshot(self, ws: Optional[float] = None) -> dict:
        with self.lock:
            return self.state.export_snapshot(ws)

    @property
    def seq(self) -> int:
        with self.lock:
            return self.state.seq

    def close(self):
        with self.lock:
            if self.store is not None:
                self._persist_curation()
                self.store.close()
