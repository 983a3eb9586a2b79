"""Seeded synthetic data: protest scenarios with ground truth, and a labeled
corpus for measuring geoparsing quality.

Everything is a pure function of (spec, seed). Ground-truth labels come from
the generator's construction knowledge, never from running the pipeline, so
they stay valid as an independent yardstick.
"""

from __future__ import annotations

import io
import json
import math
import random
from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import ScenarioError
from .gazetteer import GazetteerIndex
from .ingestion import EventLog
from .model import (
    BoundingBox,
    GeoPoint,
    GridSpec,
    Message,
    Source,
    TimeWindow,
    distance_to_polyline_m,
    haversine_m,
)
from .enrichment import EventSpec, load_event_spec

REQUIRED_BANKS = (
    "violence",
    "law_infringement",
    "injury",
    "joyful",
    "curiosity",
    "peaceful",
    "marcher_place",
    "remote",
    "gathering",
    "chatter",
    "chatter_place",
)

INCIDENT_BANKS = ("violence", "law_infringement", "injury", "joyful", "curiosity")

# Bystanders must stay clearly outside the event buffer so the generator's
# "irrelevant" label cannot collide with the geographic relevance rule.
BYSTANDER_PATH_CLEARANCE_M = 800.0
FAR_PLACE_CLEARANCE_M = 1200.0

# Crowd spread along and around the path. Wide enough that ordinary march
# traffic never concentrates a cell to gathering levels; the injected
# swarms drop 80 messages into one cell and stand out cleanly. Marchers
# pushed past either end of the path pool in the terminal piazza with a
# dispersal radius that grows with the overshoot but stays inside the
# relevance buffer.
MARCH_PROGRESS_SPREAD = 0.25
PEACEFUL_JITTER_M = 150.0
VIOLENT_JITTER_M = 120.0
INCIDENT_JITTER_M = 200.0
PLACE_NAMING_RATE = 0.12
ENDPOINT_DISPERSAL_M_PER_UNIT = 1500.0
MAX_MARCH_JITTER_M = 240.0

_SOURCE_WEIGHTS = (
    (Source.TWITTER_LIKE, 0.65),
    (Source.PHOTO_LIKE, 0.15),
    (Source.CHECKIN_LIKE, 0.10),
    (Source.GRAPH_LIKE, 0.05),
    (Source.DIRECT_INPUT, 0.05),
)


@dataclass(frozen=True)
class IncidentInjection:
    category: str
    window_start: float
    count: int
    path_offset: Optional[float] = None
    cell: Optional[tuple[int, int]] = None


@dataclass(frozen=True)
class GatheringInjection:
    cell: tuple[int, int]
    window_start: float
    count: int


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    seed: int
    bbox: BoundingBox
    grid: GridSpec
    window_s: float
    event: EventSpec
    personas: dict[str, int]
    messages_per_agent: dict[str, int]
    incident_injections: tuple[IncidentInjection, ...] = ()
    gathering_injections: tuple[GatheringInjection, ...] = ()

    def __post_init__(self):
        for persona, n in self.personas.items():
            if n < 0:
                raise ScenarioError(f"negative agent count for {persona}")
        for inj in self.incident_injections:
            if inj.count < 0:
                raise ScenarioError("negative incident injection count")
        for inj in self.gathering_injections:
            if inj.count < 0:
                raise ScenarioError("negative gathering injection count")


@dataclass(frozen=True)
class GatheringTruth:
    ix: int
    iy: int
    window_start: float


@dataclass(frozen=True)
class GroundTruth:
    relevance: dict[str, bool]
    incidents: dict[str, str]
    gatherings: tuple[GatheringTruth, ...]
    geolabels: dict[int, Optional[str]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "relevance": dict(sorted(self.relevance.items())),
            "incidents": dict(sorted(self.incidents.items())),
            "gatherings": [
                {"ix": g.ix, "iy": g.iy, "window_start": g.window_start}
                for g in self.gatherings
            ],
            "geolabels": {str(i): v for i, v in sorted(self.geolabels.items())},
        }


def ground_truth_from_dict(data: dict) -> GroundTruth:
    return GroundTruth(
        relevance=dict(data.get("relevance", {})),
        incidents=dict(data.get("incidents", {})),
        gatherings=tuple(
            GatheringTruth(g["ix"], g["iy"], float(g["window_start"]))
            for g in data.get("gatherings", [])
        ),
        geolabels={int(k): v for k, v in data.get("geolabels", {}).items()},
    )


def write_ground_truth(truth: GroundTruth, path: str):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(truth.to_dict(), fh, ensure_ascii=False, sort_keys=True, indent=None)
        fh.write("\n")


def load_ground_truth(path: str) -> GroundTruth:
    with open(path, encoding="utf-8") as fh:
        return ground_truth_from_dict(json.load(fh))


def load_phrase_banks(source: Union[str, io.TextIOBase, dict]) -> dict[str, list[str]]:
    if isinstance(source, dict):
        data = source
    elif isinstance(source, str):
        with open(source, encoding="utf-8") as fh:
            data = json.load(fh)
    else:
        data = json.load(source)
    for bank in REQUIRED_BANKS:
        if not data.get(bank):
            raise ScenarioError(f"phrase bank {bank!r} missing or empty")
    return {k: list(v) for k, v in data.items()}


def load_scenario_spec(source: Union[str, io.TextIOBase, dict]) -> ScenarioSpec:
    if isinstance(source, dict):
        data = source
    elif isinstance(source, str):
        with open(source, encoding="utf-8") as fh:
            data = json.load(fh)
    else:
        data = json.load(source)
    min_lat, min_lon, max_lat, max_lon = data["bbox"]
    bbox = BoundingBox(GeoPoint(min_lat, min_lon), GeoPoint(max_lat, max_lon))
    grid = GridSpec(bbox=bbox, nx=int(data["grid"]["nx"]), ny=int(data["grid"]["ny"]))
    return ScenarioSpec(
        name=data["name"],
        seed=int(data["seed"]),
        bbox=bbox,
        grid=grid,
        window_s=float(data.get("window_s", 300)),
        event=load_event_spec(data["event"]),
        personas={k: int(v) for k, v in data["personas"].items()},
        messages_per_agent={k: int(v) for k, v in data["messages_per_agent"].items()},
        incident_injections=tuple(
            IncidentInjection(
                category=i["category"],
                window_start=float(i["window_start"]),
                count=int(i["count"]),
                path_offset=i.get("path_offset"),
                cell=tuple(i["cell"]) if "cell" in i else None,
            )
            for i in data.get("incident_injections", [])
        ),
        gathering_injections=tuple(
            GatheringInjection(
                cell=tuple(g["cell"]),
                window_start=float(g["window_start"]),
                count=int(g["count"]),
            )
            for g in data.get("gathering_injections", [])
        ),
    )


# ---------------------------------------------------------------------------
# Geometry helpers


def _point_along(path: tuple[GeoPoint, ...], f: float) -> GeoPoint:
    """Point at arc-length fraction f in [0, 1] along the polyline."""
    f = min(1.0, max(0.0, f))
    if len(path) == 1:
        return path[0]
    seg_lens = [haversine_m(a, b) for a, b in zip(path, path[1:])]
    total = sum(seg_lens)
    if total == 0:
        return path[0]
    target = f * total
    acc = 0.0
    for (a, b), seg in zip(zip(path, path[1:]), seg_lens):
        if acc + seg >= target or (a, b) == (path[-2], path[-1]):
            t = 0.0 if seg == 0 else (target - acc) / seg
            t = min(1.0, max(0.0, t))
            return GeoPoint(a.lat + (b.lat - a.lat) * t, a.lon + (b.lon - a.lon) * t)
        acc += seg
    return path[-1]


def _offset_point(p: GeoPoint, rng: random.Random, max_m: float) -> GeoPoint:
    """Uniform-by-area point in a disk around p (sqrt keeps the density flat)."""
    theta = rng.uniform(0, 2 * math.pi)
    d = max_m * math.sqrt(rng.random())
    dlat = d * math.cos(theta) / 111_320.0
    dlon = d * math.sin(theta) / (111_320.0 * math.cos(math.radians(p.lat)))
    return GeoPoint(p.lat + dlat, p.lon + dlon)


def _cell_center(grid: GridSpec, ix: int, iy: int) -> GeoPoint:
    return GeoPoint(
        grid.bbox.min.lat + (iy + 0.5) * grid.cell_height,
        grid.bbox.min.lon + (ix + 0.5) * grid.cell_width,
    )


def _pick_source(rng: random.Random) -> Source:
    roll = rng.random()
    acc = 0.0
    for source, w in _SOURCE_WEIGHTS:
        acc += w
        if roll < acc:
            return source
    return _SOURCE_WEIGHTS[-1][0]


# ---------------------------------------------------------------------------
# Scenario generation


@dataclass
class _Draft:
    ts: float
    order: int
    author: str
    text: str
    geo: Optional[GeoPoint]
    relevant: bool
    incident: Optional[str]


def synthesize_scenario(
    spec: ScenarioSpec, banks: dict[str, list[str]], gazetteer: GazetteerIndex
) -> tuple[EventLog, GroundTruth]:
    """Generate a labeled protest scenario.

    Marchers (peaceful and violent personas) move along the event path and
    mostly carry declared coordinates; a slice of peaceful messages instead
    name a place on the route so the geoparsing route gets real traffic.
    Bystanders chatter from fixed positions well away from the path; remote
    users discuss the event without coordinates. Injections place incident
    texts on the path and gathering swarms at the configured cells.
    """
    for bank in REQUIRED_BANKS:
        if not banks.get(bank):
            raise ScenarioError(f"phrase bank {bank!r} missing or empty")
    ev = spec.event
    win = ev.window
    path = ev.path
    for inj in spec.incident_injections:
        if inj.category not in INCIDENT_BANKS:
            raise ScenarioError(f"unknown incident category {inj.category!r}")
        if not (win.start <= inj.window_start and inj.window_start + spec.window_s <= win.end):
            raise ScenarioError(f"incident injection window {inj.window_start} outside event window")
        if inj.cell is not None and not (
            0 <= inj.cell[0] < spec.grid.nx and 0 <= inj.cell[1] < spec.grid.ny
        ):
            raise ScenarioError(f"incident injection cell {inj.cell} outside grid")
    for inj in spec.gathering_injections:
        if not (0 <= inj.cell[0] < spec.grid.nx and 0 <= inj.cell[1] < spec.grid.ny):
            raise ScenarioError(f"gathering injection cell {inj.cell} outside grid")
        if not (win.start <= inj.window_start and inj.window_start + spec.window_s <= win.end):
            raise ScenarioError(f"gathering injection window {inj.window_start} outside event window")

    place_entries = [gazetteer.entries[pid] for pid in sorted(ev.place_ids) if pid in gazetteer.entries]
    far_entries = [
        e
        for eid, e in sorted(gazetteer.entries.items())
        if distance_to_polyline_m(e.location, list(path)) > FAR_PLACE_CLEARANCE_M
    ]

    rng = random.Random(spec.seed)
    drafts: list[_Draft] = []
    order = 0

    def add(ts, author, text, geo, relevant, incident=None):
        nonlocal order
        drafts.append(_Draft(ts, order, author, text, geo, relevant, incident))
        order += 1

    def march_position(ts: float, progress_offset: float, base_jitter: float) -> GeoPoint:
        f = (ts - win.start) / win.duration + progress_offset
        overshoot = max(0.0, -f) + max(0.0, f - 1.0)
        jitter = min(
            MAX_MARCH_JITTER_M,
            base_jitter + overshoot * ENDPOINT_DISPERSAL_M_PER_UNIT,
        )
        return _offset_point(_point_along(path, f), rng, jitter)

    n_peaceful = spec.personas.get("peaceful", 0)
    mpa = spec.messages_per_agent
    for i in range(n_peaceful):
        author = f"peace{i:03d}"
        progress_offset = rng.uniform(-MARCH_PROGRESS_SPREAD, MARCH_PROGRESS_SPREAD)
        for _ in range(mpa.get("peaceful", 0)):
            ts = win.start + rng.random() * win.duration
            if place_entries and rng.random() < PLACE_NAMING_RATE:
                entry = rng.choice(place_entries)
                text = rng.choice(banks["marcher_place"]).format(place=entry.canonical_name)
                add(ts, author, text, None, relevant=True)
            else:
                text = rng.choice(banks["peaceful"])
                geo = march_position(ts, progress_offset, PEACEFUL_JITTER_M)
                add(ts, author, text, geo, relevant=True)

    for i in range(spec.personas.get("violent", 0)):
        author = f"viol{i:03d}"
        progress_offset = rng.uniform(-MARCH_PROGRESS_SPREAD, MARCH_PROGRESS_SPREAD)
        for _ in range(mpa.get("violent", 0)):
            ts = win.start + rng.random() * win.duration
            text = rng.choice(banks["violence"])
            geo = march_position(ts, progress_offset, VIOLENT_JITTER_M)
            add(ts, author, text, geo, relevant=True, incident="violence")

    for i in range(spec.personas.get("bystander", 0)):
        author = f"byst{i:03d}"
        pos = None
        for _ in range(1000):
            candidate = GeoPoint(
                rng.uniform(spec.bbox.min.lat, spec.bbox.max.lat),
                rng.uniform(spec.bbox.min.lon, spec.bbox.max.lon),
            )
            if distance_to_polyline_m(candidate, list(path)) > BYSTANDER_PATH_CLEARANCE_M:
                pos = candidate
                break
        if pos is None:
            raise ScenarioError("could not place a bystander away from the event path")
        for _ in range(mpa.get("bystander", 0)):
            ts = win.start + rng.random() * win.duration
            if far_entries and rng.random() < 0.2:
                entry = rng.choice(far_entries)
                text = rng.choice(banks["chatter_place"]).format(place=entry.canonical_name)
            else:
                text = rng.choice(banks["chatter"])
            geo = _offset_point(pos, rng, 120) if rng.random() < 0.9 else None
            add(ts, author, text, geo, relevant=False)

    for i in range(spec.personas.get("remote", 0)):
        author = f"rem{i:03d}"
        for _ in range(mpa.get("remote", 0)):
            ts = win.start + rng.random() * win.duration
            text = rng.choice(banks["remote"])
            add(ts, author, text, None, relevant=True)

    for k, inj in enumerate(spec.incident_injections):
        if inj.cell is not None:
            base = _cell_center(spec.grid, inj.cell[0], inj.cell[1])
        else:
            base = _point_along(path, inj.path_offset if inj.path_offset is not None else 0.5)
        for j in range(inj.count):
            ts = inj.window_start + rng.random() * spec.window_s
            text = rng.choice(banks[inj.category])
            add(
                ts,
                f"inc{k}a{j:02d}",
                text,
                _offset_point(base, rng, INCIDENT_JITTER_M),
                relevant=True,
                incident=inj.category,
            )

    for k, inj in enumerate(spec.gathering_injections):
        center = _cell_center(spec.grid, inj.cell[0], inj.cell[1])
        half_lat = spec.grid.cell_height * 0.35
        half_lon = spec.grid.cell_width * 0.35
        for j in range(inj.count):
            ts = inj.window_start + rng.random() * spec.window_s
            geo = GeoPoint(
                center.lat + rng.uniform(-half_lat, half_lat),
                center.lon + rng.uniform(-half_lon, half_lon),
            )
            text = rng.choice(banks["gathering"])
            add(ts, f"gat{k}a{j:02d}", text, geo, relevant=True)

    drafts.sort(key=lambda d: (d.ts, d.order))
    authors = [d.author for d in drafts]
    messages: list[Message] = []
    relevance: dict[str, bool] = {}
    incidents: dict[str, str] = {}
    for i, d in enumerate(drafts):
        msg_id = f"m{i:06d}"
        reply_to = None
        if i > 0 and rng.random() < 0.12:
            reply_to = f"m{rng.randrange(i):06d}"
        mentions: tuple[str, ...] = ()
        if len(authors) > 1 and rng.random() < 0.08:
            other = rng.choice(authors)
            if other != d.author:
                mentions = (other,)
        messages.append(
            Message(
                id=msg_id,
                source=_pick_source(rng),
                author_id=d.author,
                ts=d.ts,
                text=d.text,
                declared_geo=d.geo,
                reply_to=reply_to,
                mentions=mentions,
            )
        )
        relevance[msg_id] = d.relevant
        if d.incident is not None:
            incidents[msg_id] = d.incident
    truth = GroundTruth(
        relevance=relevance,
        incidents=incidents,
        gatherings=tuple(
            GatheringTruth(inj.cell[0], inj.cell[1], inj.window_start)
            for inj in spec.gathering_injections
        ),
    )
    return EventLog(messages=tuple(messages)), truth


# ---------------------------------------------------------------------------
# Labeled geoparsing corpus

_LABELED_TEMPLATES = (
    "riot at {name} right now",
    "meet me at {name}",
    "heading to {name} for the evening",
    "big queue near {name} this morning",
    "sono a {name} adesso",
    "andiamo verso {name} stasera",
    "mercatino presso {name} domani",
    "concert tonight at {name}",
)

# Bait sentences must not put a spatial cue in the three tokens before the
# name, otherwise the context filter would (correctly) keep the match.
_BAIT_TEMPLATES = (
    "{name} was so crowded yesterday",
    "loved {name} so much honestly",
    "{name} sempre pieno di turisti",
    "my cousin said {name} is overrated",
    "{name} memories from last summer",
)

_FAKE_PLACES = (
    "vicolo tarandino",
    "largo brumosa",
    "teatro quarzite",
    "mercato luponero",
    "giardino velluto",
    "ponte corvino",
    "torre malvina",
    "corte ambrata",
    "salita verdina",
    "museo catrame",
    "parco miraldo",
    "stadio nebbioso",
)

_LETTERS = "abcdefghijklmnopqrstuvwxyz"


def _mutate_name(rng: random.Random, key: str) -> str:
    """One character edit that never touches token boundaries."""
    while True:
        op = rng.choice(("sub", "del", "ins"))
        pos = rng.randrange(len(key))
        if op == "sub":
            if key[pos] == " ":
                continue
            c = rng.choice(_LETTERS)
            if c == key[pos]:
                continue
            return key[:pos] + c + key[pos + 1 :]
        if op == "del":
            if key[pos] == " ":
                continue
            out = key[:pos] + key[pos + 1 :]
            if "  " in out or out.startswith(" ") or out.endswith(" "):
                continue
            return out
        return key[:pos] + rng.choice(_LETTERS) + key[pos:]


def synthesize_geocorpus(
    gazetteer: GazetteerIndex,
    n: int,
    ambiguity_rate: float,
    seed: int,
) -> list[tuple[str, Optional[str]]]:
    """n sentences labeled with the gazetteer entry they name, or None.

    Labeled sentences carry a real place name (verbatim, case-folded, alias,
    or lightly misspelled) behind a spatial cue. The bait fraction is split
    between invented place names and real single-word aliases dropped into
    cue-free contexts; the correct answer for both is None.
    """
    if n <= 0:
        raise ScenarioError("corpus size must be positive")
    if not 0 <= ambiguity_rate < 1:
        raise ScenarioError("ambiguity_rate must be in [0, 1)")
    if not gazetteer.entries:
        raise ScenarioError("gazetteer is empty")
    rng = random.Random(seed)
    entries = [e for _, e in sorted(gazetteer.entries.items())]
    with_alias = [e for e in entries if e.aliases]
    fuzzy_pool = []
    single_aliases = []
    from .gazetteer import _name_key  # shared normalization for name keys

    for e in entries:
        key = _name_key(e.canonical_name)
        if len(key) >= 8:
            fuzzy_pool.append((e, key))
        for a in e.aliases:
            akey = _name_key(a)
            # accent/case variants of the canonical name score 0.95 and are
            # retained without a cue, so they make no usable bait
            if " " not in akey and akey != key:
                single_aliases.append((e, a))

    n_bait = round(n * ambiguity_rate)
    slots = ["bait"] * n_bait + ["labeled"] * (n - n_bait)
    rng.shuffle(slots)

    corpus: list[tuple[str, Optional[str]]] = []
    for slot in slots:
        if slot == "bait":
            if single_aliases and rng.random() < 0.5:
                _, alias = rng.choice(single_aliases)
                text = rng.choice(_BAIT_TEMPLATES).format(name=alias)
            else:
                text = rng.choice(_BAIT_TEMPLATES).format(name=rng.choice(_FAKE_PLACES))
            corpus.append((text, None))
            continue
        roll = rng.random()
        if roll < 0.35:
            entry = rng.choice(entries)
            surface = entry.canonical_name
        elif roll < 0.55:
            entry = rng.choice(entries)
            surface = entry.canonical_name.lower()
        elif roll < 0.8 and with_alias:
            entry = rng.choice(with_alias)
            surface = rng.choice(entry.aliases)
        elif fuzzy_pool:
            entry, key = rng.choice(fuzzy_pool)
            surface = _mutate_name(rng, key)
            if surface in gazetteer._by_key:
                surface = key  # mutation collided with a real name, fall back
        else:
            entry = rng.choice(entries)
            surface = entry.canonical_name
        text = rng.choice(_LABELED_TEMPLATES).format(name=surface)
        corpus.append((text, entry.id))
    return corpus
