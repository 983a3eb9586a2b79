"""Shared fixtures: bundled resources, the default scenario, an ASGI client.

The protest scenario is expensive to synthesize and enrich, so it is built
once per session and shared read-only across test modules.
"""

import asyncio
import json

import pytest

from urbansense.config import EngineConfig, build_enricher, resolve_event
from urbansense.enrichment import load_emotion_lexicon, load_taxonomy, load_templates
from urbansense.gazetteer import load_gazetteer
from urbansense.model import (
    EmotionLabel,
    EnrichedMessage,
    GeoPoint,
    GeoProvenance,
    Message,
    RelevanceVerdict,
    ResolvedGeo,
    Source,
)
from urbansense.synth import (
    load_phrase_banks,
    load_scenario_spec,
    synthesize_scenario,
)


@pytest.fixture(scope="session")
def default_config():
    return EngineConfig()


@pytest.fixture(scope="session")
def gazetteer(default_config):
    return load_gazetteer(default_config.gazetteer_path)


@pytest.fixture(scope="session")
def taxonomy(default_config):
    return load_taxonomy(default_config.taxonomy_path)


@pytest.fixture(scope="session")
def lexicon(default_config):
    return load_emotion_lexicon(default_config.lexicon_path)


@pytest.fixture(scope="session")
def templates(default_config):
    return load_templates(default_config.templates_path)


@pytest.fixture(scope="session")
def phrase_banks(default_config):
    return load_phrase_banks(default_config.phrases_path)


@pytest.fixture(scope="session")
def scenario_spec(default_config):
    return load_scenario_spec(default_config.scenario_path)


@pytest.fixture(scope="session")
def scenario(scenario_spec, phrase_banks, gazetteer):
    """(event log, ground truth) for the default protest scenario."""
    return synthesize_scenario(scenario_spec, phrase_banks, gazetteer)


@pytest.fixture(scope="session")
def event_spec(default_config):
    cfg = EngineConfig(event=json.load(open(default_config.scenario_path))["event"])
    return resolve_event(cfg)


@pytest.fixture(scope="session")
def enricher(default_config, gazetteer, event_spec):
    return build_enricher(default_config, gazetteer=gazetteer, event=event_spec)


@pytest.fixture(scope="session")
def enriched_scenario(scenario, enricher):
    log, _ = scenario
    return [enricher.enrich(m) for m in log.messages]


def make_message(
    id="m1",
    source=Source.TWITTER_LIKE,
    author_id="alice",
    ts=1000.0,
    text="hello",
    declared_geo=None,
    reply_to=None,
    mentions=(),
    origin_label=None,
):
    if isinstance(declared_geo, tuple):
        declared_geo = GeoPoint(*declared_geo)
    return Message(
        id=id,
        source=source,
        author_id=author_id,
        ts=ts,
        text=text,
        declared_geo=declared_geo,
        reply_to=reply_to,
        mentions=tuple(mentions),
        origin_label=origin_label,
    )


@pytest.fixture
def message_factory():
    return make_message


def make_enriched(
    id="m1",
    ts=1000.0,
    geo=None,
    accepted=True,
    topics=(),
    author="alice",
    reply_to=None,
    mentions=(),
    template_hits=(),
    emotion=("neutral", 0.0),
    provenance=GeoProvenance.DECLARED,
    text="hello",
):
    """Hand-built enriched message for analytics tests; geo is a (lat, lon)."""
    base = make_message(
        id=id, ts=ts, author_id=author, reply_to=reply_to, mentions=mentions, text=text
    )
    resolved = ResolvedGeo(GeoPoint(*geo), provenance) if geo is not None else None
    score = 1.0 if accepted else 0.0
    return EnrichedMessage(
        base=base,
        resolved_geo=resolved,
        topics=frozenset(topics),
        emotion=EmotionLabel(*emotion),
        relevance=RelevanceVerdict(score, 0.0, 0.0, score, accepted),
        template_hits=tuple(template_hits),
    )


@pytest.fixture
def enriched_factory():
    return make_enriched


async def _read_sse(app, query, max_events, timeout=10.0):
    """Drive the ASGI app directly and collect parsed stream events.

    Returns (status, events, clean_exit); sends a disconnect once enough
    events arrived and reports whether the app task then finished on its own.
    """
    inbox = asyncio.Queue()
    await inbox.put({"type": "http.request", "body": b"", "more_body": False})
    state = {"status": None, "buf": b""}
    events = []
    enough = asyncio.Event()

    async def receive():
        return await inbox.get()

    async def send(message):
        if message["type"] == "http.response.start":
            state["status"] = message["status"]
        elif message["type"] == "http.response.body":
            state["buf"] += message.get("body", b"")
            while b"\n\n" in state["buf"]:
                raw, state["buf"] = state["buf"].split(b"\n\n", 1)
                ev = {}
                for line in raw.decode().splitlines():
                    key, _, value = line.partition(": ")
                    ev[key] = value
                events.append(ev)
            if len(events) >= max_events:
                enough.set()

    scope = {
        "type": "http",
        "asgi": {"version": "3.0", "spec_version": "2.3"},
        "http_version": "1.1",
        "method": "GET",
        "scheme": "http",
        "path": "/v1/stream",
        "raw_path": b"/v1/stream",
        "query_string": query.encode(),
        "root_path": "",
        "headers": [(b"host", b"testserver"), (b"accept", b"text/event-stream")],
        "client": ("testclient", 50000),
        "server": ("testserver", 80),
    }
    task = asyncio.create_task(app(scope, receive, send))
    try:
        await asyncio.wait_for(enough.wait(), timeout)
    finally:
        await inbox.put({"type": "http.disconnect"})
    try:
        await asyncio.wait_for(task, 5.0)
        clean = True
    except asyncio.TimeoutError:
        task.cancel()
        clean = False
    return state["status"], events[:max_events], clean


@pytest.fixture
def sse_reader():
    def run(app, query, max_events, timeout=10.0):
        return asyncio.run(_read_sse(app, query, max_events, timeout))

    return run
