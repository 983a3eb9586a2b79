"""Capture live service responses as JSON fixtures for the console tests.

Replays the bundled scenario through a real engine and saves the bytes the
/v1 endpoints actually return. The console's contract tests run against a
small fixture server that serves these captures, so every value the UI
renders is anchored to a genuine service response.

Run from the repo root after installing the package:

    python3 scripts/capture_console_fixtures.py
"""

from __future__ import annotations

import json
from pathlib import Path

from starlette.testclient import TestClient

from urbansense import synth
from urbansense.config import load_config
from urbansense.gazetteer import load_gazetteer
from urbansense.runtime import Engine
from urbansense.service import create_app

OUT_DIR = Path(__file__).resolve().parent.parent / "frontend" / "tests" / "fixtures"


def dump(name: str, data) -> None:
    path = OUT_DIR / name
    path.write_text(json.dumps(data, ensure_ascii=False, sort_keys=True, indent=2) + "\n")
    print(f"wrote {path.relative_to(Path.cwd())}")


def main() -> None:
    OUT_DIR.mkdir(parents=True, exist_ok=True)

    cfg = load_config(None)
    spec = synth.load_scenario_spec(cfg.scenario_path)
    banks = synth.load_phrase_banks(cfg.phrases_path)
    gazetteer = load_gazetteer(cfg.gazetteer_path)
    log, _truth = synth.synthesize_scenario(spec, banks, gazetteer)

    engine = Engine(cfg)
    client = TestClient(create_app(engine))

    # Replay until the first window close that reports emerging topics, and
    # capture the panel payload at that instant; a live console polls
    # mid-stream, so the fixture should too.
    emerging_captured = False
    cursor = 0
    for msg in log.messages:
        engine.apply_message(msg)
        if emerging_captured:
            continue
        for ev in engine.events_since(cursor):
            cursor = ev.seq
            if ev.kind == "emerging" and ev.payload.get("topics"):
                dump("emerging.json", client.get("/v1/topics/emerging").json())
                emerging_captured = True
    if not emerging_captured:
        raise SystemExit("scenario produced no emerging topics; fixtures incomplete")
    engine.flush()

    dump("health.json", client.get("/v1/healthz").json())
    snapshot = client.get("/v1/snapshot").json()
    dump("snapshot.json", snapshot)
    dump("surface.json", client.get("/v1/surface").json())

    gatherings = [a for a in snapshot["alerts"] if a["kind"] == "gathering"]
    first_ws = int(gatherings[0]["window_start"])
    dump(
        "surface_gathering.json",
        client.get(f"/v1/surface?window_start={first_ws}").json(),
    )

    dump("alerts.json", client.get("/v1/alerts?since_seq=0").json())
    dump("products.json", client.get("/v1/products").json())
    dump(
        "feed_prod_violence.json",
        client.get("/v1/products/prod-violence/feed?since=0").json(),
    )

    grid = snapshot["surface"]["grid"]
    lat = (grid["bbox"][0] + grid["bbox"][2]) / 2
    lon = (grid["bbox"][1] + grid["bbox"][3]) / 2
    dump(
        "guidance.json",
        client.get(f"/v1/guidance?lat={lat}&lon={lon}&radius_m=1500&sectors=8").json(),
    )
    dump("tracked.json", client.get("/v1/tracked-users").json())
    dump("watch_topics_empty.json", client.get("/v1/watch-topics").json())

    # Promote exchange, captured verbatim: create, detail with matches,
    # duplicate conflict. The fixture server mimics these bodies.
    body = {
        "label": "arts",
        "terms": [{"term": "arts"}],
        "origin": "promoted-from-emerging",
    }
    created = client.post("/v1/watch-topics", json=body)
    assert created.status_code == 201, created.text
    dump("watch_topic_created.json", created.json())
    topic_id = created.json()["id"]
    dump("watch_topic_detail.json", client.get(f"/v1/watch-topics/{topic_id}").json())
    dump("watch_topics_after_promote.json", client.get("/v1/watch-topics").json())
    conflict = client.post("/v1/watch-topics", json=body)
    assert conflict.status_code == 409, conflict.text
    dump("watch_topic_conflict.json", conflict.json())

    # A topic whose term occurs in scenario texts, so the detail carries a
    # non-empty matches list for the map-layer fixtures.
    layer = client.post(
        "/v1/watch-topics",
        json={"label": "crowd watch", "terms": [{"term": "crowd"}]},
    )
    assert layer.status_code == 201, layer.text
    layer_detail = client.get(f"/v1/watch-topics/{layer.json()['id']}").json()
    assert layer_detail["matches"], "expected text matches for the layer fixture"
    dump("watch_topic_layer.json", layer_detail)

    prod_body = {
        "name": "night desk",
        "filters": [{"categories": ["violence"], "emotion": "fear"}],
    }
    prod = client.post("/v1/products", json=prod_body)
    assert prod.status_code == 201, prod.text
    dump("product_created.json", prod.json())

    # A contiguous slice of journal events for the stream fixture; the
    # fixture server frames them as server-sent events.
    tail = [
        {"seq": ev.seq, "kind": ev.kind, "payload": ev.payload}
        for ev in engine.events_since(1540)[:30]
    ]
    dump("stream_tail.json", tail)

    engine.close()

    # Empty-state captures from a fresh engine: the zero-surface map case.
    fresh = Engine(load_config(None))
    fresh_client = TestClient(create_app(fresh))
    dump("empty_surface.json", fresh_client.get("/v1/surface").json())
    dump("empty_snapshot.json", fresh_client.get("/v1/snapshot").json())
    fresh.close()


if __name__ == "__main__":
    main()
