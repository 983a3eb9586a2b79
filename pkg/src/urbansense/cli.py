"""Operator command line: scenario generation, replay (optionally serving
the HTTP API), batch analysis reports, one-off geocoding, and surface export
for plotting. Exit codes: 0 success, 1 pipeline error, 2 bad flags."""

from __future__ import annotations

import argparse
import json
import sys
import threading
from typing import Optional

from .config import EngineConfig, load_config
from .errors import UrbanSenseError
from .gazetteer import load_gazetteer, retained_matches
from .ingestion import parse_event_log, replay, write_event_log
from .runtime import Engine
from .synth import (
    load_phrase_banks,
    load_scenario_spec,
    load_ground_truth,
    synthesize_scenario,
    write_ground_truth,
)


def _cmd_synth(args, config: EngineConfig) -> int:
    data = _scenario_dict(args.scenario or config.scenario_path)
    if args.seed is not None:
        data = dict(data, seed=args.seed)
    spec = load_scenario_spec(data)
    banks = load_phrase_banks(config.phrases_path)
    gazetteer = load_gazetteer(config.gazetteer_path)
    log, truth = synthesize_scenario(spec, banks, gazetteer)
    write_event_log(log, args.out)
    if args.truth:
        write_ground_truth(truth, args.truth)
    print(f"wrote {len(log)} messages to {args.out}")
    return 0


def _scenario_dict(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _build_engine(config: EngineConfig, store: Optional[str], event_path: Optional[str] = None) -> Engine:
    if event_path:
        config = _with_event(config, event_path)
    return Engine(config, store_dir=store)


def _with_event(config: EngineConfig, event_path: str) -> EngineConfig:
    from dataclasses import replace

    return replace(config, event=event_path)


def _cmd_replay(args, config: EngineConfig) -> int:
    with open(args.infile, encoding="utf-8") as fh:
        log = parse_event_log(fh)
    speed = "instant" if args.instant or args.speed is None else args.speed
    engine = _build_engine(config, args.store, args.event)

    def run_replay():
        report = replay(log, engine.apply_message, speed=speed)
        engine.flush()
        print(f"replayed {report.delivered} messages")

    if args.serve:
        host, _, port = args.serve.rpartition(":")
        worker = threading.Thread(target=run_replay, daemon=True)
        worker.start()
        from .service import serve

        serve(engine, host=host or "127.0.0.1", port=int(port))
    else:
        run_replay()
    return 0


def _cmd_analyze(args, config: EngineConfig) -> int:
    with open(args.infile, encoding="utf-8") as fh:
        log = parse_event_log(fh)
    engine = _build_engine(config, None, args.event)
    replay(log, engine.apply_message, speed="instant")
    engine.flush()
    state = engine.state
    by_category: dict[str, int] = {}
    by_emotion: dict[str, int] = {}
    topic_counts: dict[str, int] = {}
    accepted = 0
    for em in state.messages:
        if em.relevance.accepted:
            accepted += 1
        for cat in {c for c, _ in em.template_hits}:
            by_category[cat] = by_category.get(cat, 0) + 1
        by_emotion[em.emotion.primary] = by_emotion.get(em.emotion.primary, 0) + 1
        for t in em.topics:
            topic_counts[t] = topic_counts.get(t, 0) + 1
    report = {
        "messages": len(state.messages),
        "accepted": accepted,
        "by_category": dict(sorted(by_category.items())),
        "by_emotion": dict(sorted(by_emotion.items())),
        "topics": dict(sorted(topic_counts.items())),
        "windows": state.known_windows(),
        "alerts": [dict(e.payload, seq=e.seq) for e in state.alerts_since(0)],
        "emerging": state.latest_emerging(),
    }
    if args.truth:
        truth = load_ground_truth(args.truth)
        tp = fp = fn = 0
        for em in state.messages:
            actual = truth.relevance.get(em.base.id)
            if actual is None:
                continue
            if em.relevance.accepted and actual:
                tp += 1
            elif em.relevance.accepted and not actual:
                fp += 1
            elif not em.relevance.accepted and actual:
                fn += 1
        report["relevance"] = {
            "true_positives": tp,
            "false_positives": fp,
            "false_negatives": fn,
            "precision": tp / (tp + fp) if tp + fp else 0.0,
            "recall": tp / (tp + fn) if tp + fn else 0.0,
        }
        truth_by_cat: dict[str, int] = {}
        for cat in truth.incidents.values():
            truth_by_cat[cat] = truth_by_cat.get(cat, 0) + 1
        report["incidents_truth"] = dict(sorted(truth_by_cat.items()))
    with open(args.report, "w", encoding="utf-8") as fh:
        json.dump(report, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"report written to {args.report}")
    return 0


def _cmd_geocode(args, config: EngineConfig) -> int:
    gazetteer = load_gazetteer(args.gazetteer or config.gazetteer_path)
    matches = retained_matches(args.text, gazetteer)
    out = [
        {
            "entry_id": m.entry_id,
            "span": list(m.span),
            "mode": m.mode.value,
            "score": m.score,
            "matched_name": m.matched_name,
        }
        for m in matches
    ]
    print(json.dumps(out, ensure_ascii=False))
    return 0


def _cmd_export_surface(args, config: EngineConfig) -> int:
    with open(args.infile, encoding="utf-8") as fh:
        log = parse_event_log(fh)
    engine = _build_engine(config, None, args.event)
    replay(log, engine.apply_message, speed="instant")
    engine.flush()
    surface = engine.surface(args.window)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(surface, fh, ensure_ascii=False, sort_keys=True)
        fh.write("\n")
    print(f"surface written to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="urbansense",
        description="Geo-social stream engine: synthesis, replay, analytics, serving.",
    )
    parser.add_argument("--config", help="engine config JSON (default: $URBANSENSE_CONFIG)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a scenario log with ground truth")
    p.add_argument("--scenario", help="scenario spec JSON (default: packaged protest)")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--out", required=True, help="output event log JSONL")
    p.add_argument("--truth", help="output ground truth JSON")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("replay", help="replay a log into analytics, optionally serving")
    p.add_argument("--in", dest="infile", required=True, help="event log JSONL")
    p.add_argument("--speed", type=float, help="clock multiplier (default instant)")
    p.add_argument("--instant", action="store_true", help="skip all waiting")
    p.add_argument("--serve", metavar="ADDR", help="host:port to serve while replaying")
    p.add_argument("--store", help="persistence directory")
    p.add_argument("--event", help="event spec JSON for relevance gating")
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("analyze", help="batch pipeline run with a JSON report")
    p.add_argument("--in", dest="infile", required=True, help="event log JSONL")
    p.add_argument("--event", help="event spec JSON for relevance gating")
    p.add_argument("--report", required=True, help="output report JSON")
    p.add_argument("--truth", help="ground truth JSON for precision/recall")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("geocode", help="print gazetteer matches for a text")
    p.add_argument("--gazetteer", help="gazetteer CSV (default: packaged)")
    p.add_argument("--text", required=True, help="text to geoparse")
    p.set_defaults(func=_cmd_geocode)

    p = sub.add_parser("export-surface", help="write one window's heat surface JSON")
    p.add_argument("--in", dest="infile", required=True, help="event log JSONL")
    p.add_argument("--window", type=float, required=True, help="window start (epoch seconds)")
    p.add_argument("--out", required=True, help="output JSON path")
    p.add_argument("--event", help="event spec JSON for relevance gating")
    p.set_defaults(func=_cmd_export_surface)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        return args.func(args, config)
    except UrbanSenseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
