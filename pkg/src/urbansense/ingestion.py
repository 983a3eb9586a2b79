"""Event-log wire format, deterministic replay, and the source-adapter contract.

The JSONL schema is the boundary between the engine and anything that
produces messages: one object per line with fields id, source, author,
ts (ISO-8601 UTC), text, and optional lat/lon, reply_to, mentions.
"""

from __future__ import annotations

import io
import json
import time
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Protocol, Union

from .errors import EventLogError, SinkError
from .model import GeoPoint, Message, Source, format_iso8601, parse_iso8601


@dataclass(frozen=True)
class EventLog:
    messages: tuple[Message, ...]  # sorted by (ts, id), ids unique

    def __len__(self) -> int:
        return len(self.messages)


def message_to_dict(msg: Message) -> dict:
    """Wire representation; optional fields are omitted when absent."""
    out: dict = {
        "id": msg.id,
        "source": msg.source.value,
        "author": msg.author_id,
        "ts": format_iso8601(msg.ts),
        "text": msg.text,
    }
    if msg.declared_geo is not None:
        out["lat"] = msg.declared_geo.lat
        out["lon"] = msg.declared_geo.lon
    if msg.reply_to is not None:
        out["reply_to"] = msg.reply_to
    out["mentions"] = list(msg.mentions)
    return out


def message_from_dict(data: dict) -> Message:
    for required in ("id", "source", "author", "ts", "text"):
        if required not in data:
            raise ValueError(f"missing field {required!r}")
    has_lat, has_lon = "lat" in data, "lon" in data
    if has_lat != has_lon:
        raise ValueError("lat and lon must appear together")
    declared = GeoPoint(float(data["lat"]), float(data["lon"])) if has_lat else None
    try:
        source = Source(data["source"])
    except ValueError:
        raise ValueError(f"unknown source {data['source']!r}")
    mentions = data.get("mentions", [])
    if not isinstance(mentions, list) or not all(isinstance(m, str) for m in mentions):
        raise ValueError("mentions must be a list of author ids")
    return Message(
        id=data["id"],
        source=source,
        author_id=data["author"],
        ts=parse_iso8601(data["ts"]) if isinstance(data["ts"], str) else float(data["ts"]),
        text=data["text"],
        declared_geo=declared,
        reply_to=data.get("reply_to"),
        mentions=tuple(mentions),
    )


def message_to_line(msg: Message) -> str:
    return json.dumps(message_to_dict(msg), ensure_ascii=False, separators=(",", ":"))


def _check_reply_cycles(by_id: dict[str, Message]):
    state: dict[str, int] = {}  # 0 visiting, 1 done
    for start in by_id:
        if start in state:
            continue
        chain = []
        cur: Optional[str] = start
        while cur is not None and cur in by_id and cur not in state:
            state[cur] = 0
            chain.append(cur)
            cur = by_id[cur].reply_to
        if cur is not None and state.get(cur) == 0:
            raise EventLogError(f"reply cycle through message {cur!r}", line=0)
        for c in chain:
            state[c] = 1


def parse_event_log(source: Union[str, Iterable[str], io.TextIOBase]) -> EventLog:
    """Parse JSONL into a log sorted by (ts, id).

    Raises EventLogError with the offending line number for malformed lines,
    duplicate ids, and reply cycles.
    """
    if isinstance(source, str):
        with open(source, encoding="utf-8") as fh:
            return parse_event_log(fh)
    messages: list[Message] = []
    by_id: dict[str, Message] = {}
    for line_no, line in enumerate(source, 1):
        stripped = line.strip()
        if not stripped:
            continue
        try:
            data = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise EventLogError(f"invalid JSON: {exc.msg}", line=line_no)
        if not isinstance(data, dict):
            raise EventLogError("line is not a JSON object", line=line_no)
        try:
            msg = message_from_dict(data)
        except ValueError as exc:
            raise EventLogError(str(exc), line=line_no)
        if msg.id in by_id:
            raise EventLogError(f"duplicate message id {msg.id!r}", line=line_no)
        by_id[msg.id] = msg
        messages.append(msg)
    _check_reply_cycles(by_id)
    messages.sort(key=lambda m: (m.ts, m.id))
    return EventLog(messages=tuple(messages))


def serialize_event_log(log: EventLog) -> str:
    """One JSON object per line, in log order, trailing newline included."""
    if not log.messages:
        return ""
    return "\n".join(message_to_line(m) for m in log.messages) + "\n"


def write_event_log(log: EventLog, path: str):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_event_log(log))


# ---------------------------------------------------------------------------
# Replay


@dataclass(frozen=True)
class ReplayReport:
    delivered: int
    final_sim_time: Optional[float]  # None for an empty log


def replay(
    log: EventLog,
    sink: Callable[[Message], None],
    speed: Union[float, str] = "instant",
) -> ReplayReport:
    """Deliver the log to the sink in timestamp order.

    The simulated clock is the message timeline itself: at numeric `speed`
    the gap between consecutive timestamps is slept at 1/speed scale, while
    "instant" skips all waiting. The sink sequence is identical either way.
    A sink exception aborts the run, reporting the 0-based position.
    """
    if speed != "instant":
        speed = float(speed)
        if speed <= 0:
            raise ValueError("speed must be positive or 'instant'")
    sim_time: Optional[float] = None
    delivered = 0
    for pos, msg in enumerate(log.messages):
        if speed != "instant" and sim_time is not None and msg.ts > sim_time:
            time.sleep((msg.ts - sim_time) / speed)
        sim_time = msg.ts
        try:
            sink(msg)
        except Exception as exc:
            raise SinkError(str(exc), position=pos) from exc
        delivered += 1
    return ReplayReport(delivered=delivered, final_sim_time=sim_time)


# ---------------------------------------------------------------------------
# Source adapters


class SourceAdapter(Protocol):
    """Contract kept by anything that can hand messages to the engine.

    Live network harvesters would implement this; only replay and synthetic
    adapters ship here.
    """

    def poll(self, since: float) -> list[Message]: ...

    def describe(self) -> dict: ...


class LogAdapter:
    """Adapter view over a parsed or generated log."""

    def __init__(self, log: EventLog, name: str = "replay"):
        self._log = log
        self._name = name

    def poll(self, since: float) -> list[Message]:
        return [m for m in self._log.messages if m.ts > since]

    def describe(self) -> dict:
        return {"name": self._name, "kind": "log", "count": len(self._log)}
