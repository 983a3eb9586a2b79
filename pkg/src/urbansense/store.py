"""Durable state for the service: an append-only tail of raw applied
messages plus periodic snapshot compaction, and a separately persisted
curation document (watch topics, products, tracked users).

Enrichment and analytics are deterministic, so storing raw messages is
lossless: recovery re-applies the snapshot body and then the tail through
the same pipeline and lands on a bit-identical analytics snapshot. Both
files hold one JSON message per line; a torn final tail line (crash mid
write) is dropped with a warning, while a corrupt snapshot refuses to load
because its content was written atomically and can only be damaged.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass
from typing import Optional

from .errors import StoreCorruptError
from .ingestion import message_from_dict, message_to_line
from .model import Message

log = logging.getLogger(__name__)

SNAPSHOT_FILE = "snapshot.jsonl"
TAIL_FILE = "tail.jsonl"
CURATION_FILE = "curation.json"
DEFAULT_SNAPSHOT_EVERY = 1000


@dataclass
class RecoveredState:
    messages: list[Message]
    curation: dict
    dropped_tail_lines: int


class MessageStore:
    """Filesystem-backed store rooted at one directory."""

    def __init__(self, root: str, snapshot_every: int = DEFAULT_SNAPSHOT_EVERY):
        if snapshot_every < 1:
            raise ValueError("snapshot_every must be >= 1")
        self.root = root
        self.snapshot_every = snapshot_every
        os.makedirs(root, exist_ok=True)
        self._snapshot_path = os.path.join(root, SNAPSHOT_FILE)
        self._tail_path = os.path.join(root, TAIL_FILE)
        self._curation_path = os.path.join(root, CURATION_FILE)
        self._tail_fh = None
        self._since_snapshot = 0

    # -- recovery -------------------------------------------------------------

    def recover(self) -> RecoveredState:
        """Load snapshot + tail; returns every applied message in order.

        The tail is truncated at its last valid line; anything after (a torn
        write) is dropped with a warning. A snapshot that fails to parse is
        fatal and reports the byte offset of the damage.
        """
        messages: list[Message] = []
        if os.path.exists(self._snapshot_path):
            offset = 0
            with open(self._snapshot_path, "rb") as fh:
                for raw in fh:
                    line = raw.decode("utf-8", errors="replace").strip()
                    if line:
                        try:
                            messages.append(message_from_dict(json.loads(line)))
                        except Exception as exc:
                            raise StoreCorruptError(
                                f"snapshot damaged: {exc}", offset=offset
                            ) from exc
                    offset += len(raw)
        dropped = 0
        if os.path.exists(self._tail_path):
            valid: list[Message] = []
            valid_bytes = 0
            offset = 0
            with open(self._tail_path, "rb") as fh:
                for raw in fh:
                    offset += len(raw)
                    line = raw.decode("utf-8", errors="replace").strip()
                    if not line:
                        continue
                    try:
                        valid.append(message_from_dict(json.loads(line)))
                    except Exception:
                        dropped = 1
                        break
                    valid_bytes = offset
                rest = fh.read()
            if dropped or rest:
                # count whatever trails the last valid line, then cut it off
                with open(self._tail_path, "rb") as fh:
                    tail_rest = fh.read()[valid_bytes:]
                dropped = sum(1 for ln in tail_rest.splitlines() if ln.strip())
                log.warning(
                    "store tail truncated: dropped %d unparseable line(s)", dropped
                )
                with open(self._tail_path, "rb+") as fh:
                    fh.truncate(valid_bytes)
            messages.extend(valid)
        curation = {}
        if os.path.exists(self._curation_path):
            try:
                with open(self._curation_path, encoding="utf-8") as fh:
                    curation = json.load(fh)
            except Exception as exc:
                raise StoreCorruptError(f"curation document damaged: {exc}", offset=0) from exc
        self._since_snapshot = 0
        return RecoveredState(messages=messages, curation=curation, dropped_tail_lines=dropped)

    # -- writer side ----------------------------------------------------------

    def _tail(self):
        if self._tail_fh is None:
            self._tail_fh = open(self._tail_path, "a", encoding="utf-8")
        return self._tail_fh

    def append(self, msg: Message):
        fh = self._tail()
        fh.write(message_to_line(msg) + "\n")
        fh.flush()
        os.fsync(fh.fileno())
        self._since_snapshot += 1
        if self._since_snapshot >= self.snapshot_every:
            self.compact()

    def compact(self):
        """Fold the tail into the snapshot atomically and truncate it."""
        if self._tail_fh is not None:
            self._tail_fh.close()
            self._tail_fh = None
        tmp = self._snapshot_path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as out:
            if os.path.exists(self._snapshot_path):
                with open(self._snapshot_path, encoding="utf-8") as fh:
                    for line in fh:
                        if line.strip():
                            out.write(line if line.endswith("\n") else line + "\n")
            if os.path.exists(self._tail_path):
                with open(self._tail_path, encoding="utf-8") as fh:
                    for line in fh:
                        if line.strip():
                            out.write(line if line.endswith("\n") else line + "\n")
            out.flush()
            os.fsync(out.fileno())
        os.replace(tmp, self._snapshot_path)
        with open(self._tail_path, "w", encoding="utf-8"):
            pass
        self._since_snapshot = 0

    def save_curation(self, doc: dict):
        tmp = self._curation_path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, ensure_ascii=False, sort_keys=True)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, self._curation_path)

    def close(self):
        if self._tail_fh is not None:
            self._tail_fh.close()
            self._tail_fh = None
