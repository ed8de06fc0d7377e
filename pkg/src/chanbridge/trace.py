"""Ordered scenario trace with a stable NDJSON rendering.

Every event carries the actor, the chain it touched, both chain heights at
the time, and a payload of JSON primitives.  Field order is fixed so that a
given scenario and seed produce byte-identical trace files.
"""

from __future__ import annotations

import json

__all__ = ["Trace"]


class Trace:
    def __init__(self):
        self.events: list[dict] = []

    def record(self, actor: str, chain: str, action: str, payload: dict,
               btc_height: int, cons_height: int) -> dict:
        event = {
            "seq": len(self.events),
            "actor": actor,
            "chain": chain,
            "action": action,
            "btc_height": btc_height,
            "cons_height": cons_height,
            "payload": payload,
        }
        self.events.append(event)
        return event

    def to_ndjson(self) -> str:
        return "".join(json.dumps(event, separators=(",", ":")) + "\n" for event in self.events)

    @staticmethod
    def parse_ndjson(text: str) -> list[dict]:
        return [json.loads(line) for line in text.splitlines() if line.strip()]

    def find(self, action: str | None = None, actor: str | None = None) -> list[dict]:
        out = []
        for event in self.events:
            if action is not None and event["action"] != action:
                continue
            if actor is not None and event["actor"] != actor:
                continue
            out.append(event)
        return out
