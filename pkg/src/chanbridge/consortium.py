"""Minimal consortium blockchain: ordered intake, round-robin authority
block production, deterministic contract dispatch and a queryable event log.

There is no gas and no currency: a call either applies atomically or is
recorded as a failed event with the state untouched.  Every block carries a
state root (hash of the canonical serialization of all contract state), so
replaying the transaction log must reproduce the chain bit-for-bit.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .contract import BridgeContract, CallContext, ContractError, ServiceContract

__all__ = ["ConsortiumError", "ConsortiumTx", "ConsortiumBlock", "ConsortiumChain"]

SYSTEM = "system"
NOTICEBOARD = "noticeboard"


class ConsortiumError(ValueError):
    """Transaction refused at intake (bad nonce, unknown target)."""


@dataclass(frozen=True)
class ConsortiumTx:
    caller: str
    target: str
    fn: str
    args: dict
    nonce: int

    def to_json(self) -> dict:
        return {
            "caller": self.caller,
            "target": self.target,
            "fn": self.fn,
            "args": self.args,
            "nonce": self.nonce,
        }

    @classmethod
    def from_json(cls, data: dict) -> "ConsortiumTx":
        return cls(data["caller"], data["target"], data["fn"], dict(data["args"]), data["nonce"])


@dataclass(frozen=True)
class ConsortiumBlock:
    height: int
    authority: str
    txs: tuple[ConsortiumTx, ...]
    state_root: str


@dataclass
class _Counters:
    calls: dict = field(default_factory=dict)

    def bump(self, fn: str) -> None:
        self.calls[fn] = self.calls.get(fn, 0) + 1


class ConsortiumChain:
    def __init__(self, authority_count: int = 4):
        self.authorities = [f"authority-{i}" for i in range(authority_count)]
        self.contracts: dict[str, object] = {}
        self.blocks: list[ConsortiumBlock] = []
        self.events: list[dict] = []
        self.op_counts = _Counters()
        self._pending: list[ConsortiumTx] = []
        self._next_nonce: dict[str, int] = {}

    @property
    def height(self) -> int:
        return len(self.blocks)

    # -- intake ---------------------------------------------------------------

    def next_nonce(self, caller: str) -> int:
        return self._next_nonce.get(caller, 0)

    def submit(self, tx: ConsortiumTx) -> int:
        """Queue a transaction for the next block; returns its queue position."""
        expected = self._next_nonce.get(tx.caller, 0)
        if tx.nonce != expected:
            raise ConsortiumError(f"bad nonce {tx.nonce} for {tx.caller}, expected {expected}")
        if tx.target not in (SYSTEM, NOTICEBOARD) and not self._target_known(tx.target):
            raise ConsortiumError(f"unknown contract {tx.target!r}")
        self._next_nonce[tx.caller] = expected + 1
        self._pending.append(tx)
        return len(self._pending) - 1

    def _target_known(self, target: str) -> bool:
        if target in self.contracts:
            return True
        return any(
            p.target == SYSTEM and p.fn == "deploy" and p.args.get("id") == target
            for p in self._pending
        )

    # -- block production -------------------------------------------------------

    def produce_block(self) -> ConsortiumBlock:
        height = self.height + 1
        applied = tuple(self._pending)
        self._pending = []
        for index, tx in enumerate(applied):
            event = {
                "block": height,
                "index": index,
                "caller": tx.caller,
                "contract": tx.target,
                "fn": tx.fn,
                "outcome": "ok",
                "args": tx.args,
            }
            try:
                result = self._apply(tx, height)
                event["result"] = result
                self.op_counts.bump(tx.fn)
            except ContractError as exc:
                event["outcome"] = "fail"
                event["error"] = str(exc)
            self.events.append(event)
        block = ConsortiumBlock(
            height=height,
            authority=self.authorities[(height - 1) % len(self.authorities)],
            txs=applied,
            state_root=self.state_root(),
        )
        self.blocks.append(block)
        return block

    def _apply(self, tx: ConsortiumTx, height: int):
        if tx.target == SYSTEM:
            if tx.fn != "deploy":
                raise ContractError(f"unknown system call {tx.fn!r}")
            return self._deploy(tx.caller, tx.args)
        if tx.target == NOTICEBOARD:
            if tx.fn != "announce":
                raise ContractError(f"unknown noticeboard call {tx.fn!r}")
            return {"announced": True}
        contract = self.contracts.get(tx.target)
        if contract is None:
            raise ContractError(f"unknown contract {tx.target!r}")
        method = contract.api.get(tx.fn)
        if method is None:
            raise ContractError(f"{tx.target} has no function {tx.fn!r}")
        return method(CallContext(tx.caller, height), tx.args)

    def _deploy(self, caller: str, args: dict):
        contract_id = args["id"]
        if contract_id in self.contracts:
            raise ContractError(f"contract id {contract_id!r} already in use")
        kind = args["kind"]
        if kind == "service":
            self.contracts[contract_id] = ServiceContract(contract_id, caller)
        elif kind == "bridge":
            service = self.contracts.get(args["service"])
            if not isinstance(service, ServiceContract):
                raise ContractError(f"no service contract {args.get('service')!r}")
            self.contracts[contract_id] = BridgeContract(
                contract_id, provider=caller, user=args["user"],
                service=service, fee=int(args["fee"]),
            )
        else:
            raise ContractError(f"unknown contract kind {kind!r}")
        return {"deployed": contract_id}

    # -- reads ------------------------------------------------------------------

    def view(self, target: str, fn: str, *args):
        """Read-only contract call; no transaction, no block, no state change."""
        contract = self.contracts.get(target)
        if contract is None:
            raise ConsortiumError(f"unknown contract {target!r}")
        method = contract.views.get(fn)
        if method is None:
            raise ConsortiumError(f"{target} has no view {fn!r}")
        try:
            return method(*args)
        except ContractError as exc:
            raise ConsortiumError(str(exc)) from exc

    def query_events(self, contract: str | None = None, fn: str | None = None,
                     outcome: str | None = None, caller: str | None = None,
                     since_block: int | None = None, until_block: int | None = None) -> list[dict]:
        out = []
        for event in self.events:
            if contract is not None and event["contract"] != contract:
                continue
            if fn is not None and event["fn"] != fn:
                continue
            if outcome is not None and event["outcome"] != outcome:
                continue
            if caller is not None and event["caller"] != caller:
                continue
            if since_block is not None and event["block"] < since_block:
                continue
            if until_block is not None and event["block"] > until_block:
                continue
            out.append(event)
        return out

    # -- audit --------------------------------------------------------------------

    def state_root(self) -> str:
        state = {cid: contract.state_dict() for cid, contract in sorted(self.contracts.items())}
        canonical = json.dumps(state, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    def tx_log(self) -> list[list[dict]]:
        """Per-block transaction log, JSON form; input to replay()."""
        return [[tx.to_json() for tx in block.txs] for block in self.blocks]

    def dump_ndjson(self) -> str:
        """Blocks and events as newline-delimited JSON, in chain order."""
        lines = []
        for block in self.blocks:
            lines.append(json.dumps({
                "kind": "block",
                "height": block.height,
                "authority": block.authority,
                "txs": [tx.to_json() for tx in block.txs],
                "state_root": block.state_root,
            }, separators=(",", ":")))
        for event in self.events:
            lines.append(json.dumps({"kind": "event", **event}, separators=(",", ":")))
        return "\n".join(lines) + "\n" if lines else ""

    @classmethod
    def replay(cls, tx_log: list[list[dict]], authority_count: int = 4) -> "ConsortiumChain":
        """Rebuild a chain from a transaction log, block grouping preserved."""
        chain = cls(authority_count)
        for block_txs in tx_log:
            for raw in block_txs:
                chain.submit(ConsortiumTx.from_json(raw))
            chain.produce_block()
        return chain
