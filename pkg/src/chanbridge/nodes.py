"""User and service-provider node drivers.

Nodes never talk to each other directly: every payment, cancellation step
and settlement flows through the two chains.  Chain access goes through
counting clients so scenarios can assert the no-monitoring property (the
payer performs no Bitcoin reads while the channel is open).

The block clocks only advance under explicit control, shared between the
nodes and the scenario driver, so every run is deterministic.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from . import script as sc
from .consortium import ConsortiumChain, ConsortiumTx
from .crypto import KeyPair, PublicKey, RecoverableSignature, eth_address, hash160, sha256, sha256d
from .ledger import Ledger, build_funding_redeem, build_funding_tx, funding_lock_script
from .templates import (
    ChannelParams,
    FundingRef,
    TransactionTemplate,
    build_template,
    complete_transaction,
    signature_form,
    validate_template,
)
from .tx import Transaction, TxInput, TxOutput, bip143_preimage, legacy_sighash_preimage
from .trace import Trace

__all__ = [
    "ChannelConfig", "ProtocolError", "Clock", "LedgerClient", "ConsortiumClient",
    "DirectBus", "UserNode", "ProviderNode", "hashlock_spend", "timeout_spend",
]

BRIDGE_ID = "bridge-1"
SERVICE_ID = "service-1"


class ProtocolError(RuntimeError):
    """A node could not carry its protocol step to completion."""


@dataclass(frozen=True)
class ChannelConfig:
    deposit: int = 100_000_000
    fee: int = 10_000
    funding_timelock: int = 100
    update_timelock: int = 110
    mode: str = "legacy"  # legacy | segwit
    bidirectional: bool = False
    confirmations: int = 6

    def capacity(self) -> int:
        return self.deposit - self.fee


class Clock:
    """Harness-owned handle that advances both chains and records the trace."""

    def __init__(self, ledger: Ledger, consortium: ConsortiumChain, trace: Trace):
        self.ledger = ledger
        self.consortium = consortium
        self.trace = trace

    def record(self, actor: str, chain: str, action: str, payload: dict) -> None:
        self.trace.record(actor, chain, action, payload,
                          self.ledger.height, self.consortium.height)

    def mine(self, blocks: int = 1) -> int:
        for _ in range(blocks):
            height = self.ledger.mine_block()
            block = self.ledger.blocks[-1]
            self.record("harness", "bitcoin", "mine-block",
                        {"height": height, "txids": [t.hex() for t in block.txids],
                         "fees": block.fees})
        return self.ledger.height

    def produce_block(self):
        before = len(self.consortium.events)
        block = self.consortium.produce_block()
        for event in self.consortium.events[before:]:
            payload = dict(event)
            self.record(event["caller"], "consortium", f"call:{event['fn']}", payload)
        self.record("harness", "consortium", "produce-block",
                    {"height": block.height, "authority": block.authority,
                     "state_root": block.state_root, "txs": len(block.txs)})
        return block


class LedgerClient:
    """Per-actor Bitcoin access with read counting."""

    def __init__(self, ledger: Ledger, actor: str, clock: Clock):
        self.ledger = ledger
        self.actor = actor
        self.clock = clock
        self.reads = 0

    def submit(self, tx: Transaction, kind: str) -> bytes:
        try:
            txid = self.ledger.submit_tx(tx)
        except Exception as exc:
            self.clock.record(self.actor, "bitcoin", "submit-rejected",
                              {"kind": kind, "error": str(exc)})
            raise
        self.clock.record(self.actor, "bitcoin", "submit-tx",
                          {"kind": kind, "txid": txid.hex(),
                           "outputs": [out.value for out in tx.outputs]})
        return txid

    def height(self) -> int:
        self.reads += 1
        return self.ledger.height

    def utxo(self, txid: bytes, index: int):
        self.reads += 1
        return self.ledger.utxo(txid, index)

    def get_tx(self, txid: bytes):
        self.reads += 1
        return self.ledger.get_tx(txid)

    def utxos_paying(self, script: bytes):
        self.reads += 1
        return self.ledger.utxos_paying(script)

    def balance(self, script: bytes) -> int:
        self.reads += 1
        return self.ledger.balance(script)


class ConsortiumClient:
    """Per-actor consortium access: auto-nonced calls plus counted reads."""

    def __init__(self, chain: ConsortiumChain, actor: str, clock: Clock):
        self.chain = chain
        self.actor = actor
        self.clock = clock
        self.reads = 0

    def call(self, target: str, fn: str, args: dict) -> None:
        tx = ConsortiumTx(self.actor, target, fn, args, self.chain.next_nonce(self.actor))
        self.chain.submit(tx)
        self.clock.record(self.actor, "consortium", "submit-call",
                          {"target": target, "fn": fn, "nonce": tx.nonce})

    def call_and_apply(self, target: str, fn: str, args: dict) -> dict:
        """Submit, let the next block apply it, return that call's event."""
        self.call(target, fn, args)
        self.clock.produce_block()
        for event in reversed(self.chain.events):
            if event["caller"] == self.actor and event["fn"] == fn:
                return event
        raise ProtocolError(f"no event recorded for {fn}")

    def view(self, target: str, fn: str, *args):
        self.reads += 1
        return self.chain.view(target, fn, *args)

    def events(self, **filters) -> list[dict]:
        self.reads += 1
        return self.chain.query_events(**filters)


class DirectBus:
    """Off-chain side channel between the parties.

    The protocol never needs it; scenarios assert it stays empty.
    """

    def __init__(self):
        self.log: list[dict] = []

    def send(self, sender: str, recipient: str, payload: dict) -> None:
        self.log.append({"from": sender, "to": recipient, "payload": payload})


# ---------------------------------------------------------------------------
# Script-path spends shared by both nodes


def _branch_spend(prev_txid: bytes, vout: int, prev_value: int, control: bytes,
                  mode: str, nested: bool, sequence: int, dest_script: bytes,
                  fee: int, key: KeyPair, witness_items) -> Transaction:
    """Spend a script output down one branch of its control script.

    ``witness_items(sig_wire)`` returns the unlock items below the script
    push, bottom first.  ``nested`` marks the P2SH-wrapped witness program
    used by deposits in segwit mode.
    """
    tx = Transaction(
        version=2,
        inputs=[TxInput(prev_txid, vout, b"", sequence)],
        outputs=[TxOutput(prev_value - fee, dest_script)],
    )
    if mode == "segwit":
        tx.witnesses = [[]]
        digest = sha256d(bip143_preimage(tx, 0, control, prev_value))
        items = witness_items(key.sign(digest).wire())
        tx.witnesses = [[*items, control]]
        if nested:
            tx.inputs[0].script_sig = sc.push(sc.p2wsh_script(sha256(control)))
    else:
        digest = sha256d(legacy_sighash_preimage(tx, 0, control))
        items = witness_items(key.sign(digest).wire())
        parts = b"".join(sc.push(item) if item else bytes([sc.OP_0]) for item in items)
        tx.inputs[0].script_sig = parts + sc.push(control)
    return tx


def hashlock_spend(prev_txid: bytes, vout: int, prev_value: int, redeem: bytes,
                   preimage: bytes, dest_script: bytes, fee: int, key: KeyPair,
                   mode: str) -> Transaction:
    """Immediate spend of a remittance output using the disclosed pre-image."""
    return _branch_spend(prev_txid, vout, prev_value, redeem, mode, nested=False,
                         sequence=0xFFFFFFFF, dest_script=dest_script, fee=fee, key=key,
                         witness_items=lambda sig: [sig, preimage, b"\x01"])


def timeout_spend(prev_txid: bytes, vout: int, prev_value: int, control: bytes,
                  timelock: int, dest_script: bytes, fee: int, key: KeyPair,
                  mode: str, nested: bool) -> Transaction:
    """Spend of the delayed branch; the input sequence carries the lock."""
    return _branch_spend(prev_txid, vout, prev_value, control, mode, nested=nested,
                         sequence=timelock, dest_script=dest_script, fee=fee, key=key,
                         witness_items=lambda sig: [sig, b""])


# ---------------------------------------------------------------------------
# Nodes


class _NodeBase:
    def __init__(self, name: str, key: KeyPair, config: ChannelConfig, clock: Clock,
                 bus: DirectBus):
        self.name = name
        self.key = key
        self.config = config
        self.clock = clock
        self.bus = bus
        self.btc = LedgerClient(clock.ledger, name, clock)
        self.cons = ConsortiumClient(clock.consortium, name, clock)

    def wallet_scripts(self) -> list[bytes]:
        pkh = self.key.pub.hash160()
        return [sc.p2pkh_script(pkh), sc.p2wpkh_script(pkh)]

    def wallet_balance(self) -> int:
        return sum(self.btc.balance(script) for script in self.wallet_scripts())

    def change_script(self) -> bytes:
        pkh = self.key.pub.hash160()
        return sc.p2wpkh_script(pkh) if self.config.mode == "segwit" else sc.p2pkh_script(pkh)


class UserNode(_NodeBase):
    """The payer: opens the channel, pays, cancels, refunds, punishes."""

    def __init__(self, key: KeyPair, peer_pubkey: bytes, config: ChannelConfig,
                 clock: Clock, bus: DirectBus):
        super().__init__("user", key, config, clock, bus)
        self.peer_pubkey = peer_pubkey
        self.funding: FundingRef | None = None
        self.payments = 0
        self.amount = 0
        self.templates_seen: dict[int, TransactionTemplate] = {}
        self.preimages: dict[int, bytes] = {}
        self.pending_cancel: int | None = None

    # -- setup ---------------------------------------------------------------

    def open_channel(self) -> bytes:
        """Broadcast the deposit, wait out the confirmations, register it."""
        cfg = self.config
        tx, control = build_funding_tx(self.clock.ledger, self.key,
                                       _decode_pub(self.peer_pubkey), cfg.deposit,
                                       cfg.funding_timelock, cfg.fee, cfg.mode)
        txid = self.btc.submit(tx, "funding")
        self.clock.mine(cfg.confirmations)
        self.funding = FundingRef(txid, 0, control)
        lock = funding_lock_script(control, cfg.mode)
        event = self.cons.call_and_apply(BRIDGE_ID, "set_deposit", {
            "script_hash": lock[2:22].hex(),
            "funding_txid": txid.hex(),
            "funding_vout": 0,
            "pk_user": self.key.pub.encode().hex(),
            "pk_provider": self.peer_pubkey.hex(),
            "timelock": cfg.funding_timelock,
            "amount": cfg.deposit,
            "payer_address": eth_address(self.key.pub).hex(),
        })
        if event["outcome"] != "ok":
            raise ProtocolError(f"deposit registration failed: {event.get('error')}")
        return txid

    # -- payment ---------------------------------------------------------------

    def _channel_params(self) -> ChannelParams:
        return ChannelParams(self.key.pub.encode(), self.peer_pubkey,
                             self.funding.txid, self.funding.vout,
                             self.config.funding_timelock, self.config.bidirectional)

    def fetch_template(self) -> TransactionTemplate:
        """Read the registered template and screen it locally before signing."""
        view = self.cons.view(BRIDGE_ID, "get_template")
        redeem = bytes.fromhex(view["redeem"]) if view["redeem"] else None
        template = TransactionTemplate.from_bytes(
            bytes.fromhex(view["template"]), self.funding.control,
            self.key.pub.encode(), self.peer_pubkey, redeem,
        )
        violations = validate_template(template, self._channel_params())
        if violations:
            raise ProtocolError("template failed local screening: " + "; ".join(violations))
        if self.config.bidirectional and template.timelock <= self.config.funding_timelock:
            raise ProtocolError("template time-lock does not outlast the deposit lock")
        self.templates_seen[view["generation"]] = template
        return template

    def _submit_update(self, template: TransactionTemplate, amount: int) -> dict:
        digest = signature_form(template, amount, self.config.deposit, self.config.fee).digest()
        sig = self.key.sign(digest)
        event = self.cons.call_and_apply(BRIDGE_ID, "update", {
            "amount": amount,
            "v": sig.v,
            "r": f"{sig.r:064x}",
            "s": f"{sig.s:064x}",
        })
        return event

    def pay(self, amount: int) -> dict:
        """One non-interactive payment: sign against the published template."""
        if self.funding is None:
            raise ProtocolError("channel not open")
        target = self.amount + amount
        if target > self.config.capacity():
            raise ProtocolError(
                f"payment would exceed capacity: {target} > {self.config.capacity()}")
        template = self.fetch_template()
        event = self._submit_update(template, target)
        if event["outcome"] != "ok":
            raise ProtocolError(f"payment rejected: {event.get('error')}")
        self.amount = target
        self.payments += 1
        return event["result"]["result"]

    # -- cancellation (payer side) ---------------------------------------------

    def request_cancel(self, amount: int) -> None:
        """Step 1: put the cancel request on the consortium chain."""
        if not self.config.bidirectional:
            raise ProtocolError("channel does not support cancellation")
        if not 0 < amount <= self.amount:
            raise ProtocolError(f"cannot cancel {amount} of {self.amount}")
        self.cons.call_and_apply("noticeboard", "announce", {
            "topic": "cancel-request",
            "channel": BRIDGE_ID,
            "amount": amount,
        })
        self.pending_cancel = amount

    def complete_cancel(self) -> dict:
        """Step 3: accept the provider's new hash by signing the lower amount."""
        if self.pending_cancel is None:
            raise ProtocolError("no cancellation requested")
        before = set(self.templates_seen)
        template = self.fetch_template()
        new_generations = set(self.templates_seen) - before
        if not new_generations:
            raise ProtocolError("provider has not replaced the template yet")
        target = self.amount - self.pending_cancel
        event = self._submit_update(template, target)
        if event["outcome"] != "ok":
            raise ProtocolError(f"cancellation update rejected: {event.get('error')}")
        self.amount = target
        self.pending_cancel = None
        return event["result"]["result"]

    def sync_disclosed(self) -> dict[int, bytes]:
        """Collect pre-images the provider has published, keyed by generation."""
        events = self.cons.events(contract=BRIDGE_ID, fn="disclose_preimage", outcome="ok")
        for index, event in enumerate(events):
            self.preimages[index] = bytes.fromhex(event["result"]["disclosed"])
        return dict(self.preimages)

    # -- exits -------------------------------------------------------------------

    def observe_settlement(self, txid: bytes) -> dict:
        """Read the provider's settlement once it lands."""
        tx = self.btc.get_tx(txid)
        if tx is None:
            raise ProtocolError("settlement not found on the ledger")
        return {"txid": txid.hex(), "outputs": [out.value for out in tx.outputs]}

    def refund_after_expiry(self) -> bytes:
        """Reclaim the whole deposit through the refund branch."""
        cfg = self.config
        tx = timeout_spend(self.funding.txid, self.funding.vout, cfg.deposit,
                           self.funding.control, cfg.funding_timelock,
                           self.change_script(), cfg.fee, self.key, cfg.mode,
                           nested=cfg.mode == "segwit")
        txid = self.btc.submit(tx, "refund")
        self.clock.mine(1)
        return txid

    def punish_old_state(self, settlement_txid: bytes) -> bytes:
        """Seize a retired settlement's remittance output with its pre-image."""
        settlement = self.btc.get_tx(settlement_txid)
        if settlement is None:
            raise ProtocolError("settlement not found on the ledger")
        self.sync_disclosed()
        lock = settlement.outputs[0].script_pubkey
        for generation, template in sorted(self.templates_seen.items()):
            if template.redeem is None or template.remit_script() != lock:
                continue
            preimage = self.preimages.get(generation)
            if preimage is None:
                continue
            tx = hashlock_spend(settlement_txid, 0, settlement.outputs[0].value,
                                template.redeem, preimage, self.change_script(),
                                self.config.fee, self.key, self.config.mode)
            txid = self.btc.submit(tx, "punish")
            self.clock.mine(1)
            return txid
        raise ProtocolError("no disclosed pre-image matches that settlement")


class ProviderNode(_NodeBase):
    """The payee: deploys the contracts, registers templates, settles."""

    def __init__(self, key: KeyPair, peer_pubkey: bytes, peer_identity: str,
                 config: ChannelConfig, clock: Clock, bus: DirectBus, rng: random.Random):
        super().__init__("sp", key, config, clock, bus)
        self.peer_pubkey = peer_pubkey
        self.peer_identity = peer_identity
        self.rng = rng
        self.preimages: list[bytes] = []
        self.handled_requests = 0

    # -- setup ---------------------------------------------------------------

    def deploy_contracts(self) -> None:
        self.cons.call("system", "deploy", {"kind": "service", "id": SERVICE_ID})
        self.cons.call("system", "deploy", {
            "kind": "bridge", "id": BRIDGE_ID, "service": SERVICE_ID,
            "user": self.peer_identity, "fee": self.config.fee,
        })
        self.clock.produce_block()

    def _deposit_record(self) -> dict:
        events = self.cons.events(contract=BRIDGE_ID, fn="set_deposit", outcome="ok")
        if not events:
            raise ProtocolError("no deposit registered yet")
        return events[-1]["args"]

    def _funding_ref(self) -> FundingRef:
        record = self._deposit_record()
        control = build_funding_redeem(self.peer_pubkey, self.key.pub.encode(),
                                       int(record["timelock"]))
        return FundingRef(bytes.fromhex(record["funding_txid"]),
                          int(record["funding_vout"]), control)

    def register_template(self) -> None:
        """Screen the deposit on the Bitcoin chain, then publish the template."""
        cfg = self.config
        funding = self._funding_ref()
        entry = self.btc.utxo(funding.txid, funding.vout)
        if entry is None:
            raise ProtocolError("deposit outpoint not found or already spent")
        confirmations = self.btc.height() - entry.height + 1
        if confirmations < cfg.confirmations:
            raise ProtocolError(f"deposit has {confirmations} confirmations, "
                                f"need {cfg.confirmations}")
        if entry.output.value != cfg.deposit:
            raise ProtocolError("deposit value does not match the agreement")
        if entry.output.script_pubkey != funding_lock_script(funding.control, cfg.mode):
            raise ProtocolError("deposit script is not the agreed channel lock")
        if cfg.bidirectional:
            preimage = self.rng.randbytes(32)
            self.preimages.append(preimage)
            template = _make_template(cfg, funding, self.peer_pubkey, self.key.pub.encode(),
                                      hash160(preimage))
            args = {"template": template.to_bytes().hex(), "redeem": template.redeem.hex()}
        else:
            template = _make_template(cfg, funding, self.peer_pubkey, self.key.pub.encode(), None)
            args = {"template": template.to_bytes().hex()}
        event = self.cons.call_and_apply(BRIDGE_ID, "set_template", args)
        if event["outcome"] != "ok":
            raise ProtocolError(f"template rejected: {event.get('error')}")

    # -- cancellation (payee side) ----------------------------------------------

    def handle_cancel(self) -> bool:
        """Step 2: answer the oldest unhandled cancel request with a fresh hash."""
        requests = [event for event in self.cons.events(contract="noticeboard", fn="announce")
                    if event["args"].get("topic") == "cancel-request"]
        if len(requests) <= self.handled_requests:
            return False
        request = requests[self.handled_requests]
        self.handled_requests += 1
        state = self.cons.view(BRIDGE_ID, "get_state")
        amount = int(request["args"]["amount"])
        if state["latest"] is None or not 0 < amount < state["latest"]["amount"]:
            return False  # unanswerable request; no agreement forms
        funding = self._funding_ref()
        preimage = self.rng.randbytes(32)
        template = _make_template(self.config, funding, self.peer_pubkey,
                                  self.key.pub.encode(), hash160(preimage))
        event = self.cons.call_and_apply(BRIDGE_ID, "replace_template", {
            "template": template.to_bytes().hex(),
            "redeem": template.redeem.hex(),
        })
        if event["outcome"] != "ok":
            raise ProtocolError(f"template replacement rejected: {event.get('error')}")
        self.preimages.append(preimage)
        return True

    def finalize_cancel(self) -> dict:
        """Step 4: the reduced amount is in; publish the retired pre-image."""
        state = self.cons.view(BRIDGE_ID, "get_state")
        if not state["cancel_pending"] or not state["cancel_update_done"]:
            raise ProtocolError("payer has not confirmed the reduced amount")
        generation = state["cancellations"]
        event = self.cons.call_and_apply(BRIDGE_ID, "disclose_preimage", {
            "preimage": self.preimages[generation].hex(),
        })
        if event["outcome"] != "ok":
            raise ProtocolError(f"pre-image disclosure rejected: {event.get('error')}")
        return event["result"]

    # -- settlement ---------------------------------------------------------------

    def snapshot_update_tx(self) -> dict:
        """Record the exportable settlement as of now (fraud scenarios keep these)."""
        return self.cons.view(BRIDGE_ID, "get_update_tx")

    def _complete_export(self, export: dict) -> Transaction:
        funding = self._funding_ref()
        redeem = bytes.fromhex(export["redeem"]) if export["redeem"] else None
        template = TransactionTemplate.from_bytes(bytes.fromhex(export["template"]),
                                                  funding.control, self.peer_pubkey,
                                                  self.key.pub.encode(), redeem)
        sig_user = RecoverableSignature(int(export["r"], 16), int(export["s"], 16),
                                        int(export["v"]))
        digest = signature_form(template, export["amount"], self.config.deposit,
                                self.config.fee).digest()
        sig_provider = self.key.sign(digest)
        return complete_transaction(template, sig_user, sig_provider, export["amount"],
                                    export["change"], self.config.deposit, self.config.fee)

    def settle(self, close_channel: bool = True) -> bytes:
        """Export the latest update, countersign, broadcast, close the bridge."""
        export = self.snapshot_update_tx()
        tx = self._complete_export(export)
        txid = self.btc.submit(tx, "settlement")
        self.clock.mine(1)
        if close_channel:
            event = self.cons.call_and_apply(BRIDGE_ID, "close", {})
            if event["outcome"] != "ok":
                raise ProtocolError(f"close rejected: {event.get('error')}")
        return txid

    def settle_snapshot(self, export: dict, close_channel: bool = True) -> bytes:
        """Broadcast a previously snapshotted (possibly retired) settlement,
        closing the bridge so no later update can contradict it."""
        tx = self._complete_export(export)
        txid = self.btc.submit(tx, "settlement-old")
        self.clock.mine(1)
        if close_channel:
            self.cons.call_and_apply(BRIDGE_ID, "close", {})
        return txid

    def sweep_settlement(self, settlement_txid: bytes) -> bytes:
        """Collect the remittance output once its time-lock has run out."""
        settlement = self.btc.get_tx(settlement_txid)
        if settlement is None:
            raise ProtocolError("settlement not found on the ledger")
        export = self.snapshot_update_tx()
        redeem = bytes.fromhex(export["redeem"])
        template = TransactionTemplate.from_bytes(bytes.fromhex(export["template"]),
                                                  self._funding_ref().control,
                                                  self.peer_pubkey, self.key.pub.encode(),
                                                  redeem)
        tx = timeout_spend(settlement_txid, 0, settlement.outputs[0].value, redeem,
                           template.timelock, self.change_script(), self.config.fee,
                           self.key, self.config.mode, nested=False)
        txid = self.btc.submit(tx, "sweep")
        self.clock.mine(1)
        return txid


def _decode_pub(pub_bytes: bytes) -> PublicKey:
    return PublicKey.decode(pub_bytes)


def _make_template(cfg: ChannelConfig, funding: FundingRef, pk_user: bytes,
                   pk_provider: bytes, hashlock: bytes | None) -> TransactionTemplate:
    if hashlock is None:
        return build_template(cfg.mode, funding, pk_user, pk_provider)
    return build_template(cfg.mode, funding, pk_user, pk_provider,
                          cfg.update_timelock, hashlock)
