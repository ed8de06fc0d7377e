"""The bridge contract: a deterministic state machine hosted on the
consortium chain that verifies channel payments on the provider's behalf.

A payment is a bare (signature, amount) pair.  The contract rebuilds the
exact signature form from the registered template, recovers the signer's
key from the recoverable signature, derives its Ethereum-style address and
compares it with the payer address registered at setup.  No signature ever
reaches the provider node directly.

The service contract is a stub that records invocations; real service
semantics live outside this engine.
"""

from __future__ import annotations

from dataclasses import dataclass

from .crypto import SignatureError, ecdsa_recover, eth_address, hash160, sha256d
from .ledger import build_funding_redeem
from .templates import (
    ChannelParams,
    TemplateError,
    TransactionTemplate,
    signature_form,
    validate_template,
)

__all__ = ["ContractError", "CallContext", "DepositInfo", "ServiceContract", "BridgeContract"]


class ContractError(ValueError):
    """Rejected contract call; the surrounding block application records it."""


@dataclass(frozen=True)
class CallContext:
    caller: str
    height: int


@dataclass(frozen=True)
class DepositInfo:
    """The deposit record registered at setup.

    Carries everything the contract later needs to rebuild signature forms
    and screen templates: the outpoint, both channel keys and the deposit's
    refund time-lock.
    """

    script_hash: bytes
    funding_txid: bytes
    funding_vout: int
    pk_user: bytes
    pk_provider: bytes
    timelock: int

    def to_json(self) -> dict:
        return {
            "script_hash": self.script_hash.hex(),
            "funding_txid": self.funding_txid.hex(),
            "funding_vout": self.funding_vout,
            "pk_user": self.pk_user.hex(),
            "pk_provider": self.pk_provider.hex(),
            "timelock": self.timelock,
        }


class ServiceContract:
    """Invocation-recording stub standing in for a real service."""

    def __init__(self, contract_id: str, owner: str):
        self.contract_id = contract_id
        self.owner = owner
        self.log: list[dict] = []

    def invoke(self, amount_delta: int, height: int) -> dict:
        self.log.append({"kind": "invoke", "delta": amount_delta, "block": height})
        return {"ack": len(self.log)}

    def revoke(self, height: int) -> dict:
        self.log.append({"kind": "revoke", "delta": 0, "block": height})
        return {"ack": len(self.log)}

    def state_dict(self) -> dict:
        return {"type": "service", "owner": self.owner, "log": list(self.log)}

    # consortium dispatch surface; direct calls come only from the bridge
    @property
    def api(self) -> dict:
        return {}

    @property
    def views(self) -> dict:
        return {"get_log": lambda: list(self.log)}


def _hex(value: bytes | None) -> str | None:
    return None if value is None else value.hex()


class BridgeContract:
    """Payment-verification contract for one channel."""

    def __init__(self, contract_id: str, provider: str, user: str,
                 service: ServiceContract, fee: int):
        self.contract_id = contract_id
        self.provider = provider
        self.user = user
        self.service = service
        self.fee = fee

        self.deposit: DepositInfo | None = None
        self.deposit_amount = 0
        self.payer_address: bytes | None = None

        self.template: TransactionTemplate | None = None
        self.template_bytes: bytes | None = None
        self.redeem: bytes | None = None
        self.template_generation = 0  # bumped by every replacement

        # last accepted payment, pinned to the template it verified against
        # so the settlement export stays well-formed mid-cancellation
        self.latest: dict | None = None

        self.cancellations = 0
        self.disclosed: list[bytes] = []
        self.used_hashlocks: list[bytes] = []
        self.retired_hashlock: bytes | None = None
        self.cancel_pending = False
        self.cancel_update_done = False
        self.closed = False

    # -- dispatch surface ---------------------------------------------------

    @property
    def api(self) -> dict:
        return {
            "set_deposit": self.set_deposit,
            "set_template": self.set_template,
            "update": self.update,
            "replace_template": self.replace_template,
            "disclose_preimage": self.disclose_preimage,
            "close": self.close,
        }

    @property
    def views(self) -> dict:
        return {
            "get_template": self.get_template,
            "get_update_tx": self.get_update_tx,
            "get_state": self.state_dict,
        }

    # -- helpers ------------------------------------------------------------

    def _require(self, condition: bool, message: str) -> None:
        if not condition:
            raise ContractError(message)

    def _channel_params(self, bidirectional: bool) -> ChannelParams:
        dep = self.deposit
        return ChannelParams(dep.pk_user, dep.pk_provider, dep.funding_txid,
                             dep.funding_vout, dep.timelock, bidirectional)

    def _parse_template(self, raw: bytes, redeem: bytes | None) -> TransactionTemplate:
        dep = self.deposit
        control = build_funding_redeem(dep.pk_user, dep.pk_provider, dep.timelock)
        try:
            return TransactionTemplate.from_bytes(raw, control, dep.pk_user,
                                                  dep.pk_provider, redeem)
        except (TemplateError, ValueError) as exc:
            raise ContractError(f"undecodable template: {exc}") from exc

    # -- setup --------------------------------------------------------------

    def set_deposit(self, ctx: CallContext, args: dict) -> dict:
        self._require(ctx.caller == self.user, "set_deposit is the payer's call")
        self._require(self.deposit is None, "deposit already registered")
        amount = int(args["amount"])
        self._require(amount > 0, "deposit must be positive")
        payer_address = bytes.fromhex(args["payer_address"])
        self._require(len(payer_address) == 20, "payer address must be 20 bytes")
        self.deposit = DepositInfo(
            script_hash=bytes.fromhex(args["script_hash"]),
            funding_txid=bytes.fromhex(args["funding_txid"]),
            funding_vout=int(args["funding_vout"]),
            pk_user=bytes.fromhex(args["pk_user"]),
            pk_provider=bytes.fromhex(args["pk_provider"]),
            timelock=int(args["timelock"]),
        )
        self.deposit_amount = amount
        self.payer_address = payer_address
        return {"deposit": amount}

    def set_template(self, ctx: CallContext, args: dict) -> dict:
        self._require(ctx.caller == self.provider, "set_template is the provider's call")
        self._require(not self.closed, "channel closed")
        self._require(self.deposit is not None, "no deposit registered")
        self._require(self.template is None, "template already registered")
        raw = bytes.fromhex(args["template"])
        redeem = bytes.fromhex(args["redeem"]) if args.get("redeem") else None
        template = self._parse_template(raw, redeem)
        violations = validate_template(template, self._channel_params(redeem is not None))
        self._require(not violations, "; ".join(violations))
        self.template = template
        self.template_bytes = raw
        self.redeem = redeem
        if template.hashlock is not None:
            self.used_hashlocks.append(template.hashlock)
        return {"registered": True, "bidirectional": redeem is not None}

    # -- payment ------------------------------------------------------------

    def update(self, ctx: CallContext, args: dict) -> dict:
        self._require(not self.closed, "channel closed")
        self._require(ctx.caller == self.user, "update is the payer's call")
        self._require(self.template is not None, "no template registered")
        amount = int(args["amount"])
        latest_amount = self.latest["amount"] if self.latest else 0
        cap = self.deposit_amount - self.fee
        if self.cancel_pending:
            # agreed reduction against the freshly swapped template
            self._require(0 < amount < latest_amount,
                          f"cancellation must lower the amount below {latest_amount}")
        else:
            self._require(latest_amount < amount,
                          f"amount must exceed the current {latest_amount}")
            self._require(amount <= cap, f"amount exceeds deposit minus fee ({cap})")
        v, r, s = int(args["v"]), int(args["r"], 16), int(args["s"], 16)
        try:
            form = signature_form(self.template, amount, self.deposit_amount, self.fee)
        except TemplateError as exc:
            raise ContractError(str(exc)) from exc
        digest = sha256d(form.to_bytes())
        try:
            pubkey = ecdsa_recover(digest, v, r, s)
        except SignatureError as exc:
            raise ContractError(f"signature recovery failed: {exc}") from exc
        recovered = eth_address(pubkey)
        self._require(recovered == self.payer_address,
                      "recovered address does not match the registered payer")
        previous = latest_amount
        self.latest = {
            "v": v,
            "r": f"{r:064x}",
            "s": f"{s:064x}",
            "amount": amount,
            "template": self.template_bytes,
            "redeem": self.redeem,
        }
        if self.cancel_pending:
            self.cancel_update_done = True
        result = self.service.invoke(amount - previous, ctx.height)
        return {"amount": amount, "result": result}

    def verify(self, modtx: bytes, v: int, r: int, s: int, expected: bytes) -> bool:
        """Pure signature check: does (v, r, s) over sha256d(modtx) recover a
        key whose Ethereum-style address equals ``expected``?"""
        try:
            return eth_address(ecdsa_recover(sha256d(modtx), v, r, s)) == expected
        except SignatureError:
            return False

    # -- cancellation -------------------------------------------------------

    def replace_template(self, ctx: CallContext, args: dict) -> dict:
        self._require(ctx.caller == self.provider, "replace_template is the provider's call")
        self._require(not self.closed, "channel closed")
        self._require(self.template is not None, "no template registered")
        self._require(self.template.bidirectional, "channel does not support cancellation")
        self._require(not self.cancel_pending, "a cancellation is already pending")
        raw = bytes.fromhex(args["template"])
        redeem = bytes.fromhex(args["redeem"])
        template = self._parse_template(raw, redeem)
        violations = validate_template(template, self._channel_params(True))
        self._require(not violations, "; ".join(violations))
        self._require(template.hashlock not in self.used_hashlocks,
                      "hashlock was already used by an earlier template")
        self.retired_hashlock = self.template.hashlock
        self.template = template
        self.template_bytes = raw
        self.redeem = redeem
        self.template_generation += 1
        self.used_hashlocks.append(template.hashlock)
        self.cancel_pending = True
        self.cancel_update_done = False
        return {"replaced": True, "generation": self.template_generation}

    def disclose_preimage(self, ctx: CallContext, args: dict) -> dict:
        self._require(ctx.caller == self.provider, "disclose_preimage is the provider's call")
        self._require(not self.closed, "channel closed")
        self._require(self.cancel_pending, "no cancellation in progress")
        self._require(self.cancel_update_done,
                      "the payer has not confirmed the reduced amount yet")
        preimage = bytes.fromhex(args["preimage"])
        self._require(hash160(preimage) == self.retired_hashlock,
                      "pre-image does not match the retired hashlock")
        self.disclosed.append(preimage)
        self.cancellations += 1
        self.cancel_pending = False
        self.cancel_update_done = False
        self.retired_hashlock = None
        self.service.revoke(ctx.height)
        return {"disclosed": preimage.hex(), "cancellations": self.cancellations}

    # -- settlement ---------------------------------------------------------

    def close(self, ctx: CallContext, args: dict) -> dict:
        self._require(ctx.caller == self.provider, "close is the provider's call")
        self.closed = True
        return {"closed": True}

    # -- views --------------------------------------------------------------

    def get_template(self) -> dict:
        self._require(self.template is not None, "no template registered")
        return {
            "template": self.template_bytes.hex(),
            "redeem": _hex(self.redeem),
            "generation": self.template_generation,
        }

    def get_update_tx(self) -> dict:
        """Export the latest payment as a provider-signable settlement tuple."""
        self._require(self.latest is not None, "no payments have been made")
        amount = self.latest["amount"]
        return {
            "template": self.latest["template"].hex(),
            "redeem": _hex(self.latest["redeem"]),
            "v": self.latest["v"],
            "r": self.latest["r"],
            "s": self.latest["s"],
            "amount": amount,
            "change": self.deposit_amount - amount - self.fee,
        }

    def state_dict(self) -> dict:
        return {
            "type": "bridge",
            "provider": self.provider,
            "user": self.user,
            "service": self.service.contract_id,
            "fee": self.fee,
            "deposit": None if self.deposit is None else self.deposit.to_json(),
            "deposit_amount": self.deposit_amount,
            "payer_address": _hex(self.payer_address),
            "template": _hex(self.template_bytes),
            "redeem": _hex(self.redeem),
            "template_generation": self.template_generation,
            "latest": None
            if self.latest is None
            else {
                "v": self.latest["v"],
                "r": self.latest["r"],
                "s": self.latest["s"],
                "amount": self.latest["amount"],
                "template": self.latest["template"].hex(),
                "redeem": _hex(self.latest["redeem"]),
            },
            "cancellations": self.cancellations,
            "disclosed": [p.hex() for p in self.disclosed],
            "used_hashlocks": [h.hex() for h in self.used_hashlocks],
            "retired_hashlock": _hex(self.retired_hashlock),
            "cancel_pending": self.cancel_pending,
            "cancel_update_done": self.cancel_update_done,
            "closed": self.closed,
        }
