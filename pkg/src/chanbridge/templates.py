"""Transaction templates and signature forms.

A template is the incomplete settlement transaction published on the
consortium chain: outpoint and scripts fixed, both output values nil, no
signatures.  Completing one takes the remittance amount, the change and the
two party signatures.

The signature form is the byte string actually signed: the legacy in-place
form with the deposit's control script substituted into the input and the
4-byte hash type appended, or the BIP 143 pre-image in segwit mode.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import script as sc
from .crypto import PublicKey, RecoverableSignature, ecdsa_verify, hash160, sha256, sha256d
from .tx import (
    SIGHASH_ALL,
    Transaction,
    TxInput,
    TxOutput,
    bip143_preimage,
    hash_outputs,
    hash_prevouts,
    hash_sequences,
    legacy_sighash_preimage,
    write_varint,
)

__all__ = [
    "TemplateError", "FundingRef", "TransactionTemplate", "SighashForm",
    "ChannelParams", "build_redeem_script", "parse_redeem_script",
    "build_template", "signature_form", "complete_transaction",
    "validate_template",
]


class TemplateError(ValueError):
    """Template construction or completion failed its preconditions."""


@dataclass(frozen=True)
class FundingRef:
    """The deposit outpoint and the control script that unlocks it."""

    txid: bytes
    vout: int
    control: bytes  # multisig/refund script; witnessScript in segwit mode

    def witness_program(self) -> bytes:
        return sc.p2wsh_script(sha256(self.control))


def build_redeem_script(timelock: int, hashlock: bytes, pk_user: bytes, pk_provider: bytes) -> bytes:
    """Redeem script guarding a remittance output.

    The payee branch needs only its signature but waits out the relative
    time-lock; the payer branch needs the hash pre-image plus a signature
    and has no delay.
    """
    if timelock <= 0:
        raise TemplateError("timelock must be positive")
    if len(hashlock) != 20:
        raise TemplateError("hashlock must be 20 bytes")
    return (
        bytes([sc.OP_IF, sc.OP_HASH160])
        + sc.push(hashlock)
        + bytes([sc.OP_EQUALVERIFY])
        + sc.push(pk_user)
        + bytes([sc.OP_ELSE])
        + sc.push_int(timelock)
        + bytes([sc.OP_CSV, sc.OP_DROP])
        + sc.push(pk_provider)
        + bytes([sc.OP_ENDIF, sc.OP_CHECKSIG])
    )


def parse_redeem_script(redeem: bytes) -> tuple[int, bytes, bytes, bytes]:
    """Inverse of build_redeem_script: (timelock, hashlock, pk_user, pk_provider)."""
    try:
        parts = list(sc.elements(redeem))
    except sc.ScriptSyntaxError as exc:
        raise TemplateError(f"undecodable redeem script: {exc}") from exc
    expected = [
        sc.OP_IF, sc.OP_HASH160, "push", sc.OP_EQUALVERIFY, "push",
        sc.OP_ELSE, "push", sc.OP_CSV, sc.OP_DROP, "push",
        sc.OP_ENDIF, sc.OP_CHECKSIG,
    ]
    if len(parts) != len(expected):
        raise TemplateError("redeem script has unexpected shape")
    for (op, data), want in zip(parts, expected):
        if want == "push":
            if data is None and not sc.OP_1 <= op <= sc.OP_16:
                raise TemplateError("redeem script has unexpected shape")
        elif op != want or data is not None:
            raise TemplateError("redeem script has unexpected shape")
    hashlock = parts[2][1]
    pk_user = parts[4][1]
    tl_op, tl_data = parts[6]
    if tl_data is not None:
        timelock = sc.script_num_decode(tl_data, max_size=5)
    else:
        timelock = tl_op - sc.OP_1 + 1
    pk_provider = parts[9][1]
    if len(hashlock) != 20 or timelock <= 0:
        raise TemplateError("bad hashlock or timelock in redeem script")
    return timelock, hashlock, pk_user, pk_provider


@dataclass
class TransactionTemplate:
    """Incomplete settlement transaction as registered on the consortium chain."""

    mode: str  # legacy | segwit
    funding: FundingRef
    pk_user: bytes
    pk_provider: bytes
    redeem: bytes | None = None  # remittance-output redeem script (cancellable channels)
    timelock: int | None = None
    hashlock: bytes | None = None

    def __post_init__(self):
        if self.mode not in ("legacy", "segwit"):
            raise TemplateError(f"unknown mode {self.mode!r}")
        if self.redeem is not None:
            tl, hl, _, _ = parse_redeem_script(self.redeem)
            if self.timelock is None:
                self.timelock = tl
            if self.hashlock is None:
                self.hashlock = hl

    @property
    def bidirectional(self) -> bool:
        return self.redeem is not None

    def remit_script(self) -> bytes:
        """output[0] lock: provider's key hash, or the redeem-script hash."""
        if self.redeem is not None:
            if self.mode == "segwit":
                return sc.p2wsh_script(sha256(self.redeem))
            return sc.p2sh_script(hash160(self.redeem))
        provider_hash = hash160(self.pk_provider)
        if self.mode == "segwit":
            return sc.p2wpkh_script(provider_hash)
        return sc.p2pkh_script(provider_hash)

    def change_script(self) -> bytes:
        user_hash = hash160(self.pk_user)
        if self.mode == "segwit":
            return sc.p2wpkh_script(user_hash)
        return sc.p2pkh_script(user_hash)

    def skeleton(self) -> Transaction:
        """The table-form transaction: nil values, no signatures."""
        if self.mode == "segwit":
            script_sig = sc.push(self.funding.witness_program())
            witnesses = [[self.funding.control]]
        else:
            script_sig = b""
            witnesses = None
        return Transaction(
            version=2,
            inputs=[TxInput(self.funding.txid, self.funding.vout, script_sig, 0xFFFFFFFF)],
            outputs=[TxOutput(None, self.remit_script()), TxOutput(None, self.change_script())],
            witnesses=witnesses,
            locktime=0,
        )

    def to_bytes(self) -> bytes:
        return self.skeleton().serialize()

    @classmethod
    def from_bytes(cls, data: bytes, funding_control: bytes, pk_user: bytes,
                   pk_provider: bytes, redeem: bytes | None = None) -> "TransactionTemplate":
        """Rebuild a template from its wire form plus the channel constants.

        The skeleton bytes fix mode, outpoint and output scripts; the caller
        supplies what the chain knows out-of-band (deposit keys, control
        script, shared redeem script).  Round-trips byte-exactly.
        """
        skeleton = Transaction.parse(data)
        if len(skeleton.inputs) != 1:
            raise TemplateError("template must spend exactly the deposit outpoint")
        mode = "segwit" if skeleton.is_segwit else "legacy"
        txin = skeleton.inputs[0]
        template = cls(
            mode=mode,
            funding=FundingRef(txin.prev_txid, txin.prev_index, funding_control),
            pk_user=pk_user,
            pk_provider=pk_provider,
            redeem=redeem,
        )
        if template.to_bytes() != data:
            raise TemplateError("template bytes do not match the declared channel")
        return template

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "funding_txid": self.funding.txid.hex(),
            "funding_vout": self.funding.vout,
            "timelock": self.timelock,
            "hashlock": None if self.hashlock is None else self.hashlock.hex(),
            "redeem": None if self.redeem is None else self.redeem.hex(),
            "bytes": self.to_bytes().hex(),
        }


@dataclass(frozen=True)
class SighashForm:
    """The byte form a payment signature commits to.

    In segwit mode the named fields mirror the BIP 143 layout; hash_outputs
    is None until the output values are known, at which point the form can
    be serialized and hashed.
    """

    mode: str
    fields: dict

    def to_bytes(self) -> bytes:
        if self.mode == "legacy":
            modtx = self.fields["modtx"]
            if modtx is None:
                raise TemplateError("incomplete signature form")
            return modtx
        f = self.fields
        if f["hash_outputs"] is None:
            raise TemplateError("incomplete signature form (hash_outputs nil)")
        return (
            f["version"].to_bytes(4, "little")
            + f["hash_prevouts"]
            + f["hash_sequence"]
            + f["outpoint"]
            + write_varint(len(f["script_code"])) + f["script_code"]
            + f["value"].to_bytes(8, "little")
            + f["sequence"].to_bytes(4, "little")
            + f["hash_outputs"]
            + f["locktime"].to_bytes(4, "little")
            + f["hash_type"].to_bytes(4, "little")
        )

    def digest(self) -> bytes:
        return sha256d(self.to_bytes())


def _filled(template: TransactionTemplate, amount: int, change: int) -> Transaction:
    tx = template.skeleton()
    tx.outputs[0].value = amount
    tx.outputs[1].value = change
    return tx


def _segwit_form(template: TransactionTemplate, tx: Transaction, deposit: int,
                 complete: bool) -> SighashForm:
    txin = tx.inputs[0]
    fields = {
        "version": tx.version,
        "hash_prevouts": hash_prevouts(tx),
        "hash_sequence": hash_sequences(tx),
        "outpoint": txin.prev_txid + txin.prev_index.to_bytes(4, "little"),
        "script_code": template.funding.control,
        "value": deposit,
        "sequence": txin.sequence,
        "hash_outputs": hash_outputs(tx) if complete else None,
        "locktime": tx.locktime,
        "hash_type": SIGHASH_ALL,
    }
    return SighashForm("segwit", fields)


def sighash_skeleton(template: TransactionTemplate, deposit: int) -> SighashForm:
    """The template-side signature form: segwit fields with nil hash_outputs,
    or a nil legacy body (values unknown)."""
    if template.mode == "segwit":
        return _segwit_form(template, template.skeleton(), deposit, complete=False)
    return SighashForm("legacy", {"modtx": None})


def signature_form(template: TransactionTemplate, amount: int, deposit: int,
                   fee: int) -> SighashForm:
    """The exact bytes a payment of ``amount`` signs.

    Fills output[0] with the amount and output[1] with deposit - amount -
    fee; in legacy mode the deposit's control script is substituted into the
    input and the 4-byte hash type appended.
    """
    if amount <= 0:
        raise TemplateError("amount must be positive")
    if amount + fee > deposit:
        raise TemplateError(f"amount {amount} plus fee {fee} exceeds deposit {deposit}")
    change = deposit - amount - fee
    tx = _filled(template, amount, change)
    if template.mode == "segwit":
        form = _segwit_form(template, tx, deposit, complete=True)
        assert form.to_bytes() == bip143_preimage(tx, 0, template.funding.control, deposit)
        return form
    return SighashForm("legacy", {"modtx": legacy_sighash_preimage(tx, 0, template.funding.control)})


def complete_transaction(template: TransactionTemplate, sig_user: RecoverableSignature,
                         sig_provider: RecoverableSignature, amount: int, change: int,
                         deposit: int, fee: int) -> Transaction:
    """Assemble the broadcastable settlement from the template 5-tuple.

    Both signatures are checked against the signature form before assembly;
    a wrong change value surfaces here, not at the ledger.
    """
    if change != deposit - amount - fee:
        raise TemplateError(f"change {change} != deposit - amount - fee "
                            f"({deposit} - {amount} - {fee})")
    digest = signature_form(template, amount, deposit, fee).digest()
    for label, sig, pk_bytes in (
        ("user", sig_user, template.pk_user),
        ("provider", sig_provider, template.pk_provider),
    ):
        if sig is None or not ecdsa_verify(PublicKey.decode(pk_bytes), digest, sig.r, sig.s):
            raise TemplateError(f"{label} signature does not cover this payment")
    tx = _filled(template, amount, change)
    by_key = {template.pk_user: sig_user, template.pk_provider: sig_provider}
    key_lo, key_hi = sorted((template.pk_user, template.pk_provider))
    if template.mode == "segwit":
        tx.witnesses = [[b"", by_key[key_lo].wire(), by_key[key_hi].wire(), b"\x01",
                         template.funding.control]]
    else:
        tx.inputs[0].script_sig = (
            bytes([sc.OP_0])
            + sc.push(by_key[key_lo].wire())
            + sc.push(by_key[key_hi].wire())
            + bytes([sc.OP_1])
            + sc.push(template.funding.control)
        )
    return tx


def build_template(mode: str, funding: FundingRef, pk_user: bytes, pk_provider: bytes,
                   timelock: int | None = None, hashlock: bytes | None = None) -> TransactionTemplate:
    """Construct the table-form template for a channel.

    With a timelock and hashlock the template locks output[0] behind the
    two-branch redeem script (cancellable channel); with neither it pays the
    provider's key hash directly.
    """
    if (timelock is None) != (hashlock is None):
        raise TemplateError("timelock and hashlock must be given together")
    redeem = None
    if timelock is not None:
        redeem = build_redeem_script(timelock, hashlock, pk_user, pk_provider)
    return TransactionTemplate(mode, funding, pk_user, pk_provider, redeem, timelock, hashlock)


@dataclass(frozen=True)
class ChannelParams:
    """What a validator knows about the channel when screening a template."""

    pk_user: bytes
    pk_provider: bytes
    funding_txid: bytes
    funding_vout: int
    funding_timelock: int
    bidirectional: bool


def validate_template(template: TransactionTemplate, params: ChannelParams) -> list[str]:
    """Screen a template against the channel; returns human-readable violations."""
    violations = []
    if (template.funding.txid, template.funding.vout) != (params.funding_txid, params.funding_vout):
        violations.append("input does not reference the registered deposit outpoint")
    skeleton = template.skeleton()
    if len(skeleton.outputs) != 2:
        violations.append("template must have exactly two outputs")
        return violations
    if any(out.value is not None for out in skeleton.outputs):
        violations.append("template output values must be nil")
    if skeleton.inputs[0].sequence != 0xFFFFFFFF:
        violations.append("template input sequence must be final")
    if skeleton.locktime != 0:
        violations.append("template locktime must be zero")
    if skeleton.version < 2:
        violations.append("relative time-locks need transaction version 2")
    if skeleton.outputs[1].script_pubkey != template.change_script():
        violations.append("output[1] must pay the user's key hash")
    if params.bidirectional:
        if template.redeem is None:
            violations.append("cancellable channel template needs a redeem script")
            return violations
        if not sc.conditionals_balanced(template.redeem):
            violations.append("redeem script conditionals unbalanced")
        expected_lock = (
            sc.p2wsh_script(sha256(template.redeem))
            if template.mode == "segwit"
            else sc.p2sh_script(hash160(template.redeem))
        )
        if skeleton.outputs[0].script_pubkey != expected_lock:
            violations.append("output[0] does not commit to the declared redeem script")
        try:
            timelock, hashlock, pk_u, pk_s = parse_redeem_script(template.redeem)
        except TemplateError as exc:
            violations.append(str(exc))
            return violations
        if timelock <= params.funding_timelock:
            violations.append(
                f"remittance time-lock {timelock} must exceed the deposit "
                f"time-lock {params.funding_timelock}"
            )
        if pk_u != params.pk_user or pk_s != params.pk_provider:
            violations.append("redeem script keys do not match the channel keys")
    else:
        if template.redeem is not None:
            violations.append("one-way channel template must not carry a redeem script")
        elif skeleton.outputs[0].script_pubkey != template.remit_script():
            violations.append("output[0] must pay the provider's key hash")
    return violations
