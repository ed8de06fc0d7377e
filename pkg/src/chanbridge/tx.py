"""Transaction structures with byte-exact serialization, legacy and segwit.

Output values may be None inside templates; the serializer writes the nil
marker 0xFFFFFFFFFFFFFFFF (an impossible satoshi amount) and the parser maps
it back.  Complete transactions never carry nil values.

Also home to the two signature pre-image constructions: the legacy in-place
form (tx with the spent output's script substituted into the signed input,
hash-type appended) and the BIP 143 segwit form.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field, replace

from .crypto import sha256d

__all__ = [
    "COIN", "NIL_VALUE", "SIGHASH_ALL",
    "TxInput", "TxOutput", "Transaction", "TxFormatError",
    "read_varint", "write_varint",
    "legacy_sighash_preimage", "bip143_preimage",
    "hash_prevouts", "hash_sequences", "hash_outputs", "serialize_output",
]

COIN = 100_000_000
NIL_VALUE = 0xFFFFFFFFFFFFFFFF
SIGHASH_ALL = 0x01


class TxFormatError(ValueError):
    """Bytes that do not decode to a transaction, or unserializable fields."""


def write_varint(n: int) -> bytes:
    # https://en.bitcoin.it/wiki/Protocol_documentation#Variable_length_integer
    if n < 0xFD:
        return bytes([n])
    if n <= 0xFFFF:
        return b"\xfd" + n.to_bytes(2, "little")
    if n <= 0xFFFFFFFF:
        return b"\xfe" + n.to_bytes(4, "little")
    return b"\xff" + n.to_bytes(8, "little")


def read_varint(stream: io.BytesIO) -> int:
    head = stream.read(1)
    if not head:
        raise TxFormatError("truncated varint")
    n = head[0]
    if n < 0xFD:
        return n
    size = {0xFD: 2, 0xFE: 4, 0xFF: 8}[n]
    raw = stream.read(size)
    if len(raw) != size:
        raise TxFormatError("truncated varint body")
    return int.from_bytes(raw, "little")


def _read(stream: io.BytesIO, n: int) -> bytes:
    raw = stream.read(n)
    if len(raw) != n:
        raise TxFormatError("truncated transaction")
    return raw


@dataclass
class TxInput:
    prev_txid: bytes
    prev_index: int
    script_sig: bytes = b""
    sequence: int = 0xFFFFFFFF

    def outpoint(self) -> tuple[bytes, int]:
        return self.prev_txid, self.prev_index

    def serialize(self) -> bytes:
        if len(self.prev_txid) != 32:
            raise TxFormatError("prev_txid must be 32 bytes")
        return (
            self.prev_txid
            + self.prev_index.to_bytes(4, "little")
            + write_varint(len(self.script_sig))
            + self.script_sig
            + self.sequence.to_bytes(4, "little")
        )

    @classmethod
    def parse(cls, stream: io.BytesIO) -> "TxInput":
        txid = _read(stream, 32)
        index = int.from_bytes(_read(stream, 4), "little")
        script = _read(stream, read_varint(stream))
        sequence = int.from_bytes(_read(stream, 4), "little")
        return cls(txid, index, script, sequence)


@dataclass
class TxOutput:
    value: int | None  # None marks the nil slot of a template
    script_pubkey: bytes = b""

    def serialize(self) -> bytes:
        value = NIL_VALUE if self.value is None else self.value
        if not 0 <= value <= NIL_VALUE:
            raise TxFormatError("output value out of range")
        return value.to_bytes(8, "little") + write_varint(len(self.script_pubkey)) + self.script_pubkey

    @classmethod
    def parse(cls, stream: io.BytesIO) -> "TxOutput":
        value = int.from_bytes(_read(stream, 8), "little")
        script = _read(stream, read_varint(stream))
        return cls(None if value == NIL_VALUE else value, script)


@dataclass
class Transaction:
    version: int = 2
    inputs: list[TxInput] = field(default_factory=list)
    outputs: list[TxOutput] = field(default_factory=list)
    witnesses: list[list[bytes]] | None = None  # one stack per input when segwit
    locktime: int = 0

    @property
    def is_segwit(self) -> bool:
        return self.witnesses is not None

    def serialize(self, include_witness: bool = True) -> bytes:
        out = bytearray(self.version.to_bytes(4, "little"))
        segwit = self.is_segwit and include_witness
        if segwit:
            out += b"\x00\x01"  # marker, flag
        out += write_varint(len(self.inputs))
        for txin in self.inputs:
            out += txin.serialize()
        out += write_varint(len(self.outputs))
        for txout in self.outputs:
            out += txout.serialize()
        if segwit:
            if len(self.witnesses) != len(self.inputs):
                raise TxFormatError("witness count must match input count")
            for stack in self.witnesses:
                out += write_varint(len(stack))
                for item in stack:
                    out += write_varint(len(item)) + item
        out += self.locktime.to_bytes(4, "little")
        return bytes(out)

    def txid(self) -> bytes:
        """Double-SHA256 of the stripped (witness-free) serialization."""
        return sha256d(self.serialize(include_witness=False))

    @classmethod
    def parse(cls, data: bytes) -> "Transaction":
        stream = io.BytesIO(data)
        version = int.from_bytes(_read(stream, 4), "little")
        segwit = False
        n_inputs = read_varint(stream)
        if n_inputs == 0:  # marker byte; a real transaction always has inputs
            if _read(stream, 1) != b"\x01":
                raise TxFormatError("bad segwit flag")
            segwit = True
            n_inputs = read_varint(stream)
        inputs = [TxInput.parse(stream) for _ in range(n_inputs)]
        outputs = [TxOutput.parse(stream) for _ in range(read_varint(stream))]
        witnesses = None
        if segwit:
            witnesses = []
            for _ in range(n_inputs):
                stack = [_read(stream, read_varint(stream)) for _ in range(read_varint(stream))]
                witnesses.append(stack)
        locktime = int.from_bytes(_read(stream, 4), "little")
        if stream.read(1):
            raise TxFormatError("trailing bytes after transaction")
        return cls(version, inputs, outputs, witnesses, locktime)

    def copy(self) -> "Transaction":
        return Transaction(
            self.version,
            [replace(txin) for txin in self.inputs],
            [replace(txout) for txout in self.outputs],
            None if self.witnesses is None else [list(stack) for stack in self.witnesses],
            self.locktime,
        )

    def to_json(self) -> dict:
        return {
            "version": self.version,
            "inputs": [
                {
                    "prev_txid": txin.prev_txid.hex(),
                    "prev_index": txin.prev_index,
                    "script_sig": txin.script_sig.hex(),
                    "sequence": txin.sequence,
                }
                for txin in self.inputs
            ],
            "outputs": [
                {
                    "value": txout.value,
                    "script_pubkey": txout.script_pubkey.hex(),
                }
                for txout in self.outputs
            ],
            "witnesses": None
            if self.witnesses is None
            else [[item.hex() for item in stack] for stack in self.witnesses],
            "locktime": self.locktime,
        }


# ---------------------------------------------------------------------------
# Signature pre-images


def serialize_output(txout: TxOutput) -> bytes:
    return txout.serialize()


def legacy_sighash_preimage(tx: Transaction, input_index: int, script_code: bytes,
                            hashtype: int = SIGHASH_ALL) -> bytes:
    """The classic signing form: every input script emptied except the signed
    one, which carries the spent output's script; 4-byte hash type appended."""
    if not 0 <= input_index < len(tx.inputs):
        raise TxFormatError("input index out of range")
    stripped = tx.copy()
    stripped.witnesses = None
    for i, txin in enumerate(stripped.inputs):
        txin.script_sig = script_code if i == input_index else b""
    for txout in stripped.outputs:
        if txout.value is None:
            raise TxFormatError("nil output value in signing form")
    return stripped.serialize() + hashtype.to_bytes(4, "little")


def hash_prevouts(tx: Transaction) -> bytes:
    return sha256d(b"".join(i.prev_txid + i.prev_index.to_bytes(4, "little") for i in tx.inputs))


def hash_sequences(tx: Transaction) -> bytes:
    return sha256d(b"".join(i.sequence.to_bytes(4, "little") for i in tx.inputs))


def hash_outputs(tx: Transaction) -> bytes:
    return sha256d(b"".join(o.serialize() for o in tx.outputs))


def bip143_preimage(tx: Transaction, input_index: int, script_code: bytes, value: int,
                    hashtype: int = SIGHASH_ALL) -> bytes:
    """Segwit signing form per BIP 143 (SIGHASH_ALL only).

    ``script_code`` is the raw witnessScript / implied pubkey script; it is
    length-prefixed here, as scripts are inside outputs.
    """
    if not 0 <= input_index < len(tx.inputs):
        raise TxFormatError("input index out of range")
    txin = tx.inputs[input_index]
    return (
        tx.version.to_bytes(4, "little")
        + hash_prevouts(tx)
        + hash_sequences(tx)
        + txin.prev_txid
        + txin.prev_index.to_bytes(4, "little")
        + write_varint(len(script_code))
        + script_code
        + value.to_bytes(8, "little")
        + txin.sequence.to_bytes(4, "little")
        + hash_outputs(tx)
        + tx.locktime.to_bytes(4, "little")
        + hashtype.to_bytes(4, "little")
    )
