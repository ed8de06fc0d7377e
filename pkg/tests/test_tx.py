"""Transaction serialization and the two signature pre-image forms."""

import io
import random

import pytest

from chanbridge import tx as txm
from chanbridge.tx import Transaction, TxInput, TxOutput


def _random_tx(rng: random.Random, segwit: bool, allow_nil: bool = False) -> Transaction:
    n_in = rng.randrange(1, 4)
    n_out = rng.randrange(1, 4)
    inputs = [
        TxInput(rng.randbytes(32), rng.randrange(0, 5), rng.randbytes(rng.randrange(0, 40)),
                rng.choice([0xFFFFFFFF, 0xFFFFFFFE, 110, 0]))
        for _ in range(n_in)
    ]
    outputs = [
        TxOutput(None if allow_nil and rng.random() < 0.3 else rng.randrange(0, 10**10),
                 rng.randbytes(rng.randrange(1, 40)))
        for _ in range(n_out)
    ]
    witnesses = None
    if segwit:
        witnesses = [[rng.randbytes(rng.randrange(0, 30)) for _ in range(rng.randrange(0, 4))]
                     for _ in range(n_in)]
    return Transaction(rng.choice([1, 2]), inputs, outputs, witnesses, rng.randrange(0, 500))


def test_serialize_parse_round_trip():
    rng = random.Random(0)
    for i in range(200):
        tx = _random_tx(rng, segwit=i % 2 == 0, allow_nil=True)
        raw = tx.serialize()
        parsed = Transaction.parse(raw)
        assert parsed.serialize() == raw
        assert parsed.version == tx.version
        assert parsed.locktime == tx.locktime
        assert [o.value for o in parsed.outputs] == [o.value for o in tx.outputs]


def test_segwit_marker_bytes():
    rng = random.Random(1)
    tx = _random_tx(rng, segwit=True)
    raw = tx.serialize()
    assert raw[4:6] == b"\x00\x01"
    stripped = tx.serialize(include_witness=False)
    assert stripped[4:6] != b"\x00\x01"


def test_txid_ignores_witness():
    rng = random.Random(2)
    tx = _random_tx(rng, segwit=True)
    bare = tx.copy()
    bare.witnesses = None
    assert tx.txid() == bare.txid()


def test_nil_value_marker():
    out = TxOutput(None, b"\x51")
    raw = out.serialize()
    assert raw[:8] == b"\xff" * 8
    parsed = TxOutput.parse(io.BytesIO(raw))
    assert parsed.value is None


def test_varint_boundaries():
    for n in [0, 1, 0xFC, 0xFD, 0xFFFF, 0x10000, 0xFFFFFFFF, 0x100000000]:
        data = txm.write_varint(n)
        assert txm.read_varint(io.BytesIO(data)) == n
    assert len(txm.write_varint(0xFC)) == 1
    assert len(txm.write_varint(0xFD)) == 3
    assert len(txm.write_varint(0x10000)) == 5


def test_parse_rejects_trailing_bytes():
    rng = random.Random(3)
    raw = _random_tx(rng, segwit=False).serialize()
    with pytest.raises(txm.TxFormatError):
        Transaction.parse(raw + b"\x00")


def test_legacy_preimage_structure():
    rng = random.Random(4)
    tx = _random_tx(rng, segwit=False)
    code = b"\x51\x52"
    preimage = txm.legacy_sighash_preimage(tx, 0, code)
    assert preimage.endswith(b"\x01\x00\x00\x00")  # 4-byte hash type
    inner = Transaction.parse(preimage[:-4])
    assert inner.inputs[0].script_sig == code
    assert all(txin.script_sig == b"" for txin in inner.inputs[1:])
    assert [o.value for o in inner.outputs] == [o.value for o in tx.outputs]


def test_legacy_preimage_rejects_nil_values():
    tx = Transaction(inputs=[TxInput(bytes(32), 0)], outputs=[TxOutput(None, b"\x51")])
    with pytest.raises(txm.TxFormatError):
        txm.legacy_sighash_preimage(tx, 0, b"\x51")


def test_bip143_preimage_layout():
    rng = random.Random(5)
    tx = _random_tx(rng, segwit=True)
    code = rng.randbytes(25)
    value = 123_456
    preimage = txm.bip143_preimage(tx, 0, code, value)
    assert preimage[:4] == tx.version.to_bytes(4, "little")
    assert preimage[4:36] == txm.hash_prevouts(tx)
    assert preimage[36:68] == txm.hash_sequences(tx)
    assert preimage[-4:] == b"\x01\x00\x00\x00"
    assert value.to_bytes(8, "little") in preimage
