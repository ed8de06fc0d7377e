"""Template formats, signature forms and completion against the tables'
field layout: nil values, final sequence, zero locktime, per-mode scripts."""

import random

import pytest

from chanbridge import crypto
from chanbridge import script as sc
from chanbridge.ledger import build_funding_redeem
from chanbridge.templates import (
    ChannelParams,
    FundingRef,
    TemplateError,
    TransactionTemplate,
    build_redeem_script,
    build_template,
    complete_transaction,
    parse_redeem_script,
    signature_form,
    sighash_skeleton,
    validate_template,
)
from chanbridge.tx import Transaction

from oracles import segwit_digest_oracle

RNG = random.Random(21)
USER = crypto.KeyPair.generate(RNG)
PROVIDER = crypto.KeyPair.generate(RNG)
PREIMAGE = RNG.randbytes(32)
HASHLOCK = crypto.hash160(PREIMAGE)
CONTROL = build_funding_redeem(USER.pub.encode(), PROVIDER.pub.encode(), 100)
FUNDING = FundingRef(bytes(range(32)), 0, CONTROL)

DEPOSIT = 100_000_000
FEE = 10_000


def _params(bidirectional: bool) -> ChannelParams:
    return ChannelParams(USER.pub.encode(), PROVIDER.pub.encode(),
                         FUNDING.txid, FUNDING.vout, 100, bidirectional)


def test_one_way_template_fields():
    template = build_template("legacy", FUNDING, USER.pub.encode(), PROVIDER.pub.encode())
    skeleton = template.skeleton()
    assert skeleton.version == 2
    assert len(skeleton.inputs) == 1
    assert skeleton.inputs[0].prev_txid == FUNDING.txid
    assert skeleton.inputs[0].script_sig == b""
    assert skeleton.inputs[0].sequence == 0xFFFFFFFF
    assert len(skeleton.outputs) == 2
    assert skeleton.outputs[0].value is None and skeleton.outputs[1].value is None
    assert skeleton.outputs[0].script_pubkey == sc.p2pkh_script(PROVIDER.pub.hash160())
    assert skeleton.outputs[1].script_pubkey == sc.p2pkh_script(USER.pub.hash160())
    assert skeleton.locktime == 0
    assert not skeleton.is_segwit


def test_cancellable_template_commits_to_redeem():
    template = build_template("legacy", FUNDING, USER.pub.encode(), PROVIDER.pub.encode(),
                              110, HASHLOCK)
    skeleton = template.skeleton()
    assert skeleton.outputs[0].script_pubkey == sc.p2sh_script(crypto.hash160(template.redeem))
    assert template.timelock == 110
    assert template.hashlock == HASHLOCK


def test_segwit_template_fields():
    template = build_template("segwit", FUNDING, USER.pub.encode(), PROVIDER.pub.encode())
    raw = template.to_bytes()
    assert raw[4:6] == b"\x00\x01"  # marker and flag
    skeleton = template.skeleton()
    program = sc.p2wsh_script(crypto.sha256(CONTROL))
    assert skeleton.inputs[0].script_sig == sc.push(program)
    assert skeleton.witnesses == [[CONTROL]]
    assert skeleton.outputs[0].script_pubkey == sc.p2wpkh_script(PROVIDER.pub.hash160())
    assert skeleton.outputs[1].script_pubkey == sc.p2wpkh_script(USER.pub.hash160())


def test_redeem_script_shape():
    redeem = build_redeem_script(110, HASHLOCK, USER.pub.encode(), PROVIDER.pub.encode())
    asm = sc.to_asm(redeem)
    assert asm == (
        f"OP_IF OP_HASH160 {HASHLOCK.hex()} OP_EQUALVERIFY {USER.pub.encode().hex()} "
        f"OP_ELSE 6e OP_CHECKSEQUENCEVERIFY OP_DROP {PROVIDER.pub.encode().hex()} "
        f"OP_ENDIF OP_CHECKSIG"
    )
    assert parse_redeem_script(redeem) == (110, HASHLOCK, USER.pub.encode(),
                                           PROVIDER.pub.encode())


def test_template_round_trip_all_modes():
    for mode in ("legacy", "segwit"):
        for bidirectional in (False, True):
            template = build_template(
                mode, FUNDING, USER.pub.encode(), PROVIDER.pub.encode(),
                110 if bidirectional else None, HASHLOCK if bidirectional else None)
            raw = template.to_bytes()
            rebuilt = TransactionTemplate.from_bytes(raw, CONTROL, USER.pub.encode(),
                                                     PROVIDER.pub.encode(), template.redeem)
            assert rebuilt.to_bytes() == raw
            assert rebuilt.mode == mode


def test_build_template_needs_both_locks():
    with pytest.raises(TemplateError):
        build_template("legacy", FUNDING, USER.pub.encode(), PROVIDER.pub.encode(),
                       timelock=110)


def test_signature_form_values():
    template = build_template("legacy", FUNDING, USER.pub.encode(), PROVIDER.pub.encode())
    form = signature_form(template, 50_000_000, DEPOSIT, FEE)
    modtx = form.to_bytes()
    assert modtx.endswith(b"\x01\x00\x00\x00")
    inner = Transaction.parse(modtx[:-4])
    assert [out.value for out in inner.outputs] == [50_000_000, 49_990_000]
    assert inner.inputs[0].script_sig == CONTROL  # control script in the signed form


def test_signature_form_deterministic():
    template = build_template("legacy", FUNDING, USER.pub.encode(), PROVIDER.pub.encode())
    a = signature_form(template, 1_234_567, DEPOSIT, FEE).to_bytes()
    b = signature_form(template, 1_234_567, DEPOSIT, FEE).to_bytes()
    assert a == b


def test_both_sides_compute_identical_signing_bytes():
    # payer and verifier each rebuild the template from its wire form and
    # must land on the same signing bytes for every amount
    for mode in ("legacy", "segwit"):
        template = build_template(mode, FUNDING, USER.pub.encode(), PROVIDER.pub.encode())
        wire = template.to_bytes()
        payer_side = TransactionTemplate.from_bytes(wire, CONTROL, USER.pub.encode(),
                                                    PROVIDER.pub.encode())
        verifier_side = TransactionTemplate.from_bytes(wire, CONTROL, USER.pub.encode(),
                                                       PROVIDER.pub.encode())
        for amount in (1, 10_000_000, DEPOSIT - FEE):
            a = signature_form(payer_side, amount, DEPOSIT, FEE).to_bytes()
            b = signature_form(verifier_side, amount, DEPOSIT, FEE).to_bytes()
            assert a == b


def test_signature_form_range_checks():
    template = build_template("legacy", FUNDING, USER.pub.encode(), PROVIDER.pub.encode())
    with pytest.raises(TemplateError):
        signature_form(template, 0, DEPOSIT, FEE)
    with pytest.raises(TemplateError):
        signature_form(template, DEPOSIT - FEE + 1, DEPOSIT, FEE)
    signature_form(template, DEPOSIT - FEE, DEPOSIT, FEE)  # boundary passes


def test_segwit_form_matches_independent_oracle():
    template = build_template("segwit", FUNDING, USER.pub.encode(), PROVIDER.pub.encode())
    form = signature_form(template, 50_000_000, DEPOSIT, FEE)
    skeleton = template.skeleton()
    expected = segwit_digest_oracle(
        version=2,
        outpoints=[(FUNDING.txid, 0)],
        sequences=[0xFFFFFFFF],
        signed_input=0,
        script_code=CONTROL,
        value=DEPOSIT,
        outputs=[(50_000_000, skeleton.outputs[0].script_pubkey),
                 (49_990_000, skeleton.outputs[1].script_pubkey)],
        locktime=0,
    )
    assert form.digest() == expected


def test_segwit_skeleton_form_has_nil_hash_outputs():
    template = build_template("segwit", FUNDING, USER.pub.encode(), PROVIDER.pub.encode())
    form = sighash_skeleton(template, DEPOSIT)
    assert form.fields["hash_outputs"] is None
    with pytest.raises(TemplateError):
        form.to_bytes()
    complete = signature_form(template, 1_000, DEPOSIT, FEE)
    assert complete.fields["hash_outputs"] is not None
    # the only field that changes between skeleton and signable form
    changed = {k for k in form.fields if form.fields[k] != complete.fields[k]}
    assert changed == {"hash_outputs"}


def test_complete_transaction_round_trip():
    template = build_template("legacy", FUNDING, USER.pub.encode(), PROVIDER.pub.encode())
    digest = signature_form(template, 50_000_000, DEPOSIT, FEE).digest()
    tx = complete_transaction(template, USER.sign(digest), PROVIDER.sign(digest),
                              50_000_000, 49_990_000, DEPOSIT, FEE)
    assert [out.value for out in tx.outputs] == [50_000_000, 49_990_000]
    # everything except values and the unlocking script matches the skeleton
    skeleton = template.skeleton()
    assert tx.outputs[0].script_pubkey == skeleton.outputs[0].script_pubkey
    assert tx.outputs[1].script_pubkey == skeleton.outputs[1].script_pubkey
    assert tx.inputs[0].outpoint() == skeleton.inputs[0].outpoint()
    assert tx.inputs[0].sequence == skeleton.inputs[0].sequence
    assert tx.locktime == skeleton.locktime
    assert tx.version == skeleton.version


def test_complete_transaction_rejects_bad_change():
    template = build_template("legacy", FUNDING, USER.pub.encode(), PROVIDER.pub.encode())
    digest = signature_form(template, 50_000_000, DEPOSIT, FEE).digest()
    sig_u, sig_s = USER.sign(digest), PROVIDER.sign(digest)
    with pytest.raises(TemplateError, match="change"):
        complete_transaction(template, sig_u, sig_s, 50_000_000, 49_990_001, DEPOSIT, FEE)


def test_complete_transaction_rejects_wrong_signature():
    template = build_template("legacy", FUNDING, USER.pub.encode(), PROVIDER.pub.encode())
    digest = signature_form(template, 50_000_000, DEPOSIT, FEE).digest()
    wrong = signature_form(template, 40_000_000, DEPOSIT, FEE).digest()
    with pytest.raises(TemplateError, match="signature"):
        complete_transaction(template, USER.sign(wrong), PROVIDER.sign(digest),
                             50_000_000, 49_990_000, DEPOSIT, FEE)
    with pytest.raises(TemplateError, match="signature"):
        complete_transaction(template, USER.sign(digest), None,
                             50_000_000, 49_990_000, DEPOSIT, FEE)


def test_modes_produce_identical_value_vectors():
    rng = random.Random(1)
    for _ in range(20):
        amount = rng.randrange(1, DEPOSIT - FEE + 1)
        values = []
        for mode in ("legacy", "segwit"):
            template = build_template(mode, FUNDING, USER.pub.encode(), PROVIDER.pub.encode())
            digest = signature_form(template, amount, DEPOSIT, FEE).digest()
            tx = complete_transaction(template, USER.sign(digest), PROVIDER.sign(digest),
                                      amount, DEPOSIT - amount - FEE, DEPOSIT, FEE)
            values.append([out.value for out in tx.outputs])
        assert values[0] == values[1]


def test_validate_template_accepts_good_pairs():
    one_way = build_template("legacy", FUNDING, USER.pub.encode(), PROVIDER.pub.encode())
    assert validate_template(one_way, _params(False)) == []
    cancellable = build_template("legacy", FUNDING, USER.pub.encode(), PROVIDER.pub.encode(),
                                 110, HASHLOCK)
    assert validate_template(cancellable, _params(True)) == []


def test_validate_template_timelock_ordering():
    at_lock = build_template("legacy", FUNDING, USER.pub.encode(), PROVIDER.pub.encode(),
                             100, HASHLOCK)
    assert any("must exceed" in v for v in validate_template(at_lock, _params(True)))
    above = build_template("legacy", FUNDING, USER.pub.encode(), PROVIDER.pub.encode(),
                           101, HASHLOCK)
    assert validate_template(above, _params(True)) == []


def test_validate_template_detects_tampering():
    # wrong outpoint
    moved = TransactionTemplate("legacy", FundingRef(bytes(32), 1, CONTROL),
                                USER.pub.encode(), PROVIDER.pub.encode(),
                                build_redeem_script(110, HASHLOCK, USER.pub.encode(),
                                                    PROVIDER.pub.encode()))
    assert any("outpoint" in v for v in validate_template(moved, _params(True)))
    # redeem keys not the channel keys
    stranger = crypto.KeyPair.generate(random.Random(99))
    foreign = build_redeem_script(110, HASHLOCK, USER.pub.encode(), stranger.pub.encode())
    hijacked = TransactionTemplate("legacy", FUNDING, USER.pub.encode(),
                                   PROVIDER.pub.encode(), foreign)
    assert any("keys" in v for v in validate_template(hijacked, _params(True)))
    # one-way channel given a redeem-committed template
    cancellable = build_template("legacy", FUNDING, USER.pub.encode(), PROVIDER.pub.encode(),
                                 110, HASHLOCK)
    assert any("redeem" in v for v in validate_template(cancellable, _params(False)))


def test_wire_template_with_foreign_redeem_rejected():
    template = build_template("legacy", FUNDING, USER.pub.encode(), PROVIDER.pub.encode(),
                              110, HASHLOCK)
    other = build_redeem_script(110, crypto.hash160(b"other"), USER.pub.encode(),
                                PROVIDER.pub.encode())
    with pytest.raises(TemplateError):
        TransactionTemplate.from_bytes(template.to_bytes(), CONTROL, USER.pub.encode(),
                                       PROVIDER.pub.encode(), other)
