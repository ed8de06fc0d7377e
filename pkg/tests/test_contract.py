"""Bridge-contract state machine: phases, payment guard, cancellation."""

import random

import pytest

from chanbridge import crypto
from chanbridge.contract import BridgeContract, CallContext, ContractError, ServiceContract
from chanbridge.ledger import build_funding_redeem
from chanbridge.templates import FundingRef, build_template, signature_form

RNG = random.Random(31)
USER = crypto.KeyPair.generate(RNG)
PROVIDER = crypto.KeyPair.generate(RNG)
CONTROL = build_funding_redeem(USER.pub.encode(), PROVIDER.pub.encode(), 100)
FUNDING_TXID = bytes(range(32))

DEPOSIT = 100_000_000
FEE = 10_000

USER_CTX = CallContext("user", 1)
SP_CTX = CallContext("sp", 1)


def _deposit_args() -> dict:
    return {
        "script_hash": crypto.hash160(CONTROL).hex(),
        "funding_txid": FUNDING_TXID.hex(),
        "funding_vout": 0,
        "pk_user": USER.pub.encode().hex(),
        "pk_provider": PROVIDER.pub.encode().hex(),
        "timelock": 100,
        "amount": DEPOSIT,
        "payer_address": crypto.eth_address(USER.pub).hex(),
    }


def _template(timelock=None, hashlock=None):
    return build_template("legacy", FundingRef(FUNDING_TXID, 0, CONTROL),
                          USER.pub.encode(), PROVIDER.pub.encode(), timelock, hashlock)


def _fresh(bidirectional=False, preimage=b"seed-0"):
    service = ServiceContract("svc", "sp")
    bridge = BridgeContract("bridge", "sp", "user", service, FEE)
    bridge.set_deposit(USER_CTX, _deposit_args())
    if bidirectional:
        hashlock = crypto.hash160(preimage)
        template = _template(110, hashlock)
        bridge.set_template(SP_CTX, {"template": template.to_bytes().hex(),
                                     "redeem": template.redeem.hex()})
    else:
        bridge.set_template(SP_CTX, {"template": _template().to_bytes().hex()})
    return bridge, service


def _update_args(amount: int, key=USER, template=None, bridge=None) -> dict:
    if template is None:
        raw = bytes.fromhex(bridge.get_template()["template"])
        redeem_hex = bridge.get_template()["redeem"]
        from chanbridge.templates import TransactionTemplate

        template = TransactionTemplate.from_bytes(
            raw, CONTROL, USER.pub.encode(), PROVIDER.pub.encode(),
            bytes.fromhex(redeem_hex) if redeem_hex else None)
    if amount + FEE <= DEPOSIT:
        digest = signature_form(template, amount, DEPOSIT, FEE).digest()
    else:
        # out-of-range amounts never reach the signature check
        digest = crypto.sha256d(b"over-capacity")
    sig = key.sign(digest)
    return {"amount": amount, "v": sig.v, "r": f"{sig.r:064x}", "s": f"{sig.s:064x}"}


def test_set_deposit_only_once():
    service = ServiceContract("svc", "sp")
    bridge = BridgeContract("bridge", "sp", "user", service, FEE)
    bridge.set_deposit(USER_CTX, _deposit_args())
    with pytest.raises(ContractError, match="already"):
        bridge.set_deposit(USER_CTX, _deposit_args())


def test_set_deposit_caller_auth():
    service = ServiceContract("svc", "sp")
    bridge = BridgeContract("bridge", "sp", "user", service, FEE)
    with pytest.raises(ContractError, match="payer"):
        bridge.set_deposit(SP_CTX, _deposit_args())


def test_set_template_phase_and_auth():
    service = ServiceContract("svc", "sp")
    bridge = BridgeContract("bridge", "sp", "user", service, FEE)
    with pytest.raises(ContractError, match="no deposit"):
        bridge.set_template(SP_CTX, {"template": _template().to_bytes().hex()})
    bridge.set_deposit(USER_CTX, _deposit_args())
    with pytest.raises(ContractError, match="provider"):
        bridge.set_template(USER_CTX, {"template": _template().to_bytes().hex()})
    bridge.set_template(SP_CTX, {"template": _template().to_bytes().hex()})
    with pytest.raises(ContractError, match="already"):
        bridge.set_template(SP_CTX, {"template": _template().to_bytes().hex()})


def test_set_template_rejects_short_timelock():
    service = ServiceContract("svc", "sp")
    bridge = BridgeContract("bridge", "sp", "user", service, FEE)
    bridge.set_deposit(USER_CTX, _deposit_args())
    low = _template(100, crypto.hash160(b"s0"))
    with pytest.raises(ContractError, match="exceed"):
        bridge.set_template(SP_CTX, {"template": low.to_bytes().hex(),
                                     "redeem": low.redeem.hex()})
    # retry with a longer lock goes through
    ok = _template(110, crypto.hash160(b"s0"))
    bridge.set_template(SP_CTX, {"template": ok.to_bytes().hex(),
                                 "redeem": ok.redeem.hex()})


def test_set_template_boundary_one_above():
    service = ServiceContract("svc", "sp")
    bridge = BridgeContract("bridge", "sp", "user", service, FEE)
    bridge.set_deposit(USER_CTX, _deposit_args())
    edge = _template(101, crypto.hash160(b"s0"))
    bridge.set_template(SP_CTX, {"template": edge.to_bytes().hex(),
                                 "redeem": edge.redeem.hex()})


def test_set_template_rejects_mismatched_redeem():
    service = ServiceContract("svc", "sp")
    bridge = BridgeContract("bridge", "sp", "user", service, FEE)
    bridge.set_deposit(USER_CTX, _deposit_args())
    template = _template(110, crypto.hash160(b"s0"))
    other = _template(110, crypto.hash160(b"s1"))
    with pytest.raises(ContractError, match="template"):
        bridge.set_template(SP_CTX, {"template": template.to_bytes().hex(),
                                     "redeem": other.redeem.hex()})


def test_get_template_before_registration_fails():
    service = ServiceContract("svc", "sp")
    bridge = BridgeContract("bridge", "sp", "user", service, FEE)
    with pytest.raises(ContractError, match="no template"):
        bridge.get_template()


def test_get_template_round_trip():
    bridge, _ = _fresh()
    stored = bridge.get_template()
    assert bytes.fromhex(stored["template"]) == _template().to_bytes()


def test_update_monotonic_sequence():
    bridge, service = _fresh()
    bridge.update(USER_CTX, _update_args(10_000_000, bridge=bridge))
    bridge.update(USER_CTX, _update_args(50_000_000, bridge=bridge))
    with pytest.raises(ContractError, match="exceed"):
        bridge.update(USER_CTX, _update_args(40_000_000, bridge=bridge))
    assert bridge.latest["amount"] == 50_000_000
    assert [entry["kind"] for entry in service.log] == ["invoke", "invoke"]
    assert [entry["delta"] for entry in service.log] == [10_000_000, 40_000_000]


def test_update_capacity_boundary():
    bridge, _ = _fresh()
    bridge.update(USER_CTX, _update_args(DEPOSIT - FEE, bridge=bridge))
    bridge2, _ = _fresh()
    with pytest.raises(ContractError, match="exceeds deposit"):
        bridge2.update(USER_CTX, _update_args(DEPOSIT - FEE + 1, bridge=bridge2))


def test_update_rejects_foreign_signer():
    bridge, service = _fresh()
    mallory = crypto.KeyPair.generate(random.Random(1))
    with pytest.raises(ContractError, match="does not match"):
        bridge.update(USER_CTX, _update_args(10_000_000, key=mallory, bridge=bridge))
    assert service.log == []


def test_update_rejects_signature_over_other_amount():
    bridge, _ = _fresh()
    args = _update_args(10_000_000, bridge=bridge)
    args["amount"] = 10_000_001  # signature no longer covers the declared amount
    with pytest.raises(ContractError, match="does not match"):
        bridge.update(USER_CTX, args)


def test_verify_helper():
    bridge, _ = _fresh()
    modtx = b"payload"
    digest = crypto.sha256d(modtx)
    sig = USER.sign(digest)
    addr = crypto.eth_address(USER.pub)
    assert bridge.verify(modtx, sig.v, sig.r, sig.s, addr)
    assert not bridge.verify(modtx + b"x", sig.v, sig.r, sig.s, addr)
    assert not bridge.verify(modtx, sig.v, sig.r, sig.s, bytes(20))
    # digest diverges for any one-satoshi shift of the committed amount
    template = _template()
    for amount, probe in ((50_000_000, 49_999_999), (50_000_000, 50_000_001)):
        good = signature_form(template, amount, DEPOSIT, FEE)
        bad = signature_form(template, probe, DEPOSIT, FEE)
        sig = USER.sign(good.digest())
        assert bridge.verify(good.to_bytes(), sig.v, sig.r, sig.s, addr)
        assert not bridge.verify(bad.to_bytes(), sig.v, sig.r, sig.s, addr)


def test_get_update_tx_math_and_phase():
    bridge, _ = _fresh()
    with pytest.raises(ContractError, match="no payments"):
        bridge.get_update_tx()
    bridge.update(USER_CTX, _update_args(50_000_000, bridge=bridge))
    export = bridge.get_update_tx()
    assert export["amount"] == 50_000_000
    assert export["change"] == 49_990_000


def test_replace_template_requires_cancellable_channel():
    bridge, _ = _fresh(bidirectional=False)
    bridge.update(USER_CTX, _update_args(10_000_000, bridge=bridge))
    replacement = _template(110, crypto.hash160(b"s1"))
    with pytest.raises(ContractError, match="cancellation"):
        bridge.replace_template(SP_CTX, {"template": replacement.to_bytes().hex(),
                                         "redeem": replacement.redeem.hex()})


def _cancel_flow(preimages=(b"seed-0", b"seed-1")):
    bridge, service = _fresh(bidirectional=True, preimage=preimages[0])
    bridge.update(USER_CTX, _update_args(30_000_000, bridge=bridge))
    bridge.update(USER_CTX, _update_args(50_000_000, bridge=bridge))
    replacement = _template(110, crypto.hash160(preimages[1]))
    bridge.replace_template(SP_CTX, {"template": replacement.to_bytes().hex(),
                                     "redeem": replacement.redeem.hex()})
    return bridge, service, replacement


def test_cancellation_full_flow():
    bridge, service, replacement = _cancel_flow()
    # reduced amount against the new template
    bridge.update(USER_CTX, _update_args(40_000_000, template=replacement))
    bridge.disclose_preimage(SP_CTX, {"preimage": b"seed-0".hex()})
    assert bridge.cancellations == 1
    assert bridge.disclosed == [b"seed-0"]
    assert crypto.hash160(bridge.disclosed[0]) in bridge.used_hashlocks
    assert [e["kind"] for e in service.log] == ["invoke", "invoke", "invoke", "revoke"]
    assert service.log[2]["delta"] == -10_000_000


def test_disclose_requires_confirming_update():
    bridge, service, _ = _cancel_flow()
    with pytest.raises(ContractError, match="not confirmed"):
        bridge.disclose_preimage(SP_CTX, {"preimage": b"seed-0".hex()})


def test_disclose_rejects_wrong_preimage():
    bridge, _, replacement = _cancel_flow()
    bridge.update(USER_CTX, _update_args(40_000_000, template=replacement))
    with pytest.raises(ContractError, match="does not match"):
        bridge.disclose_preimage(SP_CTX, {"preimage": b"not-it".hex()})


def test_replace_template_rejects_reused_hashlock():
    bridge, _, replacement = _cancel_flow()
    bridge.update(USER_CTX, _update_args(40_000_000, template=replacement))
    bridge.disclose_preimage(SP_CTX, {"preimage": b"seed-0".hex()})
    reuse = _template(110, crypto.hash160(b"seed-0"))
    with pytest.raises(ContractError, match="already used"):
        bridge.replace_template(SP_CTX, {"template": reuse.to_bytes().hex(),
                                         "redeem": reuse.redeem.hex()})


def test_replace_template_rejects_short_timelock():
    bridge, _ = _fresh(bidirectional=True)
    bridge.update(USER_CTX, _update_args(30_000_000, bridge=bridge))
    low = _template(100, crypto.hash160(b"seed-1"))
    with pytest.raises(ContractError, match="exceed"):
        bridge.replace_template(SP_CTX, {"template": low.to_bytes().hex(),
                                         "redeem": low.redeem.hex()})


def test_update_during_cancellation_requires_decrease():
    bridge, _, replacement = _cancel_flow()
    with pytest.raises(ContractError, match="lower"):
        bridge.update(USER_CTX, _update_args(60_000_000, template=replacement))


def test_get_update_tx_spans_cancellation_window():
    # between the swap and the confirming update, the export must still pair
    # the old signature with the old template
    bridge, _, replacement = _cancel_flow()
    export = bridge.get_update_tx()
    assert export["amount"] == 50_000_000
    old_template = _template(110, crypto.hash160(b"seed-0"))
    assert bytes.fromhex(export["template"]) == old_template.to_bytes()
    # and the current template is already the replacement
    assert bytes.fromhex(bridge.get_template()["template"]) == replacement.to_bytes()


def test_close_is_idempotent_and_final():
    bridge, _ = _fresh()
    bridge.update(USER_CTX, _update_args(10_000_000, bridge=bridge))
    bridge.close(SP_CTX, {})
    bridge.close(SP_CTX, {})
    with pytest.raises(ContractError, match="closed"):
        bridge.update(USER_CTX, _update_args(20_000_000, bridge=bridge))
    # the settlement export stays readable
    assert bridge.get_update_tx()["amount"] == 10_000_000


def test_close_caller_auth():
    bridge, _ = _fresh()
    with pytest.raises(ContractError, match="provider"):
        bridge.close(USER_CTX, {})


def test_service_log_append_only_counts():
    bridge, service, replacement = _cancel_flow()
    bridge.update(USER_CTX, _update_args(40_000_000, template=replacement))
    bridge.disclose_preimage(SP_CTX, {"preimage": b"seed-0".hex()})
    invokes = sum(1 for e in service.log if e["kind"] == "invoke")
    revokes = sum(1 for e in service.log if e["kind"] == "revoke")
    assert invokes == 3  # one per accepted update
    assert revokes == 1  # one per completed cancellation
