"""Payments verified by the bridge contract instead of the payee.

The payer never talks to the provider: it drops (signature, amount) pairs
onto the consortium chain, the contract recovers the signing key from the
signature alone, checks the address, and triggers the service stub.

    python demos/02_bridged_payments.py
"""

import random

from chanbridge import COIN, ConsortiumChain, ConsortiumTx, KeyPair, eth_address, hash160
from chanbridge import script as sc
from chanbridge.ledger import build_funding_redeem
from chanbridge.templates import FundingRef, build_template, signature_form

rng = random.Random(7)
payer = KeyPair.generate(rng)
provider = KeyPair.generate(rng)
FEE = 10_000

chain = ConsortiumChain()


def call(sender, target, fn, args):
    chain.submit(ConsortiumTx(sender, target, fn, args, chain.next_nonce(sender)))
    chain.produce_block()
    event = chain.events[-1]
    flag = "ok " if event["outcome"] == "ok" else "FAIL"
    print(f"  [{flag}] {fn}({event.get('result') or event.get('error')})")
    return event


# --- provider deploys, payer registers the deposit ----------------------------
print("setup:")
call("sp", "system", "deploy", {"kind": "service", "id": "service-1"})
call("sp", "system", "deploy", {"kind": "bridge", "id": "bridge-1",
                                "service": "service-1", "user": "user", "fee": FEE})

control = build_funding_redeem(payer.pub.encode(), provider.pub.encode(), 100)
funding_txid = bytes(range(32))  # stands in for a confirmed deposit outpoint
call("user", "bridge-1", "set_deposit", {
    "script_hash": hash160(control).hex(),
    "funding_txid": funding_txid.hex(),
    "funding_vout": 0,
    "pk_user": payer.pub.encode().hex(),
    "pk_provider": provider.pub.encode().hex(),
    "timelock": 100,
    "amount": COIN,
    "payer_address": eth_address(payer.pub).hex(),
})

template = build_template("legacy", FundingRef(funding_txid, 0, control),
                          payer.pub.encode(), provider.pub.encode())
call("sp", "bridge-1", "set_template", {"template": template.to_bytes().hex()})

# --- the payer pays by signature alone -----------------------------------------
print("payments:")
for amount in (10_000_000, 50_000_000):
    sig = payer.sign(signature_form(template, amount, COIN, FEE).digest())
    call("user", "bridge-1", "update",
         {"amount": amount, "v": sig.v, "r": f"{sig.r:064x}", "s": f"{sig.s:064x}"})

print("a stale lower amount is refused:")
sig = payer.sign(signature_form(template, 40_000_000, COIN, FEE).digest())
call("user", "bridge-1", "update",
     {"amount": 40_000_000, "v": sig.v, "r": f"{sig.r:064x}", "s": f"{sig.s:064x}"})

print("a stranger's signature is refused:")
mallory = KeyPair.generate(rng)
sig = mallory.sign(signature_form(template, 60_000_000, COIN, FEE).digest())
call("user", "bridge-1", "update",
     {"amount": 60_000_000, "v": sig.v, "r": f"{sig.r:064x}", "s": f"{sig.s:064x}"})

# --- what the provider gets to settle with --------------------------------------
export = chain.view("bridge-1", "get_update_tx")
print(f"exportable settlement: amount={export['amount']:,} change={export['change']:,}")
print(f"state root of the last block: {chain.blocks[-1].state_root[:24]}…")
replayed = ConsortiumChain.replay(chain.tx_log())
assert [b.state_root for b in replayed.blocks] == [b.state_root for b in chain.blocks]
print("replaying the transaction log reproduces every state root")
