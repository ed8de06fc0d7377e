"""A payment channel by hand, straight on the simulated Bitcoin ledger.

Walks the raw mechanics with no consortium chain involved: fund a 2-of-2
deposit, sign rising channel states off-chain, broadcast only the last one.
Run it top to bottom:

    python demos/01_channel_on_the_ledger.py
"""

import random

from chanbridge import (
    COIN,
    KeyPair,
    Ledger,
    build_funding_tx,
    build_template,
    complete_transaction,
    signature_form,
)
from chanbridge import script as sc
from chanbridge.templates import FundingRef

rng = random.Random(2024)
payer = KeyPair.generate(rng)
payee = KeyPair.generate(rng)
FEE = 10_000

# --- fund the channel -------------------------------------------------------
ledger = Ledger()
ledger.grant(sc.p2pkh_script(payer.pub.hash160()), COIN + FEE)
ledger.mine_block()

funding_tx, control = build_funding_tx(ledger, payer, payee.pub,
                                       deposit=COIN, timelock=100, fee=FEE)
funding_txid = ledger.submit_tx(funding_tx)
ledger.mine_block()
print(f"deposit confirmed: {funding_txid.hex()[:16]}… holds 1 BTC behind")
print(f"  {sc.to_asm(control)[:60]}…")

# --- pay off-chain -----------------------------------------------------------
# The template is the shared skeleton; each payment is just a fresh signature
# over it with a larger amount.  Nothing touches the ledger here.
template = build_template("legacy", FundingRef(funding_txid, 0, control),
                          payer.pub.encode(), payee.pub.encode())
states = []
for amount in (10_000_000, 50_000_000):
    digest = signature_form(template, amount, COIN, FEE).digest()
    states.append((amount, payer.sign(digest)))
    print(f"channel state now pays {amount / COIN} BTC (signature only, off-chain)")

# --- settle the last state ----------------------------------------------------
amount, payer_sig = states[-1]
digest = signature_form(template, amount, COIN, FEE).digest()
settlement = complete_transaction(template, payer_sig, payee.sign(digest),
                                  amount, COIN - amount - FEE, COIN, FEE)
ledger.submit_tx(settlement)
ledger.mine_block()

print("settled:")
print(f"  payee wallet: {ledger.balance(sc.p2pkh_script(payee.pub.hash160())):,} sat")
print(f"  payer change: {ledger.balance(sc.p2pkh_script(payer.pub.hash160())):,} sat")
ledger.assert_consistent()
print("ledger conservation holds")
