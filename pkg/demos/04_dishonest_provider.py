"""The two ways a provider can cheat, and why neither pays.

Case one: the provider vanishes without settling; the deposit's refund
branch opens after its relative time-lock and the payer takes everything
back.  Case two: the provider settles a state that was cancelled away; the
disclosed pre-image lets the payer seize that output long before the
provider's own branch unlocks.

    python demos/04_dishonest_provider.py
"""

from chanbridge import LedgerError, ScenarioConfig
from chanbridge.scenarios import _Env

# --- case one: abandonment ----------------------------------------------------
env = _Env(ScenarioConfig(scenario="demo", seed=5), bidirectional=False)
funding_txid = env.open_and_register()
env.user.pay(10_000_000)
print("provider stops responding after one payment...")

confirmed = env.ledger.utxo(funding_txid, 0).height
while env.ledger.height - confirmed < 99:
    env.clock.mine(1)
try:
    env.user.refund_after_expiry()
except LedgerError:
    print(f"refund at delta {env.ledger.height - confirmed}: still sealed")
env.clock.mine(1)
env.user.refund_after_expiry()
print(f"refund at delta 100: accepted, payer recovered {env.user.wallet_balance():,} sat\n")

# --- case two: broadcasting a cancelled state -----------------------------------
env = _Env(ScenarioConfig(scenario="demo", seed=6), bidirectional=True)
env.open_and_register()
env.user.pay(30_000_000)
env.user.pay(20_000_000)
stale = env.sp.snapshot_update_tx()  # provider squirrels away the 0.5 BTC state

env.user.request_cancel(10_000_000)
env.sp.handle_cancel()
env.user.complete_cancel()
env.sp.finalize_cancel()
print("cancellation agreed: 0.5 BTC state retired, its pre-image is public")

settle_txid = env.sp.settle_snapshot(stale)
print(f"provider broadcasts the retired state anyway: {settle_txid.hex()[:16]}…")
print("  its own branch stays locked for 110 blocks;")

punish_txid = env.user.punish_old_state(settle_txid)
print(f"  the payer seizes the output immediately: {punish_txid.hex()[:16]}…")
print(f"payer ends with {env.user.wallet_balance():,} sat")
print(f"provider ends with {env.sp.wallet_balance():,} sat")
