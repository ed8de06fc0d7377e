"""Cancelling a payment in the two-way channel: the four-step dance.

Every step travels over the consortium chain: the request, the fresh hash,
the reduced-amount signature, and finally the disclosed pre-image that makes
the old channel state punishable.

    python demos/03_cancellation.py
"""

from chanbridge import COIN, ScenarioConfig
from chanbridge.scenarios import _Env

env = _Env(ScenarioConfig(scenario="demo", seed=99), bidirectional=True)
env.open_and_register()
print("channel open; remittance output guarded by hash-lock + 110-block delay")

env.user.pay(30_000_000)
env.user.pay(20_000_000)
print(f"paid up to {env.user.amount / COIN} BTC in two non-interactive steps")

print("\nstep 1: payer posts the cancel request on-chain")
env.user.request_cancel(10_000_000)

print("step 2: provider swaps in a template with a brand-new hash")
assert env.sp.handle_cancel()
new_view = env.consortium.view("bridge-1", "get_template")
print(f"  template generation is now {new_view['generation']}")

print("step 3: payer signs the reduced amount against the new template")
env.user.complete_cancel()
print(f"  channel amount is back to {env.user.amount / COIN} BTC")

print("step 4: provider publishes the retired pre-image")
env.sp.finalize_cancel()
disclosed = env.user.sync_disclosed()
print(f"  pre-image for generation 0 is public: {disclosed[0].hex()[:24]}…")

settle_txid = env.sp.settle()
env.clock.mine(env.config.update_timelock)
env.sp.sweep_settlement(settle_txid)
print("\nhonest settlement after the cancellation:")
print(f"  provider swept: {env.sp.wallet_balance():,} sat")
print(f"  payer change:   {env.user.wallet_balance():,} sat")
print(f"  direct messages between the parties: {len(env.bus.log)}")
