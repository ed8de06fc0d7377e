"""Named protocol scenarios over the twin simulated chains.

Each scenario builds a fresh world from a seeded RNG, drives the two nodes
through one story (honest payments, cancellation, provider misbehavior),
asserts the outcome exactly, and leaves behind a deterministic trace plus a
balance report.  Same config and seed, same bytes.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace

from . import script as sc
from .consortium import ConsortiumChain
from .crypto import KeyPair
from .interpreter import ExecContext, eval_script
from .ledger import Ledger, LedgerError
from .nodes import (
    BRIDGE_ID,
    ChannelConfig,
    Clock,
    DirectBus,
    ProtocolError,
    ProviderNode,
    UserNode,
    timeout_spend,
)
from .trace import Trace

__all__ = ["ScenarioConfig", "ScenarioError", "ScenarioResult", "SCENARIOS", "run_scenario"]

# the seven chain operations a full channel lifecycle exercises
LIFECYCLE_OPS = (
    "deploy", "set_deposit", "set_template", "update",
    "replace_template", "disclose_preimage", "close",
)


class ScenarioError(AssertionError):
    """A scenario's built-in outcome check failed."""


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str = "happy-uni"
    deposit: int = 100_000_000
    fee: int = 10_000
    funding_timelock: int = 100
    update_timelock: int = 110
    mode: str = "legacy"
    confirmations: int = 6
    seed: int = 1


@dataclass
class ScenarioResult:
    name: str
    ok: bool
    report: dict
    trace: Trace
    env: "_Env | None" = None  # live world, for audits and replay checks

    def trace_ndjson(self) -> str:
        return self.trace.to_ndjson()


class _Env:
    """One scenario's world: chains, clock, nodes, and assertion bookkeeping."""

    def __init__(self, config: ScenarioConfig, bidirectional: bool):
        self.config = config
        self.channel = ChannelConfig(
            deposit=config.deposit,
            fee=config.fee,
            funding_timelock=config.funding_timelock,
            update_timelock=config.update_timelock,
            mode=config.mode,
            bidirectional=bidirectional,
            confirmations=config.confirmations,
        )
        self.rng = random.Random(config.seed)
        self.ledger = Ledger()
        self.consortium = ConsortiumChain()
        self.trace = Trace()
        self.clock = Clock(self.ledger, self.consortium, self.trace)
        self.bus = DirectBus()
        user_key = KeyPair.generate(self.rng)
        provider_key = KeyPair.generate(self.rng)
        self.user = UserNode(user_key, provider_key.pub.encode(), self.channel,
                             self.clock, self.bus)
        self.sp = ProviderNode(provider_key, user_key.pub.encode(), "user",
                               self.channel, self.clock, self.bus, self.rng)
        self.initial_funds = config.deposit + config.fee
        self.ledger.grant(sc.p2pkh_script(user_key.pub.hash160()), self.initial_funds)
        self.clock.mine(1)
        self.assertions: list[str] = []

    def check(self, name: str, condition: bool, detail: str = "") -> None:
        self.clock.record("harness", "scenario", "assert",
                          {"name": name, "ok": bool(condition)})
        if not condition:
            raise ScenarioError(f"{name}: {detail}" if detail else name)
        self.assertions.append(name)

    def open_and_register(self) -> bytes:
        self.sp.deploy_contracts()
        funding_txid = self.user.open_channel()
        self.sp.register_template()
        return funding_txid

    def funding_height(self, funding_txid: bytes) -> int:
        return self.ledger.utxo(funding_txid, 0).height

    def finish(self, extra: dict | None = None) -> dict:
        self.ledger.assert_consistent()
        self.check("offchain-bus-unused", not self.bus.log,
                   "the parties exchanged a direct message")
        user_final = self.user.wallet_balance()
        sp_final = self.sp.wallet_balance()
        fees = self.ledger.total_fees()
        self.check("funds-conserved",
                   user_final + sp_final + fees + self._locked_funds() == self.initial_funds,
                   f"{user_final} + {sp_final} + {fees} + {self._locked_funds()} "
                   f"!= {self.initial_funds}")
        op_counts = {op: self.consortium.op_counts.calls.get(op, 0) for op in LIFECYCLE_OPS}
        balances = {
            "initial_user_funds": self.initial_funds,
            "user_final": user_final,
            "sp_final": sp_final,
            "fees_paid": fees,
            "locked": self._locked_funds(),
        }
        self.clock.record("harness", "scenario", "op-counts", op_counts)
        self.clock.record("harness", "scenario", "balances", balances)
        report = {
            "scenario": self.config.scenario,
            "seed": self.config.seed,
            "balances": balances,
            "op_counts": op_counts,
            "assertions": list(self.assertions),
        }
        if extra:
            report.update(extra)
        return report

    def _locked_funds(self) -> int:
        wallet = set(self.user.wallet_scripts()) | set(self.sp.wallet_scripts())
        return sum(entry.output.value for entry in self.ledger.utxos.values()
                   if entry.output.script_pubkey not in wallet)


def _pay_schedule(env: _Env, fractions: "tuple[int, ...]") -> None:
    """Payments as tenths of the deposit, asserting non-interaction."""
    reads_before = env.user.btc.reads
    for tenths in fractions:
        env.user.pay(env.config.deposit * tenths // 10)
    env.check("payer-never-reads-bitcoin", env.user.btc.reads == reads_before,
              "payer touched the Bitcoin ledger while paying")


def _scenario_happy(env: _Env) -> dict:
    """Deposit, two rising payments, provider settlement at the final state."""
    deposit, fee = env.config.deposit, env.config.fee
    env.open_and_register()
    _pay_schedule(env, (1, 4))  # 0.1 then +0.4 of the deposit
    expected = deposit // 2
    settle_txid = env.sp.settle()
    env.user.observe_settlement(settle_txid)
    settlement = env.ledger.get_tx(settle_txid)
    env.check("settlement-values",
              [out.value for out in settlement.outputs] == [expected, deposit - expected - fee],
              f"outputs {[out.value for out in settlement.outputs]}")
    if env.channel.bidirectional:
        env.clock.mine(env.config.update_timelock)
        env.sp.sweep_settlement(settle_txid)
        env.check("provider-swept", env.sp.wallet_balance() == expected - fee)
    else:
        env.check("provider-paid", env.sp.wallet_balance() == expected)
    env.check("user-change", env.user.wallet_balance() == deposit - expected - fee)
    try:
        env.user.pay(1_000)
        closed_rejects = False
    except ProtocolError:
        closed_rejects = True
    env.check("closed-channel-rejects-payment", closed_rejects)
    return env.finish({"settlement": settle_txid.hex()})


def _scenario_cancel(env: _Env) -> dict:
    """0.3 then 0.5, cancel back to 0.4, honest settlement of the new state."""
    deposit, fee = env.config.deposit, env.config.fee
    env.open_and_register()
    _pay_schedule(env, (3, 2))  # 0.3 then +0.2
    env.check("amount-before-cancel", env.user.amount == deposit * 5 // 10)

    reads_before = env.user.btc.reads
    env.user.request_cancel(deposit // 10)
    env.check("cancel-answered", env.sp.handle_cancel())
    env.user.complete_cancel()
    env.sp.finalize_cancel()
    env.check("cancel-offchain-free", env.user.btc.reads == reads_before,
              "payer touched the Bitcoin ledger while cancelling")
    env.check("amount-after-cancel", env.user.amount == deposit * 4 // 10)
    disclosed = env.user.sync_disclosed()
    env.check("preimage-disclosed", 0 in disclosed)

    settle_txid = env.sp.settle()
    env.user.observe_settlement(settle_txid)
    settlement = env.ledger.get_tx(settle_txid)
    expected = deposit * 4 // 10
    env.check("settlement-values",
              [out.value for out in settlement.outputs] == [expected, deposit - expected - fee])
    env.clock.mine(env.config.update_timelock)
    env.sp.sweep_settlement(settle_txid)
    env.check("provider-swept", env.sp.wallet_balance() == expected - fee)
    env.check("user-change", env.user.wallet_balance() == deposit - expected - fee)
    return env.finish({"settlement": settle_txid.hex()})


def _scenario_abandon(env: _Env) -> dict:
    """Provider walks away; the payer refunds at exactly the lock boundary."""
    deposit, fee = env.config.deposit, env.config.fee
    funding_txid = env.open_and_register()
    _pay_schedule(env, (1,))
    confirmed_at = env.funding_height(funding_txid)

    while env.ledger.height - confirmed_at < env.config.funding_timelock - 1:
        env.clock.mine(1)
    try:
        env.user.refund_after_expiry()
        early_rejected = False
    except LedgerError:
        early_rejected = True
    env.check("refund-early-rejected", early_rejected,
              f"refund accepted at delta {env.ledger.height - confirmed_at}")
    env.clock.mine(1)
    refund_txid = env.user.refund_after_expiry()
    env.check("refund-at-boundary", refund_txid is not None)
    env.check("deposit-recovered", env.user.wallet_balance() == deposit - fee)
    env.check("provider-got-nothing", env.sp.wallet_balance() == 0)
    return env.finish({"refund": refund_txid.hex()})


def _scenario_old_state(env: _Env) -> dict:
    """Provider settles the retired pre-cancellation state; the payer seizes it."""
    deposit, fee = env.config.deposit, env.config.fee
    env.open_and_register()
    _pay_schedule(env, (3, 2))
    stale = env.sp.snapshot_update_tx()  # the 0.5-deposit state, kept out of spite

    env.user.request_cancel(deposit // 10)
    env.check("cancel-answered", env.sp.handle_cancel())
    env.user.complete_cancel()
    env.sp.finalize_cancel()
    env.user.sync_disclosed()

    settle_txid = env.sp.settle_snapshot(stale)
    settlement = env.ledger.get_tx(settle_txid)
    env.check("stale-settlement-values",
              [out.value for out in settlement.outputs]
              == [deposit * 5 // 10, deposit - deposit * 5 // 10 - fee])

    # the provider's delayed branch stays sealed at every delta short of the lock
    confirmed_at = env.ledger.utxo(settle_txid, 0).height
    redeem = env.user.templates_seen[0].redeem
    sweep = timeout_spend(settle_txid, 0, settlement.outputs[0].value, redeem,
                          env.config.update_timelock, env.sp.change_script(), fee,
                          env.sp.key, env.config.mode, nested=False)
    lock_script = settlement.outputs[0].script_pubkey
    blocked = all(
        not eval_script(sweep.inputs[0].script_sig,
                        lock_script,
                        ExecContext(sweep, 0, settlement.outputs[0].value,
                                    confirmed_at + delta, confirmed_at))
        for delta in range(env.config.update_timelock)
    )
    env.check("sweep-sealed-below-lock", blocked)
    env.check("sweep-opens-at-lock",
              eval_script(sweep.inputs[0].script_sig, lock_script,
                          ExecContext(sweep, 0, settlement.outputs[0].value,
                                      confirmed_at + env.config.update_timelock, confirmed_at)))
    try:
        env.sp.btc.submit(sweep, "sweep")
        premature = False
    except LedgerError:
        premature = True
    env.check("premature-sweep-rejected", premature)

    punish_txid = env.user.punish_old_state(settle_txid)
    env.check("punished", punish_txid is not None)
    try:
        env.sp.btc.submit(sweep, "sweep")
        late_sweep = True
    except LedgerError:
        late_sweep = False
    env.check("seized-output-unsweepable", not late_sweep)
    env.check("user-recovers-funds", env.user.wallet_balance() == deposit - 2 * fee)
    env.check("provider-got-nothing", env.sp.wallet_balance() == 0)
    return env.finish({"settlement": settle_txid.hex(), "punishment": punish_txid.hex()})


# scenario -> (driver, bidirectional channel, forced mode)
_CATALOG = {
    "happy-uni": (_scenario_happy, False, None),
    "happy-bidir": (_scenario_happy, True, None),
    "cancel-bidir": (_scenario_cancel, True, None),
    "fraud-abandon": (_scenario_abandon, False, None),
    "fraud-old-state": (_scenario_old_state, True, None),
    "segwit-happy": (_scenario_happy, False, "segwit"),
}
SCENARIOS = tuple(_CATALOG)

# scenarios that exercise the complete call surface, cancellation included
BIDIR_SUITE = ("cancel-bidir", "fraud-old-state")


def run_scenario(config: ScenarioConfig) -> ScenarioResult:
    entry = _CATALOG.get(config.scenario)
    if entry is None:
        raise ValueError(f"unknown scenario {config.scenario!r}; "
                         f"choose from {', '.join(sorted(_CATALOG))}")
    driver, bidirectional, forced_mode = entry
    cfg = replace(config, mode=forced_mode) if forced_mode else config
    env = _Env(cfg, bidirectional)
    try:
        report = driver(env)
        ok = True
    except (ScenarioError, ProtocolError, LedgerError) as exc:
        report = {"scenario": config.scenario, "seed": config.seed, "error": str(exc)}
        ok = False
    return ScenarioResult(config.scenario, ok, report, env.trace, env)
