"""Simulated Bitcoin ledger: UTXO set, block clock, validation, funding.

Transactions are validated on submission against the current chain tip and
confirmed by the next mine_block() call.  Heights drive OP_CSV: an output
confirmed at height h and guarded by ``n OP_CSV`` is spendable once the
chain height reaches h + n.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import script as sc
from .crypto import KeyPair, PublicKey, hash160, sha256, sha256d
from .interpreter import ExecContext, ScriptError, eval_script
from .tx import Transaction, TxInput, TxOutput, legacy_sighash_preimage

__all__ = [
    "Ledger", "LedgerError", "UtxoEntry", "Block",
    "build_funding_redeem", "funding_lock_script", "build_funding_tx",
    "sign_p2pkh_input",
]

COINBASE_TXID = bytes(32)
COINBASE_INDEX = 0xFFFFFFFF


class LedgerError(ValueError):
    """Transaction rejected by the ledger."""


@dataclass(frozen=True)
class UtxoEntry:
    output: TxOutput
    height: int  # confirmation height; 0 while still queued (never exposed)


@dataclass(frozen=True)
class Block:
    height: int
    txids: tuple[bytes, ...]
    fees: int
    minted: int


class Ledger:
    def __init__(self):
        self.blocks: list[Block] = []
        self.utxos: dict[tuple[bytes, int], UtxoEntry] = {}
        self.transactions: dict[bytes, Transaction] = {}
        self._queue: list[tuple[Transaction, int, int]] = []  # tx, fee, minted
        self._queued_spends: set[tuple[bytes, int]] = set()
        self._grant_counter = 0

    @property
    def height(self) -> int:
        return len(self.blocks)

    # -- queries ------------------------------------------------------------

    def utxo(self, txid: bytes, index: int) -> UtxoEntry | None:
        return self.utxos.get((txid, index))

    def get_tx(self, txid: bytes) -> Transaction | None:
        return self.transactions.get(txid)

    def utxos_paying(self, script_pubkey: bytes) -> list[tuple[tuple[bytes, int], UtxoEntry]]:
        return sorted(
            (item for item in self.utxos.items() if item[1].output.script_pubkey == script_pubkey),
            key=lambda item: (item[1].height, item[0]),
        )

    def balance(self, script_pubkey: bytes) -> int:
        return sum(entry.output.value for _, entry in self.utxos_paying(script_pubkey))

    def total_in_utxos(self) -> int:
        return sum(entry.output.value for entry in self.utxos.values())

    def total_fees(self) -> int:
        return sum(block.fees for block in self.blocks)

    def total_minted(self) -> int:
        return sum(block.minted for block in self.blocks)

    # -- mutation -----------------------------------------------------------

    def grant(self, script_pubkey: bytes, value: int) -> tuple[bytes, int]:
        """Mint coins to a script (coinbase-style, no inputs to validate)."""
        self._grant_counter += 1
        coinbase_input = TxInput(COINBASE_TXID, COINBASE_INDEX,
                                 sc.push(self._grant_counter.to_bytes(4, "little")), 0xFFFFFFFF)
        tx = Transaction(inputs=[coinbase_input], outputs=[TxOutput(value, script_pubkey)])
        self._queue.append((tx, 0, value))
        return tx.txid(), 0

    def submit_tx(self, tx: Transaction) -> bytes:
        """Validate against the current tip and queue for the next block."""
        txid = tx.txid()
        if txid in self.transactions or any(q.txid() == txid for q, _, _ in self._queue):
            raise LedgerError("duplicate transaction")
        if not tx.inputs or not tx.outputs:
            raise LedgerError("transaction needs inputs and outputs")
        total_in = 0
        seen: set[tuple[bytes, int]] = set()
        for txin in tx.inputs:
            outpoint = txin.outpoint()
            if outpoint in seen or outpoint in self._queued_spends:
                raise LedgerError("double spend")
            seen.add(outpoint)
            entry = self.utxos.get(outpoint)
            if entry is None:
                raise LedgerError(f"unknown or spent outpoint {outpoint[0].hex()[:16]}:{outpoint[1]}")
            total_in += entry.output.value
        total_out = 0
        for txout in tx.outputs:
            if txout.value is None:
                raise LedgerError("nil output value")
            if txout.value < 0:
                raise LedgerError("negative output value")
            total_out += txout.value
        if total_out > total_in:
            raise LedgerError("outputs exceed inputs (negative fee)")
        for index, txin in enumerate(tx.inputs):
            entry = self.utxos[txin.outpoint()]
            ctx = ExecContext(tx, index, entry.output.value, self.height, entry.height)
            try:
                ok = eval_script(txin.script_sig, entry.output.script_pubkey, ctx)
            except ScriptError as exc:
                raise LedgerError(f"script error on input {index}: {exc}") from exc
            if not ok:
                raise LedgerError(f"script failed on input {index}")
        self._queue.append((tx, total_in - total_out, 0))
        self._queued_spends.update(txin.outpoint() for txin in tx.inputs)
        return txid

    def mine_block(self) -> int:
        """Confirm all queued transactions in one new block."""
        height = self.height + 1
        fees = 0
        minted = 0
        txids = []
        for tx, fee, mint in self._queue:
            txid = tx.txid()
            for txin in tx.inputs:
                self.utxos.pop(txin.outpoint(), None)
            for index, txout in enumerate(tx.outputs):
                self.utxos[(txid, index)] = UtxoEntry(txout, height)
            self.transactions[txid] = tx
            fees += fee
            minted += mint
            txids.append(txid)
        self._queue.clear()
        self._queued_spends.clear()
        self.blocks.append(Block(height, tuple(txids), fees, minted))
        return height

    def assert_consistent(self) -> None:
        """Full history audit.

        Conservation (minted minus fees equals the live UTXO total) plus a
        replay of every block checking that no confirmed transaction ever
        spent a nonexistent or already-spent outpoint.
        """
        expected = self.total_minted() - self.total_fees()
        actual = self.total_in_utxos()
        if expected != actual:
            raise AssertionError(f"ledger out of balance: {actual} != {expected}")
        live: dict[tuple[bytes, int], int] = {}
        for block in self.blocks:
            for txid in block.txids:
                tx = self.transactions[txid]
                for txin in tx.inputs:
                    outpoint = txin.outpoint()
                    if outpoint[0] == COINBASE_TXID:
                        continue
                    if outpoint not in live:
                        raise AssertionError(
                            f"block {block.height} spends a dead outpoint "
                            f"{outpoint[0].hex()[:16]}:{outpoint[1]}")
                    del live[outpoint]
                for index, txout in enumerate(tx.outputs):
                    live[(txid, index)] = txout.value
        if live != {k: entry.output.value for k, entry in self.utxos.items()}:
            raise AssertionError("UTXO set does not match block history")


# ---------------------------------------------------------------------------
# Channel funding


def build_funding_redeem(pk_user: bytes, pk_provider: bytes, timelock: int) -> bytes:
    """Control script for the channel deposit.

    Either both parties sign (settlement path), or the depositor alone signs
    after ``timelock`` confirmations (refund path).  Keys are ordered by
    their compressed encodings so both sides derive identical scripts.
    """
    key_lo, key_hi = sorted((pk_user, pk_provider))
    return (
        bytes([sc.OP_IF])
        + sc.push_int(2) + sc.push(key_lo) + sc.push(key_hi) + sc.push_int(2)
        + bytes([sc.OP_CHECKMULTISIG, sc.OP_ELSE])
        + sc.push_int(timelock)
        + bytes([sc.OP_CSV, sc.OP_DROP])
        + sc.push(pk_user)
        + bytes([sc.OP_CHECKSIG, sc.OP_ENDIF])
    )


def funding_lock_script(redeem: bytes, mode: str) -> bytes:
    """Deposit output script: P2SH of the control script, or of its nested
    witness program in segwit mode."""
    if mode == "segwit":
        return sc.p2sh_script(hash160(sc.p2wsh_script(sha256(redeem))))
    return sc.p2sh_script(hash160(redeem))


def sign_p2pkh_input(tx: Transaction, index: int, key: KeyPair) -> None:
    script_code = sc.p2pkh_script(key.pub.hash160())
    digest = sha256d(legacy_sighash_preimage(tx, index, script_code))
    sig = key.sign(digest)
    tx.inputs[index].script_sig = sc.push(sig.wire()) + sc.push(key.pub.encode())


def build_funding_tx(ledger: Ledger, user_key: KeyPair, pk_provider: PublicKey,
                     deposit: int, timelock: int, fee: int,
                     mode: str = "legacy") -> tuple[Transaction, bytes]:
    """Build and sign the deposit transaction from the user's P2PKH coins.

    Returns the transaction and the control (redeem/witness) script of its
    deposit output; the transaction is not yet submitted.
    """
    wallet_script = sc.p2pkh_script(user_key.pub.hash160())
    candidates = ledger.utxos_paying(wallet_script)
    selected = []
    total = 0
    for outpoint, entry in candidates:
        selected.append((outpoint, entry))
        total += entry.output.value
        if total >= deposit + fee:
            break
    if total < deposit + fee:
        raise LedgerError(f"insufficient funds: have {total}, need {deposit + fee}")
    redeem = build_funding_redeem(user_key.pub.encode(), pk_provider.encode(), timelock)
    outputs = [TxOutput(deposit, funding_lock_script(redeem, mode))]
    change = total - deposit - fee
    if change > 0:
        outputs.append(TxOutput(change, wallet_script))
    tx = Transaction(
        version=2,
        inputs=[TxInput(outpoint[0], outpoint[1]) for outpoint, _ in selected],
        outputs=outputs,
    )
    for index in range(len(tx.inputs)):
        sign_p2pkh_input(tx, index, user_key)
    return tx, redeem
