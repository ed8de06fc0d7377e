"""Stack evaluation of the supported script subset.

Handles the spend shapes the channel protocol produces: raw script pairs,
P2SH (including the Fig-style hash/time-lock redeem scripts), native v0
witness programs, and P2SH-nested witness programs.  OP_CHECKSIG computes
the legacy or BIP 143 digest from the spending context; OP_CSV enforces the
relative-height rule against the ledger heights carried in the context.

Structural problems (unsupported opcode, unbalanced conditionals, malformed
signatures) raise ScriptError; an honest evaluation that just fails returns
False.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import script as sc
from .crypto import PublicKey, SignatureError, der_decode, ecdsa_verify, hash160, sha256, sha256d
from .tx import SIGHASH_ALL, Transaction, bip143_preimage, legacy_sighash_preimage

__all__ = ["ExecContext", "ScriptError", "eval_script"]

# sequence field interpretation, per BIP 68
SEQUENCE_DISABLE_FLAG = 1 << 31
SEQUENCE_TIME_FLAG = 1 << 22
SEQUENCE_MASK = 0xFFFF


class ScriptError(ValueError):
    """Structurally invalid script or signature encoding."""


@dataclass
class ExecContext:
    """Everything a spend evaluation needs to know about its surroundings."""

    tx: Transaction
    input_index: int
    input_value: int
    spender_height: int
    utxo_height: int

    def witness(self) -> list[bytes]:
        if self.tx.witnesses is None:
            return []
        return list(self.tx.witnesses[self.input_index])


def _truthy(item: bytes) -> bool:
    for i, byte in enumerate(item):
        if byte != 0:
            # negative zero (sign bit only in the last byte) is false
            return not (byte == 0x80 and i == len(item) - 1)
    return False


def _check_sig(sig_blob: bytes, pubkey_blob: bytes, ctx: ExecContext,
               script_code: bytes, segwit: bool) -> bool:
    if not sig_blob:
        return False
    hashtype = sig_blob[-1]
    if hashtype != SIGHASH_ALL:
        raise ScriptError(f"unsupported hash type {hashtype:#04x}")
    try:
        r, s = der_decode(sig_blob[:-1])
        pubkey = PublicKey.decode(pubkey_blob)
    except SignatureError as exc:
        raise ScriptError(str(exc)) from exc
    if segwit:
        preimage = bip143_preimage(ctx.tx, ctx.input_index, script_code, ctx.input_value)
    else:
        preimage = legacy_sighash_preimage(ctx.tx, ctx.input_index, script_code)
    return ecdsa_verify(pubkey, sha256d(preimage), r, s)


def _check_csv(operand: bytes, ctx: ExecContext) -> bool:
    blocks = sc.script_num_decode(operand, max_size=5)
    if blocks < 0:
        raise ScriptError("negative relative-lock operand")
    if ctx.tx.version < 2:
        return False  # BIP 112: CSV fails under pre-2 transaction versions
    sequence = ctx.tx.inputs[ctx.input_index].sequence
    if sequence & SEQUENCE_DISABLE_FLAG:
        return False
    if sequence & SEQUENCE_TIME_FLAG:
        return False  # height-based locks only
    if (sequence & SEQUENCE_MASK) < blocks:
        return False
    return ctx.spender_height - ctx.utxo_height >= blocks


def _run(script_bytes: bytes, stack: list[bytes], ctx: ExecContext,
         script_code: bytes, segwit: bool) -> bool:
    exec_flags: list[bool] = []
    for op, data in sc.elements(script_bytes):
        executing = all(exec_flags)
        if op == sc.OP_IF:
            flag = False
            if executing:
                if not stack:
                    raise ScriptError("OP_IF on empty stack")
                flag = _truthy(stack.pop())
            exec_flags.append(flag)
            continue
        if op == sc.OP_ELSE:
            if not exec_flags:
                raise ScriptError("OP_ELSE without OP_IF")
            exec_flags[-1] = not exec_flags[-1]
            continue
        if op == sc.OP_ENDIF:
            if not exec_flags:
                raise ScriptError("OP_ENDIF without OP_IF")
            exec_flags.pop()
            continue
        if not executing:
            continue
        if data is not None:
            stack.append(data)
        elif op == sc.OP_0:
            stack.append(b"")
        elif sc.OP_1 <= op <= sc.OP_16:
            stack.append(bytes([op - sc.OP_1 + 1]))
        elif op == sc.OP_DUP:
            if not stack:
                raise ScriptError("OP_DUP on empty stack")
            stack.append(stack[-1])
        elif op == sc.OP_DROP:
            if not stack:
                raise ScriptError("OP_DROP on empty stack")
            stack.pop()
        elif op == sc.OP_HASH160:
            if not stack:
                raise ScriptError("OP_HASH160 on empty stack")
            stack.append(hash160(stack.pop()))
        elif op in (sc.OP_EQUAL, sc.OP_EQUALVERIFY):
            if len(stack) < 2:
                raise ScriptError("OP_EQUAL needs two items")
            equal = stack.pop() == stack.pop()
            if op == sc.OP_EQUAL:
                stack.append(b"\x01" if equal else b"")
            elif not equal:
                return False
        elif op == sc.OP_CHECKSIG:
            if len(stack) < 2:
                raise ScriptError("OP_CHECKSIG needs two items")
            pubkey = stack.pop()
            sig = stack.pop()
            stack.append(b"\x01" if _check_sig(sig, pubkey, ctx, script_code, segwit) else b"")
        elif op == sc.OP_CHECKMULTISIG:
            if not stack:
                raise ScriptError("OP_CHECKMULTISIG on empty stack")
            n = sc.script_num_decode(stack.pop(), max_size=4)
            if not 0 < n <= 15 or len(stack) < n + 1:
                raise ScriptError("bad multisig key count")
            keys = [stack.pop() for _ in range(n)][::-1]
            m = sc.script_num_decode(stack.pop(), max_size=4)
            if not 0 < m <= n or len(stack) < m + 1:
                raise ScriptError("bad multisig signature count")
            sigs = [stack.pop() for _ in range(m)][::-1]
            stack.pop()  # the historical extra item
            key_pos = 0
            matched = 0
            for sig in sigs:
                while key_pos < len(keys):
                    ok = _check_sig(sig, keys[key_pos], ctx, script_code, segwit)
                    key_pos += 1
                    if ok:
                        matched += 1
                        break
            stack.append(b"\x01" if matched == len(sigs) else b"")
        elif op == sc.OP_CHECKSEQUENCEVERIFY:
            if not stack:
                raise ScriptError("OP_CSV on empty stack")
            if not _check_csv(stack[-1], ctx):
                return False
        else:
            name = sc.OPCODE_NAMES.get(op, f"{op:#04x}")
            raise ScriptError(f"unsupported opcode {name}")
    if exec_flags:
        raise ScriptError("unbalanced conditionals")
    return True


def _run_pushes(script_bytes: bytes, stack: list[bytes]) -> None:
    for op, data in sc.elements(script_bytes):
        if data is not None:
            stack.append(data)
        elif op == sc.OP_0:
            stack.append(b"")
        elif sc.OP_1 <= op <= sc.OP_16:
            stack.append(bytes([op - sc.OP_1 + 1]))
        else:
            raise ScriptError("unlocking script must be push-only")


def _eval_witness(program: bytes, items: list[bytes], ctx: ExecContext) -> bool:
    if len(program) == 20:
        # pay-to-witness-pubkey-hash: implied single-sig script
        if len(items) != 2:
            return False
        if hash160(items[1]) != program:
            return False
        script_code = sc.p2pkh_script(program)
        stack = list(items)
        if not _run(script_code, stack, ctx, script_code, segwit=True):
            return False
        return bool(stack) and _truthy(stack[-1])
    if len(program) == 32:
        # pay-to-witness-script-hash: last item is the witness script
        if not items:
            return False
        witness_script = items[-1]
        if sha256(witness_script) != program:
            return False
        stack = list(items[:-1])
        if not _run(witness_script, stack, ctx, witness_script, segwit=True):
            return False
        return bool(stack) and _truthy(stack[-1])
    raise ScriptError("unsupported witness program size")


def eval_script(unlock: "bytes | list[bytes]", lock: bytes, ctx: ExecContext) -> bool:
    """Evaluate a spend: unlocking script (or witness stack) against a lock.

    ``unlock`` may be a witness item list for direct witness-program spends;
    otherwise it is scriptSig bytes and any witness data is taken from the
    context transaction.
    """
    if isinstance(unlock, (list, tuple)):
        program = sc.witness_program(lock)
        if program is None:
            raise ScriptError("witness unlock against non-witness lock")
        return _eval_witness(program[1], list(unlock), ctx)

    program = sc.witness_program(lock)
    if program is not None:
        if unlock:
            return False  # native witness spends carry no scriptSig
        return _eval_witness(program[1], ctx.witness(), ctx)

    stack: list[bytes] = []
    _run_pushes(unlock, stack)
    saved = list(stack)
    if not _run(lock, stack, ctx, lock, segwit=False):
        return False
    if not stack or not _truthy(stack[-1]):
        return False
    if sc.is_p2sh(lock):
        if not saved:
            return False
        redeem = saved.pop()
        nested = sc.witness_program(redeem)
        if nested is not None:
            if saved:
                return False  # nested witness spends push only the program
            return _eval_witness(nested[1], ctx.witness(), ctx)
        redeem_stack = saved
        if not _run(redeem, redeem_stack, ctx, redeem, segwit=False):
            return False
        return bool(redeem_stack) and _truthy(redeem_stack[-1])
    return True
