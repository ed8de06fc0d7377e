"""Bitcoin script subset: opcodes, assembly and decompilation helpers.

Scripts are plain ``bytes``.  Only the opcodes the channel protocol needs are
defined; the interpreter rejects anything else.
"""

from __future__ import annotations

__all__ = [
    "OP_0", "OP_PUSHDATA1", "OP_PUSHDATA2", "OP_PUSHDATA4", "OP_1", "OP_2",
    "OP_16", "OP_IF", "OP_ELSE", "OP_ENDIF", "OP_DROP", "OP_DUP", "OP_EQUAL",
    "OP_EQUALVERIFY", "OP_HASH160", "OP_CHECKSIG", "OP_CHECKMULTISIG",
    "OP_CHECKSEQUENCEVERIFY", "OP_CSV",
    "push", "push_int", "assemble", "elements", "to_asm",
    "script_num_encode", "script_num_decode",
    "p2pkh_script", "p2sh_script", "p2wpkh_script", "p2wsh_script",
    "is_p2sh", "witness_program", "conditionals_balanced",
    "ScriptSyntaxError",
]

OP_0 = 0x00
OP_PUSHDATA1 = 0x4C
OP_PUSHDATA2 = 0x4D
OP_PUSHDATA4 = 0x4E
OP_1 = 0x51
OP_2 = 0x52
OP_16 = 0x60
OP_IF = 0x63
OP_ELSE = 0x67
OP_ENDIF = 0x68
OP_DROP = 0x75
OP_DUP = 0x76
OP_EQUAL = 0x87
OP_EQUALVERIFY = 0x88
OP_HASH160 = 0xA9
OP_CHECKSIG = 0xAC
OP_CHECKMULTISIG = 0xAE
OP_CHECKSEQUENCEVERIFY = 0xB2
OP_CSV = OP_CHECKSEQUENCEVERIFY

OPCODE_NAMES = {
    OP_0: "OP_0",
    OP_PUSHDATA1: "OP_PUSHDATA1",
    OP_PUSHDATA2: "OP_PUSHDATA2",
    OP_PUSHDATA4: "OP_PUSHDATA4",
    OP_IF: "OP_IF",
    OP_ELSE: "OP_ELSE",
    OP_ENDIF: "OP_ENDIF",
    OP_DROP: "OP_DROP",
    OP_DUP: "OP_DUP",
    OP_EQUAL: "OP_EQUAL",
    OP_EQUALVERIFY: "OP_EQUALVERIFY",
    OP_HASH160: "OP_HASH160",
    OP_CHECKSIG: "OP_CHECKSIG",
    OP_CHECKMULTISIG: "OP_CHECKMULTISIG",
    OP_CHECKSEQUENCEVERIFY: "OP_CHECKSEQUENCEVERIFY",
}
OPCODE_NAMES.update({OP_1 + i: f"OP_{i + 1}" for i in range(16)})

MAX_PUSH = 520


class ScriptSyntaxError(ValueError):
    """Script bytes that cannot be decoded (truncated push, bad length)."""


def push(data: bytes) -> bytes:
    """Minimal push encoding for a data element."""
    n = len(data)
    if n > MAX_PUSH:
        raise ScriptSyntaxError(f"push of {n} bytes exceeds {MAX_PUSH}")
    if n == 0:
        return bytes([OP_0])
    if n == 1 and 1 <= data[0] <= 16:
        return bytes([OP_1 + data[0] - 1])
    if n < OP_PUSHDATA1:
        return bytes([n]) + data
    if n <= 0xFF:
        return bytes([OP_PUSHDATA1, n]) + data
    return bytes([OP_PUSHDATA2]) + n.to_bytes(2, "little") + data


def script_num_encode(n: int) -> bytes:
    # little-endian, sign-magnitude; empty encodes zero
    if n == 0:
        return b""
    neg = n < 0
    n = abs(n)
    out = bytearray()
    while n:
        out.append(n & 0xFF)
        n >>= 8
    if out[-1] & 0x80:
        out.append(0x80 if neg else 0x00)
    elif neg:
        out[-1] |= 0x80
    return bytes(out)


def script_num_decode(data: bytes, max_size: int = 5, require_minimal: bool = True) -> int:
    if len(data) > max_size:
        raise ScriptSyntaxError("script number too large")
    if not data:
        return 0
    if require_minimal:
        if data[-1] & 0x7F == 0 and (len(data) == 1 or not data[-2] & 0x80):
            raise ScriptSyntaxError("non-minimal script number")
    n = int.from_bytes(data, "little")
    if data[-1] & 0x80:
        n &= (1 << (8 * len(data) - 1)) - 1
        return -n
    return n


def push_int(n: int) -> bytes:
    """Push a small integer (used for time-lock operands and multisig counts)."""
    if n == 0:
        return bytes([OP_0])
    if 1 <= n <= 16:
        return bytes([OP_1 + n - 1])
    return push(script_num_encode(n))


def assemble(*parts: "int | bytes") -> bytes:
    """Build a script from raw opcodes (int) and pushed data elements (bytes)."""
    out = bytearray()
    for part in parts:
        if isinstance(part, int):
            out.append(part)
        else:
            out.extend(push(part))
    return bytes(out)


def elements(script: bytes):
    """Yield (opcode, data) pairs; data is None for non-push opcodes."""
    i = 0
    n = len(script)
    while i < n:
        op = script[i]
        i += 1
        if 0 < op < OP_PUSHDATA1:
            size = op
        elif op == OP_PUSHDATA1:
            if i >= n:
                raise ScriptSyntaxError("truncated OP_PUSHDATA1")
            size = script[i]
            i += 1
        elif op == OP_PUSHDATA2:
            if i + 2 > n:
                raise ScriptSyntaxError("truncated OP_PUSHDATA2")
            size = int.from_bytes(script[i : i + 2], "little")
            i += 2
        elif op == OP_PUSHDATA4:
            if i + 4 > n:
                raise ScriptSyntaxError("truncated OP_PUSHDATA4")
            size = int.from_bytes(script[i : i + 4], "little")
            i += 4
        else:
            yield op, None
            continue
        if i + size > n:
            raise ScriptSyntaxError("push runs past end of script")
        yield op, bytes(script[i : i + size])
        i += size


def to_asm(script: bytes) -> str:
    parts = []
    for op, data in elements(script):
        if data is not None:
            parts.append(data.hex() if data else "OP_0")
        elif OP_1 <= op <= OP_16:
            parts.append(str(op - OP_1 + 1))
        else:
            parts.append(OPCODE_NAMES.get(op, f"OP_UNKNOWN_{op:#04x}"))
    return " ".join(parts)


def conditionals_balanced(script: bytes) -> bool:
    """True iff OP_IF/OP_ELSE/OP_ENDIF nest correctly."""
    depth = 0
    try:
        for op, data in elements(script):
            if data is not None:
                continue
            if op == OP_IF:
                depth += 1
            elif op == OP_ELSE and depth == 0:
                return False
            elif op == OP_ENDIF:
                depth -= 1
                if depth < 0:
                    return False
    except ScriptSyntaxError:
        return False
    return depth == 0


# ---------------------------------------------------------------------------
# Standard output scripts


def p2pkh_script(pubkey_hash: bytes) -> bytes:
    assert len(pubkey_hash) == 20
    return assemble(OP_DUP, OP_HASH160, pubkey_hash, OP_EQUALVERIFY, OP_CHECKSIG)


def p2sh_script(script_hash: bytes) -> bytes:
    assert len(script_hash) == 20
    return assemble(OP_HASH160, script_hash, OP_EQUAL)


def p2wpkh_script(pubkey_hash: bytes) -> bytes:
    assert len(pubkey_hash) == 20
    return assemble(OP_0, pubkey_hash)


def p2wsh_script(script_hash: bytes) -> bytes:
    assert len(script_hash) == 32
    return assemble(OP_0, script_hash)


def is_p2sh(script: bytes) -> bool:
    return len(script) == 23 and script[0] == OP_HASH160 and script[1] == 20 and script[22] == OP_EQUAL


def witness_program(script: bytes) -> "tuple[int, bytes] | None":
    """Return (version, program) if the script is a v0 witness program."""
    if len(script) in (22, 34) and script[0] == OP_0 and script[1] == len(script) - 2:
        return 0, bytes(script[2:])
    return None
