"""Hashes and secp256k1 ECDSA with public-key recovery.

Everything here is self-contained: RIPEMD-160 and Keccak-256 are implemented
in pure Python (hashlib provides neither on this platform), and the curve
arithmetic uses Jacobian coordinates over gmpy2 integers so that signature
recovery is fast enough to run thousands of contract-side verifications in a
test session.

Signatures are produced with deterministic nonces (RFC 6979), normalized to
low-s (BIP 146) and encoded in strict DER (BIP 66).  Each signature carries a
recovery id so a verifier can recover the signing public key from
(digest, v, r, s) alone, ecrecover-style.
"""

from __future__ import annotations

import hashlib
import hmac
import random
from dataclasses import dataclass
from functools import lru_cache

from gmpy2 import invert, mpz, powmod

__all__ = [
    "sha256",
    "sha256d",
    "ripemd160",
    "hash160",
    "keccak256",
    "eth_address",
    "PublicKey",
    "KeyPair",
    "RecoverableSignature",
    "ecdsa_sign",
    "ecdsa_verify",
    "ecdsa_recover",
    "der_encode",
    "der_decode",
    "SignatureError",
]


class SignatureError(ValueError):
    """Malformed or unverifiable signature material."""


# ---------------------------------------------------------------------------
# Hashing


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def sha256d(data: bytes) -> bytes:
    """Double SHA-256, the digest form Bitcoin signs and ids transactions by."""
    return hashlib.sha256(hashlib.sha256(data).digest()).digest()


# RIPEMD-160, from the reference description (Dobbertin, Bosselaers, Preneel).
# OpenSSL 3 dropped it from hashlib's default providers, so we carry our own.

_RL = [
    0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15,
    7, 4, 13, 1, 10, 6, 15, 3, 12, 0, 9, 5, 2, 14, 11, 8,
    3, 10, 14, 4, 9, 15, 8, 1, 2, 7, 0, 6, 13, 11, 5, 12,
    1, 9, 11, 10, 0, 8, 12, 4, 13, 3, 7, 15, 14, 5, 6, 2,
    4, 0, 5, 9, 7, 12, 2, 10, 14, 1, 3, 8, 11, 6, 15, 13,
]
_RR = [
    5, 14, 7, 0, 9, 2, 11, 4, 13, 6, 15, 8, 1, 10, 3, 12,
    6, 11, 3, 7, 0, 13, 5, 10, 14, 15, 8, 12, 4, 9, 1, 2,
    15, 5, 1, 3, 7, 14, 6, 9, 11, 8, 12, 2, 10, 0, 4, 13,
    8, 6, 4, 1, 3, 11, 15, 0, 5, 12, 2, 13, 9, 7, 10, 14,
    12, 15, 10, 4, 1, 5, 8, 7, 6, 2, 13, 14, 0, 3, 9, 11,
]
_SL = [
    11, 14, 15, 12, 5, 8, 7, 9, 11, 13, 14, 15, 6, 7, 9, 8,
    7, 6, 8, 13, 11, 9, 7, 15, 7, 12, 15, 9, 11, 7, 13, 12,
    11, 13, 6, 7, 14, 9, 13, 15, 14, 8, 13, 6, 5, 12, 7, 5,
    11, 12, 14, 15, 14, 15, 9, 8, 9, 14, 5, 6, 8, 6, 5, 12,
    9, 15, 5, 11, 6, 8, 13, 12, 5, 12, 13, 14, 11, 8, 5, 6,
]
_SR = [
    8, 9, 9, 11, 13, 15, 15, 5, 7, 7, 8, 11, 14, 14, 12, 6,
    9, 13, 15, 7, 12, 8, 9, 11, 7, 7, 12, 7, 6, 15, 13, 11,
    9, 7, 15, 11, 8, 6, 6, 14, 12, 13, 5, 14, 13, 13, 7, 5,
    15, 5, 8, 11, 14, 14, 6, 14, 6, 9, 12, 9, 12, 5, 15, 8,
    8, 5, 12, 9, 12, 5, 14, 6, 8, 13, 6, 5, 15, 13, 11, 11,
]
_KL = [0x00000000, 0x5A827999, 0x6ED9EBA1, 0x8F1BBCDC, 0xA953FD4E]
_KR = [0x50A28BE6, 0x5C4DD124, 0x6D703EF3, 0x7A6D76E9, 0x00000000]

_M32 = 0xFFFFFFFF


def _rol32(x: int, n: int) -> int:
    return ((x << n) | (x >> (32 - n))) & _M32


def _rmd_f(j: int, x: int, y: int, z: int) -> int:
    if j < 16:
        return x ^ y ^ z
    if j < 32:
        return (x & y) | (~x & z)
    if j < 48:
        return (x | ~y) ^ z
    if j < 64:
        return (x & z) | (y & ~z)
    return x ^ (y | ~z)


def ripemd160(data: bytes) -> bytes:
    h = [0x67452301, 0xEFCDAB89, 0x98BADCFE, 0x10325476, 0xC3D2E1F0]
    padded = data + b"\x80"
    padded += b"\x00" * ((56 - len(padded) % 64) % 64)
    padded += (len(data) * 8).to_bytes(8, "little")
    for off in range(0, len(padded), 64):
        x = [int.from_bytes(padded[off + 4 * i : off + 4 * i + 4], "little") for i in range(16)]
        al, bl, cl, dl, el = h
        ar, br, cr, dr, er = h
        for j in range(80):
            rnd = j // 16
            t = (al + _rmd_f(j, bl, cl, dl) + x[_RL[j]] + _KL[rnd]) & _M32
            t = (_rol32(t, _SL[j]) + el) & _M32
            al, el, dl, cl, bl = el, dl, _rol32(cl, 10), bl, t
            t = (ar + _rmd_f(79 - j, br, cr, dr) + x[_RR[j]] + _KR[rnd]) & _M32
            t = (_rol32(t, _SR[j]) + er) & _M32
            ar, er, dr, cr, br = er, dr, _rol32(cr, 10), br, t
        h = [
            (h[1] + cl + dr) & _M32,
            (h[2] + dl + er) & _M32,
            (h[3] + el + ar) & _M32,
            (h[4] + al + br) & _M32,
            (h[0] + bl + cr) & _M32,
        ]
    return b"".join(v.to_bytes(4, "little") for v in h)


@lru_cache(maxsize=65536)
def hash160(data: bytes) -> bytes:
    """RIPEMD160(SHA256(x)), the 20-byte hash used by OP_HASH160 and addresses.

    Cached: channel flows hash the same keys and scripts over and over, and
    the pure-Python RIPEMD round is the engine's slowest primitive.
    """
    return ripemd160(hashlib.sha256(data).digest())


# Keccak-256 (original padding, not the NIST SHA-3 variant) as used by the
# Ethereum address derivation.

_KECCAK_RC = [
    0x0000000000000001, 0x0000000000008082, 0x800000000000808A, 0x8000000080008000,
    0x000000000000808B, 0x0000000080000001, 0x8000000080008081, 0x8000000000008009,
    0x000000000000008A, 0x0000000000000088, 0x0000000080008009, 0x000000008000000A,
    0x000000008000808B, 0x800000000000008B, 0x8000000000008089, 0x8000000000008003,
    0x8000000000008002, 0x8000000000000080, 0x000000000000800A, 0x800000008000000A,
    0x8000000080008081, 0x8000000000008080, 0x0000000080000001, 0x8000000080008008,
]
# rotation offsets indexed [x][y] on the 5x5 lane grid
_KECCAK_ROT = [
    [0, 36, 3, 41, 18],
    [1, 44, 10, 45, 2],
    [62, 6, 43, 15, 61],
    [28, 55, 25, 21, 56],
    [27, 20, 39, 8, 14],
]
_M64 = (1 << 64) - 1


def _build_keccak_map():
    # per output lane of the rho+pi step: (source lane, source column, rotation)
    out = [None] * 25
    for x in range(5):
        for y in range(5):
            out[y + 5 * ((2 * x + 3 * y) % 5)] = (x + 5 * y, x, _KECCAK_ROT[x][y])
    return out


_KECCAK_MAP = _build_keccak_map()


def _keccak_f(a: list[int]) -> None:
    # state index is x + 5*y; theta folded into the rho+pi pass
    m = _M64
    rnd_map = _KECCAK_MAP
    for rc in _KECCAK_RC:
        c0 = a[0] ^ a[5] ^ a[10] ^ a[15] ^ a[20]
        c1 = a[1] ^ a[6] ^ a[11] ^ a[16] ^ a[21]
        c2 = a[2] ^ a[7] ^ a[12] ^ a[17] ^ a[22]
        c3 = a[3] ^ a[8] ^ a[13] ^ a[18] ^ a[23]
        c4 = a[4] ^ a[9] ^ a[14] ^ a[19] ^ a[24]
        d = (
            c4 ^ (((c1 << 1) | (c1 >> 63)) & m),
            c0 ^ (((c2 << 1) | (c2 >> 63)) & m),
            c1 ^ (((c3 << 1) | (c3 >> 63)) & m),
            c2 ^ (((c4 << 1) | (c4 >> 63)) & m),
            c3 ^ (((c0 << 1) | (c0 >> 63)) & m),
        )
        b = [0] * 25
        for j in range(25):
            s, col, r = rnd_map[j]
            v = a[s] ^ d[col]
            b[j] = ((v << r) | (v >> (64 - r))) & m if r else v
        for y in (0, 5, 10, 15, 20):
            b0, b1, b2, b3, b4 = b[y], b[y + 1], b[y + 2], b[y + 3], b[y + 4]
            a[y] = b0 ^ (~b1 & b2)
            a[y + 1] = b1 ^ (~b2 & b3)
            a[y + 2] = b2 ^ (~b3 & b4)
            a[y + 3] = b3 ^ (~b4 & b0)
            a[y + 4] = b4 ^ (~b0 & b1)
        a[0] ^= rc


def keccak256(data: bytes) -> bytes:
    rate = 136
    state = [0] * 25
    padded = data + b"\x01" + b"\x00" * (rate - 1 - len(data) % rate)
    padded = padded[: len(padded) - 1] + bytes([padded[-1] | 0x80])
    for off in range(0, len(padded), rate):
        block = padded[off : off + rate]
        for i in range(rate // 8):
            state[i] ^= int.from_bytes(block[8 * i : 8 * i + 8], "little")
        _keccak_f(state)
    return b"".join(state[i].to_bytes(8, "little") for i in range(4))


# ---------------------------------------------------------------------------
# secp256k1

P = 2**256 - 2**32 - 977
N = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141
GX = 0x79BE667EF9DCBBAC55A06295CE870B07029BFCDB2DCE28D959F2815B16F81798
GY = 0x483ADA7726A3C4655DA4FBFC0E1108A8FD17B448A68554199C47D08FFB10D4B8

_P = mpz(P)
_ZERO, _ONE = mpz(0), mpz(1)
_INF = (_ZERO, _ONE, _ZERO)


def _jac_double(X1, Y1, Z1):
    p = _P
    A = X1 * X1 % p
    B = Y1 * Y1 % p
    C = B * B % p
    t = X1 + B
    D = 2 * (t * t - A - C) % p
    E = 3 * A % p
    X3 = (E * E - 2 * D) % p
    Y3 = (E * (D - X3) - 8 * C) % p
    Z3 = 2 * Y1 * Z1 % p
    return X3, Y3, Z3


def _jac_add_affine(X1, Y1, Z1, x2, y2):
    # mixed addition with an affine point (Z2 = 1)
    if Z1 == 0:
        return x2, y2, _ONE
    p = _P
    Z1Z1 = Z1 * Z1 % p
    U2 = x2 * Z1Z1 % p
    S2 = y2 * Z1 * Z1Z1 % p
    H = (U2 - X1) % p
    R = (S2 - Y1) % p
    if H == 0:
        if R == 0:
            return _jac_double(X1, Y1, Z1)
        return _INF
    HH = H * H % p
    HHH = H * HH % p
    V = X1 * HH % p
    X3 = (R * R - HHH - 2 * V) % p
    Y3 = (R * (V - X3) - Y1 * HHH) % p
    Z3 = Z1 * H % p
    return X3, Y3, Z3


def _jac_add(p1, p2):
    X1, Y1, Z1 = p1
    X2, Y2, Z2 = p2
    if Z1 == 0:
        return p2
    if Z2 == 0:
        return p1
    p = _P
    Z1Z1 = Z1 * Z1 % p
    Z2Z2 = Z2 * Z2 % p
    U1 = X1 * Z2Z2 % p
    U2 = X2 * Z1Z1 % p
    S1 = Y1 * Z2 * Z2Z2 % p
    S2 = Y2 * Z1 * Z1Z1 % p
    H = (U2 - U1) % p
    R = (S2 - S1) % p
    if H == 0:
        if R == 0:
            return _jac_double(X1, Y1, Z1)
        return _INF
    HH = H * H % p
    HHH = H * HH % p
    V = U1 * HH % p
    X3 = (R * R - HHH - 2 * V) % p
    Y3 = (R * (V - X3) - S1 * HHH) % p
    Z3 = Z1 * Z2 * H % p
    return X3, Y3, Z3


def _to_affine(point):
    X, Y, Z = point
    if Z == 0:
        return None
    zinv = invert(Z, _P)
    zinv2 = zinv * zinv % _P
    return int(X * zinv2 % _P), int(Y * zinv2 * zinv % _P)


def _mul_point(k: int, x: int, y: int):
    """k * (x, y) via a 4-bit window; returns a Jacobian triple."""
    p = _P
    x, y = mpz(x), mpz(y)
    table = [None, (x, y, _ONE)]
    for i in range(2, 16):
        table.append(_jac_add_affine(*table[i - 1], x, y))
    shift = 252
    while shift >= 0 and not (k >> shift) & 0xF:
        shift -= 4
    if shift < 0:
        return _INF
    X, Y, Z = table[(k >> shift) & 0xF]
    shift -= 4
    while shift >= 0:
        for _ in range(4):
            # inlined _jac_double; Z uses the pre-update Y
            A = X * X % p
            B = Y * Y % p
            C = B * B % p
            t = X + B
            D = 2 * (t * t - A - C) % p
            E = 3 * A % p
            Z = 2 * Y * Z % p
            X = (E * E - 2 * D) % p
            Y = (E * (D - X) - 8 * C) % p
        nib = (k >> shift) & 0xF
        if nib:
            X, Y, Z = _jac_add((X, Y, Z), table[nib])
        shift -= 4
    return X, Y, Z


def _build_g_comb():
    # affine tables of nib * 16**i * G for each of the 64 nibble positions,
    # batch-normalized with a single field inversion
    jac_points = []
    base = (mpz(GX), mpz(GY), _ONE)
    for _ in range(64):
        row = [base]
        for _ in range(14):
            row.append(_jac_add(row[-1], base))
        jac_points.extend(row)
        for _ in range(4):
            base = _jac_double(*base)
    zs = [pt[2] for pt in jac_points]
    prefix = [_ONE]
    for z in zs:
        prefix.append(prefix[-1] * z % _P)
    inv_all = invert(prefix[-1], _P)
    affine = [None] * len(jac_points)
    for i in range(len(jac_points) - 1, -1, -1):
        zinv = inv_all * prefix[i] % _P
        inv_all = inv_all * zs[i] % _P
        X, Y, _ = jac_points[i]
        zinv2 = zinv * zinv % _P
        affine[i] = (X * zinv2 % _P, Y * zinv2 * zinv % _P)
    return [affine[15 * i : 15 * i + 15] for i in range(64)]


_G_COMB = _build_g_comb()


def _mul_g(k: int):
    """k * G using the fixed-base comb table; returns a Jacobian triple."""
    acc = _INF
    for i in range(64):
        nib = k & 0xF
        k >>= 4
        if nib:
            ax, ay = _G_COMB[i][nib - 1]
            acc = _jac_add_affine(*acc, ax, ay)
    return acc


_SQRT_EXP = mpz((P + 1) // 4)


def _lift_x(x: int, odd: bool) -> int | None:
    xm = mpz(x)
    y2 = (xm * xm * xm + 7) % _P
    y = powmod(y2, _SQRT_EXP, _P)
    if y * y % _P != y2:
        return None
    if (y & 1) != odd:
        y = _P - y
    return int(y)


@dataclass(frozen=True)
class PublicKey:
    x: int
    y: int

    def encode(self, compressed: bool = True) -> bytes:
        if compressed:
            return bytes([2 + (self.y & 1)]) + self.x.to_bytes(32, "big")
        return b"\x04" + self.x.to_bytes(32, "big") + self.y.to_bytes(32, "big")

    @classmethod
    def decode(cls, data: bytes) -> "PublicKey":
        if len(data) == 33 and data[0] in (2, 3):
            x = int.from_bytes(data[1:], "big")
            if x >= P:
                raise SignatureError("pubkey x out of field range")
            y = _lift_x(x, bool(data[0] & 1))
            if y is None:
                raise SignatureError("pubkey x not on curve")
            return cls(x, y)
        if len(data) == 65 and data[0] == 4:
            x = int.from_bytes(data[1:33], "big")
            y = int.from_bytes(data[33:], "big")
            if x >= P or y >= P or (y * y - x * x * x - 7) % P != 0:
                raise SignatureError("uncompressed pubkey not on curve")
            return cls(x, y)
        raise SignatureError("bad pubkey encoding")

    def hash160(self) -> bytes:
        return hash160(self.encode())


def eth_address(pubkey: "PublicKey | bytes") -> bytes:
    """Last 20 bytes of Keccak-256 over the 64-byte uncompressed key body.

    Accepts a PublicKey or any SEC1 encoding; compressed keys are expanded
    first so both encodings of one key map to the same address.
    """
    if isinstance(pubkey, (bytes, bytearray)):
        pubkey = PublicKey.decode(bytes(pubkey))
    return keccak256(pubkey.encode(compressed=False)[1:])[12:]


# ---------------------------------------------------------------------------
# ECDSA


def _rfc6979_nonces(secret: int, digest: bytes):
    # RFC 6979 section 3.2 with HMAC-SHA256, qlen = 256
    x = secret.to_bytes(32, "big")
    h = (int.from_bytes(digest, "big") % N).to_bytes(32, "big")
    v = b"\x01" * 32
    k = b"\x00" * 32
    k = hmac.new(k, v + b"\x00" + x + h, hashlib.sha256).digest()
    v = hmac.new(k, v, hashlib.sha256).digest()
    k = hmac.new(k, v + b"\x01" + x + h, hashlib.sha256).digest()
    v = hmac.new(k, v, hashlib.sha256).digest()
    while True:
        v = hmac.new(k, v, hashlib.sha256).digest()
        candidate = int.from_bytes(v, "big")
        if 1 <= candidate < N:
            yield candidate
        k = hmac.new(k, v + b"\x00", hashlib.sha256).digest()
        v = hmac.new(k, v, hashlib.sha256).digest()


def ecdsa_sign(secret: int, digest: bytes) -> "RecoverableSignature":
    """Sign a 32-byte digest; deterministic nonce, low-s, with recovery id."""
    if not 1 <= secret < N:
        raise SignatureError("secret key out of range")
    if len(digest) != 32:
        raise SignatureError("digest must be 32 bytes")
    z = int.from_bytes(digest, "big") % N
    for k in _rfc6979_nonces(secret, digest):
        point = _to_affine(_mul_g(k))
        if point is None:
            continue
        rx, ry = point
        r = rx % N
        if r == 0:
            continue
        s = int(invert(k, N)) * (z + r * secret) % N
        if s == 0:
            continue
        v = (ry & 1) | (2 if rx >= N else 0)
        if s > N // 2:
            s = N - s
            v ^= 1
        return RecoverableSignature(r, s, v)


def ecdsa_verify(pubkey: PublicKey, digest: bytes, r: int, s: int) -> bool:
    if not (1 <= r < N and 1 <= s < N):
        return False
    z = int.from_bytes(digest, "big") % N
    w = int(invert(s, N))
    u1 = z * w % N
    u2 = r * w % N
    point = _to_affine(_jac_add(_mul_g(u1), _mul_point(u2, pubkey.x, pubkey.y)))
    if point is None:
        return False
    return point[0] % N == r


def ecdsa_recover(digest: bytes, v: int, r: int, s: int) -> PublicKey:
    """Recover the unique signing public key from a signature (SEC 1, 4.1.6).

    Accepts recovery ids 0..3 or the 27..30 convention used by ecrecover.
    """
    if v >= 27:
        v -= 27
    if v not in (0, 1, 2, 3):
        raise SignatureError("invalid recovery id")
    if not (1 <= r < N and 1 <= s < N):
        raise SignatureError("r/s out of range")
    if len(digest) != 32:
        raise SignatureError("digest must be 32 bytes")
    x = r + N if v & 2 else r
    if x >= P:
        raise SignatureError("recovery x out of field range")
    y = _lift_x(x, bool(v & 1))
    if y is None:
        raise SignatureError("recovery point not on curve")
    z = int.from_bytes(digest, "big") % N
    rinv = int(invert(r, N))
    u1 = (-z * rinv) % N
    u2 = s * rinv % N
    point = _to_affine(_jac_add(_mul_g(u1), _mul_point(u2, x, y)))
    if point is None:
        raise SignatureError("recovered point at infinity")
    return PublicKey(point[0], point[1])


# ---------------------------------------------------------------------------
# Signature container and strict-DER codec


def der_encode(r: int, s: int) -> bytes:
    def enc(n: int) -> bytes:
        b = n.to_bytes((n.bit_length() + 7) // 8 or 1, "big")
        if b[0] & 0x80:
            b = b"\x00" + b
        return b"\x02" + bytes([len(b)]) + b

    body = enc(r) + enc(s)
    return b"\x30" + bytes([len(body)]) + body


def der_decode(sig: bytes) -> tuple[int, int]:
    """Strict-DER (BIP 66) parse of a signature body into (r, s)."""

    def fail(msg: str):
        raise SignatureError(f"bad DER signature: {msg}")

    if len(sig) < 8 or len(sig) > 72:
        fail("length out of bounds")
    if sig[0] != 0x30 or sig[1] != len(sig) - 2:
        fail("bad envelope")
    if sig[2] != 0x02:
        fail("r not an integer")
    rlen = sig[3]
    if rlen == 0 or 4 + rlen + 2 > len(sig):
        fail("bad r length")
    if sig[4] & 0x80:
        fail("negative r")
    if rlen > 1 and sig[4] == 0 and not sig[5] & 0x80:
        fail("non-minimal r")
    spos = 4 + rlen
    if sig[spos] != 0x02:
        fail("s not an integer")
    slen = sig[spos + 1]
    if slen == 0 or spos + 2 + slen != len(sig):
        fail("bad s length")
    if sig[spos + 2] & 0x80:
        fail("negative s")
    if slen > 1 and sig[spos + 2] == 0 and not sig[spos + 3] & 0x80:
        fail("non-minimal s")
    r = int.from_bytes(sig[4:spos], "big")
    s = int.from_bytes(sig[spos + 2 : spos + 2 + slen], "big")
    return r, s


@dataclass(frozen=True)
class RecoverableSignature:
    """ECDSA signature as (r, s) plus the recovery id v.

    s is always in the lower half of the curve order, so v identifies the
    signing key uniquely and the DER form is Bitcoin-standard.
    """

    r: int
    s: int
    v: int

    def __post_init__(self):
        if not (1 <= self.r < N and 1 <= self.s < N):
            raise SignatureError("r/s out of range")
        if self.s > N // 2:
            raise SignatureError("signature not low-s")
        if self.v not in (0, 1, 2, 3):
            raise SignatureError("invalid recovery id")

    def der(self) -> bytes:
        return der_encode(self.r, self.s)

    def wire(self, hashtype: int = 0x01) -> bytes:
        """DER body plus the 1-byte hash type, as pushed in scripts/witnesses."""
        return self.der() + bytes([hashtype])

    @classmethod
    def from_der(cls, der: bytes, v: int) -> "RecoverableSignature":
        r, s = der_decode(der)
        return cls(r, s, v)

    def vrs(self) -> tuple[int, int, int]:
        return self.v, self.r, self.s


class KeyPair:
    """secp256k1 keypair; the secret is a scalar in [1, N)."""

    __slots__ = ("secret", "pub")

    def __init__(self, secret: int):
        if not 1 <= secret < N:
            raise SignatureError("secret key out of range")
        self.secret = secret
        point = _to_affine(_mul_g(secret))
        self.pub = PublicKey(point[0], point[1])

    @classmethod
    def generate(cls, rng: random.Random) -> "KeyPair":
        return cls(rng.randrange(1, N))

    @classmethod
    def from_bytes(cls, data: bytes) -> "KeyPair":
        if len(data) != 32:
            raise SignatureError("secret key must be 32 bytes")
        return cls(int.from_bytes(data, "big"))

    def secret_bytes(self) -> bytes:
        return self.secret.to_bytes(32, "big")

    def sign(self, digest: bytes) -> RecoverableSignature:
        return ecdsa_sign(self.secret, digest)

    def __repr__(self) -> str:
        return f"KeyPair(pubkey={self.pub.encode().hex()})"
