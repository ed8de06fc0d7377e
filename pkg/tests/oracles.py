"""Independent re-implementations used as test oracles.

Nothing here imports from the package's crypto or transaction code: the
curve math is textbook affine arithmetic with constants transcribed from
SEC 2, and the segwit digest oracle is a flat struct-style serializer.
Slow is fine; independent is the point.
"""

import hashlib

# secp256k1 domain parameters (SEC 2, section 2.4.1)
FIELD = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEFFFFFC2F
ORDER = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141
BASE = (
    0x79BE667EF9DCBBAC55A06295CE870B07029BFCDB2DCE28D959F2815B16F81798,
    0x483ADA7726A3C4655DA4FBFC0E1108A8FD17B448A68554199C47D08FFB10D4B8,
)


def _inv(a, m):
    return pow(a, -1, m)


def _add(p, q):
    if p is None:
        return q
    if q is None:
        return p
    if p[0] == q[0] and (p[1] + q[1]) % FIELD == 0:
        return None
    if p == q:
        lam = (3 * p[0] * p[0]) * _inv(2 * p[1], FIELD) % FIELD
    else:
        lam = (q[1] - p[1]) * _inv(q[0] - p[0], FIELD) % FIELD
    x = (lam * lam - p[0] - q[0]) % FIELD
    y = (lam * (p[0] - x) - p[1]) % FIELD
    return x, y


def _mul(k, point):
    result = None
    addend = point
    while k:
        if k & 1:
            result = _add(result, addend)
        addend = _add(addend, addend)
        k >>= 1
    return result


def pubkey_point(secret: int):
    return _mul(secret, BASE)


def ecdsa_verify_textbook(pub, digest: bytes, r: int, s: int) -> bool:
    """Plain SEC 1 section 4.1.4 verification over affine points."""
    if not (1 <= r < ORDER and 1 <= s < ORDER):
        return False
    z = int.from_bytes(digest, "big") % ORDER
    w = _inv(s, ORDER)
    u1 = z * w % ORDER
    u2 = r * w % ORDER
    point = _add(_mul(u1, BASE), _mul(u2, pub))
    if point is None:
        return False
    return point[0] % ORDER == r


def _dsha(data: bytes) -> bytes:
    return hashlib.sha256(hashlib.sha256(data).digest()).digest()


def _compact(n: int) -> bytes:
    if n < 0xFD:
        return bytes([n])
    if n <= 0xFFFF:
        return b"\xfd" + n.to_bytes(2, "little")
    return b"\xfe" + n.to_bytes(4, "little")


def segwit_preimage_oracle(version: int, outpoints: list, sequences: list,
                           signed_input: int, script_code: bytes, value: int,
                           outputs: list, locktime: int, hashtype: int = 1) -> bytes:
    """BIP 143 signing pre-image computed from first principles.

    outpoints: [(txid32, index)], sequences: [int], outputs: [(value, script)].
    """
    prevouts = b"".join(txid + index.to_bytes(4, "little") for txid, index in outpoints)
    seqs = b"".join(seq.to_bytes(4, "little") for seq in sequences)
    outs = b"".join(
        val.to_bytes(8, "little") + _compact(len(spk)) + spk for val, spk in outputs
    )
    txid, index = outpoints[signed_input]
    return (
        version.to_bytes(4, "little")
        + _dsha(prevouts)
        + _dsha(seqs)
        + txid
        + index.to_bytes(4, "little")
        + _compact(len(script_code))
        + script_code
        + value.to_bytes(8, "little")
        + sequences[signed_input].to_bytes(4, "little")
        + _dsha(outs)
        + locktime.to_bytes(4, "little")
        + hashtype.to_bytes(4, "little")
    )


def segwit_digest_oracle(*args, **kwargs) -> bytes:
    """Double-SHA256 of the oracle pre-image."""
    return _dsha(segwit_preimage_oracle(*args, **kwargs))


def eth_address_reference(uncompressed_key_body: bytes, keccak_fn) -> bytes:
    """Address = rightmost 160 bits of Keccak-256 of the 64-byte key body."""
    assert len(uncompressed_key_body) == 64
    return keccak_fn(uncompressed_key_body)[-20:]


# Alg-1 acceptance predicate, re-stated directly for the agreement suite
def update_accepts(latest_amount: int, amount: int, deposit: int, fee: int,
                   signer_matches: bool) -> bool:
    return latest_amount < amount <= deposit - fee and signer_matches
