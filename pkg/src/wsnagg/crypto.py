"""Packet protection: EC-ElGamal, node credentials, identity signatures,
MACs and digests.

The digest primitive for everything here is SHA-256.  Hash-to-scalar
functions are the same digest with a one-byte domain prefix, reduced mod n.
"""
from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass
from typing import Iterable

from . import seeding
from .curve import (
    IDENTITY,
    CurveParams,
    Point,
    check_point,
    is_on_curve,
    map_to_point,
    point_add,
    point_sub,
    scalar_mul,
    unmap_point,
)
from .errors import (
    CorruptCiphertextError,
    InvalidEphemeralError,
    InvalidKeyError,
    ScalarRangeError,
    UnmappablePointError,
)

DIGEST_NAME = "sha256"
DIGEST_SIZE = 32

_H1 = b"\x01"
_CHALLENGE = b"\x02"
_MAC_KEY = b"\x03"

_SENTINEL = b"\xff" * 8


@dataclass(frozen=True)
class KeyPair:
    private: int
    public: Point

    @classmethod
    def from_private(cls, curve: CurveParams, private: int) -> "KeyPair":
        if not 1 <= private < curve.n:
            raise ScalarRangeError(f"private key {private} outside [1, {curve.n - 1}]")
        return cls(private, scalar_mul(curve, private, curve.G))


@dataclass(frozen=True)
class Ciphertext:
    C: Point
    CT: Point


@dataclass(frozen=True)
class IdentSignature:
    r: Point
    ct1: int
    ct2: int


@dataclass(frozen=True)
class NodeCredentials:
    """Material pre-loaded into a node by the base station."""

    node_id: int
    s1: int
    s2: int
    pk: Point
    signature: IdentSignature
    mac_key: bytes
    params: CurveParams

    @property
    def ct1(self) -> int:
        return self.signature.ct1

    @property
    def ct2(self) -> int:
        return self.signature.ct2


def encode_point(P: Point) -> bytes:
    """16 bytes, x then y big-endian; the identity is two all-ones words."""
    if P.is_identity:
        return _SENTINEL * 2
    return P.x.to_bytes(8, "big") + P.y.to_bytes(8, "big")


def decode_point(data: bytes) -> Point:
    if data == _SENTINEL * 2:
        return IDENTITY
    return Point(int.from_bytes(data[:8], "big"), int.from_bytes(data[8:16], "big"))


def hash_digest(message: bytes) -> bytes:
    return hashlib.sha256(message).digest()


def _hash_to_scalar(curve: CurveParams, prefix: bytes, data: bytes) -> int:
    return int.from_bytes(hash_digest(prefix + data), "big") % curve.n


def _id_bytes(node_id: int) -> bytes:
    return int(node_id).to_bytes(8, "big", signed=True)


def h1(curve: CurveParams, node_id: int) -> int:
    return _hash_to_scalar(curve, _H1, _id_bytes(node_id))


def challenge(curve: CurveParams, pk: Point, r: Point, message: bytes = b"") -> int:
    return _hash_to_scalar(curve, _CHALLENGE, encode_point(pk) + encode_point(r) + message)


def derive_mac_key(master_secret: int, node_id: int) -> bytes:
    return hash_digest(_MAC_KEY + master_secret.to_bytes(8, "big") + _id_bytes(node_id))


def keygen(curve: CurveParams, seed: int) -> KeyPair:
    rng = seeding.stream(seed, seeding.KEYGEN)
    return KeyPair.from_private(curve, seeding.random_scalar(rng, curve.n))


def encrypt(curve: CurveParams, pk: Point, pt: int, k: int) -> Ciphertext:
    if not 1 <= k < curve.n:
        raise InvalidEphemeralError(f"ephemeral key {k} outside [1, {curve.n - 1}]")
    M = map_to_point(curve, pt)
    return Ciphertext(scalar_mul(curve, k, curve.G), point_add(curve, M, scalar_mul(curve, k, pk)))


def decrypt(curve: CurveParams, sk: int, c: Ciphertext, max_t: int) -> int:
    M = point_sub(curve, c.CT, scalar_mul(curve, sk, c.C))
    try:
        return unmap_point(curve, M, max_t)
    except UnmappablePointError as exc:
        raise CorruptCiphertextError(str(exc)) from None


def ct_add(curve: CurveParams, c1: Ciphertext, c2: Ciphertext) -> Ciphertext:
    return Ciphertext(point_add(curve, c1.C, c2.C), point_add(curve, c1.CT, c2.CT))


# (identity, identity) decrypts to 0 under every key
ZERO_CIPHERTEXT = Ciphertext(IDENTITY, IDENTITY)


def ct_sum(curve: CurveParams, cts: Iterable[Ciphertext]) -> Ciphertext:
    acc = ZERO_CIPHERTEXT
    for c in cts:
        acc = ct_add(curve, acc, c)
    return acc


def sign_identity(curve: CurveParams, s1: int, pk: Point, k: int, message: bytes = b"") -> IdentSignature:
    if not 1 <= k < curve.n:
        raise InvalidEphemeralError(f"signing nonce {k} outside [1, {curve.n - 1}]")
    r = point_add(curve, scalar_mul(curve, k, curve.G), pk)
    ct1 = challenge(curve, pk, r, message)
    ct2 = (k - s1 * ct1) % curve.n
    return IdentSignature(r, ct1, ct2)


def verify_identity(curve: CurveParams, pk: Point, sig: IdentSignature, message: bytes = b"") -> bool:
    """Accept iff ct2*G + ct1*PK + PK == r and ct1 is the challenge for (PK, r)."""
    if not (0 <= sig.ct1 < curve.n and 0 <= sig.ct2 < curve.n):
        return False
    if not (is_on_curve(curve, pk) and is_on_curve(curve, sig.r)):
        return False
    lhs = point_add(curve, scalar_mul(curve, sig.ct2, curve.G), scalar_mul(curve, sig.ct1, pk))
    if point_add(curve, lhs, pk) != sig.r:
        return False
    return challenge(curve, pk, sig.r, message) == sig.ct1


def init_node(curve: CurveParams, node_id: int, master_secret: int, seed: int) -> NodeCredentials:
    rng = seeding.stream(seed, seeding.NODE_INIT, node_id)
    s1 = seeding.random_scalar(rng, curve.n)
    pk = scalar_mul(curve, s1, curve.G)
    s2 = master_secret * h1(curve, node_id) % curve.n
    k = seeding.random_scalar(rng, curve.n)
    sig = sign_identity(curve, s1, pk, k)
    return NodeCredentials(
        node_id=node_id,
        s1=s1,
        s2=s2,
        pk=pk,
        signature=sig,
        mac_key=derive_mac_key(master_secret, node_id),
        params=curve,
    )


def mac_sign(key: bytes, message: bytes) -> bytes:
    if not key:
        raise InvalidKeyError("MAC key must be non-empty")
    return hash_digest(len(key).to_bytes(4, "big") + key + message)


def mac_verify(key: bytes, message: bytes, tag: bytes) -> bool:
    if not key or len(tag) != DIGEST_SIZE:
        return False
    return hmac.compare_digest(mac_sign(key, message), tag)


def check_ciphertext(curve: CurveParams, c: Ciphertext) -> None:
    check_point(curve, c.C)
    check_point(curve, c.CT)
