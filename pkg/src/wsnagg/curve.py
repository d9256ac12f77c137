"""Prime-field elliptic-curve group and the integer <-> point encoding.

Curves are short Weierstrass ``y^2 = x^3 + a x + b (mod p)`` with a base
point ``G`` of prime order ``n``.  Plaintext integers are encoded as
``t * G``, which makes the encoding an additive homomorphism and is what
lets ElGamal ciphertexts be summed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import InvalidCurveError, InvalidPointError, ScalarRangeError, UnmappablePointError

MAX_FIELD_BITS = 31
# below this bound unmap_point uses a full lookup table, above it BSGS
TABLE_LIMIT = 1 << 16

_FIELDS = ("p", "a", "b", "gx", "gy", "n")


class Point(NamedTuple):
    x: int
    y: int

    @property
    def is_identity(self) -> bool:
        return self.x < 0

    def __repr__(self) -> str:
        return "Point(identity)" if self.is_identity else f"Point({self.x}, {self.y})"


IDENTITY = Point(-1, -1)


@dataclass(frozen=True)
class CurveParams:
    p: int
    a: int
    b: int
    gx: int
    gy: int
    n: int

    def __post_init__(self):
        if self.p < 5 or self.p.bit_length() > MAX_FIELD_BITS:
            raise InvalidCurveError(f"field modulus must lie in [5, 2**{MAX_FIELD_BITS}), got {self.p}")
        if not (0 <= self.a < self.p and 0 <= self.b < self.p):
            raise InvalidCurveError("coefficients must be reduced mod p")
        if (4 * self.a**3 + 27 * self.b**2) % self.p == 0:
            raise InvalidCurveError("singular curve: 4a^3 + 27b^2 = 0 mod p")
        if not kernels.on_curve(self.p, self.a, self.b, self.gx, self.gy) or self.gx < 0:
            raise InvalidCurveError("generator is not on the curve")
        if self.n < 2:
            raise InvalidCurveError("group order must be at least 2")
        if kernels.ec_mul(self.p, self.a, self.n, self.gx, self.gy)[0] >= 0:
            raise InvalidCurveError("n * G is not the identity")

    @property
    def G(self) -> Point:
        return Point(self.gx, self.gy)

    def to_record(self) -> str:
        return " ".join(f"{k}={getattr(self, k)}" for k in _FIELDS)

    @classmethod
    def from_record(cls, text: str) -> "CurveParams":
        values = {}
        for token in text.split():
            key, sep, val = token.partition("=")
            if not sep or key not in _FIELDS:
                raise InvalidCurveError(f"bad curve token {token!r}")
            if key in values:
                raise InvalidCurveError(f"duplicate curve field {key!r}")
            try:
                values[key] = int(val, 10)
            except ValueError:
                raise InvalidCurveError(f"curve field {key!r} is not a decimal integer") from None
        missing = [k for k in _FIELDS if k not in values]
        if missing:
            raise InvalidCurveError(f"curve record missing fields: {', '.join(missing)}")
        return cls(**values)


@lru_cache(maxsize=None)
def presets() -> dict[str, CurveParams]:
    out = {}
    text = resources.files(__package__).joinpath("curves.txt").read_text()
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        name, _, record = line.partition(" ")
        out[name] = CurveParams.from_record(record)
    return out


@lru_cache(maxsize=64)
def get_curve(spec: str) -> CurveParams:
    """Resolve a preset name (``tiny``, ``desk``) or a flat ``p=.. a=..`` record."""
    spec = spec.strip()
    if "=" in spec:
        return CurveParams.from_record(spec)
    try:
        return presets()[spec]
    except KeyError:
        raise InvalidCurveError(f"unknown curve preset {spec!r}") from None


def is_on_curve(curve: CurveParams, P: Point) -> bool:
    if P.is_identity:
        return True
    if not (0 <= P.x < curve.p and 0 <= P.y < curve.p):
        return False
    return bool(kernels.on_curve(curve.p, curve.a, curve.b, P.x, P.y))


def check_point(curve: CurveParams, P: Point) -> None:
    if not is_on_curve(curve, P):
        raise InvalidPointError(f"{P!r} is not on the curve")


def negate(curve: CurveParams, P: Point) -> Point:
    if P.is_identity:
        return P
    return Point(P.x, (-P.y) % curve.p)


def point_add(curve: CurveParams, P: Point, Q: Point) -> Point:
    check_point(curve, P)
    check_point(curve, Q)
    return Point(*kernels.ec_add(curve.p, curve.a, P.x, P.y, Q.x, Q.y))


def point_sub(curve: CurveParams, P: Point, Q: Point) -> Point:
    return point_add(curve, P, negate(curve, Q))


def scalar_mul(curve: CurveParams, k: int, P: Point) -> Point:
    """k*P by double-and-add.  Negative k multiplies -P."""
    check_point(curve, P)
    if k < 0:
        k, P = -k, negate(curve, P)
    return Point(*kernels.ec_mul(curve.p, curve.a, k, P.x, P.y))


def map_to_point(curve: CurveParams, t: int) -> Point:
    if not 0 <= t < curve.n:
        raise ScalarRangeError(f"plaintext {t} outside [0, {curve.n})")
    return Point(*kernels.ec_mul(curve.p, curve.a, t, curve.gx, curve.gy))


@lru_cache(maxsize=32)
def _lookup_table(curve: CurveParams, size: int) -> dict[int, int]:
    xs, ys = kernels.ec_multiples(curve.p, curve.a, curve.gx, curve.gy, size)
    keys = kernels.point_keys(xs, ys)
    return {int(k): i for i, k in enumerate(keys)}


@lru_cache(maxsize=32)
def _baby_steps(curve: CurveParams, m: int):
    xs, ys = kernels.ec_multiples(curve.p, curve.a, curve.gx, curve.gy, m)
    keys = kernels.point_keys(xs, ys)
    order = np.argsort(keys, kind="stable")
    sx, sy = kernels.ec_mul(curve.p, curve.a, curve.n - m % curve.n, curve.gx, curve.gy)
    return keys[order], order.astype(np.int64), sx, sy


def unmap_point(curve: CurveParams, T: Point, max_t: int) -> int:
    """Inverse of :func:`map_to_point` restricted to ``[0, max_t]``."""
    check_point(curve, T)
    if max_t < 0:
        raise ScalarRangeError("max_t must be non-negative")
    max_t = min(max_t, curve.n - 1)
    if max_t < TABLE_LIMIT:
        # tables are shared across bounds: round the size up to a power of two
        size = min(1 << max(max_t, 1).bit_length(), curve.n)
        t = _lookup_table(curve, size).get(kernels.point_key(T.x, T.y), -1)
    else:
        m = math.isqrt(max_t) + 1
        giants = (max_t + 1 + m - 1) // m
        keys, idx, sx, sy = _baby_steps(curve, m)
        t = int(kernels.bsgs_search(curve.p, curve.a, T.x, T.y, keys, idx, sx, sy, m, giants))
    if t < 0 or t > max_t:
        raise UnmappablePointError(f"no plaintext in [0, {max_t}] maps to {T!r}")
    return t
