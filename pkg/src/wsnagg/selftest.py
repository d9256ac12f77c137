"""Invariant suite run by ``wsnagg selftest``; everything is exhaustive on
the tiny curve, so it finishes in a few seconds."""
from __future__ import annotations

import itertools
import math

from .config import SimConfig
from .crypto import (
    IdentSignature,
    KeyPair,
    ct_add,
    decrypt,
    encrypt,
    init_node,
    mac_sign,
    mac_verify,
    verify_identity,
)
from .curve import IDENTITY, Point, get_curve, is_on_curve, map_to_point, negate, point_add, scalar_mul, unmap_point
from .network import tx_energy
from .protocol import run_simulation


def _points(curve):
    pts = [IDENTITY]
    for x in range(curve.p):
        for y in range(curve.p):
            if is_on_curve(curve, Point(x, y)):
                pts.append(Point(x, y))
    return pts


def check_group_laws(curve) -> bool:
    pts = _points(curve)
    if len(pts) != curve.n:
        return False
    add = lambda P, Q: point_add(curve, P, Q)
    for P in pts:
        if add(P, IDENTITY) != P:
            return False
        if add(P, negate(curve, P)) != IDENTITY:
            return False
    for P, Q in itertools.product(pts, repeat=2):
        if add(P, Q) != add(Q, P):
            return False
    for P, Q, R in itertools.product(pts, repeat=3):
        if add(add(P, Q), R) != add(P, add(Q, R)):
            return False
    return True


def check_scalar_mul(curve) -> bool:
    acc = IDENTITY
    for k in range(curve.n + 1):
        if scalar_mul(curve, k, curve.G) != acc:
            return False
        acc = point_add(curve, acc, curve.G)
    return True


def check_mapping(curve) -> bool:
    for t in range(curve.n):
        if unmap_point(curve, map_to_point(curve, t), curve.n - 1) != t:
            return False
    return True


def check_elgamal(curve) -> bool:
    keys = KeyPair.from_private(curve, 7)
    top = curve.n - 1
    for m in range(curve.n):
        for k in range(1, curve.n):
            if decrypt(curve, keys.private, encrypt(curve, keys.public, m, k), top) != m:
                return False
    for m1, m2 in itertools.product(range(curve.n), repeat=2):
        c = ct_add(curve, encrypt(curve, keys.public, m1, 3), encrypt(curve, keys.public, m2, 5))
        if decrypt(curve, keys.private, c, top) != (m1 + m2) % curve.n:
            return False
    return True


def check_signature(curve) -> bool:
    creds = init_node(curve, 1, master_secret=5, seed=11)
    honest = creds.signature
    if not verify_identity(curve, creds.pk, honest):
        return False
    accepted = [
        (a, b)
        for a in range(curve.n)
        for b in range(curve.n)
        if verify_identity(curve, creds.pk, IdentSignature(honest.r, a, b))
    ]
    return accepted == [(honest.ct1, honest.ct2)]


def check_mac() -> bool:
    tag = mac_sign(b"key", b"message")
    return (
        mac_verify(b"key", b"message", tag)
        and not mac_verify(b"key2", b"message", tag)
        and not mac_verify(b"key", b"messagf", tag)
        and not mac_verify(b"key", b"message", tag[:-1])
    )


def check_energy_continuity() -> bool:
    p = SimConfig().energy
    lo, hi = tx_energy(p, 1000, math.nextafter(p.v0, 0)), tx_energy(p, 1000, p.v0)
    return abs(hi - lo) <= 1e-9 * hi


def check_protocol() -> bool:
    cfg = SimConfig(curve="tiny", node_count=4, cluster_count=2, max_reading=4, rounds=5, seed=3)
    results = run_simulation(cfg)
    return len(results) == 5 and all(r.ground_truth_ok and r.bs_messages == 2 for r in results)


def run_selftest():
    tiny = get_curve("tiny")
    checks = [
        ("group laws (exhaustive)", lambda: check_group_laws(tiny)),
        ("scalar_mul == repeated addition", lambda: check_scalar_mul(tiny)),
        ("map/unmap roundtrip", lambda: check_mapping(tiny)),
        ("elgamal roundtrip + homomorphism", lambda: check_elgamal(tiny)),
        ("identity signature forgery search", lambda: check_signature(tiny)),
        ("mac sign/verify", check_mac),
        ("tx energy continuity at v0", check_energy_continuity),
        ("protocol rounds on tiny curve", check_protocol),
    ]
    out = []
    for name, fn in checks:
        try:
            ok = bool(fn())
        except Exception as exc:  # report, don't abort the suite
            out.append((name, False, f"{type(exc).__name__}: {exc}"))
            continue
        out.append((name, ok, ""))
    return out
