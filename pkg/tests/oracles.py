"""Reference implementations that share no code with wsnagg.

Everything here is written for clarity over speed: affine formulas with
Fermat inverses, linear-scan discrete logs, textbook radio formulas.
"""
from __future__ import annotations

import hashlib
import itertools
import math

O = None  # point at infinity


def ec_add(p, a, P, Q):
    if P is O:
        return Q
    if Q is O:
        return P
    (x1, y1), (x2, y2) = P, Q
    if x1 == x2 and (y1 + y2) % p == 0:
        return O
    if P == Q:
        lam = (3 * x1 * x1 + a) * pow(2 * y1, p - 2, p) % p
    else:
        lam = (y2 - y1) * pow(x2 - x1, p - 2, p) % p
    x3 = (lam * lam - x1 - x2) % p
    return (x3, (lam * (x1 - x3) - y1) % p)


def ec_mul(p, a, k, P):
    """Right-to-left binary method, independent of the library's ladder."""
    acc, base = O, P
    while k > 0:
        if k & 1:
            acc = ec_add(p, a, acc, base)
        base = ec_add(p, a, base, base)
        k >>= 1
    return acc


def ec_mul_naive(p, a, k, P):
    acc = O
    for _ in range(k):
        acc = ec_add(p, a, acc, P)
    return acc


def all_points(p, a, b):
    pts = [O]
    for x in range(p):
        rhs = (x**3 + a * x + b) % p
        for y in range(p):
            if y * y % p == rhs:
                pts.append((x, y))
    return pts


def dlog(p, a, G, T, limit):
    acc = O
    for t in range(limit + 1):
        if acc == T:
            return t
        acc = ec_add(p, a, acc, G)
    return None


def elgamal_encrypt(p, a, n, G, pk, m, k):
    M = ec_mul(p, a, m, G)
    return ec_mul(p, a, k, G), ec_add(p, a, M, ec_mul(p, a, k, pk))


def elgamal_decrypt(p, a, n, G, sk, C, CT, limit):
    S = ec_mul(p, a, sk, C)
    neg = O if S is O else (S[0], (-S[1]) % p)
    return dlog(p, a, G, ec_add(p, a, CT, neg), limit)


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def length_prefixed_mac(key: bytes, msg: bytes) -> bytes:
    return sha256(len(key).to_bytes(4, "big") + key + msg)


# radio model --------------------------------------------------------------

EM = 50e-9
EFS = 10e-12
EAMP = 0.0013e-12
EDA = 5e-9


def tx(bits, d):
    d0 = math.sqrt(EFS / EAMP)
    amp = EFS * d**2 if d < d0 else EAMP * d**4
    return bits * EM + bits * amp


def rx(bits):
    return bits * EM


# clustering / election --------------------------------------------------------


def euclid(p, q):
    return math.hypot(p[0] - q[0], p[1] - q[1])


def election_scores(energy, to_bs, neighbors, w=(1 / 3, 1 / 3, 1 / 3)):
    """Min-max normalize each criterion over the cluster; a flat criterion scores 0."""

    def norm(vals, invert=False):
        lo, hi = min(vals), max(vals)
        if hi == lo:
            return [0.0] * len(vals)
        out = [(v - lo) / (hi - lo) for v in vals]
        return [1.0 - v for v in out] if invert else out

    e, d, c = norm(energy), norm(to_bs, invert=True), norm(neighbors)
    return [w[0] * e[i] + w[1] * d[i] + w[2] * c[i] for i in range(len(energy))]


def elect(ids, scores):
    best = max(scores)
    return min(i for i, s in zip(ids, scores) if s == best)


def best_partition_cost(points, k):
    """Exhaustive minimum within-cluster sum of squares over all labelings."""
    best = math.inf
    for labels in itertools.product(range(k), repeat=len(points)):
        if len(set(labels)) != k:
            continue
        cost = 0.0
        for c in range(k):
            grp = [points[i] for i in range(len(points)) if labels[i] == c]
            cx = sum(x for x, _ in grp) / len(grp)
            cy = sum(y for _, y in grp) / len(grp)
            cost += sum((x - cx) ** 2 + (y - cy) ** 2 for x, y in grp)
        best = min(best, cost)
    return best


def partition_cost(points, groups):
    cost = 0.0
    for grp in groups:
        pts = [points[i] for i in grp]
        cx = sum(x for x, _ in pts) / len(pts)
        cy = sum(y for _, y in pts) / len(pts)
        cost += sum((x - cx) ** 2 + (y - cy) ** 2 for x, y in pts)
    return cost
