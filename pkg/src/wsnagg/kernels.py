"""Hot numeric kernels: short-Weierstrass point arithmetic on int64 and
planar geometry for topology / clustering.

Points are passed as coordinate pairs with ``(-1, -1)`` standing for the
identity.  Field elements must be below 2**31 so every product of two of
them fits in a signed 64-bit integer; :class:`wsnagg.curve.CurveParams`
enforces that bound.

Every kernel has one source.  Under numba it is compiled; with
``WSNAGG_DISABLE_NUMBA=1`` the same code (or, for the geometry kernels, a
vectorised numpy equivalent) runs in the interpreter.
"""
import numpy as np

from ._accel import NUMBA_ENABLED, maybe_jit

KEY_SHIFT = 31


@maybe_jit
def inv_mod(a, p):
    # extended Euclid; a must be nonzero mod p
    t, new_t = 0, 1
    r, new_r = p, a % p
    while new_r != 0:
        q = r // new_r
        t, new_t = new_t, t - q * new_t
        r, new_r = new_r, r - q * new_r
    return t % p


@maybe_jit
def on_curve(p, a, b, x, y):
    if x < 0:
        return True
    if x >= p or y >= p:
        return False
    rhs = ((x * x % p) * x + a * x + b) % p
    return (y * y) % p == rhs


@maybe_jit
def ec_add(p, a, x1, y1, x2, y2):
    if x1 < 0:
        return x2, y2
    if x2 < 0:
        return x1, y1
    if x1 == x2:
        if (y1 + y2) % p == 0:
            return -1, -1
        num = ((x1 * x1 % p) * 3 + a) % p
        lam = num * inv_mod(2 * y1, p) % p
    else:
        lam = (y2 - y1) % p * inv_mod((x2 - x1) % p, p) % p
    x3 = (lam * lam - x1 - x2) % p
    y3 = (lam * ((x1 - x3) % p) - y1) % p
    return x3, y3


@maybe_jit
def _jac_double(p, a, X, Y, Z):
    if Z == 0 or Y == 0:
        return 0, 1, 0
    YY = Y * Y % p
    S = 4 * (X * YY % p) % p
    ZZ = Z * Z % p
    M = (3 * (X * X % p) + a * (ZZ * ZZ % p)) % p
    X3 = (M * M - 2 * S) % p
    Y3 = (M * ((S - X3) % p) - 8 * (YY * YY % p)) % p
    Z3 = 2 * (Y * Z % p) % p
    return X3, Y3, Z3


@maybe_jit
def _jac_add_affine(p, a, X, Y, Z, x2, y2):
    if Z == 0:
        return x2, y2, 1
    ZZ = Z * Z % p
    U2 = x2 * ZZ % p
    S2 = y2 * (ZZ * Z % p) % p
    H = (U2 - X) % p
    R = (S2 - Y) % p
    if H == 0:
        if R == 0:
            return _jac_double(p, a, X, Y, Z)
        return 0, 1, 0
    HH = H * H % p
    HHH = HH * H % p
    V = X * HH % p
    X3 = (R * R - HHH - 2 * V) % p
    Y3 = (R * ((V - X3) % p) - Y * HHH) % p
    Z3 = Z * H % p
    return X3, Y3, Z3


@maybe_jit
def ec_mul(p, a, k, x, y):
    """k*P, left-to-right double-and-add in Jacobian coordinates."""
    if x < 0 or k <= 0:
        return -1, -1
    X, Y, Z = 0, 1, 0
    nbits = 0
    kk = k
    while kk > 0:
        nbits += 1
        kk >>= 1
    for i in range(nbits - 1, -1, -1):
        X, Y, Z = _jac_double(p, a, X, Y, Z)
        if (k >> i) & 1:
            X, Y, Z = _jac_add_affine(p, a, X, Y, Z, x, y)
    if Z == 0:
        return -1, -1
    zi = inv_mod(Z, p)
    zi2 = zi * zi % p
    return X * zi2 % p, Y * (zi2 * zi % p) % p


@maybe_jit
def ec_multiples(p, a, x, y, count):
    """Coordinates of 0*P, 1*P, ..., (count-1)*P."""
    xs = np.empty(count, dtype=np.int64)
    ys = np.empty(count, dtype=np.int64)
    cx, cy = -1, -1
    for i in range(count):
        xs[i] = cx
        ys[i] = cy
        cx, cy = ec_add(p, a, cx, cy, x, y)
    return xs, ys


@maybe_jit
def point_key(x, y):
    if x < 0:
        return -1
    return (x << KEY_SHIFT) | y


@maybe_jit
def point_keys(xs, ys):
    out = np.empty(xs.shape[0], dtype=np.int64)
    for i in range(xs.shape[0]):
        out[i] = point_key(xs[i], ys[i])
    return out


@maybe_jit
def bsgs_search(p, a, tx, ty, sorted_keys, sorted_idx, sx, sy, m, giants):
    """Find t = i*m + j with t*G == T, given the sorted baby-step keys of
    j*G (j < m) and the giant stride S = -m*G.  Returns -1 if no t exists
    below giants*m."""
    cx, cy = tx, ty
    size = sorted_keys.shape[0]
    for i in range(giants):
        key = point_key(cx, cy)
        pos = np.searchsorted(sorted_keys, key)
        if pos < size and sorted_keys[pos] == key:
            return i * m + sorted_idx[pos]
        cx, cy = ec_add(p, a, cx, cy, sx, sy)
    return -1


if NUMBA_ENABLED:

    @maybe_jit
    def pairwise_distances(xy):
        n = xy.shape[0]
        out = np.zeros((n, n), dtype=np.float64)
        for i in range(n):
            for j in range(i + 1, n):
                dx = xy[i, 0] - xy[j, 0]
                dy = xy[i, 1] - xy[j, 1]
                d = np.sqrt(dx * dx + dy * dy)
                out[i, j] = d
                out[j, i] = d
        return out

    @maybe_jit
    def nearest_center(xy, centers):
        n = xy.shape[0]
        k = centers.shape[0]
        labels = np.empty(n, dtype=np.int64)
        for i in range(n):
            best = 0
            best_d = np.inf
            for c in range(k):
                dx = xy[i, 0] - centers[c, 0]
                dy = xy[i, 1] - centers[c, 1]
                d = dx * dx + dy * dy
                if d < best_d:
                    best_d = d
                    best = c
            labels[i] = best
        return labels

else:

    def pairwise_distances(xy):
        dx = xy[:, 0][:, None] - xy[:, 0][None, :]
        dy = xy[:, 1][:, None] - xy[:, 1][None, :]
        return np.sqrt(dx * dx + dy * dy)

    def nearest_center(xy, centers):
        dx = xy[:, 0][:, None] - centers[:, 0][None, :]
        dy = xy[:, 1][:, None] - centers[:, 1][None, :]
        # argmin keeps the first minimum, i.e. the lowest center index
        return np.argmin(dx * dx + dy * dy, axis=1).astype(np.int64)
