"""Compare the numba-compiled kernels against the pure Python fallback.

Each backend runs in its own interpreter because the switch is read at
import time.  Usage::

    python3 benchmarks/bench_backends.py [--repeat N]
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
import wsnagg
from wsnagg import SimConfig, get_curve, keygen, encrypt, decrypt, kernels, run_simulation

repeat = int(sys.argv[1])
curve = get_curve("desk")
keys = keygen(curve, 1)
rng = np.random.default_rng(0)
ks = [int(k) for k in rng.integers(1, curve.n, size=200)]
xy = rng.uniform(0, 100, size=(400, 2))

def best(fn, n=repeat):
    fn()  # compile / warm caches
    out = []
    for _ in range(n):
        t0 = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t0)
    return min(out)

cts = [encrypt(curve, keys.public, 20000 - 7 * i, k) for i, k in enumerate(ks[:20])]
rows = {
    "scalar_mul x200": best(lambda: [kernels.ec_mul(curve.p, curve.a, k, curve.gx, curve.gy) for k in ks]),
    "encrypt x200": best(lambda: [encrypt(curve, keys.public, 500, k) for k in ks]),
    "decrypt BSGS x20 (t<=20000)": best(lambda: [decrypt(curve, keys.private, c, 20000) for c in cts]),
    "pairwise distances 400 pts": best(lambda: kernels.pairwise_distances(xy)),
    "simulation 20 nodes x 10 rounds": best(lambda: run_simulation(SimConfig(rounds=10)), n=max(1, repeat // 2)),
}
print(json.dumps({"backend": wsnagg.BACKEND, "rows": rows}))
"""


def run_backend(disable: bool, repeat: int) -> dict:
    env = dict(os.environ, WSNAGG_DISABLE_NUMBA="1" if disable else "0")
    out = subprocess.run(
        [sys.executable, "-c", WORKER, str(repeat)], env=env, capture_output=True, text=True, check=True
    )
    return json.loads(out.stdout.strip().splitlines()[-1])


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5, help="timed repetitions per row (best is kept)")
    args = ap.parse_args(argv)

    fast = run_backend(False, args.repeat)
    slow = run_backend(True, args.repeat)
    width = max(len(k) for k in fast["rows"])
    print(f"{'workload':<{width}}  {fast['backend']:>12}  {slow['backend']:>12}  speedup")
    for name, t_fast in fast["rows"].items():
        t_slow = slow["rows"][name]
        print(f"{name:<{width}}  {t_fast * 1e3:>10.3f}ms  {t_slow * 1e3:>10.3f}ms  {t_slow / t_fast:>6.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
