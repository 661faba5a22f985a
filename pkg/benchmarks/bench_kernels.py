"""Time the numba and numpy kernel paths on a preset-sized workload.

    python3 benchmarks/bench_kernels.py [--nodes 6000] [--repeats 5]

The backend is fixed at import time, so each path runs in its own
interpreter with PAIRALIGN_NUMBA set accordingly.
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from pairalign import csbm, kernels
from pairalign import estimator as est
from pairalign.gnn import init_model, loss_and_grad

n, repeats = int(sys.argv[1]), int(sys.argv[2])
src, tgt = csbm.preset(2, n=n)
S, T = csbm.sample(src), csbm.sample(tgt)
rng = np.random.default_rng(0)
X = rng.normal(size=(n, 20))
indptr, nbrs, _ = S.csr
coef = rng.random(nbrs.size)
P = rng.dirichlet(np.ones(3), size=n)
model = init_model(3, 3)
A = rng.random((9, 9)); b = rng.random(9); c = rng.dirichlet(np.ones(9))

cases = {
    "segment_sum": lambda: kernels.segment_sum(indptr, nbrs, coef, X),
    "sigma_nu": lambda: est.estimate_sigma_nu(S, P, T, P),
    "simplex_ls_9": lambda: est.solve_simplex_ls(A, b, c, 0.01),
    "loss_and_grad": lambda: loss_and_grad(model, S),
}
out = {"backend": kernels.backend()}
for name, fn in cases.items():
    fn()  # warm-up (jit compile / cache load)
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter(); fn(); times.append(time.perf_counter() - t0)
    out[name] = min(times)
print(json.dumps(out))
"""


def measure(use_numba: bool, nodes: int, repeats: int) -> dict:
    env = dict(os.environ, PAIRALIGN_NUMBA="1" if use_numba else "0")
    proc = subprocess.run([sys.executable, "-c", WORKER, str(nodes), str(repeats)],
                          env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, default=6000)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    fast = measure(True, args.nodes, args.repeats)
    slow = measure(False, args.nodes, args.repeats)
    print(f"{'kernel':<14} {fast['backend']:>10} {slow['backend']:>10} {'speedup':>8}")
    for name in fast:
        if name == "backend":
            continue
        print(f"{name:<14} {fast[name] * 1e3:>8.2f}ms {slow[name] * 1e3:>8.2f}ms {slow[name] / fast[name]:>7.1f}x")


if __name__ == "__main__":
    main()
