#!/usr/bin/env python3
"""Compares the JIT-compiled and pure-numpy kernel paths.

Each path runs in a fresh subprocess because the path is chosen at import
time from the CPSRISK_NO_NUMBA environment variable.
"""
import json
import os
import subprocess
import sys

WORKER = r"""
import json, os, sys, time
import numpy as np
from cpsrisk import _kernels

rng = np.random.default_rng(42)

def time_call(fn, *args, repeats=5):
    fn(*args)                       # warm-up / JIT compile
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best

results = {"path": "numba" if _kernels.USE_NUMBA else "numpy"}

# CPT construction: one table per parent count, many times over
def cpt_workload():
    for _ in range(200):
        for n_parents in range(1, 16):
            _kernels.noisy_or_table(n_parents, 0.37, 0.01)

results["cpt_s"] = time_call(cpt_workload)

# joint enumeration over a random 18-variable chain-with-skips network
n = 18
order = np.arange(n, dtype=np.int64)
masks = np.zeros(n, dtype=np.int64)
for i in range(1, n):
    masks[i] = 1 << (i - 1)
    if i >= 3 and rng.random() < 0.5:
        masks[i] |= 1 << (i - 3)
links = rng.uniform(0.2, 0.9, n)
leaks = np.full(n, 0.01)

results["joint_s"] = time_call(
    _kernels.joint_noisy_or, order, masks, links, leaks, 0, repeats=3)
print(json.dumps(results))
"""


def run(no_numba: bool) -> dict:
    env = dict(os.environ, CPSRISK_NO_NUMBA="1" if no_numba else "")
    out = subprocess.run([sys.executable, "-c", WORKER], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    numba_res = run(no_numba=False)
    numpy_res = run(no_numba=True)
    print(f"{'kernel':<12} {'numba (s)':>12} {'numpy (s)':>12} {'speedup':>9}")
    for key, label in [("cpt_s", "cpt"), ("joint_s", "joint")]:
        a, b = numba_res[key], numpy_res[key]
        print(f"{label:<12} {a:>12.4f} {b:>12.4f} {b / a:>8.1f}x")
    if numba_res["path"] != "numba":
        print("note: numba unavailable, both runs used the numpy path")


if __name__ == "__main__":
    main()
