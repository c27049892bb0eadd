"""Numeric kernels for CPT construction and joint enumeration.

Hot loops are JIT-compiled with numba by default; set ``CPSRISK_NO_NUMBA=1``
to force the pure-numpy fallback (useful on platforms without a working
LLVM, and as the reference path for the kernel benchmark).
"""
from __future__ import annotations

import os

import numpy as np

USE_NUMBA = os.environ.get("CPSRISK_NO_NUMBA", "").lower() not in ("1", "true", "yes")

if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover
        USE_NUMBA = False


def _popcounts_np(n_bits: int) -> np.ndarray:
    idx = np.arange(1 << n_bits, dtype=np.int64)
    counts = np.zeros(1 << n_bits, dtype=np.int64)
    for k in range(n_bits):
        counts += (idx >> k) & 1
    return counts


def _noisy_or_table_np(n_parents: int, link: float, leak: float) -> np.ndarray:
    counts = _popcounts_np(n_parents)
    return 1.0 - (1.0 - leak) * (1.0 - link) ** counts


def _joint_noisy_or_np(order: np.ndarray, parent_masks: np.ndarray,
                       links: np.ndarray, leaks: np.ndarray,
                       evidence_var: int) -> np.ndarray:
    """Marginal P(var=1, evidence) for every variable by full joint enumeration.

    ``order`` is a topological order of variable indices; ``parent_masks[i]``
    is a bitmask over variable indices.  Exposed for the benchmark; tests use
    their own independent enumeration.
    """
    n = order.shape[0]
    marg = np.zeros(n, dtype=np.float64)
    total = 0.0
    for assign in range(1 << n):
        p = 1.0
        for i in order:
            bit = (assign >> i) & 1
            k = bin(parent_masks[i] & assign).count("1")
            p1 = 1.0 - (1.0 - leaks[i]) * (1.0 - links[i]) ** k
            p *= p1 if bit else (1.0 - p1)
            if p == 0.0:
                break
        if ((assign >> evidence_var) & 1) == 0:
            continue
        total += p
        for i in range(n):
            if (assign >> i) & 1:
                marg[i] += p
    if total > 0:
        marg /= total
    return marg


if USE_NUMBA:

    @njit(cache=True)
    def _noisy_or_table_jit(n_parents: int, link: float, leak: float) -> np.ndarray:  # pragma: no cover
        size = 1 << n_parents
        out = np.empty(size, dtype=np.float64)
        for mask in range(size):
            k = 0
            m = mask
            while m:
                k += m & 1
                m >>= 1
            out[mask] = 1.0 - (1.0 - leak) * (1.0 - link) ** k
        return out

    @njit(cache=True)
    def _joint_noisy_or_jit(order, parent_masks, links, leaks, evidence_var):  # pragma: no cover
        n = order.shape[0]
        marg = np.zeros(n, dtype=np.float64)
        total = 0.0
        for assign in range(1 << n):
            p = 1.0
            for oi in range(n):
                i = order[oi]
                bit = (assign >> i) & 1
                m = parent_masks[i] & assign
                k = 0
                while m:
                    k += m & 1
                    m >>= 1
                p1 = 1.0 - (1.0 - leaks[i]) * (1.0 - links[i]) ** k
                if bit:
                    p *= p1
                else:
                    p *= 1.0 - p1
                if p == 0.0:
                    break
            if ((assign >> evidence_var) & 1) == 0:
                continue
            total += p
            for i in range(n):
                if (assign >> i) & 1:
                    marg[i] += p
        if total > 0:
            marg /= total
        return marg

    noisy_or_table = _noisy_or_table_jit
    joint_noisy_or = _joint_noisy_or_jit
else:
    noisy_or_table = _noisy_or_table_np
    joint_noisy_or = _joint_noisy_or_np
