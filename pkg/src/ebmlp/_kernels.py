"""Sweep kernels for the Gibbs and simulated-anneal samplers.

Every kernel exists twice with the same sampling semantics: a scalar loop
compiled by numba and a vectorized numpy fallback. The dispatchers pick the
variant from the ``backend`` argument (default: the module-level selection
in :mod:`ebmlp._accel`). The numba kernels seed numba's internal MT19937;
the numpy kernels use a PCG64 Generator. Streams therefore differ between
backends while staying reproducible per (seed, backend).
"""

import numpy as np

from ._accel import BACKEND, njit
from .core import sigmoid


@njit(cache=True)
def _gibbs_chain_njit(a, w2, c, reads, burn_in, thin, seed):
    np.random.seed(seed)
    kk = a.shape[0]
    mm = c.shape[0]
    k = np.empty(kk, np.float64)
    y = np.empty(mm, np.float64)
    for j in range(kk):
        k[j] = 1.0 if np.random.random() < 0.5 else 0.0
    for i in range(mm):
        y[i] = 1.0 if np.random.random() < 0.5 else 0.0
    out = np.empty((reads, kk + mm), np.uint8)
    rec = 0
    total = burn_in + reads * thin
    for sweep in range(1, total + 1):
        # k_j are conditionally independent given y, so the in-place scan
        # equals a simultaneous block update; likewise for y given k.
        for j in range(kk):
            z = a[j]
            for i in range(mm):
                z += w2[i, j] * y[i]
            p = 1.0 / (1.0 + np.exp(-z))
            k[j] = 1.0 if np.random.random() < p else 0.0
        for i in range(mm):
            z = c[i]
            for j in range(kk):
                z += w2[i, j] * k[j]
            p = 1.0 / (1.0 + np.exp(-z))
            y[i] = 1.0 if np.random.random() < p else 0.0
        if sweep > burn_in and (sweep - burn_in) % thin == 0:
            for j in range(kk):
                out[rec, j] = np.uint8(k[j])
            for i in range(mm):
                out[rec, kk + i] = np.uint8(y[i])
            rec += 1
    return out


def _gibbs_chain_numpy(a, w2, c, reads, burn_in, thin, seed):
    rng = np.random.default_rng(seed)
    kk = a.shape[0]
    mm = c.shape[0]
    k = (rng.random(kk) < 0.5).astype(np.float64)
    y = (rng.random(mm) < 0.5).astype(np.float64)
    out = np.empty((reads, kk + mm), np.uint8)
    rec = 0
    total = burn_in + reads * thin
    for sweep in range(1, total + 1):
        k = (rng.random(kk) < sigmoid(a + y @ w2)).astype(np.float64)
        y = (rng.random(mm) < sigmoid(w2 @ k + c)).astype(np.float64)
        if sweep > burn_in and (sweep - burn_in) % thin == 0:
            out[rec, :kk] = k
            out[rec, kk:] = y
            rec += 1
    return out


def gibbs_chain(a, w2, c, reads, burn_in, thin, seed, backend=None):
    """Block-Gibbs reads of (k, y) with x clamped into a = W1 x + b.

    Alternates k | y ~ Bernoulli(sigmoid(a + W2^T y)) with
    y | k ~ Bernoulli(sigmoid(W2 k + c)) from a uniform start, discards
    burn_in sweeps, then records every thin-th sweep. Returns a
    (reads, K+M) uint8 array, k bits first.
    """
    backend = backend or BACKEND
    a = np.ascontiguousarray(a, dtype=np.float64)
    w2 = np.ascontiguousarray(w2, dtype=np.float64)
    c = np.ascontiguousarray(c, dtype=np.float64)
    if reads < 1:
        raise ValueError("reads must be >= 1")
    if backend == "numba":
        return _gibbs_chain_njit(a, w2, c, reads, burn_in, thin, int(seed) & 0xFFFFFFFF)
    if backend == "numpy":
        return _gibbs_chain_numpy(a, w2, c, reads, burn_in, thin, int(seed))
    raise ValueError(f"unknown backend {backend!r}")


@njit(cache=True)
def _gibbs_block_njit(a_rows, w2, c, reads, burn_in, thin, seed):
    np.random.seed(seed)
    n_points = a_rows.shape[0]
    kk = a_rows.shape[1]
    mm = c.shape[0]
    out = np.empty((n_points, reads, kk + mm), np.uint8)
    k = np.empty(kk, np.float64)
    y = np.empty(mm, np.float64)
    total = burn_in + reads * thin
    for p in range(n_points):
        for j in range(kk):
            k[j] = 1.0 if np.random.random() < 0.5 else 0.0
        for i in range(mm):
            y[i] = 1.0 if np.random.random() < 0.5 else 0.0
        rec = 0
        for sweep in range(1, total + 1):
            for j in range(kk):
                z = a_rows[p, j]
                for i in range(mm):
                    z += w2[i, j] * y[i]
                pk = 1.0 / (1.0 + np.exp(-z))
                k[j] = 1.0 if np.random.random() < pk else 0.0
            for i in range(mm):
                z = c[i]
                for j in range(kk):
                    z += w2[i, j] * k[j]
                py = 1.0 / (1.0 + np.exp(-z))
                y[i] = 1.0 if np.random.random() < py else 0.0
            if sweep > burn_in and (sweep - burn_in) % thin == 0:
                for j in range(kk):
                    out[p, rec, j] = np.uint8(k[j])
                for i in range(mm):
                    out[p, rec, kk + i] = np.uint8(y[i])
                rec += 1
    return out


def _gibbs_block_numpy(a_rows, w2, c, reads, burn_in, thin, seed):
    rng = np.random.default_rng(seed)
    n_points, kk = a_rows.shape
    mm = c.shape[0]
    k = (rng.random((n_points, kk)) < 0.5).astype(np.float64)
    y = (rng.random((n_points, mm)) < 0.5).astype(np.float64)
    out = np.empty((n_points, reads, kk + mm), np.uint8)
    rec = 0
    total = burn_in + reads * thin
    for sweep in range(1, total + 1):
        k = (rng.random((n_points, kk)) < sigmoid(a_rows + y @ w2)).astype(np.float64)
        y = (rng.random((n_points, mm)) < sigmoid(k @ w2.T + c)).astype(np.float64)
        if sweep > burn_in and (sweep - burn_in) % thin == 0:
            out[:, rec, :kk] = k
            out[:, rec, kk:] = y
            rec += 1
    return out


def gibbs_block(a_rows, w2, c, reads, burn_in, thin, seed, backend=None):
    """Independent Gibbs chains for many clamped points in one call.

    ``a_rows`` holds one W1 x + b row per data point. Chain semantics per
    point match gibbs_chain; the RNG stream layout differs between this
    entry point and per-point gibbs_chain calls (and between backends), so
    equality of draws across the two APIs is not part of the contract.
    Returns (points, reads, K+M) uint8.
    """
    backend = backend or BACKEND
    a_rows = np.ascontiguousarray(np.atleast_2d(a_rows), dtype=np.float64)
    w2 = np.ascontiguousarray(w2, dtype=np.float64)
    c = np.ascontiguousarray(c, dtype=np.float64)
    if reads < 1:
        raise ValueError("reads must be >= 1")
    if backend == "numba":
        return _gibbs_block_njit(a_rows, w2, c, reads, burn_in, thin, int(seed) & 0xFFFFFFFF)
    if backend == "numpy":
        return _gibbs_block_numpy(a_rows, w2, c, reads, burn_in, thin, int(seed))
    raise ValueError(f"unknown backend {backend!r}")


@njit(cache=True)
def _anneal_reads_njit(h, jt, betas, reads, seed):
    np.random.seed(seed)
    n = h.shape[0]
    out = np.empty((reads, n), np.uint8)
    s = np.empty(n, np.float64)
    lam = np.empty(n, np.float64)
    for r in range(reads):
        for i in range(n):
            s[i] = 1.0 if np.random.random() < 0.5 else -1.0
        # Local fields lam_i = h_i + sum_j (J + J^T)_ij s_j; jt has zero
        # diagonal so a flip of spin i never feeds back into lam_i.
        for i in range(n):
            z = h[i]
            for j in range(n):
                z += jt[i, j] * s[j]
            lam[i] = z
        for t in range(betas.shape[0]):
            beta = betas[t]
            for i in range(n):
                de = 2.0 * s[i] * lam[i]
                if de <= 0.0 or np.random.random() < np.exp(-beta * de):
                    old = s[i]
                    s[i] = -old
                    for j in range(n):
                        lam[j] -= 2.0 * old * jt[j, i]
        for i in range(n):
            out[r, i] = np.uint8((s[i] + 1.0) * 0.5)
    return out


def _anneal_reads_numpy(h, jt, betas, reads, seed):
    rng = np.random.default_rng(seed)
    n = h.shape[0]
    s = np.where(rng.random((reads, n)) < 0.5, 1.0, -1.0)
    lam = s @ jt + h
    for beta in betas:
        for i in range(n):
            de = 2.0 * s[:, i] * lam[:, i]
            acc = rng.random(reads) < np.exp(-beta * np.maximum(de, 0.0))
            if np.any(acc):
                old = s[acc, i]
                lam[acc] -= np.outer(2.0 * old, jt[i])
                s[acc, i] = -old
    return ((s + 1.0) * 0.5).astype(np.uint8)


def anneal_reads(h, jt, betas, reads, seed, backend=None):
    """Independent single-flip Metropolis anneals on an Ising model.

    Each read starts from uniform random spins and scans sites once per
    inverse temperature in ``betas`` (flip cost 2 s_i lam_i, accepted when
    nonpositive or with probability exp(-beta * dE)). ``jt`` must be the
    symmetric coupling matrix J + J^T. Returns (reads, n) uint8 bits under
    q = (s + 1) / 2.
    """
    backend = backend or BACKEND
    h = np.ascontiguousarray(h, dtype=np.float64)
    jt = np.ascontiguousarray(jt, dtype=np.float64)
    betas = np.ascontiguousarray(betas, dtype=np.float64)
    if reads < 1:
        raise ValueError("reads must be >= 1")
    if backend == "numba":
        return _anneal_reads_njit(h, jt, betas, reads, int(seed) & 0xFFFFFFFF)
    if backend == "numpy":
        return _anneal_reads_numpy(h, jt, betas, reads, int(seed))
    raise ValueError(f"unknown backend {backend!r}")
