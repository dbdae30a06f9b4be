"""Independent reference computations used to cross-check the library.

Each oracle is written the slow, explicit way (index loops, direct sums,
brute-force enumeration) and shares no code with the package.
"""

import itertools
import math

import numpy as np


def partial_trace_loop(rho, n, d, keep):
    """Marginal on ``keep`` (sorted positions) by summing matrix elements."""
    keep = sorted(keep)
    drop = [k for k in range(n) if k not in keep]
    dk = d ** len(keep)
    out = np.zeros((dk, dk), dtype=complex)
    for row in itertools.product(range(d), repeat=len(keep)):
        for col in itertools.product(range(d), repeat=len(keep)):
            total = 0j
            for env in itertools.product(range(d), repeat=len(drop)):
                i = [0] * n
                j = [0] * n
                for p, v in zip(keep, row):
                    i[p] = v
                for p, v in zip(keep, col):
                    j[p] = v
                for p, v in zip(drop, env):
                    i[p] = v
                    j[p] = v
                a = sum(x * d ** (n - 1 - k) for k, x in enumerate(i))
                b = sum(x * d ** (n - 1 - k) for k, x in enumerate(j))
                total += rho[a, b]
            r = sum(x * d ** (len(keep) - 1 - k) for k, x in enumerate(row))
            c = sum(x * d ** (len(keep) - 1 - k) for k, x in enumerate(col))
            out[r, c] = total
    return out


def entropy_eig(m):
    """-sum lambda ln lambda with scipy's general eigensolver on a Hermitian matrix."""
    import scipy.linalg

    w = scipy.linalg.eigvals(m).real
    w = w[w > 1e-14]
    return float(-np.sum(w * np.log(w)))


def mutual_information_loop(rho, n, d, a, b):
    ab = sorted(a + b)
    sa = entropy_eig(partial_trace_loop(rho, n, d, a))
    sb = entropy_eig(partial_trace_loop(rho, n, d, b))
    sab = entropy_eig(partial_trace_loop(rho, n, d, ab))
    return sa + sb - sab


def classical_gibbs_enumerate(n, d, energy, beta):
    """Probability dict over configurations by listing all d^n of them."""
    configs = list(itertools.product(range(d), repeat=n))
    w = np.array([math.exp(-beta * energy(c)) for c in configs])
    return dict(zip(configs, w / w.sum()))


def classical_marginal(p, sites):
    out = {}
    for c, v in p.items():
        key = tuple(c[s] for s in sites)
        out[key] = out.get(key, 0.0) + v
    return out


def shannon(p):
    return -sum(v * math.log(v) for v in p.values() if v > 0)


def classical_mi(p, a, b):
    return shannon(classical_marginal(p, a)) + shannon(classical_marginal(p, b)) - shannon(classical_marginal(p, a + b))


def expm_series(h, t, terms=80):
    """exp(t h) by a scaled Taylor series with repeated squaring."""
    norm = np.linalg.norm(h, 1) * abs(t)
    s = max(0, int(math.ceil(math.log2(norm))) + 1) if norm > 0 else 0
    a = h * t / 2**s
    out = np.eye(h.shape[0], dtype=complex)
    term = np.eye(h.shape[0], dtype=complex)
    for k in range(1, terms):
        term = term @ a / k
        out = out + term
    for _ in range(s):
        out = out @ out
    return out


def mps_block_state(a_list, left, right, n):
    """Block density matrix from explicit MPS amplitudes.

    ``a_list[i]`` is the D x D matrix of physical index i (pure generator
    A^i mapping memory in -> memory out); sum over the open memory indices
    with boundary ``left`` (density matrix) and ``right`` (identity).
    """
    d = len(a_list)
    D = a_list[0].shape[0]
    dim = d**n
    out = np.zeros((dim, dim), dtype=complex)
    for idx_r in itertools.product(range(d), repeat=n):
        mr = np.eye(D, dtype=complex)
        for i in idx_r:
            mr = a_list[i] @ mr
        for idx_c in itertools.product(range(d), repeat=n):
            mc = np.eye(D, dtype=complex)
            for i in idx_c:
                mc = a_list[i] @ mc
            val = np.trace(right @ mr @ left @ mc.conj().T)
            r = sum(x * d ** (n - 1 - k) for k, x in enumerate(idx_r))
            c = sum(x * d ** (n - 1 - k) for k, x in enumerate(idx_c))
            out[r, c] = val
    return out


def power_iteration_fixed_point(kraus_mats, D, iters=20000, tol=1e-14):
    """Fixed point of x -> sum_k sum_i A_k^i x A_k^i^dag by repeated application,
    averaging successive iterates so periodic components die out."""
    x = np.eye(D, dtype=complex) / D
    for _ in range(iters):
        y = sum(a @ x @ a.conj().T for a in kraus_mats)
        y = 0.5 * (x + y)
        if np.max(np.abs(y - x)) < tol:
            return y
        x = y
    return x


def singlet_crossings_double_sum(p, a, b):
    """sum over i in A, j in B of p(|i - j|) with p indexed from distance 1."""
    total = 0.0
    for i in a:
        for j in b:
            x = abs(i - j)
            if 1 <= x <= len(p):
                total += p[x - 1]
    return total
