"""Mutual information, relative entropy, correlators and the inequality checks
built on them (correlator lower bound, shell subadditivity chain, ring
concavity, mutual-information correlation length)."""

from __future__ import annotations

import hashlib
import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

from .qstate import (
    DensityMatrix,
    Observable,
    SiteSpace,
    ZERO_CLIP_REL,
    embed_operator,
    partial_trace,
    trace_norm_distance,
    von_neumann_entropy,
)

CHECK_TOL = 1e-9


@dataclass
class CheckRecord:
    """One evaluated inequality ``lhs <= rhs`` (or ``lhs >= rhs``)."""

    check_name: str
    inputs_digest: str
    lhs: float
    rhs: float
    slack: float
    passed: bool
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {
            "check_name": self.check_name,
            "inputs_digest": self.inputs_digest,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "pass": self.passed,
        }
        out.update(self.extra)
        return out


def digest(*arrays) -> str:
    h = hashlib.sha256()
    for a in arrays:
        if isinstance(a, (DensityMatrix, Observable)):
            a = a.matrix
        if isinstance(a, np.ndarray):
            h.update(np.ascontiguousarray(a).tobytes())
        else:
            h.update(repr(a).encode())
    return h.hexdigest()[:16]


@dataclass(frozen=True)
class Bipartition:
    space: SiteSpace
    region_a: tuple
    region_b: tuple

    def __post_init__(self):
        a, b = tuple(self.region_a), tuple(self.region_b)
        object.__setattr__(self, "region_a", a)
        object.__setattr__(self, "region_b", b)
        if not a or not b:
            raise ValueError("regions must be non-empty")
        if set(a) & set(b):
            raise ValueError(f"regions overlap on {sorted(set(a) & set(b), key=repr)}")
        self.space.positions(a + b)


@dataclass(frozen=True)
class ShellGeometry:
    """Inner region A, separating shell C, outer region B.

    ``edges`` (pairs of labels) is the adjacency of the underlying lattice; if
    given, no edge may join A to B directly.
    """

    inner: tuple
    shell: tuple
    outer: tuple
    outer_radius: int | None = None
    edges: tuple | None = None

    def __post_init__(self):
        a, c, b = map(tuple, (self.inner, self.shell, self.outer))
        object.__setattr__(self, "inner", a)
        object.__setattr__(self, "shell", c)
        object.__setattr__(self, "outer", b)
        if not a or not b:
            raise ValueError("inner and outer regions must be non-empty")
        if len(set(a) | set(b) | set(c)) != len(a) + len(b) + len(c):
            raise ValueError("shell geometry regions overlap")
        if self.edges is not None:
            sa, sb = set(a), set(b)
            for x, y in self.edges:
                if (x in sa and y in sb) or (x in sb and y in sa):
                    raise ValueError(f"edge {x}-{y} joins inner and outer region; shell does not separate")


def _marginal_entropy(rho: DensityMatrix, sites, cache: dict | None = None) -> float:
    key = frozenset(sites)
    if cache is not None and key in cache:
        return cache[key]
    s = von_neumann_entropy(partial_trace(rho, sites))
    if cache is not None:
        cache[key] = s
    return s


def mutual_information(rho: DensityMatrix, part: Bipartition | tuple, cache: dict | None = None) -> float:
    """I(A:B) = S_A + S_B - S_AB in nats.

    ``part`` is a Bipartition or a pair ``(region_a, region_b)``. If the
    regions do not cover ``rho`` it is marginalized to A u B first.
    ``cache`` maps frozensets of sites to entropies and is filled in place.
    """
    if not isinstance(part, Bipartition):
        part = Bipartition(rho.space, *part)
    a, b = part.region_a, part.region_b
    sa = _marginal_entropy(rho, a, cache)
    sb = _marginal_entropy(rho, b, cache)
    sab = _marginal_entropy(rho, a + b, cache)
    return sa + sb - sab


def relative_entropy(rho: DensityMatrix, sigma: DensityMatrix, support_tol: float = 1e-10) -> float:
    """S(rho || sigma) = tr rho (ln rho - ln sigma).

    Returns ``math.inf`` when rho has weight outside the support of sigma.
    """
    if rho.space.dim != sigma.space.dim:
        raise ValueError("dimension mismatch")
    w, v = np.linalg.eigh(sigma.matrix)
    on = w > ZERO_CLIP_REL * w.max()
    rho_in_basis = np.real(np.einsum("ik,ij,jk->k", v.conj(), rho.matrix, v))
    if rho_in_basis[~on].sum() > support_tol:
        return math.inf
    cross = float(np.sum(rho_in_basis[on] * np.log(w[on])))
    return max(-von_neumann_entropy(rho) - cross, 0.0)


def connected_correlator(rho: DensityMatrix, ma: Observable, mb: Observable) -> float:
    """<M_A (x) M_B> - <M_A><M_B>."""
    a, b = ma.space.labels, mb.space.labels
    if set(a) & set(b):
        raise ValueError("observables act on overlapping regions")
    marg = partial_trace(rho, a + b)
    joint_op = embed_operator(np.kron(ma.matrix, mb.matrix), a + b, marg.space)
    ea = embed_operator(ma.matrix, a, marg.space)
    eb = embed_operator(mb.matrix, b, marg.space)
    m = marg.matrix
    ab = np.trace(m @ joint_op).real
    return float(ab - np.trace(m @ ea).real * np.trace(m @ eb).real)


def check_correlator_bound(rho: DensityMatrix, ma: Observable, mb: Observable) -> CheckRecord:
    """Mutual information against the squared-correlator lower bound."""
    c = connected_correlator(rho, ma, mb)
    lhs = mutual_information(rho, (ma.space.labels, mb.space.labels))
    rhs = c**2 / (2 * ma.norm() ** 2 * mb.norm() ** 2)
    slack = lhs - rhs
    return CheckRecord(
        "correlator-bound", digest(rho, ma, mb), lhs, rhs, slack, slack >= -CHECK_TOL,
        {"correlator": c},
    )


def check_shell_chain(rho: DensityMatrix, geom: ShellGeometry) -> CheckRecord:
    """I(A:BC) <= I(A:B) + 2 S_C."""
    a, c, b = geom.inner, geom.shell, geom.outer
    if set(a + b + c) != set(rho.labels):
        raise ValueError("shell geometry must partition the sites of rho")
    cache: dict = {}
    i_abc = mutual_information(rho, (a, b + c), cache) if c else mutual_information(rho, (a, b), cache)
    i_ab = mutual_information(rho, (a, b), cache)
    s_c = _marginal_entropy(rho, c, cache) if c else 0.0
    rhs = i_ab + 2 * s_c
    slack = rhs - i_abc
    return CheckRecord(
        "shell-chain", digest(rho, (a, c, b)), i_abc, rhs, slack, slack >= -CHECK_TOL,
        {"I_ABC": i_abc, "I_AB": i_ab, "S_C": s_c},
    )


def shell_decompositions(n: int, ring: bool = True):
    """All (A, C, B) splits of n sites with contiguous A, an L-site shell on
    each side of A, and non-empty B.

    On a ring the shell has two L-site arms; on an open chain the arms are
    clipped at the ends, which includes one-sided shells for end blocks.
    """
    seen = set()
    for size_a in range(1, n):
        starts = range(n) if ring else range(n - size_a + 1)
        for start in starts:
            a = [(start + k) % n for k in range(size_a)] if ring else list(range(start, start + size_a))
            for L in range(0, n):
                if ring:
                    if size_a + 2 * L >= n:
                        break
                    c = [(start - k) % n for k in range(1, L + 1)] + [(start + size_a - 1 + k) % n for k in range(1, L + 1)]
                else:
                    c = [s for s in range(start - L, start) if s >= 0] + [
                        s for s in range(start + size_a, start + size_a + L) if s < n
                    ]
                b = [s for s in range(n) if s not in a and s not in c]
                if not b:
                    break
                key = (frozenset(a), frozenset(c))
                if key in seen:
                    continue
                seen.add(key)
                yield tuple(a), tuple(sorted(c)), tuple(b)


def ring_translation(rho: DensityMatrix) -> DensityMatrix:
    """Shift a ring state by one site."""
    labels = rho.labels
    shifted = rho.relabel(labels[1:] + labels[:1])
    return DensityMatrix._trusted(rho.space, shifted.matrix)


def is_translation_invariant(rho: DensityMatrix, tol: float = 1e-9) -> bool:
    return float(np.max(np.abs(ring_translation(rho).matrix - rho.matrix))) <= tol


def block_entropy_profile(rho: DensityMatrix) -> np.ndarray:
    """S(L) for contiguous blocks of L = 0..N sites on a ring.

    The ring order is the label order. For a state that is not translation
    invariant the entropy of each block length is averaged over all N
    positions (and a warning is issued).
    """
    labels = rho.labels
    n = len(labels)
    invariant = is_translation_invariant(rho)
    if not invariant:
        warnings.warn("state is not translation invariant; averaging block entropies over positions")
    prof = np.zeros(n + 1)
    for L in range(1, n):
        starts = [0] if invariant else range(n)
        vals = [von_neumann_entropy(partial_trace(rho, [labels[(s + k) % n] for k in range(L)])) for s in starts]
        prof[L] = float(np.mean(vals))
    prof[n] = von_neumann_entropy(rho)
    return prof


def concavity_residuals(profile: Sequence[float]) -> np.ndarray:
    """S(L) - (S(L-1) + S(L+1))/2 for L = 1..N-1; non-negative when concave."""
    s = np.asarray(profile, dtype=float)
    return s[1:-1] - (s[:-2] + s[2:]) / 2


def ring_mutual_information(profile: Sequence[float]) -> np.ndarray:
    """I(L) between a block of L sites and the rest of the ring, L = 0..N."""
    s = np.asarray(profile, dtype=float)
    n = len(s) - 1
    return s + s[::-1] - s[n]


def ring_mi_increments(profile: Sequence[float], n: int | None = None) -> np.ndarray:
    """I(L) - I(L-1) = [S(L) - S(L-1)] - [S(N-L+1) - S(N-L)] for L = 1..N."""
    s = np.asarray(profile, dtype=float)
    n = len(s) - 1 if n is None else n
    if len(s) != n + 1:
        raise ValueError(f"profile has {len(s)} entries, expected {n + 1}")
    L = np.arange(1, n + 1)
    return (s[L] - s[L - 1]) - (s[n - L + 1] - s[n - L])


@dataclass
class XiEstimate:
    xi_m: float
    grid: tuple
    i0: float
    monotone: bool


def xi_m_estimate(L_values: Sequence[int], I_values: Sequence[float]) -> XiEstimate:
    """Smallest sampled shell thickness with I_L <= I_0 / 2.

    ``L_values`` must start at 0. Returns ``math.inf`` as ``xi_m`` when no
    sampled thickness halves the mutual information.
    """
    L = np.asarray(L_values)
    v = np.asarray(I_values, dtype=float)
    if v.size == 0:
        raise ValueError("empty curve")
    if L[0] != 0:
        raise ValueError("the L grid must start at 0")
    monotone = bool(np.all(np.diff(v) <= CHECK_TOL))
    if not monotone:
        warnings.warn("I_L is not non-increasing in L; using the first crossing")
    i0 = float(v[0])
    hits = np.nonzero(v <= i0 / 2)[0]
    hits = hits[hits > 0] if i0 > 0 else hits
    xi = float(L[hits[0]]) if hits.size else math.inf
    return XiEstimate(xi, tuple(int(x) for x in L), i0, monotone)


def tripartitions(labels: Sequence[Hashable]):
    """Every assignment of labels to (A, B, C) with A and B non-empty."""
    for assign in itertools.product(range(3), repeat=len(labels)):
        a = tuple(l for l, t in zip(labels, assign) if t == 0)
        b = tuple(l for l, t in zip(labels, assign) if t == 1)
        c = tuple(l for l, t in zip(labels, assign) if t == 2)
        if a and b:
            yield a, b, c


def pinsker_gap(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """S(rho||sigma) - ||rho - sigma||_1^2 / 2; non-negative."""
    return relative_entropy(rho, sigma) - 0.5 * trace_norm_distance(rho, sigma) ** 2
