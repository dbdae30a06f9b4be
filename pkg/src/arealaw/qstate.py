"""Dense multi-site states: partial traces, entropies, norms.

All logarithms are natural (nats). Sites are laid out row-major in label
order: the first label is the most significant tensor factor, so a product
``a (x) b`` over labels ``(0, 1)`` is ``np.kron(a, b)``.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

import numpy as np

HERMITIAN_TOL = 1e-10
NEGATIVE_EIG_TOL = 1e-10
ZERO_CLIP_REL = 1e-12
DEFAULT_DIM_CAP = 2**14
DEFAULT_CONFIG_CAP = 2**24


class CapExceededError(ValueError):
    """Raised when a construction exceeds the desk-scale size cap."""


def dim_cap() -> int:
    """Hilbert-space dimension cap, overridable with ``AREALAW_DIM_CAP``."""
    return int(os.environ.get("AREALAW_DIM_CAP", DEFAULT_DIM_CAP))


def config_cap() -> int:
    """Classical configuration-count cap, overridable with ``AREALAW_CONFIG_CAP``."""
    return int(os.environ.get("AREALAW_CONFIG_CAP", DEFAULT_CONFIG_CAP))


@dataclass(frozen=True)
class SiteSpace:
    """Ordered set of ``local_dim``-level sites."""

    labels: tuple
    local_dim: int
    cap: int | None = None

    def __post_init__(self):
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        if len(labels) < 1:
            raise ValueError("a SiteSpace needs at least one site")
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate site labels in {labels}")
        if self.local_dim < 2:
            raise ValueError("local_dim must be >= 2")
        cap = dim_cap() if self.cap is None else self.cap
        if self.dim > cap:
            raise CapExceededError(
                f"dimension {self.local_dim}^{len(labels)} = {self.dim} exceeds cap {cap}"
            )

    @classmethod
    def chain(cls, n: int, local_dim: int = 2, cap: int | None = None) -> "SiteSpace":
        return cls(tuple(range(n)), local_dim, cap)

    @property
    def site_count(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int:
        return self.local_dim ** len(self.labels)

    def index(self, label: Hashable) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown site label {label!r}") from None

    def positions(self, labels: Iterable[Hashable]) -> list[int]:
        return [self.index(lab) for lab in labels]

    def subspace(self, keep: Iterable[Hashable]) -> "SiteSpace":
        """Sub-space on ``keep``, in this space's label order."""
        keep = set(keep)
        for lab in keep:
            self.index(lab)
        return SiteSpace(tuple(lab for lab in self.labels if lab in keep), self.local_dim, self.cap)


def _hermitize(matrix: np.ndarray, tol: float) -> np.ndarray:
    anti = matrix - matrix.conj().T
    if anti.size and np.max(np.abs(anti)) / 2 > tol:
        raise ValueError(
            f"matrix is not Hermitian: anti-Hermitian part {np.max(np.abs(anti)) / 2:.3e} > {tol:.1e}"
        )
    return (matrix + matrix.conj().T) / 2


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace operator on a SiteSpace.

    Small violations are repaired on construction: the anti-Hermitian part is
    dropped when below ``tolerance`` and eigenvalues down to ``-tolerance``
    are accepted (they are clipped when entropies are taken). Anything larger
    raises ``ValueError``.
    """

    space: SiteSpace
    matrix: np.ndarray
    tolerance: float = HERMITIAN_TOL

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.space.dim, self.space.dim):
            raise ValueError(f"matrix shape {m.shape} does not match space dim {self.space.dim}")
        m = _hermitize(m, self.tolerance)
        tr = np.trace(m).real
        if abs(tr - 1) > max(self.tolerance, 1e-10):
            raise ValueError(f"trace {tr} != 1")
        w = np.linalg.eigvalsh(m)
        if w[0] < -max(self.tolerance, NEGATIVE_EIG_TOL):
            raise ValueError(f"matrix is not positive semidefinite: min eigenvalue {w[0]:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def _trusted(cls, space: SiteSpace, matrix: np.ndarray) -> "DensityMatrix":
        # skips validation; only for results of validity-preserving maps
        obj = object.__new__(cls)
        m = np.asarray(matrix, dtype=complex)
        m = (m + m.conj().T) / 2
        m.setflags(write=False)
        object.__setattr__(obj, "space", space)
        object.__setattr__(obj, "matrix", m)
        object.__setattr__(obj, "tolerance", HERMITIAN_TOL)
        return obj

    @classmethod
    def from_pure(cls, space: SiteSpace, psi: np.ndarray) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex).ravel()
        psi = psi / np.linalg.norm(psi)
        return cls(space, np.outer(psi, psi.conj()))

    @classmethod
    def maximally_mixed(cls, space: SiteSpace) -> "DensityMatrix":
        return cls._trusted(space, np.eye(space.dim) / space.dim)

    @property
    def labels(self) -> tuple:
        return self.space.labels

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def tensor(self, other: "DensityMatrix") -> "DensityMatrix":
        """Product state ``self (x) other`` with labels concatenated."""
        if other.space.local_dim != self.space.local_dim:
            raise ValueError("local dimensions differ")
        space = SiteSpace(self.labels + other.labels, self.space.local_dim)
        return DensityMatrix._trusted(space, np.kron(self.matrix, other.matrix))

    def relabel(self, order: Sequence[Hashable]) -> "DensityMatrix":
        """Same state with tensor factors permuted into ``order``."""
        perm = self.space.positions(order)
        if sorted(perm) != list(range(self.space.site_count)):
            raise ValueError("order must be a permutation of the labels")
        n, d = self.space.site_count, self.space.local_dim
        t = self.matrix.reshape((d,) * (2 * n))
        t = t.transpose(perm + [p + n for p in perm])
        return DensityMatrix._trusted(SiteSpace(tuple(order), d), t.reshape(self.space.dim, -1))


@dataclass(frozen=True, eq=False)
class Observable:
    space: SiteSpace
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.space.dim, self.space.dim):
            raise ValueError(f"matrix shape {m.shape} does not match space dim {self.space.dim}")
        m = _hermitize(m, HERMITIAN_TOL)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def norm(self) -> float:
        """Operator norm (largest singular value)."""
        return float(np.linalg.norm(self.matrix, 2))


def partial_trace(rho: DensityMatrix, keep: Iterable[Hashable]) -> DensityMatrix:
    """Marginal of ``rho`` on the sites ``keep``, kept in ``rho``'s label order."""
    keep = list(keep)
    if not keep:
        raise ValueError("keep set is empty")
    sub = rho.space.subspace(keep)
    space = rho.space
    if sub.site_count == space.site_count:
        return rho
    n, d = space.site_count, space.local_dim
    kpos = space.positions(sub.labels)
    tpos = [i for i in range(n) if i not in kpos]
    t = rho.matrix.reshape((d,) * (2 * n))
    t = t.transpose(kpos + tpos + [p + n for p in kpos] + [p + n for p in tpos])
    dk, dt = d ** len(kpos), d ** len(tpos)
    m = np.einsum("ijkj->ik", t.reshape(dk, dt, dk, dt))
    return DensityMatrix._trusted(sub, m)


def _entropy_from_eigenvalues(w: np.ndarray) -> float:
    w = np.asarray(w, dtype=float)
    if w.size == 0:
        return 0.0
    top = w.max()
    if w.min() < -NEGATIVE_EIG_TOL:
        raise ValueError(f"negative eigenvalue {w.min():.3e} beyond tolerance")
    w = w[w > ZERO_CLIP_REL * top]
    return float(-np.sum(w * np.log(w)))


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """S(rho) = -tr rho ln rho in nats; tiny eigenvalues count as zero."""
    return _entropy_from_eigenvalues(np.linalg.eigvalsh(rho.matrix))


def shannon_entropy(p, tol: float = 1e-10) -> float:
    p = np.asarray(p, dtype=float).ravel()
    if p.size == 0:
        raise ValueError("empty probability vector")
    if p.min() < -tol:
        raise ValueError(f"negative probability {p.min():.3e}")
    if abs(p.sum() - 1) > tol:
        raise ValueError(f"probabilities sum to {p.sum()}, not 1")
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def trace_norm_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    """||a - b||_1, the sum of singular values of the difference."""
    if a.space.dim != b.space.dim:
        raise ValueError(f"dimension mismatch: {a.space.dim} vs {b.space.dim}")
    # fixed operand order makes d(a, b) == d(b, a) bit for bit
    x, y = a.matrix, b.matrix
    if x.tobytes() > y.tobytes():
        x, y = y, x
    return trace_norm(x - y)


def trace_norm(x: np.ndarray) -> float:
    x = np.asarray(x)
    if np.allclose(x, x.conj().T, atol=1e-14, rtol=0):
        return float(np.sum(np.abs(np.linalg.eigvalsh((x + x.conj().T) / 2))))
    return float(np.sum(np.linalg.svd(x, compute_uv=False)))


def binary_entropy(p: float) -> float:
    if p <= 0 or p >= 1:
        return 0.0
    return -p * math.log(p) - (1 - p) * math.log(1 - p)


def fannes_bound(delta: float, dim: int) -> float:
    """Continuity bound |S(rho) - S(sigma)| <= delta ln(dim - 1) + H2(delta).

    ``delta`` is half the trace distance and ``dim`` the dimension of a space
    supporting both states.
    """
    if not 0 <= delta <= 1:
        raise ValueError(f"delta must lie in [0, 1], got {delta}")
    if dim < 2:
        raise ValueError("dim must be >= 2")
    return delta * math.log(dim - 1) + binary_entropy(delta)


# -- random instances, used by tests and fuzz drivers -------------------------


def random_density_matrix(rng: np.random.Generator, dim: int, rank: int | None = None) -> np.ndarray:
    """Ginibre-ensemble density matrix of the given rank (full rank by default)."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = g @ g.conj().T
    return m / np.trace(m).real


def random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (g + g.conj().T) / 2


def random_state(rng: np.random.Generator, n_sites: int, local_dim: int = 2, rank=None) -> DensityMatrix:
    space = SiteSpace.chain(n_sites, local_dim)
    return DensityMatrix(space, random_density_matrix(rng, space.dim, rank))


def embed_operator(op: np.ndarray, support: Sequence[Hashable], space: SiteSpace) -> np.ndarray:
    """Lift ``op`` acting on ``support`` (in the given order) to all of ``space``."""
    support = list(support)
    pos = space.positions(support)
    if len(set(pos)) != len(pos):
        raise ValueError("repeated site in support")
    n, d = space.site_count, space.local_dim
    k = len(pos)
    op = np.asarray(op)
    if op.shape != (d**k, d**k):
        raise ValueError(f"operator shape {op.shape} does not match {k} sites of dim {d}")
    rest = [i for i in range(n) if i not in pos]
    full = np.kron(op, np.eye(d ** len(rest)))
    # factors currently ordered (support..., rest...); move them home
    order = pos + rest
    inv = np.argsort(order)
    t = full.reshape((d,) * (2 * n))
    t = t.transpose(list(inv) + [i + n for i in inv])
    return t.reshape(space.dim, space.dim)


def expectation(rho: DensityMatrix, op: np.ndarray, support: Sequence[Hashable]) -> float:
    """tr[rho op] for ``op`` supported on ``support``; evaluated on the marginal."""
    marg = partial_trace(rho, support)
    lifted = embed_operator(op, support, marg.space)
    return float(np.real(np.trace(marg.matrix @ lifted)))


def ghz_state(n_sites: int, local_dim: int = 2) -> DensityMatrix:
    """(|0...0> + ... + |d-1...d-1>) / sqrt(d) on a chain of n sites."""
    space = SiteSpace.chain(n_sites, local_dim)
    psi = np.zeros(space.dim, dtype=complex)
    step = sum(local_dim**k for k in range(n_sites))
    psi[np.arange(local_dim) * step] = 1
    return DensityMatrix.from_pure(space, psi)


def product_state(site: np.ndarray, n_sites: int) -> DensityMatrix:
    """``site`` (x) ... (x) ``site`` on a chain of n sites."""
    site = np.asarray(site, dtype=complex)
    space = SiteSpace.chain(n_sites, site.shape[0])
    m = np.ones((1, 1), dtype=complex)
    for _ in range(n_sites):
        m = np.kron(m, site)
    return DensityMatrix(space, m)
