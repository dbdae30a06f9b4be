"""Tensor-network form of Gibbs states of commuting nearest-neighbour Hamiltonians.

For commuting bond terms, exp(-beta H / 2) is the product of the bond factors
exp(-beta h / 2). Splitting every factor by an operator Schmidt decomposition
puts one operator on each end of the bond; multiplying the operators that land
on a site gives a site tensor with one virtual index per bond (dimension at
most d^2). Reading each site tensor's operator indices (i1, i2) as a physical
index and an environment index, the network is a purification of
exp(-beta H) and tracing the environment recovers the Gibbs state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lattice import LatticeHamiltonian, Term
from .measures import mutual_information
from .qstate import DensityMatrix, SiteSpace, embed_operator, trace_norm_distance

RANK_TOL = 1e-12
COMMUTE_TOL = 1e-10


class NonCommutingError(ValueError):
    """The interaction terms do not commute, so the Gibbs state does not factor."""


@dataclass
class OperatorSchmidt:
    """``op = sum_k weights[k] * left[k] (x) right[k]`` with orthonormal families."""

    left: np.ndarray  # (rank, d, d)
    right: np.ndarray  # (rank, d, d)
    weights: np.ndarray

    @property
    def rank(self) -> int:
        return len(self.weights)

    def reconstruct(self) -> np.ndarray:
        return np.einsum("k,kab,kcd->acbd", self.weights, self.left, self.right).reshape(
            self.left.shape[1] ** 2, -1
        )


def schmidt_decompose_operator(op: np.ndarray, d: int) -> OperatorSchmidt:
    """Operator Schmidt decomposition of a two-site operator by SVD of its
    realignment (i1 j1), (i2 j2)."""
    op = np.asarray(op, dtype=complex)
    r = op.reshape(d, d, d, d).transpose(0, 2, 1, 3).reshape(d * d, d * d)
    u, s, vh = np.linalg.svd(r)
    keep = s > RANK_TOL * max(s[0], 1e-300)
    keep[0] = True
    return OperatorSchmidt(
        u[:, keep].T.reshape(-1, d, d),
        vh[keep].reshape(-1, d, d),
        s[keep],
    )


def _check_hermitian(h):
    if np.max(np.abs(h - h.conj().T)) > 1e-10:
        raise ValueError("interaction term is not Hermitian")


def half_boltzmann(h: np.ndarray, beta: float) -> np.ndarray:
    _check_hermitian(h)
    w, v = np.linalg.eigh((h + h.conj().T) / 2)
    return (v * np.exp(-beta * w / 2)) @ v.conj().T


def operator_schmidt(h: np.ndarray, beta: float, d: int | None = None) -> OperatorSchmidt:
    """Schmidt decomposition of exp(-beta h / 2) for a two-site term h."""
    h = np.asarray(h, dtype=complex)
    d = int(round(math.sqrt(h.shape[0]))) if d is None else d
    return schmidt_decompose_operator(half_boltzmann(h, beta), d)


def _bond_factors(h: np.ndarray, beta: float, d: int):
    """Per-end operator stacks of exp(-beta h / 2), padded to d^2 terms."""
    sch = operator_schmidt(h, beta, d)
    D = d * d
    first = np.zeros((D, d, d), dtype=complex)
    second = np.zeros((D, d, d), dtype=complex)
    root = np.sqrt(sch.weights)
    first[: sch.rank] = root[:, None, None] * sch.left
    second[: sch.rank] = root[:, None, None] * sch.right
    return first, second


def commutator_norm(op1, sites1, op2, sites2, d: int) -> float:
    labels = sorted(set(sites1) | set(sites2))
    space = SiteSpace(tuple(labels), d)
    a = embed_operator(op1, sites1, space)
    b = embed_operator(op2, sites2, space)
    return float(np.max(np.abs(a @ b - b @ a)))


def _require_commuting(pairs, d):
    for name, (op1, s1, op2, s2) in pairs.items():
        err = commutator_norm(op1, s1, op2, s2, d)
        if err > COMMUTE_TOL:
            raise NonCommutingError(
                f"terms do not commute ({name}: |[h, h']| = {err:.2e}); the product form of "
                "exp(-beta H) requires mutually commuting interactions"
            )


def _site_operator(stacks, d):
    """Product of factor stacks, one virtual index per stack: (D, ..., d, d)."""
    res = np.eye(d, dtype=complex)
    for f in stacks:
        res = np.einsum("...ik,akj->...aij", res, f)
    return res


@dataclass
class GibbsMpoTensor:
    """Site tensor ``W[l, r, i1, i2]`` of the ring MPO for exp(-beta H / 2)."""

    tensor: np.ndarray
    d: int
    beta: float
    h_pair: np.ndarray

    @property
    def bond_dim(self) -> int:
        return self.tensor.shape[0]


def build_gibbs_tensor_1d(h_pair: np.ndarray, beta: float, d: int) -> GibbsMpoTensor:
    """MPO tensor (D = d^2) for a translation-invariant commuting bond term."""
    h_pair = np.asarray(h_pair, dtype=complex)
    _check_hermitian(h_pair)
    _require_commuting({"neighbouring bonds": (h_pair, (0, 1), h_pair, (1, 2))}, d)
    first, second = _bond_factors(h_pair, beta, d)
    # left leg: the site is the second member of the bond on its left
    w = np.einsum("lik,rkj->lrij", second, first)
    return GibbsMpoTensor(w, d, beta, h_pair)


def contract_ring(mpo: GibbsMpoTensor, n: int) -> np.ndarray:
    """exp(-beta H / 2) on an n-site ring (n >= 3) from the MPO tensor."""
    if n < 3:
        raise ValueError("ring contraction needs n >= 3")
    w = mpo.tensor
    D, d = w.shape[0], mpo.d
    acc = w  # (l0, r, I, J)
    for _ in range(n - 1):
        acc = np.einsum("amIJ,mrij->arIiJj", acc, w, optimize=True)
        s = acc.shape
        acc = acc.reshape(D, D, s[2] * s[3], s[4] * s[5])
    return np.einsum("aaIJ->IJ", acc)


def gibbs_from_half(m: np.ndarray, space: SiteSpace) -> DensityMatrix:
    rho = m @ m.conj().T
    return DensityMatrix(space, rho / np.trace(rho).real)


def purified_vector(m: np.ndarray, n: int, d: int) -> np.ndarray:
    """The network read as a pure state, site index (i1, i2) = (physical, environment)."""
    t = m.reshape((d,) * (2 * n))
    perm = [x for k in range(n) for x in (k, n + k)]
    return t.transpose(perm).reshape(-1)


def ring_hamiltonian(h_pair: np.ndarray, n: int, d: int) -> LatticeHamiltonian:
    space = SiteSpace(tuple(range(n)), d)
    return LatticeHamiltonian(space, [Term((i, (i + 1) % n), operator=h_pair) for i in range(n)], "ring")


def exact_gibbs(h: LatticeHamiltonian, beta: float) -> DensityMatrix:
    w, v = np.linalg.eigh(h.matrix())
    p = np.exp(-beta * (w - w[0]))
    return DensityMatrix(h.space, (v * (p / p.sum())) @ v.conj().T)


# -- two dimensions ----------------------------------------------------------------


@dataclass
class GibbsPepsTensor:
    """Bulk PEPS tensor ``A[r, l, u, d, i]`` with ``i = (i1, i2)`` of size d * d.

    The per-bond factor stacks are kept so boundary sites of an open patch,
    which lack some bonds, can be assembled from the same data.
    """

    tensor: np.ndarray
    d: int
    beta: float
    h_h: np.ndarray
    h_v: np.ndarray
    horiz_left: np.ndarray
    horiz_right: np.ndarray
    vert_up: np.ndarray
    vert_down: np.ndarray

    def to_json(self) -> dict:
        flat = self.tensor.reshape(-1)
        return {
            "index_order": "r,l,u,d,i",
            "shape": list(self.tensor.shape),
            "local_dim": self.d,
            "beta": self.beta,
            "entries": [[float(z.real), float(z.imag)] for z in flat],
        }

    @staticmethod
    def tensor_from_json(obj: dict) -> np.ndarray:
        e = np.asarray(obj["entries"], dtype=float)
        return (e[:, 0] + 1j * e[:, 1]).reshape(obj["shape"])


def build_gibbs_tensor_2d(h_h: np.ndarray, h_v: np.ndarray, beta: float, d: int) -> GibbsPepsTensor:
    """Bulk tensor for horizontal and vertical commuting bond terms.

    h_v acts on (upper site, lower site). Every pair of terms that can share a
    site on the square lattice is checked for commutation first.
    """
    h_h = np.asarray(h_h, dtype=complex)
    h_v = np.asarray(h_v, dtype=complex)
    _check_hermitian(h_h)
    _check_hermitian(h_v)
    _require_commuting(
        {
            "horizontal-horizontal": (h_h, (0, 1), h_h, (1, 2)),
            "vertical-vertical": (h_v, (0, 1), h_v, (1, 2)),
            "left/upper": (h_h, (0, 1), h_v, (0, 2)),
            "left/lower": (h_h, (0, 1), h_v, (2, 0)),
            "right/upper": (h_h, (0, 1), h_v, (1, 2)),
            "right/lower": (h_h, (0, 1), h_v, (2, 1)),
        },
        d,
    )
    hl, hr = _bond_factors(h_h, beta, d)  # left-site, right-site factors
    vu, vd = _bond_factors(h_v, beta, d)  # upper-site, lower-site factors
    # right leg -> left member, left leg -> right member, up leg -> lower member,
    # down leg -> upper member
    a = _site_operator([hl, hr, vd, vu], d)
    D = d * d
    return GibbsPepsTensor(a.reshape(D, D, D, D, d * d), d, beta, h_h, h_v, hl, hr, vu, vd)


def patch_bonds(rows: int, cols: int):
    horiz = [(r * cols + c, r * cols + c + 1) for r in range(rows) for c in range(cols - 1)]
    vert = [(r * cols + c, (r + 1) * cols + c) for r in range(rows - 1) for c in range(cols)]
    return horiz, vert


MAX_PATCH_SITES = 6


def contract_patch(t: GibbsPepsTensor, rows: int, cols: int) -> np.ndarray:
    """exp(-beta H / 2) on an open rows x cols patch by exact summation over
    all virtual indices."""
    n = rows * cols
    if n > MAX_PATCH_SITES:
        raise ValueError(f"patch of {n} sites exceeds the exact-contraction cap of {MAX_PATCH_SITES}")
    horiz, vert = patch_bonds(rows, cols)
    edges = horiz + vert
    operands = []
    n_edge = len(edges)
    for s in range(n):
        stacks, idx = [], []
        for e, (x, y) in enumerate(edges):
            if (x, y) in horiz:
                if s == x:
                    stacks.append(t.horiz_left)
                    idx.append(e)
                elif s == y:
                    stacks.append(t.horiz_right)
                    idx.append(e)
            else:
                if s == x:
                    stacks.append(t.vert_up)
                    idx.append(e)
                elif s == y:
                    stacks.append(t.vert_down)
                    idx.append(e)
        operands += [_site_operator(stacks, t.d), idx + [n_edge + s, n_edge + n + s]]
    out = [n_edge + s for s in range(n)] + [n_edge + n + s for s in range(n)]
    m = np.einsum(*operands, out, optimize=True)
    dim = t.d**n
    return m.reshape(dim, dim)


def patch_hamiltonian(h_h, h_v, rows: int, cols: int, d: int) -> LatticeHamiltonian:
    horiz, vert = patch_bonds(rows, cols)
    space = SiteSpace(tuple(range(rows * cols)), d)
    terms = [Term(b, operator=h_h) for b in horiz] + [Term(b, operator=h_v) for b in vert]
    return LatticeHamiltonian(space, terms, "patch", (rows, cols))


def patch_gibbs(t: GibbsPepsTensor, rows: int, cols: int) -> DensityMatrix:
    m = contract_patch(t, rows, cols)
    return gibbs_from_half(m, SiteSpace(tuple(range(rows * cols)), t.d))


def ring_gibbs(mpo: GibbsMpoTensor, n: int) -> DensityMatrix:
    return gibbs_from_half(contract_ring(mpo, n), SiteSpace(tuple(range(n)), mpo.d))


def reconstruction_error(rho: DensityMatrix, h: LatticeHamiltonian, beta: float) -> float:
    return trace_norm_distance(rho, exact_gibbs(h, beta))


def cut_bonds(region_a, edges) -> int:
    sa = set(region_a)
    return sum((x in sa) != (y in sa) for x, y in edges)


def peps_area_check_mixed(t, patch, region_a) -> dict:
    """I(A:B) of the contracted Gibbs state against 2 |cut bonds| ln D, D = d^2.

    ``t`` is a GibbsPepsTensor with ``patch = (rows, cols)`` or a
    GibbsMpoTensor with ``patch = n`` (ring length).
    """
    if isinstance(t, GibbsMpoTensor):
        n = int(patch)
        rho = ring_gibbs(t, n)
        edges = [(i, (i + 1) % n) for i in range(n)]
    else:
        rows, cols = patch
        rho = patch_gibbs(t, rows, cols)
        h, v = patch_bonds(rows, cols)
        edges = h + v
    a = tuple(sorted(region_a))
    b = tuple(x for x in rho.labels if x not in set(a))
    mi = mutual_information(rho, (a, b))
    D = t.d**2
    cuts = cut_bonds(a, edges)
    bound = 2 * cuts * math.log(D)
    return {"I_AB": mi, "bound": bound, "cut_bonds": cuts, "slack": bound - mi, "pass": mi <= bound + 1e-9}


# -- presets ----------------------------------------------------------------------------

def ising_pair(coupling: float = 1.0) -> np.ndarray:
    z = np.diag([1.0, -1.0])
    return -coupling * np.kron(z, z).astype(complex)


def cluster_block_pair() -> np.ndarray:
    """Cluster-state terms -Z X Z regrouped onto blocks of two qubits (d = 4).

    For blocks (a, b) and (c, e) the bond carries -Z_a X_b Z_c - Z_b X_c Z_e,
    which covers every three-site term once on a ring of blocks.
    """
    from .lattice import pauli_string

    return -(pauli_string("ZXZI") + pauli_string("IZXZ"))


def cluster_ring_hamiltonian(n_qubits: int) -> LatticeHamiltonian:
    from .lattice import pauli_string

    space = SiteSpace(tuple(range(n_qubits)), 2)
    terms = [
        Term(((i - 1) % n_qubits, i, (i + 1) % n_qubits), operator=-pauli_string("ZXZ")) for i in range(n_qubits)
    ]
    return LatticeHamiltonian(space, terms, "ring")
