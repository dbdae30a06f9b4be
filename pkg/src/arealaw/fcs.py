"""Finitely correlated states generated by a channel T from a D-level memory.

Kraus operators of the generator are stored as a tensor ``K[k, a_out, i, a_in]``:
each maps the memory (dimension D) into memory (x) one emitted site (dimension
d), so a single ``K[k]`` reshaped to ``(D * d, D)`` is an ordinary Kraus matrix
of ``T : B(C^D) -> B(C^D (x) C^d)``. Sites are emitted left to right and the
transfer operator is ``E(x) = tr_site T(x)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg

from .measures import concavity_residuals, mutual_information, ring_mutual_information
from .qstate import (
    CapExceededError,
    DensityMatrix,
    SiteSpace,
    ZERO_CLIP_REL,
    dim_cap,
    fannes_bound,
    partial_trace,
    random_unitary,
    trace_norm,
    trace_norm_distance,
    von_neumann_entropy,
)

TP_TOL = 1e-10
PERIPHERAL_TOL = 1e-10


class NonGenericSpectrumError(ValueError):
    """The transfer operator has more than one eigenvalue of modulus one."""


class MixedGeneratorError(ValueError):
    """An operation that needs a pure generator got one with several Kraus terms."""


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    """CPTP map given by Kraus matrices of shape ``(output_dim, input_dim)``."""

    kraus: tuple

    def __post_init__(self):
        ks = tuple(np.asarray(k, dtype=complex) for k in self.kraus)
        if not ks:
            raise ValueError("a channel needs at least one Kraus operator")
        shape = ks[0].shape
        if any(k.shape != shape for k in ks):
            raise ValueError("Kraus operators must share one shape")
        total = sum(k.conj().T @ k for k in ks)
        err = np.max(np.abs(total - np.eye(shape[1])))
        if err > TP_TOL:
            raise ValueError(f"channel is not trace preserving: |sum K^dag K - 1| = {err:.3e}")
        object.__setattr__(self, "kraus", ks)

    @property
    def input_dim(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def output_dim(self) -> int:
        return self.kraus[0].shape[0]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return sum(k @ x @ k.conj().T for k in self.kraus)

    def choi(self) -> np.ndarray:
        """sum_ij |i><j| (x) T(|i><j|)."""
        n = self.input_dim
        out = np.zeros((n * self.output_dim, n * self.output_dim), dtype=complex)
        for i in range(n):
            for j in range(n):
                e = np.zeros((n, n))
                e[i, j] = 1
                out += np.kron(e, self(e))
        return out

    def minimal(self, tol: float = 1e-12) -> "QuantumChannel":
        """Equivalent channel with Choi-rank many Kraus operators."""
        w, v = np.linalg.eigh(self.choi())
        keep = w > tol * max(w.max(), 1.0)
        n, m = self.input_dim, self.output_dim
        ks = []
        for lam, vec in zip(w[keep][::-1], v[:, keep].T[::-1]):
            ks.append(math.sqrt(lam) * vec.reshape(n, m).T)
        return QuantumChannel(tuple(ks))


@dataclass(frozen=True)
class TransferSpectrum:
    eigenvalues: np.ndarray
    eta: float
    xi: float


@dataclass(frozen=True, eq=False)
class FcsDescriptor:
    """Generator of a translation-invariant finitely correlated state.

    ``fixed_point`` may be supplied for generators whose transfer operator has
    a degenerate peripheral spectrum (such as the GHZ generator); otherwise it
    is the unique fixed point of E.
    """

    bond_dim: int
    phys_dim: int
    channel: QuantumChannel
    name: str = ""
    given_fixed_point: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        D, d = self.bond_dim, self.phys_dim
        if self.channel.input_dim != D or self.channel.output_dim != D * d:
            raise ValueError(
                f"channel maps {self.channel.input_dim} -> {self.channel.output_dim}, expected {D} -> {D * d}"
            )

    @classmethod
    def from_kraus(cls, kraus, name: str = "", fixed_point=None) -> "FcsDescriptor":
        """Build from a tensor or list of tensors shaped ``(D, d, D)``."""
        ks = np.asarray(kraus, dtype=complex)
        if ks.ndim == 3:
            ks = ks[None]
        r, D, d, D2 = ks.shape
        if D != D2:
            raise ValueError("Kraus tensors must be shaped (D, d, D)")
        ch = QuantumChannel(tuple(k.reshape(D * d, D) for k in ks))
        return cls(D, d, ch, name, fixed_point)

    @cached_property
    def kraus(self) -> np.ndarray:
        D, d = self.bond_dim, self.phys_dim
        return np.stack([k.reshape(D, d, D) for k in self.channel.kraus])

    @property
    def is_pure(self) -> bool:
        return len(self.channel.kraus) == 1

    @cached_property
    def transfer_matrix(self) -> np.ndarray:
        """E as a D^2 x D^2 matrix on row-major vec(x)."""
        D = self.bond_dim
        e = np.einsum("kaib,kcid->acbd", self.kraus, self.kraus.conj())
        return e.reshape(D * D, D * D)

    def transfer(self, x: np.ndarray, power: int = 1) -> np.ndarray:
        D = self.bond_dim
        m = np.linalg.matrix_power(self.transfer_matrix, power)
        return (m @ np.asarray(x).reshape(-1)).reshape(D, D)

    @cached_property
    def fixed_point(self) -> np.ndarray:
        if self.given_fixed_point is not None:
            return np.asarray(self.given_fixed_point, dtype=complex)
        transfer_spectrum(self)  # raises on a non-generic spectrum
        D = self.bond_dim
        # absolute cutoff: a relative one finds no kernel when D = 1
        _, sv, vh = np.linalg.svd(self.transfer_matrix - np.eye(D * D))
        ns = vh[sv <= 1e-9].conj().T
        if ns.shape[1] != 1:
            raise NonGenericSpectrumError(f"fixed-point space has dimension {ns.shape[1]}")
        rho = ns[:, 0].reshape(D, D)
        rho = rho / np.trace(rho)
        return (rho + rho.conj().T) / 2


def transfer_spectrum(f: FcsDescriptor) -> TransferSpectrum:
    """Spectrum of E from its Schur form, sorted by decreasing modulus.

    Raises NonGenericSpectrumError unless exactly one eigenvalue has modulus
    one. ``xi`` is ``inf`` when ``eta`` is within 1e-12 of one.
    """
    t, _ = scipy.linalg.schur(f.transfer_matrix.astype(complex), output="complex")
    ev = np.diag(t)
    ev = ev[np.argsort(-np.abs(ev), kind="stable")]
    if abs(ev[0] - 1) > PERIPHERAL_TOL:
        raise ValueError(f"leading eigenvalue {ev[0]} is not 1; generator is not trace preserving")
    n_peripheral = int(np.sum(np.abs(ev) > 1 - PERIPHERAL_TOL))
    if n_peripheral > 1:
        raise NonGenericSpectrumError(
            f"E has {n_peripheral} eigenvalues of modulus one; the generic condition "
            "(a single eigenvalue of magnitude one) fails"
        )
    eta = float(abs(ev[1])) if ev.size > 1 else 0.0
    if eta < 1e-14:
        eta = 0.0
    if eta == 0:
        xi = 0.0
    elif eta >= 1 - 1e-12:
        xi = math.inf
    else:
        xi = -1 / math.log(eta)
    return TransferSpectrum(ev, eta, xi)


# -- block states ---------------------------------------------------------------


def _check_cap(d: int, n: int):
    if d**n > dim_cap():
        raise CapExceededError(f"{d}^{n} = {d ** n} exceeds dimension cap {dim_cap()}")


def _emit(kraus: np.ndarray, x: np.ndarray) -> np.ndarray:
    # x[a, P, b, Q] -> x'[a', (P, i), b', (Q, j)]
    y = np.einsum("kxia,aPbQ,kyjb->xPiyQj", kraus, x, kraus.conj(), optimize=True)
    s = y.shape
    return y.reshape(s[0], s[1] * s[2], s[3], s[4] * s[5])


def _gap(f: FcsDescriptor, x: np.ndarray, L: int) -> np.ndarray:
    if L == 0:
        return x
    D = f.bond_dim
    m = np.linalg.matrix_power(f.transfer_matrix, L).reshape(D, D, D, D)
    return np.einsum("xyab,aPbQ->xPyQ", m, x, optimize=True)


def _close(x: np.ndarray) -> np.ndarray:
    return np.einsum("aPaQ->PQ", x)


def _start(memory: np.ndarray) -> np.ndarray:
    D = memory.shape[0]
    return np.asarray(memory, dtype=complex).reshape(D, 1, D, 1)


def block_state(f: FcsDescriptor, n_sites: int, labels=None):
    """State of ``n_sites`` contiguous sites: tr_memory T^n(fixed point).

    Returns the scalar 1.0 for an empty block.
    """
    if n_sites == 0:
        return 1.0
    _check_cap(f.phys_dim, n_sites)
    x = _start(f.fixed_point)
    for _ in range(n_sites):
        x = _emit(f.kraus, x)
    labels = tuple(range(n_sites)) if labels is None else tuple(labels)
    return DensityMatrix(SiteSpace(labels, f.phys_dim), _close(x))


@dataclass
class BlockStates:
    rho_a: DensityMatrix
    rho_b: DensityMatrix
    rho_ab: DensityMatrix

    @property
    def product(self) -> DensityMatrix:
        return self.rho_a.tensor(self.rho_b)

    def trace_distance(self) -> float:
        return trace_norm_distance(self.rho_ab, self.product)

    def mutual_information(self) -> float:
        return mutual_information(self.rho_ab, (self.rho_a.labels, self.rho_b.labels))


def separated_block_state(f: FcsDescriptor, n_a: int, gap: int, n_b: int) -> BlockStates:
    """Blocks of ``n_a`` and ``n_b`` sites separated by ``gap`` sites.

    The open ends are closed with the fixed point on the left and the identity
    (the co-fixed point of a trace-preserving E) on the right, which is the
    exact half-infinite limit.
    """
    if n_a < 1 or n_b < 1:
        raise ValueError("both blocks need at least one site")
    _check_cap(f.phys_dim, n_a + n_b)
    x = _start(f.fixed_point)
    for _ in range(n_a):
        x = _emit(f.kraus, x)
    x = _gap(f, x, gap)
    for _ in range(n_b):
        x = _emit(f.kraus, x)
    la = tuple(range(n_a))
    lb = tuple(range(n_a + gap, n_a + gap + n_b))
    rho_ab = DensityMatrix(SiteSpace(la + lb, f.phys_dim), _close(x))
    return BlockStates(partial_trace(rho_ab, la), partial_trace(rho_ab, lb), rho_ab)


# -- purification -----------------------------------------------------------------


def purify_channel(f: FcsDescriptor, minimize: bool = True) -> FcsDescriptor:
    """Stinespring dilation of the generator into a single-Kraus generator.

    The r Kraus terms become an ancilla of dimension r attached to every
    emitted site, so the physical dimension grows from d to d * r with the
    site index ordered (original, ancilla). With ``minimize`` r is the Choi
    rank, at most d * D^2. The transfer operator is unchanged.
    """
    ch = f.channel.minimal() if minimize else f.channel
    D, d = f.bond_dim, f.phys_dim
    ks = np.stack([k.reshape(D, d, D) for k in ch.kraus])  # (r, D, d, D)
    r = ks.shape[0]
    v = np.transpose(ks, (1, 2, 0, 3)).reshape(D, d * r, D)
    return FcsDescriptor.from_kraus(v, name=f"{f.name}+purified", fixed_point=f.fixed_point)


def trace_ancilla(rho: DensityMatrix, phys_dim: int, anc_dim: int) -> DensityMatrix:
    """Discard the ancilla factor of every site of a purified block state."""
    n = rho.space.site_count
    t = rho.matrix.reshape((phys_dim, anc_dim) * n * 2)
    rows = "".join(chr(97 + 2 * k) + chr(97 + 2 * k + 1) for k in range(n))
    cols = "".join(chr(65 + 2 * k) + chr(97 + 2 * k + 1) for k in range(n))
    out = "".join(chr(97 + 2 * k) for k in range(n)) + "".join(chr(65 + 2 * k) for k in range(n))
    m = np.einsum(f"{rows}{cols}->{out}", t)
    dim = phys_dim**n
    return DensityMatrix(SiteSpace(rho.labels, phys_dim), m.reshape(dim, dim))


def numerical_rank(rho: DensityMatrix) -> int:
    w = np.linalg.eigvalsh(rho.matrix)
    return int(np.sum(w > ZERO_CLIP_REL * w.max()))


@dataclass
class FannesPoint:
    gap: int
    delta: float
    support_dim: int
    mi_purified: float
    bound: float


def purified_fannes_bound(fp: FcsDescriptor, n_a: int, gap: int, n_b: int) -> FannesPoint:
    """Fannes bound on I(AA':BB') for a purified generator ``fp``.

    The joint state and the product of its marginals are both supported on
    supp(rho_AA') (x) supp(rho_BB'), whose dimension is used for the bound.
    """
    bs = separated_block_state(fp, n_a, gap, n_b)
    delta = min(0.5 * bs.trace_distance(), 1.0)
    dim = numerical_rank(bs.rho_a) * numerical_rank(bs.rho_b)
    bound = fannes_bound(delta, dim) if dim >= 2 else 0.0
    return FannesPoint(gap, delta, dim, bs.mutual_information(), bound)


@dataclass
class CurveRow:
    L: int
    trace_distance: float
    mutual_information: float
    bound: float
    mi_purified: float = float("nan")


def factorization_curve(f: FcsDescriptor, n_a: int, n_b: int, L_grid, with_bound: bool = True) -> list[CurveRow]:
    """Trace distance to the product state, mutual information, and the
    purification + Fannes upper bound on the mutual information, per gap L."""
    fp = purify_channel(f) if with_bound else None
    rows = []
    for L in L_grid:
        bs = separated_block_state(f, n_a, int(L), n_b)
        td = bs.trace_distance()
        mi = bs.mutual_information()
        if fp is not None:
            pt = purified_fannes_bound(fp, n_a, int(L), n_b)
            rows.append(CurveRow(int(L), td, mi, pt.bound, pt.mi_purified))
        else:
            rows.append(CurveRow(int(L), td, mi, float("nan")))
    return rows


@dataclass
class DecayFit:
    slope: float
    intercept: float
    points: int
    c_fit: float | None = None
    bound_violations: list = field(default_factory=list)


def log_linear_fit(x, y, floor: float = 1e-13) -> DecayFit:
    """Least-squares fit of ln y against x, skipping values below ``floor``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    m = y > floor
    if m.sum() < 2:
        raise ValueError("fewer than two points above the floor")
    slope, intercept = np.polyfit(x[m], np.log(y[m]), 1)
    return DecayFit(float(slope), float(intercept), int(m.sum()))


def fitted_norm_bound(L_values, distances, eta: float, fit_at: int | None = None, rtol: float = 1e-9):
    """Fit c in ||rho_AB - rho_A (x) rho_B||_1 <= 4 c eta^L at the smallest L,
    then list the larger L where the bound fails."""
    L = np.asarray(L_values)
    dist = np.asarray(distances, dtype=float)
    k = 0 if fit_at is None else int(np.nonzero(L == fit_at)[0][0])
    if eta == 0:
        viol = [int(l) for l, t in zip(L[k + 1:], dist[k + 1:]) if t > 1e-12]
        return 0.0, viol
    c = dist[k] / (4 * eta ** L[k])
    viol = [int(l) for l, t in zip(L[k + 1:], dist[k + 1:]) if t > 4 * c * eta**l * (1 + rtol) + 1e-13]
    return float(c), viol


def mixing_constant(f: FcsDescriptor, L: int, eta: float | None = None) -> float:
    """Smallest c with E^L = (1 - c eta^L) tr[.] rho + c eta^L E' for a channel E'.

    E' is trace preserving automatically; complete positivity asks that the
    Choi matrix J(E^L) - J(P) + c eta^L (1 (x) rho) be positive, where P is the
    projection x -> tr[x] rho onto the fixed point. Returns inf when rho is
    rank deficient and E^L - P leaves its support.
    """
    D = f.bond_dim
    if eta is None:
        eta = transfer_spectrum(f).eta
    S = np.linalg.matrix_power(f.transfer_matrix, int(L))
    J = S.reshape(D, D, D, D).transpose(2, 0, 3, 1).reshape(D * D, D * D)
    M = np.kron(np.eye(D), f.fixed_point)
    diff = J - M
    w, v = np.linalg.eigh(M)
    keep = w > 1e-12 * w.max()
    if not keep.all():
        ker = v[:, ~keep]
        if np.abs(ker.conj().T @ diff @ ker).max() > 1e-12:
            return math.inf
    vk = v[:, keep] / np.sqrt(w[keep])
    x = -(vk.conj().T @ diff @ vk)
    top = float(np.linalg.eigvalsh((x + x.conj().T) / 2).max())
    if top <= 1e-14:
        return 0.0
    if eta == 0:
        return math.inf
    return top / eta ** int(L)


def mixing_norm_bound(f: FcsDescriptor, L_values, distances, rtol: float = 1e-9):
    """Check ||rho_AB - rho_A (x) rho_B||_1 <= 4 c eta^L with c = max_L mixing_constant.

    Returns (c, violations). Unlike ``fitted_norm_bound`` the constant comes
    from the channel alone, not from the measured distances.
    """
    eta = transfer_spectrum(f).eta
    L = [int(l) for l in L_values]
    c = max(mixing_constant(f, l, eta) for l in L)
    viol = [l for l, t in zip(L, distances) if t > 4 * c * eta**l * (1 + rtol) + 1e-13]
    return float(c), viol


def mps_area_check(f: FcsDescriptor, n: int, interior: bool = True) -> dict:
    """I(A:B) for a block A of a pure FCS against 2 ln D per cut bond.

    For a pure generator the whole chain is pure, so I(A:B) = 2 S(A). An
    interior block cuts two bonds; an end block of a half-infinite chain
    (started from the dominant eigenvector of the fixed point) cuts one.
    """
    if not f.is_pure:
        raise MixedGeneratorError("mps_area_check needs a pure generator; purify it first")
    if interior:
        rho = block_state(f, n)
        cuts = 2
    else:
        _check_cap(f.phys_dim, n)
        w, v = np.linalg.eigh(f.fixed_point)
        top = v[:, -1]
        x = _start(np.outer(top, top.conj()))
        for _ in range(n):
            x = _emit(f.kraus, x)
        rho = DensityMatrix(SiteSpace(tuple(range(n)), f.phys_dim), _close(x))
        cuts = 1
    mi = 2 * von_neumann_entropy(rho)
    bound = 2 * math.log(f.bond_dim) * cuts
    return {"I_AB": mi, "bound": bound, "cuts": cuts, "slack": bound - mi, "pass": mi <= bound + 1e-9}


# -- saturation -----------------------------------------------------------------------


@dataclass
class SaturationResult:
    saturation_length: int | None
    residuals: np.ndarray
    markov_consistent: bool
    increments: np.ndarray


def saturation_detect(profile, n: int | None = None, tol: float = 1e-9) -> SaturationResult:
    """Look for exact saturation I(L0) = I(L0 - 1) of the block/rest mutual
    information on a ring, L0 <= N/2.

    ``residuals`` holds S(L-1) + S(L+1) - 2 S(L) for L in [L0, N - L0] (empty
    if there is no saturation). Saturation is quantum-Markov consistent when
    all of them vanish within ``tol``.
    """
    s = np.asarray(profile, dtype=float)
    n = len(s) - 1 if n is None else n
    inc = np.diff(ring_mutual_information(s))  # I(L) - I(L-1), L = 1..N
    l0 = None
    for L in range(1, n // 2 + 1):
        if abs(inc[L - 1]) <= tol:
            l0 = L
            break
    if l0 is None:
        return SaturationResult(None, np.array([]), False, inc)
    conc = -concavity_residuals(s) * 2  # index L-1 holds S(L-1)+S(L+1)-2S(L)
    lo, hi = max(l0, 1), min(n - l0, n - 1)
    res = conc[lo - 1: hi] if hi >= lo else np.array([])
    return SaturationResult(l0, res, bool(np.all(np.abs(res) <= tol)), inc)


# -- presets ----------------------------------------------------------------------------


def product_generator(state=None) -> FcsDescriptor:
    """D = 1 generator of the product state state^(x)n."""
    state = np.diag([0.75, 0.25]) if state is None else np.asarray(state, dtype=complex)
    w, v = np.linalg.eigh(state)
    d = state.shape[0]
    ks = [math.sqrt(max(lam, 0)) * v[:, [i]].reshape(1, d, 1) for i, lam in enumerate(w) if lam > 1e-15]
    return FcsDescriptor.from_kraus(np.stack(ks), name="product")


def pure_product_generator(d: int = 2) -> FcsDescriptor:
    k = np.zeros((1, d, 1))
    k[0, 0, 0] = 1
    return FcsDescriptor.from_kraus(k, name="pure-product")


def aklt_generator() -> FcsDescriptor:
    """Spin-1 AKLT state, D = 2, d = 3."""
    sp = np.array([[0, 1], [0, 0]], dtype=complex)
    sz = np.diag([1.0, -1.0]).astype(complex)
    a = np.stack([math.sqrt(2 / 3) * sp, -math.sqrt(1 / 3) * sz, -math.sqrt(2 / 3) * sp.T], axis=1)
    return FcsDescriptor.from_kraus(a, name="aklt")


def aklt_mixed_generator(p: float = 0.3) -> FcsDescriptor:
    """AKLT generator mixed with a phase-flipped copy; E is unchanged."""
    a = aklt_generator().kraus[0]
    flip = np.diag([1.0, -1.0, 1.0])
    b = np.einsum("ij,ajb->aib", flip, a)
    return FcsDescriptor.from_kraus(np.stack([math.sqrt(1 - p) * a, math.sqrt(p) * b]), name=f"aklt-mixed-{p}")


def ghz_generator() -> FcsDescriptor:
    """Copies the memory basis state onto each site; E has two unit eigenvalues,
    so the symmetric fixed point is supplied."""
    k = np.zeros((2, 2, 2))
    k[0, 0, 0] = 1
    k[1, 1, 1] = 1
    return FcsDescriptor.from_kraus(k, name="ghz", fixed_point=np.eye(2) / 2)


def random_generator(seed: int, bond_dim: int = 2, phys_dim: int = 2, n_kraus: int = 1) -> FcsDescriptor:
    """Generator from a Haar-random isometry C^D -> C^D (x) C^d (x) C^r."""
    rng = np.random.default_rng(seed)
    D, d, r = bond_dim, phys_dim, n_kraus
    u = random_unitary(rng, D * d * r)[:, :D]
    ks = u.reshape(D, d, r, D).transpose(2, 0, 1, 3)
    return FcsDescriptor.from_kraus(ks, name=f"random-{seed}-D{D}-d{d}-r{r}")


CHANNEL_PRESETS = {
    "product": (product_generator, "mixed product state, D = 1, d = 2"),
    "pure-product": (pure_product_generator, "pure product state, D = 1, d = 2"),
    "ghz": (ghz_generator, "GHZ generator, D = 2, d = 2 (non-generic spectrum)"),
    "aklt": (aklt_generator, "AKLT, D = 2, d = 3"),
    "aklt-mixed": (aklt_mixed_generator, "AKLT mixed with a phase-flipped copy, D = 2, d = 3"),
}


def channel_preset(name: str, seed: int | None = None, bond_dim: int = 2, phys_dim: int = 2, n_kraus: int = 1):
    if name == "random":
        if seed is None:
            raise ValueError("the random channel preset needs a seed")
        return random_generator(seed, bond_dim, phys_dim, n_kraus)
    try:
        return CHANNEL_PRESETS[name][0]()
    except KeyError:
        raise KeyError(f"unknown channel preset {name!r}") from None


def _complex_entry(e) -> complex:
    if isinstance(e, (list, tuple)):
        return complex(e[0], e[1])
    return complex(e)


def channel_from_json(spec: dict) -> FcsDescriptor:
    """``{bond_dim, phys_dim, kraus: [matrix, ...]}`` with each Kraus matrix of
    shape ``(bond_dim * phys_dim, bond_dim)``; entries are numbers or
    ``[re, im]`` pairs. An optional ``fixed_point`` (D x D) is needed when E
    has several unit-modulus eigenvalues."""
    D, d = int(spec["bond_dim"]), int(spec["phys_dim"])
    ks = []
    for k in spec["kraus"]:
        m = np.array([[_complex_entry(e) for e in row] for row in k], dtype=complex)
        if m.shape != (D * d, D):
            raise ValueError(f"Kraus matrix shape {m.shape} != {(D * d, D)}")
        ks.append(m)
    fixed = spec.get("fixed_point")
    if fixed is not None:
        fixed = np.array([[_complex_entry(e) for e in row] for row in fixed], dtype=complex)
    return FcsDescriptor(D, d, QuantumChannel(tuple(ks)), spec.get("name", "custom"), fixed)


def channel_to_json(f: FcsDescriptor) -> dict:
    return {
        "bond_dim": f.bond_dim,
        "phys_dim": f.phys_dim,
        "kraus": [[[[z.real, z.imag] for z in row] for row in k] for k in f.channel.kraus],
    }
