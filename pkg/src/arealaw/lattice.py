"""Finite-range lattice Hamiltonians (classical and quantum) and a preset library."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Hashable, Sequence

import numpy as np

from .qstate import SiteSpace, config_cap, embed_operator

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}


def pauli_string(word: str) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for ch in word:
        out = np.kron(out, PAULI[ch])
    return out


@dataclass(frozen=True, eq=False)
class Term:
    """A local interaction: either a Hermitian ``operator`` (quantum) or an
    energy ``table`` of shape ``(d,) * len(support)`` (classical)."""

    support: tuple
    operator: np.ndarray | None = None
    table: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "support", tuple(self.support))
        if (self.operator is None) == (self.table is None):
            raise ValueError("a term carries exactly one of operator / table")
        if self.table is not None:
            t = np.asarray(self.table)
            if np.iscomplexobj(t):
                if np.max(np.abs(t.imag)) > 0:
                    raise ValueError("classical energy tables must be real")
                t = t.real
            object.__setattr__(self, "table", t.astype(float))
        else:
            op = np.asarray(self.operator, dtype=complex)
            if np.max(np.abs(op - op.conj().T)) > 1e-10:
                raise ValueError(f"term on {self.support} is not Hermitian")
            object.__setattr__(self, "operator", op)

    @property
    def classical(self) -> bool:
        return self.table is not None

    def as_operator(self) -> np.ndarray:
        if self.operator is not None:
            return self.operator
        return np.diag(self.table.ravel()).astype(complex)


@dataclass(eq=False)
class LatticeHamiltonian:
    """Sum of local terms on a SiteSpace.

    ``geometry`` is one of ``chain``, ``ring``, ``patch`` or ``custom``; for
    patches ``shape`` is ``(rows, cols)`` and labels are ``r * cols + c``.
    """

    space: SiteSpace
    terms: list
    geometry: str = "chain"
    shape: tuple | None = None
    name: str = ""
    max_range: int | None = None

    def __post_init__(self):
        self.terms = list(self.terms)
        kinds = {t.classical for t in self.terms}
        if len(kinds) > 1:
            raise ValueError("cannot mix classical and quantum terms")
        d = self.space.local_dim
        for t in self.terms:
            self.space.positions(t.support)
            k = len(t.support)
            if t.classical and t.table.shape != (d,) * k:
                raise ValueError(f"table shape {t.table.shape} != {(d,) * k}")
            if not t.classical and t.operator.shape != (d**k, d**k):
                raise ValueError(f"operator shape {t.operator.shape} != {(d**k, d**k)}")
            if self.max_range is not None and self.diameter(t.support) > self.max_range:
                raise ValueError(f"term on {t.support} exceeds range {self.max_range}")

    @property
    def classical(self) -> bool:
        return bool(self.terms) and self.terms[0].classical

    def distance(self, x, y) -> int:
        n = self.space.site_count
        if self.geometry == "chain":
            return abs(x - y)
        if self.geometry == "ring":
            return min(abs(x - y), n - abs(x - y))
        if self.geometry == "patch":
            cols = self.shape[1]
            return abs(x // cols - y // cols) + abs(x % cols - y % cols)
        return 0

    def diameter(self, support) -> int:
        return max((self.distance(x, y) for x in support for y in support), default=0)

    def edges(self) -> list[tuple]:
        """Pairs of sites that share at least one term."""
        out = set()
        for t in self.terms:
            for i, x in enumerate(t.support):
                for y in t.support[i + 1:]:
                    out.add((x, y) if repr(x) <= repr(y) else (y, x))
        return sorted(out, key=repr)

    def matrix(self) -> np.ndarray:
        """Dense Hamiltonian; for classical terms this is diagonal."""
        h = np.zeros((self.space.dim, self.space.dim), dtype=complex)
        for t in self.terms:
            h += embed_operator(t.as_operator(), t.support, self.space)
        return h

    def energies(self) -> np.ndarray:
        """Configuration energies as a tensor with one axis per site."""
        if not self.classical:
            raise ValueError("energies() needs a classical Hamiltonian")
        n, d = self.space.site_count, self.space.local_dim
        if d**n > config_cap():
            from .qstate import CapExceededError

            raise CapExceededError(f"{d}^{n} configurations exceed cap {config_cap()}")
        e = np.zeros((d,) * n)
        for t in self.terms:
            pos = self.space.positions(t.support)
            shape = [1] * n
            for p in pos:
                shape[p] = d
            order = np.argsort(pos)
            e = e + t.table.transpose(order).reshape(shape)
        return e

    def contiguous_regions(self) -> list[tuple]:
        """Proper, non-empty regions A that are contiguous on the lattice.

        Chains give intervals, rings give arcs, patches give every connected
        subset of the nearest-neighbour grid (exhaustive, so patches stay small).
        """
        labels = self.space.labels
        n = len(labels)
        if self.geometry == "chain":
            return [tuple(labels[i:j]) for i in range(n) for j in range(i + 1, n + 1) if j - i < n]
        if self.geometry == "ring":
            out = [tuple(sorted(labels[(i + k) % n] for k in range(m))) for m in range(1, n) for i in range(n)]
            return list(dict.fromkeys(out))
        if self.geometry == "patch":
            adj = {x: set() for x in labels}
            for x, y in _bonds("patch", shape=self.shape):
                adj[x].add(y)
                adj[y].add(x)
            out = []
            for mask in range(1, 2**n - 1):
                region = [labels[k] for k in range(n) if mask >> k & 1]
                seen, stack = {region[0]}, [region[0]]
                while stack:
                    for y in adj[stack.pop()]:
                        if y in region and y not in seen:
                            seen.add(y)
                            stack.append(y)
                if len(seen) == len(region):
                    out.append(tuple(region))
            return out
        raise ValueError(f"contiguous regions are undefined for geometry {self.geometry!r}")

    def with_terms(self, terms) -> "LatticeHamiltonian":
        return LatticeHamiltonian(self.space, list(terms), self.geometry, self.shape, self.name, self.max_range)


def _bonds(geometry: str, n: int | None = None, shape: tuple | None = None):
    if geometry == "chain":
        return [(i, i + 1) for i in range(n - 1)]
    if geometry == "ring":
        return [(i, (i + 1) % n) for i in range(n)]
    if geometry == "patch":
        rows, cols = shape
        out = []
        for r in range(rows):
            for c in range(cols):
                s = r * cols + c
                if c + 1 < cols:
                    out.append((s, s + 1))
                if r + 1 < rows:
                    out.append((s, s + cols))
        return out
    raise ValueError(f"unknown geometry {geometry!r}")


def _space(geometry, n, shape, d, classical):
    count = n if geometry != "patch" else shape[0] * shape[1]
    cap = config_cap() if classical else None
    return SiteSpace(tuple(range(count)), d, cap)


def classical_ising(geometry: str = "ring", n: int = 8, shape=None, coupling: float = 1.0, field: float = 0.0):
    """E(s) = -J sum s_i s_j - h sum s_i with s = +1 for state 0, -1 for state 1."""
    spins = np.array([1.0, -1.0])
    space = _space(geometry, n, shape, 2, True)
    terms = [Term((i, j), table=-coupling * np.outer(spins, spins)) for i, j in _bonds(geometry, n, shape)]
    if field:
        terms += [Term((i,), table=-field * spins) for i in space.labels]
    return LatticeHamiltonian(space, terms, geometry, shape, f"ising-{geometry}", max_range=1)


def classical_potts(q: int = 3, geometry: str = "ring", n: int = 8, shape=None, coupling: float = 1.0):
    space = _space(geometry, n, shape, q, True)
    terms = [Term((i, j), table=-coupling * np.eye(q)) for i, j in _bonds(geometry, n, shape)]
    return LatticeHamiltonian(space, terms, geometry, shape, f"potts{q}-{geometry}", max_range=1)


def _quantum_bond_model(bond_op, site_op, geometry, n, shape, name):
    space = _space(geometry, n, shape, 2, False)
    terms = [Term((i, j), operator=bond_op) for i, j in _bonds(geometry, n, shape)]
    if site_op is not None:
        terms += [Term((i,), operator=site_op) for i in space.labels]
    return LatticeHamiltonian(space, terms, geometry, shape, name, max_range=1)


def transverse_ising(geometry: str = "chain", n: int = 8, shape=None, coupling: float = 1.0, field: float = 1.0):
    """H = -J sum Z Z - g sum X."""
    return _quantum_bond_model(
        -coupling * np.kron(Z, Z), -field * X if field else None, geometry, n, shape, f"tfim-{geometry}"
    )


def xx_model(geometry: str = "chain", n: int = 8, shape=None, coupling: float = 1.0):
    return _quantum_bond_model(
        coupling * (np.kron(X, X) + np.kron(Y, Y)), None, geometry, n, shape, f"xx-{geometry}"
    )


def heisenberg(geometry: str = "chain", n: int = 8, shape=None, coupling: float = 1.0):
    return _quantum_bond_model(
        coupling * (np.kron(X, X) + np.kron(Y, Y) + np.kron(Z, Z)), None, geometry, n, shape, f"heisenberg-{geometry}"
    )


def zz_model(geometry: str = "ring", n: int = 6, shape=None, coupling: float = 1.0):
    """Commuting quantum Ising model without transverse field."""
    return _quantum_bond_model(coupling * np.kron(Z, Z), None, geometry, n, shape, f"zz-{geometry}")


def random_two_local(seed: int, geometry: str = "chain", n: int = 8, shape=None):
    """Independent random Hermitian bond terms of unit operator norm."""
    rng = np.random.default_rng(seed)
    space = _space(geometry, n, shape, 2, False)
    terms = []
    for i, j in _bonds(geometry, n, shape):
        g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        h = (g + g.conj().T) / 2
        terms.append(Term((i, j), operator=h / np.linalg.norm(h, 2)))
    return LatticeHamiltonian(space, terms, geometry, shape, f"random2local-{seed}", max_range=1)


@dataclass(frozen=True)
class ModelPreset:
    name: str
    kind: str  # "classical" | "quantum"
    factory: Callable[[], LatticeHamiltonian] = field(repr=False)
    description: str = ""

    def build(self) -> LatticeHamiltonian:
        h = self.factory()
        h.name = self.name
        return h


MODEL_PRESETS: dict[str, ModelPreset] = {
    p.name: p
    for p in [
        ModelPreset("ising-ring-8", "classical", lambda: classical_ising("ring", 8), "classical Ising ring, 8 sites"),
        ModelPreset("ising-ring-12", "classical", lambda: classical_ising("ring", 12), "classical Ising ring, 12 sites"),
        ModelPreset("ising-chain-10", "classical", lambda: classical_ising("chain", 10), "open classical Ising chain"),
        ModelPreset("ising-field-ring-10", "classical", lambda: classical_ising("ring", 10, field=0.3), "Ising ring in a field"),
        ModelPreset("potts3-ring-8", "classical", lambda: classical_potts(3, "ring", 8), "3-state Potts ring"),
        ModelPreset("ising-patch-3x3", "classical", lambda: classical_ising("patch", shape=(3, 3)), "3x3 Ising patch"),
        ModelPreset("potts3-patch-2x3", "classical", lambda: classical_potts(3, "patch", shape=(2, 3)), "2x3 Potts patch"),
        ModelPreset("tfim-chain-8", "quantum", lambda: transverse_ising("chain", 8), "transverse Ising chain, g = J"),
        ModelPreset("tfim-ring-8", "quantum", lambda: transverse_ising("ring", 8), "transverse Ising ring, g = J"),
        ModelPreset("xx-chain-8", "quantum", lambda: xx_model("chain", 8), "XX chain"),
        ModelPreset("xx-ring-8", "quantum", lambda: xx_model("ring", 8), "XX ring"),
        ModelPreset("heisenberg-chain-8", "quantum", lambda: heisenberg("chain", 8), "Heisenberg chain"),
        ModelPreset("heisenberg-ring-8", "quantum", lambda: heisenberg("ring", 8), "Heisenberg ring"),
        ModelPreset("zz-ring-6", "quantum", lambda: zz_model("ring", 6), "commuting ZZ ring"),
        ModelPreset("random2local-chain-8", "quantum", lambda: random_two_local(0, "chain", 8), "random 2-local chain, seed 0"),
    ]
}


def model_preset(name: str) -> LatticeHamiltonian:
    if name.startswith("random2local-chain-8:"):
        return random_two_local(int(name.split(":", 1)[1]), "chain", 8)
    try:
        return MODEL_PRESETS[name].build()
    except KeyError:
        raise KeyError(f"unknown model preset {name!r}") from None


# -- JSON model definitions ----------------------------------------------------


def _matrix_from_json(obj) -> np.ndarray:
    if isinstance(obj, dict):
        return np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj.get("im", 0.0), dtype=float)
    return np.asarray(obj, dtype=complex)


def hamiltonian_from_json(spec: dict) -> LatticeHamiltonian:
    """Build a Hamiltonian from ``{geometry, local_dim, terms}``.

    ``geometry`` is ``{"kind": "chain"|"ring", "n": N}`` or
    ``{"kind": "patch", "rows": R, "cols": C}``. Each term has ``sites`` and
    one of ``coefficients`` (Pauli words, qubits only), ``matrix`` or
    ``table``. A 2D term may carry ``direction`` (``horizontal``/``vertical``).
    """
    geo = spec["geometry"]
    kind = geo["kind"]
    shape = (geo["rows"], geo["cols"]) if kind == "patch" else None
    n = geo.get("n")
    d = int(spec.get("local_dim", 2))
    classical = any("table" in t for t in spec["terms"])
    count = n if kind != "patch" else shape[0] * shape[1]
    space = SiteSpace(tuple(range(count)), d, config_cap() if classical else None)
    terms = []
    for t in spec["terms"]:
        sites = tuple(t["sites"])
        if "table" in t:
            terms.append(Term(sites, table=np.asarray(t["table"], dtype=float)))
        elif "matrix" in t:
            terms.append(Term(sites, operator=_matrix_from_json(t["matrix"])))
        elif "coefficients" in t:
            if d != 2:
                raise ValueError("Pauli coefficients need local_dim 2")
            op = sum(c * pauli_string(w) for w, c in t["coefficients"].items())
            terms.append(Term(sites, operator=op))
        else:
            raise ValueError(f"term {t} has no coefficients, matrix or table")
    return LatticeHamiltonian(space, terms, kind, shape, spec.get("name", "custom"))
