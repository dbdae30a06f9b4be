"""Exact Gibbs states of small lattice Hamiltonians and the thermal area-law
checks: boundary law for classical Markov fields, free-energy bound for
quantum states."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lattice import LatticeHamiltonian
from .measures import CHECK_TOL, mutual_information
from .qstate import DensityMatrix, partial_trace, shannon_entropy, von_neumann_entropy


class InfiniteTemperatureError(ValueError):
    """Free energy requested at beta = 0, where S/beta is undefined."""


@dataclass
class BoundarySplit:
    """Partition of a Hamiltonian's terms across a region A and its complement B."""

    region_a: tuple
    region_b: tuple
    h_a: list
    h_b: list
    h_boundary: list
    boundary_a: tuple
    boundary_b: tuple

    @classmethod
    def from_region(cls, h: LatticeHamiltonian, region_a, boundary_a=None) -> "BoundarySplit":
        """Classify terms of ``h`` against ``region_a`` and its complement.

        The boundary sets are read off the crossing terms. Passing
        ``boundary_a`` explicitly asserts which sites of A touch B; a crossing
        term reaching any other site of A raises ``ValueError``.
        """
        a = tuple(x for x in h.space.labels if x in set(region_a))
        if len(a) != len(set(region_a)):
            raise ValueError("region_a contains unknown sites")
        b = tuple(x for x in h.space.labels if x not in set(a))
        if not a or not b:
            raise ValueError("both regions must be non-empty")
        sa = set(a)
        h_a, h_b, h_bd = [], [], []
        for t in h.terms:
            inside = [x in sa for x in t.support]
            if all(inside):
                h_a.append(t)
            elif not any(inside):
                h_b.append(t)
            else:
                h_bd.append(t)
        touched = {x for t in h_bd for x in t.support}
        bd_a = tuple(x for x in a if x in touched)
        bd_b = tuple(x for x in b if x in touched)
        if boundary_a is not None:
            declared = set(boundary_a)
            stray = [x for x in bd_a if x not in declared]
            if stray:
                raise ValueError(
                    f"interaction connects interior sites {stray} of A directly to B; "
                    "the region is not separated by the declared boundary"
                )
            bd_a = tuple(x for x in a if x in declared)
        return cls(a, b, h_a, h_b, h_bd, bd_a, bd_b)


@dataclass(eq=False)
class GibbsState:
    hamiltonian: LatticeHamiltonian
    beta: float
    rho: DensityMatrix | None = None
    probs: np.ndarray | None = None
    log_partition: float = 0.0
    entropy_cache: dict = field(default_factory=dict, repr=False)

    @property
    def classical(self) -> bool:
        return self.probs is not None

    @property
    def partition_function(self) -> float:
        return math.exp(self.log_partition)


def free_energy(rho: DensityMatrix, h: LatticeHamiltonian, beta: float, h_matrix=None) -> float:
    """F(rho) = tr[H rho] - S(rho) / beta."""
    if beta == 0:
        raise InfiniteTemperatureError("free energy is undefined at beta = 0")
    if beta < 0:
        raise ValueError("beta must be non-negative")
    hm = h.matrix() if h_matrix is None else h_matrix
    return float(np.trace(hm @ rho.matrix).real) - von_neumann_entropy(rho) / beta


def _half_product(rho: DensityMatrix) -> DensityMatrix:
    labels = rho.labels
    a, b = labels[: len(labels) // 2], labels[len(labels) // 2:]
    return partial_trace(rho, a).tensor(partial_trace(rho, b))


def build_gibbs(h: LatticeHamiltonian, beta: float) -> GibbsState:
    """Exact Gibbs state exp(-beta H)/Z.

    Classical Hamiltonians give a probability tensor over configurations;
    quantum ones a DensityMatrix via full eigendecomposition.
    """
    if beta < 0:
        raise ValueError("beta must be non-negative")
    if h.classical:
        e = h.energies()
        e0 = e.min()
        w = np.exp(-beta * (e - e0))
        z = w.sum()
        return GibbsState(h, beta, probs=w / z, log_partition=float(-beta * e0 + math.log(z)))
    hm = h.matrix()
    evals, vecs = np.linalg.eigh(hm)
    w = np.exp(-beta * (evals - evals[0]))
    z = w.sum()
    rho = DensityMatrix(h.space, (vecs * (w / z)) @ vecs.conj().T)
    g = GibbsState(h, beta, rho=rho, log_partition=float(-beta * evals[0] + math.log(z)))
    if beta > 0 and h.space.site_count > 1:
        f = free_energy(rho, h, beta, hm)
        f_prod = free_energy(_half_product(rho), h, beta, hm)
        f_mix = free_energy(DensityMatrix.maximally_mixed(h.space), h, beta, hm)
        if f > min(f_prod, f_mix) + 1e-9:
            raise RuntimeError(f"Gibbs state is not free-energy minimal: {f} > {min(f_prod, f_mix)}")
    return g


# -- classical marginals --------------------------------------------------------


def marginal_probs(g: GibbsState, keep) -> np.ndarray:
    """Marginal distribution on ``keep`` (axes in label order)."""
    space = g.hamiltonian.space
    pos = set(space.positions(keep))
    drop = tuple(i for i in range(space.site_count) if i not in pos)
    return g.probs.sum(axis=drop) if drop else g.probs


def classical_entropy(g: GibbsState, sites) -> float:
    sites = tuple(sites)
    if not sites:
        return 0.0
    return shannon_entropy(marginal_probs(g, sites))


def classical_mutual_information(g: GibbsState, a, b) -> float:
    a, b = tuple(a), tuple(b)
    if not a or not b:
        return 0.0
    return classical_entropy(g, a) + classical_entropy(g, b) - classical_entropy(g, a + b)


@dataclass
class AreaReport:
    check_name: str
    beta: float
    region_a: tuple
    boundary_size: int
    values: dict
    passed: bool
    slack: float
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {
            "check_name": self.check_name,
            "beta": self.beta,
            "region_a": list(self.region_a),
            "boundary_size": self.boundary_size,
            "slack": self.slack,
            "pass": self.passed,
        }
        out.update(self.values)
        return out


def classical_area_check(g: GibbsState, split: BoundarySplit) -> AreaReport:
    """I(A:B) = I(dA:dB) <= H(dA) <= |dA| ln d for a classical Gibbs state."""
    if not g.classical:
        raise ValueError("classical_area_check needs a classical Gibbs state")
    d = g.hamiltonian.space.local_dim
    i_ab = classical_mutual_information(g, split.region_a, split.region_b)
    i_bd = classical_mutual_information(g, split.boundary_a, split.boundary_b)
    h_bd = classical_entropy(g, split.boundary_a)
    bound = len(split.boundary_a) * math.log(d)
    eq_err = abs(i_ab - i_bd)
    slack = min(h_bd - i_bd, bound - h_bd, -eq_err)
    ok = eq_err <= CHECK_TOL and i_bd <= h_bd + CHECK_TOL and h_bd <= bound + CHECK_TOL
    return AreaReport(
        "classical-area", g.beta, split.region_a, len(split.boundary_a),
        {"I_AB": i_ab, "I_boundary": i_bd, "H_boundary_entropy": h_bd, "bound": bound, "equality_error": eq_err},
        ok, slack,
    )


def _term_gap(rho: DensityMatrix, term, split: BoundarySplit) -> float:
    """tr[h (rho_A (x) rho_B - rho_AB)] for a single crossing term."""
    sa = set(split.region_a)
    sup = term.support
    in_a = [x for x in sup if x in sa]
    in_b = [x for x in sup if x not in sa]
    joint = partial_trace(rho, sup).relabel(sup)
    prod = partial_trace(rho, in_a).relabel(in_a).tensor(partial_trace(rho, in_b).relabel(in_b)).relabel(sup)
    op = term.as_operator()
    return float(np.trace(op @ (prod.matrix - joint.matrix)).real)


def quantum_thermal_area_check(g: GibbsState, split: BoundarySplit) -> AreaReport:
    """I(A:B) <= beta tr[H_bd (rho_A (x) rho_B - rho_AB)] <= 2 beta ||h|| n_bd.

    ``n_bd`` counts crossing terms (bonds cut), which equals |dA| on chains
    with a block away from the ends. ``exceeds_classical_cap`` flags states
    whose mutual information exceeds what any classical state with the same
    boundary could carry.
    """
    if g.classical:
        raise ValueError("quantum_thermal_area_check needs a quantum Gibbs state")
    rho = g.rho
    i_ab = mutual_information(rho, (split.region_a, split.region_b), g.entropy_cache)
    rhs = g.beta * sum(_term_gap(rho, t, split) for t in split.h_boundary)
    norms = [float(np.linalg.norm(t.as_operator(), 2)) for t in split.h_boundary]
    hnorm = max(norms, default=0.0)
    n_bd = len(split.h_boundary)
    simple = 2 * g.beta * hnorm * n_bd
    ok = i_ab <= rhs + CHECK_TOL and rhs <= simple + CHECK_TOL
    d = g.hamiltonian.space.local_dim
    cap = len(split.boundary_a) * math.log(d)
    return AreaReport(
        "quantum-area", g.beta, split.region_a, len(split.boundary_a),
        {"I_AB": i_ab, "rhs": rhs, "simple_bound": simple, "h_norm": hnorm, "crossing_terms": n_bd,
         "exceeds_classical_cap": bool(i_ab > cap + CHECK_TOL)},
        ok, min(rhs - i_ab, simple - rhs),
    )


def _separates(h: LatticeHamiltonian, a, c, b) -> bool:
    blocked = set(c)
    adj: dict = {x: set() for x in h.space.labels}
    for x, y in h.edges():
        adj[x].add(y)
        adj[y].add(x)
    frontier = [x for x in a]
    seen = set(frontier)
    targets = set(b)
    while frontier:
        x = frontier.pop()
        if x in targets:
            return False
        for y in adj[x]:
            if y not in seen and y not in blocked:
                seen.add(y)
                frontier.append(y)
    return True


def conditional_markov_check(g: GibbsState, a, c, b, check_separation: bool = True) -> float:
    """max |p(x_A | x_C, x_B) - p(x_A | x_C)| over configurations with p(x_C, x_B) > 0."""
    if not g.classical:
        raise ValueError("conditional_markov_check needs a classical Gibbs state")
    a, c, b = tuple(a), tuple(c), tuple(b)
    h = g.hamiltonian
    if check_separation and not _separates(h, a, c, b):
        raise ValueError("C does not separate A from B in the interaction graph")
    labels = h.space.labels
    order = [x for x in labels if x in set(a + c + b)]
    p = marginal_probs(g, order)
    # move axes to (A, C, B)
    perm = [order.index(x) for x in a + c + b]
    p = p.transpose(perm)
    d = h.space.local_dim
    p = p.reshape(d ** len(a), d ** len(c), d ** len(b))
    p_cb = p.sum(axis=0)
    p_ac = p.sum(axis=2)
    p_c = p_ac.sum(axis=0)
    mask = p_cb > 1e-300
    with np.errstate(divide="ignore", invalid="ignore"):
        cond_full = np.where(mask[None], p / p_cb[None], 0.0)
        cond_c = np.where(p_c[None] > 1e-300, p_ac / p_c[None], 0.0)
    dev = np.abs(cond_full - cond_c[:, :, None]) * mask[None]
    return float(dev.max())
