import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from arealaw.fcs import (
    FcsDescriptor,
    MixedGeneratorError,
    NonGenericSpectrumError,
    QuantumChannel,
    aklt_generator,
    aklt_mixed_generator,
    block_state,
    channel_from_json,
    channel_preset,
    channel_to_json,
    factorization_curve,
    fitted_norm_bound,
    ghz_generator,
    log_linear_fit,
    mixing_constant,
    mixing_norm_bound,
    mps_area_check,
    product_generator,
    pure_product_generator,
    purified_fannes_bound,
    purify_channel,
    random_generator,
    saturation_detect,
    separated_block_state,
    trace_ancilla,
    transfer_spectrum,
)
from arealaw.lattice import transverse_ising
from arealaw.measures import block_entropy_profile, connected_correlator, xi_m_estimate
from arealaw.qstate import Observable, SiteSpace, ghz_state, product_state, random_density_matrix, random_hermitian, trace_norm
from arealaw.thermal import build_gibbs

seeds = st.integers(min_value=0, max_value=2**31 - 1)


def kraus_matrices(f):
    return [f.kraus[k, :, i, :] for k in range(f.kraus.shape[0]) for i in range(f.phys_dim)]


def transfer_by_loop(f):
    """E as a D^2 x D^2 matrix acting on row-major vec(x), from x -> sum A x A^dag."""
    D = f.bond_dim
    cols = []
    for j in range(D * D):
        e = np.zeros(D * D, dtype=complex)
        e[j] = 1
        x = e.reshape(D, D)
        cols.append(sum(a @ x @ a.conj().T for a in kraus_matrices(f)).reshape(-1))
    return np.array(cols).T


# -- channels and spectra -------------------------------------------------------------


def test_non_trace_preserving_channel_rejected():
    with pytest.raises(ValueError):
        QuantumChannel((np.eye(2) * 1.1,))


def test_wrong_generator_shape_rejected():
    with pytest.raises(ValueError):
        FcsDescriptor(2, 2, QuantumChannel((np.eye(2),)))


def test_product_generator_has_no_correlation_length():
    sp = transfer_spectrum(product_generator())
    assert sp.eta == 0 and sp.xi == 0


def test_aklt_spectrum_against_dense_eigensolver():
    f = aklt_generator()
    assert f.bond_dim == 2 and f.phys_dim == 3
    ev = np.sort(np.abs(np.linalg.eigvals(transfer_by_loop(f))))[::-1]
    sp = transfer_spectrum(f)
    assert np.allclose(np.sort(np.abs(sp.eigenvalues))[::-1], ev, atol=1e-12)
    assert sp.eta == pytest.approx(1 / 3, abs=1e-12)
    assert sp.xi == pytest.approx(1 / math.log(3), rel=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_random_channel_fixed_point_matches_power_iteration(seed):
    f = random_generator(seed, bond_dim=3, phys_dim=2, n_kraus=2)
    sp = transfer_spectrum(f)
    assert sp.eta < 1
    ref = oracles.power_iteration_fixed_point(kraus_matrices(f), 3)
    assert np.max(np.abs(f.fixed_point - ref)) <= 1e-9
    assert np.allclose(f.transfer_matrix, transfer_by_loop(f), atol=1e-14)


def test_ghz_generator_needs_a_supplied_fixed_point():
    k = ghz_generator().kraus
    bare = FcsDescriptor.from_kraus(k)
    with pytest.raises(NonGenericSpectrumError):
        transfer_spectrum(bare)
    with pytest.raises(NonGenericSpectrumError):
        bare.fixed_point


@settings(max_examples=25, deadline=None)
@given(seed=seeds, D=st.integers(1, 3), r=st.integers(1, 3), k=st.integers(1, 8))
def test_transfer_powers_preserve_trace(seed, D, r, k):
    f = random_generator(seed, D, 2, r)
    x = random_hermitian(np.random.default_rng(seed + 1), D)
    assert abs(np.trace(f.transfer(x, k)) - np.trace(x)) <= 1e-10


@pytest.mark.parametrize("seed", range(6))
def test_fixed_point_attracts_with_mixing_constant(seed):
    f = random_generator(seed, 3, 2, 2)
    eta = transfer_spectrum(f).eta
    ks = range(1, 15)
    c = max(mixing_constant(f, k, eta) for k in ks)
    x = random_density_matrix(np.random.default_rng(seed), 3)
    for k in ks:
        # E^k(x) - rho = c eta^k (E'(x) - rho), and both states have unit trace norm
        assert trace_norm(f.transfer(x, k) - f.fixed_point) <= 2 * c * eta**k * (1 + 1e-9)


def test_aklt_mixing_constant_alternates_with_the_negative_eigenvalue():
    f = aklt_generator()
    c = [mixing_constant(f, L) for L in range(1, 7)]
    assert c[0::2] == pytest.approx([3, 3, 3], rel=1e-8)
    assert c[1::2] == pytest.approx([1, 1, 1], rel=1e-8)


def test_product_generator_mixing_constant_is_zero():
    assert mixing_constant(product_generator(), 3) == 0


# -- block states -----------------------------------------------------------------------


def test_empty_block_is_scalar_one():
    assert block_state(aklt_generator(), 0) == 1.0


def test_product_generator_block_is_tensor_power():
    state = np.diag([0.75, 0.25])
    rho = block_state(product_generator(state), 3)
    assert np.allclose(rho.matrix, product_state(state, 3).matrix, atol=1e-15)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_aklt_block_matches_mps_contraction(n):
    f = aklt_generator()
    a = [f.kraus[0, :, i, :] for i in range(3)]
    ref = oracles.mps_block_state(a, f.fixed_point, np.eye(2), n)
    assert np.max(np.abs(block_state(f, n).matrix - ref)) <= 1e-12


def test_separated_blocks_match_mps_contraction():
    f = random_generator(3, 2, 2, 1)
    a = [f.kraus[0, :, i, :] for i in range(2)]
    full = oracles.mps_block_state(a, f.fixed_point, np.eye(2), 4)  # sites 0..3
    from arealaw.qstate import DensityMatrix, partial_trace

    ref = partial_trace(DensityMatrix(SiteSpace.chain(4), full), [0, 3])
    ours = separated_block_state(f, 1, 2, 1).rho_ab
    assert np.max(np.abs(ours.matrix - ref.matrix)) <= 1e-12


def test_product_generator_blocks_factorize():
    bs = separated_block_state(product_generator(), 2, 0, 2)
    assert bs.trace_distance() <= 1e-14


def test_blocks_need_sites():
    with pytest.raises(ValueError):
        separated_block_state(aklt_generator(), 0, 1, 1)


def test_aklt_trace_distance_decays_as_eta_power():
    f = aklt_generator()
    L = list(range(1, 13))
    td = [separated_block_state(f, 2, l, 2).trace_distance() for l in L]
    assert log_linear_fit(L, td).slope == pytest.approx(-math.log(3), rel=0.05)
    c, viol = fitted_norm_bound(L, td, 1 / 3)
    assert viol == []


@pytest.mark.parametrize("D", [2, 3])
def test_mixing_constant_bound_holds_for_random_channels(D):
    for seed in range(10):
        f = random_generator(seed, D, 2, 2)
        L = list(range(1, 13))
        td = [separated_block_state(f, 1, l, 1).trace_distance() for l in L]
        c, viol = mixing_norm_bound(f, L, td)
        assert math.isfinite(c) and viol == []


def test_constant_fitted_at_first_gap_is_not_a_bound_in_general():
    # the early decay of a generic channel mixes several eigenvalues, so a
    # constant read off at L = 1 can sit below the true envelope
    hits = 0
    for seed in range(20):
        f = random_generator(seed, 2, 2, 1)
        L = list(range(1, 13))
        td = [separated_block_state(f, 1, l, 1).trace_distance() for l in L]
        _, viol = fitted_norm_bound(L, td, transfer_spectrum(f).eta)
        hits += bool(viol)
    assert hits > 0


@pytest.mark.parametrize("f", [aklt_generator(), aklt_mixed_generator(0.3)], ids=["aklt", "aklt-mixed"])
def test_correlators_decay_at_transfer_rate(f):
    rng = np.random.default_rng(5)
    ha, hb = random_hermitian(rng, 3), random_hermitian(rng, 3)
    L = np.arange(1, 16)
    c = []
    for l in L:
        bs = separated_block_state(f, 1, int(l), 1)
        c.append(abs(connected_correlator(bs.rho_ab, Observable(SiteSpace((0,), 3), ha), Observable(SiteSpace((int(l) + 1,), 3), hb))))
    assert log_linear_fit(L, c).slope == pytest.approx(math.log(transfer_spectrum(f).eta), rel=0.10)


@pytest.mark.parametrize("seed", range(5))
def test_correlators_bounded_by_factorization_envelope(seed):
    f = random_generator(seed, 2, 2, 1)
    rng = np.random.default_rng(seed)
    ma, mb = random_hermitian(rng, 2), random_hermitian(rng, 2)
    eta = transfer_spectrum(f).eta
    L = list(range(1, 25))
    c = max(mixing_constant(f, l, eta) for l in L)
    scale = np.linalg.norm(ma, 2) * np.linalg.norm(mb, 2)
    for l in L:
        bs = separated_block_state(f, 1, l, 1)
        cc = connected_correlator(bs.rho_ab, Observable(SiteSpace((0,), 2), ma), Observable(SiteSpace((l + 1,), 2), mb))
        assert abs(cc) <= scale * 4 * c * eta**l * (1 + 1e-9) + 1e-13


@pytest.mark.parametrize("seed", range(4))
def test_bound_independent_of_block_size(seed):
    f = random_generator(seed, 2, 2, 2)
    eta = transfer_spectrum(f).eta
    L = list(range(1, 9))
    small = [separated_block_state(f, 1, l, 1).trace_distance() for l in L]
    big = [separated_block_state(f, 2, l, 2).trace_distance() for l in L]
    c = max(mixing_constant(f, l, eta) for l in L)
    for l, s, b in zip(L, small, big):
        slack = 4 * c * eta**l - s
        assert b <= 4 * c * eta**l * (1 + 1e-9)
        assert abs(b - s) < slack


# -- curves, purification, Fannes -----------------------------------------------------------


def test_product_curve_is_flat_zero():
    rows = factorization_curve(product_generator(), 2, 2, range(0, 4))
    assert all(r.trace_distance <= 1e-14 and abs(r.mutual_information) <= 1e-12 for r in rows)


def test_aklt_mutual_information_decays_at_twice_the_rate():
    # the leading term of I is quadratic in rho_AB - rho_A (x) rho_B
    f = aklt_generator()
    rows = factorization_curve(f, 2, 2, range(4, 13), with_bound=False)
    fit = log_linear_fit([r.L for r in rows], [r.mutual_information for r in rows])
    assert fit.slope == pytest.approx(-2 * math.log(3), rel=0.02)


def test_aklt_mutual_information_below_purified_fannes_bound():
    rows = factorization_curve(aklt_generator(), 2, 2, range(0, 13))
    for r in rows:
        assert r.mutual_information <= r.mi_purified + 1e-9
        assert r.mi_purified <= r.bound + 1e-9


def test_random_curve_has_finite_xi_m():
    f = random_generator(2, 2, 2, 1)
    xi = transfer_spectrum(f).xi
    rows = factorization_curve(f, 2, 2, range(0, 13), with_bound=False)
    est = xi_m_estimate([r.L for r in rows], [r.mutual_information for r in rows])
    assert math.isfinite(est.xi_m) and est.xi_m <= 5 * max(xi, 1)


def test_aklt_xi_m_consistent_with_transfer_length():
    rows = factorization_curve(aklt_generator(), 2, 2, range(0, 13), with_bound=False)
    est = xi_m_estimate([r.L for r in rows], [r.mutual_information for r in rows])
    xi = 1 / math.log(3)
    assert xi / 3 <= est.xi_m <= 3 * xi


@pytest.mark.filterwarnings("ignore:I_L is not non-increasing")
@pytest.mark.parametrize("seed", range(5))
def test_xi_m_finite_when_eta_below_one(seed):
    f = random_generator(seed, 2, 2, 2)
    assert transfer_spectrum(f).eta < 1
    rows = factorization_curve(f, 1, 1, range(0, 30), with_bound=False)
    assert math.isfinite(xi_m_estimate([r.L for r in rows], [r.mutual_information for r in rows]).xi_m)


def test_purifying_a_pure_generator_keeps_the_state():
    f = aklt_generator()
    fp = purify_channel(f)
    assert fp.is_pure and fp.phys_dim == 3
    assert np.allclose(block_state(fp, 3).matrix, block_state(f, 3).matrix, atol=1e-13)


def test_purified_mixed_generator():
    f = aklt_mixed_generator(0.3)
    fp = purify_channel(f)
    assert fp.is_pure and fp.phys_dim == 6
    assert np.allclose(fp.transfer_matrix, f.transfer_matrix, atol=1e-13)
    assert np.allclose(trace_ancilla(block_state(fp, 2), 3, 2).matrix, block_state(f, 2).matrix, atol=1e-13)
    for L in range(0, 5):
        i = separated_block_state(f, 2, L, 2).mutual_information()
        pt = purified_fannes_bound(fp, 2, L, 2)
        assert i <= pt.mi_purified + 1e-9 <= pt.bound + 2e-9


def test_unminimized_purification_dimension():
    f = random_generator(1, 2, 2, 3)
    assert purify_channel(f, minimize=False).phys_dim == 6


# -- area law for pure generators -------------------------------------------------------------


def test_mps_area_product_state():
    rep = mps_area_check(pure_product_generator(), 3)
    assert rep["I_AB"] == pytest.approx(0, abs=1e-12) and rep["pass"]


def test_mps_area_aklt_interior_block():
    rep = mps_area_check(aklt_generator(), 4)
    assert rep["bound"] == pytest.approx(4 * math.log(2))
    assert 0 < rep["I_AB"] < rep["bound"]


def test_mps_area_ghz():
    rep = mps_area_check(ghz_generator(), 3)
    assert rep["I_AB"] == pytest.approx(2 * math.log(2), abs=1e-12)
    assert rep["bound"] == pytest.approx(4 * math.log(2))


def test_mps_area_end_block_cuts_one_bond():
    rep = mps_area_check(aklt_generator(), 3, interior=False)
    assert rep["cuts"] == 1 and rep["pass"]


def test_mps_area_rejects_mixed_generator():
    with pytest.raises(MixedGeneratorError):
        mps_area_check(aklt_mixed_generator(), 2)


@settings(max_examples=20, deadline=None)
@given(seed=seeds, D=st.integers(2, 3), n=st.integers(1, 6))
def test_mps_area_random_pure(seed, D, n):
    rep = mps_area_check(random_generator(seed, D, 2, 1), n)
    assert rep["pass"] and rep["I_AB"] <= 4 * math.log(D) + 1e-9


# -- saturation ---------------------------------------------------------------------------------


def test_saturation_product_ring():
    res = saturation_detect(block_entropy_profile(product_state(np.diag([0.8, 0.2]), 8)))
    assert res.saturation_length == 1
    assert np.all(np.abs(res.residuals) <= 1e-9) and res.markov_consistent


def test_saturation_ghz_ring():
    res = saturation_detect(block_entropy_profile(ghz_state(8)))
    assert res.saturation_length == 2
    assert np.all(np.abs(res.residuals) <= 1e-9)


def test_no_saturation_for_thermal_ising_ring():
    g = build_gibbs(transverse_ising("ring", 8), 0.5)
    prof = block_entropy_profile(g.rho)
    res = saturation_detect(prof, tol=1e-9)
    assert res.saturation_length is None
    conc = prof[:-2] + prof[2:] - 2 * prof[1:-1]
    assert np.all(conc[:-1] < -1e-9) or np.all(np.abs(conc) > 1e-9)


# -- presets and JSON ---------------------------------------------------------------------------


def test_channel_presets():
    assert channel_preset("aklt").bond_dim == 2
    with pytest.raises(ValueError):
        channel_preset("random")
    with pytest.raises(KeyError):
        channel_preset("nope")


def test_channel_json_round_trip():
    f = random_generator(4, 2, 2, 2)
    g = channel_from_json(channel_to_json(f))
    assert np.allclose(g.transfer_matrix, f.transfer_matrix)


def test_channel_json_shape_checked():
    spec = channel_to_json(aklt_generator())
    spec["phys_dim"] = 2
    with pytest.raises(ValueError):
        channel_from_json(spec)
