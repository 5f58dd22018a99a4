import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import sparse
from scipy.sparse.linalg import expm_multiply

from dimer_ppwpi.vibronic_model import (
    GROUND, SITE1, SITE1P, TWO, DimerModel, ModelParams, PathwayState, VibronicBasis,
    fc_matrix, fc_overlap, fc_table, ground_propagator, manifold_energies,
    one_exciton_propagator,
)
from oracles import grid_overlaps, schrodinger_oracle

DELTA = math.sqrt(2.5)
X0 = math.sqrt(2.0) * DELTA


def test_vacuum_overlap_value():
    assert fc_overlap(0, 0, X0) == pytest.approx(math.exp(-1.25), rel=1e-15)


def test_fc_table_matches_grid_hermite_functions():
    ref = grid_overlaps(12, 0.0, X0)
    assert np.abs(fc_table(12, X0) - ref).max() < 1e-12


def test_fc_sign_convention():
    t = fc_table(3, X0)
    assert t[1, 0] > 0 and t[0, 1] < 0


def test_fc_completeness():
    t = fc_table(30, X0)
    assert abs((t[0] ** 2).sum() - 1.0) < 1e-10


def test_fc_orthogonality_interior_block():
    t = fc_table(30, X0)
    defect = np.abs(t.T @ t - np.eye(30))
    assert defect[:8, :8].max() < 1e-8
    # the 10x10 block still feels the cut at 30 levels; same defect from grid overlaps
    o = grid_overlaps(30, 0.0, X0)
    ref = np.abs(o.T @ o - np.eye(30))[:10, :10].max()
    assert defect[:10, :10].max() == pytest.approx(ref, rel=1e-6)
    t40 = fc_table(40, X0)
    assert np.abs(t40.T @ t40 - np.eye(40))[:10, :10].max() < 1e-8


def test_fc_truncation_defect_halves_on_doubling():
    def defect(n):
        t = fc_table(n, X0)
        return np.abs(t.T @ t - np.eye(n))[:4, :4].max()
    assert defect(16) <= 0.5 * defect(8)
    assert defect(32) <= 0.5 * defect(16)


def test_fc_zero_displacement_is_identity():
    assert np.array_equal(fc_table(5, 0.0), np.eye(5))


def test_fc_table_is_read_only():
    with pytest.raises(ValueError):
        fc_table(4, X0)[0, 0] = 1.0


@pytest.mark.parametrize("bad", [(-1, 0), (0, -2)])
def test_fc_overlap_rejects_negative_levels(bad):
    with pytest.raises(ValueError):
        fc_overlap(*bad, X0)


def test_fc_overlap_rejects_level_cap():
    with pytest.raises(ValueError):
        fc_overlap(500, 0, X0)


def test_fc_matrix_product_structure():
    basis = VibronicBasis(5)
    t = fc_table(5, X0)
    ma = fc_matrix(basis, "a", DELTA)
    mb = fc_matrix(basis, "b", DELTA)
    both = fc_matrix(basis, "both", DELTA)
    i, j = basis.index(2, 3), basis.index(1, 3)
    assert ma[i, j] == t[2, 1]
    assert ma[basis.index(2, 3), basis.index(1, 4)] == 0.0
    assert mb[basis.index(3, 2), basis.index(3, 1)] == t[2, 1]
    assert np.allclose(both, ma @ mb)
    with pytest.raises(ValueError):
        fc_matrix(basis, "c", DELTA)


def test_basis_index_map_bijective():
    basis = VibronicBasis(7)
    seen = {basis.index(a, b) for a in range(7) for b in range(7)}
    assert seen == set(range(basis.size))
    for k in range(basis.size):
        assert basis.index(*basis.levels(k)) == k
    with pytest.raises(IndexError):
        basis.index(7, 0)


@pytest.mark.parametrize("n", [0, -3, 2.5])
def test_basis_rejects_bad_size(n):
    with pytest.raises(ValueError):
        VibronicBasis(n)


def test_manifold_energies():
    p = ModelParams(1.3, DELTA, 20.0, 0.0, eps1p=20.5, eps2=40.2)
    basis = VibronicBasis(3)
    assert manifold_energies(p, basis, "ground")[basis.index(2, 1)] == pytest.approx(3 * 1.3)
    assert manifold_energies(p, basis, "site1p")[0] == 20.5
    assert manifold_energies(p, basis, TWO)[basis.index(1, 1)] == pytest.approx(40.2 + 2.6)
    with pytest.raises(ValueError):
        manifold_energies(p, basis, "three")


def test_model_param_defaults_and_validation():
    p = ModelParams(1.0, DELTA, 20.0, 0.1)
    assert p.eps1p == 20.0 and p.eps2 == 40.0 and p.homodimer
    assert p.huang_rhys == pytest.approx(2.5)
    with pytest.raises(ValueError):
        ModelParams(0.0, DELTA, 20.0, 0.1)
    with pytest.raises(ValueError):
        ModelParams(1.0, -1.0, 20.0, 0.1)
    with pytest.raises(ValueError):
        ModelParams(1.0, DELTA, float("nan"), 0.1)


def test_pathway_state_fills_missing_site():
    s = PathwayState("one_exciton", {SITE1: np.ones(4)})
    assert np.array_equal(s.component(SITE1P), np.zeros(4))
    with pytest.raises(ValueError):
        PathwayState("ground", {SITE1: np.ones(4)})


@pytest.fixture(scope="module")
def coupled():
    return DimerModel(ModelParams(1.0, DELTA, 20.0, 0.1, eps1p=20.4), VibronicBasis(8))


def test_one_exciton_unitarity(coupled):
    u = coupled.one_exciton_propagator(2.7)
    assert np.abs(u.conj().T @ u - np.eye(u.shape[0])).max() < 1e-12


@given(st.floats(0.0, 5.0), st.floats(0.0, 5.0))
@settings(max_examples=25, deadline=None)
def test_one_exciton_group_property(coupled, t1, t2):
    lhs = coupled.one_exciton_propagator(t1 + t2)
    rhs = coupled.one_exciton_propagator(t1) @ coupled.one_exciton_propagator(t2)
    assert np.abs(lhs - rhs).max() < 1e-12


def test_propagate_matches_rk4(coupled):
    """Eigen-decomposition path against a direct ODE integration."""
    rng = np.random.default_rng(3)
    size = coupled.basis.size
    v = rng.normal(size=2 * size) + 1j * rng.normal(size=2 * size)
    state = PathwayState("one_exciton", {SITE1: v[:size], SITE1P: v[size:]})
    out = coupled.propagate(state, 0.8)
    # remove the fast electronic phase before integrating
    h = coupled.one_exciton_hamiltonian - 20.0 * np.eye(2 * size)
    ref = schrodinger_oracle(h, v, 0.8, steps=4000) * np.exp(-1j * 20.0 * 0.8)
    got = np.concatenate([out.component(SITE1), out.component(SITE1P)])
    assert np.abs(got - ref).max() < 1e-10 * np.abs(ref).max()


def test_transfer_matches_shared_basis_hamiltonian():
    """Independent model: both sites in one undisplaced oscillator basis.

    H_site = eps + omega (n_a + n_b) - omega x0 x_site + omega x0^2 / 2, and
    the coupling J multiplies the vibrational identity.
    """
    big = 30
    p = ModelParams(1.0, DELTA, 20.0, 0.2)
    model = DimerModel(p, VibronicBasis(18))
    n = np.arange(big)
    x = (np.diag(np.sqrt(n[1:]), 1) + np.diag(np.sqrt(n[1:]), -1)) / math.sqrt(2.0)
    eye = np.eye(big)
    num = np.kron(np.diag(n), eye) + np.kron(eye, np.diag(n))
    shift = p.omega * X0 * X0 / 2
    h1 = p.eps1 * np.eye(big * big) + p.omega * num - p.omega * X0 * np.kron(x, eye) + shift * np.eye(big * big)
    h2 = p.eps1p * np.eye(big * big) + p.omega * num - p.omega * X0 * np.kron(eye, x) + shift * np.eye(big * big)
    coupling = p.J * sparse.identity(big * big)
    h = sparse.bmat([[sparse.csr_matrix(h1), coupling], [coupling, sparse.csr_matrix(h2)]]).tocsr()

    # start on site 1 in its relaxed vibrational ground state
    o = grid_overlaps(big, 0.0, X0)  # ground-basis rows, displaced-basis columns
    start = np.zeros(big * big)
    start[0] = 1.0
    psi0 = np.concatenate([np.kron(o, eye) @ start, np.zeros(big * big)])
    t = 3.0
    psi = expm_multiply(-1j * (h - p.eps1 * sparse.identity(2 * big * big)) * t, psi0)
    psi = psi * np.exp(-1j * p.eps1 * t)
    site1 = np.kron(o, eye).T @ psi[: big * big]
    site1p = np.kron(eye, o).T @ psi[big * big:]

    small = model.basis.n_max

    def trim(v):
        return v.reshape(big, big)[:small, :small].reshape(-1)

    state = PathwayState("one_exciton", {SITE1: model.basis.ground_state()})
    out = model.propagate(state, t)
    # low-lying components are converged in both truncations
    low = (model.basis.nu_a < 5) & (model.basis.nu_b < 5)
    assert np.abs(out.component(SITE1)[low] - trim(site1)[low]).max() < 1e-6
    assert np.abs(out.component(SITE1P)[low] - trim(site1p)[low]).max() < 1e-6
    assert np.abs(out.component(SITE1P)).max() > 1e-2  # transfer actually happened


def test_zero_coupling_shortcut_matches_eigen_path():
    p0 = ModelParams(1.0, DELTA, 20.0, 0.0, eps1p=20.3)
    model = DimerModel(p0, VibronicBasis(6))
    rng = np.random.default_rng(1)
    v1, v2 = rng.normal(size=36) + 0j, rng.normal(size=36) + 0j
    out = model.propagate(PathwayState("one_exciton", {SITE1: v1, SITE1P: v2}), 1.7)
    u = model.one_exciton_propagator(1.7)
    ref = u @ np.concatenate([v1, v2])
    assert np.allclose(np.concatenate([out.component(SITE1), out.component(SITE1P)]), ref, atol=1e-13)


def test_ground_and_two_exciton_evolution_are_phases(coupled):
    v = np.arange(coupled.basis.size, dtype=complex)
    g = coupled.propagate(PathwayState("ground", {GROUND: v}), 0.5)
    assert np.allclose(g.component(GROUND), ground_propagator(coupled.params, coupled.basis, 0.5) * v)
    d = coupled.propagate(PathwayState("two_exciton", {TWO: v}), 0.5)
    assert np.allclose(np.abs(d.component(TWO)), np.abs(v))


def test_negative_time_rejected(coupled):
    with pytest.raises(ValueError):
        coupled.propagate(PathwayState("ground", {GROUND: coupled.basis.ground_state()}), -1.0)
    with pytest.raises(ValueError):
        one_exciton_propagator(coupled.params, coupled.basis, -0.1)


def test_mode_swap_relabels_sites(coupled):
    p = ModelParams(1.0, DELTA, 20.0, 0.1)
    model = DimerModel(p, VibronicBasis(6))
    basis = model.basis
    rng = np.random.default_rng(5)
    v = rng.normal(size=36) + 0j
    a = model.propagate(PathwayState("one_exciton", {SITE1: v}), 2.0)
    b = model.propagate(PathwayState("one_exciton", {SITE1P: basis.swap_modes(v)}), 2.0)
    assert np.allclose(basis.swap_modes(a.component(SITE1)), b.component(SITE1P), atol=1e-12)
    assert np.allclose(basis.swap_modes(a.component(SITE1P)), b.component(SITE1), atol=1e-12)
