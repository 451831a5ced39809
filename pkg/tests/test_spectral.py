import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ising_continuum import instances as I
from ising_continuum.exact import brute_force
from ising_continuum.htnet import HTParams, activation_integral, lyapunov
from ising_continuum.instances import IsingInstance, absorb_fields
from ising_continuum.spectral import (circulant_spectrum, e_lambda_patterns, eig_sym,
                                      jacobi_eigh, osc_check, power_top,
                                      projected_eigvec_energy, residuals, spectrum_for,
                                      state_decompose, top_patterns)

from conftest import naive_ground


def _same_spectrum(a, b, tol=1e-8):
    return np.max(np.abs(a.eigenvalues - b.eigenvalues)) <= tol


@pytest.mark.parametrize("make", [
    lambda: I.gen_sk(30, "gaussian", seed=1),
    lambda: I.gen_random_regular(40, 3, "bimodal", seed=2),
    lambda: I.gen_mobius_ladder(16),
])
def test_solvers_agree_and_residuals_small(make):
    inst = make()
    lap = eig_sym(inst, "lapack")
    jac = eig_sym(inst, "jacobi")
    assert _same_spectrum(lap, jac)
    for s in (lap, jac):
        res, ortho = residuals(inst, s)
        assert res <= 1e-8 and ortho <= 1e-8


def test_jacobi_on_random_symmetric(rng):
    A = rng.normal(size=(25, 25))
    A = A + A.T
    vals, vecs = jacobi_eigh(A)
    assert np.allclose(np.sort(vals), np.linalg.eigvalsh(A), atol=1e-10)
    assert np.allclose(A @ vecs, vecs * vals, atol=1e-9)


def test_power_iteration_top_pairs():
    inst = I.gen_sk(40, "gaussian", seed=5)
    vals, vecs = power_top(inst, m=3)
    ref = np.sort(np.linalg.eigvalsh(inst.matrix()))[::-1][:3]
    assert np.allclose(vals, ref, atol=1e-8)
    J = inst.matrix()
    assert np.allclose(J @ vecs, vecs * vals, atol=1e-7)


@pytest.mark.parametrize("N,offsets", [(8, [1, 4]), (30, [1, 5, 11]), (31, [2, 7]),
                                        (256, [1, 3, 128]), (101, [1, 50])])
def test_circulant_fast_path_matches_dense(N, offsets):
    inst = I.gen_circulant(N, offsets, -1.0)
    fast = spectrum_for(inst)
    assert fast.method == "circulant"
    dense = eig_sym(inst, "lapack")
    assert _same_spectrum(fast, dense)
    res, ortho = residuals(inst, fast)
    assert res <= 1e-8 and ortho <= 1e-8


def test_circulant_rejects_asymmetric_row():
    with pytest.raises(ValueError):
        circulant_spectrum([0, 1, 0, 0, 2])


def test_fields_must_be_absorbed():
    with pytest.raises(ValueError):
        eig_sym(I.gen_ladder_field(3))


def test_mobius_top_space_is_two_dimensional():
    # lambda_max = 2 cos(pi (n-1)/n) + 1 for the antiferro Mobius matrix with even n
    n = 6
    s = spectrum_for(I.gen_mobius_ladder(n))
    assert s.top_multiplicity == 2
    k = np.arange(2 * n)
    lam = -(2 * np.cos(2 * np.pi * k / (2 * n)) + np.cos(np.pi * k))
    assert s.lambda_max == pytest.approx(lam.max())


@pytest.mark.parametrize("n_half", [4, 6, 8, 10, 12])
def test_mobius_even_is_simple(n_half):
    inst = I.gen_mobius_ladder(n_half)
    ground, _ = naive_ground(inst) if inst.n <= 16 else (-(3 * n_half - 4), None)
    v = osc_check(inst, ground)
    assert v.is_simple
    assert v.e_lambda_energy == -(3 * n_half - 4)


def test_complete_graph_degenerate_but_simple():
    inst = I.gen_circulant(9, range(1, 5), -1.0)
    v = osc_check(inst, brute_force(inst).best_energy)
    assert v.degenerate and v.top_multiplicity == 8
    assert v.is_simple


def test_odd_swap_breaks_simplicity():
    inst = I.mobius_odd_swap(5)
    v = osc_check(inst, brute_force(inst).best_energy)
    assert not v.is_simple


def test_ladder_with_field_is_simple_small():
    inst = I.gen_ladder_field(3)
    v = osc_check(inst, naive_ground(inst)[0])
    assert v.is_simple


def test_chimera_bias_is_simple():
    inst = I.gen_chimera_bf(1, 1, seed=4)
    assert osc_check(inst, brute_force(inst).best_energy).is_simple


def test_supplying_too_high_ground_is_an_error():
    inst = I.gen_mobius_ladder(4)
    with pytest.raises(ValueError):
        osc_check(inst, 100.0)


def test_patterns_keep_original_length_with_fields():
    inst = I.gen_chimera_bf(1, 1, seed=0)
    pats, ens, summary = e_lambda_patterns(inst)
    assert pats.shape[1] == inst.n
    assert summary.eigenvectors.shape[0] == inst.n + 1


def test_circle_sweep_covers_basis_signs():
    s = spectrum_for(I.gen_mobius_ladder(10))
    pats = top_patterns(s)
    assert pats.shape[0] > 2
    assert len({p.tobytes() for p in pats}) > 2


def test_projected_energy_index_check():
    inst = I.gen_sk(6, seed=0)
    s = eig_sym(inst)
    assert projected_eigvec_energy(inst, s, 0) == pytest.approx(
        I.energy(inst, I.sign_pattern(s.eigenvectors[:, 0])))
    with pytest.raises(IndexError):
        projected_eigvec_energy(inst, s, 99)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(3, 12),
       dist=st.sampled_from(["gaussian", "bimodal"]))
def test_e_lambda_bounds_ground_from_above(seed, n, dist):
    inst = I.gen_sk(n, dist, seed=seed)
    ground, _ = naive_ground(inst)
    v = osc_check(inst, ground)
    assert v.e_lambda_energy >= ground - 1e-9
    assert v.is_simple == (abs(v.e_lambda_energy - ground) <= 1e-9 * max(1, abs(ground)))


# -- eigenbasis decomposition -------------------------------------------------


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_decomposition_reconstructs_amplitudes_and_energy(seed):
    g = np.random.default_rng(seed)
    inst = I.gen_random_regular(24, 3, "gaussian", seed=seed)
    summary = eig_sym(inst)
    params = HTParams()
    v = g.uniform(-0.99, 0.99, size=24)
    d = state_decompose(inst, v, summary, params)
    back = summary.eigenvectors @ d.gammas
    assert np.max(np.abs(back - v)) <= 1e-10
    assert d.reconstruction_error <= 1e-10
    assert d.reconstructed_energy == pytest.approx(lyapunov(inst, v, params), abs=1e-8)


def test_decomposition_null_space_of_rank_deficient_matrix():
    # K_{2,2} antiferro: eigenvalues +-2 and a two-dimensional kernel
    inst = IsingInstance.from_edges(4, [(0, 2, -1), (0, 3, -1), (1, 2, -1), (1, 3, -1)])
    summary = eig_sym(inst)
    v = np.array([0.3, -0.3, 0.0, 0.0])
    d = state_decompose(inst, v, summary)
    assert d.null_component_norm == pytest.approx(np.linalg.norm(v))
    assert d.reconstruction_error <= 1e-12


def test_activation_integral_closed_form():
    x0 = 3.0
    u = np.array([0.0, 0.2, -0.7, 0.95])
    # F(u) = int_0^u x0 artanh(t) dt, checked by the trapezoid rule
    ref = []
    for b in u:
        t = np.linspace(0, b, 200001)
        ref.append(np.trapezoid(x0 * np.arctanh(t), t))
    assert np.allclose(activation_integral(u, x0), ref, atol=1e-8)


def test_absorbed_spectrum_has_extra_dimension():
    inst = I.gen_ladder_field(4)
    assert eig_sym(absorb_fields(inst)).eigenvalues.size == inst.n + 1
