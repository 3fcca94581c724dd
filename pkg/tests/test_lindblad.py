"""Steady-state solver, propagation, circulation, time reversal, detailed balance."""

import math

import numpy as np
import pytest

from noisecycle.analytic import rho_ss_analytic
from noisecycle.fock import (
    FockError,
    ModelKind,
    ModelParams,
    build_ladder,
    coherent_state,
    fock_state,
    liouvillian,
    number_op,
    parity_op,
    quadrature_x,
    quadrature_y,
    vectorize,
    devectorize,
)
from noisecycle.lindblad import (
    DegenerateSpectrumError,
    StationarityError,
    check_density_matrix,
    circulation,
    conserved_decomposition,
    conserved_reconstruction,
    detailed_balance_residual,
    evolve,
    parity_expectation,
    parity_weights,
    random_density_matrix,
    steady_states,
    time_reverse_operator,
    time_reversed_liouvillian,
    trace_distance,
    wigner_numeric,
    wigner_numeric_grid,
)
from noisecycle.analytic import wigner_ss

NI = ModelParams(omega0=1.0, kappa_down=1.0, kappa_up2=0.5)
CONV = ModelParams(omega0=1.0, kappa_down=1.0, kappa_up1=0.3, kind=ModelKind.CONVENTIONAL)


# ---------------------------------------------------------------------------
# steady states
# ---------------------------------------------------------------------------

def test_steady_state_matches_geometric_form():
    dim = 46
    params = ModelParams(omega0=1.0, kappa_down=1.0, kappa_up2=0.3)
    result = steady_states(liouvillian(params, dim))
    assert result.kernel_dim == 2
    for wp in (0.0, 0.3, 1.0):
        combined = result.combine(wp)
        check_density_matrix(combined, herm_tol=1e-10, trace_tol=1e-10)
        assert trace_distance(combined, rho_ss_analytic(0.3, wp, dim)) < 1e-8


def test_steady_state_zero_ratio_sectors():
    result = steady_states(liouvillian(ModelParams(omega0=1.0, kappa_down=1.0), 20))
    assert result.kernel_dim == 2
    assert np.allclose(result.rho_plus, fock_state(20, 0), atol=1e-10)
    assert np.allclose(result.rho_minus, fock_state(20, 1), atol=1e-10)


def test_conventional_unique_full_rank():
    result = steady_states(liouvillian(CONV, 24))
    assert result.kernel_dim == 1
    assert result.rho_plus is None
    rho = result.states[0]
    check_density_matrix(rho, herm_tol=1e-10, trace_tol=1e-10)
    # the gain populates every level; the resolvable part of the ladder is
    # strictly positive (the far tail underflows double precision)
    pops = np.diag(rho).real
    assert np.all(pops[:10] > 0)
    assert np.linalg.eigvalsh(rho).min() > -1e-12


def test_conventional_without_gain_two_sectors():
    # pure two-photon loss: vacuum plus an odd remnant
    params = ModelParams(omega0=1.0, kappa_down=1.0, kind=ModelKind.CONVENTIONAL)
    result = steady_states(liouvillian(params, 20))
    assert result.kernel_dim == 2
    assert np.allclose(result.states[0], fock_state(20, 0), atol=1e-10)
    assert np.allclose(result.states[1], fock_state(20, 1), atol=1e-10)


def test_combine_unavailable_for_unique_state():
    result = steady_states(liouvillian(CONV, 20))
    with pytest.raises(Exception):
        result.combine(0.5)


def test_degenerate_kernel_raises_with_dimension():
    # pure dephasing conserves every population: the null space is huge
    from noisecycle.fock import dissipator, number_op

    gen = dissipator(number_op(6)).tocsr()
    with pytest.raises(DegenerateSpectrumError) as err:
        steady_states(gen)
    assert err.value.kernel_dim > 2


# ---------------------------------------------------------------------------
# evolution
# ---------------------------------------------------------------------------

def test_evolve_zero_time_is_identity():
    rho = coherent_state(20, 0.7)
    out = evolve(rho, liouvillian(NI, 20), 0.0)
    assert np.array_equal(out, rho)


def test_evolve_reaches_steady_state():
    dim = 48
    gen = liouvillian(NI, dim)
    rho_t = evolve(fock_state(dim, 0), gen, 25.0)
    assert trace_distance(rho_t, rho_ss_analytic(0.5, 1.0, dim)) < 1e-6
    assert abs(np.trace(rho_t).real - 1.0) < 1e-9


def test_evolve_conserves_parity_noise_induced():
    dim = 40
    gen = liouvillian(ModelParams(omega0=1.0, kappa_down=1.0, kappa_up2=0.3), dim)
    rho0 = coherent_state(dim, 0.8)
    start = parity_expectation(rho0)
    for t in (0.5, 2.0):
        assert abs(parity_expectation(evolve(rho0, gen, t)) - start) < 1e-9


def test_evolve_parity_drifts_conventional():
    dim = 30
    rho0 = fock_state(dim, 1)
    out = evolve(rho0, liouvillian(CONV, dim), 3.0)
    assert abs(parity_expectation(out) - parity_expectation(rho0)) > 0.1


def test_evolve_rejects_negative_time():
    with pytest.raises(ValueError):
        evolve(fock_state(10, 0), liouvillian(NI, 10), -1.0)


# ---------------------------------------------------------------------------
# parity weights
# ---------------------------------------------------------------------------

def test_parity_weights_fock_states():
    assert parity_weights(fock_state(10, 0)) == (1.0, 0.0)
    assert parity_weights(fock_state(10, 1)) == (0.0, 1.0)


def test_parity_weights_coherent():
    wp, wm = parity_weights(coherent_state(60, 1.0))
    assert wp == pytest.approx(math.exp(-1.0) * math.cosh(1.0), abs=1e-12)
    assert wp == pytest.approx(0.56767, abs=5e-6)
    assert wp + wm == pytest.approx(1.0)


# ---------------------------------------------------------------------------
# circulation
# ---------------------------------------------------------------------------

def test_circulation_vacuum():
    result = circulation(fock_state(24, 0), NI)
    assert result.phi == pytest.approx(2.0, rel=1e-12)
    assert result.mean_n == pytest.approx(0.0, abs=1e-14)


def test_circulation_steady_frozen_example():
    # ratio 1/2 with equal sector weights: 4 * (2 + 0.5 + 0.5) = 12
    rho = rho_ss_analytic(0.5, 0.5, 100)
    result = circulation(rho, NI)
    assert result.phi_formula == pytest.approx(12.0)
    assert result.phi == pytest.approx(12.0, rel=1e-8)


def test_circulation_identity_random_states():
    rng = np.random.default_rng(17)
    dim = 40
    n_op = number_op(dim)
    for _ in range(10):
        rho = random_density_matrix(dim, support=dim - 10, rng=rng)
        result = circulation(rho, NI)
        reference = NI.omega0 * (4.0 * np.trace(rho @ n_op).real + 2.0)
        assert abs(result.phi - reference) / reference < 1e-9


def test_circulation_coherent_steady_mean_photon():
    v = 1.3
    wp = math.exp(-v) * math.cosh(v)
    expected_n = 2.0 * 0.5 / 0.5 + math.exp(-v) * math.sinh(v)
    rho = rho_ss_analytic(0.5, wp, 120)
    result = circulation(rho, NI)
    assert result.mean_n == pytest.approx(expected_n, rel=1e-10)


def test_circulation_warns_on_edge_occupation():
    rho = fock_state(20, 19)
    with pytest.warns(UserWarning):
        circulation(rho, NI)


# ---------------------------------------------------------------------------
# time reversal
# ---------------------------------------------------------------------------

def test_time_reversal_swaps_ladder_operators():
    a, ad = build_ladder(16)
    assert np.array_equal(time_reverse_operator(a), ad)
    assert np.array_equal(time_reverse_operator(ad), a)


def test_time_reversal_is_involution():
    params = ModelParams(omega0=0.7, kappa_down=1.3, kappa_up2=0.4)
    once = time_reversed_liouvillian(params, 18)
    twice = time_reversed_liouvillian(params.rotation_reversed(), 18)
    assert abs(twice - liouvillian(params, 18)).max() == 0.0
    assert abs(once - liouvillian(params.rotation_reversed(), 18)).max() == 0.0


def test_time_reversal_fixes_generator_without_rotation():
    params = ModelParams(omega0=0.0, kappa_down=1.0, kappa_up2=0.3)
    gap = time_reversed_liouvillian(params, 20) - liouvillian(params, 20)
    assert abs(gap).max() == 0.0


@pytest.mark.parametrize("params", [NI, CONV])
def test_time_reversal_defining_property(params):
    rng = np.random.default_rng(23)
    dim = 24
    gen = liouvillian(params, dim)
    reversed_gen = time_reversed_liouvillian(params, dim)
    for _ in range(5):
        g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        herm = (g + g.conj().T) / 2
        lhs = time_reverse_operator(devectorize(gen @ vectorize(herm)))
        rhs = devectorize(reversed_gen @ vectorize(time_reverse_operator(herm)))
        assert np.abs(lhs - rhs).max() < 1e-10 * np.abs(lhs).max()


# ---------------------------------------------------------------------------
# detailed balance
# ---------------------------------------------------------------------------

def test_detailed_balance_holds_noise_induced():
    dim = 80
    for wp in (0.3, 0.55, 0.9):
        residual = detailed_balance_residual(NI, rho_ss_analytic(0.5, wp, dim))
        assert residual < 1e-10


def test_detailed_balance_independent_of_rotation():
    dim = 60
    rho = rho_ss_analytic(0.4, 0.6, dim)
    r1 = detailed_balance_residual(ModelParams(0.5, 1.0, 0.4), rho)
    r2 = detailed_balance_residual(ModelParams(3.0, 1.0, 0.4), rho)
    assert abs(r1 - r2) < 1e-12


def test_detailed_balance_fails_conventional():
    rho = steady_states(liouvillian(CONV, 20)).states[0]
    assert detailed_balance_residual(CONV, rho) > 1e-3


def test_detailed_balance_requires_stationary_state():
    with pytest.raises(StationarityError):
        detailed_balance_residual(NI, coherent_state(40, 1.0))


# ---------------------------------------------------------------------------
# conserved-quantity reconstruction
# ---------------------------------------------------------------------------

def test_decomposition_orthogonality():
    dec = conserved_decomposition(0.4, 60)
    assert abs(np.trace(dec.m0.conj().T @ dec.m1)) < 1e-10
    # biorthogonality against the conserved pair
    for i, c in enumerate((dec.c0, dec.c1)):
        for j, m in enumerate((dec.m0, dec.m1)):
            overlap = np.trace(c.conj().T @ m).real
            assert overlap == pytest.approx(1.0 if i == j else 0.0, abs=1e-10)


def test_conserved_quantities_are_conserved():
    dim = 60
    from noisecycle.fock import adjoint_liouvillian

    adj = adjoint_liouvillian(ModelParams(1.0, 1.0, 0.4), dim)
    dec = conserved_decomposition(0.4, dim)
    for c in (dec.c0, dec.c1):
        moved = adj @ vectorize(c)
        assert np.abs(moved).max() < 1e-10


def test_reconstruction_from_vacuum():
    rec = conserved_reconstruction(fock_state(40, 0), 0.3)
    assert np.abs(rec - rho_ss_analytic(0.3, 1.0, 40)).max() < 1e-10


def test_reconstruction_equal_mixture():
    rho0 = (fock_state(40, 0) + fock_state(40, 1)) / 2
    rec = conserved_reconstruction(rho0, 0.3)
    assert np.abs(rec - rho_ss_analytic(0.3, 0.5, 40)).max() < 1e-10


def test_reconstruction_random_states_two_routes():
    rng = np.random.default_rng(31)
    dim = 46
    for _ in range(5):
        rho0 = random_density_matrix(dim, support=24, rng=rng)
        wp, _ = parity_weights(rho0)
        via_weights = wp * rho_ss_analytic(0.3, 1.0, dim) + (1 - wp) * rho_ss_analytic(0.3, 0.0, dim)
        assert np.abs(conserved_reconstruction(rho0, 0.3) - via_weights).max() < 1e-10


def test_reconstruction_rejects_zero_ratio():
    with pytest.raises(FockError):
        conserved_reconstruction(fock_state(20, 0), 0.0)


# ---------------------------------------------------------------------------
# displaced-parity evaluator
# ---------------------------------------------------------------------------

def test_wigner_numeric_fock_states_at_origin():
    origin = np.array([[0.0, 0.0]])
    assert wigner_numeric(fock_state(30, 0), origin)[0] == pytest.approx(1 / (2 * math.pi), rel=1e-12)
    assert wigner_numeric(fock_state(30, 1), origin)[0] == pytest.approx(-1 / (2 * math.pi), rel=1e-12)


def test_wigner_numeric_matches_closed_form_grid():
    k, wp = 0.2, 0.4
    rho = rho_ss_analytic(k, wp, 80)
    axis = np.linspace(-4.0, 4.0, 9)
    numeric = wigner_numeric_grid(rho, axis, axis)
    X, Y = np.meshgrid(axis, axis, indexing="ij")
    assert np.abs(numeric - wigner_ss(X, Y, k, wp)).max() < 1e-6


def test_wigner_numeric_warns_beyond_safe_radius():
    with pytest.warns(UserWarning):
        wigner_numeric(coherent_state(16, 2.0), np.array([[6.0, 0.0]]))
