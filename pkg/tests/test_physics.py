import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.constants import e as E_CHARGE
from scipy.constants import h as PLANCK

from qdesigndb.constants import CONSTANTS
from qdesigndb.physics import (
    CircuitParams,
    DegenerateDetuningError,
    HamiltonianParams,
    TunableCouplerParams,
    alpha_from_spectroscopy,
    avoided_crossing_branches,
    capacitance_of,
    charging_energy,
    coupled_res_freq_and_kappa,
    coupling_g_capacitive,
    ej_from_ic,
    find_EJ_EC,
    fit_avoided_crossing,
    flux_tuned_fq,
    g_from_lamb,
    perturbative_shifts,
    resonator_effective_capacitance,
    transmon_fq_alpha,
    transmon_fq_alpha_approx,
    transmon_levels,
)

from conftest import assert_rel, dense_transmon_levels, rel


# ---------------------------------------------------------------------------
# constants
# ---------------------------------------------------------------------------

def test_constants_are_codata_and_consistent():
    assert CONSTANTS.e == pytest.approx(E_CHARGE, rel=1e-12)
    assert CONSTANTS.h == pytest.approx(PLANCK, rel=1e-12)
    assert CONSTANTS.hbar == pytest.approx(PLANCK / (2 * math.pi), rel=1e-12)
    assert CONSTANTS.Phi0 == pytest.approx(PLANCK / (2 * E_CHARGE), rel=1e-12)
    assert CONSTANTS.phi0 == pytest.approx(CONSTANTS.Phi0 / (2 * math.pi), rel=1e-12)


# ---------------------------------------------------------------------------
# transmon spectra
# ---------------------------------------------------------------------------

def test_levels_zero_ej_is_diagonal_charge_parabola():
    levels = transmon_levels(0.0, 0.25, 0.0, 30, 5)
    assert np.allclose(levels, [0.0, 1.0, 1.0, 4.0, 4.0], atol=1e-12)


def test_levels_charge_periodicity_and_parity():
    base = transmon_levels(12.5, 0.25, 0.0, 30, 5)
    shifted = transmon_levels(12.5, 0.25, 1.0, 30, 5)
    mirrored = transmon_levels(12.5, 0.25, -0.0, 30, 5)
    np.testing.assert_allclose(shifted, base, rtol=1e-10)
    np.testing.assert_allclose(mirrored, base, rtol=1e-10)


@settings(max_examples=40, deadline=None)
@given(ej=st.floats(2.0, 60.0), ec=st.floats(0.05, 0.5),
       ng=st.floats(-2.0, 2.0))
def test_levels_periodicity_property(ej, ec, ng):
    a = transmon_levels(ej, ec, ng, 30, 4)
    b = transmon_levels(ej, ec, ng + 1.0, 30, 4)
    c = transmon_levels(ej, ec, -ng, 30, 4)
    np.testing.assert_allclose(b, a, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(c, a, rtol=1e-10, atol=1e-12)


def test_levels_match_independent_dense_oracle():
    ours = transmon_levels(12.5, 0.25, 0.0, 60, 3)
    oracle = dense_transmon_levels(12.5, 0.25, ncut=60, k=3)
    np.testing.assert_allclose(ours, oracle, rtol=1e-12, atol=1e-12)
    # value pinned by the dense oracle before the main build
    assert ours[1] - ours[0] == pytest.approx(4.735479731079, abs=1e-9)


def test_levels_preconditions():
    with pytest.raises(ValueError):
        transmon_levels(10.0, 0.0)
    with pytest.raises(ValueError):
        transmon_levels(10.0, -0.1)
    with pytest.raises(ValueError):
        transmon_levels(10.0, 0.2, n_cut=5)
    with pytest.raises(ValueError):
        transmon_levels(10.0, 0.2, n_cut=10, k=20)


def test_fq_alpha_reference_point():
    f_q, alpha = transmon_fq_alpha(12.5, 0.25)
    assert f_q < 4.75
    assert f_q == pytest.approx(4.735479731079, abs=1e-9)
    assert -0.30 < alpha < -0.25
    excess = abs(alpha) / 0.25 - 1.0
    assert 0.03 < excess < 0.15


def test_fq_alpha_converged_in_cutoff():
    f_q, alpha = transmon_fq_alpha(12.5, 0.25)
    big = dense_transmon_levels(12.5, 0.25, ncut=240, k=3)
    assert f_q == pytest.approx(big[1] - big[0], rel=1e-9)
    assert alpha == pytest.approx((big[2] - big[1]) - (big[1] - big[0]), rel=1e-9)


def test_fq_alpha_approx_closed_form():
    assert transmon_fq_alpha_approx(12.5, 0.25) == (4.75, -0.25)
    f_q, alpha = transmon_fq_alpha_approx(0.5, 0.25)
    assert f_q == pytest.approx(0.75, rel=1e-15)
    assert alpha == -0.25
    # E_C -> 0 drives f_q -> 0 at fixed E_J
    values = [transmon_fq_alpha_approx(10.0, ec)[0] for ec in (1e-2, 1e-4, 1e-6)]
    assert values[0] > values[1] > values[2]
    assert values[2] < 1e-2


def test_transmon_limit_convergence_is_monotone():
    gaps = []
    for ratio in (20, 50, 200, 1e3, 1e4):
        ec = 0.25
        ej = ratio * ec
        fq_e, al_e = transmon_fq_alpha(ej, ec)
        fq_a, al_a = transmon_fq_alpha_approx(ej, ec)
        gaps.append((abs(fq_e - fq_a) + abs(al_e - al_a)) / fq_e)
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 0.01


def test_find_ej_ec_roundtrip():
    target = transmon_fq_alpha(12.5, 0.25)
    ej, ec = find_EJ_EC(*target)
    assert_rel(ej, 12.5, 1e-6, "E_J")
    assert_rel(ec, 0.25, 1e-6, "E_C")


def test_find_ej_ec_closed_form_inversion():
    ej, ec = find_EJ_EC(4.75, -0.25, approx=True)
    assert ec == 0.25
    assert ej == pytest.approx(12.5, rel=1e-15)


def test_find_ej_ec_measured_row_is_deep_transmon():
    ej, ec = find_EJ_EC(4.216, -0.153)
    assert ej / ec > 30
    fq, alpha = transmon_fq_alpha(ej, ec)
    assert_rel(fq, 4.216, 1e-9)
    assert_rel(alpha, -0.153, 1e-8)


def test_find_ej_ec_preconditions():
    with pytest.raises(ValueError):
        find_EJ_EC(-1.0, -0.2)
    with pytest.raises(ValueError):
        find_EJ_EC(4.0, 0.2)
    with pytest.raises(ValueError):
        find_EJ_EC(0.1, -0.2)


# ---------------------------------------------------------------------------
# conversions
# ---------------------------------------------------------------------------

def test_charging_energy_reference_values():
    # oracle: direct constant arithmetic e^2/(2 C h)
    assert charging_energy(100.0) == pytest.approx(
        E_CHARGE**2 / (2 * 100e-15 * PLANCK) / 1e9, rel=1e-12)
    assert charging_energy(100.0) == pytest.approx(0.1937, abs=5e-5)
    assert charging_energy(50.0) == pytest.approx(0.3874, abs=5e-5)
    with pytest.raises(ValueError):
        charging_energy(0.0)


@settings(max_examples=50, deadline=None)
@given(c=st.floats(1.0, 1e4))
def test_charging_roundtrip(c):
    assert capacitance_of(charging_energy(c)) == pytest.approx(c, rel=1e-12)


def test_ej_from_ic():
    phi0 = PLANCK / (4 * math.pi * E_CHARGE)
    assert ej_from_ic(30.0) == pytest.approx(phi0 * 30e-9 / PLANCK / 1e9, rel=1e-12)
    assert ej_from_ic(30.0) == pytest.approx(14.90, abs=5e-3)
    assert ej_from_ic(0.0) == 0.0
    assert ej_from_ic(24.0) == pytest.approx(2 * ej_from_ic(12.0), rel=1e-15)
    with pytest.raises(ValueError):
        ej_from_ic(-1.0)


def test_resonator_effective_capacitance():
    # oracle: pi/(m omega Z_c)
    quarter = resonator_effective_capacitance(7.0, 50.0, "quarter")
    half = resonator_effective_capacitance(7.0, 50.0, "half")
    assert quarter == pytest.approx(
        math.pi / (4 * 2 * math.pi * 7e9 * 50) * 1e15, rel=1e-12)
    assert quarter == pytest.approx(357.1, abs=0.1)
    assert half == pytest.approx(714.3, abs=0.1)
    assert half == pytest.approx(2 * quarter, rel=1e-15)
    with pytest.raises(ValueError):
        resonator_effective_capacitance(7.0, 50.0, "third")
    with pytest.raises(ValueError):
        resonator_effective_capacitance(-7.0, 50.0, "half")


def test_coupling_g_reference_value():
    hbar = PLANCK / (2 * math.pi)
    omega = 2 * math.pi * 7e9
    expected = (5.0 / 100.0) * math.sqrt(
        E_CHARGE**2 * omega / (hbar * 357e-15)) * (12.5 / 2.0) ** 0.25
    expected /= 2 * math.pi * 1e9
    g = coupling_g_capacitive(5.0, 100.0, 357.0, 7.0, 12.5, 0.25)
    assert g == pytest.approx(expected, rel=1e-12)
    assert g == pytest.approx(0.0689, abs=2e-4)


def test_coupling_g_limits_and_linearity():
    assert coupling_g_capacitive(0.0, 100.0, 357.0, 7.0, 12.5, 0.25) == 0.0
    g1 = coupling_g_capacitive(4.0, 100.0, 357.0, 7.0, 12.5, 0.25)
    g2 = coupling_g_capacitive(8.0, 100.0, 357.0, 7.0, 12.5, 0.25)
    assert g2 == pytest.approx(2 * g1, rel=1e-14)
    with pytest.warns(UserWarning):
        coupling_g_capacitive(40.0, 100.0, 357.0, 7.0, 12.5, 0.25)
    with pytest.raises(ValueError):
        coupling_g_capacitive(5.0, -100.0, 357.0, 7.0, 12.5, 0.25)


# ---------------------------------------------------------------------------
# shifts
# ---------------------------------------------------------------------------

def test_perturbative_shifts_reference_row():
    chi_l, chi = perturbative_shifts(0.0603, 4.216, 6.116, -0.153)
    # measured table value
    assert chi_l * 1e3 == pytest.approx(1.56, abs=5e-3)
    # frozen direct-arithmetic values
    d, s = 6.116 - 4.216, 6.116 + 4.216
    assert chi_l == pytest.approx(0.0603**2 * (1 / d - 1 / s), rel=1e-14)
    assert chi == pytest.approx(
        2 * 0.0603**2 * (-0.153 / (d * (d + 0.153)) - 0.153 / (s * (s - 0.153))),
        rel=1e-14)
    assert chi * 1e3 == pytest.approx(-0.296, abs=5e-4)


def test_perturbative_shifts_zero_coupling_and_poles():
    assert perturbative_shifts(0.0, 4.0, 6.0, -0.2) == (0.0, 0.0)
    with pytest.raises(DegenerateDetuningError):
        perturbative_shifts(0.05, 6.0, 6.0, -0.2)
    with pytest.raises(DegenerateDetuningError):
        perturbative_shifts(0.05, 6.2, 6.0, -0.2)  # Delta == alpha


def test_g_from_lamb_reference_rows():
    assert g_from_lamb(1.56e-3, 4.216, 6.116) * 1e3 == pytest.approx(60.3, abs=0.05)
    assert g_from_lamb(1.35e-3, 3.896, 6.353) * 1e3 == pytest.approx(66.0, abs=0.1)
    assert g_from_lamb(1.02e-3, 3.586, 6.568) * 1e3 == pytest.approx(65.6, abs=0.05)
    with pytest.raises(ValueError):
        g_from_lamb(-1.0e-3, 4.0, 6.0)


@settings(max_examples=50, deadline=None)
@given(chi_l=st.floats(1e-5, 5e-3), f_q=st.floats(3.0, 5.0),
       f_r=st.floats(5.5, 7.5))
def test_shift_consistency_roundtrip(chi_l, f_q, f_r):
    g = g_from_lamb(chi_l, f_q, f_r)
    back, _ = perturbative_shifts(g, f_q, f_r, -0.2)
    assert back == pytest.approx(chi_l, rel=1e-12)


def test_rwa_gap_is_exact_algebra():
    f_q, f_r = 3.0, 7.0
    chi_l = 1.0e-3
    g_full = g_from_lamb(chi_l, f_q, f_r)
    g_rwa = math.sqrt(chi_l * (f_r - f_q))
    assert g_rwa / g_full == pytest.approx(math.sqrt(0.6), abs=1e-12)
    assert 0.20 < 1 - g_rwa / g_full < 0.25


# ---------------------------------------------------------------------------
# loaded resonator
# ---------------------------------------------------------------------------

def test_coupled_res_unloaded_limit():
    assert coupled_res_freq_and_kappa(7.0, 714.0, 0.0, 0.0, 50.0) == (7.0, 0.0)


def test_coupled_res_worked_example():
    f_r, kappa = coupled_res_freq_and_kappa(7.0, 714.0, 10.0, 2.0, 50.0)
    # oracle: direct evaluation of both loading formulas
    c_tot = 726.0
    f_expected = math.sqrt(714.0 / c_tot) * 7.0
    w = 2 * math.pi * f_expected * 1e9
    k_expected = 0.5 * 50 * w**2 * (10e-15) ** 2 / (c_tot * 1e-15) / (2 * math.pi) / 1e6
    assert f_r == pytest.approx(f_expected, rel=1e-14)
    assert kappa == pytest.approx(k_expected, rel=1e-14)
    assert_rel(f_r, 6.942, 0.005)
    assert_rel(kappa, 1.04, 0.005)


def test_coupled_res_quadratic_scaling():
    _, k1 = coupled_res_freq_and_kappa(7.0, 714.0, 2.0, 0.0, 50.0)
    _, k2 = coupled_res_freq_and_kappa(7.0, 714.0, 4.0, 0.0, 50.0)
    assert k2 / k1 == pytest.approx(4.0, rel=0.01)


@settings(max_examples=50, deadline=None)
@given(fp=st.floats(4.0, 9.0), cr=st.floats(200.0, 900.0),
       crf=st.floats(0.0, 30.0), ccg=st.floats(0.0, 10.0))
def test_coupled_res_never_exceeds_unloaded(fp, cr, crf, ccg):
    f_r, kappa = coupled_res_freq_and_kappa(fp, cr, crf, ccg, 50.0)
    assert f_r <= fp
    assert kappa >= 0


def test_kappa_over_crf_squared_constant_for_weak_coupling():
    # constant to +-1% about the center across C_rf <= 0.01 C_r
    ratios = []
    for crf in (0.5, 2.0, 5.0, 7.14):
        _, k = coupled_res_freq_and_kappa(7.0, 714.0, crf, 0.0, 50.0)
        ratios.append(k / crf**2)
    center = sum(ratios) / len(ratios)
    assert all(abs(r - center) / center <= 0.01 for r in ratios)


# ---------------------------------------------------------------------------
# flux tuning and avoided crossings
# ---------------------------------------------------------------------------

def test_flux_tuned_fq():
    assert flux_tuned_fq(0.0, 8.0, 0.3) == 8.0
    phis = np.linspace(0, 2 * math.pi, 9)
    np.testing.assert_allclose(flux_tuned_fq(phis, 8.0, 1.0), 8.0)
    assert flux_tuned_fq(math.pi / 2, 8.0, 0.25) == pytest.approx(4.0, rel=1e-12)
    # periodic with period pi
    np.testing.assert_allclose(flux_tuned_fq(phis, 8.0, 0.3),
                               flux_tuned_fq(phis + math.pi, 8.0, 0.3), rtol=1e-12)
    with pytest.raises(ValueError):
        flux_tuned_fq(0.0, 8.0, 1.5)


def test_branches_zero_coupling():
    upper, lower = avoided_crossing_branches(4.0, 6.5, 0.0)
    assert (upper, lower) == (6.5, 4.0)


def test_branches_degenerate_splitting_is_2g():
    upper, lower = avoided_crossing_branches(6.0, 6.0, 0.05)
    assert upper - lower == pytest.approx(2 * 0.05, rel=1e-12)


def test_branches_match_two_level_oracle_plus_counter_rotating_offset():
    # oracle: numpy 2x2 diagonalization; the closed form equals its upper
    # branch plus g^2/Sigma up to O(g^4/Sigma^3)
    for f_q, f_r, g in ((1.0, 7.0, 0.05), (3.0, 7.0, 0.02), (6.0, 6.5, 0.08)):
        upper, lower = avoided_crossing_branches(f_q, f_r, g)
        w = np.linalg.eigvalsh(np.array([[f_q, g], [g, f_r]]))
        sigma = f_q + f_r
        assert abs(upper - (w[1] + g * g / sigma)) <= 2 * g**4 / sigma**3
        assert abs(lower - (w[0] + g * g / sigma)) <= 2 * g**4 / sigma**3


def test_branches_far_detuned_dispersive_limit():
    f_q, f_r, g = 1.0, 7.0, 0.01
    upper, _ = avoided_crossing_branches(f_q, f_r, g)
    delta, sigma = f_r - f_q, f_r + f_q
    assert upper == pytest.approx(f_r + g * g / delta + g * g / sigma, abs=2 * g**4)


def _synthetic_crossing(f_max, d, f_r, g, n=50, seed=None, sigma=0.0):
    rng = np.random.default_rng(seed)
    phi = np.linspace(0.0, math.pi * 0.98, n)
    fq = flux_tuned_fq(phi, f_max, d)
    upper, lower = avoided_crossing_branches(fq, f_r, g)
    f_obs = np.where(np.abs(upper - f_r) < np.abs(lower - f_r), upper, lower)
    if sigma:
        f_obs = f_obs + rng.normal(0.0, sigma, n)
    return list(zip(phi.tolist(), f_obs.tolist()))


def test_fit_avoided_crossing_noiseless_roundtrip():
    truth = dict(f_max=8.0, d=0.3, f_r=6.5, g=0.08)
    pts = _synthetic_crossing(**truth)
    guess = TunableCouplerParams(f_max=7.0, d=0.5, f_r=6.4, g=0.05)
    fit = fit_avoided_crossing(pts, guess)
    for name, value in truth.items():
        assert_rel(getattr(fit.params, name), value, 1e-6, name)
    assert fit.rms_residual < 1e-9


def test_fit_avoided_crossing_flat_band():
    # d = 1 flattens the tuning curve: the data is two constant lines, so
    # only d itself, the residual, and the product f_r * f_max are
    # identifiable (g trades off against the coupler detuning)
    phi = np.linspace(0.0, math.pi * 0.98, 50)
    fq = flux_tuned_fq(phi, 8.0, 1.0)
    upper, lower = avoided_crossing_branches(fq, 6.5, 0.08)
    pts = list(zip(phi.tolist(), lower.tolist()))
    pts += list(zip(phi.tolist(), upper.tolist()))
    guess = TunableCouplerParams(f_max=8.0, d=1.0, f_r=6.3, g=0.05)
    fit = fit_avoided_crossing(pts, guess)
    assert fit.rms_residual < 1e-9
    assert fit.params.d == pytest.approx(1.0, abs=1e-6)
    assert_rel(fit.params.f_r * fit.params.f_max, 6.5 * 8.0, 1e-9)


def test_fit_avoided_crossing_preconditions():
    guess = TunableCouplerParams(f_max=8.0, d=0.3, f_r=6.5, g=0.08)
    with pytest.raises(ValueError):
        fit_avoided_crossing([(0.0, 6.5)] * 3, guess)
    narrow = [(0.01 * i, 6.5) for i in range(10)]
    with pytest.raises(ValueError):
        fit_avoided_crossing(narrow, guess)


def test_alpha_from_spectroscopy():
    assert alpha_from_spectroscopy(4.216, 4.1395) == pytest.approx(-0.153, rel=1e-12)
    assert alpha_from_spectroscopy(4.0, 4.0) == 0.0
    a = alpha_from_spectroscopy(4.216, 4.1395)
    b = alpha_from_spectroscopy(5.216, 5.1395)
    assert a == pytest.approx(b, abs=1e-12)


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

def test_circuit_params_junction_consistency():
    ej = ej_from_ic(30.0)
    CircuitParams(C_q=90.0, C_c=5.0, C_r=400.0, E_J=ej, E_C=0.2, I_0=30.0)
    with pytest.raises(ValueError):
        CircuitParams(C_q=90.0, C_c=5.0, C_r=400.0, E_J=ej * 1.001, E_C=0.2, I_0=30.0)
    with pytest.raises(ValueError):
        CircuitParams(C_q=-1.0, C_c=5.0, C_r=400.0, E_J=10.0, E_C=0.2)


def test_circuit_params_inductive_energy():
    p = CircuitParams(C_q=90.0, C_c=5.0, C_r=400.0, E_J=10.0, E_C=0.2, L=2.0)
    phi0 = PLANCK / (4 * math.pi * E_CHARGE)
    assert p.E_L == pytest.approx(phi0**2 / (2e-9 * PLANCK) / 1e9, rel=1e-12)


def test_hamiltonian_params_derivations_and_validation():
    p = HamiltonianParams(f_q=4.0, alpha=-0.2, f_r=6.5, kappa=0.5, g=0.06)
    assert p.delta == pytest.approx(2.5)
    assert p.sigma == pytest.approx(10.5)
    with pytest.raises(ValueError):
        HamiltonianParams(f_q=4.0, alpha=0.2, f_r=6.5, kappa=0.5, g=0.06)
    with pytest.raises(ValueError):
        HamiltonianParams(f_q=4.0, alpha=-0.2, f_r=6.5, kappa=-0.5, g=0.06)


def test_tunable_coupler_params_validation():
    with pytest.raises(ValueError):
        TunableCouplerParams(f_max=8.0, d=1.2, f_r=6.5, g=0.08)
    with pytest.raises(ValueError):
        TunableCouplerParams(f_max=-8.0, d=0.2, f_r=6.5, g=0.08)
