import numpy as np
import pytest

from qdesigndb.physics import (
    charging_energy,
    coupled_res_freq_and_kappa,
    coupling_g_capacitive,
    resonator_effective_capacitance,
    transmon_fq_alpha,
)
from qdesigndb.synth import SynthConfig, synth_generate

# measured six-device table: (f_01 GHz, alpha MHz, f_res GHz, kappa MHz,
# chi_L MHz, extracted g MHz)
MEASURED_ROWS = [
    (4.216, -153.0, 6.116, 0.16672, 1.56, 60.0),
    (3.896, -154.0, 6.353, 0.18793, 1.35, 66.0),
    (4.451, -189.0, 6.472, 6.47625, 1.97, 70.0),
    (3.586, -164.0, 6.568, 0.21943, 1.02, 66.0),
    (4.101, -210.0, 6.655, 2.43003, 0.82, 52.0),
    (3.881, -176.0, 6.704, 0.78668, 0.36, 37.0),
]


@pytest.fixture(scope="session")
def measured_rows():
    return MEASURED_ROWS


def dense_transmon_levels(ej, ec, ng=0.0, ncut=60, k=3):
    """Independent dense-eigensolver oracle for the charge-basis spectrum."""
    n = np.arange(-ncut, ncut + 1, dtype=float)
    m = np.diag(4.0 * ec * (n - ng) ** 2)
    m += np.diag(np.full(2 * ncut, -ej / 2.0), 1)
    m += np.diag(np.full(2 * ncut, -ej / 2.0), -1)
    return np.linalg.eigvalsh(m)[:k]


@pytest.fixture(scope="session")
def synth_store(tmp_path_factory):
    """Mid-size deterministic store: both resonator kinds plus couplers."""
    out = tmp_path_factory.mktemp("synth_store")
    store = synth_generate(
        SynthConfig(n_qubit_claws=40, n_quarter_wave=16, n_half_wave=10,
                    n_couplers=6, n_validated=4), seed=11, out_dir=out)
    return store


@pytest.fixture(scope="session")
def dense_store(tmp_path_factory):
    """Denser coupler-free store used by the interpolation accuracy tests."""
    out = tmp_path_factory.mktemp("dense_store")
    store = synth_generate(
        SynthConfig(n_qubit_claws=420, n_quarter_wave=160, n_half_wave=160,
                    n_couplers=0, n_validated=0), seed=5, out_dir=out)
    return store


def generator_truth(store, e_j, cross, claw, cpw, fline, res_type,
                    coupling_kind, z0=50.0):
    """Ground-truth parameters of a virtual design, from the recorded
    generator coefficients pushed through the composition pipeline."""
    co = store.manifest["generator"]["config"]["coeffs"]
    z_c = store.manifest["generator"]["config"]["z_c"]
    c_q = co["c_q_offset"] + co["c_q_slope"] * cross
    c_c = co["c_c_offset"] + co["c_c_slope"] * claw
    e_c = charging_energy(c_q + c_c)
    f_q, alpha = transmon_fq_alpha(e_j, e_c)
    f_bare = co["f_scale"] / cpw
    c_r = resonator_effective_capacitance(f_bare, z_c, res_type)
    if coupling_kind == "distributed":
        f_r, kappa = f_bare, co["kappa_scale"] * fline**2
    else:
        c_rf = co["c_rf_slope"] * fline
        c_cg = co["c_cg_slope"] * fline
        f_r, kappa = coupled_res_freq_and_kappa(f_bare, c_r, c_rf, c_cg, z0)
    g = coupling_g_capacitive(c_c, c_q, c_r, f_r, e_j, e_c)
    return {"f_q": f_q, "alpha": alpha, "f_r": f_r, "kappa": kappa, "g": g}


def rel(a, b):
    return abs(a - b) / abs(b)


def assert_rel(a, b, tol, label=""):
    assert rel(a, b) <= tol, f"{label}: {a} vs {b} (rel {rel(a, b):.3g} > {tol})"
