"""qdesigndb: map target circuit-QED Hamiltonian parameters to device geometry.

A component database (qubit claws, resonators, feedline couplers, validated
devices) is composed combinatorially into candidate designs, searched with
weighted cost functions, and interpolated into best-guess geometries, with
every analytic formula validated against exact diagonalization.
"""

from .constants import CONSTANTS, PhysConstants
from .interpolate import InterpolatedDesign, SurrogateModel, estimate_params, interpolate_design
from .oracle import JCSpec, jc_hamiltonian, numerical_shifts, second_order_E2
from .physics import (
    AvoidedCrossingFit,
    CircuitParams,
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
from .query import QueryResult, TargetSpec, cost, top_k_search
from .store import (
    CandidateDesign,
    ComponentStore,
    CouplerEntry,
    QubitClawEntry,
    ResonatorEntry,
    ValidatedDeviceEntry,
    compose_candidates,
    load_components,
    sample_store_path,
    store_stats,
    write_components,
)
from .synth import SynthConfig, synth_generate

__version__ = "0.1.0"
