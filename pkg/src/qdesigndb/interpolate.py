"""Physics-based interpolation from target parameters to a best-guess design.

Selects the best-matching stored qubit claw and resonator, then rescales
their geometry with first-order physical scalings (anharmonicity against
cross length, coupling against claw length, frequency against resonator
length, linewidth against the squared feedline dimension), re-estimating
the resulting Hamiltonian parameters through a local secant surrogate plus
the same lumped pipeline used for composition.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .constants import CONSTANTS, FF, GHZ, MHZ
from .physics import (
    HamiltonianParams,
    capacitance_of,
    charging_energy,
    coupled_res_freq_and_kappa,
    coupling_g_capacitive,
    find_EJ_EC,
    resonator_effective_capacitance,
    transmon_fq_alpha,
)
from .query import TargetSpec
from .store import ComponentStore, ResonatorEntry

__all__ = [
    "InterpolationError",
    "SurrogateModel",
    "InterpolatedDesign",
    "WARN_LOW_EJ_EC",
    "WARN_TRUST_REGION",
    "WARN_FALLBACK_SLOPE",
    "build_surrogate",
    "estimate_params",
    "interpolate_design",
    "target_circuit",
]

WARN_LOW_EJ_EC = "EJ_OVER_EC_BELOW_30"
WARN_TRUST_REGION = "SCALE_FACTOR_OUTSIDE_TRUST_REGION"
WARN_FALLBACK_SLOPE = "SURROGATE_SLOPE_FROM_SINGLE_POINT"

TRUST_REGION = (0.5, 2.0)
# resonator claw filter half-width (relative C_c difference)
CLAW_FILTER = 0.30
# coupling-element / claw capacitance change that forces an f_r recalculation
RECALC_FRACTION = 0.01


class InterpolationError(RuntimeError):
    """Interpolation could not produce a design (empty filter, bad target)."""


@dataclass(frozen=True)
class SurrogateModel:
    """Local first-order model around one base qubit claw and resonator.

    Slopes are secants through the base entry and its nearest geometry
    neighbor per dimension (sign conventions: C_q grows with cross length,
    f_bare falls with resonator length).
    """

    qubit_id: str
    resonator_id: str
    cross_base: float
    c_q_base: float
    dcq_dcross: float
    claw_base: float
    c_c_base: float
    dcc_dclaw: float
    cpw_base: float
    f_bare_base: float
    dfbare_dcpw: float
    fline_base: float
    res_type: str
    coupling_kind: str
    z_c: float
    kappa_base: float | None = None       # distributed
    c_rf_base: float | None = None        # lumped
    c_cg_base: float | None = None        # lumped
    dcrf_dfline: float | None = None      # lumped
    notes: tuple[str, ...] = ()

    def c_q(self, cross_length: float) -> float:
        return self.c_q_base + self.dcq_dcross * (cross_length - self.cross_base)

    def c_c(self, claw_length: float) -> float:
        return self.c_c_base + self.dcc_dclaw * (claw_length - self.claw_base)

    def f_bare(self, cpw_length: float) -> float:
        return self.f_bare_base + self.dfbare_dcpw * (cpw_length - self.cpw_base)

    def c_rf(self, fline_dim: float) -> float:
        if self.c_rf_base is None or self.dcrf_dfline is None:
            raise InterpolationError("no feedline capacitance model for this kind")
        return self.c_rf_base + self.dcrf_dfline * (fline_dim - self.fline_base)


@dataclass(frozen=True)
class InterpolatedDesign:
    """Best-guess unsimulated geometry with estimated parameters."""

    base_qubit_id: str
    base_resonator_id: str
    base_coupler_id: str | None
    cross_length: float
    claw_length: float
    cpw_length: float
    feedline_coupling_dim: float
    scale_factors: dict[str, float]
    estimated: HamiltonianParams | None
    warnings: tuple[str, ...]
    recalc_applied: bool
    recalc_residual: float | None = None
    E_J: float | None = None


def target_circuit(f_q: float, alpha: float, f_r: float, g: float,
                   resonator_type: str, z_c: float = 50.0) -> tuple[float, float, float]:
    """(C_q, C_c, E_J) implied by a target, inverting the coupling formula.

    The total island capacitance comes from E_C, and the split between C_q
    and C_c from the required C_c/C_q ratio at the target resonator
    frequency (effective resonator capacitance from the target f_r and the
    given line impedance).
    """
    e_j, e_c = find_EJ_EC(f_q, alpha)
    c_tot = capacitance_of(e_c)
    c_r = resonator_effective_capacitance(f_r, z_c, resonator_type)
    omega_r = 2.0 * math.pi * f_r * GHZ
    k_factor = (math.sqrt(CONSTANTS.e**2 * omega_r / (CONSTANTS.hbar * c_r * FF))
                * math.sqrt(math.sqrt(e_j / (8.0 * e_c))) / (2.0 * math.pi) / GHZ)
    cc_over_cq = g / k_factor
    c_c = c_tot * cc_over_cq / (1.0 + cc_over_cq)
    return c_tot - c_c, c_c, e_j


def _secant(pairs: list[tuple[float, float]], x0: float, y0: float,
            fallback: str) -> tuple[float, bool]:
    """Slope through (x0, y0) and the nearest point with distinct abscissa.

    With no usable neighbor the slope falls back to the single-point model
    named by `fallback`: "proportional" (y ~ x, slope y/x) or "inverse"
    (y ~ 1/x, slope -y/x).
    """
    best = None
    for x, y in pairs:
        if abs(x - x0) < 1e-12:
            continue
        if best is None or abs(x - x0) < abs(best[0] - x0):
            best = (x, y)
    if best is None:
        if x0 == 0:
            raise InterpolationError("no neighbor available to fit a surrogate slope")
        return (y0 / x0 if fallback == "proportional" else -y0 / x0), True
    return (best[1] - y0) / (best[0] - x0), False


def build_surrogate(store: ComponentStore, qubit_id: str,
                    resonator_id: str) -> SurrogateModel:
    """Secant-based local sensitivities around one qubit claw and resonator."""
    q = store.qubits[qubit_id]
    res = store.resonators[resonator_id]
    notes: list[str] = []

    same_claw = [e for e in store.qubits.values() if e.claw_length == q.claw_length]
    pool = same_claw if len(same_claw) > 1 else list(store.qubits.values())
    dcq, fb = _secant([(e.cross_length, e.C_q) for e in pool],
                      q.cross_length, q.C_q, "proportional")
    if fb:
        notes.append(WARN_FALLBACK_SLOPE)

    same_cross = sorted(store.qubits.values(),
                        key=lambda e: abs(e.cross_length - q.cross_length))
    dcc, fb = _secant([(e.claw_length, e.C_c) for e in same_cross],
                      q.claw_length, q.C_c, "proportional")
    if fb:
        notes.append(WARN_FALLBACK_SLOPE)

    kin = [e for e in store.resonators.values()
           if e.res_type == res.res_type and e.coupling_kind == res.coupling_kind]
    dfb, fb = _secant([(e.cpw_length, e.f_bare) for e in kin],
                      res.cpw_length, res.f_bare, "inverse")
    if fb:
        notes.append(WARN_FALLBACK_SLOPE)

    c_rf_base = c_cg_base = dcrf = kappa_base = None
    if res.coupling_kind == "lumped":
        c_rf_base, c_cg_base = res.C_rf, res.C_cg
        dcrf, fb = _secant([(e.feedline_coupling_dim, e.C_rf) for e in kin],
                           res.feedline_coupling_dim, res.C_rf, "proportional")
        if fb:
            notes.append(WARN_FALLBACK_SLOPE)
    else:
        kappa_base = res.kappa

    return SurrogateModel(
        qubit_id=qubit_id, resonator_id=resonator_id,
        cross_base=q.cross_length, c_q_base=q.C_q, dcq_dcross=dcq,
        claw_base=q.claw_length, c_c_base=q.C_c, dcc_dclaw=dcc,
        cpw_base=res.cpw_length, f_bare_base=res.f_bare, dfbare_dcpw=dfb,
        fline_base=res.feedline_coupling_dim,
        res_type=res.res_type, coupling_kind=res.coupling_kind, z_c=res.Z_c,
        kappa_base=kappa_base, c_rf_base=c_rf_base, c_cg_base=c_cg_base,
        dcrf_dfline=dcrf, notes=tuple(notes))


def estimate_params(design: InterpolatedDesign, surrogate: SurrogateModel,
                    E_J: float, *, z0: float = 50.0) -> HamiltonianParams:
    """Parameters of a scaled geometry: surrogate circuit -> lumped pipeline.

    Mirrors `compose_candidates` exactly: charging energy from C_q + C_c,
    transmon diagonalization for (f_q, alpha), effective resonator
    capacitance from the surrogate f_bare, loading formulas for the lumped
    kind, quadratic feedline scaling of kappa for the distributed kind.
    Scale factors outside [0.5, 2.0] leave the surrogate trust region and
    emit a warning.
    """
    for name, s in design.scale_factors.items():
        if not TRUST_REGION[0] <= s <= TRUST_REGION[1]:
            warnings.warn(
                f"{WARN_TRUST_REGION}: {name}={s:.3f} outside "
                f"[{TRUST_REGION[0]}, {TRUST_REGION[1]}]", stacklevel=2)

    c_q = surrogate.c_q(design.cross_length)
    c_c = surrogate.c_c(design.claw_length)
    if c_q <= 0 or c_c <= 0:
        raise InterpolationError("surrogate produced non-physical capacitances")
    e_c = charging_energy(c_q + c_c)
    f_q, alpha = transmon_fq_alpha(E_J, e_c)

    f_bare = surrogate.f_bare(design.cpw_length)
    if f_bare <= 0:
        raise InterpolationError("surrogate produced non-physical f_bare")
    c_r = resonator_effective_capacitance(f_bare, surrogate.z_c, surrogate.res_type)
    if surrogate.coupling_kind == "lumped":
        c_rf = surrogate.c_rf(design.feedline_coupling_dim)
        if c_rf < 0:
            raise InterpolationError("surrogate produced negative C_rf")
        ratio = (design.feedline_coupling_dim / surrogate.fline_base
                 if surrogate.fline_base else 1.0)
        c_cg = surrogate.c_cg_base * ratio if surrogate.c_cg_base else 0.0
        f_r, kappa = coupled_res_freq_and_kappa(f_bare, c_r, c_rf, c_cg, z0)
    else:
        # kappa scales with the square of the feedline coupling dimension
        scale = design.feedline_coupling_dim / surrogate.fline_base
        f_r, kappa = f_bare, surrogate.kappa_base * scale * scale

    g = coupling_g_capacitive(c_c, c_q, c_r, f_r, E_J, e_c)
    return HamiltonianParams(f_q=f_q, alpha=alpha, f_r=f_r, kappa=kappa, g=g)


def _resonator_claw_cc(store: ComponentStore, claw_length: float) -> float:
    """Claw capacitance a resonator's claw would have, from the qubit records."""
    exact = [q.C_c for q in store.qubits.values() if q.claw_length == claw_length]
    if exact:
        return sum(exact) / len(exact)
    nearest = min(store.qubits.values(),
                  key=lambda q: abs(q.claw_length - claw_length))
    return nearest.C_c


def _composed_res_values(res: ResonatorEntry, z0: float) -> tuple[float, float]:
    """(f_r, kappa) a resonator contributes when composed stand-alone."""
    if res.coupling_kind == "distributed":
        return res.f_bare, res.kappa
    c_r = resonator_effective_capacitance(res.f_bare, res.Z_c, res.res_type)
    return coupled_res_freq_and_kappa(res.f_bare, c_r, res.C_rf, res.C_cg, z0)


def _pair_cost(target: TargetSpec, names: tuple[str, str],
               values: tuple[float, float]) -> float:
    """Target metric restricted to two terms (used by steps 3 and 6)."""
    terms = [getattr(target, n) for n in names]
    # if the user zero-weighted both terms the selection still needs a metric
    default = not any(t.weight > 0 for t in terms)
    total = 0.0
    for term, cand in zip(terms, values):
        tv = term.value
        w = 1.0 if default else term.weight
        r = (tv - cand) / tv
        if target.metric == "L1":
            total += w * abs(r)
        elif target.metric == "Chebyshev":
            total = max(total, w * abs(r))
        else:
            total += w * r * r
    return total


def interpolate_design(store: ComponentStore, target: TargetSpec,
                       resonator_type: str, *, z0: float = 50.0,
                       z_c_assumed: float = 50.0) -> InterpolatedDesign:
    """Best-guess geometry for a complete five-parameter target.

    The procedure: derive (E_J, E_C) and the implied capacitances from the
    target; warn below E_J/E_C = 30; pick the qubit claw minimizing the
    (alpha, g) cost at the target resonator frequency; scale cross length by
    alpha_sim/alpha_target and claw length by that same ratio times
    g_target/g_sim; keep only resonators of the requested type whose claw
    capacitance sits within 30% of the chosen claw's; pick the best on
    (f_r, kappa); scale resonator length by f_selected/f_target and the
    feedline dimension by sqrt(kappa_target/kappa), with kappa re-evaluated
    at the rescaled length; if the coupling or claw capacitance moved by
    more than 1% of the total resonator capacitance, recompute f_r and
    rescale the length once; return the design with surrogate-estimated
    parameters.
    """
    if resonator_type not in ("quarter", "half"):
        raise ValueError(f"resonator_type must be quarter|half, got {resonator_type!r}")
    t = target.require("f_q", "alpha", "f_r", "kappa", "g")
    if t["kappa"] <= 0:
        raise InterpolationError("interpolation needs a positive target kappa")
    if not store.qubits:
        raise InterpolationError("store has no qubit claws")

    warn_list: list[str] = []

    # step 1: E_J and the implied capacitances from the five targets
    e_j, e_c_t = find_EJ_EC(t["f_q"], t["alpha"])
    c_r_t = resonator_effective_capacitance(t["f_r"], z_c_assumed, resonator_type)

    # step 2
    if e_j / e_c_t < 30.0:
        warn_list.append(WARN_LOW_EJ_EC)

    # step 3: best claw on (alpha, g) at the target resonator frequency
    best_q: tuple[float, str] | None = None
    qubit_sims: dict[str, tuple[float, float]] = {}
    for qid in sorted(store.qubits):
        q = store.qubits[qid]
        try:
            e_c_q = charging_energy(q.C_q + q.C_c)
            _, alpha_sim = transmon_fq_alpha(e_j, e_c_q)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                g_sim = coupling_g_capacitive(q.C_c, q.C_q, c_r_t, t["f_r"], e_j, e_c_q)
        except (ValueError, ArithmeticError, RuntimeError):
            continue
        qubit_sims[qid] = (alpha_sim, g_sim)
        c = _pair_cost(target, ("alpha", "g"), (alpha_sim, g_sim))
        if best_q is None or (c, qid) < best_q:
            best_q = (c, qid)
    if best_q is None:
        raise InterpolationError("no usable qubit claw in the store")
    qubit = store.qubits[best_q[1]]
    alpha_sim, g_sim = qubit_sims[qubit.id]

    # step 4: cross and claw scaling
    s_cross = alpha_sim / t["alpha"]
    s_claw = (alpha_sim / t["alpha"]) * (t["g"] / g_sim)
    cross_new = qubit.cross_length * s_cross
    claw_new = qubit.claw_length * s_claw

    # step 5: resonators of the requested type with claw C_c within 30%
    candidates: list[ResonatorEntry] = []
    for rid in sorted(store.resonators):
        res = store.resonators[rid]
        if res.res_type != resonator_type:
            continue
        cc_res = _resonator_claw_cc(store, res.claw_length)
        if abs(cc_res - qubit.C_c) <= CLAW_FILTER * qubit.C_c:
            candidates.append(res)
    if not candidates:
        raise InterpolationError(
            f"no {resonator_type}-wave resonator has a claw capacitance within "
            f"{CLAW_FILTER:.0%} of the chosen claw (C_c={qubit.C_c:.3g} fF)")

    # step 6: best resonator on (f_r, kappa)
    best_r: tuple[float, str, float, float] | None = None
    for res in candidates:
        f_cand, kappa_cand = _composed_res_values(res, z0)
        c = _pair_cost(target, ("f_r", "kappa"), (f_cand, kappa_cand))
        if best_r is None or (c, res.id) < (best_r[0], best_r[1]):
            best_r = (c, res.id, f_cand, kappa_cand)
    res = store.resonators[best_r[1]]
    f_sel, kappa_sel = best_r[2], best_r[3]
    if kappa_sel <= 0:
        raise InterpolationError("selected resonator has zero linewidth")

    surrogate = build_surrogate(store, qubit.id, res.id)
    warn_list.extend(surrogate.notes)

    def make_design(cpw, fline, s_res, s_fline, recalc_applied):
        return InterpolatedDesign(
            base_qubit_id=qubit.id, base_resonator_id=res.id,
            base_coupler_id=None, cross_length=cross_new,
            claw_length=claw_new, cpw_length=cpw, feedline_coupling_dim=fline,
            scale_factors={"s_cross": s_cross, "s_claw": s_claw,
                           "s_res": s_res, "s_fline": s_fline},
            estimated=None, warnings=(), recalc_applied=recalc_applied,
            E_J=e_j)

    def quiet_estimate(design):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return estimate_params(design, surrogate, e_j, z0=z0)

    # step 7: length scaling toward the target frequency (f_bare ~ 1/length)
    s_res = f_sel / t["f_r"]
    cpw_new = res.cpw_length * s_res

    # step 8: feedline dimension scaling toward the target linewidth.
    # kappa ~ dim^2 at fixed frequency, but the step-7 rescale moved
    # omega_r, so the reference linewidth is re-evaluated at the new
    # length before inverting the quadratic.
    probe = make_design(cpw_new, res.feedline_coupling_dim, s_res, 1.0, False)
    kappa_ref = quiet_estimate(probe).kappa
    if kappa_ref <= 0:
        raise InterpolationError("selected resonator scales to zero linewidth")
    s_fline = math.sqrt(t["kappa"] / kappa_ref)
    fline_new = res.feedline_coupling_dim * s_fline

    # step 9: recompute f_r if the coupling element or claw moved enough
    c_c_new = surrogate.c_c(claw_new)
    cc_res_claw = _resonator_claw_cc(store, res.claw_length)
    c_r_sel = resonator_effective_capacitance(res.f_bare, res.Z_c, res.res_type)
    if res.coupling_kind == "lumped":
        c_rf_old = res.C_rf
        c_rf_new = surrogate.c_rf(fline_new)
        c_total = c_r_sel + res.C_rf + res.C_cg
    else:
        omega_sel = 2.0 * math.pi * f_sel * GHZ
        c_rf_old = math.sqrt(2.0 * (2.0 * math.pi * kappa_sel * MHZ)
                             * (c_r_sel * FF) / (z0 * omega_sel**2)) / FF
        c_rf_new = c_rf_old * s_fline
        c_total = c_r_sel
    delta_cc = abs(c_c_new - cc_res_claw)
    delta_crf = abs(c_rf_new - c_rf_old)
    recalc = (delta_cc > RECALC_FRACTION * c_total
              or delta_crf > RECALC_FRACTION * c_total)

    recalc_residual = None
    design = make_design(cpw_new, fline_new, s_res, s_fline, False)
    if recalc:
        # one corrective pass on the resonator length, residual recorded
        s_extra = quiet_estimate(design).f_r / t["f_r"]
        s_res *= s_extra
        cpw_new = res.cpw_length * s_res
        design = make_design(cpw_new, fline_new, s_res, s_fline, True)

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        estimated = estimate_params(design, surrogate, e_j, z0=z0)
    for w in caught:
        msg = str(w.message)
        if WARN_TRUST_REGION in msg and WARN_TRUST_REGION not in warn_list:
            warn_list.append(WARN_TRUST_REGION)
    if recalc:
        recalc_residual = estimated.f_r - t["f_r"]

    return InterpolatedDesign(
        base_qubit_id=qubit.id, base_resonator_id=res.id,
        base_coupler_id=None, cross_length=cross_new, claw_length=claw_new,
        cpw_length=cpw_new, feedline_coupling_dim=fline_new,
        scale_factors=design.scale_factors,
        estimated=estimated, warnings=tuple(warn_list),
        recalc_applied=recalc, recalc_residual=recalc_residual, E_J=e_j)
