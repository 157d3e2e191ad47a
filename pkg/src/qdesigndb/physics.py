"""Closed-form circuit-QED physics and experimental-extraction utilities.

Covers transmon spectra in the charge basis, inversion from target
(f_q, alpha) back to (E_J, E_C), capacitance/energy conversions, lumped
resonator algebra, the capacitive coupling formula, second-order Lamb and
dispersive shifts with counter-rotating terms retained, flux tuning curves
and avoided-crossing fits.

All functions are pure; see `constants` for unit conventions.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal
from scipy.optimize import least_squares

from .constants import CONSTANTS, FF, GHZ, MHZ, NA

__all__ = [
    "CircuitParams",
    "HamiltonianParams",
    "TunableCouplerParams",
    "AvoidedCrossingFit",
    "ConvergenceError",
    "DegenerateDetuningError",
    "transmon_levels",
    "transmon_fq_alpha",
    "transmon_fq_alpha_approx",
    "find_EJ_EC",
    "charging_energy",
    "capacitance_of",
    "ej_from_ic",
    "resonator_effective_capacitance",
    "coupling_g_capacitive",
    "perturbative_shifts",
    "g_from_lamb",
    "coupled_res_freq_and_kappa",
    "flux_tuned_fq",
    "avoided_crossing_branches",
    "fit_avoided_crossing",
    "alpha_from_spectroscopy",
]


class ConvergenceError(RuntimeError):
    """An iterative numerical routine failed to converge."""


class DegenerateDetuningError(ValueError):
    """Detunings hit a pole of the second-order shift formulas."""


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CircuitParams:
    """Lumped circuit quantities for one qubit-resonator device.

    Capacitances in fF, E_J / E_C as E/h in GHz, I_0 in nA, L in nH.
    """

    C_q: float
    C_c: float
    C_r: float
    E_J: float
    E_C: float
    C_rf: float | None = None
    C_cg: float | None = None
    L: float | None = None
    I_0: float | None = None

    def __post_init__(self) -> None:
        for name in ("C_q", "C_c", "C_r", "C_rf", "C_cg", "L"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValueError(f"{name} must be positive, got {v}")
        if self.E_C <= 0:
            raise ValueError(f"E_C must be positive, got {self.E_C}")
        if self.E_J < 0:
            raise ValueError(f"E_J must be non-negative, got {self.E_J}")
        if self.I_0 is not None:
            expected = ej_from_ic(self.I_0)
            if abs(expected - self.E_J) > 1e-9 * max(abs(expected), abs(self.E_J)):
                raise ValueError(
                    f"inconsistent junction: E_J={self.E_J} GHz but I_0={self.I_0} nA "
                    f"implies {expected} GHz"
                )

    @property
    def E_L(self) -> float:
        """Inductive energy phi0^2/(L h) as E/h in GHz (requires L)."""
        if self.L is None:
            raise ValueError("L not set")
        return CONSTANTS.phi0**2 / (self.L * 1e-9 * CONSTANTS.h) / GHZ


@dataclass(frozen=True)
class HamiltonianParams:
    """The five device-level target quantities, all linear frequencies.

    f_q, f_r, g in GHz; kappa (full width) in MHz; alpha in GHz and
    negative for a transmon.
    """

    f_q: float
    alpha: float
    f_r: float
    kappa: float
    g: float

    def __post_init__(self) -> None:
        if self.f_q <= 0 or self.f_r <= 0:
            raise ValueError("f_q and f_r must be positive")
        if self.kappa < 0:
            raise ValueError("kappa must be non-negative")
        if self.g < 0:
            raise ValueError("g must be non-negative")
        if self.alpha >= 0:
            raise ValueError("alpha must be negative for a transmon")

    # Delta and Sigma are pure derivations, never stored.
    @property
    def delta(self) -> float:
        return self.f_r - self.f_q

    @property
    def sigma(self) -> float:
        return self.f_r + self.f_q


@dataclass(frozen=True)
class TunableCouplerParams:
    """SQUID-tunable coupler model: f(phi) = f_max (cos^2 + d^2 sin^2)^(1/4)."""

    f_max: float
    d: float
    f_r: float
    g: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.d <= 1.0:
            raise ValueError(f"asymmetry d must lie in [0, 1], got {self.d}")
        if self.f_max <= 0:
            raise ValueError("f_max must be positive")


# ---------------------------------------------------------------------------
# transmon spectra
# ---------------------------------------------------------------------------

def transmon_levels(E_J: float, E_C: float, n_g: float = 0.0,
                    n_cut: int = 30, k: int = 5) -> np.ndarray:
    """Lowest k transmon eigenenergies (GHz) in the charge basis.

    Diagonalizes the symmetric tridiagonal matrix with diagonal
    4 E_C (n - n_g)^2 for n in [-n_cut, n_cut] and off-diagonal -E_J/2.
    """
    if E_C <= 0:
        raise ValueError(f"E_C must be positive, got {E_C}")
    if E_J < 0:
        raise ValueError(f"E_J must be non-negative, got {E_J}")
    if n_cut < 10:
        raise ValueError(f"n_cut must be at least 10, got {n_cut}")
    if not 1 <= k <= 2 * n_cut - 1:
        raise ValueError(f"k={k} out of range for n_cut={n_cut}")
    n = np.arange(-n_cut, n_cut + 1, dtype=float)
    diag = 4.0 * E_C * (n - n_g) ** 2
    off = np.full(2 * n_cut, -E_J / 2.0)
    levels = eigvalsh_tridiagonal(diag, off, select="i", select_range=(0, k - 1))
    return np.sort(levels)


def transmon_fq_alpha(E_J: float, E_C: float) -> tuple[float, float]:
    """Exact (f_q, alpha) in GHz from charge-basis diagonalization at n_g = 0.

    The charge cutoff starts at 30 and doubles until f_q and alpha are
    stable to 1e-9 relative.
    """
    if E_C <= 0 or E_J / E_C <= 1:
        raise ValueError(f"require E_J/E_C > 1, got E_J={E_J}, E_C={E_C}")

    def once(n_cut: int) -> tuple[float, float]:
        lv = transmon_levels(E_J, E_C, 0.0, n_cut, 3)
        return lv[1] - lv[0], (lv[2] - lv[1]) - (lv[1] - lv[0])

    n_cut = 30
    prev = once(n_cut)
    while n_cut <= 1920:
        n_cut *= 2
        cur = once(n_cut)
        if (abs(cur[0] - prev[0]) <= 1e-9 * abs(cur[0])
                and abs(cur[1] - prev[1]) <= 1e-9 * max(abs(cur[1]), 1e-12)):
            return cur
        prev = cur
    raise ConvergenceError(f"charge-basis spectrum not converged for E_J={E_J}, E_C={E_C}")


def transmon_fq_alpha_approx(E_J: float, E_C: float) -> tuple[float, float]:
    """Transmon-limit closed form: f_q = sqrt(8 E_J E_C) - E_C, alpha = -E_C."""
    if E_J <= 0 or E_C <= 0:
        raise ValueError("E_J and E_C must be positive")
    return math.sqrt(8.0 * E_J * E_C) - E_C, -E_C


def find_EJ_EC(f_q: float, alpha: float, *, approx: bool = False,
               tol: float = 1e-12, max_iter: int = 100) -> tuple[float, float]:
    """Invert (f_q, alpha) -> (E_J, E_C) by damped Newton on the exact spectrum.

    Initialized from the closed-form inversion E_C = -alpha,
    E_J = (f_q + E_C)^2 / (8 E_C). With approx=True the closed form itself
    is the forward model, so the initial guess is returned directly.

    Raises ConvergenceError when the target is not reachable, and
    ValueError when the solution leaves E_J/E_C in (1, 1e6).
    """
    if f_q <= 0:
        raise ValueError("f_q must be positive")
    if alpha >= 0:
        raise ValueError("alpha must be negative")
    if abs(alpha) >= f_q:
        raise ValueError("require |alpha| < f_q")

    ec0 = -alpha
    ej0 = (f_q + ec0) ** 2 / (8.0 * ec0)
    if approx:
        return ej0, ec0

    target = np.array([f_q, alpha])
    x = np.array([ej0, ec0])

    def residual(v: np.ndarray) -> np.ndarray:
        fq, al = transmon_fq_alpha(v[0], v[1])
        return np.array([fq, al]) - target

    r = residual(x)
    for _ in range(max_iter):
        if np.all(np.abs(r) <= tol * np.abs(target)):
            break
        # finite-difference Jacobian
        jac = np.empty((2, 2))
        for j in range(2):
            h = 1e-7 * max(abs(x[j]), 1e-6)
            xp = x.copy()
            xp[j] += h
            jac[:, j] = (residual(xp) - r) / h
        try:
            step = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError("singular Jacobian in find_EJ_EC") from exc
        # damping: halve the step on residual increase, up to 20 times
        lam = 1.0
        for _ in range(20):
            xn = x + lam * step
            if xn[1] > 0 and xn[0] / xn[1] > 1.0:
                rn = residual(xn)
                if np.linalg.norm(rn) < np.linalg.norm(r):
                    break
            lam *= 0.5
        else:
            raise ConvergenceError(
                f"find_EJ_EC stalled at E_J={x[0]:.6g}, E_C={x[1]:.6g} "
                f"for target f_q={f_q}, alpha={alpha}"
            )
        x, r = xn, rn
    else:
        raise ConvergenceError(
            f"find_EJ_EC did not converge in {max_iter} iterations "
            f"for f_q={f_q}, alpha={alpha}"
        )
    ratio = x[0] / x[1]
    if not 1.0 < ratio < 1e6:
        raise ValueError(f"solution E_J/E_C={ratio:.3g} outside (1, 1e6)")
    return float(x[0]), float(x[1])


# ---------------------------------------------------------------------------
# energy / capacitance conversions
# ---------------------------------------------------------------------------

def charging_energy(C: float) -> float:
    """E_C = e^2 / (2 C h) in GHz for C in fF."""
    if C <= 0:
        raise ValueError(f"capacitance must be positive, got {C}")
    return CONSTANTS.e**2 / (2.0 * C * FF * CONSTANTS.h) / GHZ


def capacitance_of(E_C: float) -> float:
    """Inverse of `charging_energy`: capacitance in fF for E_C in GHz."""
    if E_C <= 0:
        raise ValueError(f"E_C must be positive, got {E_C}")
    return CONSTANTS.e**2 / (2.0 * E_C * GHZ * CONSTANTS.h) / FF


def ej_from_ic(I_0: float) -> float:
    """Josephson energy phi0 I_0 / h in GHz for critical current in nA."""
    if I_0 < 0:
        raise ValueError(f"critical current must be non-negative, got {I_0}")
    return CONSTANTS.phi0 * I_0 * NA / CONSTANTS.h / GHZ


# ---------------------------------------------------------------------------
# lumped resonator algebra
# ---------------------------------------------------------------------------

def resonator_effective_capacitance(f_r: float, Z_c: float, mode: str) -> float:
    """Effective lumped capacitance pi/(m omega_r Z_c) of a CPW resonator, fF.

    m = 4 for a quarter-wave resonator, m = 2 for a half-wave one.
    """
    if f_r <= 0 or Z_c <= 0:
        raise ValueError("f_r and Z_c must be positive")
    m = {"quarter": 4.0, "half": 2.0}.get(mode)
    if m is None:
        raise ValueError(f"mode must be 'quarter' or 'half', got {mode!r}")
    omega = 2.0 * math.pi * f_r * GHZ
    return math.pi / (m * omega * Z_c) / FF


def coupled_res_freq_and_kappa(f_prime: float, C_r: float, C_rf: float,
                               C_cg: float, Z_0: float) -> tuple[float, float]:
    """Feedline-loaded resonator frequency (GHz) and linewidth (MHz).

    f_r = sqrt(C_r / (C_r + C_rf + C_cg)) f', and
    kappa = Z_0 omega_r^2 C_rf^2 / (2 (C_r + C_rf + C_cg)) evaluated in
    angular units, returned as a linear full width (divided by 2pi).
    """
    if f_prime <= 0 or C_r <= 0 or Z_0 <= 0:
        raise ValueError("f_prime, C_r and Z_0 must be positive")
    if C_rf < 0 or C_cg < 0:
        raise ValueError("C_rf and C_cg must be non-negative")
    c_tot = C_r + C_rf + C_cg
    f_r = math.sqrt(C_r / c_tot) * f_prime
    omega_r = 2.0 * math.pi * f_r * GHZ
    kappa_angular = 0.5 * Z_0 * omega_r**2 * (C_rf * FF) ** 2 / (c_tot * FF)
    return f_r, kappa_angular / (2.0 * math.pi) / MHZ


def coupling_g_capacitive(C_c: float, C_q: float, C_r: float, f_r: float,
                          E_J: float, E_C: float) -> float:
    """Capacitive qubit-resonator coupling (C_c/C_q) sqrt(e^2 w_r / C_r) (E_J/8E_C)^(1/4).

    The hbar = 1 form is dimensionally silent; the factor is restored as
    sqrt(e^2 omega_r / (hbar C_r)), which gives an angular rate, and the
    result is returned as a linear frequency in GHz. Valid for weak
    coupling C_c << C_q, C_r; a warning is emitted past C_c > 0.2 min(C_q, C_r).
    """
    if C_c < 0:
        raise ValueError("C_c must be non-negative")
    if min(C_q, C_r, f_r, E_J, E_C) <= 0:
        raise ValueError("C_q, C_r, f_r, E_J and E_C must be positive")
    if C_c > 0.2 * min(C_q, C_r):
        warnings.warn(
            f"C_c={C_c} fF is not small against C_q={C_q}, C_r={C_r}; "
            "weak-coupling formula degrades", stacklevel=2)
    omega_r = 2.0 * math.pi * f_r * GHZ
    rate = math.sqrt(CONSTANTS.e**2 * omega_r / (CONSTANTS.hbar * C_r * FF))
    # sqrt(sqrt(...)) rather than **0.25 so scalar and vectorized paths agree exactly
    g_angular = (C_c / C_q) * rate * math.sqrt(math.sqrt(E_J / (8.0 * E_C)))
    return g_angular / (2.0 * math.pi) / GHZ


# ---------------------------------------------------------------------------
# second-order shifts
# ---------------------------------------------------------------------------

def _check_detunings(delta: float, sigma: float, alpha: float) -> None:
    if abs(delta) < 1e-9:
        raise DegenerateDetuningError("qubit and resonator are resonant (Delta = 0)")
    if abs(delta - alpha) < 1e-9:
        raise DegenerateDetuningError("straddling point Delta = alpha")
    if abs(sigma + alpha) < 1e-9:
        raise DegenerateDetuningError("sum-frequency pole Sigma = -alpha")


def perturbative_shifts(g: float, f_q: float, f_r: float,
                        alpha: float) -> tuple[float, float]:
    """Lamb shift chi_L and full dispersive shift chi (GHz), beyond the RWA.

    chi_L = g^2/Delta - g^2/Sigma and
    chi   = 2 g^2 (alpha/(Delta (Delta - alpha)) + alpha/(Sigma (Sigma + alpha))),
    with Delta = f_r - f_q and Sigma = f_r + f_q. chi is the full resonator
    shift between qubit ground and excited states.
    """
    delta = f_r - f_q
    sigma = f_r + f_q
    _check_detunings(delta, sigma, alpha)
    chi_l = g * g / delta - g * g / sigma
    chi = 2.0 * g * g * (alpha / (delta * (delta - alpha))
                         + alpha / (sigma * (sigma + alpha)))
    return chi_l, chi


def g_from_lamb(chi_L: float, f_q: float, f_r: float) -> float:
    """Coupling strength from a measured Lamb shift, g = sqrt(chi_L / (1/Delta - 1/Sigma)).

    This keeps the counter-rotating 1/Sigma term; dropping it (the common
    RWA extraction g = sqrt(chi_L Delta)) underestimates g when Delta and
    Sigma are comparable.
    """
    delta = f_r - f_q
    sigma = f_r + f_q
    if abs(delta) < 1e-12:
        raise DegenerateDetuningError("qubit and resonator are resonant (Delta = 0)")
    denom = 1.0 / delta - 1.0 / sigma
    if chi_L * denom <= 0:
        raise ValueError(
            f"chi_L={chi_L} inconsistent with detuning sign (Delta={delta})")
    return math.sqrt(chi_L / denom)


# ---------------------------------------------------------------------------
# flux tuning and avoided crossings
# ---------------------------------------------------------------------------

def flux_tuned_fq(phi, f_max: float, d: float):
    """Flux-tuned frequency f_max (cos^2 phi + d^2 sin^2 phi)^(1/4), phi in radians."""
    if not 0.0 <= d <= 1.0:
        raise ValueError(f"asymmetry d must lie in [0, 1], got {d}")
    if f_max <= 0:
        raise ValueError("f_max must be positive")
    c, s = np.cos(phi), np.sin(phi)
    return f_max * (c * c + d * d * s * s) ** 0.25


def avoided_crossing_branches(f_qubit, f_r, g):
    """Both branches [sqrt((f_r+f_q)^2+4g^2) +/- sqrt((f_r-f_q)^2+4g^2)]/2.

    Returns (f_upper, f_lower) with f_upper >= f_lower. Accepts scalars or
    arrays.
    """
    if np.any(np.asarray(f_qubit) <= 0) or np.any(np.asarray(f_r) <= 0):
        raise ValueError("frequencies must be positive")
    if np.any(np.asarray(g) < 0):
        raise ValueError("g must be non-negative")
    s_plus = np.sqrt((f_r + f_qubit) ** 2 + 4.0 * g * g)
    s_minus = np.sqrt((f_r - f_qubit) ** 2 + 4.0 * g * g)
    return (s_plus + s_minus) / 2.0, (s_plus - s_minus) / 2.0


@dataclass(frozen=True)
class AvoidedCrossingFit:
    """Least-squares fit of flux-swept resonator spectroscopy."""

    params: TunableCouplerParams
    rms_residual: float            # GHz
    stderr: dict[str, float] = field(default_factory=dict)


def fit_avoided_crossing(points: list[tuple[float, float]],
                         initial_guess: TunableCouplerParams) -> AvoidedCrossingFit:
    """Fit (phi, f_observed) data to the flux-tuned avoided-crossing model.

    The model composes `flux_tuned_fq` with `avoided_crossing_branches`;
    for every data point the branch nearer the observation is used, and the
    assignment is re-evaluated at each iteration. Returns the fitted
    parameters, the RMS residual and per-parameter standard errors
    estimated from the Jacobian at the solution.
    """
    if len(points) < 4:
        raise ValueError("need at least 4 points to fit 4 parameters")
    phi = np.asarray([p[0] for p in points], dtype=float)
    f_obs = np.asarray([p[1] for p in points], dtype=float)
    if np.ptp(phi) < math.pi / 4:
        raise ValueError("flux points must span at least a quarter period")
    if np.allclose(phi, phi[0]):
        raise ValueError("degenerate data: all flux values identical")

    def residual(x: np.ndarray) -> np.ndarray:
        f_max, d, f_r, g = x
        fq = flux_tuned_fq(phi, f_max, abs(d))
        upper, lower = avoided_crossing_branches(fq, f_r, abs(g))
        model = np.where(np.abs(upper - f_obs) <= np.abs(lower - f_obs), upper, lower)
        return model - f_obs

    x0 = np.array([initial_guess.f_max, initial_guess.d,
                   initial_guess.f_r, initial_guess.g])
    lo = [1e-6, 0.0, 1e-6, 0.0]
    hi = [np.inf, 1.0, np.inf, np.inf]
    sol = least_squares(residual, x0, bounds=(lo, hi),
                        xtol=1e-15, ftol=1e-15, gtol=1e-15)
    if not sol.success:
        raise ConvergenceError(f"avoided-crossing fit failed: {sol.message}")

    res = sol.fun
    dof = max(len(points) - 4, 1)
    s2 = float(res @ res) / dof
    jtj = sol.jac.T @ sol.jac
    try:
        cov = np.linalg.inv(jtj) * s2
        err = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    except np.linalg.LinAlgError:
        err = np.full(4, np.nan)
    names = ("f_max", "d", "f_r", "g")
    params = TunableCouplerParams(f_max=float(sol.x[0]), d=float(abs(sol.x[1])),
                                  f_r=float(sol.x[2]), g=float(abs(sol.x[3])))
    return AvoidedCrossingFit(
        params=params,
        rms_residual=float(np.sqrt(np.mean(res**2))),
        stderr={n: float(e) for n, e in zip(names, err)},
    )


def alpha_from_spectroscopy(f_01: float, f_two_photon: float) -> float:
    """Anharmonicity 2 f_2ph - 2 f_01 from the one- and two-photon lines (GHz)."""
    if f_01 <= 0 or f_two_photon <= 0:
        raise ValueError("transition frequencies must be positive")
    return 2.0 * f_two_photon - 2.0 * f_01
