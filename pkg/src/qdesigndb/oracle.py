"""Exact diagonalization of the qubit-resonator Hamiltonian.

Ground truth for the second-order shift formulas in `physics`: builds the
coupled transmon-resonator Hamiltonian in a truncated product Fock basis,
labels dressed states by overlap with the bare states, and reports the
numerically exact Lamb and dispersive shifts. Also carries the literal
four-term second-order energy correction for cross checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "JCSpec",
    "DressedLevels",
    "LabelingAmbiguityError",
    "CutoffConvergenceError",
    "jc_hamiltonian",
    "dressed_levels",
    "numerical_shifts",
    "second_order_E2",
]

# product-basis dimension past which the convergence loop gives up
_MAX_DIM = 6000


class LabelingAmbiguityError(RuntimeError):
    """No dressed state has majority overlap with a requested bare state.

    Raised in the strong-coupling regime where perturbative labeling is
    meaningless; distinct from cutoff non-convergence.
    """


class CutoffConvergenceError(RuntimeError):
    """Shifts kept changing by more than 0.1% as the Fock cutoffs doubled."""


@dataclass(frozen=True)
class JCSpec:
    """Inputs for the coupled-system diagonalization (linear GHz)."""

    f_r: float
    f_q: float
    alpha: float
    g: float
    N_r: int = 12
    N_q: int = 6

    def __post_init__(self) -> None:
        if self.N_r < 4:
            raise ValueError(f"resonator cutoff N_r must be >= 4, got {self.N_r}")
        if self.N_q < 3:
            raise ValueError(f"qubit cutoff N_q must be >= 3, got {self.N_q}")
        if self.f_r <= 0 or self.f_q <= 0:
            raise ValueError("frequencies must be positive")
        if self.g < 0:
            raise ValueError("g must be non-negative")


@dataclass(frozen=True)
class DressedLevels:
    """Dressed energies keyed by bare label (m photons, n qubit excitations)."""

    energies: dict[tuple[int, int], float]
    overlaps: dict[tuple[int, int], float]

    def energy(self, m: int, n: int) -> float:
        return self.energies[(m, n)]


def _destroy(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1.0, dim)), 1)


def jc_hamiltonian(spec: JCSpec, *, rwa: bool = False) -> np.ndarray:
    """Dense real-symmetric Hamiltonian in the product Fock basis.

    H = f_r (a'a + 1/2) + f_q b'b + (alpha/2) b'b (b'b - 1) + g (a - a')(b - b'),
    ordered so index m * N_q + n is resonator state m, qubit state n. The
    coupling term is a tensor product of two antisymmetric factors, hence
    real symmetric. With rwa=True only the excitation-conserving part
    -g (a b' + a' b) is kept.
    """
    a = _destroy(spec.N_r)
    b = _destroy(spec.N_q)
    n_a = np.diag(np.arange(spec.N_r, dtype=float))
    n_b = np.diag(np.arange(spec.N_q, dtype=float))
    eye_a = np.eye(spec.N_r)
    eye_b = np.eye(spec.N_q)

    h = spec.f_r * np.kron(n_a + 0.5 * eye_a, eye_b)
    h += np.kron(eye_a, spec.f_q * n_b + 0.5 * spec.alpha * (n_b @ n_b - n_b))
    if rwa:
        h += -spec.g * (np.kron(a, b.T) + np.kron(a.T, b))
    else:
        h += spec.g * np.kron(a - a.T, b - b.T)
    return h


def dressed_levels(spec: JCSpec, labels: list[tuple[int, int]] | None = None,
                   *, rwa: bool = False) -> DressedLevels:
    """Diagonalize and assign dressed states to bare labels by max overlap.

    Each requested label must be claimed with overlap > 0.5 (two states can
    never both exceed 0.5 on one bare state, so the assignment is unique);
    anything less raises LabelingAmbiguityError.
    """
    if labels is None:
        labels = [(m, n) for m in range(spec.N_r) for n in range(spec.N_q)]
    vals, vecs = np.linalg.eigh(jc_hamiltonian(spec, rwa=rwa))
    energies: dict[tuple[int, int], float] = {}
    overlaps: dict[tuple[int, int], float] = {}
    for m, n in labels:
        if not (0 <= m < spec.N_r and 0 <= n < spec.N_q):
            raise ValueError(f"label {(m, n)} outside cutoffs {(spec.N_r, spec.N_q)}")
        weights = vecs[m * spec.N_q + n, :] ** 2
        best = int(np.argmax(weights))
        if weights[best] <= 0.5:
            raise LabelingAmbiguityError(
                f"bare state {(m, n)} has max dressed overlap "
                f"{weights[best]:.3f} <= 0.5 (g too large for labeling)")
        energies[(m, n)] = float(vals[best])
        overlaps[(m, n)] = float(weights[best])
    return DressedLevels(energies=energies, overlaps=overlaps)


def _shifts_at(spec: JCSpec, rwa: bool) -> tuple[float, float]:
    lv = dressed_levels(spec, [(0, 0), (1, 0), (0, 1), (1, 1)], rwa=rwa)
    chi_l = (lv.energy(1, 0) - lv.energy(0, 0)) - spec.f_r
    chi = (lv.energy(1, 1) - lv.energy(0, 1)) - (lv.energy(1, 0) - lv.energy(0, 0))
    return chi_l, chi


def _stable(a: float, b: float) -> bool:
    scale = max(abs(a), abs(b))
    return scale < 1e-15 or abs(a - b) <= 1e-3 * scale


def numerical_shifts(spec: JCSpec, *, rwa: bool = False) -> tuple[float, float]:
    """Numerically exact (chi_L, chi) in GHz from dressed energies at m = 0.

    chi_L = (E~_10 - E~_00) - f_r and chi = (E~_11 - E~_01) - (E~_10 - E~_00).
    The result is accepted only once doubling either Fock cutoff moves both
    shifts by less than 0.1%.
    """
    n_r, n_q = spec.N_r, spec.N_q
    while n_r * n_q <= _MAX_DIM:
        base = JCSpec(spec.f_r, spec.f_q, spec.alpha, spec.g, n_r, n_q)
        cur = _shifts_at(base, rwa)
        up_r = _shifts_at(JCSpec(spec.f_r, spec.f_q, spec.alpha, spec.g,
                                 2 * n_r, n_q), rwa)
        up_q = _shifts_at(JCSpec(spec.f_r, spec.f_q, spec.alpha, spec.g,
                                 n_r, 2 * n_q), rwa)
        if all(_stable(cur[i], up_r[i]) and _stable(cur[i], up_q[i]) for i in (0, 1)):
            return cur
        n_r, n_q = 2 * n_r, 2 * n_q
    raise CutoffConvergenceError(
        f"shifts not stable to 0.1% below product dimension {_MAX_DIM}")


def second_order_E2(m: int, n: int, g: float, f_q: float, f_r: float,
                    alpha: float) -> float:
    """Literal second-order correction to the bare level (m, n), in GHz.

    E2_mn = g^2 ( mn/(Sigma+(n-1)a) + m(n+1)/(Delta-na)
                  - (m+1)n/(Delta-(n-1)a) - (m+1)(n+1)/(Sigma+na) )
    with Delta = f_r - f_q, Sigma = f_r + f_q. The first and last terms stem
    from the counter-rotating couplings.
    """
    if m < 0 or n < 0:
        raise ValueError("level indices must be non-negative")
    delta = f_r - f_q
    sigma = f_r + f_q
    denoms = (sigma + (n - 1) * alpha, delta - n * alpha,
              delta - (n - 1) * alpha, sigma + n * alpha)
    for d in denoms:
        if abs(d) < 1e-9:
            raise ValueError(f"resonant denominator {d} in second-order correction")
    return g * g * (m * n / denoms[0] + m * (n + 1) / denoms[1]
                    - (m + 1) * n / denoms[2] - (m + 1) * (n + 1) / denoms[3])
