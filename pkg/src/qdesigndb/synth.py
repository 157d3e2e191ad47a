"""Deterministic synthetic component sets for desk-scale testing.

Stands in for finite-element simulation output: capacitances and
frequencies follow simple, monotone geometry models (C_q affine in cross
length, C_c affine in claw length, f_bare inversely proportional to
resonator length, C_rf proportional to the feedline dimension, distributed
kappa quadratic in it). The model coefficients and the seed are recorded in
the store manifest so tests can recover the ground truth.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .physics import g_from_lamb, perturbative_shifts
from .store import (
    ComponentStore,
    CouplerEntry,
    QubitClawEntry,
    ResonatorEntry,
    ValidatedDeviceEntry,
    write_components,
)

__all__ = ["SynthCoefficients", "SynthConfig", "synth_generate"]


@dataclass(frozen=True)
class SynthCoefficients:
    """Geometry-to-circuit model; units fF, um, GHz, MHz."""

    c_q_offset: float = 20.0     # fF
    c_q_slope: float = 0.35      # fF per um of cross length
    c_c_offset: float = 0.4      # fF
    c_c_slope: float = 0.045     # fF per um of claw length
    f_scale: float = 42000.0     # GHz um; f_bare = f_scale / cpw_length
    c_rf_slope: float = 0.11     # fF per um of feedline/finger dimension
    c_cg_slope: float = 0.045    # fF per um of finger dimension
    kappa_scale: float = 2.0e-4  # MHz per um^2; distributed kappa


@dataclass(frozen=True)
class SynthConfig:
    """Counts, geometry ranges and model coefficients for one synthetic set."""

    n_qubit_claws: int = 160
    n_quarter_wave: int = 60     # distributed coupling
    n_half_wave: int = 40        # lumped coupling
    n_couplers: int = 0
    n_validated: int = 0
    cross_length: tuple[float, float] = (150.0, 300.0)
    claw_lengths: tuple[float, ...] = (60.0, 90.0, 120.0, 150.0, 180.0, 210.0, 240.0)
    claw_width: tuple[float, float] = (10.0, 16.0)
    gap: tuple[float, float] = (5.0, 6.0)
    cpw_length: tuple[float, float] = (5600.0, 8400.0)
    feedline_dim: tuple[float, float] = (30.0, 120.0)
    z_c: float = 50.0
    coeffs: SynthCoefficients = field(default_factory=SynthCoefficients)

    def __post_init__(self) -> None:
        for name in ("n_qubit_claws", "n_quarter_wave", "n_half_wave",
                     "n_couplers", "n_validated"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        for name in ("cross_length", "claw_width", "gap", "cpw_length",
                     "feedline_dim"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise ValueError(f"invalid range for {name}: ({lo}, {hi})")
        if not self.claw_lengths or any(c <= 0 for c in self.claw_lengths):
            raise ValueError("claw_lengths must be positive")

    @classmethod
    def production_counts(cls) -> "SynthConfig":
        """Component counts at the scale of the full simulated library."""
        return cls(n_qubit_claws=1934, n_quarter_wave=693,
                   n_half_wave=406, n_couplers=430)


_SIM_META = {"solver": "synthetic", "mesh_max": 3.0, "conv_tol": 0.05,
             "min_passes": 3}


def _provenance(seed: int) -> dict:
    return {"validated": False, "reference": f"synthetic seed={seed}"}


def synth_generate(config: SynthConfig, seed: int,
                   out_dir: str | Path) -> ComponentStore:
    """Write a synthetic store to out_dir; byte-identical for a given seed."""
    rng = np.random.default_rng(seed)
    co = config.coeffs
    prov = _provenance(seed)

    def uniform(lo_hi: tuple[float, float], n: int) -> np.ndarray:
        return rng.uniform(lo_hi[0], lo_hi[1], n)

    qubits: dict[str, QubitClawEntry] = {}
    cross = np.sort(uniform(config.cross_length, config.n_qubit_claws))
    widths = uniform(config.claw_width, config.n_qubit_claws)
    gaps = uniform(config.gap, config.n_qubit_claws)
    for i in range(config.n_qubit_claws):
        claw = config.claw_lengths[i % len(config.claw_lengths)]
        rec = {
            "id": f"q{i:05d}",
            "geometry": {"cross_length": float(cross[i]), "claw_length": claw,
                         "claw_width": float(widths[i]), "gap": float(gaps[i])},
            "cmatrix": {"C_q": co.c_q_offset + co.c_q_slope * float(cross[i]),
                        "C_c": co.c_c_offset + co.c_c_slope * claw},
            "sim_meta": dict(_SIM_META),
            "provenance": dict(prov),
        }
        entry = QubitClawEntry.from_record(rec)
        qubits[entry.id] = entry

    resonators: dict[str, ResonatorEntry] = {}
    n_res = config.n_quarter_wave + config.n_half_wave
    cpw = uniform(config.cpw_length, n_res)
    fdim = uniform(config.feedline_dim, n_res)
    for i in range(n_res):
        lumped = i >= config.n_quarter_wave
        claw = config.claw_lengths[i % len(config.claw_lengths)]
        f_bare = co.f_scale / float(cpw[i])
        results: dict[str, float] = {"f_bare": f_bare}
        if lumped:
            results["C_rf"] = co.c_rf_slope * float(fdim[i])
            results["C_cg"] = co.c_cg_slope * float(fdim[i])
        else:
            results["kappa"] = co.kappa_scale * float(fdim[i]) ** 2
        rec = {
            "id": f"r{i:05d}",
            "res_type": "half" if lumped else "quarter",
            "coupling_kind": "lumped" if lumped else "distributed",
            "geometry": {"cpw_length": float(cpw[i]), "claw_length": claw,
                         "feedline_coupling_dim": float(fdim[i])},
            "results": results,
            "Z_c": config.z_c,
            "sim_meta": dict(_SIM_META),
            "provenance": dict(prov),
        }
        entry = ResonatorEntry.from_record(rec)
        resonators[entry.id] = entry

    couplers: dict[str, CouplerEntry] = {}
    finger = uniform(config.feedline_dim, config.n_couplers)
    for i in range(config.n_couplers):
        rec = {
            "id": f"c{i:05d}",
            "geometry": {"finger_dim": float(finger[i])},
            "cmatrix": {"C_rf": co.c_rf_slope * float(finger[i]),
                        "C_cg": co.c_cg_slope * float(finger[i])},
            "sim_meta": dict(_SIM_META),
            "provenance": dict(prov),
        }
        entry = CouplerEntry.from_record(rec)
        couplers[entry.id] = entry

    validated: dict[str, ValidatedDeviceEntry] = {}
    f01 = uniform((3.5, 4.5), config.n_validated)
    alpha = uniform((-250.0, -150.0), config.n_validated)
    fres = uniform((6.0, 7.2), config.n_validated)
    kap = uniform((0.1, 2.0), config.n_validated)
    gmhz = uniform((40.0, 70.0), config.n_validated)
    for i in range(config.n_validated):
        chi_l_ghz, _ = perturbative_shifts(float(gmhz[i]) * 1e-3, float(f01[i]),
                                           float(fres[i]), float(alpha[i]) * 1e-3)
        chi_l = chi_l_ghz * 1e3
        g_cons = g_from_lamb(chi_l * 1e-3, float(f01[i]), float(fres[i])) * 1e3
        rec = {
            "id": f"v{i:05d}",
            "measured": {"f_01": float(f01[i]), "alpha": float(alpha[i]),
                         "f_res": float(fres[i]), "kappa": float(kap[i]),
                         "chi_L": chi_l, "g_extracted": g_cons},
            "components": {},
        }
        entry = ValidatedDeviceEntry.from_record(rec)
        validated[entry.id] = entry

    manifest = {
        "schema_version": 1,
        "generator": {"seed": seed, "config": asdict(config)},
    }
    store = ComponentStore.build(qubits, resonators, couplers, validated,
                                 manifest=manifest)
    write_components(store, out_dir)
    return store
