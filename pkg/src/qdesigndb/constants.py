"""Physical constants (2018 CODATA exact values) and unit conventions.

Unit conventions used across the package:

* frequencies are linear (f = omega / 2pi) in GHz, linewidths in MHz
* energies are quoted as E/h in GHz
* capacitances in fF, inductances in nH, currents in nA, impedances in Ohm

Formulas written in angular frequency / hbar = 1 form are converted at the
call site; each conversion is noted where it happens.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class PhysConstants:
    """Elementary charge, Planck constants and flux quanta (SI)."""

    e: float = 1.602176634e-19        # C
    h: float = 6.62607015e-34         # J s
    hbar: float = 6.62607015e-34 / (2.0 * math.pi)
    Phi0: float = 6.62607015e-34 / (2.0 * 1.602176634e-19)   # h / 2e, Wb
    phi0: float = 6.62607015e-34 / (4.0 * math.pi * 1.602176634e-19)  # Phi0 / 2pi

    def __post_init__(self) -> None:
        if not math.isclose(self.Phi0, self.h / (2.0 * self.e), rel_tol=1e-12):
            raise ValueError("Phi0 must equal h/(2e)")
        if not math.isclose(self.phi0, self.Phi0 / (2.0 * math.pi), rel_tol=1e-12):
            raise ValueError("phi0 must equal Phi0/(2pi)")


CONSTANTS = PhysConstants()

GHZ = 1e9
MHZ = 1e6
FF = 1e-15
NH = 1e-9
NA = 1e-9
