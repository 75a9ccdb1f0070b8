"""Simulator and thermodynamic auditor for viscoelastic fluid models.

Submodules: mat3 (3x3 tensor kernels), rng (pinned deterministic generator),
kinematics (homogeneous deformation protocols), constitutive (models, energy,
stresses, flow rules), integrate (RK4, Duhamel, Riccati drivers), thermo
(dissipation, admissible sets, witnesses, trajectory audits), scenario and
cli (reproducible runs and file emission).
"""

from .constitutive import (
    MaterialParams,
    NonlinearOldroydB,
    OldroydA,
    OldroydB,
    PolynomialOldroydB,
    ZarembaJaumann,
)
from .integrate import (
    Trajectory,
    duhamel_oldroyd_b,
    integrate_eulerian,
    integrate_lagrangian,
    riccati_homogeneous,
)
from .scenario import Scenario, run_batch, run_scenario
from .thermo import ThermoReport, audit, negative_dissipation_witness

__version__ = "0.1.0"

__all__ = [
    "MaterialParams",
    "NonlinearOldroydB",
    "OldroydA",
    "OldroydB",
    "PolynomialOldroydB",
    "Scenario",
    "ThermoReport",
    "Trajectory",
    "ZarembaJaumann",
    "audit",
    "duhamel_oldroyd_b",
    "integrate_eulerian",
    "integrate_lagrangian",
    "negative_dissipation_witness",
    "riccati_homogeneous",
    "run_batch",
    "run_scenario",
    "__version__",
]
