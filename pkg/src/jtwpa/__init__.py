"""Dual-pump Josephson traveling-wave parametric amplifier workbench.

Simulation (dispersion, phase matching, gain, squeezing under loss) and the
measurement-side pipeline (quadrature analysis, noise calibration).
"""

from .analysis import (
    QuadratureAnalyzer,
    QuadratureDataset,
    build_chain,
    estimate_variances,
    to_photon_basis,
)
from .calibration import (
    SNTJCalibrator,
    WqedCalibrator,
    sntj_fit,
    system_noise,
    wqed_fit_2d,
)
from .circuit import (
    CircuitParams,
    ResonatorBank,
    insertion_loss_db,
    paper_device,
    wavevector,
)
from .errors import JTWPAError
from .lossmodel import LossKind, LossProfile
from .modeladder import ModeSet, build_modes
from .phasematch import ProcessKind, delta_k
from .pump import PumpPowerCalibrator, PumpState, propagate
from .simulator import ParametricAmpSimulator
from .solver import (
    CoupledModeSystem,
    SimulationSetup,
    integrate_correlation,
    integrate_mean,
    squeeze,
)

__version__ = "0.1.0"

__all__ = [
    "CircuitParams",
    "CoupledModeSystem",
    "JTWPAError",
    "LossKind",
    "LossProfile",
    "ModeSet",
    "ParametricAmpSimulator",
    "ProcessKind",
    "PumpPowerCalibrator",
    "PumpState",
    "QuadratureAnalyzer",
    "QuadratureDataset",
    "ResonatorBank",
    "SNTJCalibrator",
    "SimulationSetup",
    "WqedCalibrator",
    "build_chain",
    "build_modes",
    "delta_k",
    "estimate_variances",
    "insertion_loss_db",
    "integrate_correlation",
    "integrate_mean",
    "paper_device",
    "propagate",
    "sntj_fit",
    "squeeze",
    "system_noise",
    "to_photon_basis",
    "wavevector",
    "wqed_fit_2d",
]
