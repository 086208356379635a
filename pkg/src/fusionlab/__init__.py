"""fusionlab: desk-scale simulator of Type-I fusion of Bell pairs into cluster states."""

from . import fock, graphs, qubits, tabletop, verification
from .qubits import AnalyzerSetting, NoiseModel, QubitState
from .verification import MerminResult, RunReport

__version__ = "0.1.0"

__all__ = [
    "AnalyzerSetting",
    "MerminResult",
    "NoiseModel",
    "QubitState",
    "RunReport",
    "fock",
    "graphs",
    "qubits",
    "tabletop",
    "verification",
]
