"""Dual-frequency (MW+RF) ODMR simulation of diamond NV centers."""

from .model import (
    DriveConfig,
    FieldVector,
    LevelModel,
    NvParameters,
    build_ground_hamiltonian,
    build_level_model,
    orientation_projections,
)
from .dynamics import (
    EvolutionSettings,
    LindbladIntegrityError,
    evolve,
    fluorescence,
    initial_state_unpolarized,
    lindblad_rhs,
    time_averaged_fluorescence,
)
from .spinops import SpinOperators, expm, kron, spin1_operators

__version__ = "0.1.0"

__all__ = [
    "DriveConfig",
    "EvolutionSettings",
    "FieldVector",
    "LevelModel",
    "LindbladIntegrityError",
    "NvParameters",
    "SpinOperators",
    "build_ground_hamiltonian",
    "build_level_model",
    "evolve",
    "expm",
    "fluorescence",
    "initial_state_unpolarized",
    "kron",
    "lindblad_rhs",
    "orientation_projections",
    "spin1_operators",
    "time_averaged_fluorescence",
    "__version__",
]
