"""Stochastic simulation of catalytic polymer chemistries in a flow reactor."""
from .chem_core import (Alphabet, Chemistry, Cleavage, Condensation, Species, SpeciesTable,
                        conceivable_count, enumerate_conceivable, expand_chemistry,
                        generate_chemistry, generate_valid_chemistry, influx_has_acs)
from .config import RunConfig
from .engine import ReactorConfig, RunResult, SimState, Simulation, run
from .kinetics import KineticParams
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "Alphabet", "Chemistry", "Cleavage", "Condensation", "Species", "SpeciesTable",
    "conceivable_count", "enumerate_conceivable", "expand_chemistry", "generate_chemistry",
    "generate_valid_chemistry", "influx_has_acs", "RunConfig", "ReactorConfig", "RunResult",
    "SimState", "Simulation", "run", "KineticParams", "BACKEND",
]
