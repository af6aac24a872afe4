"""Energy-efficient RIS-aided cell-free massive MIMO with AP sleep modes."""
from .config import PowerParams, ScenarioConfig, SolverParams, load_config
from .system import InfeasibleError, NetworkState, System

__version__ = "0.1.0"

__all__ = ["PowerParams", "ScenarioConfig", "SolverParams", "load_config", "System",
           "NetworkState", "InfeasibleError", "__version__"]
