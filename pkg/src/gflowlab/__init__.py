"""GFlowNet training harness with loss-guided auxiliary exploration."""

from .env import SINK, Environment, EnvState, Trajectory
from .explorers import ExplorerConfig, RndConfig
from .nn import MlpSpec, ParamStore
from .policies import MlpPolicy, SamplerMod, TabularChainPolicy
from .trainer import RunConfig, RunLog, run

__all__ = [
    "SINK", "Environment", "EnvState", "ExplorerConfig", "MlpPolicy",
    "MlpSpec", "ParamStore", "RndConfig", "RunConfig", "RunLog", "SamplerMod",
    "TabularChainPolicy", "Trajectory", "run",
]

__version__ = "0.1.0"
