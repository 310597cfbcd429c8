"""Application scenarios built as (ensemble, learner, loss) triples."""
from .base import Scenario
from .classification import build_state_classification
from .config import KINDS, ScenarioConfig
from .entangled import build_entangled_pac, classical_reference
from .estimation import build_parameter_estimation
from .pac import build_pac_state_learning
from .sweep import SweepResult, build, run_sweep, set_axis

__all__ = [
    "KINDS", "Scenario", "ScenarioConfig", "SweepResult", "build", "build_entangled_pac",
    "build_parameter_estimation", "build_pac_state_learning", "build_state_classification",
    "classical_reference", "run_sweep", "set_axis",
]
