"""Sequential mode-estimation stopping rules with anytime-valid posterior
confidence sequences, classical confidence-bound baselines, closed-form
sample-complexity calculators, and two application simulators (indirect
election forecasting, Byzantine answer verification)."""

from .bounds import BoundEngine, make_engine
from .instances import DiscreteInstance, SeededStream, TallyState, derive_stream
from .numerics import Interval
from .stopping import RULE_TOKENS, TrialRecord, run_mode_estimation

__all__ = [
    "BoundEngine",
    "DiscreteInstance",
    "Interval",
    "RULE_TOKENS",
    "SeededStream",
    "TallyState",
    "TrialRecord",
    "derive_stream",
    "make_engine",
    "run_mode_estimation",
]

__version__ = "0.1.0"
