"""gsnprobe: serial-reproduction sampling chains over masked-LM
conditionals, exact tabular oracles, chain diagnostics, corpus prep, and
distributional comparison."""

__version__ = "0.1.0"

from .core import (ConditionalModel, TokenSequence, Vocabulary, energy_score,
                   validate_distribution)
from .chains import ChainConfig, ChainRecord, gsn_step, mh_step, run_chain
from .tabular import (ConditionalTable, ExactJoint, TabularModel,
                      derive_conditionals, fixed_order_transition_matrix,
                      gsn_transition_matrix, mh_transition_matrix,
                      stationary_distribution, tv_distance)

__all__ = [
    "__version__",
    "ConditionalModel", "TokenSequence", "Vocabulary", "energy_score",
    "validate_distribution",
    "ChainConfig", "ChainRecord", "gsn_step", "mh_step", "run_chain",
    "ConditionalTable", "ExactJoint", "TabularModel", "derive_conditionals",
    "fixed_order_transition_matrix", "gsn_transition_matrix",
    "mh_transition_matrix", "stationary_distribution", "tv_distance",
]
