"""Single-system games on one qubit: evaluation, strategy search and upper bounds."""

from .bounds import (
    BoundResult,
    DiscriminationInstance,
    bound_32_form,
    discrimination_bound,
    helstrom_bound,
    maximize_discrimination_bound,
)
from .games import (
    BUILTIN_GAMES,
    GameSpec,
    Strategy,
    builtin_game,
    ei_transform,
    erasure_immune_condition,
    named_strategy,
    win_rate,
)
from .gates import BitFlip, Channel, EraseTo, GateClass, Identity, Unitary
from .optimize import OptimConfig, SearchResult, exhaustive_classical, optimize_channel, optimize_unitary

__all__ = [
    "BUILTIN_GAMES", "BitFlip", "BoundResult", "Channel", "DiscriminationInstance", "EraseTo",
    "GameSpec", "GateClass", "Identity", "OptimConfig", "SearchResult", "Strategy", "Unitary",
    "bound_32_form", "builtin_game", "discrimination_bound", "ei_transform",
    "erasure_immune_condition", "exhaustive_classical", "helstrom_bound",
    "maximize_discrimination_bound", "named_strategy", "optimize_channel", "optimize_unitary",
    "win_rate",
]
