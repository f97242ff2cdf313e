from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from .game import Game, Strategy


@dataclass
class SolveResult:
    """Per-state values plus strategies for both players.

    ``guarantee`` is ``exact`` (rational values), ``epsilon`` (certified to a
    stated tolerance) or ``unguaranteed``.
    """

    values: Sequence
    maximizer_strategy: Strategy
    minimizer_strategy: Strategy
    method: str
    guarantee: str
    success: bool = True
    stats: dict[str, Any] = field(default_factory=dict)
    trace: list = field(default_factory=list, repr=False)

    @property
    def exact(self) -> bool:
        return bool(len(self.values)) and isinstance(self.values[0], Fraction)

    def float_values(self) -> np.ndarray:
        return np.array([float(v) for v in self.values])

    def value(self, game: Game, name: str):
        return self.values[game.state_id(name)]
