from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class TimeSeries:
    """Named observable traces on a common time grid (seconds)."""

    t: np.ndarray
    observables: dict[str, np.ndarray]
    diagnostics: dict[str, np.ndarray | float] = field(default_factory=dict)
    final_state: np.ndarray | None = None

    def __getitem__(self, name: str) -> np.ndarray:
        return self.observables[name]

    def columns(self) -> list[str]:
        return list(self.observables)
