"""Physical constants used by every calculator.

Values are the CODATA 2018 recommended values (SI). Atomic masses are
neutral-atom masses from AME2016 expressed in unified atomic mass units.
The active table is selected with the ``HYBRID_CONSTANTS`` environment
variable; ``codata2018`` is the only table shipped and the default.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import lru_cache
from types import MappingProxyType
from typing import Mapping

ENV_VAR = "HYBRID_CONSTANTS"
DEFAULT_TABLE = "codata2018"


@dataclass(frozen=True)
class Constants:
    version: str
    c: float
    h: float
    e: float
    k_B: float
    mu_B: float
    mu_0: float
    epsilon_0: float
    m_e: float
    u: float
    mu_p: float
    atomic_mass_u: Mapping[str, float] = field(default_factory=dict)

    @property
    def hbar(self) -> float:
        return self.h / (2.0 * math.pi)

    def atomic_mass(self, species: str) -> float:
        """Mass in kg of a neutral atom, e.g. ``"Rb87"``."""
        try:
            return self.atomic_mass_u[species] * self.u
        except KeyError:
            known = ", ".join(sorted(self.atomic_mass_u))
            raise KeyError(f"unknown species {species!r}; known: {known}") from None

    def as_dict(self) -> dict:
        out = {k: getattr(self, k) for k in
               ("version", "c", "h", "e", "k_B", "mu_B", "mu_0", "epsilon_0", "m_e", "u", "mu_p")}
        out["hbar"] = self.hbar
        out["atomic_mass_u"] = dict(self.atomic_mass_u)
        return out


_TABLES = {
    "codata2018": Constants(
        version="codata2018",
        c=299792458.0,
        h=6.62607015e-34,
        e=1.602176634e-19,
        k_B=1.380649e-23,
        mu_B=9.2740100783e-24,
        mu_0=1.25663706212e-6,
        epsilon_0=8.8541878128e-12,
        m_e=9.1093837015e-31,
        u=1.66053906660e-27,
        mu_p=1.41060679736e-26,
        atomic_mass_u=MappingProxyType({
            "H1": 1.00782503223,
            "Be9": 9.012183065,
            "Rb87": 86.909180531,
            "Cs133": 132.905451961,
        }),
    ),
}


def available() -> list[str]:
    return sorted(_TABLES)


@lru_cache(maxsize=None)
def table(name: str) -> Constants:
    try:
        return _TABLES[name]
    except KeyError:
        raise KeyError(f"unknown constants table {name!r}; available: {available()}") from None


def active() -> Constants:
    """Constants table selected by ``HYBRID_CONSTANTS`` (default codata2018)."""
    return table(os.environ.get(ENV_VAR, DEFAULT_TABLE))


TWO_PI = 2.0 * math.pi
