"""Closed-form coupling constants, decoherence rates and figures of merit.

All inputs are SI. Every frequency, coupling and rate is an angular
frequency in rad/s; divide by ``2*pi`` for a value in Hz. The "approximately
equal" estimates for the solid-state couplings are used here as defining
formulas. Couplings are reported as magnitudes; the sign of a coupling is a
basis convention (e.g. the capacitive force can be attractive or repulsive).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from . import constants
from .errors import PhysicsWarning, PoleError, PreconditionError


def _require(cond: bool, msg: str):
    if not cond:
        raise PreconditionError(msg)


@dataclass(frozen=True)
class MechanicalMode:
    m_eff: float
    omega_m: float
    quality_q: float
    temperature: float

    def __post_init__(self):
        _require(self.m_eff > 0, "m_eff must be positive")
        _require(self.omega_m > 0, "omega_m must be positive")
        _require(self.quality_q >= 1, "quality factor must be >= 1")
        _require(self.temperature >= 0, "temperature must be non-negative")

    @property
    def gamma_m(self) -> float:
        """Intrinsic energy damping rate Omega_M / Q."""
        return self.omega_m / self.quality_q

    @property
    def n_th(self) -> float:
        """Bose occupation at the bath temperature."""
        c = constants.active()
        if self.temperature == 0:
            return 0.0
        return 1.0 / math.expm1(c.hbar * self.omega_m / (c.k_B * self.temperature))


@dataclass(frozen=True)
class ChargeQubitParams:
    v_g: float
    c_gate: float
    c_total: float
    gap: float
    e_c: float
    e_j: float
    delta_ng: float = 0.0

    def __post_init__(self):
        _require(0 < self.c_gate <= self.c_total, "need 0 < C_g <= C_Sigma")
        _require(self.gap > 0, "gate gap d must be positive")
        _require(self.e_c > 0 and self.e_j > 0, "E_C and E_J must be positive")


@dataclass(frozen=True)
class FluxQubitParams:
    b_field: float
    current: float
    length: float

    def __post_init__(self):
        _require(self.b_field > 0 and self.current > 0 and self.length > 0,
                 "B_0, I_q and l must be positive")
        if self.b_field > 10e-3:
            warnings.warn("B_0 above ~10 mT exceeds typical superconductor critical fields",
                          PhysicsWarning, stacklevel=3)


@dataclass(frozen=True)
class SpinParams:
    gradient: float
    g_factor: float = 2.0
    magnetic_moment: float | None = None
    omega_l: float | None = None

    def __post_init__(self):
        _require(self.gradient >= 0, "field gradient must be non-negative")


@dataclass(frozen=True)
class DeformationParams:
    d_e: float
    d_g: float
    z_0: float
    length: float

    def __post_init__(self):
        _require(self.length > 0, "beam length must be positive")
        _require(abs(self.z_0) <= self.length / 2, "|z_0| must not exceed l/2")


@dataclass(frozen=True)
class DirectCouplingParams:
    m_at: float
    omega_at: float
    epsilon: float = 1.0
    n_atoms: int = 1

    def __post_init__(self):
        _require(self.m_at > 0 and self.omega_at > 0, "atomic mass and trap frequency must be positive")
        _require(self.epsilon >= 0, "epsilon must be non-negative")
        _require(int(self.n_atoms) == self.n_atoms and self.n_atoms >= 1, "N must be an integer >= 1")
        if self.epsilon > 1:
            warnings.warn("epsilon > 1 requires compensation of the coupling potential in the trap",
                          PhysicsWarning, stacklevel=3)


@dataclass(frozen=True)
class CavityMediatedParams:
    g_at_f: float
    g_m_f: float
    detuning: float
    kappa: float
    omega_m: float

    def __post_init__(self):
        _require(self.kappa > 0, "kappa must be positive")


# -- basic mode quantities ---------------------------------------------------

def zero_point_motion(mode: MechanicalMode) -> float:
    c = constants.active()
    return math.sqrt(c.hbar / (2.0 * mode.m_eff * mode.omega_m))


def thermal_rate(mode: MechanicalMode) -> float:
    """Rethermalization rate k_B T / (hbar Q)."""
    c = constants.active()
    return c.k_B * mode.temperature / (c.hbar * mode.quality_q)


# -- solid-state couplings -----------------------------------------------------

def lambda_electrostatic(p: ChargeQubitParams, mode: MechanicalMode) -> float:
    c = constants.active()
    return abs(c.e * p.v_g * (p.c_gate / p.c_total) * zero_point_motion(mode) / (p.gap * c.hbar))


def lambda_lorentz(p: FluxQubitParams, mode: MechanicalMode) -> float:
    c = constants.active()
    return p.b_field * p.current * p.length * zero_point_motion(mode) / c.hbar


def lambda_magnetic(p: SpinParams, mode: MechanicalMode) -> float:
    c = constants.active()
    return p.g_factor * c.mu_B * zero_point_motion(mode) * p.gradient / (2.0 * c.hbar)


def lambda_deformation(p: DeformationParams, mode: MechanicalMode) -> float:
    c = constants.active()
    return abs((p.d_e - p.d_g) * p.z_0 * zero_point_motion(mode) / (p.length ** 2 * c.hbar))


# -- atomic couplings ------------------------------------------------------------

def lambda_direct(p: DirectCouplingParams, mode: MechanicalMode) -> float:
    """Single-atom coupling eps * (Omega_at/2) * sqrt(m_at/m_eff)."""
    if abs(p.omega_at - mode.omega_m) > 0.1 * mode.omega_m:
        warnings.warn("direct coupling formula assumes Omega_at ~ Omega_M (off by >10%)",
                      PhysicsWarning, stacklevel=2)
    return p.epsilon * 0.5 * p.omega_at * math.sqrt(p.m_at / mode.m_eff)


def lambda_collective(p: DirectCouplingParams, mode: MechanicalMode) -> float:
    """COM-mode coupling, enhanced by sqrt(N) over ``lambda_direct``."""
    return lambda_direct(p, mode) * math.sqrt(p.n_atoms)


def coulomb_epsilon(charge_tip: float, distance: float, m_at: float, omega_at: float,
                    ion_charge: float | None = None) -> float:
    """Trap-curvature ratio U_c''/(m Omega^2) for a Coulomb coupling potential."""
    c = constants.active()
    q_ion = c.e if ion_charge is None else ion_charge
    curvature = 2.0 * q_ion * charge_tip / (4.0 * math.pi * c.epsilon_0 * distance ** 3)
    return curvature / (m_at * omega_at ** 2)


def dispersive_shift(e_j: float, lam: float, omega_m: float) -> float:
    """Phonon-number dependent qubit shift chi (rad/s); ``e_j`` in J."""
    c = constants.active()
    if abs(e_j - c.hbar * omega_m) < 1e-6 * abs(e_j):
        raise PoleError("E_J is resonant with hbar*Omega_M; the dispersive expansion diverges")
    w_q = e_j / c.hbar
    return 2.0 * lam ** 2 * w_q / (w_q ** 2 - omega_m ** 2)


def mrfm_force(mu: float, gradient: float) -> float:
    return mu * gradient


def lambda_cavity_mediated(p: CavityMediatedParams) -> float:
    """Atom-membrane coupling after eliminating the two cavity fields."""
    if abs(p.detuning) < 10 * max(abs(p.g_at_f), abs(p.g_m_f)):
        warnings.warn("cavity elimination assumes |Delta| >> g_at,f, g_m,f", PhysicsWarning, stacklevel=2)
    gg = 2.0 * p.g_at_f * p.g_m_f
    plus = p.detuning + p.omega_m
    minus = p.detuning - p.omega_m
    return gg * plus / (p.kappa ** 2 + plus ** 2) + gg * minus / (p.kappa ** 2 + minus ** 2)


def collective_coupling(g_a: float, n_atoms: float) -> float:
    return g_a * math.sqrt(n_atoms)


def cooperativity(g_collective: float, kappa: float, gamma_a: float) -> float:
    _require(kappa > 0 and gamma_a > 0, "kappa and gamma_a must be positive")
    return g_collective ** 2 / (kappa * gamma_a)


@dataclass(frozen=True)
class FigureOfMerit:
    lambda_t2: float
    lambda_over_gamma_th: float
    strong_coupling: bool


def figure_of_merit(lam: float, t2: float, mode: MechanicalMode | None = None,
                    gamma_th: float | None = None) -> FigureOfMerit:
    """lambda*T2, lambda/Gamma_th and the strong-coupling verdict.

    ``gamma_th`` overrides the thermal rate derived from ``mode``.
    """
    if gamma_th is None:
        if mode is None:
            raise TypeError("need a mechanical mode or an explicit gamma_th")
        gamma_th = thermal_rate(mode)
    lt2 = lam * t2
    ratio = math.inf if gamma_th == 0 and lam > 0 else (0.0 if lam == 0 else lam / gamma_th)
    return FigureOfMerit(lt2, ratio, bool(lt2 > 1 and ratio > 1))
