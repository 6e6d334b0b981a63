"""Named physical scenarios: parameter bundles, derived quantities and model builders.

A :class:`Scenario` binds one platform to frozen parameter bundles (the
dataclasses of :mod:`hybridmech.couplings` plus a few local ones). Derived
quantities (couplings, rates, figures of merit) are always recomputed from
the bundles through the coupling calculators; the snapshot stored at
construction can be checked against a fresh recomputation with
:meth:`Scenario.check_derived`.

Parameter paths such as ``"direct.epsilon"`` address ``bundle.field`` and are
used by :meth:`Scenario.replace` and by the CLI sweeps.
"""

from __future__ import annotations

import dataclasses
import json
import math
import warnings
from dataclasses import dataclass, field
from importlib import resources
from types import MappingProxyType
from typing import Any, Callable, Mapping

import numpy as np

from . import constants
from . import couplings as cp
from . import gaussian as gs
from . import lindblad as lb
from . import operators as ops
from .errors import PreconditionError
from .operators import HilbertSpace, Operator

TWO_PI = constants.TWO_PI

PLATFORMS = (
    "cpb_resonator",
    "flux_resonator",
    "spin_resonator",
    "quantum_dot",
    "ion_direct",
    "bec_cantilever",
    "lattice_membrane",
    "cavity_atom_mirror",
    "cavity_single_atom_membrane",
)
QUBIT_PLATFORMS = ("cpb_resonator", "flux_resonator", "spin_resonator", "quantum_dot")


# -- local parameter bundles ---------------------------------------------------

@dataclass(frozen=True)
class Coherence:
    """Qubit dephasing time T2 (s)."""
    t2: float

    def __post_init__(self):
        if not self.t2 > 0:
            raise PreconditionError("T2 must be positive")


@dataclass(frozen=True)
class QubitLevels:
    """Bare qubit splitting (rad/s) for the generic longitudinal model."""
    omega_q: float


@dataclass(frozen=True)
class Drive:
    """Microwave drive of the charge qubit; ``detuning`` from E_J/hbar - Omega_M (rad/s)."""
    detuning: float = 0.0


@dataclass(frozen=True)
class QuotedCoupling:
    """A coupling quoted from an experiment rather than derived (rad/s)."""
    lambda_quoted: float
    gradient: float


@dataclass(frozen=True)
class CoulombTip:
    """Charged oscillator tip at distance ``distance`` from an ion."""
    distance: float
    capacitance: float
    voltage: float

    def __post_init__(self):
        if self.distance <= 0:
            raise PreconditionError("tip distance must be positive")


@dataclass(frozen=True)
class LatticeCooling:
    """Membrane reflectivity and atomic laser-cooling rate (rad/s)."""
    r: float
    gamma_cool: float

    def __post_init__(self):
        if not 0.0 <= self.r <= 1.0:
            raise PreconditionError(f"reflectivity r must lie in [0, 1], got {self.r}")
        if self.gamma_cool < 0:
            raise PreconditionError("cooling rate must be non-negative")


@dataclass(frozen=True)
class AtomFilter:
    """Cavity + atomic ensemble of the atom-filtered sideband-cooling scheme (rad/s)."""
    g: float
    kappa: float
    delta_f: float
    g_a: float
    n_atoms: float
    gamma_a: float
    delta_a: float

    def __post_init__(self):
        if self.kappa <= 0 or self.gamma_a <= 0:
            raise PreconditionError("kappa and gamma_a must be positive")
        if self.n_atoms < 0:
            raise PreconditionError("atom number must be non-negative")


@dataclass(frozen=True)
class CavityOptics:
    """Two-field cavity of the single-atom scheme.

    ``kappa`` follows from finesse and length as the field (half-width)
    decay rate pi c / (2 F L). ``decoherence_ratio`` is the quoted ratio
    of the cavity-induced and atomic decoherence rates to lambda.
    """
    finesse: float
    length: float
    waist: float
    power: float
    detuning: float
    g_at_f: float
    g_m_f: float
    g_single: float
    gamma_atom: float
    decoherence_ratio: float


@dataclass(frozen=True)
class Derived:
    value: float
    unit: str
    note: str = ""


# -- scenario --------------------------------------------------------------------

@dataclass(frozen=True)
class Scenario:
    name: str
    platform: str
    params: Mapping[str, Any]
    provenance: Mapping[str, str]
    description: str = ""
    derived: Mapping[str, Derived] = field(init=False)

    def __post_init__(self):
        if self.platform not in PLATFORMS:
            raise PreconditionError(f"unknown platform {self.platform!r}; valid: {', '.join(PLATFORMS)}")
        object.__setattr__(self, "params", MappingProxyType(dict(self.params)))
        object.__setattr__(self, "provenance", MappingProxyType(dict(self.provenance)))
        object.__setattr__(self, "derived", MappingProxyType(self.recompute()))

    def recompute(self) -> dict[str, Derived]:
        return _DERIVERS[self.platform](self.params)

    def check_derived(self, rtol: float = 1e-12) -> float:
        """Largest relative difference between stored and recomputed values."""
        fresh = self.recompute()
        if fresh.keys() != self.derived.keys():
            raise AssertionError("derived quantity names changed on recomputation")
        worst = 0.0
        for k, d in fresh.items():
            a, b = d.value, self.derived[k].value
            if a == b:
                continue
            worst = max(worst, abs(a - b) / max(abs(a), abs(b)))
        if worst > rtol:
            raise AssertionError(f"stale derived quantities (relative difference {worst:.2e})")
        return worst

    def value(self, name: str) -> float:
        return self.derived[name].value

    # parameter access by path -------------------------------------------------
    def get(self, path: str) -> Any:
        bundle, fld = _split_path(path)
        try:
            return getattr(self.params[bundle], fld)
        except (KeyError, AttributeError):
            raise KeyError(f"unknown parameter path {path!r}; valid: {', '.join(self.paths())}") from None

    def paths(self) -> list[str]:
        return [f"{b}.{f.name}" for b, obj in self.params.items() for f in dataclasses.fields(obj)]

    def replace(self, **changes: Any) -> "Scenario":
        """New scenario with ``{"bundle.field": value}`` changes applied.

        Keyword names use ``__`` in place of the dot, or pass a dict via
        :meth:`with_values`.
        """
        return self.with_values({k.replace("__", "."): v for k, v in changes.items()})

    def with_values(self, changes: Mapping[str, Any]) -> "Scenario":
        params = dict(self.params)
        for path, value in changes.items():
            bundle, fld = _split_path(path)
            if bundle not in params or fld not in {f.name for f in dataclasses.fields(params[bundle])}:
                raise KeyError(f"unknown parameter path {path!r}; valid: {', '.join(self.paths())}")
            params[bundle] = dataclasses.replace(params[bundle], **{fld: value})
        prov = dict(self.provenance)
        for path in changes:
            prov[path] = "user override"
        return Scenario(self.name, self.platform, params, prov, self.description)

    # model builders -----------------------------------------------------------
    def model_builders(self) -> dict[str, Callable[..., Any]]:
        builders: dict[str, Callable[..., Any]] = {}
        if self.platform in QUBIT_PLATFORMS:
            builders["qubit_resonator"] = lambda dim=8, rotated_basis=False, **kw: \
                build_qubit_resonator_model(self, rotated_basis, dim, **kw)
        if self.platform == "cpb_resonator":
            builders["driven_jc"] = lambda dim=8, **kw: driven_jc_model(self, dim, **kw)
        if self.platform in ("ion_direct", "bec_cantilever", "lattice_membrane", "cavity_single_atom_membrane"):
            builders["gaussian"] = lambda **kw: membrane_atom_gaussian(self, **kw)
            builders["lindblad"] = lambda dims=(4, 4), **kw: membrane_atom_lindblad(self, dims, **kw)
        if self.platform == "cavity_atom_mirror":
            builders["gaussian"] = lambda: atom_filter_gaussian(self)
        return builders


def _split_path(path: str) -> tuple[str, str]:
    parts = path.split(".")
    if len(parts) != 2 or not all(parts):
        raise KeyError(f"parameter path {path!r} must look like 'bundle.field'")
    return parts[0], parts[1]


# -- derived quantities ----------------------------------------------------------

def _mode_rows(mode: cp.MechanicalMode) -> dict[str, Derived]:
    return {
        "x_zpf": Derived(cp.zero_point_motion(mode), "m", "sqrt(hbar / 2 m_eff Omega_M)"),
        "gamma_m": Derived(mode.gamma_m, "rad/s", "Omega_M / Q"),
        "gamma_th": Derived(cp.thermal_rate(mode), "rad/s", "k_B T / (hbar Q)"),
        "n_th": Derived(mode.n_th, "1", "Bose occupation at T"),
    }


def _merit_rows(lam: float, t2: float, mode: cp.MechanicalMode) -> dict[str, Derived]:
    fom = cp.figure_of_merit(lam, t2, mode)
    return {
        "lambda_t2": Derived(fom.lambda_t2, "1", "lambda * T2"),
        "lambda_over_gamma_th": Derived(fom.lambda_over_gamma_th, "1", "lambda / Gamma_th"),
        "strong_coupling": Derived(float(fom.strong_coupling), "bool", "lambda T2 > 1 and lambda > Gamma_th"),
    }


def _derive_cpb(p) -> dict[str, Derived]:
    c = constants.active()
    mode, q = p["mode"], p["qubit"]
    lam = cp.lambda_electrostatic(q, mode)
    out = _mode_rows(mode)
    out["lambda"] = Derived(lam, "rad/s", "electrostatic coupling e V_g (C_g/C_Sigma) x_ZPF / (d hbar)")
    out["omega_q"] = Derived(q.e_j / c.hbar, "rad/s", "qubit splitting E_J/hbar at the degeneracy point")
    out["chi"] = Derived(cp.dispersive_shift(q.e_j, lam, mode.omega_m), "rad/s", "dispersive shift")
    out["omega_drive"] = Derived(q.e_j / c.hbar - mode.omega_m + p["drive"].detuning, "rad/s",
                                 "drive frequency E_J/hbar - Omega_M (+ detuning)")
    out.update(_merit_rows(lam, p["coherence"].t2, mode))
    out["chi_t2"] = Derived(out["chi"].value * p["coherence"].t2, "1", "chi * T2")
    return out


def _derive_flux(p) -> dict[str, Derived]:
    mode = p["mode"]
    lam = cp.lambda_lorentz(p["flux"], mode)
    out = _mode_rows(mode)
    out["lambda"] = Derived(lam, "rad/s", "Lorentz-force coupling B_0 I_q l x_ZPF / hbar")
    out.update(_merit_rows(lam, p["coherence"].t2, mode))
    return out


def _derive_spin(p) -> dict[str, Derived]:
    mode, spin = p["mode"], p["spin"]
    lam = cp.lambda_magnetic(spin, mode)
    out = _mode_rows(mode)
    out["lambda"] = Derived(lam, "rad/s", "magnetic coupling g mu_B x_ZPF grad(B) / (2 hbar)")
    moment = spin.magnetic_moment if spin.magnetic_moment is not None else constants.active().mu_B
    out["mrfm_force"] = Derived(cp.mrfm_force(moment, spin.gradient), "N", "F = mu grad(B)")
    out["lambda_quoted"] = Derived(p["quoted"].lambda_quoted, "rad/s",
                                   "quoted NV-nanowire coupling (stored, not derived)")
    out.update(_merit_rows(lam, p["coherence"].t2, mode))
    return out


def _derive_qd(p) -> dict[str, Derived]:
    mode = p["mode"]
    lam = cp.lambda_deformation(p["deformation"], mode)
    out = _mode_rows(mode)
    out["lambda"] = Derived(lam, "rad/s", "deformation-potential coupling (D_e - D_g) z_0 x_ZPF / (l^2 hbar)")
    out.update(_merit_rows(lam, p["coherence"].t2, mode))
    return out


def _derive_ion(p) -> dict[str, Derived]:
    mode, direct, tip = p["mode"], p["direct"], p["tip"]
    lam = cp.lambda_direct(direct, mode)
    eps_tip = cp.coulomb_epsilon(tip.capacitance * tip.voltage, tip.distance, direct.m_at, direct.omega_at)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", cp.PhysicsWarning)
        lam_tip = cp.lambda_direct(dataclasses.replace(direct, epsilon=eps_tip), mode)
    out = _mode_rows(mode)
    out["lambda_direct"] = Derived(lam, "rad/s", "epsilon (Omega_at/2) sqrt(m_at/m_eff); epsilon-scaled")
    out["epsilon_tip"] = Derived(eps_tip, "1", "Coulomb-tip curvature ratio for q = C_q V_q at distance d")
    out["lambda_tip"] = Derived(lam_tip, "rad/s", "lambda_direct evaluated at epsilon_tip")
    out.update(_merit_rows(lam, p["coherence"].t2, mode))
    return out


def _derive_collective(p) -> dict[str, Derived]:
    mode, direct = p["mode"], p["direct"]
    lam1 = cp.lambda_direct(direct, mode)
    lam_n = cp.lambda_collective(direct, mode)
    out = _mode_rows(mode)
    out["lambda_direct"] = Derived(lam1, "rad/s", "single-atom coupling; epsilon-scaled")
    out["lambda_n"] = Derived(lam_n, "rad/s", "collective COM coupling lambda sqrt(N); epsilon-scaled")
    if "cooling" in p:
        cool = p["cooling"]
        if cool.gamma_cool > 0:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                shift = gs.sympathetic_damping_shift(cool.r, lam_n, cool.gamma_cool)
            out["delta_gamma"] = Derived(shift, "rad/s", "4 r lambda_N^2 / gamma_cool")
            out["gamma_eff"] = Derived(mode.gamma_m + shift, "rad/s", "Gamma_M + 4 r lambda_N^2 / gamma_cool")
            model = gs.build_membrane_atom_model(mode.omega_m, direct.omega_at, lam_n, cool.r, mode.gamma_m,
                                                 cool.gamma_cool, mode.n_th)
            out["gamma_eff_model"] = Derived(gs.mode_energy_damping(model, 0), "rad/s",
                                             "energy damping of the membrane-like normal mode (Gaussian model)")
            out["delta_gamma_model"] = Derived(out["gamma_eff_model"].value - mode.gamma_m, "rad/s",
                                               "gamma_eff_model - Gamma_M")
    out.update(_merit_rows(lam_n, p["coherence"].t2, mode))
    return out


def _derive_atom_filter(p) -> dict[str, Derived]:
    mode, af = p["mode"], p["atoms"]
    g_coll = cp.collective_coupling(af.g_a, af.n_atoms)
    coop = cp.cooperativity(g_coll, af.kappa, af.gamma_a)
    out = _mode_rows(mode)
    out["g_collective"] = Derived(g_coll, "rad/s", "G_a = g_a sqrt(N)")
    out["cooperativity"] = Derived(coop, "1", "C = G_a^2 / (kappa gamma_a)")
    out["gamma_opt"] = Derived(gs.optical_damping(af.g, af.kappa, coop), "rad/s", "(g^2/kappa) C/(1+C)")
    out["a_s_formula"] = Derived(gs.stokes_rate(af.g, af.kappa, coop), "rad/s", "g^2 / [kappa (1+C)]")
    out["n_res_formula"] = Derived(gs.residual_occupancy(af.g, af.kappa, coop, mode.gamma_m), "1",
                                   "A_s / (Gamma_M + Gamma_opt)")
    model = atom_filter_gaussian_from(mode, af)
    a_as, a_s = gs.sideband_rates(model)
    out["a_as_model"] = Derived(a_as, "rad/s", "force spectrum at +Omega_M (Gaussian model)")
    out["a_s_model"] = Derived(a_s, "rad/s", "force spectrum at -Omega_M (Gaussian model)")
    rep = gs.steady_state_covariance(model)
    out["n_res_model"] = Derived(rep.phonons(0), "1", "Lyapunov steady-state phonon number")
    out["n_res_times_c"] = Derived(rep.phonons(0) * coop, "1", "n_res * C (tends to 1)")
    return out


def _derive_cavity_single(p) -> dict[str, Derived]:
    mode, opt = p["mode"], p["optics"]
    kappa = cavity_kappa(opt.finesse, opt.length)
    cm = cp.CavityMediatedParams(opt.g_at_f, opt.g_m_f, opt.detuning, kappa, mode.omega_m)
    lam = cp.lambda_cavity_mediated(cm)
    gamma_th = cp.thermal_rate(mode)
    out = _mode_rows(mode)
    out["kappa"] = Derived(kappa, "rad/s", "pi c / (2 F L)")
    out["lambda"] = Derived(lam, "rad/s", "cavity-mediated atom-membrane coupling")
    out["cooperativity"] = Derived(cp.cooperativity(opt.g_single, kappa, opt.gamma_atom), "1",
                                   "g_0^2 / (kappa gamma)")
    out["gamma_c"] = Derived(opt.decoherence_ratio * abs(lam), "rad/s", "quoted ratio times lambda")
    out["gamma_at"] = Derived(opt.decoherence_ratio * abs(lam), "rad/s", "quoted ratio times lambda")
    worst = max(gamma_th, out["gamma_c"].value, out["gamma_at"].value)
    out["lambda_over_max_decoherence"] = Derived(abs(lam) / worst, "1", "lambda / max(Gamma_c, Gamma_th, Gamma_at)")
    out["strong_coupling"] = Derived(float(abs(lam) > worst), "bool", "lambda above every decoherence rate")
    return out


_DERIVERS: dict[str, Callable[[Mapping[str, Any]], dict[str, Derived]]] = {
    "cpb_resonator": _derive_cpb,
    "flux_resonator": _derive_flux,
    "spin_resonator": _derive_spin,
    "quantum_dot": _derive_qd,
    "ion_direct": _derive_ion,
    "bec_cantilever": _derive_collective,
    "lattice_membrane": _derive_collective,
    "cavity_atom_mirror": _derive_atom_filter,
    "cavity_single_atom_membrane": _derive_cavity_single,
}


def cavity_kappa(finesse: float, length: float) -> float:
    """Field decay rate (half-width, rad/s) of a Fabry-Perot cavity."""
    return math.pi * constants.active().c / (2.0 * finesse * length)


def calibrate_cavity_coupling(lambda_target: float, detuning: float, kappa: float, omega_m: float) -> float:
    """Equal couplings g_at,f = g_m,f that reproduce ``lambda_target``."""
    probe = cp.lambda_cavity_mediated(cp.CavityMediatedParams(1.0, 1.0, detuning, kappa, omega_m))
    if probe == 0 or lambda_target / probe < 0:
        raise PreconditionError("target coupling unreachable at this detuning")
    return math.sqrt(lambda_target / probe)


# -- builtin scenarios ------------------------------------------------------------

def _nano_mode(omega_m: float = TWO_PI * 10e6) -> cp.MechanicalMode:
    return cp.MechanicalMode(m_eff=1e-16, omega_m=omega_m, quality_q=1e5, temperature=0.02)


_NANO_PROV = {
    "mode.m_eff": "nanoscale beam, chosen so that x_ZPF is of order 1e-13 m as quoted",
    "mode.quality_q": "assumed typical Q = 1e5",
    "mode.temperature": "assumed dilution-refrigerator temperature 20 mK",
}


def _build_cpb() -> Scenario:
    c = constants.active()
    e_c = c.h * 50e9
    c_total = 2.0 * c.e ** 2 / e_c
    mode = _nano_mode(TWO_PI * 100e6)
    qubit = cp.ChargeQubitParams(v_g=10.0, c_gate=0.02 * c_total, c_total=c_total, gap=100e-9,
                                 e_c=e_c, e_j=c.h * 5e9, delta_ng=0.0)
    prov = dict(_NANO_PROV)
    prov.update({
        "mode.omega_m": "quoted beam frequencies 10-100 MHz; upper end",
        "qubit.v_g": "quoted voltages up to V_g = 10 V",
        "qubit.c_gate": "C_g/C_Sigma = 0.02 chosen (ratio not quoted)",
        "qubit.c_total": "C_Sigma = 2 e^2 / E_C from E_C = 4 e^2 / 2 C_Sigma",
        "qubit.gap": "quoted d ~ 100 nm",
        "qubit.e_c": "quoted E_C/h ~ 50 GHz",
        "qubit.e_j": "quoted E_J/h ~ 5 GHz",
        "qubit.delta_ng": "operated at the charge degeneracy point",
        "coherence.t2": "quoted T2 > 1 us for optimized charge qubits",
        "drive.detuning": "drive exactly at omega_0 = E_J/hbar - Omega_M",
    })
    return Scenario("cpb_resonator", "cpb_resonator",
                    {"mode": mode, "qubit": qubit, "coherence": Coherence(1e-6), "drive": Drive(0.0)}, prov,
                    "Cooper-pair box capacitively coupled to a vibrating gate electrode")


def _build_flux() -> Scenario:
    prov = dict(_NANO_PROV)
    prov.update({
        "mode.omega_m": "assumed 10 MHz nanoscale beam",
        "flux.b_field": "quoted critical-field limit B_0 <= 10 mT",
        "flux.current": "quoted I_q ~ 100 nA",
        "flux.length": "quoted l = 5 um",
        "coherence.t2": "assumed 1 us (not quoted for flux qubits)",
        "levels.omega_q": "assumed 5 GHz qubit splitting",
    })
    return Scenario("flux_resonator", "flux_resonator",
                    {"mode": _nano_mode(), "flux": cp.FluxQubitParams(10e-3, 100e-9, 5e-6),
                     "coherence": Coherence(1e-6), "levels": QubitLevels(TWO_PI * 5e9)}, prov,
                    "flux qubit coupled through the Lorentz force on a current-carrying beam")


def _build_spin() -> Scenario:
    c = constants.active()
    mode = _nano_mode()
    prov = dict(_NANO_PROV)
    prov.update({
        "mode.omega_m": "assumed 10 MHz nanoscale beam",
        "spin.gradient": "quoted gradients up to ~1e7 T/m on the nanometer scale",
        "spin.g_factor": "quoted g_s ~ 2",
        "spin.magnetic_moment": "electron moment mu_B (CODATA)",
        "spin.omega_l": "Larmor frequency set resonant with the mode",
        "quoted.lambda_quoted": "quoted NV-nanowire coupling lambda/2pi = 70 Hz (stored, implied x_ZPF not given)",
        "quoted.gradient": "quoted NV-nanowire gradient ~7e3 T/m",
        "coherence.t2": "assumed 1 ms electron-spin T2",
    })
    return Scenario("spin_resonator", "spin_resonator",
                    {"mode": mode, "spin": cp.SpinParams(1e7, 2.0, c.mu_B, mode.omega_m),
                     "quoted": QuotedCoupling(TWO_PI * 70.0, 7e3), "coherence": Coherence(1e-3)}, prov,
                    "electron spin in the field gradient of a magnetized tip")


def _build_qd() -> Scenario:
    c = constants.active()
    prov = dict(_NANO_PROV)
    prov.update({
        "mode.omega_m": "assumed 10 MHz nanoscale beam",
        "deformation.d_e": "assumed D_e - D_g = 2 eV, inside the quoted 1-10 MHz coupling window",
        "deformation.d_g": "reference zero for the deformation potentials",
        "deformation.z_0": "assumed defect 100 nm off the neutral plane",
        "deformation.length": "assumed beam length 1 um",
        "coherence.t2": "assumed 1 ns (radiative decay of the same order as lambda)",
        "levels.omega_q": "assumed optical transition ~1.3 eV",
    })
    return Scenario("quantum_dot", "quantum_dot",
                    {"mode": _nano_mode(), "deformation": cp.DeformationParams(2.0 * c.e, 0.0, 100e-9, 1e-6),
                     "coherence": Coherence(1e-9), "levels": QubitLevels(1.3 * c.e / c.hbar)}, prov,
                    "quantum dot embedded in a flexing beam (deformation-potential coupling)")


def _build_ion() -> Scenario:
    c = constants.active()
    omega = TWO_PI * 70e6
    prov = {
        "mode.m_eff": "quoted nanoscale oscillator m_eff = 1e-15 kg",
        "mode.omega_m": "resonant with the ion trap, Omega_M = Omega_at",
        "mode.quality_q": "assumed Q = 1e5",
        "mode.temperature": "assumed 4 K",
        "direct.m_at": "9Be+ mass (CODATA atomic mass)",
        "direct.omega_at": "quoted Omega_at/2pi = 70 MHz",
        "direct.epsilon": "epsilon = 1 reference value (coupling quoted as epsilon x 150 Hz)",
        "direct.n_atoms": "single ion",
        "tip.distance": "quoted d = 10 um",
        "tip.capacitance": "quoted C_q = 1e-17 F",
        "tip.voltage": "quoted V_q = 90 V",
        "coherence.t2": "assumed 1 s hyperfine-qubit coherence",
    }
    return Scenario("ion_direct", "ion_direct", {
        "mode": cp.MechanicalMode(1e-15, omega, 1e5, 4.0),
        "direct": cp.DirectCouplingParams(c.atomic_mass("Be9"), omega, 1.0, 1),
        "tip": CoulombTip(10e-6, 1e-17, 90.0),
        "coherence": Coherence(1.0),
    }, prov, "single trapped ion coupled to a charged oscillator tip by the Coulomb force")


def _build_bec() -> Scenario:
    c = constants.active()
    omega = TWO_PI * 10e3
    prov = {
        "mode.m_eff": "quoted cantilever m_eff = 5 ng",
        "mode.omega_m": "quoted Omega_M/2pi = 10 kHz",
        "mode.quality_q": "quoted Q = 3200",
        "mode.temperature": "assumed 300 K (room-temperature atom chip)",
        "direct.m_at": "87Rb mass (CODATA atomic mass)",
        "direct.omega_at": "trap assumed resonant with the cantilever",
        "direct.epsilon": "epsilon = 1 upper bound (not quoted)",
        "direct.n_atoms": "N = 2e3 atoms",
        "coherence.t2": "assumed 1 s hyperfine coherence",
    }
    return Scenario("bec_cantilever", "bec_cantilever", {
        "mode": cp.MechanicalMode(5e-12, omega, 3200.0, 300.0),
        "direct": cp.DirectCouplingParams(c.atomic_mass("Rb87"), omega, 1.0, 2000),
        "coherence": Coherence(1.0),
    }, prov, "Bose-Einstein condensate coupled to a cantilever by atom-surface forces")


def _build_lattice() -> Scenario:
    c = constants.active()
    omega = TWO_PI * 1e6
    m_at = c.atomic_mass("Rb87")
    prov = {
        "mode.m_eff": "mass ratio m_at/m_eff = 1e-14 as quoted",
        "mode.omega_m": "assumed 1 MHz membrane (several 100 kHz quoted as routine)",
        "mode.quality_q": "assumed Q = 1e6",
        "mode.temperature": "assumed 300 K",
        "direct.m_at": "87Rb mass (CODATA atomic mass)",
        "direct.omega_at": "lattice trap resonant with the membrane",
        "direct.epsilon": "semiclassical optical coupling has epsilon = 1",
        "direct.n_atoms": "N = 1e8 atoms",
        "cooling.r": "assumed membrane power reflectivity 0.3",
        "cooling.gamma_cool": "assumed laser cooling rate 2pi x 10 kHz (lambda_N = gamma_cool/20)",
        "coherence.t2": "assumed 1 s hyperfine coherence",
    }
    return Scenario("lattice_membrane", "lattice_membrane", {
        "mode": cp.MechanicalMode(m_at / 1e-14, omega, 1e6, 300.0),
        "direct": cp.DirectCouplingParams(m_at, omega, 1.0, 100_000_000),
        "cooling": LatticeCooling(0.3, TWO_PI * 10e3),
        "coherence": Coherence(1.0),
    }, prov, "atoms in an optical lattice formed by light reflected from a membrane")


def _build_atom_filter() -> Scenario:
    omega = TWO_PI * 1e6
    kappa = 20.0 * omega
    gamma_a = 0.002 * omega
    n_atoms = 1e4
    g_a = math.sqrt(100.0 * kappa * gamma_a / n_atoms)
    prov = {
        "mode.m_eff": "assumed 1 ng mirror",
        "mode.omega_m": "assumed 1 MHz",
        "mode.quality_q": "assumed Q = 1e8 (Gamma_M -> 0 limit)",
        "mode.temperature": "zero-temperature mirror bath (residual occupancy limit)",
        "atoms.g": "assumed g = 0.1 Omega_M",
        "atoms.kappa": "bad cavity kappa = 20 Omega_M",
        "atoms.delta_f": "resonant cavity Delta_f = 0",
        "atoms.g_a": "single-atom coupling chosen so that C = 100 at N = 1e4",
        "atoms.n_atoms": "assumed N = 1e4",
        "atoms.gamma_a": "assumed narrow atomic line gamma_a = 0.002 Omega_M, so the atomic notch stays well inside the sidebands",
        "atoms.delta_a": "atoms detuned to the Stokes sideband, Delta_a = -Omega_M",
    }
    return Scenario("cavity_atom_mirror", "cavity_atom_mirror", {
        "mode": cp.MechanicalMode(1e-12, omega, 1e8, 0.0),
        "atoms": AtomFilter(0.1 * omega, kappa, 0.0, g_a, n_atoms, gamma_a, -omega),
    }, prov, "atom-filtered sideband cooling of a mirror in a bad cavity")


def _build_cavity_single() -> Scenario:
    omega = TWO_PI * 1.3e6
    finesse, length = 2e5, 50e-6
    kappa = cavity_kappa(finesse, length)
    detuning = TWO_PI * 10e6
    g = calibrate_cavity_coupling(TWO_PI * 45e3, detuning, kappa, omega)
    gamma_atom = TWO_PI * 2.6e6
    g_single = math.sqrt(140.0 * kappa * gamma_atom)
    prov = {
        "mode.m_eff": "quoted m_eff = 0.4 ng",
        "mode.omega_m": "quoted Omega_M = 2pi x 1.3 MHz",
        "mode.quality_q": "quoted Q = 1e7",
        "mode.temperature": "assumed 2 K, which gives Gamma_th ~ 0.1 lambda as quoted",
        "optics.finesse": "quoted F ~ 2e5",
        "optics.length": "quoted L = 50 um",
        "optics.waist": "quoted w0 = 10 um",
        "optics.power": "quoted P_c ~ 850 uW",
        "optics.detuning": "assumed Delta = 2pi x 10 MHz (|Delta| >> g)",
        "optics.g_at_f": "calibrated, not derived: inverse-solved so that lambda = 2pi x 45 kHz",
        "optics.g_m_f": "calibrated, not derived: set equal to g_at_f",
        "optics.g_single": "calibrated so that the single-atom cooperativity is the quoted 140",
        "optics.gamma_atom": "Cs D2 half-linewidth 2pi x 2.6 MHz",
        "optics.decoherence_ratio": "quoted Gamma_c, Gamma_at ~ 0.1 lambda",
    }
    return Scenario("cavity_single_atom_membrane", "cavity_single_atom_membrane", {
        "mode": cp.MechanicalMode(0.4e-12, omega, 1e7, 2.0),
        "optics": CavityOptics(finesse, length, 10e-6, 850e-6, detuning, g, g, g_single, gamma_atom, 0.1),
    }, prov, "single Cs atom and a membrane coupled through two cavity fields")


_BUILTINS: dict[str, Callable[[], Scenario]] = {
    "cpb_resonator": _build_cpb,
    "flux_resonator": _build_flux,
    "spin_resonator": _build_spin,
    "quantum_dot": _build_qd,
    "ion_direct": _build_ion,
    "bec_cantilever": _build_bec,
    "lattice_membrane": _build_lattice,
    "cavity_atom_mirror": _build_atom_filter,
    "cavity_single_atom_membrane": _build_cavity_single,
}


def builtin_names() -> list[str]:
    return list(_BUILTINS)


def builtin(name: str) -> Scenario:
    try:
        factory = _BUILTINS[name]
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; valid names: {', '.join(_BUILTINS)}") from None
    with warnings.catch_warnings():
        # the BEC and lattice cases deliberately sit at the edge of formula validity
        warnings.simplefilter("ignore", cp.PhysicsWarning)
        return factory()


# -- qubit-resonator models -----------------------------------------------------

def _charge_window(n_g: float, charge_states: int) -> np.ndarray:
    if charge_states % 2:
        center = math.floor(n_g + 0.5)
        half = charge_states // 2
        return np.arange(center - half, center + half + 1)
    low = math.floor(n_g) - (charge_states // 2 - 1)
    return np.arange(low, low + charge_states)


def gate_charge(p: cp.ChargeQubitParams) -> float:
    """N_g = n + 1/2 + Delta N_g with n = floor(C_g V_g / 2e)."""
    c = constants.active()
    n = math.floor(p.c_gate * p.v_g / (2.0 * c.e))
    return n + 0.5 + p.delta_ng


def cpb_hamiltonian(p: cp.ChargeQubitParams, charge_states: int, n_g: float | None = None) -> Operator:
    """Charge-basis Cooper-pair-box Hamiltonian in J.

    Diagonal E_C (N - N_g)^2 and -E_J/2 between neighbouring charge states.
    Odd windows are centred on the charge state nearest N_g; even windows
    straddle N_g (two states give the charge qubit). ``n_g`` overrides
    :func:`gate_charge`.
    """
    if charge_states < 2:
        raise PreconditionError("need at least two charge states")
    ng = gate_charge(p) if n_g is None else n_g
    charges = _charge_window(ng, charge_states)
    h = np.diag(p.e_c * (charges - ng) ** 2).astype(complex)
    off = -0.5 * p.e_j * np.ones(charge_states - 1)
    h += np.diag(off, 1) + np.diag(off, -1)
    return Operator(HilbertSpace.single(charge_states, "charge", "charge"), h)


def rotation_unitary(dim: int) -> Operator:
    """Hadamard on the qubit times oscillator parity.

    Conjugating the degeneracy-point charge-qubit Hamiltonian by this unitary
    gives exactly the rotated-basis model with +lambda coupling; with the
    Hadamard alone the coupling changes sign (b -> -b absorbs it).
    """
    space = lb.qubit_mode_space(dim)
    had = np.array([[1, 1], [1, -1]]) / math.sqrt(2.0)
    parity = np.diag((-1.0) ** np.arange(dim))
    return Operator(space, np.kron(had, parity))


def _qubit_lambda(s: Scenario) -> float:
    return s.value("lambda")


def _dephasing_and_thermal(s: Scenario, space: HilbertSpace, include_dissipation: bool):
    if not include_dissipation:
        return ()
    mode = s.params["mode"]
    t2 = s.params["coherence"].t2
    dim = space.dims[1]
    b = ops.embed(ops.annihilation(dim), 1, space)
    sz = ops.embed(ops.pauli("z"), 0, space)
    n_th = mode.n_th
    ops_ = [(sz, 1.0 / (2.0 * t2)), (b, mode.gamma_m * (n_th + 1.0)), (b.dag(), mode.gamma_m * n_th)]
    return tuple((o, r) for o, r in ops_ if r > 0)


def build_qubit_resonator_model(scenario: Scenario, rotated_basis: bool = False, dim: int = 8,
                                include_dissipation: bool = True, qubit_frame: bool = False) -> lb.LindbladModel:
    """Qubit-oscillator master equation for a qubit scenario (Hamiltonian in rad/s).

    cpb_resonator: the charge-basis model E_C Delta N_g sz - (E_J/2) sx +
    Omega b^dag b + lambda (b + b^dag) sz, or with ``rotated_basis`` the
    eigenbasis form (E_J/2) sz + Omega b^dag b + lambda (b + b^dag) sx.
    Other qubit platforms use (omega_q/2) sz + Omega b^dag b + lambda (b +
    b^dag) sz, or the transverse sx coupling when ``rotated_basis`` is set.
    ``qubit_frame`` drops the (omega_q/2) sz term of a longitudinal model
    (it commutes with everything else). Dissipators: pure dephasing
    sqrt(1/2T2) sz and thermal mechanical damping at Gamma_M towards n_th.
    """
    if scenario.platform not in QUBIT_PLATFORMS:
        raise PreconditionError(f"scenario {scenario.name!r} is not a qubit-resonator platform "
                                f"(qubit platforms: {', '.join(QUBIT_PLATFORMS)})")
    c = constants.active()
    space = lb.qubit_mode_space(dim)
    b = ops.embed(ops.annihilation(dim), 1, space)
    sz = ops.embed(ops.pauli("z"), 0, space)
    sx = ops.embed(ops.pauli("x"), 0, space)
    mode = scenario.params["mode"]
    lam = _qubit_lambda(scenario)
    x = b + b.dag()
    osc = mode.omega_m * (b.dag() @ b)
    if scenario.platform == "cpb_resonator":
        q = scenario.params["qubit"]
        if rotated_basis:
            if q.delta_ng != 0:
                raise PreconditionError("the rotated-basis model assumes Delta N_g = 0")
            h = 0.5 * q.e_j / c.hbar * sz + osc + lam * (x @ sx)
        else:
            h = (q.e_c * q.delta_ng / c.hbar) * sz - 0.5 * q.e_j / c.hbar * sx + osc + lam * (x @ sz)
    else:
        if scenario.platform == "spin_resonator":
            omega_q = scenario.params["spin"].omega_l or mode.omega_m
        else:
            omega_q = scenario.params["levels"].omega_q
        coupling = lam * (x @ (sx if rotated_basis else sz))
        qubit = 0.0 * sz if (qubit_frame and not rotated_basis) else 0.5 * omega_q * sz
        h = qubit + osc + coupling
    desc = dict(lambda_=lam, omega_m=mode.omega_m, rotated_basis=float(rotated_basis))
    return lb.LindbladModel(space, h, _dephasing_and_thermal(scenario, space, include_dissipation), (), desc)


def driven_jc_model(scenario: Scenario, dim: int = 8, include_dissipation: bool = True) -> lb.LindbladModel:
    """Resonant exchange model of the driven charge qubit in the interaction picture.

    With the drive at omega_0 = E_J/hbar - Omega_M and the oscillating terms
    dropped, H = delta/2 sz + lambda (s+ b + s- b^dag), where delta is the
    drive detuning stored in the scenario.
    """
    if scenario.platform != "cpb_resonator":
        raise PreconditionError("the driven exchange model belongs to the cpb_resonator scenario")
    lam = scenario.value("lambda")
    h = lb.jaynes_cummings_hamiltonian(lam, 0.0, scenario.params["drive"].detuning, dim)
    space = h.space
    return lb.LindbladModel(space, h, _dephasing_and_thermal(scenario, space, include_dissipation), (),
                            dict(lambda_=lam))


# -- membrane / atom and atom-filter models -------------------------------------------

def _membrane_atom_args(s: Scenario) -> dict:
    if s.platform == "cavity_single_atom_membrane":
        mode = s.params["mode"]
        return dict(omega_m=mode.omega_m, omega_at=mode.omega_m, lambda_n=s.value("lambda"), r=1.0,
                    gamma_m=mode.gamma_m, gamma_cool=0.0, n_th=mode.n_th)
    mode, direct = s.params["mode"], s.params["direct"]
    cool = s.params.get("cooling", LatticeCooling(1.0, 0.0))
    lam = cp.lambda_collective(direct, mode) if s.platform != "ion_direct" else cp.lambda_direct(direct, mode)
    return dict(omega_m=mode.omega_m, omega_at=direct.omega_at, lambda_n=lam, r=cool.r,
                gamma_m=mode.gamma_m, gamma_cool=cool.gamma_cool, n_th=mode.n_th)


def membrane_atom_gaussian(s: Scenario, **overrides) -> gs.GaussianModel:
    args = _membrane_atom_args(s)
    args.update(overrides)
    return gs.build_membrane_atom_model(**args)


def membrane_atom_lindblad(s: Scenario, dims: tuple[int, int] = (4, 4), **overrides) -> lb.LindbladModel:
    args = _membrane_atom_args(s)
    args.update(overrides)
    return lb.build_membrane_atom_lindblad(dims, **args)


def atom_filter_gaussian_from(mode: cp.MechanicalMode, af: AtomFilter) -> gs.GaussianModel:
    return gs.build_cavity_atom_mirror_model(mode.omega_m, mode.gamma_m, af.g, af.kappa, af.delta_f,
                                             cp.collective_coupling(af.g_a, af.n_atoms), af.gamma_a,
                                             af.delta_a, mode.n_th)


def atom_filter_gaussian(s: Scenario) -> gs.GaussianModel:
    if s.platform != "cavity_atom_mirror":
        raise PreconditionError("not an atom-filter scenario")
    return atom_filter_gaussian_from(s.params["mode"], s.params["atoms"])


# -- estimate table --------------------------------------------------------------------

@dataclass(frozen=True)
class EstimateRow:
    platform: str
    mechanism: str
    lambda_low: float
    lambda_high: float
    quoted_low_hz: float | None
    quoted_high_hz: float | None
    overlaps: bool | None
    gamma_th: float
    lambda_t2_low: float
    lambda_t2_high: float
    strong_low: bool
    strong_high: bool
    provenance: str

    @property
    def range_hz(self) -> tuple[float, float]:
        return self.lambda_low / TWO_PI, self.lambda_high / TWO_PI


def load_estimate_spans() -> dict:
    text = resources.files("hybridmech").joinpath("data/estimate_spans.json").read_text(encoding="utf-8")
    return json.loads(text)


def _row_lambda(row: dict, corner: dict) -> tuple[float, cp.MechanicalMode]:
    c = constants.active()
    m = dict(row["mode"])
    m.update({k: v for k, v in corner.items() if k == "m_eff"})
    mode = cp.MechanicalMode(m["m_eff"], TWO_PI * m["omega_m_hz"], m["quality_q"], m["temperature"])
    fx = row["fixed"]
    mech = row["mechanism"]
    if mech == "electrostatic":
        c_total = 1e-15
        p = cp.ChargeQubitParams(corner["v_g"], fx["c_ratio"] * c_total, c_total, fx["gap"], c.h * 50e9, c.h * 5e9)
        return cp.lambda_electrostatic(p, mode), mode
    if mech == "lorentz":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", cp.PhysicsWarning)
            p = cp.FluxQubitParams(corner["b_field"], fx["current"], fx["length"])
        return cp.lambda_lorentz(p, mode), mode
    if mech.startswith("magnetic"):
        g = 2.0 * c.mu_p / c.mu_B if fx["g_factor"] == "proton" else float(fx["g_factor"])
        return cp.lambda_magnetic(cp.SpinParams(corner["gradient"], g), mode), mode
    if mech == "deformation":
        p = cp.DeformationParams(corner["delta_d_ev"] * c.e, 0.0, fx["z_0"], fx["length"])
        return cp.lambda_deformation(p, mode), mode
    raise ValueError(f"unknown mechanism {mech!r}")


def estimate_table(spans: dict | None = None) -> list[EstimateRow]:
    """Coupling ranges, thermal rates and strong-coupling verdicts per platform."""
    spans = load_estimate_spans() if spans is None else spans
    rows = []
    for row in spans["rows"]:
        lo, mode_lo = _row_lambda(row, row["low"])
        hi, mode_hi = _row_lambda(row, row["high"])
        lo, hi = min(lo, hi), max(lo, hi)
        q = row.get("quoted_range_hz")
        overlap = None if q is None else bool(hi / TWO_PI >= q[0] and lo / TWO_PI <= q[1])
        gamma_th = cp.thermal_rate(mode_lo)
        f_lo = cp.figure_of_merit(lo, row["t2"], gamma_th=gamma_th)
        f_hi = cp.figure_of_merit(hi, row["t2"], gamma_th=gamma_th)
        rows.append(EstimateRow(row["platform"], row["mechanism"], lo, hi,
                                None if q is None else q[0], None if q is None else q[1], overlap, gamma_th,
                                f_lo.lambda_t2, f_hi.lambda_t2, f_lo.strong_coupling, f_hi.strong_coupling,
                                row["provenance"]))
    return rows
