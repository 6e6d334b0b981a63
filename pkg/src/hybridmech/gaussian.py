"""Linearized (Gaussian) open-system dynamics.

Quadratures are q = (b + b^dag)/sqrt(2), p = i(b^dag - b)/sqrt(2) with vacuum
variance 1/2. A model is the drift/diffusion pair of

    dx/dt = A x + noise,      d Sigma/dt = A Sigma + Sigma A^T + D,

where Sigma is the symmetrized covariance matrix and the mode-wise phonon
number is n = (Sigma_qq + Sigma_pp - 1)/2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .errors import NoSteadyStateError, PhysicsWarning, PreconditionError, StiffnessError
from .timeseries import TimeSeries

RTOL = 1e-10
ATOL = 1e-13
LYAPUNOV_RTOL = 1e-10
REFINEMENT_STEPS = 5
PSD_TOL = 1e-12


def symplectic_form(n_modes: int) -> np.ndarray:
    """Block-diagonal [[0, 1], [-1, 0]] per mode, so [x_i, x_j] = i*Omega_ij."""
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


@dataclass(frozen=True, eq=False)
class GaussianModel:
    drift: np.ndarray
    diffusion: np.ndarray
    labels: tuple[str, ...]
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        a = np.array(self.drift, dtype=float)
        d = np.array(self.diffusion, dtype=float)
        n = a.shape[0]
        if a.shape != (n, n) or d.shape != (n, n) or n % 2:
            raise ValueError("drift and diffusion must be square, equal-sized and even-dimensional")
        if len(self.labels) != n:
            raise ValueError("one label per quadrature required")
        scale = max(np.max(np.abs(d)), 1.0)
        if np.max(np.abs(d - d.T)) > PSD_TOL * scale:
            raise ValueError("diffusion matrix is not symmetric")
        d = 0.5 * (d + d.T)
        if np.linalg.eigvalsh(d).min() < -PSD_TOL * scale:
            raise ValueError("diffusion matrix is not positive semidefinite")
        for arr in (a, d):
            arr.setflags(write=False)
        object.__setattr__(self, "drift", a)
        object.__setattr__(self, "diffusion", d)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "params", dict(self.params))

    @property
    def n_modes(self) -> int:
        return self.drift.shape[0] // 2

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.drift)

    def is_stable(self) -> bool:
        return bool(np.all(self.eigenvalues().real < 0))

    def index(self, label: str) -> int:
        return self.labels.index(label)


@dataclass
class CovarianceReport:
    covariance: np.ndarray
    phonon_numbers: np.ndarray
    purity: float
    lyapunov_residual: float
    min_physical_eigenvalue: float

    def phonons(self, mode: int = 0) -> float:
        return float(self.phonon_numbers[mode])


# -- model builders ------------------------------------------------------------

def build_membrane_atom_model(omega_m: float, omega_at: float, lambda_n: float, r: float,
                              gamma_m: float = 0.0, gamma_cool: float = 0.0, n_th: float = 0.0,
                              diffusion_m: float | None = None,
                              diffusion_at: float | None = None) -> GaussianModel:
    """Membrane + atomic COM with r-asymmetric position coupling.

    Quadrature order (q, p, q_at, p_at). The conservative part is

        dp/dt    = -Omega_M q    - 2 r lambda_N q_at
        dp_at/dt = -Omega_at q_at - 2 lambda_N q

    Membrane heating/damping at energy rate ``gamma_m`` towards ``n_th`` and
    atomic laser cooling at energy rate ``gamma_cool`` towards the ground
    state use the quantum-optical form (both quadratures damped at half the
    energy rate). ``diffusion_m``/``diffusion_at`` are momentum-diffusion
    rates (Lindblad operators sqrt(rate)*q); by default both equal
    (1 - r)|lambda_N|, the smallest values for which the asymmetric master
    equation stays completely positive.
    """
    if not 0.0 <= r <= 1.0:
        raise PreconditionError(f"reflectivity r must lie in [0, 1], got {r}")
    if min(gamma_m, gamma_cool, n_th) < 0:
        raise PreconditionError("rates and occupations must be non-negative")
    k_min = (1.0 - r) * abs(lambda_n)
    k_m = k_min if diffusion_m is None else diffusion_m
    k_at = k_min if diffusion_at is None else diffusion_at
    a = np.array([
        [-gamma_m / 2, omega_m, 0.0, 0.0],
        [-omega_m, -gamma_m / 2, -2.0 * r * lambda_n, 0.0],
        [0.0, 0.0, -gamma_cool / 2, omega_at],
        [-2.0 * lambda_n, 0.0, -omega_at, -gamma_cool / 2],
    ])
    d = np.diag([
        gamma_m * (n_th + 0.5),
        gamma_m * (n_th + 0.5) + k_m,
        gamma_cool * 0.5,
        gamma_cool * 0.5 + k_at,
    ])
    params = dict(omega_m=omega_m, omega_at=omega_at, lambda_n=lambda_n, r=r, gamma_m=gamma_m,
                  gamma_cool=gamma_cool, n_th=n_th, diffusion_m=k_m, diffusion_at=k_at)
    return GaussianModel(a, d, ("q", "p", "q_at", "p_at"), params)


def build_cavity_atom_mirror_model(omega_m: float, gamma_m: float, g: float, kappa: float,
                                   delta_f: float, g_a: float, gamma_a: float, delta_a: float,
                                   n_th: float = 0.0) -> GaussianModel:
    """Mirror + cavity field a + collective atomic mode c.

    Quadrature order (q, p, a_x, a_y, c_x, c_y) with a = (a_x + i a_y)/sqrt(2).
    ``gamma_m`` is momentum damping; the mirror noise is white with
    occupation ``n_th``; the field and atomic inputs are vacuum noise.
    """
    if kappa <= 0 or gamma_a <= 0:
        raise PreconditionError("kappa and gamma_a must be positive")
    s2 = math.sqrt(2.0)
    a = np.zeros((6, 6))
    a[0, 1] = omega_m
    a[1, 0], a[1, 1], a[1, 2] = -omega_m, -gamma_m, s2 * g
    a[2, 2], a[2, 3], a[2, 5] = -kappa, delta_f, g_a
    a[3, 3], a[3, 2], a[3, 0], a[3, 4] = -kappa, -delta_f, s2 * g, -g_a
    a[4, 4], a[4, 5], a[4, 3] = -gamma_a, delta_a, g_a
    a[5, 5], a[5, 4], a[5, 2] = -gamma_a, -delta_a, -g_a
    d = np.diag([0.0, gamma_m * (2.0 * n_th + 1.0), kappa, kappa, gamma_a, gamma_a])
    params = dict(omega_m=omega_m, gamma_m=gamma_m, g=g, kappa=kappa, delta_f=delta_f, g_a=g_a,
                  gamma_a=gamma_a, delta_a=delta_a, n_th=n_th)
    return GaussianModel(a, d, ("q", "p", "a_x", "a_y", "c_x", "c_y"), params)


def thermal_oscillator_model(omega: float, gamma: float, n_th: float) -> GaussianModel:
    """Single damped oscillator in the quantum-optical form."""
    a = np.array([[-gamma / 2, omega], [-omega, -gamma / 2]])
    d = np.eye(2) * gamma * (n_th + 0.5)
    return GaussianModel(a, d, ("q", "p"), dict(omega=omega, gamma=gamma, n_th=n_th))


# -- dynamics ------------------------------------------------------------------

def _integrate(rhs, y0: np.ndarray, t_grid: np.ndarray, rtol: float, atol: float) -> np.ndarray:
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 1 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    if t_grid.size == 1:
        return y0[None, :]
    sol = solve_ivp(rhs, (t_grid[0], t_grid[-1]), y0, method="DOP853", t_eval=t_grid,
                    rtol=rtol, atol=atol)
    if sol.status != 0:
        raise StiffnessError(f"integration failed at t={sol.t[-1] if sol.t.size else t_grid[0]}: {sol.message}")
    return sol.y.T


def evolve_means(model: GaussianModel, x0: Sequence[float], t_grid: Sequence[float]) -> TimeSeries:
    """Integrate d<x>/dt = A <x> on ``t_grid`` with an adaptive 8(5,3) pair."""
    a = model.drift
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (a.shape[0],):
        raise ValueError("x0 has the wrong length")
    scale = max(np.max(np.abs(x0)), 1e-300)
    ys = _integrate(lambda t, y: a @ y, x0, t_grid, RTOL, ATOL * scale)
    obs = {lab: ys[:, i] for i, lab in enumerate(model.labels)}
    return TimeSeries(np.asarray(t_grid, dtype=float), obs)


def evolve_covariance(model: GaussianModel, sigma0: np.ndarray, t_grid: Sequence[float]) -> np.ndarray:
    """Covariance matrices Sigma(t) on ``t_grid``, shape (len(t), n, n)."""
    a, d = model.drift, model.diffusion
    n = a.shape[0]

    def rhs(t, y):
        s = y.reshape(n, n)
        return (a @ s + s @ a.T + d).ravel()

    ys = _integrate(rhs, np.asarray(sigma0, dtype=float).ravel(), t_grid, RTOL, ATOL)
    out = ys.reshape(-1, n, n)
    return 0.5 * (out + out.transpose(0, 2, 1))


def phonon_numbers(sigma: np.ndarray) -> np.ndarray:
    n = sigma.shape[0] // 2
    return np.array([(sigma[2 * k, 2 * k] + sigma[2 * k + 1, 2 * k + 1] - 1.0) / 2.0 for k in range(n)])


def physicality_margin(sigma: np.ndarray) -> float:
    """Smallest eigenvalue of Sigma + (i/2) Omega (>= 0 for a quantum state)."""
    omega = symplectic_form(sigma.shape[0] // 2)
    return float(np.linalg.eigvalsh(sigma + 0.5j * omega).min())


def solve_lyapunov(a: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Solve A S + S A^T + D = 0 by a dense Kronecker linear solve."""
    n = a.shape[0]
    eye = np.eye(n)
    k = np.kron(eye, a) + np.kron(a, eye)
    s = np.linalg.solve(k, -d.reshape(-1, order="F")).reshape(n, n, order="F")
    s = 0.5 * (s + s.T)
    # Iterative refinement: drift matrices mixing MHz cavities with mHz mechanical
    # damping need a few passes to bring the residual down to rounding level.
    res = a @ s + s @ a.T + d
    best = np.linalg.norm(res)
    for _ in range(REFINEMENT_STEPS):
        corr = np.linalg.solve(k, -res.reshape(-1, order="F")).reshape(n, n, order="F")
        trial = s + 0.5 * (corr + corr.T)
        res = a @ trial + trial @ a.T + d
        norm = np.linalg.norm(res)
        if norm >= best:
            break
        s, best = trial, norm
    return s


def lyapunov_residual(a: np.ndarray, s: np.ndarray, d: np.ndarray) -> float:
    return float(np.linalg.norm(a @ s + s @ a.T + d) / max(np.linalg.norm(d), 1e-300))


def steady_state_covariance(model: GaussianModel) -> CovarianceReport:
    if not model.is_stable():
        worst = float(np.max(model.eigenvalues().real))
        raise NoSteadyStateError(f"drift matrix is not strictly stable (max Re eigenvalue {worst:.3e})")
    a, d = model.drift, model.diffusion
    s = solve_lyapunov(a, d)
    res = lyapunov_residual(a, s, d)
    if res > LYAPUNOV_RTOL:
        raise NoSteadyStateError(f"Lyapunov residual {res:.2e} exceeds {LYAPUNOV_RTOL:.0e}")
    det = np.linalg.det(s)
    purity = 1.0 / (2 ** model.n_modes * math.sqrt(det)) if det > 0 else float("nan")
    return CovarianceReport(s, phonon_numbers(s), purity, res, physicality_margin(s))


# -- rates -----------------------------------------------------------------------

def _mode_weight(vec: np.ndarray, idx: Sequence[int]) -> float:
    w = np.abs(vec) ** 2
    return float(w[list(idx)].sum() / w.sum())


def mode_energy_damping(model: GaussianModel, mode: int = 0) -> float:
    """Energy damping rate (-2 Re of the eigenvalue) of the normal mode with
    the largest weight on quadratures of ``mode``."""
    vals, vecs = np.linalg.eig(model.drift)
    idx = (2 * mode, 2 * mode + 1)
    best = max(range(len(vals)), key=lambda i: _mode_weight(vecs[:, i], idx))
    return float(-2.0 * vals[best].real)


def langevin_force_spectrum(model: GaussianModel, omega_grid: Sequence[float] | float,
                            mechanical_mode: int = 0) -> np.ndarray:
    """Quantum (non-symmetrized) spectrum of the force on a mechanical mode.

    The force is the part of dp/dt contributed by all other quadratures. The
    returned spectrum is normalized as S(w) = (1/2) * int dt e^{iwt} <F(t)F(0)>,
    so that the phonon-lowering (anti-Stokes) and raising (Stokes) rates are
    S(+Omega_M) and S(-Omega_M). The unsymmetrized noise correlations of the
    bath are reconstructed from the drift as D + iK with
    K = -(A Omega + Omega A^T)/2 (commutator preservation).
    """
    a, d = model.drift, model.diffusion
    n = a.shape[0]
    mech = [2 * mechanical_mode, 2 * mechanical_mode + 1]
    sub = [i for i in range(n) if i not in mech]
    a_s = a[np.ix_(sub, sub)]
    d_s = d[np.ix_(sub, sub)]
    f = a[mech[1], sub]
    if np.any(np.linalg.eigvals(a_s).real >= 0):
        raise NoSteadyStateError("bath subsystem is not stable; force spectrum undefined")
    om = symplectic_form(len(sub) // 2)
    noise = d_s - 0.5j * (a_s @ om + om @ a_s.T)
    w = np.atleast_1d(np.asarray(omega_grid, dtype=float))
    out = np.empty(w.shape)
    eye = np.eye(len(sub))
    for i, wi in enumerate(w):
        # x(w) = G(w) xi(w), G = (-i w - A)^{-1}
        gf = np.linalg.solve((-1j * wi) * eye - a_s, np.eye(len(sub))).T @ f
        out[i] = 0.5 * float(np.real(gf @ noise @ gf.conj()))
    return out if np.ndim(omega_grid) else out[0]


def sideband_rates(model: GaussianModel, omega_m: float | None = None) -> tuple[float, float]:
    """(A_as, A_s): cooling and heating rates from the force spectrum."""
    w = model.params.get("omega_m") if omega_m is None else omega_m
    s = langevin_force_spectrum(model, [w, -w])
    return float(s[0]), float(s[1])


def optical_damping(g: float, kappa: float, c: float) -> float:
    """Atom-assisted optical damping (g^2/kappa) * C/(1+C)."""
    if kappa <= 0 or c < 0:
        raise PreconditionError("need kappa > 0 and C >= 0")
    return g ** 2 / kappa * c / (1.0 + c)


def stokes_rate(g: float, kappa: float, c: float) -> float:
    return g ** 2 / (kappa * (1.0 + c))


def residual_occupancy(g: float, kappa: float, c: float, gamma_m: float = 0.0) -> float:
    """n_res = A_s / (Gamma_M + Gamma_opt); tends to 1/C for large C."""
    return stokes_rate(g, kappa, c) / (gamma_m + optical_damping(g, kappa, c))


def sympathetic_damping(gamma_m: float, r: float, lambda_n: float, gamma_cool: float) -> float:
    """Gamma_eff = Gamma_M + 4 r lambda_N^2 / gamma_cool."""
    return gamma_m + sympathetic_damping_shift(r, lambda_n, gamma_cool)


def sympathetic_damping_shift(r: float, lambda_n: float, gamma_cool: float) -> float:
    if gamma_cool <= 0:
        raise PreconditionError("atomic cooling rate must be positive")
    if abs(lambda_n) > 0.1 * gamma_cool:
        warnings.warn("sympathetic damping formula assumes lambda_N << gamma_cool",
                      PhysicsWarning, stacklevel=2)
    return 4.0 * r * lambda_n ** 2 / gamma_cool
