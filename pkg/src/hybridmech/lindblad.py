"""Dense Lindblad master-equation engine and pure-state simulators.

Hamiltonians are in rad/s (already divided by hbar). The master equation is

    drho/dt = -i[H, rho] + sum_k rate_k D[L_k] rho + sum_j C_j rho

with D[L]rho = L rho L^dag - {L^dag L, rho}/2 and C_j the cascaded
(one-directional) coupling map

    C rho = -i (1 - r) lambda ([target, source rho] - [rho source, target]).

The generator is assembled once as a dense superoperator acting on the
column-stacked density matrix and integrated with an adaptive explicit
Runge-Kutta 8(5,3) pair. Because the generator is time independent, the
exact propagator exp(L dt) can be used instead (``method="propagator"``);
this is much cheaper for long, densely sampled runs of small systems.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from . import operators as ops
from .errors import (NoSteadyStateError, PreconditionError, SpaceMismatchError, StiffnessError,
                     TruncationError, TruncationWarning)
from .gaussian import (build_membrane_atom_model, mode_energy_damping, steady_state_covariance)
from .operators import HilbertSpace, Operator, QuantumState
from .timeseries import TimeSeries

RTOL = 1e-9
ATOL = 1e-12
TRACE_TOL = 1e-8
TOP_FOCK_INITIAL = 1e-8
TOP_FOCK_WARN = 1e-6
MAX_RETRY_HILBERT_DIM = 48  # a doubled-dims retry must stay below a (48^2)^2 superoperator


@dataclass(frozen=True, eq=False)
class CascadedTerm:
    source: Operator
    target: Operator
    strength: float
    r: float

    def __post_init__(self):
        if self.source.space != self.target.space:
            raise SpaceMismatchError("cascaded source and target live on different spaces")
        if not 0.0 <= self.r <= 1.0:
            raise PreconditionError(f"reflectivity r must lie in [0, 1], got {self.r}")


@dataclass(frozen=True, eq=False)
class LindbladModel:
    space: HilbertSpace
    hamiltonian: Operator
    collapse_ops: tuple[tuple[Operator, float], ...] = ()
    cascaded_terms: tuple[CascadedTerm, ...] = ()
    description: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.hamiltonian.space != self.space:
            raise SpaceMismatchError("Hamiltonian lives on a different space")
        if not self.hamiltonian.is_hermitian():
            raise PreconditionError("Hamiltonian is not Hermitian")
        for op, rate in self.collapse_ops:
            if op.space != self.space:
                raise SpaceMismatchError("collapse operator lives on a different space")
            if rate < 0:
                raise PreconditionError("collapse rates must be non-negative")
        for term in self.cascaded_terms:
            if term.source.space != self.space:
                raise SpaceMismatchError("cascaded term lives on a different space")
        object.__setattr__(self, "collapse_ops", tuple(self.collapse_ops))
        object.__setattr__(self, "cascaded_terms", tuple(self.cascaded_terms))

    def superoperator(self) -> np.ndarray:
        d = self.space.dim
        eye = np.eye(d)
        h = self.hamiltonian.matrix
        sup = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
        for op, rate in self.collapse_ops:
            if rate == 0:
                continue
            sup = sup + rate * dissipator_matrix(op.matrix)
        for term in self.cascaded_terms:
            sup = sup + cascaded_superoperator(term.source, term.target, term.strength, term.r).matrix
        return sup


def dissipator_matrix(l: np.ndarray) -> np.ndarray:
    """Column-stacked superoperator of D[L]."""
    d = l.shape[0]
    eye = np.eye(d)
    ldl = l.conj().T @ l
    return np.kron(l.conj(), l) - 0.5 * np.kron(eye, ldl) - 0.5 * np.kron(ldl.T, eye)


class CascadedMap:
    """The map rho -> -i(1-r) lambda ([T, S rho] - [rho S, T])."""

    def __init__(self, source: np.ndarray, target: np.ndarray, prefactor: float):
        self.source = source
        self.target = target
        self.prefactor = prefactor

    def __call__(self, rho):
        rho = rho.density_matrix() if isinstance(rho, QuantumState) else np.asarray(rho)
        s, t = self.source, self.target
        sr, rs = s @ rho, rho @ s
        return -1j * self.prefactor * ((t @ sr - sr @ t) - (rs @ t - t @ rs))

    @property
    def matrix(self) -> np.ndarray:
        s, t = self.source, self.target
        eye = np.eye(s.shape[0])
        # T S rho - S rho T - rho S T + T rho S
        m = np.kron(eye, t @ s) - np.kron(t.T, s) - np.kron((s @ t).T, eye) + np.kron(s.T, t)
        return -1j * self.prefactor * m


def cascaded_superoperator(source: Operator, target: Operator, lambda_n: float, r: float) -> CascadedMap:
    if source.space != target.space:
        raise SpaceMismatchError("source and target live on different spaces")
    if not 0.0 <= r <= 1.0:
        raise PreconditionError(f"reflectivity r must lie in [0, 1], got {r}")
    return CascadedMap(source.matrix, target.matrix, (1.0 - r) * lambda_n)


# -- truncation bookkeeping ------------------------------------------------------

def top_fock_population(rho: np.ndarray, space: HilbertSpace) -> float:
    """Largest population of the top two levels over all bosonic factors."""
    worst = 0.0
    for k, kind in enumerate(space.kinds):
        if kind != "mode":
            continue
        pops = ops.reduced_populations(rho, space, k)
        worst = max(worst, float(pops[-2:].sum()))
    return worst


def _suggest_dims(space: HilbertSpace) -> tuple[int, ...]:
    return tuple(d * 2 if kind == "mode" else d for d, kind in zip(space.dims, space.kinds))


def _observable_values(rho_stack: np.ndarray, observables: Mapping[str, Operator]) -> dict:
    out = {}
    for name, op in observables.items():
        vals = np.einsum("tij,ji->t", rho_stack, op.matrix)
        out[name] = vals.real if op.is_hermitian() else vals
    return out


def _propagate(sup: np.ndarray, y0: np.ndarray, t_grid: np.ndarray) -> np.ndarray:
    """Apply exp(L dt) between grid points, reusing the matrix for equal steps.

    Steps equal to a cached one within 1e-10 relative (round-off of a
    uniform grid) reuse its propagator.
    """
    ys = np.empty((t_grid.size, y0.size), dtype=complex)
    ys[0] = y0
    cache: list[tuple[float, np.ndarray]] = []
    y = y0
    for k, dt in enumerate(np.diff(t_grid)):
        prop = next((m for h, m in cache if abs(dt - h) <= 1e-10 * h), None)
        if prop is None:
            prop = expm(sup * dt)
            cache.append((float(dt), prop))
        y = prop @ y
        ys[k + 1] = y
    return ys


def evolve_master(model: LindbladModel, rho0: QuantumState, t_grid: Sequence[float],
                  observables: Mapping[str, Operator] | None = None,
                  method: str = "rk") -> TimeSeries:
    """Integrate the master equation and record observables on ``t_grid``.

    ``method`` is ``"rk"`` (adaptive DOP853) or ``"propagator"`` (exact
    matrix exponential of the generator between grid points).
    """
    if method not in ("rk", "propagator"):
        raise ValueError(f"unknown method {method!r}")
    if rho0.space != model.space:
        raise SpaceMismatchError("initial state lives on a different space")
    space = model.space
    d = space.dim
    rho_init = rho0.density_matrix()
    top0 = top_fock_population(rho_init, space)
    if top0 >= TOP_FOCK_INITIAL:
        raise TruncationError(
            f"initial top-two Fock population {top0:.2e} >= {TOP_FOCK_INITIAL:.0e}; "
            f"increase truncation, e.g. dims={_suggest_dims(space)}", _suggest_dims(space))
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    sup = model.superoperator()

    def rhs(t, y):
        r = y.reshape(d, d, order="F")
        r = 0.5 * (r + r.conj().T)
        return sup @ r.reshape(-1, order="F")

    y0 = rho_init.reshape(-1, order="F")
    if t_grid.size == 1:
        ys = y0[None, :]
    elif method == "propagator":
        ys = _propagate(sup, y0, t_grid)
    else:
        sol = solve_ivp(rhs, (t_grid[0], t_grid[-1]), y0, method="DOP853", t_eval=t_grid,
                        rtol=RTOL, atol=ATOL)
        if sol.status != 0:
            raise StiffnessError(f"master-equation integration failed: {sol.message}")
        ys = sol.y.T
    rhos = ys.reshape(-1, d, d, order="F")
    rhos = 0.5 * (rhos + rhos.conj().transpose(0, 2, 1))
    traces = np.real(np.einsum("tii->t", rhos))
    trace_dev = np.abs(traces - 1.0)
    if np.max(trace_dev) > TRACE_TOL:
        raise StiffnessError(f"trace drift {np.max(trace_dev):.2e} exceeds {TRACE_TOL:.0e}")
    top = np.array([top_fock_population(r, space) for r in rhos])
    if np.max(top) > TOP_FOCK_WARN:
        warnings.warn(f"top-two Fock population reached {np.max(top):.2e}; truncation may be inadequate "
                      f"(suggested dims {_suggest_dims(space)})", TruncationWarning, stacklevel=2)
    obs = _observable_values(rhos, observables or {})
    diag = {
        "trace_deviation": trace_dev,
        "top_fock_population": top,
        "min_eigenvalue_final": float(np.linalg.eigvalsh(rhos[-1]).min()),
    }
    return TimeSeries(t_grid, obs, diag, final_state=rhos[-1])


def evolve_pure(hamiltonian: Operator, psi0: QuantumState, t_grid: Sequence[float],
                observables: Mapping[str, Operator]) -> TimeSeries:
    """Exact state-vector propagation by diagonalizing a time-independent H."""
    if psi0.space != hamiltonian.space:
        raise SpaceMismatchError("initial state lives on a different space")
    if not psi0.is_pure_vector:
        raise ValueError("evolve_pure needs a state vector")
    if not hamiltonian.is_hermitian():
        raise PreconditionError("Hamiltonian is not Hermitian")
    t_grid = np.asarray(t_grid, dtype=float)
    h = hamiltonian.matrix
    evals, evecs = np.linalg.eigh(0.5 * (h + h.conj().T))
    c0 = evecs.conj().T @ psi0.data
    phases = np.exp(-1j * np.outer(t_grid - t_grid[0], evals))
    psis = (phases * c0) @ evecs.T
    obs = {}
    for name, op in observables.items():
        vals = np.einsum("ti,ij,tj->t", psis.conj(), op.matrix, psis)
        obs[name] = vals.real if op.is_hermitian() else vals
    norms = np.linalg.norm(psis, axis=1)
    top = np.array([top_fock_population(np.outer(p, p.conj()), psi0.space) for p in psis])
    if np.max(top) > TOP_FOCK_WARN:
        warnings.warn(f"top-two Fock population reached {np.max(top):.2e}", TruncationWarning, stacklevel=2)
    return TimeSeries(t_grid, obs, {"norm_deviation": np.abs(norms - 1.0), "top_fock_population": top},
                      final_state=psis[-1])


# -- qubit-oscillator models -------------------------------------------------------

def qubit_mode_space(dim: int) -> HilbertSpace:
    return HilbertSpace.build(("qubit", 2, "qubit"), ("b", dim))


def _qubit_mode_ops(dim: int):
    space = qubit_mode_space(dim)
    b = ops.embed(ops.annihilation(dim), 1, space)
    sz = ops.embed(ops.pauli("z"), 0, space)
    sx = ops.embed(ops.pauli("x"), 0, space)
    sp = ops.embed(ops.pauli("+"), 0, space)
    sm = ops.embed(ops.pauli("-"), 0, space)
    return space, b, sz, sx, sp, sm


def jaynes_cummings_hamiltonian(lam: float, omega_m: float, detuning: float, dim: int) -> Operator:
    """(omega_q/2) sz + Omega b^dag b + lam (s+ b + s- b^dag), omega_q = Omega + detuning."""
    space, b, sz, sx, sp, sm = _qubit_mode_ops(dim)
    return 0.5 * (omega_m + detuning) * sz + omega_m * (b.dag() @ b) + lam * (sp @ b + sm @ b.dag())


def spin_resonator_hamiltonian(lambda_mag: float, omega_l: float, omega_m: float, dim: int,
                               use_rwa: bool = False) -> Operator:
    """(omega_L/2) sz + Omega b^dag b + lambda (b + b^dag) sx, or its RWA."""
    if use_rwa:
        return jaynes_cummings_hamiltonian(lambda_mag, omega_m, omega_l - omega_m, dim)
    space, b, sz, sx, sp, sm = _qubit_mode_ops(dim)
    return 0.5 * omega_l * sz + omega_m * (b.dag() @ b) + lambda_mag * ((b + b.dag()) @ sx)


def _qubit_mode_observables(dim: int) -> dict[str, Operator]:
    space, b, sz, sx, sp, sm = _qubit_mode_ops(dim)
    n = b.dag() @ b
    return {"P_e": sp @ sm, "n_phonon": n, "excitation": sp @ sm + n, "sigma_z": sz}


def _as_state(psi0, space: HilbertSpace) -> QuantumState:
    if isinstance(psi0, QuantumState):
        return psi0
    if isinstance(psi0, tuple):
        return ops.basis_state(space, psi0)
    return QuantumState(space, np.asarray(psi0, dtype=complex))


def simulate_jaynes_cummings(lam: float, omega_m: float, detuning: float, dim: int, psi0,
                             t_grid: Sequence[float]) -> TimeSeries:
    """Resonant exchange model; ``psi0`` may be a level tuple, e.g. ``(1, 0)`` for |e,0>."""
    if dim < 2:
        raise ops.InvalidDimensionError("dim must be >= 2")
    h = jaynes_cummings_hamiltonian(lam, omega_m, detuning, dim)
    state = _as_state(psi0, h.space)
    ts = evolve_pure(h, state, t_grid, _qubit_mode_observables(dim))
    exc = ts.observables["excitation"]
    ts.diagnostics["excitation_drift"] = np.abs(exc - exc[0])
    return ts


def simulate_spin_resonator_full(lambda_mag: float, omega_l: float, omega_m: float, dim: int, psi0,
                                 t_grid: Sequence[float], use_rwa: bool = False) -> TimeSeries:
    h = spin_resonator_hamiltonian(lambda_mag, omega_l, omega_m, dim, use_rwa)
    return evolve_pure(h, _as_state(psi0, h.space), t_grid, _qubit_mode_observables(dim))


def dispersive_hamiltonian(chi: float, omega_q: float, omega_m: float, dim: int) -> Operator:
    """(omega_q/2) sz + Omega b^dag b + chi (b^dag b + 1/2) sz."""
    space, b, sz, sx, sp, sm = _qubit_mode_ops(dim)
    n = b.dag() @ b
    return 0.5 * omega_q * sz + omega_m * n + chi * ((n + 0.5) @ sz)


def simulate_dispersive_qnd(chi: float, e_j: float, omega_m: float, dim: int, rho0,
                            t_grid: Sequence[float]) -> TimeSeries:
    """Dispersive phonon-number readout.

    ``e_j`` is the qubit splitting in J. Observables: phonon-number
    populations ``P_n<k>``, the Ramsey signal 2 Re[rho_eg e^{i E_J t/hbar}]
    and its unwrapped phase (both in the frame rotating at E_J/hbar).
    """
    from .constants import active

    omega_q = e_j / active().hbar
    h = dispersive_hamiltonian(chi, omega_q, omega_m, dim)
    space = h.space
    state = _as_state(rho0, space)
    rho = state.density_matrix()
    t = np.asarray(t_grid, dtype=float)
    energies = np.real(np.diagonal(h.matrix))  # H is diagonal in the product basis
    phase = np.exp(-1j * np.outer(t - t[0], energies))
    rhos = phase[:, :, None] * rho[None, :, :] * phase.conj()[:, None, :]
    pops = np.real(np.einsum("tii->ti", rhos)).reshape(len(t), 2, dim).sum(axis=1)
    sm = ops.embed(ops.pauli("-"), 0, space).matrix
    coh = np.einsum("tij,ji->t", rhos, sm)  # tr(rho |g><e|) = rho_eg
    rot = coh * np.exp(1j * omega_q * (t - t[0]))
    obs = {f"P_n{k}": pops[:, k] for k in range(dim)}
    obs["ramsey_signal"] = 2.0 * rot.real
    obs["ramsey_phase"] = -np.unwrap(np.angle(rot)) if np.all(np.abs(rot) > 0) else np.zeros_like(t)
    diag = {"population_drift": float(np.max(np.abs(pops - pops[0])))}
    return TimeSeries(t, obs, diag, final_state=rhos[-1])


# -- membrane / atom model -----------------------------------------------------------

def membrane_atom_space(dim_m: int, dim_at: int) -> HilbertSpace:
    return HilbertSpace.build(("membrane", dim_m), ("atom", dim_at))


def build_membrane_atom_lindblad(dims: tuple[int, int], omega_m: float, omega_at: float, lambda_n: float,
                                 r: float, gamma_m: float = 0.0, gamma_cool: float = 0.0,
                                 n_th: float = 0.0, diffusion_m: float | None = None,
                                 diffusion_at: float | None = None) -> LindbladModel:
    """Master equation for membrane and atomic COM motion with cascaded coupling.

    The printed structure -i[H_sys - 2 c q_at q, rho] + C rho with cascade
    strength c yields mean equations in which the sign of c is opposite to
    the coupling sign of the Gaussian model. The model is therefore
    assembled with c = -lambda_n, i.e. with the conjugate sign convention
    q_at -> -q_at, so that its means obey the same equations as
    ``gaussian.build_membrane_atom_model`` with the same arguments.
    Parameters and defaults otherwise match that function.
    """
    if not 0.0 <= r <= 1.0:
        raise PreconditionError(f"reflectivity r must lie in [0, 1], got {r}")
    space = membrane_atom_space(*dims)
    b = ops.embed(ops.annihilation(dims[0]), 0, space)
    a = ops.embed(ops.annihilation(dims[1]), 1, space)
    q = (b + b.dag()) / math.sqrt(2.0)
    q_at = (a + a.dag()) / math.sqrt(2.0)
    c = -lambda_n
    h = omega_m * (b.dag() @ b) + omega_at * (a.dag() @ a) - 2.0 * c * (q_at @ q)
    k_min = (1.0 - r) * abs(lambda_n)
    k_m = k_min if diffusion_m is None else diffusion_m
    k_at = k_min if diffusion_at is None else diffusion_at
    collapse = [
        (b, gamma_m * (n_th + 1.0)),
        (b.dag(), gamma_m * n_th),
        (a, gamma_cool),
        (q, k_m),
        (q_at, k_at),
    ]
    collapse = [(op, rate) for op, rate in collapse if rate > 0]
    cascade = [CascadedTerm(q_at, q, c, r)] if r < 1.0 else []
    desc = dict(omega_m=omega_m, omega_at=omega_at, lambda_n=lambda_n, r=r, gamma_m=gamma_m,
                gamma_cool=gamma_cool, n_th=n_th, diffusion_m=k_m, diffusion_at=k_at)
    return LindbladModel(space, h, tuple(collapse), tuple(cascade), desc)


def membrane_atom_observables(space: HilbertSpace) -> dict[str, Operator]:
    b = ops.embed(ops.annihilation(space.dims[0]), 0, space)
    a = ops.embed(ops.annihilation(space.dims[1]), 1, space)
    s2 = math.sqrt(2.0)
    return {
        "q": (b + b.dag()) / s2,
        "p": 1j * (b.dag() - b) / s2,
        "q_at": (a + a.dag()) / s2,
        "p_at": 1j * (a.dag() - a) / s2,
        "n_m": b.dag() @ b,
        "n_at": a.dag() @ a,
    }


# -- sympathetic cooling ---------------------------------------------------------

@dataclass(frozen=True)
class SympatheticParams:
    omega_m: float
    omega_at: float
    lambda_n: float
    r: float = 1.0
    gamma_m: float = 0.0
    gamma_cool: float = 0.0
    n_th: float = 0.0
    n0: int = 1
    diffusion_m: float | None = None
    diffusion_at: float | None = None

    def gaussian_model(self):
        return build_membrane_atom_model(self.omega_m, self.omega_at, self.lambda_n, self.r, self.gamma_m,
                                         self.gamma_cool, self.n_th, self.diffusion_m, self.diffusion_at)


@dataclass
class CoolingFit:
    rate: float | None
    predicted: float | None
    n_infinity: float
    decay_constants: float
    ok: bool
    message: str = ""


def fit_exponential_decay(t: np.ndarray, n: np.ndarray, n_inf: float, t_discard: float) -> tuple[float, float]:
    """Least-squares slope of log(n - n_inf) after ``t_discard``; returns (rate, r2)."""
    sel = (t >= t[0] + t_discard) & (n - n_inf > 0)
    if sel.sum() < 3:
        raise ValueError("not enough points above the asymptote")
    y = np.log(n[sel] - n_inf)
    slope, intercept = np.polyfit(t[sel], y, 1)
    pred = slope * t[sel] + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    return float(-slope), 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0


def simulate_sympathetic_cooling(params: SympatheticParams, dims: tuple[int, int],
                                 t_grid: Sequence[float],
                                 method: str = "propagator") -> tuple[TimeSeries, CoolingFit]:
    """Membrane phonon decay from Fock |n0> with the atom in its ground state.

    The fitted energy-decay rate is compared with Gamma_M + 4 r lambda_N^2 /
    gamma_cool. The first 3/gamma_cool of the trace (atomic transient) is
    discarded before fitting. On a truncation warning the bosonic dims are
    doubled once and the run repeated, provided the doubled space stays within
    ``MAX_RETRY_HILBERT_DIM`` states.
    """
    from .gaussian import sympathetic_damping

    if max(dims) > 10:
        warnings.warn("dims above 10 per mode make the dense superoperator expensive", stacklevel=2)

    def run(dm):
        model = build_membrane_atom_lindblad(dm, params.omega_m, params.omega_at, params.lambda_n, params.r,
                                             params.gamma_m, params.gamma_cool, params.n_th,
                                             params.diffusion_m, params.diffusion_at)
        rho0 = ops.product_state(model.space, [ops.fock_vector(dm[0], params.n0), ops.fock_vector(dm[1], 0)])
        return evolve_master(model, rho0, t_grid, membrane_atom_observables(model.space), method)

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", TruncationWarning)
        ts = run(dims)
    truncated = any(issubclass(w.category, TruncationWarning) for w in caught)
    bigger = tuple(2 * d for d in dims)
    if truncated and math.prod(bigger) <= MAX_RETRY_HILBERT_DIM:
        ts = run(bigger)
    elif truncated:
        warnings.warn(f"truncation warning at dims {dims}; not retrying with {bigger} (too large)",
                      TruncationWarning, stacklevel=2)
    t = ts.t
    n_m = ts["n_m"]
    gm = params.gaussian_model()
    predicted = sympathetic_damping(params.gamma_m, params.r, params.lambda_n, params.gamma_cool) \
        if params.gamma_cool > 0 else params.gamma_m
    try:
        n_inf = steady_state_covariance(gm).phonons(0)
    except NoSteadyStateError:
        return ts, CoolingFit(None, predicted, float("nan"), 0.0, False,
                              "no steady state: no damping channel, coherent exchange only")
    t_discard = 3.0 / params.gamma_cool if params.gamma_cool > 0 else 0.0
    try:
        rate, r2 = fit_exponential_decay(t, n_m, n_inf, t_discard)
    except ValueError as exc:
        return ts, CoolingFit(None, predicted, n_inf, 0.0, False, str(exc))
    n_decay = rate * (t[-1] - t[0] - t_discard)
    ok = r2 > 0.99 and n_decay >= 5.0
    msg = "" if ok else f"fit quality r2={r2:.4f}, decay constants covered={n_decay:.2f}"
    ts.diagnostics["gaussian_eigen_rate"] = mode_energy_damping(gm, 0)
    return ts, CoolingFit(rate, predicted, n_inf, n_decay, ok, msg)
