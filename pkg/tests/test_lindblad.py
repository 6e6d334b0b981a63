import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from hybridmech import gaussian as gs
from hybridmech import lindblad as lb
from hybridmech import operators as ops
from hybridmech.errors import PreconditionError, SpaceMismatchError, TruncationError, TruncationWarning


def single_mode(dim):
    return ops.HilbertSpace.single(dim)


def test_trivial_model_is_static():
    space = single_mode(4)
    rho0 = ops.product_state(space, [ops.thermal_matrix(4, 0.0) * 0 + np.diag([0.6, 0.4, 0, 0])])
    model = lb.LindbladModel(space, ops.Operator(space, np.zeros((4, 4))))
    ts = lb.evolve_master(model, rho0, np.linspace(0, 5, 11))
    assert np.allclose(ts.final_state, rho0.data, atol=1e-14)


@pytest.mark.parametrize("method", ["rk", "propagator"])
def test_amplitude_decay(method):
    dim, kappa, n0 = 8, 0.7, 3
    space = single_mode(dim)
    b = ops.annihilation(dim)
    model = lb.LindbladModel(space, 0.3 * (b.dag() @ b), ((b, kappa),))
    t = np.linspace(0, 6, 61)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        ts = lb.evolve_master(model, ops.basis_state(space, (n0,)), t, {"n": b.dag() @ b}, method)
    assert np.max(np.abs(ts["n"] - n0 * np.exp(-kappa * t))) < 1e-6
    assert np.max(ts.diagnostics["trace_deviation"]) <= 1e-8


def test_model_validation():
    space = single_mode(3)
    b = ops.annihilation(3)
    with pytest.raises(PreconditionError):
        lb.LindbladModel(space, b)
    with pytest.raises(PreconditionError):
        lb.LindbladModel(space, b.dag() @ b, ((b, -1.0),))
    with pytest.raises(SpaceMismatchError):
        lb.LindbladModel(space, ops.number(4))
    with pytest.raises(ValueError):
        lb.evolve_master(lb.LindbladModel(space, b.dag() @ b), ops.basis_state(space, (0,)), [0, 1], method="euler")


def test_truncation_guard():
    space = single_mode(4)
    b = ops.annihilation(4)
    model = lb.LindbladModel(space, b.dag() @ b)
    with pytest.raises(TruncationError):
        lb.evolve_master(model, ops.basis_state(space, (3,)), [0, 1])


def test_cascaded_zero_at_full_reflectivity():
    space = lb.membrane_atom_space(3, 3)
    obs = lb.membrane_atom_observables(space)
    assert np.all(lb.cascaded_superoperator(obs["q_at"], obs["q"], 0.3, 1.0).matrix == 0)
    with pytest.raises(PreconditionError):
        lb.cascaded_superoperator(obs["q_at"], obs["q"], 0.3, 1.2)


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 3), st.integers(2, 3), st.floats(0.0, 1.0), st.integers(0, 10_000))
def test_cascaded_map_is_traceless_and_matches_matrix(d0, d1, r, seed):
    rng = np.random.default_rng(seed)
    space = lb.membrane_atom_space(d0, d1)
    obs = lb.membrane_atom_observables(space)
    cmap = lb.cascaded_superoperator(obs["q_at"], obs["q"], 0.4, r)
    n = space.dim
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = m + m.conj().T
    out = cmap(rho)
    assert abs(np.trace(out)) < 1e-10
    vec = cmap.matrix @ rho.reshape(-1, order="F")
    assert np.allclose(vec.reshape(n, n, order="F"), out, atol=1e-10)


@pytest.mark.parametrize("r", [0.3, 1.0])
def test_means_match_gaussian_model(r):
    omega, lam, gc = 1.0, 1e-3, 0.05
    dims = (6, 5)
    model = lb.build_membrane_atom_lindblad(dims, omega, 1.05 * omega, lam, r, 0.0, gc)
    gm = gs.build_membrane_atom_model(omega, 1.05 * omega, lam, r, 0.0, gc)
    alpha = 0.05
    rho0 = ops.product_state(model.space, [ops.coherent_vector(dims[0], alpha), ops.fock_vector(dims[1], 0)])
    t = np.linspace(0, 10 * 2 * math.pi, 401)
    ts = lb.evolve_master(model, rho0, t, lb.membrane_atom_observables(model.space), "propagator")
    means = gs.evolve_means(gm, [math.sqrt(2) * alpha, 0, 0, 0], t)
    for k in ("q", "p", "q_at", "p_at"):
        assert np.max(np.abs(ts[k] - means[k])) < 1e-6
    assert ts.diagnostics["min_eigenvalue_final"] >= -1e-7
    assert np.max(ts.diagnostics["trace_deviation"]) <= 1e-8


def test_second_moments_match_gaussian_model():
    omega, lam, r, gc, gm_, nth = 1.0, 0.01, 0.5, 0.1, 0.02, 0.05
    dims = (6, 6)
    model = lb.build_membrane_atom_lindblad(dims, omega, omega, lam, r, gm_, gc, nth)
    gm = gs.build_membrane_atom_model(omega, omega, lam, r, gm_, gc, nth)
    rho0 = ops.basis_state(model.space, (0, 0))
    t = np.linspace(0, 20, 41)
    obs = lb.membrane_atom_observables(model.space)
    quads = {"q": obs["q"], "p": obs["p"], "q_at": obs["q_at"], "p_at": obs["p_at"]}
    second = {f"{a}{b}": 0.5 * (quads[a] @ quads[b] + quads[b] @ quads[a])
              for i, a in enumerate(quads) for b in list(quads)[i:]}
    # the thermal tail just reaches the 6x6 guard; the moments still agree to 1e-5
    with pytest.warns(TruncationWarning):
        ts = lb.evolve_master(model, rho0, t, second, "propagator")
    sig = gs.evolve_covariance(gm, np.eye(4) / 2, t)
    labels = list(quads)
    for i, a in enumerate(labels):
        for j in range(i, 4):
            assert np.max(np.abs(ts[f"{a}{labels[j]}"] - sig[:, i, j])) < 1e-5


def test_jaynes_cummings_swap():
    lam = 0.1
    t = np.linspace(0, math.pi / (2 * lam), 201)
    ts = lb.simulate_jaynes_cummings(lam, 1.0, 0.0, 6, (1, 0), t)
    assert np.max(np.abs(ts["P_e"] - np.cos(lam * t) ** 2)) < 1e-10
    assert ts["P_e"][-1] <= 1e-4
    assert np.max(ts.diagnostics["excitation_drift"]) <= 1e-10
    still = lb.simulate_jaynes_cummings(0.0, 1.0, 0.0, 6, (1, 0), t)
    assert np.max(np.abs(still["P_e"] - 1)) < 1e-12


@pytest.mark.parametrize("n", [1, 2, 4])
def test_jaynes_cummings_rabi_enhancement(n):
    lam, dim = 0.05, 10
    t = np.linspace(0, 60, 121)
    ts = lb.simulate_jaynes_cummings(lam, 1.0, 0.0, dim, (1, n), t)
    # dense oracle: propagate with expm of the matrix directly
    h = lb.jaynes_cummings_hamiltonian(lam, 1.0, 0.0, dim).matrix
    psi0 = ops.basis_state(lb.qubit_mode_space(dim), (1, n)).data
    pe = ops.embed(ops.pauli("+") @ ops.pauli("-"), 0, lb.qubit_mode_space(dim)).matrix
    oracle = [np.vdot(p, pe @ p).real for p in (expm(-1j * h * ti) @ psi0 for ti in t)]
    assert np.allclose(ts["P_e"], oracle, atol=1e-10)
    assert np.allclose(ts["P_e"], np.cos(math.sqrt(n + 1) * lam * t) ** 2, atol=1e-10)


def test_spin_resonator_rwa_and_bloch_siegert():
    dim, omega = 8, 1.0
    t = np.linspace(0, 40, 401)
    free = lb.simulate_spin_resonator_full(0.0, omega, omega, dim, (1, 0), t)
    assert np.max(np.abs(free["sigma_z"] - 1)) < 1e-12
    lam = 0.02
    rwa = lb.simulate_spin_resonator_full(lam, omega, omega, dim, (1, 0), t, use_rwa=True)
    jc = lb.simulate_jaynes_cummings(lam, omega, 0.0, dim, (1, 0), t)
    assert np.array_equal(rwa["P_e"], jc["P_e"])
    lam = 0.1
    t = np.linspace(0, math.pi / (2 * lam), 201)
    full = lb.simulate_spin_resonator_full(lam, omega, omega, dim, (1, 0), t)
    rwa = lb.simulate_spin_resonator_full(lam, omega, omega, dim, (1, 0), t, use_rwa=True)
    deviation = np.max(np.abs(full["P_e"] - rwa["P_e"]))
    # regression value for the counter-rotating correction at lambda / Omega = 0.1
    assert 1e-3 < deviation < 0.1


def test_dispersive_fock_phase_and_invariance():
    chi, dim, omega_m = 0.013, 6, 1.0
    from hybridmech.constants import active
    e_j = active().hbar * 3.0
    space = lb.qubit_mode_space(dim)
    rho0 = ops.product_state(space, [np.array([1, 1]) / math.sqrt(2), ops.fock_vector(dim, 2)])
    t = np.linspace(0, 50, 101)
    ts = lb.simulate_dispersive_qnd(chi, e_j, omega_m, dim, rho0, t)
    assert np.max(np.abs(ts["ramsey_phase"] - 2 * chi * 2.5 * t)) < 1e-8
    assert ts.diagnostics["population_drift"] <= 1e-10
    ts0 = lb.simulate_dispersive_qnd(0.0, e_j, omega_m, dim, rho0, t)
    assert np.max(np.abs(ts0["ramsey_phase"])) < 1e-10


def test_dispersive_poisson_ramsey():
    from hybridmech.constants import active
    chi, dim, alpha = 0.02, 20, 1.2
    e_j = active().hbar * 5.0
    space = lb.qubit_mode_space(dim)
    rho0 = ops.product_state(space, [np.array([1, 1]) / math.sqrt(2), ops.coherent_vector(dim, alpha)])
    t = np.linspace(0, 200, 401)
    ts = lb.simulate_dispersive_qnd(chi, e_j, 1.0, dim, rho0, t)
    n = np.arange(dim)
    w = np.abs(ops.coherent_vector(dim, alpha)) ** 2
    oracle = np.array([np.sum(w * np.cos(2 * chi * (n + 0.5) * ti)) for ti in t])
    assert np.max(np.abs(ts["ramsey_signal"] - oracle)) < 1e-6


def test_sympathetic_no_damping_channel():
    lam = 1e-3
    p = lb.SympatheticParams(1.0, 1.0, lam)
    ts, fit = lb.simulate_sympathetic_cooling(p, (5, 5), np.linspace(0, math.pi / lam, 301))
    assert not fit.ok and fit.rate is None
    # coherent beating only: the excitation goes to the atom and comes back, up to
    # counter-rotating corrections of order lambda / Omega
    total = ts["n_m"] + ts["n_at"]
    assert np.max(np.abs(total - 1)) < 1e-2
    assert ts["n_at"][150] > 0.99 and ts["n_m"][-1] > 0.99


def test_sympathetic_rate_and_quadratic_scaling():
    gc = 0.2
    rates = []
    for lam in (0.005, 0.01):
        g = 4 * lam ** 2 / gc
        t = np.linspace(0, 6 / g + 3 / gc, 1200)
        p = lb.SympatheticParams(1.0, 1.0, lam, 1.0, 0.0, gc)
        _, fit = lb.simulate_sympathetic_cooling(p, (6, 4), t)
        assert fit.ok, fit.message
        assert fit.rate == pytest.approx(fit.predicted, rel=0.2)
        rates.append(fit.rate)
    assert rates[1] / rates[0] == pytest.approx(4.0, rel=0.1)


def test_fit_exponential_decay_exact():
    t = np.linspace(0, 10, 101)
    rate, r2 = lb.fit_exponential_decay(t, 0.1 + 2 * np.exp(-0.3 * t), 0.1, 1.0)
    assert rate == pytest.approx(0.3, rel=1e-9) and r2 == pytest.approx(1.0)
