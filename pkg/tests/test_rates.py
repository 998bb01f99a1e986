import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from spinterface.errors import DomainError
from spinterface.rates import (
    PopulationState,
    PumpModel,
    build_rate_matrix,
    ground_polarization,
    integrate_populations,
    pl_rate,
    shortest_timescale,
    steady_state,
    steady_state_contrast,
)
from spinterface.spectra import OpticalModel
from spinterface.spin import SpinSystem

SYS = SpinSystem(D=3.63)
T_OPT = 3.3e-6


def model(W=1 / T_OPT, T1=0.22, **kw):
    return PumpModel(SYS, OpticalModel(), W=W, T1=T1, **kw)


def test_excited_state_decay_oracle():
    M = build_rate_matrix(model(W=0.0, T1=1e9))
    tr = integrate_populations(M, [0, 0, 0, 1.0], 5 * T_OPT, dt=T_OPT / 200)
    assert np.max(np.abs(tr.signal[:, 3] - np.exp(-tr.time / T_OPT))) < 1e-9
    assert tr.signal[-1, :3] == pytest.approx([(1 - np.exp(-5)) / 3] * 3, abs=1e-9)


def test_ground_relaxation_oracle():
    T1 = 0.22e-3
    M = build_rate_matrix(model(W=0.0))
    tr = integrate_populations(M, [1.0, 0, 0, 0], 3 * T1)
    # population difference relaxes as exp(-t/T1)
    diff = tr.signal[:, 0] - tr.signal[:, 1]
    assert np.max(np.abs(diff - np.exp(-tr.time / T1))) < 1e-9


def test_rk4_matches_expm_and_converges():
    M = build_rate_matrix(model())
    p0 = np.array([1 / 3, 1 / 3, 1 / 3, 0.0])
    exact = expm(M * 20e-6) @ p0
    dt = shortest_timescale(M) / 50
    e1 = np.max(np.abs(integrate_populations(M, p0, 20e-6, dt).signal[-1] - exact))
    e2 = np.max(np.abs(integrate_populations(M, p0, 20e-6, dt / 2).signal[-1] - exact))
    assert e1 < 1e-9
    # fourth-order convergence
    assert e2 < e1 / 10


def test_dt_limit_enforced():
    M = build_rate_matrix(model())
    with pytest.raises(DomainError):
        integrate_populations(M, [1, 0, 0, 0], 1e-5, dt=shortest_timescale(M) / 10)
    with pytest.raises(DomainError):
        integrate_populations(M, [1, 0, 0, 0], -1.0)


def test_zero_duration_returns_initial_state():
    tr = integrate_populations(build_rate_matrix(model()), [1, 0, 0, 0], 0.0)
    assert tr.signal.shape == (1, 4)


def test_model_validation():
    with pytest.raises(DomainError):
        model(W=-1.0)
    with pytest.raises(DomainError):
        model(T1=0.0)
    with pytest.raises(DomainError):
        model(bright_index=3)
    with pytest.raises(DomainError):
        PopulationState([0.5, 0.5, 0.5, 0.0])


@given(st.floats(0, 1e8), st.floats(1e-4, 1e3), st.integers(0, 2),
       st.lists(st.floats(0.01, 1), min_size=3, max_size=3))
def test_rate_matrix_conserves_population(W, T1, b, br):
    br = np.asarray(br) / np.sum(br)
    m = PumpModel(SYS, OpticalModel(branching=tuple(br / br.sum())), W=W, T1=T1, bright_index=b)
    M = build_rate_matrix(m)
    assert np.max(np.abs(M.sum(axis=0))) <= 1e-12 * max(1.0, np.max(np.abs(M)))
    off = M - np.diag(np.diag(M))
    assert np.all(off >= 0)


@given(st.floats(1e3, 1e7), st.floats(0.01, 10.0))
def test_integration_conserves_sum(W, T1):
    M = build_rate_matrix(model(W=W, T1=T1))
    tr = integrate_populations(M, [1 / 3, 1 / 3, 1 / 3, 0.0], 30e-6)
    assert np.max(np.abs(tr.signal.sum(axis=1) - 1.0)) < 1e-9
    assert np.all(tr.signal > -1e-12)


def test_steady_state_matches_long_integration():
    m = model()
    M = build_rate_matrix(m)
    ss = steady_state(M).p
    p = np.array([1 / 3, 1 / 3, 1 / 3, 0.0])
    P = expm(M * 50 * m.T1_s)
    assert np.max(np.abs(P @ p - ss)) < 1e-8


def test_steady_state_requires_unique_solution():
    with pytest.raises(DomainError):
        steady_state(np.zeros((4, 4)))
    bad = np.eye(4)
    with pytest.raises(DomainError):
        steady_state(bad)


def test_no_pump_steady_state_is_uniform():
    assert steady_state(build_rate_matrix(model(W=0.0))).p == pytest.approx([1 / 3, 1 / 3, 1 / 3, 0], abs=1e-14)


def test_thermal_steady_state_detailed_balance():
    m = model(W=0.0, temperature=0.5)
    p = steady_state(build_rate_matrix(m)).p
    ratio = p[1] / p[0]
    assert ratio == pytest.approx(np.exp(-0.0479924307 * 3.63 / 0.5), rel=1e-6)


def test_polarization_monotone_grid():
    Ws = np.geomspace(1e3, 1e8, 10)
    T1s = np.geomspace(1e-4, 10.0, 10)
    grid = np.array([[ground_polarization(steady_state(build_rate_matrix(model(W=W, T1=T1))).p)
                      for T1 in T1s] for W in Ws])
    assert np.all(np.diff(grid, axis=0) >= -1e-12)
    assert np.all(np.diff(grid, axis=1) >= -1e-12)


def test_contrast_monotone_in_t1():
    for W in np.geomspace(1e4, 1e7, 10):
        c = [steady_state_contrast(model(W=W, T1=T1)) for T1 in np.geomspace(1e-4, 10.0, 10)]
        assert np.all(np.diff(c) >= -1e-12)


def test_fast_relaxation_prevents_polarization():
    m = model(T1=T_OPT * 1e3 / 10)
    assert ground_polarization(steady_state(build_rate_matrix(m)).p) < 0.05


def test_decay_at_default_resolution_and_step_halving():
    M = build_rate_matrix(model(W=0.0, T1=1e9))
    tr = integrate_populations(M, [0, 0, 0, 1.0], 5 * T_OPT, dt=T_OPT / 100)
    assert np.max(np.abs(tr.signal[:, 3] - np.exp(-tr.time / T_OPT))) < 1e-8
    half = integrate_populations(M, [0, 0, 0, 1.0], 5 * T_OPT, dt=T_OPT / 200)
    assert np.max(np.abs(half.signal[-1] - tr.signal[-1])) < 1e-10


def test_zero_matrix_gives_constant_trace():
    tr = integrate_populations(np.zeros((4, 4)), [0.1, 0.2, 0.3, 0.4], 1.0)
    assert np.all(tr.signal == [0.1, 0.2, 0.3, 0.4])


def test_contrast_and_pl_helpers():
    m = model()
    c = steady_state_contrast(m)
    assert 0 < c < 1
    assert steady_state_contrast(model(W=0.0)) == 0.0
    assert pl_rate(m, [0, 0, 0, 1.0]) == pytest.approx(1 / T_OPT)
    assert ground_polarization([0.5, 0.25, 0.25, 0]) == pytest.approx(0.25)
