import numpy as np
import pytest
from hypothesis import given, strategies as st

from spinterface.coherent import (
    CoherentParams,
    commutator_super,
    dissipator_super,
    mw_propagator,
    pulse_unitary,
    unvec,
    vec,
)
from spinterface.errors import DomainError

RHO0 = np.diag([1.0, 0.0]).astype(complex)


def test_pi_pulse_inverts():
    p = CoherentParams(T2=1e15)
    out = mw_propagator(p, p.pi_time_s * 1e9).apply(RHO0)
    assert out[1, 1].real == pytest.approx(1.0, abs=1e-12)


def test_half_pi_pulse_equal_superposition():
    p = CoherentParams(T2=1e15)
    out = mw_propagator(p, p.pi_time_s * 0.5e9).apply(RHO0)
    assert out[0, 0].real == pytest.approx(0.5, abs=1e-12)
    assert abs(out[0, 1]) == pytest.approx(0.5, abs=1e-12)


def test_free_dephasing_rate_is_one_over_t2():
    p = CoherentParams(rabi_frequency=0.0, T2=640.0)
    rho = np.full((2, 2), 0.5, dtype=complex)
    out = mw_propagator(p, 640.0, T1=0.22).apply(rho)
    assert abs(out[0, 1]) == pytest.approx(0.5 * np.exp(-1.0), rel=1e-12)


def test_t2_above_two_t1_rejected():
    with pytest.raises(DomainError):
        mw_propagator(CoherentParams(T2=1e9), 10.0, T1=1e-4)
    with pytest.raises(DomainError):
        mw_propagator(CoherentParams(), -1.0)
    with pytest.raises(DomainError):
        CoherentParams(rabi_frequency=0.0).pi_time_s


def test_vec_is_column_major():
    A = np.arange(4).reshape(2, 2)
    assert list(vec(A)) == [0, 2, 1, 3]
    assert np.array_equal(unvec(vec(A), 2), A)


@given(st.integers(0, 1000))
def test_superoperators_match_matrix_forms(seed):
    rng = np.random.default_rng(seed)
    H = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    H = H + H.conj().T
    L = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    rho = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    direct = -1j * (H @ rho - rho @ H)
    assert np.allclose(unvec(commutator_super(H) @ vec(rho), 3), direct)
    LdL = L.conj().T @ L
    direct = L @ rho @ L.conj().T - 0.5 * (LdL @ rho + rho @ LdL)
    assert np.allclose(unvec(dissipator_super(L) @ vec(rho), 3), direct)


@given(st.floats(0, 50), st.floats(-20, 20), st.floats(10, 1e4), st.floats(0, 500),
       st.floats(0, 2 * np.pi), st.one_of(st.none(), st.floats(0.01, 10)))
def test_propagator_keeps_trace_and_positivity(rabi, det, T2, dur, phase, T1):
    p = CoherentParams(rabi_frequency=rabi, detuning=det, T2=T2, mw_phase=phase)
    if T1 is not None and T2 * 1e-9 > 2 * T1 * 1e-3:
        return
    out = mw_propagator(p, dur, T1=T1).apply(np.diag([0.7, 0.3]).astype(complex))
    assert abs(np.trace(out) - 1) < 1e-10
    assert np.min(np.linalg.eigvalsh(out)) > -1e-10
    assert np.allclose(out, out.conj().T)


@given(st.floats(0, 4 * np.pi), st.floats(0, 2 * np.pi))
def test_pulse_unitary_is_unitary(angle, phase):
    U = pulse_unitary(4, 0, 2, angle, phase)
    assert np.allclose(U @ U.conj().T, np.eye(4), atol=1e-14)
