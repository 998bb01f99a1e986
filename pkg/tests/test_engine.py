import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinterface.coherent import CoherentParams
from spinterface.engine import Engine, ground_transitions
from spinterface.errors import DomainError
from spinterface.protocols import echo_amplitude
from spinterface.rates import PumpModel
from spinterface.spectra import OpticalModel
from spinterface.spin import MUB_OVER_H, SpinSystem

SYS = SpinSystem(D=3.63)
T_OPT = 3.3e-6


def model(T1=0.22, W=1 / T_OPT, B0=10.0, **kw):
    return PumpModel(SYS, OpticalModel(), W=W, T1=T1, B0_mT=B0, **kw)


def assert_physical(rho, tol=1e-10):
    assert abs(np.trace(rho).real - 1) < tol
    assert abs(np.trace(rho).imag) < tol
    assert np.allclose(rho, rho.conj().T, atol=tol)
    assert np.min(np.linalg.eigvalsh(rho)) > -tol


class Checked(Engine):
    """Engine that asserts a physical density matrix after every step."""

    def laser(self, *a, **k):
        super().laser(*a, **k)
        assert_physical(self.rho)

    def wait(self, *a, **k):
        super().wait(*a, **k)
        assert_physical(self.rho)

    def mw(self, *a, **k):
        super().mw(*a, **k)
        assert_physical(self.rho)


def test_ground_transitions_at_ten_millitesla():
    tr = ground_transitions(model())
    z = 2.0 * MUB_OVER_H * 0.01
    assert tr[1] == pytest.approx((3.63 - z) * 1e9, abs=1.0)
    assert tr[2] == pytest.approx((3.63 + z) * 1e9, abs=1.0)


MATRIX = list(itertools.product(
    [0.022e-3, 0.22, 1e6],          # T1 in ms, from relaxation-limited to frozen
    [0.0, 1 / T_OPT, 10 / T_OPT],   # pump
    [64.0, 640.0],                  # T2 in ns
    [0.0, 1.3],                     # detuning MHz
    [False, True],                  # ideal pulses
))


@pytest.mark.parametrize("T1,W,T2,det,ideal", MATRIX)
def test_density_matrix_stays_physical(T1, W, T2, det, ideal):
    eng = Checked(model(T1=T1, W=W), CoherentParams(T2=T2, detuning=det), ideal_pulses=ideal)
    eng.laser(50e-6)
    eng.wait(5e-6)
    eng.mw(20e-9)
    eng.wait(100e-9)
    eng.mw(40e-9, frequency=ground_transitions(eng.model)[2] + 2e6, phase=0.7)
    eng.wait(100e-9)
    eng.mw(20e-9, amplitude=0.5)
    eng.laser(20e-6, power=0.3)
    eng.measure(20e-6)
    assert_physical(eng.rho)
    pl = eng.trace().signal
    assert np.all(pl >= -1e-9 * max(1.0, pl.max()))


def test_relaxation_limited_flag():
    assert Engine(model(T1=T_OPT / 10 * 1e3)).relaxation_limited
    assert not Engine(model()).relaxation_limited


def test_empty_engine_has_empty_trace():
    tr = Engine(model()).trace()
    assert tr.time.size == 0 and tr.signal.size == 0


def test_negative_durations_rejected():
    eng = Engine(model())
    for step in (eng.laser, eng.wait, eng.mw):
        with pytest.raises(DomainError):
            step(-1e-9)
    with pytest.raises(DomainError):
        eng.measure(1e-6)


def test_measure_integrates_window():
    eng = Engine(model(W=0.0, T1=1e9))
    eng.rho = np.diag([0, 0, 0, 1.0]).astype(complex)
    eng.wait(T_OPT)
    eng.wait(T_OPT)
    whole = eng.measure(2 * T_OPT)
    last = eng.measure(T_OPT)
    assert whole == pytest.approx(1 - np.exp(-2), rel=1e-12)
    assert last == pytest.approx(np.exp(-1) - np.exp(-2), rel=1e-12)


def test_resonant_pi_pulse_transfers_population():
    eng = Engine(model(W=0.0, T1=1e12), CoherentParams(T2=1e15))
    eng.rho = np.diag([1.0, 0, 0, 0]).astype(complex)
    eng.mw(CoherentParams().pi_time_s)
    assert eng.populations[1] == pytest.approx(1.0, abs=1e-10)


def test_copy_is_independent():
    eng = Engine(model())
    eng.laser(10e-6)
    other = eng.copy()
    other.laser(10e-6)
    assert eng.t == pytest.approx(10e-6)
    assert other.t == pytest.approx(20e-6)
    assert len(eng.trace().time) < len(other.trace().time)


def test_echo_amplitude_at_t2_is_inverse_e():
    amp = echo_amplitude(model(), CoherentParams(T2=640.0), [0.0, 320e-9])
    assert amp.signal[1] == pytest.approx(np.exp(-1), rel=0.01)


def test_echo_refocuses_static_detuning():
    frozen = model(T1=1e12)
    params = CoherentParams(T2=1e15)
    taus = np.linspace(0, 2e-6, 5)
    base = echo_amplitude(frozen, params, taus).signal
    shifted = echo_amplitude(frozen, CoherentParams(T2=1e15, detuning=1.25), taus).signal
    spread = echo_amplitude(frozen, params, taus, detuning_spread=2.0, n_ensemble=9).signal
    assert np.max(np.abs(base - 1)) < 1e-6
    assert np.max(np.abs(shifted - base)) < 1e-6
    assert np.max(np.abs(spread - base)) < 1e-6


def test_free_induction_dephases_without_echo():
    frozen = model(T1=1e12)
    params = CoherentParams(T2=1e15, detuning=5.0)
    eng = Engine(frozen, params, ideal_pulses=True)
    eng.rho = np.diag([1.0, 0, 0, 0]).astype(complex)
    eng.mw(params.pi_time_s / 2)
    before = abs(eng.rho[0, 1])
    eng.wait(50e-9)
    # precession only rotates the coherence phase
    assert abs(eng.rho[0, 1]) == pytest.approx(before, rel=1e-10)
    assert np.angle(eng.rho[0, 1] / (-0.5j)) != pytest.approx(0.0, abs=1e-3)


@settings(max_examples=25)
@given(st.floats(0.05, 10.0), st.floats(1e4, 1e7), st.floats(1e-7, 1e-4))
def test_laser_conserves_population(T1, W, duration):
    eng = Engine(model(T1=T1, W=W))
    eng.laser(duration)
    assert abs(eng.populations.sum() - 1) < 1e-9
