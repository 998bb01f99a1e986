"""Hybrid time stepper shared by the protocol simulators and the sequence runner.

State: a 4x4 density matrix over (|0>, |->, |+>, |S>) plus the running PL
integral. Laser segments step populations with RK4 on the rate model and
drop coherences that involve the bright sublevel; laser-off segments
(waits and microwave pulses) use the exact Lindblad propagator.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .coherent import (
    CoherentParams,
    commutator_super,
    dissipator_super,
    drive_hamiltonian,
    pulse_unitary,
    unvec,
    vec,
)
from .errors import DomainError
from .rates import EXCITED, PumpModel, build_rate_matrix, integrate_populations, steady_state
from .series import Trace
from .spin import FieldPoint, diagonalize, triplet_labels

N = 4


def ground_transitions(model: PumpModel) -> dict:
    """Frequencies (Hz) of the |0>-|-> and |0>-|+> transitions at the model field."""
    sys = model.sys
    fp = FieldPoint(B0=tuple(np.asarray(sys.zfs_axis) * model.B0_mT * 1e-3))
    es = diagonalize(sys, fp)
    i0, im, ip = triplet_labels(es, sys)
    e = es.energies
    return {1: abs(e[im] - e[i0]) * 1e9, 2: abs(e[ip] - e[i0]) * 1e9}


@dataclass
class _Segment:
    kind: str
    t0: float
    t1: float
    times: np.ndarray | None = None
    q: np.ndarray | None = None
    generator: np.ndarray | None = None
    start: np.ndarray | None = None


class Engine:
    """Applies laser, wait, microwave and measure steps to one spin ensemble.

    ``ideal_pulses`` makes microwave pulses instantaneous perfect rotations
    (hard-pulse limit); otherwise they are square pulses of finite length
    with relaxation and detuning active throughout.
    """

    def __init__(self, model: PumpModel, params: CoherentParams | None = None,
                 ideal_pulses: bool = False, dt: float | None = None):
        self.model = model
        self.params = params or CoherentParams()
        self.ideal_pulses = ideal_pulses
        self.dt = dt
        self.t = 0.0
        self.q = 0.0
        self.measurements: list = []
        self._segments: list = []
        # timeline stored as array chunks so copies stay cheap
        self._times = [np.zeros(1)]
        self._pl = []
        self._exchange = model.ground_exchange()
        self._gphi = self._dephasing_rate()
        self._transitions = ground_transitions(model)
        self._generators: dict = {}
        # rotating frame of the most recently addressed transition
        self._frame = (1, self.params.detuning * 1e6)
        if model.temperature is None:
            p = np.array([1 / 3, 1 / 3, 1 / 3, 0.0])
        else:
            p = steady_state(build_rate_matrix(model, pump_scale=0.0)).p
        self.rho = np.diag(p).astype(complex)
        self._pl.append(np.array([self._pl_of(self.rho)]))

    # -- helpers -----------------------------------------------------------
    def _dephasing_rate(self) -> float:
        out = self._exchange.sum(axis=0)
        from_relax = 0.5 * (out[0] + out[1])
        rate = 1.0 / (self.params.T2 * 1e-9) - from_relax
        # relaxation alone already destroys coherence faster than 1/T2
        self.relaxation_limited = rate < -1e-9 * from_relax
        return max(rate, 0.0)

    def _pl_of(self, rho) -> float:
        return float(np.real(rho[EXCITED, EXCITED])) / self.model.t_opt_s * self.model.collection_efficiency

    def copy(self) -> "Engine":
        """Independent continuation; recorded segments and cached generators are shared read-only."""
        other = copy.copy(self)
        other.rho = self.rho.copy()
        other.measurements = list(self.measurements)
        other._segments = list(self._segments)
        other._times = list(self._times)
        other._pl = list(self._pl)
        return other

    def _address(self, frequency_hz):
        if frequency_hz is None:
            target = 1
            detuning = 0.0
        else:
            target = min(self._transitions, key=lambda k: (abs(frequency_hz - self._transitions[k]), k))
            detuning = frequency_hz - self._transitions[target]
        return target, detuning + self.params.detuning * 1e6

    def _dark_generator(self, drive=None) -> np.ndarray:
        """Augmented (17x17) generator: Liouvillian on vec(rho) plus the PL integral."""
        key = drive
        if key in self._generators:
            return self._generators[key]
        t_opt = self.model.t_opt_s
        L = np.zeros((N * N, N * N), dtype=complex)
        if drive is not None:
            target, rabi_hz, detuning_hz, phase = drive
            L += commutator_super(drive_hamiltonian(N, 0, target, rabi_hz, detuning_hz, phase))
        for i, frac in enumerate(self.model.optical.branching):
            if frac > 0:
                J = np.zeros((N, N), dtype=complex)
                J[i, EXCITED] = np.sqrt(frac / t_opt)
                L += dissipator_super(J)
        for i in range(3):
            for j in range(3):
                if i != j and self._exchange[i, j] > 0:
                    J = np.zeros((N, N), dtype=complex)
                    J[i, j] = np.sqrt(self._exchange[i, j])
                    L += dissipator_super(J)
        if self._gphi > 0:
            for k in range(3):
                P = np.zeros((N, N), dtype=complex)
                P[k, k] = np.sqrt(self._gphi)
                L += dissipator_super(P)
        G = np.zeros((N * N + 1, N * N + 1), dtype=complex)
        G[: N * N, : N * N] = L
        # d(PL integral)/dt = rho_SS / t_opt * eta
        G[N * N, EXCITED * N + EXCITED] = self.model.collection_efficiency / t_opt
        self._generators[key] = G
        return G

    def _evolve_dark(self, duration, drive=None, kind="wait"):
        if duration < 0:
            raise DomainError("durations must be non-negative")
        if duration == 0:
            return
        G = self._dark_generator(drive)
        start = np.concatenate([vec(self.rho), [self.q]])
        out = expm(G * duration) @ start
        rho = unvec(out[: N * N], N)
        self.rho = (rho + rho.conj().T) / 2
        self._segments.append(_Segment(kind, self.t, self.t + duration, generator=G, start=start))
        self.t += duration
        self.q = float(np.real(out[N * N]))
        self._times.append(np.array([self.t]))
        self._pl.append(np.array([self._pl_of(self.rho)]))

    # -- protocol steps ----------------------------------------------------
    def laser(self, duration: float, power: float = 1.0):
        """Optical excitation for ``duration`` seconds at relative ``power``."""
        if duration < 0:
            raise DomainError("durations must be non-negative")
        if duration == 0:
            return
        model = self.model
        M = build_rate_matrix(model, pump_scale=power)
        aug = np.zeros((5, 5))
        aug[:4, :4] = M
        aug[4, EXCITED] = model.collection_efficiency / model.t_opt_s
        p = np.concatenate([np.real(np.diag(self.rho)), [self.q]])
        tr = integrate_populations(aug, p, duration, self.dt)
        coherences = self.rho - np.diag(np.diag(self.rho))
        b = model.bright_index
        coherences[b, :] = 0.0
        coherences[:, b] = 0.0
        coherences *= np.exp(-duration / (self.params.T2 * 1e-9))
        end = tr.signal[-1]
        self.rho = np.diag(end[:4]).astype(complex) + coherences
        times = self.t + tr.time
        self._segments.append(_Segment("laser", self.t, self.t + duration, times=times, q=tr.signal[:, 4]))
        self.t += duration
        self.q = float(end[4])
        self._times.append(times[1:])
        self._pl.append(tr.signal[1:, EXCITED] / model.t_opt_s * model.collection_efficiency)

    def wait(self, duration: float):
        """Free evolution; coherences precess at the detuning of the last drive frame."""
        target, detuning = self._frame
        drive = (target, 0.0, detuning, 0.0) if detuning != 0.0 else None
        self._evolve_dark(duration, drive=drive)

    def mw(self, duration: float, frequency: float | None = None, amplitude: float = 1.0,
           phase: float = 0.0):
        """Square microwave pulse; ``frequency`` in Hz (None: resonant with |0>-|->)."""
        target, detuning = self._address(frequency)
        self._frame = (target, detuning)
        rabi = self.params.rabi_frequency * 1e6 * amplitude
        phase = phase + self.params.mw_phase
        if self.ideal_pulses:
            U = pulse_unitary(N, 0, target, 2 * np.pi * rabi * duration, phase)
            self.rho = U @ self.rho @ U.conj().T
            return
        self._evolve_dark(duration, drive=(target, rabi, detuning, phase), kind="mw")

    def _q_at(self, t):
        if t >= self.t:
            return self.q
        for seg in reversed(self._segments):
            if seg.t0 <= t <= seg.t1:
                if seg.kind == "laser":
                    return float(np.interp(t, seg.times, seg.q))
                out = expm(seg.generator * (t - seg.t0)) @ seg.start
                return float(np.real(out[N * N]))
        # before any recorded segment nothing has been emitted yet
        return 0.0

    def measure(self, window: float) -> float:
        """Integrated PL over the ``window`` seconds ending now."""
        if window < 0:
            raise DomainError("measurement window must be non-negative")
        if window > self.t + 1e-15:
            raise DomainError("measurement window reaches before the start of the sequence")
        value = self.q - self._q_at(self.t - window)
        self.measurements.append(value)
        return value

    # -- outputs -----------------------------------------------------------
    @property
    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.rho)).copy()

    def trace(self) -> Trace:
        if not self._segments:
            return Trace(np.zeros(0), np.zeros(0), metadata={"observable": "PL"})
        return Trace(np.concatenate(self._times), np.concatenate(self._pl), metadata={"observable": "PL"})
