"""Driven two-level dynamics with Lindblad relaxation.

The rotating-frame Hamiltonian on a driven pair (a, b) is
``2 pi (detuning sz/2 + f_R (cos(phase) sx + sin(phase) sy)/2)`` with
``sz = |a><a| - |b><b|``. Density matrices are vectorised column-major, so
``vec(A X B) = (B.T kron A) vec(X)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import DomainError


@dataclass(frozen=True)
class CoherentParams:
    """Microwave drive and coherence parameters.

    ``rabi_frequency`` and ``detuning`` are cyclic frequencies in MHz, ``T2``
    is the total coherence time in ns and ``mw_phase`` is in radians.
    """

    rabi_frequency: float = 12.5
    detuning: float = 0.0
    T2: float = 640.0
    mw_phase: float = 0.0

    def __post_init__(self):
        if not self.rabi_frequency >= 0:
            raise DomainError("Rabi frequency must be non-negative")
        if not self.T2 > 0:
            raise DomainError("T2 must be positive")

    @property
    def pi_time_s(self) -> float:
        if self.rabi_frequency == 0:
            raise DomainError("a pi pulse needs a non-zero Rabi frequency")
        return 1.0 / (2.0 * self.rabi_frequency * 1e6)


def vec(rho) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v, n) -> np.ndarray:
    return np.asarray(v).reshape((n, n), order="F")


def commutator_super(H) -> np.ndarray:
    """Superoperator of ``-i [H, rho]``."""
    n = H.shape[0]
    eye = np.eye(n)
    return -1j * (np.kron(eye, H) - np.kron(H.T, eye))


def dissipator_super(L) -> np.ndarray:
    """Superoperator of ``L rho L^+ - {L^+ L, rho}/2``."""
    n = L.shape[0]
    eye = np.eye(n)
    LdL = L.conj().T @ L
    return np.kron(L.conj(), L) - 0.5 * (np.kron(eye, LdL) + np.kron(LdL.T, eye))


def drive_hamiltonian(n, a, b, rabi_hz, detuning_hz, phase) -> np.ndarray:
    """Rotating-frame drive on levels ``a``, ``b`` of an n-level system, in rad/s."""
    H = np.zeros((n, n), dtype=complex)
    H[a, a] = np.pi * detuning_hz
    H[b, b] = -np.pi * detuning_hz
    H[a, b] = np.pi * rabi_hz * np.exp(-1j * phase)
    H[b, a] = np.conj(H[a, b])
    return H


def pulse_unitary(n, a, b, angle, phase) -> np.ndarray:
    """Instantaneous rotation by ``angle`` about ``(cos phase, sin phase, 0)`` on the pair."""
    U = np.eye(n, dtype=complex)
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    U[a, a] = c
    U[b, b] = c
    U[a, b] = -1j * s * np.exp(-1j * phase)
    U[b, a] = -1j * s * np.exp(1j * phase)
    return U


@dataclass(frozen=True, eq=False)
class Propagator:
    """Coherent part ``unitary`` and full Liouville-space map ``superop``."""

    unitary: np.ndarray
    superop: np.ndarray

    def apply(self, rho) -> np.ndarray:
        n = self.unitary.shape[0]
        out = unvec(self.superop @ vec(rho), n)
        return (out + out.conj().T) / 2


def mw_propagator(params: CoherentParams, duration: float, T1: float | None = None) -> Propagator:
    """Two-level {|0>, |-1>} propagator for ``duration`` ns.

    ``T1`` (ms) adds longitudinal relaxation towards equal populations. The
    pure-dephasing rate is chosen so coherences decay at exactly ``1/T2``.
    """
    if duration < 0:
        raise DomainError("duration must be non-negative")
    t = duration * 1e-9
    H = drive_hamiltonian(2, 0, 1, params.rabi_frequency * 1e6, params.detuning * 1e6, params.mw_phase)
    gen = commutator_super(H)
    coh_from_t1 = 0.0
    if T1 is not None and np.isfinite(T1):
        g1 = 1.0 / (2.0 * T1 * 1e-3)
        up = np.array([[0, 1], [0, 0]], dtype=complex)
        gen = gen + g1 * dissipator_super(up) + g1 * dissipator_super(up.T.copy())
        coh_from_t1 = g1
    gphi = 1.0 / (params.T2 * 1e-9) - coh_from_t1
    if gphi < -1e-12:
        raise DomainError("T2 cannot exceed 2 T1")
    if gphi > 0:
        for k in range(2):
            P = np.zeros((2, 2), dtype=complex)
            P[k, k] = 1.0
            gen = gen + gphi * dissipator_super(P)
    return Propagator(unitary=expm(-1j * H * t), superop=expm(gen * t))
