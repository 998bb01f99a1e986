"""Named measurement protocols and the generic sequence executor.

Each ``simulate_*`` function issues the same engine steps that the matching
``.seq`` program would, so both routes produce the same numbers.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .coherent import CoherentParams
from .engine import Engine, ground_transitions
from .errors import DomainError
from .rates import PumpModel, ground_polarization
from .series import Spectrum, Trace
from . import seqlang as sl

INIT_US = 300.0
READOUT_US = 20.0


def _increasing(values, name):
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise DomainError(f"{name} must be a non-empty 1-D array")
    if np.any(v < 0):
        raise DomainError(f"{name} must be non-negative")
    if v.size > 1 and np.any(np.diff(v) <= 0):
        raise DomainError(f"{name} must be strictly increasing")
    return v


def default_wait_s(model: PumpModel) -> float:
    """Dark time between initialisation and drive: three optical lifetimes."""
    return 3.0 * model.t_opt_s


@dataclass
class HoleBurning:
    trace: Trace
    contrast: float
    polarization: float
    contrast_undefined: bool = False

    def __iter__(self):
        return iter((self.trace, self.contrast, self.polarization))


def hole_burning_contrast(pl) -> tuple:
    """(contrast, undefined) from a PL trace: drop from its peak to its last value."""
    pl = np.asarray(pl, dtype=float)
    peak = float(pl.max()) if pl.size else 0.0
    if peak <= 0.0:
        return 0.0, True
    return (peak - float(pl[-1])) / peak, False


def simulate_hole_burning(model: PumpModel, pulse_duration: float = 2.0, dt: float | None = None) -> HoleBurning:
    """PL under one long laser pulse of ``pulse_duration`` ms.

    The contrast is measured from the PL maximum, reached once the excited
    state has filled, to the end of the pulse.
    """
    if not pulse_duration > 0:
        raise DomainError("pulse duration must be positive")
    eng = Engine(model, dt=dt)
    eng.laser(pulse_duration * 1e-3)
    tr = eng.trace()
    contrast, undefined = hole_burning_contrast(tr.signal)
    tr.metadata.update({"protocol": "hole_burning", "contrast": contrast, "contrast_undefined": undefined})
    return HoleBurning(tr, contrast, ground_polarization(eng.populations), undefined)


def _readout(eng: Engine, readout_s: float) -> float:
    eng.laser(readout_s)
    return eng.measure(readout_s)


def simulate_t1_recovery(model: PumpModel, init_duration: float = INIT_US, readout_duration: float = READOUT_US,
                         wait_times=None, dt: float | None = None) -> Trace:
    """Readout PL (integrated over the readout pulse) against dark time in seconds.

    ``init_duration`` and ``readout_duration`` are in microseconds.
    """
    if wait_times is None:
        wait_times = np.linspace(0.0, 10 * model.T1_s, 41)
    waits = _increasing(wait_times, "wait_times")
    base = Engine(model, dt=dt)
    base.laser(init_duration * 1e-6)
    out = []
    for tau in waits:
        eng = base.copy()
        eng.wait(float(tau))
        out.append(_readout(eng, readout_duration * 1e-6))
    return Trace(waits, np.array(out), axis_name="wait_s",
                 metadata={"protocol": "t1_recovery", "init_us": init_duration, "readout_us": readout_duration})


def simulate_rabi(model: PumpModel, params: CoherentParams, durations, wait: float | None = None,
                  frequency: float | None = None, amplitude: float = 1.0, dt: float | None = None) -> Trace:
    """Readout PL against microwave pulse length (s).

    ``frequency`` (Hz) defaults to resonance with the |0>-|-> transition;
    ``wait`` (s) defaults to three optical lifetimes.
    """
    ts = _increasing(durations, "durations")
    wait = default_wait_s(model) if wait is None else wait
    base = Engine(model, params, dt=dt)
    base.laser(INIT_US * 1e-6)
    base.wait(wait)
    out = []
    for t in ts:
        eng = base.copy()
        eng.mw(float(t), frequency=frequency, amplitude=amplitude)
        out.append(_readout(eng, READOUT_US * 1e-6))
    return Trace(ts, np.array(out), axis_name="pulse_s",
                 metadata={"protocol": "rabi", "rabi_MHz": params.rabi_frequency * amplitude})


def _gauss_hermite(spread_mhz: float, n: int):
    if spread_mhz == 0 or n <= 1:
        return np.zeros(1), np.ones(1)
    x, w = np.polynomial.hermite.hermgauss(n)
    return np.sqrt(2.0) * spread_mhz * x, w / np.sqrt(np.pi)


def _echo_readouts(model, params, taus, final_phase, wait, dt, offsets, weights):
    total = np.zeros(len(taus))
    for offset, weight in zip(offsets, weights):
        p = replace(params, detuning=params.detuning + float(offset))
        base = Engine(model, p, ideal_pulses=True, dt=dt)
        base.laser(INIT_US * 1e-6)
        base.wait(wait)
        t_pi = p.pi_time_s
        for k, tau in enumerate(taus):
            eng = base.copy()
            eng.mw(t_pi / 2)
            eng.wait(float(tau))
            eng.mw(t_pi)
            eng.wait(float(tau))
            eng.mw(t_pi / 2, phase=final_phase)
            total[k] += weight * _readout(eng, READOUT_US * 1e-6)
    return total


def simulate_hahn_echo(model: PumpModel, params: CoherentParams, tau_values, wait: float | None = None,
                       detuning_spread: float = 0.0, n_ensemble: int = 1, dt: float | None = None) -> Trace:
    """Readout PL after pi/2 - tau - pi - tau - pi/2 with hard pulses, against tau (s).

    ``detuning_spread`` (MHz, Gaussian sigma) averages over a static
    detuning ensemble using ``n_ensemble`` Gauss-Hermite nodes.
    """
    taus = _increasing(tau_values, "tau_values")
    wait = default_wait_s(model) if wait is None else wait
    offsets, weights = _gauss_hermite(detuning_spread, n_ensemble)
    sig = _echo_readouts(model, params, taus, 0.0, wait, dt, offsets, weights)
    return Trace(taus, sig, axis_name="tau_s", metadata={"protocol": "hahn_echo"})


def echo_amplitude(model: PumpModel, params: CoherentParams, tau_values, wait: float | None = None,
                   detuning_spread: float = 0.0, n_ensemble: int = 1, dt: float | None = None) -> Trace:
    """Phase-cycled echo amplitude, normalised to 1 at tau = 0.

    The difference between final pi/2 pulses of phase pi and 0 keeps only
    the refocused coherence; population relaxation cancels.
    """
    taus = _increasing(tau_values, "tau_values")
    wait = default_wait_s(model) if wait is None else wait
    offsets, weights = _gauss_hermite(detuning_spread, n_ensemble)
    grid = taus if taus[0] == 0.0 else np.concatenate([[0.0], taus])
    diff = (_echo_readouts(model, params, grid, np.pi, wait, dt, offsets, weights)
            - _echo_readouts(model, params, grid, 0.0, wait, dt, offsets, weights))
    if diff[0] == 0.0:
        raise DomainError("no echo signal: the initialised state carries no population difference")
    amp = diff / diff[0]
    if taus[0] != 0.0:
        amp = amp[1:]
    return Trace(taus, amp, axis_name="tau_s", metadata={"protocol": "echo_amplitude"})


def simulate_pulsed_odmr(model: PumpModel, f_grid, B0: float, pi_duration: float | None = None,
                         params: CoherentParams | None = None, wait: float | None = None,
                         dt: float | None = None) -> Spectrum:
    """Relative PL change after a fixed-length pulse, against drive frequency (GHz).

    ``B0`` is in mT along the molecular axis; ``pi_duration`` (s) defaults to
    the pi time implied by ``params``. Positive values mean brighter readout
    than with no pulse at all.
    """
    params = params or CoherentParams()
    freqs = np.asarray(f_grid, dtype=float)
    if freqs.ndim != 1 or freqs.size == 0 or np.any(np.diff(freqs) <= 0):
        raise DomainError("f_grid must be strictly increasing")
    model = replace(model, B0_mT=B0)
    t_pi = params.pi_time_s if pi_duration is None else pi_duration
    wait = default_wait_s(model) if wait is None else wait
    base = Engine(model, params, dt=dt)
    base.laser(INIT_US * 1e-6)
    base.wait(wait)
    ref = _readout(base.copy(), READOUT_US * 1e-6)
    out = []
    for f in freqs:
        eng = base.copy()
        eng.mw(t_pi, frequency=f * 1e9)
        out.append(_readout(eng, READOUT_US * 1e-6))
    contrast = (np.array(out) - ref) / ref
    tr = ground_transitions(model)
    return Spectrum(freqs, contrast, "GHz", metadata={
        "protocol": "pulsed_odmr", "B0_mT": B0, "pi_s": t_pi, "reference_pl": float(ref),
        "transitions_GHz": ";".join(repr(float(tr[k]) / 1e9) for k in sorted(tr)),
    })


# -- sequence execution --------------------------------------------------------

@dataclass
class PointResult:
    sweep_values: dict
    trace: Trace
    measurements: list


@dataclass
class SequenceResult:
    points: list = field(default_factory=list)

    def sweep_trace(self, measurement: int | None = None) -> Trace:
        """Measurements against the first swept variable (or point index)."""
        if not self.points:
            return Trace(np.zeros(0), np.zeros(0))
        first = self.points[0].sweep_values
        name = next(iter(first)) if first else None
        if name is None or len(first) != 1:
            axis = np.arange(len(self.points), dtype=float)
            axis_name = "point"
        else:
            axis = np.array([float(p.sweep_values[name]) for p in self.points])
            axis_name = f"{name}_{_si_unit(first[name])}"
        rows = [p.measurements for p in self.points]
        if measurement is not None:
            sig = np.array([r[measurement] for r in rows])
        else:
            sig = np.array(rows, dtype=float)
            if sig.ndim == 2 and sig.shape[1] == 1:
                sig = sig[:, 0]
        return Trace(axis, sig, axis_name=axis_name)


def _si_unit(q: sl.Quantity) -> str:
    return {"time": "s", "frequency": "Hz", "field": "T"}.get(q.dimension, "")


def _num(v, default):
    return default if v is None else float(v)


def run_concrete(seq: sl.PulseSequence, model: PumpModel, params: CoherentParams | None = None,
                 ideal_pulses: bool = False, dt: float | None = None) -> PointResult:
    eng = Engine(model, params, ideal_pulses=ideal_pulses, dt=dt)
    for s in seq.statements:
        if isinstance(s, sl.Laser):
            eng.laser(float(s.duration), _num(s.power, 1.0))
        elif isinstance(s, sl.Wait):
            eng.wait(float(s.duration))
        elif isinstance(s, sl.Measure):
            eng.measure(float(s.window))
        elif isinstance(s, sl.Mw):
            if s.duration is None:
                raise sl.ValidationError("pulse angle not resolved; validate the sequence first", *s.span,
                                         expected={"validated sequence"})
            freq = None if s.frequency is None else float(s.frequency)
            eng.mw(float(s.duration), frequency=freq, amplitude=_num(s.amplitude, 1.0),
                   phase=_num(s.phase, 0.0))
        else:
            raise DomainError("sequence still contains sweeps; expand it first")
    return PointResult(dict(seq.sweep_values), eng.trace(), list(eng.measurements))


def thread_count() -> int:
    raw = os.environ.get("SPINTERFACE_THREADS")
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise DomainError(f"SPINTERFACE_THREADS must be an integer, got {raw!r}") from None
    return max(1, n)


def validation_context(model: PumpModel, params: CoherentParams | None) -> sl.ValidationContext:
    tr = ground_transitions(model)
    params = params or CoherentParams()
    return sl.ValidationContext(transitions=tuple(tr[k] for k in sorted(tr)),
                                rabi_frequency=params.rabi_frequency * 1e6 or None)


def execute_sequence(seq: sl.PulseSequence, model: PumpModel, params: CoherentParams | None = None,
                     ideal_pulses: bool = False, dt: float | None = None,
                     workers: int | None = None) -> SequenceResult:
    """Validate, expand and run a sequence; one :class:`PointResult` per sweep point."""
    seq = sl.validate(seq, validation_context(model, params))
    points = sl.expand(seq)
    n = min(workers or thread_count(), len(points))

    def run(p):
        return run_concrete(p, model, params, ideal_pulses, dt)

    if n <= 1:
        return SequenceResult([run(p) for p in points])
    with ThreadPoolExecutor(max_workers=n) as pool:
        return SequenceResult(list(pool.map(run, points)))
