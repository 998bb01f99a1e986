"""Four-level optical pumping: |0>, |->, |+> ground sublevels and the S=0 excited state.

Populations are ordered ``(p0, p-, p+, pS)``; rates are in 1/s and times in
seconds unless a parameter name says otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space

from .errors import DomainError
from .series import Trace
from .spectra import OpticalModel
from .spin import H_OVER_K, SpinSystem, zero_field_levels

GROUND = (0, 1, 2)
EXCITED = 3
LABELS = ("p0", "p-", "p+", "pS")


@dataclass(frozen=True)
class PumpModel:
    """Optical pumping parameters.

    ``W`` is the excitation rate (1/s) of the ``bright_index`` ground
    sublevel, ``T1`` is in ms and ``B0_mT`` is the static field along the
    molecular axis. With ``temperature`` set, ground relaxation satisfies
    detailed balance instead of relaxing to equal populations.
    """

    sys: SpinSystem
    optical: OpticalModel = field(default_factory=OpticalModel)
    W: float = 0.0
    bright_index: int = 0
    T1: float = 0.22
    collection_efficiency: float = 1.0
    B0_mT: float = 0.0
    temperature: float | None = None

    def __post_init__(self):
        if not self.W >= 0:
            raise DomainError(f"pump rate must be non-negative, got {self.W!r}")
        if not self.T1 > 0:
            raise DomainError(f"T1 must be positive, got {self.T1!r}")
        if self.bright_index not in GROUND:
            raise DomainError(f"bright_index must be 0, 1 or 2, got {self.bright_index!r}")
        if len(self.optical.branching) != 3:
            raise DomainError("the pumping model needs three branching ratios")
        if self.temperature is not None and not self.temperature > 0:
            raise DomainError("temperature must be positive")

    @property
    def t_opt_s(self) -> float:
        return self.optical.t_opt * 1e-6

    @property
    def T1_s(self) -> float:
        return self.T1 * 1e-3

    def ground_exchange(self) -> np.ndarray:
        """3x3 matrix of ground transfer rates ``w[i, j]`` (from j into i)."""
        w = 1.0 / (3.0 * self.T1_s)
        rates = np.full((3, 3), w)
        np.fill_diagonal(rates, 0.0)
        if self.temperature is not None:
            e = zero_field_levels(self.sys.D, self.sys.E)
            de = (e[:, None] - e[None, :]) * H_OVER_K / self.temperature
            rates = rates * 2.0 / (1.0 + np.exp(de))
            np.fill_diagonal(rates, 0.0)
        return rates


@dataclass(frozen=True, eq=False)
class PopulationState:
    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.shape != (4,):
            raise DomainError("population vector must have four entries")
        if np.any(p < -1e-12) or abs(p.sum() - 1) > 1e-9:
            raise DomainError(f"invalid population vector {p}")
        object.__setattr__(self, "p", p)

    @classmethod
    def unpolarized(cls):
        return cls(np.array([1 / 3, 1 / 3, 1 / 3, 0.0]))


def build_rate_matrix(model: PumpModel, pump_scale: float = 1.0) -> np.ndarray:
    """Population-conserving generator ``M`` with ``dp/dt = M p``."""
    M = np.zeros((4, 4))
    b = model.bright_index
    W = model.W * pump_scale
    M[EXCITED, b] += W
    M[b, b] -= W
    decay = 1.0 / model.t_opt_s
    for i, frac in zip(GROUND, model.optical.branching):
        M[i, EXCITED] += frac * decay
    M[EXCITED, EXCITED] -= decay
    M[:3, :3] += model.ground_exchange()
    M[GROUND, GROUND] -= model.ground_exchange().sum(axis=0)
    return M


def shortest_timescale(M) -> float:
    rate = float(np.max(np.abs(np.diag(M)))) if np.size(M) else 0.0
    return np.inf if rate == 0.0 else 1.0 / rate


def default_step(M) -> float:
    return shortest_timescale(M) / 100.0


def rk4_step_matrix(M, dt) -> np.ndarray:
    """One classical RK4 step for the linear system ``p' = M p``.

    For a constant linear generator the four stages collapse to the
    degree-4 Taylor polynomial of ``exp(M dt)``.
    """
    A = np.asarray(M, dtype=float) * dt
    n = A.shape[0]
    A2 = A @ A
    return np.eye(n) + A + A2 / 2 + A2 @ A / 6 + A2 @ A2 / 24


def _steps(duration, dt):
    n = int(np.ceil(duration / dt - 1e-9))
    return max(n, 1) if duration > 0 else 0


def integrate_populations(rate_matrix, p0, duration: float, dt: float | None = None) -> Trace:
    """Fixed-step RK4 from ``p0`` over ``duration`` seconds.

    ``dt`` must resolve the fastest rate: ``dt <= shortest_timescale/50``.
    The step is shrunk so that an integer number of steps spans ``duration``.
    """
    M = np.asarray(rate_matrix, dtype=float)
    p = p0.p if isinstance(p0, PopulationState) else np.asarray(p0, dtype=float)
    if duration < 0:
        raise DomainError("duration must be non-negative")
    limit = shortest_timescale(M) / 50.0
    if dt is None:
        dt = default_step(M) if np.isfinite(limit) else max(duration, 1e-12)
    if not dt > 0:
        raise DomainError("dt must be positive")
    if dt > limit:
        raise DomainError(f"dt={dt:g} s exceeds the stability limit {limit:g} s")
    n = _steps(duration, dt)
    if n == 0:
        return Trace(np.array([0.0]), p[None, :].copy(), metadata={"dt_s": 0.0})
    h = duration / n
    P = rk4_step_matrix(M, h)
    out = np.empty((n + 1, p.size))
    out[0] = p
    for k in range(n):
        out[k + 1] = P @ out[k]
    return Trace(np.arange(n + 1) * h, out, metadata={"dt_s": h})


def steady_state(rate_matrix) -> PopulationState:
    """Unique normalised null vector of the rate matrix."""
    M = np.asarray(rate_matrix, dtype=float)
    if np.max(np.abs(M.sum(axis=0))) > 1e-9 * max(1.0, np.max(np.abs(M))):
        raise DomainError("rate matrix does not conserve population")
    scale = max(1.0, float(np.max(np.abs(M))))
    ns = null_space(M, rcond=1e-12)
    if ns.shape[1] != 1:
        raise DomainError(f"steady state is not unique (null space dimension {ns.shape[1]})")
    v = ns[:, 0]
    v = v / v.sum()
    v = np.where(np.abs(v) < 1e-15 * scale, 0.0, v)
    v = np.clip(v, 0.0, None)
    return PopulationState(v / v.sum())


def pl_rate(model: PumpModel, p) -> np.ndarray:
    """Photoluminescence (arbitrary units): ``pS / t_opt * collection_efficiency``."""
    p = np.asarray(p)
    return p[..., EXCITED] / model.t_opt_s * model.collection_efficiency


def ground_polarization(p) -> float:
    """Largest ground-population difference relative to the total ground population."""
    g = np.asarray(p, dtype=float)[:3]
    total = g.sum()
    return float((g.max() - g.min()) / total) if total > 0 else 0.0


def steady_state_contrast(model: PumpModel) -> float:
    """``1 - PL_ss / PL_ref`` where the reference has the same pump and no spin selectivity.

    Without spin memory the ground manifold stays equally populated, giving
    ``pS = W t_opt / (3 + W t_opt)``.
    """
    if model.W == 0:
        return 0.0
    p = steady_state(build_rate_matrix(model)).p
    x = model.W * model.t_opt_s
    ref = x / (3.0 + x)
    return float(1.0 - p[EXCITED] / ref)
