"""Least-squares fitting with a deterministic Nelder-Mead simplex.

Model fits minimise over their nonlinear parameters only; parameters that
enter linearly (amplitudes, offsets) are solved exactly at every step.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import find_peaks, peak_widths

from .errors import DomainError
from .spin import FieldPoint, SpinSystem, build_hamiltonian

MAX_EVALS = 100_000
HESSIAN_STEP = 1e-4


class FitError(DomainError):
    pass


@dataclass
class FitResult:
    params: np.ndarray
    residual_rms: float
    iterations: int
    converged: bool
    param_uncertainty: np.ndarray
    names: tuple = ()
    model: str = "objective"
    evaluations: int = 0
    objective: float = float("nan")
    flags: list = field(default_factory=list)
    x: np.ndarray | None = None
    residuals: np.ndarray | None = None

    def __getitem__(self, name):
        return float(self.params[list(self.names).index(name)])

    def uncertainty(self, name):
        return float(self.param_uncertainty[list(self.names).index(name)])

    def as_dict(self) -> dict:
        return {n: float(v) for n, v in zip(self.names, self.params)}

    def report(self) -> str:
        lines = [f"model={self.model}", f"converged={str(self.converged).lower()}",
                 f"iterations={self.iterations}", f"evaluations={self.evaluations}",
                 f"residual_rms={self.residual_rms!r}"]
        for n, v, u in zip(self.names, self.params, self.param_uncertainty):
            lines.append(f"{n}={float(v)!r}")
            lines.append(f"{n}_uncertainty={float(u)!r}")
        for flag in self.flags:
            lines.append(f"flag={flag}")
        return "\n".join(lines) + "\n"

    def residuals_csv(self, path) -> Path:
        path = Path(path)
        rows = ["# columns=x,residual\n"]
        if self.x is not None and self.residuals is not None:
            rows += [f"{float(a)!r},{float(r)!r}\n" for a, r in zip(self.x, self.residuals)]
        path.write_text("".join(rows))
        return path


# -- simplex ---------------------------------------------------------------

def _nelder_mead(f, u0, step, xtol, ftol, budget):
    n = u0.size
    simplex = np.empty((n + 1, n))
    simplex[0] = u0
    for i in range(n):
        simplex[i + 1] = u0
        simplex[i + 1, i] += step if u0[i] == 0 else step * max(1.0, abs(u0[i]))
    values = np.array([f(p) for p in simplex])
    evals = n + 1
    iters = 0
    while True:
        order = np.argsort(values, kind="stable")
        simplex, values = simplex[order], values[order]
        diameter = float(np.max(np.linalg.norm(simplex[1:] - simplex[0], axis=1))) if n else 0.0
        spread = values[-1] - values[0]
        if diameter < xtol or spread <= ftol * abs(values[0]):
            return simplex[0], values[0], iters, evals, True
        if evals >= budget:
            return simplex[0], values[0], iters, evals, False
        iters += 1
        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = centroid + (centroid - worst)
        fr = f(xr)
        evals += 1
        if fr < values[0]:
            xe = centroid + 2.0 * (centroid - worst)
            fe = f(xe)
            evals += 1
            if fe < fr:
                simplex[-1], values[-1] = xe, fe
            else:
                simplex[-1], values[-1] = xr, fr
            continue
        if fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
            continue
        if fr < values[-1]:
            xc = centroid + 0.5 * (xr - centroid)
        else:
            xc = centroid + 0.5 * (worst - centroid)
        fc = f(xc)
        evals += 1
        if fc < min(fr, values[-1]):
            simplex[-1], values[-1] = xc, fc
            continue
        for i in range(1, n + 1):
            simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0])
            values[i] = f(simplex[i])
        evals += n


def minimize(objective, x0, scale=None, bounds=None, xtol: float = 1e-10, ftol: float = 1e-12,
             max_evals: int = MAX_EVALS, restarts: int = 3, step: float = 0.05) -> FitResult:
    """Minimise ``objective`` with Nelder-Mead, restarting from the best vertex.

    Parameters are rescaled by ``scale`` (default ``|x0|``, or 1 where x0 is
    zero) and clipped into ``bounds`` ((lo, hi) pairs, None for open ends).
    Stops when the simplex diameter in scaled units drops below ``xtol``,
    when the vertex values agree to ``ftol`` relative, or after
    ``max_evals`` evaluations.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    if scale is None:
        scale = np.where(x0 != 0, np.abs(x0), 1.0)
    scale = np.broadcast_to(np.asarray(scale, dtype=float), x0.shape).copy()
    lo = np.full(x0.shape, -np.inf)
    hi = np.full(x0.shape, np.inf)
    if bounds is not None:
        for i, b in enumerate(bounds):
            if b is None:
                continue
            lo[i] = -np.inf if b[0] is None else b[0]
            hi[i] = np.inf if b[1] is None else b[1]

    def to_x(u):
        return np.clip(u * scale, lo, hi)

    def f(u):
        x = to_x(u)
        val = float(objective(x))
        if not np.isfinite(val):
            raise FitError(f"objective is not finite at {x.tolist()}")
        return val

    if not np.all(np.isfinite(x0)):
        raise FitError(f"non-finite starting point {x0.tolist()}")
    u = np.clip(x0, lo, hi) / scale
    total_iters = total_evals = 0
    best = f(u)
    total_evals += 1
    converged = False
    for _ in range(restarts + 1):
        u_new, f_new, iters, evals, ok = _nelder_mead(f, u, step, xtol, ftol, max_evals - total_evals)
        total_iters += iters
        total_evals += evals
        improved = f_new < best - ftol * abs(best)
        if f_new <= best:
            u, best = u_new, f_new
        converged = ok
        if not ok or not improved:
            break
    x = to_x(u)
    return FitResult(params=x, residual_rms=float(np.sqrt(max(best, 0.0))), iterations=total_iters,
                     converged=bool(converged), param_uncertainty=np.full(x.size, np.nan),
                     evaluations=total_evals, objective=best)


# -- helpers ---------------------------------------------------------------

def _xy(data):
    if hasattr(data, "time") and hasattr(data, "signal"):
        x, y = data.time, data.signal
    elif hasattr(data, "axis") and hasattr(data, "values"):
        x, y = data.axis, data.values
    else:
        x, y = data
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DomainError("x and y must be 1-D arrays of equal length")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DomainError("data contain non-finite values")
    return x, y


def _linear_solve(basis, y):
    coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
    return coef, y - basis @ coef


def _hessian_uncertainty(model_fn, p, scale, y, x):
    """1-sigma uncertainties from a central-difference Hessian of the sum of squares."""
    p = np.asarray(p, dtype=float)
    n, m = p.size, y.size
    if m <= n:
        return np.full(n, np.nan)

    def ssr(q):
        r = y - model_fn(x, q)
        return float(r @ r)

    h = HESSIAN_STEP * np.maximum(np.abs(p), scale)
    H = np.empty((n, n))
    f0 = ssr(p)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h[i]
        H[i, i] = (ssr(p + ei) - 2 * f0 + ssr(p - ei)) / h[i] ** 2
        for j in range(i):
            ej = np.zeros(n)
            ej[j] = h[j]
            H[i, j] = H[j, i] = (ssr(p + ei + ej) - ssr(p + ei - ej) - ssr(p - ei + ej)
                                 + ssr(p - ei - ej)) / (4 * h[i] * h[j])
    sigma2 = f0 / (m - n)
    try:
        cov = 2.0 * sigma2 * np.linalg.inv(H)
    except np.linalg.LinAlgError:
        return np.full(n, np.nan)
    d = np.diag(cov)
    return np.where(d >= 0, np.sqrt(np.abs(d)), np.nan)


def _finish(model, names, params, x, y, model_fn, opt, flags, scale, converged=None):
    resid = y - model_fn(x, params)
    unc = _hessian_uncertainty(model_fn, params, scale, y, x)
    return FitResult(params=np.asarray(params, dtype=float), residual_rms=float(np.sqrt(np.mean(resid ** 2))),
                     iterations=opt.iterations if opt else 0, converged=opt.converged if converged is None else converged,
                     param_uncertainty=unc, names=tuple(names), model=model,
                     evaluations=opt.evaluations if opt else 0, objective=float(resid @ resid),
                     flags=flags, x=x, residuals=resid)


def _is_constant(y):
    return np.ptp(y) <= 1e-12 * max(1.0, float(np.max(np.abs(y))))


# -- exponentials ----------------------------------------------------------

def _exp_decay(x, p):
    A, tau, C = p
    return A * np.exp(-x / tau) + C


def _exp_recovery(x, p):
    A, B, tau = p
    return A - B * np.exp(-x / tau)


def fit_exponential(data, kind: str = "decay") -> FitResult:
    """``decay``: A exp(-t/tau) + C.  ``recovery``: A - B exp(-t/tau)."""
    if kind not in ("decay", "recovery"):
        raise DomainError(f"unknown exponential kind {kind!r}")
    x, y = _xy(data)
    if x.size < 4:
        raise DomainError("an exponential fit needs at least 4 points")
    span = float(np.ptp(x))
    if span <= 0:
        raise DomainError("x values must not all be equal")
    sign = 1.0 if kind == "decay" else -1.0

    def basis(log_tau):
        return np.column_stack([sign * np.exp(-(x - x.min()) / np.exp(log_tau)), np.ones_like(x)])

    def objective(q):
        _, r = _linear_solve(basis(q[0]), y)
        return float(r @ r)

    names = ("A", "tau", "C") if kind == "decay" else ("A", "B", "tau")
    model_fn = _exp_decay if kind == "decay" else _exp_recovery
    if _is_constant(y):
        tau = span / 2
        params = (0.0, tau, float(y.mean())) if kind == "decay" else (float(y.mean()), 0.0, tau)
        return _finish(f"exp_{kind}", names, params, x, y, model_fn, None, ["tau_unidentifiable"],
                       np.array([1.0, tau, 1.0]), converged=True)
    dx = float(np.min(np.diff(np.unique(x))))
    grid = np.linspace(np.log(dx / 2), np.log(10 * span), 61)
    start = grid[int(np.argmin([objective([g]) for g in grid]))]
    opt = minimize(objective, [start], scale=[1.0])
    log_tau = float(opt.params[0])
    tau = float(np.exp(log_tau))
    (amp, const), _ = _linear_solve(basis(log_tau), y)
    amp *= np.exp(x.min() / tau)
    flags = []
    converged = opt.converged
    if span < 2 * tau:
        flags.append("data span shorter than 2 tau")
        converged = False
    if kind == "decay":
        params = (amp, tau, const)
        scale = np.array([max(abs(amp), 1e-300), tau, max(abs(const), abs(amp), 1e-300)])
    else:
        params = (const, amp, tau)
        scale = np.array([max(abs(const), abs(amp), 1e-300), max(abs(amp), 1e-300), tau])
    return _finish(f"exp_{kind}", names, params, x, y, model_fn, opt, flags, scale, converged)


# -- Lorentzians -----------------------------------------------------------

def lorentzian(x, center, fwhm):
    """Peak-normalised Lorentzian."""
    return 1.0 / (1.0 + ((x - center) / (fwhm / 2.0)) ** 2)


def _lorentz_model(k):
    def fn(x, p):
        out = np.full_like(x, p[3 * k])
        for i in range(k):
            c, w, a = p[3 * i: 3 * i + 3]
            out = out + a * lorentzian(x, c, w)
        return out
    return fn


def fit_lorentzian_sum(data, k: int = 2) -> FitResult:
    """Sum of ``k`` Lorentzians plus a constant; peaks ordered by centre."""
    if k < 1:
        raise DomainError("k must be at least 1")
    x, y = _xy(data)
    order = np.argsort(x)
    x, y = x[order], y[order]
    names = tuple(f"{n}_{i}" for i in range(k) for n in ("center", "fwhm", "amplitude")) + ("baseline",)
    model_fn = _lorentz_model(k)
    if x.size < 3 * k + 2:
        raise DomainError(f"need at least {3 * k + 2} points for {k} peaks")
    prominence = 0.05 * float(np.ptp(y)) if np.ptp(y) > 0 else np.inf
    peaks, props = find_peaks(y, prominence=prominence)
    if peaks.size < k:
        params = np.concatenate([np.tile([np.nan, np.nan, 0.0], k), [float(np.median(y))]])
        return FitResult(params=params, residual_rms=float(np.std(y)), iterations=0, converged=False,
                         param_uncertainty=np.full(params.size, np.nan), names=names,
                         model=f"lorentzian_sum({k})",
                         flags=[f"found {peaks.size} local maxima, need {k}"], x=x, residuals=y - np.median(y))
    top = peaks[np.argsort(props["prominences"])[::-1][:k]]
    top = np.sort(top)
    widths = peak_widths(y, top, rel_height=0.5)[0]
    step = float(np.median(np.diff(x)))
    centers0 = x[top]
    fwhm0 = np.maximum(widths * step, 2 * step)
    span = float(np.ptp(x))

    def unpack(q):
        return q[:k] * span + x.min(), np.exp(q[k:])

    def basis(q):
        c, w = unpack(q)
        return np.column_stack([lorentzian(x, c[i], w[i]) for i in range(k)] + [np.ones_like(x)])

    def objective(q):
        _, r = _linear_solve(basis(q), y)
        return float(r @ r)

    q0 = np.concatenate([(centers0 - x.min()) / span, np.log(fwhm0)])
    scale = np.concatenate([np.full(k, 1.0), np.ones(k)])
    # simplex works on offsets from the initial guess so step sizes are absolute
    opt = minimize(lambda d: objective(q0 + d * 0.01), np.zeros(2 * k), scale=scale, step=1.0)
    q = q0 + opt.params * 0.01
    c, w = unpack(q)
    coef, _ = _linear_solve(basis(q), y)
    params = []
    for i in range(k):
        params += [c[i], w[i], coef[i]]
    params.append(coef[k])
    params = np.array(params)
    pscale = np.concatenate([np.tile([span, step, max(np.ptp(y), 1e-300)], k), [max(np.ptp(y), 1e-300)]])
    flags = []
    converged = opt.converged
    if np.any((c < x.min()) | (c > x.max())):
        flags.append("a fitted centre lies outside the data range")
        converged = False
    return _finish(f"lorentzian_sum({k})", names, params, x, y, model_fn, opt, flags, pscale, converged)


# -- power law -------------------------------------------------------------

def fit_power_law(data) -> FitResult:
    """``y = a x**b`` by linear least squares in log-log space."""
    x, y = _xy(data)
    if x.size < 2:
        raise DomainError("a power-law fit needs at least two points")
    if np.any(x <= 0) or np.any(y <= 0):
        raise DomainError("power-law fits need positive x and y")
    if np.ptp(x) == 0:
        raise DomainError("x values must not all be equal")
    lx, ly = np.log(x), np.log(y)
    A = np.column_stack([np.ones_like(lx), lx])
    coef, _ = _linear_solve(A, ly)
    la, b = coef
    r = ly - A @ coef
    unc = np.full(2, np.nan)
    if x.size > 2:
        s2 = float(r @ r) / (x.size - 2)
        cov = s2 * np.linalg.inv(A.T @ A)
        unc = np.sqrt(np.abs(np.diag(cov)))
        unc[0] *= np.exp(la)
    a = float(np.exp(la))
    resid = y - a * x ** b
    return FitResult(params=np.array([a, float(b)]), residual_rms=float(np.sqrt(np.mean(resid ** 2))),
                     iterations=0, converged=True, param_uncertainty=unc, names=("a", "b"),
                     model="power_law", x=x, residuals=resid)


# -- damped cosine ---------------------------------------------------------

def fft_frequency(x, y) -> float:
    """Dominant non-zero frequency of ``y`` sampled at ``x`` (resampled uniformly)."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    n = x.size
    grid = np.linspace(x.min(), x.max(), n)
    yu = np.interp(grid, x, y) - np.mean(y)
    dt = grid[1] - grid[0]
    pad = 16 * n
    spec = np.abs(np.fft.rfft(yu * np.hanning(n), pad))
    freqs = np.fft.rfftfreq(pad, dt)
    k = int(np.argmax(spec[1:])) + 1
    if 1 <= k < spec.size - 1:
        a, b, c = spec[k - 1], spec[k], spec[k + 1]
        denom = a - 2 * b + c
        shift = 0.5 * (a - c) / denom if denom != 0 else 0.0
        return float((k + shift) * (freqs[1] - freqs[0]))
    return float(freqs[k])


def _damped_cos(x, p):
    A, f, tau, phi, C = p
    env = np.exp(-x / tau) if np.isfinite(tau) and tau != 0 else np.ones_like(x)
    return A * env * np.cos(2 * np.pi * f * x + phi) + C


def fit_damped_cosine(data) -> FitResult:
    """``A exp(-t/tau) cos(2 pi f t + phi) + C``; an undamped fit reports tau = inf."""
    x, y = _xy(data)
    names = ("amplitude", "frequency", "decay_time", "phase", "offset")
    if x.size < 6:
        raise DomainError("a damped-cosine fit needs at least 6 points")
    span = float(np.ptp(x))
    if _is_constant(y):
        params = np.array([0.0, 0.0, np.inf, 0.0, float(y.mean())])
        return FitResult(params=params, residual_rms=float(np.std(y)), iterations=0, converged=True,
                         param_uncertainty=np.full(5, np.nan), names=names, model="damped_cosine",
                         flags=["frequency_unidentifiable"], x=x, residuals=y - y.mean())
    f0 = fft_frequency(x, y)

    def basis(q):
        f, gamma = q
        env = np.exp(-gamma * x)
        ph = 2 * np.pi * f * x
        return np.column_stack([env * np.cos(ph), env * np.sin(ph), np.ones_like(x)])

    def objective(q):
        _, r = _linear_solve(basis((q[0] * f0, q[1] / span)), y)
        return float(r @ r)

    gammas = np.linspace(0.0, 5.0, 11)
    g0 = gammas[int(np.argmin([objective([1.0, g]) for g in gammas]))]
    opt = minimize(objective, [1.0, g0], scale=[1.0, 1.0], step=0.02)
    f = float(opt.params[0] * f0)
    gamma = float(opt.params[1] / span)
    (a, b, C), _ = _linear_solve(basis((f, gamma)), y)
    A = float(np.hypot(a, b))
    phi = float(np.arctan2(-b, a))
    tau = 1.0 / gamma if gamma > 0 else np.inf
    params = np.array([A, f, tau, phi, C])
    flags = []
    converged = opt.converged
    dt = float(np.max(np.diff(np.sort(x))))
    if f * dt >= 0.5:
        flags.append("undersampled: frequency at or above the Nyquist limit")
        converged = False
    if f * span < 2:
        flags.append("fewer than two periods sampled")
        converged = False
    if A <= 1e-9 * max(abs(C), 1e-300):
        flags.append("frequency_unidentifiable")

    # uncertainties on the decay rate, converted to decay time afterwards
    def rate_model(xx, p):
        A_, f_, g_, ph_, C_ = p
        return A_ * np.exp(-g_ * xx) * np.cos(2 * np.pi * f_ * xx + ph_) + C_

    p_rate = np.array([A, f, gamma, phi, C])
    unc = _hessian_uncertainty(rate_model, p_rate, np.array([max(A, 1e-300), f, 1.0 / span, 1.0,
                                                             max(abs(C), A, 1e-300)]), y, x)
    if gamma > 0:
        unc[2] = unc[2] / gamma ** 2
    else:
        unc[2] = np.nan
    resid = y - _damped_cos(x, params)
    return FitResult(params=params, residual_rms=float(np.sqrt(np.mean(resid ** 2))), iterations=opt.iterations,
                     converged=converged, param_uncertainty=unc, names=names, model="damped_cosine",
                     evaluations=opt.evaluations, objective=float(resid @ resid), flags=flags, x=x,
                     residuals=resid, )


# -- spin parameters from ODMR ridges --------------------------------------

def _ridge_transitions(D, E, g, fields_mT, axis):
    """Both |0>-like transitions (GHz) at each field, for fields along ``axis``."""
    sys = SpinSystem(D=abs(D), E=min(abs(E), abs(D) / 3), g_factor=g, zfs_axis=axis)
    out = np.empty((len(fields_mT), 2))
    axis = np.asarray(axis, dtype=float)
    for k, b in enumerate(fields_mT):
        H = build_hamiltonian(sys, FieldPoint(B0=tuple(axis * b * 1e-3)))
        e = np.linalg.eigvalsh(H)
        out[k] = e[1] - e[0], e[2] - e[0]
    return out


def extract_spin_params(ridge_points, fix_E: float | None = None, g0: float = 2.0,
                        axis=(0.0, 0.0, 1.0)) -> FitResult:
    """Fit (D, E, g) to ODMR ridge points ``(B mT, f GHz)`` along the molecular axis.

    Each point is matched to the nearer of the two transitions out of the
    lowest level, using the full eigensolve. Points recorded only at zero
    field constrain D and E but not g, which is then flagged and held at
    ``g0``. Valid below the ground-state level crossing.
    """
    pts = np.asarray(ridge_points, dtype=float).reshape(-1, 2)
    if pts.shape[0] < 1:
        raise DomainError("no ridge points given")
    B, f = pts[:, 0], pts[:, 1]
    if np.any(~np.isfinite(pts)):
        raise DomainError("ridge points must be finite")
    flags = []
    zero_only = bool(np.all(B == 0))
    if np.ptp(B) == 0 and not zero_only:
        raise DomainError("all ridge points share one field; g and D cannot be separated")
    free_E = fix_E is None
    free_g = not zero_only
    if zero_only:
        flags.append("g_unidentifiable")
    n_free = 1 + int(free_E) + int(free_g)
    if pts.shape[0] < n_free and not zero_only:
        raise DomainError(f"need at least {n_free} ridge points")
    low = B <= np.min(B) + 1e-12
    D0 = float(np.mean(f[low]))
    E0 = float(np.ptp(f[low]) / 2) if free_E else float(fix_E)

    def unpack(q):
        i = 0
        D = q[i]
        i += 1
        E = abs(q[i]) if free_E else float(fix_E)
        i += int(free_E)
        g = q[i] if free_g else g0
        return D, E, g

    def residuals(q):
        D, E, g = unpack(q)
        if E > abs(D) / 3:
            return np.full(f.size, 1e3)
        pred = _ridge_transitions(D, E, g, B, axis)
        return np.min(np.abs(pred - f[:, None]), axis=1)

    def objective(q):
        r = residuals(q)
        return float(r @ r)

    q0 = [D0] + ([max(E0, 1e-3)] if free_E else []) + ([g0] if free_g else [])
    opt = minimize(objective, q0)
    D, E, g = unpack(opt.params)
    r = residuals(opt.params)
    names = ("D", "E", "g")
    params = np.array([D, E, g])

    def model_fn(_, p):
        pred = _ridge_transitions(p[0], p[1], p[2], B, axis)
        idx = np.argmin(np.abs(_ridge_transitions(D, E, g, B, axis) - f[:, None]), axis=1)
        return pred[np.arange(B.size), idx]

    unc = np.full(3, np.nan)
    free_idx = [0] + ([1] if free_E else []) + ([2] if free_g else [])
    if B.size > len(free_idx):
        sub = _hessian_uncertainty(lambda x_, p_: model_fn(x_, _embed(p_, params, free_idx)),
                                   params[free_idx], np.maximum(np.abs(params[free_idx]), 1e-3), f, B)
        unc[free_idx] = sub
    if not free_E:
        flags.append("E_fixed")
    return FitResult(params=params, residual_rms=float(np.sqrt(np.mean(r ** 2))), iterations=opt.iterations,
                     converged=opt.converged, param_uncertainty=unc, names=names, model="spin_params",
                     evaluations=opt.evaluations, objective=float(r @ r), flags=flags, x=B, residuals=r)


def _embed(sub, full, idx):
    out = np.array(full, dtype=float)
    out[idx] = sub
    return out


# -- problem dispatch ------------------------------------------------------

MODEL_TAGS = ("exp_decay", "exp_recovery", "lorentzian_sum", "damped_cosine", "power_law")


@dataclass(frozen=True, eq=False)
class FitProblem:
    """A model family with data; ``k`` is the peak count for ``lorentzian_sum``."""

    model: str
    x: np.ndarray
    y: np.ndarray
    k: int = 1

    def __post_init__(self):
        if self.model not in MODEL_TAGS:
            raise DomainError(f"unknown model {self.model!r}; choose from {', '.join(MODEL_TAGS)}")
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.shape != y.shape:
            raise DomainError("x and y lengths differ")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)


def solve(problem: FitProblem) -> FitResult:
    data = (problem.x, problem.y)
    if problem.model == "exp_decay":
        return fit_exponential(data, "decay")
    if problem.model == "exp_recovery":
        return fit_exponential(data, "recovery")
    if problem.model == "lorentzian_sum":
        return fit_lorentzian_sum(data, problem.k)
    if problem.model == "damped_cosine":
        return fit_damped_cosine(data)
    return fit_power_law(data)
