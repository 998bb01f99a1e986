"""Synthetic spectra built from the spin Hamiltonian.

Covers field/frequency ODMR maps, field-swept cw-ESR (single crystal and
powder), Zeeman-split zero-phonon emission, PLE profiles and fluorescence
line narrowing.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import erf, voigt_profile

from .errors import DomainError
from .series import Spectrum, write_matrix_csv
from .spin import (
    MUB_OVER_H,
    FieldPoint,
    SpinSystem,
    boltzmann_populations,
    build_hamiltonian,
    diagonalize,
    drive_operator,
    frame_rotation,
    perpendicular,
    transition_table,
    triplet_labels,
    zeeman_operator,
)

SPEED_OF_LIGHT = 299792458.0
# Transitions weaker than this are treated as forbidden.
FORBIDDEN_INTENSITY = 1e-9

_CHUNK = 64
_FWHM_TO_SIGMA = 1.0 / (2.0 * np.sqrt(2.0 * np.log(2.0)))


@dataclass(frozen=True)
class LineShape:
    """Peak-normalised line shape (value 1 at the centre).

    ``fwhm`` is in the units of the axis it is evaluated on. With
    ``derivative=True`` the analytic first derivative is returned instead.
    """

    kind: str = "lorentzian"
    fwhm: float = 0.5
    derivative: bool = False

    def __post_init__(self):
        kind = self.kind.lower()
        if kind not in ("lorentzian", "gaussian"):
            raise DomainError(f"unknown line shape {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if not self.fwhm > 0:
            raise DomainError(f"line width must be positive, got {self.fwhm!r}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "lorentzian":
            hw = self.fwhm / 2
            denom = x * x + hw * hw
            if self.derivative:
                return -2 * hw * hw * x / (denom * denom)
            return hw * hw / denom
        sigma = self.fwhm * _FWHM_TO_SIGMA
        g = np.exp(-0.5 * (x / sigma) ** 2)
        if self.derivative:
            return -x / sigma**2 * g
        return g

    def boxed(self, x, width):
        """The line averaged over centres spread uniformly across ``width``."""
        if width <= 1e-9 * self.fwhm:
            return self(x)
        x = np.asarray(x, dtype=float)
        a, b = x + width / 2, x - width / 2
        if self.derivative:
            plain = LineShape(self.kind, self.fwhm)
            return (plain(a) - plain(b)) / width
        if self.kind == "lorentzian":
            hw = self.fwhm / 2
            return hw * (np.arctan(a / hw) - np.arctan(b / hw)) / width
        sigma = self.fwhm * _FWHM_TO_SIGMA
        s2 = sigma * np.sqrt(2.0)
        return sigma * np.sqrt(np.pi / 2) * (erf(a / s2) - erf(b / s2)) / width


@dataclass(frozen=True)
class OpticalModel:
    """Optical interface of the S=0 excited state.

    Units: ``zpl_wavelength`` nm, ``t_opt`` us, linewidths GHz. ``branching``
    orders the ground sublevels as (|0>, |->, |+>).
    """

    zpl_wavelength: float = 1025.0
    t_opt: float = 3.3
    inhomogeneous_fwhm: float = 150.0
    homogeneous_fwhm: float = 5.0
    branching: tuple = (1 / 3, 1 / 3, 1 / 3)
    debye_waller: float = 1.0
    dipole_axis: tuple = (1.0, 0.0, 0.0)

    def __post_init__(self):
        b = np.asarray(self.branching, dtype=float)
        if b.ndim != 1 or np.any(b < 0) or abs(b.sum() - 1) > 1e-12:
            raise DomainError(f"branching ratios must be non-negative and sum to 1, got {self.branching}")
        object.__setattr__(self, "branching", tuple(b))
        if not 0 < self.debye_waller <= 1:
            raise DomainError("debye_waller must lie in (0, 1]")
        if not self.t_opt > 0:
            raise DomainError("t_opt must be positive")
        if not (self.homogeneous_fwhm > 0 and self.inhomogeneous_fwhm > 0):
            raise DomainError("linewidths must be positive")
        if self.homogeneous_fwhm > self.inhomogeneous_fwhm:
            raise DomainError("homogeneous linewidth cannot exceed the inhomogeneous linewidth")
        d = np.asarray(self.dipole_axis, dtype=float)
        if abs(np.linalg.norm(d) - 1) > 1e-12:
            raise DomainError("dipole_axis must be a unit vector")
        object.__setattr__(self, "dipole_axis", tuple(d))


@dataclass(eq=False)
class OdmrMap:
    field_axis: np.ndarray
    freq_axis: np.ndarray
    contrast: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.contrast.shape != (len(self.field_axis), len(self.freq_axis)):
            raise DomainError("contrast shape does not match the axes")

    def to_csv(self, path):
        meta = {"rows": "field_mT", "columns": "freq_GHz", **self.metadata}
        return write_matrix_csv(path, self.field_axis, self.freq_axis, self.contrast, meta)

    def ridges(self):
        """Per-field argmax frequency below and above the field-free centre.

        A maximum on the outer edge of the frequency grid means the ridge has
        left the window; it is reported as NaN.
        """
        centre = self.metadata.get("D_GHz")
        f = self.freq_axis
        lo = f <= centre
        hi = f >= centre
        i_low = np.argmax(self.contrast[:, lo], axis=1)
        i_high = np.argmax(self.contrast[:, hi], axis=1)
        low = np.where(i_low == 0, np.nan, f[lo][i_low])
        high = np.where(i_high == hi.sum() - 1, np.nan, f[hi][i_high])
        return low, high


class Resonance(NamedTuple):
    field_mT: float
    intensity: float
    population_weight: float
    lower: int
    upper: int
    # |d B_res / d direction| in mT per radian
    angular_gradient: float = 0.0


@dataclass(frozen=True)
class Single:
    """Single-crystal orientation: static field along ``axis`` (lab frame)."""

    axis: tuple = (0.0, 0.0, 1.0)


@dataclass(frozen=True)
class Powder:
    """Orientation average over ``n_orient`` Fibonacci-lattice directions."""

    n_orient: int = 2000

    def __post_init__(self):
        if int(self.n_orient) < 1:
            raise DomainError(f"n_orient must be at least 1, got {self.n_orient}")


def fibonacci_sphere(n: int) -> np.ndarray:
    """``n`` nearly uniform unit vectors, deterministic."""
    if n < 1:
        raise DomainError("need at least one orientation")
    k = np.arange(n) + 0.5
    z = 1 - 2 * k / n
    r = np.sqrt(np.clip(1 - z * z, 0, None))
    phi = np.pi * (1 + np.sqrt(5.0)) * k
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def powder_orientations(sys: SpinSystem, n: int) -> np.ndarray:
    """Field directions (lab frame) for a powder average.

    The zero-field-splitting Hamiltonian is symmetric under reflections of
    the field through the molecular axis planes, so a Fibonacci lattice of
    ``n`` equal-area points on one octant of the molecular frame covers the
    sphere at eight times the density of a full-sphere lattice.
    """
    if n < 1:
        raise DomainError("need at least one orientation")
    k = np.arange(n) + 0.5
    z = 1 - k / n
    r = np.sqrt(np.clip(1 - z * z, 0, None))
    frac = np.mod(k * (np.sqrt(5.0) - 1) / 2, 1.0)
    phi = 0.5 * np.pi * frac
    mol = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    return mol @ frame_rotation(sys.zfs_axis).T


def _check_grid(grid, name):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise DomainError(f"{name} grid must be a non-empty 1D array")
    return grid


def odmr_map(sys: SpinSystem, optical, B_range, f_range, line: LineShape, temperature: float,
             axis=None, b1_dir=None) -> OdmrMap:
    """Field/frequency cw-ODMR contrast proxy.

    ``B_range`` in mT along ``axis`` (default: the molecular axis), ``f_range``
    in GHz. Each transition contributes intensity x population difference x
    line shape.
    """
    B = _check_grid(B_range, "field")
    f = _check_grid(f_range, "frequency")
    axis = np.asarray(sys.zfs_axis if axis is None else axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    b1 = perpendicular(axis) if b1_dir is None else np.asarray(b1_dir, dtype=float)
    contrast = np.zeros((B.size, f.size))
    for i, b in enumerate(B):
        fp = FieldPoint(B0=tuple(axis * b * 1e-3), B1_dir=tuple(b1))
        for t in transition_table(sys, fp, temperature):
            weight = t.intensity * t.population_weight
            if weight != 0.0:
                contrast[i] += weight * line(f - t.frequency)
    meta = {
        "D_GHz": sys.D,
        "E_GHz": sys.E,
        "g": sys.g_factor,
        "temperature_K": temperature,
        "line": f"{line.kind}:{line.fwhm}",
    }
    if optical is not None:
        meta["t_opt_us"] = optical.t_opt
    return OdmrMap(field_axis=B, freq_axis=f, contrast=contrast, metadata=meta)


def _perp_pair(axis):
    u1 = perpendicular(axis)
    u2 = np.array([axis[1] * u1[2] - axis[2] * u1[1],
                   axis[2] * u1[0] - axis[0] * u1[2],
                   axis[0] * u1[1] - axis[1] * u1[0]])
    return u1, u2


def _intensities(lab, states, axis, b1_dir):
    """|<i|S.b1|j>|^2 averaged over B1 in the plane normal to ``axis`` unless fixed."""
    if b1_dir is not None:
        m = states.conj().T @ np.einsum("j,jab->ab", np.asarray(b1_dir, dtype=float), lab) @ states
        return np.abs(m) ** 2
    u1, u2 = _perp_pair(axis)
    m1 = states.conj().T @ np.einsum("j,jab->ab", u1, lab) @ states
    m2 = states.conj().T @ np.einsum("j,jab->ab", u2, lab) @ states
    return (np.abs(m1) ** 2 + np.abs(m2) ** 2) / 2


def _merge(found):
    found.sort(key=lambda r: r.field_mT)
    merged = []
    for r in found:
        if merged and abs(r.field_mT - merged[-1].field_mT) < 1e-6:
            prev = merged[-1]
            total = prev.intensity + r.intensity
            weight = (prev.intensity * prev.population_weight + r.intensity * r.population_weight) / total
            merged[-1] = prev._replace(intensity=total, population_weight=weight,
                                       angular_gradient=max(prev.angular_gradient, r.angular_gradient))
        else:
            merged.append(r)
    return merged


def _resonances_batch(sys, f_mw, axes, B_max, temperature, b1_dir, n_grid, bisect_steps=60):
    """Resonances for every row of ``axes``; one list per orientation."""
    H0 = build_hamiltonian(sys, FieldPoint())
    lab = np.array([drive_operator(sys, e) for e in np.eye(3)])
    zeeman = sys.g_factor * MUB_OVER_H * np.einsum("kj,jab->kab", axes, lab)
    grid = np.linspace(0.0, B_max, n_grid) * 1e-3
    n = sys.dim
    pairs = np.array([(i, j) for i in range(n) for j in range(i + 1, n)])
    levels = np.linalg.eigvalsh(H0[None, None] + grid[None, :, None, None] * zeeman[:, None])
    # (orientation, grid, pair)
    g = levels[..., pairs[:, 1]] - levels[..., pairs[:, 0]] - f_mw
    exact = np.argwhere(g == 0.0)
    brackets = np.argwhere(g[:, :-1] * g[:, 1:] < 0)
    o = np.concatenate([exact[:, 0], brackets[:, 0]])
    p = np.concatenate([exact[:, 2], brackets[:, 2]])
    lo = np.concatenate([grid[exact[:, 1]], grid[brackets[:, 1]]])
    hi = np.concatenate([grid[exact[:, 1]], grid[brackets[:, 1] + 1]])
    if o.size:
        pi, pj = pairs[p, 0], pairs[p, 1]
        rows = np.arange(o.size)
        g_lo = g[o, np.searchsorted(grid, lo), p]
        for _ in range(bisect_steps):
            mid = 0.5 * (lo + hi)
            e = np.linalg.eigvalsh(H0[None] + mid[:, None, None] * zeeman[o])
            g_mid = e[rows, pj] - e[rows, pi] - f_mw
            left = np.sign(g_mid) == np.sign(g_lo)
            lo = np.where(left, mid, lo)
            g_lo = np.where(left, g_mid, g_lo)
            hi = np.where(left, hi, mid)
        roots = 0.5 * (lo + hi)
        energies, states = np.linalg.eigh(H0[None] + roots[:, None, None] * zeeman[o])
    out = [[] for _ in range(len(axes))]
    for k in range(o.size):
        axis = axes[o[k]]
        i, j = int(pi[k]), int(pj[k])
        inten = _intensities(lab, states[k], axis, b1_dir)[i, j]
        if inten <= FORBIDDEN_INTENSITY:
            continue
        pops = boltzmann_populations(energies[k], temperature)
        vi = np.real(np.einsum("a,jab,b->j", states[k][:, i].conj(), lab, states[k][:, i]))
        vj = np.real(np.einsum("a,jab,b->j", states[k][:, j].conj(), lab, states[k][:, j]))
        v = vj - vi
        along = float(v @ axis)
        tangential = float(np.linalg.norm(v - along * axis))
        grad = roots[k] * 1e3 * tangential / abs(along) if along != 0.0 else np.inf
        out[o[k]].append(Resonance(float(roots[k] * 1e3), float(inten), float(pops[i] - pops[j]), i, j, float(grad)))
    return [_merge(r) for r in out]


def resonance_fields(sys: SpinSystem, f_mw: float, B_axis, B_max: float, temperature: float,
                     b1_dir=None, n_grid: int = 2001) -> list:
    """Fields in ``[0, B_max]`` mT where an allowed transition matches ``f_mw`` GHz.

    Each sorted-level transition branch is bracketed on a uniform grid and
    refined by bisection. Roots of different branches that coincide are
    merged (their intensities add). Forbidden transitions are dropped.
    Without ``b1_dir`` the drive is averaged over the plane normal to the
    static field, as in a resonator.
    """
    if not f_mw > 0:
        raise DomainError(f"microwave frequency must be positive, got {f_mw!r}")
    if not temperature > 0:
        raise DomainError("temperature must be positive")
    axis = np.asarray(B_axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    return _resonances_batch(sys, f_mw, axis[None], B_max, temperature, b1_dir, n_grid)[0]


def cw_esr_spectrum(sys: SpinSystem, f_mw: float, B_grid, line: LineShape, temperature: float,
                    orientation=None) -> Spectrum:
    """Field-swept cw-ESR spectrum on ``B_grid`` (mT); line width in mT.

    Powder averages bracket resonances on a coarser field grid (401 points)
    than single orientations (2001 points), and spread each line uniformly
    over the field change across its orientation cell (first-order
    interpolation), so the average converges smoothly.
    """
    B = _check_grid(B_grid, "field")
    orientation = Single() if orientation is None else orientation
    if isinstance(orientation, Powder):
        axes = powder_orientations(sys, int(orientation.n_orient))
        mode = f"powder:{int(orientation.n_orient)}"
        n_grid = 401
        spacing = np.sqrt(0.5 * np.pi / int(orientation.n_orient))
    elif isinstance(orientation, Single):
        axes = np.asarray([orientation.axis], dtype=float)
        axes = axes / np.linalg.norm(axes)
        mode = "single:" + " ".join(repr(float(a)) for a in orientation.axis)
        n_grid = 2001
        spacing = 0.0
    else:
        raise DomainError(f"unknown orientation {orientation!r}")
    if not f_mw > 0:
        raise DomainError(f"microwave frequency must be positive, got {f_mw!r}")
    b_max = float(B[-1]) + 10 * line.fwhm
    values = np.zeros_like(B)
    for start in range(0, len(axes), _CHUNK):
        chunk = axes[start:start + _CHUNK]
        for res in _resonances_batch(sys, f_mw, chunk, b_max, temperature, None, n_grid):
            for r in res:
                amp = r.intensity * r.population_weight
                # spread each line over the field span of its orientation cell
                span = min(r.angular_gradient * spacing, b_max)
                values += amp * line.boxed(B - r.field_mT, span)
    values /= len(axes)
    meta = {
        "f_mw_GHz": f_mw,
        "D_GHz": sys.D,
        "E_GHz": sys.E,
        "g": sys.g_factor,
        "temperature_K": temperature,
        "orientation": mode,
        "line": f"{line.kind}:{line.fwhm}:{'derivative' if line.derivative else 'absorption'}",
    }
    return Spectrum(B, values, unit="mT", metadata=meta)


def zeeman_pl_spectrum(sys: SpinSystem, optical: OpticalModel, B: float, wavelength_grid,
                       line: LineShape):
    """Zero-phonon emission at field ``B`` (tesla, along the molecular axis).

    Returns ``(spectrum_at_B, spectrum_at_B - spectrum_at_0)`` on the
    wavelength grid (nm). ``line.fwhm`` is in GHz. Emission into ground
    level i sits at the ZPL frequency minus that level's energy.
    """
    if B < 0:
        raise DomainError("field magnitude must be non-negative")
    lam = _check_grid(wavelength_grid, "wavelength")
    nu = SPEED_OF_LIGHT / lam  # GHz, since lam is in nm
    nu_zpl = SPEED_OF_LIGHT / optical.zpl_wavelength
    branching = np.asarray(optical.branching)

    def emission(b_tesla):
        fp = FieldPoint(B0=tuple(np.asarray(sys.zfs_axis) * b_tesla))
        es = diagonalize(sys, fp)
        labels = triplet_labels(es, sys)
        vals = np.zeros_like(lam)
        centres = []
        for weight, idx in zip(branching, labels):
            centre = nu_zpl - es.energies[idx]
            centres.append(SPEED_OF_LIGHT / centre)
            vals += weight * line(nu - centre)
        return optical.debye_waller * vals, centres

    at_b, centres = emission(B)
    at_0, _ = emission(0.0)
    covered = all(lam[0] <= c <= lam[-1] for c in centres)
    meta = {
        "B_T": B,
        "zpl_nm": optical.zpl_wavelength,
        "g": sys.g_factor,
        "line_centres_nm": centres,
        "coverage_warning": not covered,
    }
    spec_b = Spectrum(lam, at_b, unit="nm", metadata=dict(meta))
    diff = Spectrum(lam, at_b - at_0, unit="nm", metadata=dict(meta, kind="differential"))
    return spec_b, diff


def ple_profile(optical: OpticalModel, detuning_grid) -> Spectrum:
    """Inhomogeneous excitation profile, unit peak at zero detuning (GHz)."""
    d = _check_grid(detuning_grid, "detuning")
    values = LineShape("gaussian", optical.inhomogeneous_fwhm)(d)
    return Spectrum(d, values, unit="GHz", metadata={"inhomogeneous_fwhm_GHz": optical.inhomogeneous_fwhm})


def line_narrowing(optical: OpticalModel, detuning_grid):
    """Ensemble vs laser-selected sub-ensemble emission profiles.

    The ensemble line is the Voigt convolution of the inhomogeneous Gaussian
    with the homogeneous Lorentzian; the resonantly selected sub-ensemble
    keeps only the homogeneous Lorentzian. Both are peak-normalised.
    """
    d = _check_grid(detuning_grid, "detuning")
    sigma = optical.inhomogeneous_fwhm * _FWHM_TO_SIGMA
    gamma = optical.homogeneous_fwhm / 2
    ensemble = voigt_profile(d, sigma, gamma) / voigt_profile(0.0, sigma, gamma)
    sub = LineShape("lorentzian", optical.homogeneous_fwhm)(d)
    meta = {"inhomogeneous_fwhm_GHz": optical.inhomogeneous_fwhm, "homogeneous_fwhm_GHz": optical.homogeneous_fwhm}
    return (
        Spectrum(d, ensemble, unit="GHz", metadata=dict(meta, kind="ensemble")),
        Spectrum(d, sub, unit="GHz", metadata=dict(meta, kind="subensemble")),
    )


def polarization_response(theta):
    """Relative excitation efficiency ``cos^2(theta)`` for ``theta`` in degrees."""
    return np.cos(np.deg2rad(theta)) ** 2


def fwhm(spectrum: Spectrum) -> float:
    """Full width at half maximum of the dominant peak, by linear interpolation."""
    x, y = spectrum.axis, spectrum.values
    k = int(np.argmax(y))
    half = y[k] / 2
    left = k
    while left > 0 and y[left] > half:
        left -= 1
    right = k
    while right < len(y) - 1 and y[right] > half:
        right += 1
    if y[left] > half or y[right] > half:
        raise DomainError("peak does not fall below half maximum inside the grid")
    xl = np.interp(half, [y[left], y[left + 1]], [x[left], x[left + 1]])
    xr = np.interp(half, [y[right], y[right - 1]], [x[right], x[right - 1]])
    return float(xr - xl)
