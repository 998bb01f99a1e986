"""Spin operators, zero-field-splitting Hamiltonians and transition tables.

All energies are frequencies in GHz. Fields are in tesla unless a name says
otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DomainError

# Bohr magneton over Planck constant, GHz/T.
MUB_OVER_H = 13.996244936
# Planck over Boltzmann constant, K/GHz.
H_OVER_K = 6.62607015e-34 * 1e9 / 1.380649e-23

_UNIT_TOL = 1e-12


def _unit_vector(v, name):
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise DomainError(f"{name} must be a 3-vector, got shape {v.shape}")
    if abs(np.linalg.norm(v) - 1.0) > _UNIT_TOL:
        raise DomainError(f"{name} must have unit norm, got |v|={np.linalg.norm(v)!r}")
    return v


def _as_spin(spin_S) -> Fraction:
    try:
        s = Fraction(spin_S).limit_denominator(1000)
    except (TypeError, ValueError) as exc:
        raise DomainError(f"invalid spin quantum number {spin_S!r}") from exc
    if s <= 0 or (2 * s).denominator != 1 or abs(float(s) - float(spin_S)) > 1e-12:
        raise DomainError(f"spin quantum number must be a positive half-integer, got {spin_S!r}")
    return s


@dataclass(frozen=True)
class SpinSystem:
    """Magnetic parameters of a single spin.

    ``zfs_axis`` is the molecular z-axis in the lab frame. Parameters must
    satisfy ``D >= 0`` and ``0 <= E <= D/3``; nothing is re-conventionalised.
    """

    D: float
    E: float = 0.0
    g_factor: float = 2.0
    spin_S: float = 1
    zfs_axis: tuple = (0.0, 0.0, 1.0)

    def __post_init__(self):
        s = _as_spin(self.spin_S)
        object.__setattr__(self, "spin_S", float(s))
        object.__setattr__(self, "zfs_axis", tuple(_unit_vector(self.zfs_axis, "zfs_axis")))
        if not (np.isfinite(self.D) and np.isfinite(self.E) and np.isfinite(self.g_factor)):
            raise DomainError("D, E and g_factor must be finite")
        if self.D < 0 or self.E < 0:
            raise DomainError(f"D and E must be non-negative (got D={self.D}, E={self.E})")
        if self.E > self.D / 3 + 1e-15:
            raise DomainError(f"E must not exceed D/3 (got D={self.D}, E={self.E})")

    @property
    def dim(self) -> int:
        return int(round(2 * self.spin_S)) + 1


@dataclass(frozen=True)
class FieldPoint:
    """Static field ``B0`` (tesla, lab frame) and microwave field direction."""

    B0: tuple = (0.0, 0.0, 0.0)
    B1_dir: tuple = (1.0, 0.0, 0.0)

    def __post_init__(self):
        b0 = np.asarray(self.B0, dtype=float)
        if b0.shape != (3,) or not np.all(np.isfinite(b0)):
            raise DomainError("B0 must be a finite 3-vector")
        object.__setattr__(self, "B0", tuple(b0))
        object.__setattr__(self, "B1_dir", tuple(_unit_vector(self.B1_dir, "B1_dir")))

    @classmethod
    def along(cls, axis, magnitude_T, b1_dir=None):
        """Field of ``magnitude_T`` along ``axis`` with B1 perpendicular to it."""
        axis = np.asarray(axis, dtype=float)
        axis = axis / np.linalg.norm(axis)
        if b1_dir is None:
            b1_dir = perpendicular(axis)
        return cls(B0=tuple(magnitude_T * axis), B1_dir=tuple(b1_dir))


@dataclass(frozen=True, eq=False)
class EigenSystem:
    energies: np.ndarray
    states: np.ndarray


@dataclass(frozen=True)
class Transition:
    lower: int
    upper: int
    frequency: float
    intensity: float
    population_weight: float


def perpendicular(axis) -> np.ndarray:
    """A deterministic unit vector perpendicular to ``axis``."""
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    trial = np.array([1.0, 0.0, 0.0]) if abs(axis[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    v = trial - axis * (trial @ axis)
    return v / np.linalg.norm(v)


def frame_rotation(axis) -> np.ndarray:
    """Rotation matrix whose columns are the molecular x, y, z axes in the lab.

    The molecular z-axis is ``axis``; x and y follow from the smallest rotation
    carrying lab z onto ``axis``.
    """
    n = np.asarray(axis, dtype=float)
    n = n / np.linalg.norm(n)
    z = np.array([0.0, 0.0, 1.0])
    c = float(z @ n)
    if c > 1 - 1e-15:
        return np.eye(3)
    if c < -1 + 1e-15:
        return np.diag([1.0, -1.0, -1.0])
    k = np.cross(z, n)
    s = np.linalg.norm(k)
    k = k / s
    K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + s * K + (1 - c) * (K @ K)


def spin_operators(spin_S):
    """Return ``(Sx, Sy, Sz)`` in the basis ``m = S, S-1, ..., -S``."""
    s = float(_as_spin(spin_S))
    n = int(round(2 * s)) + 1
    m = s - np.arange(n)
    # <m+1|S+|m> sits just above the diagonal
    splus = np.diag(np.sqrt(s * (s + 1) - m[1:] * (m[1:] + 1)), k=1).astype(complex)
    sminus = splus.conj().T
    sx = (splus + sminus) / 2
    sy = (splus - sminus) / 2j
    sz = np.diag(m).astype(complex)
    return sx, sy, sz


def _lab_and_molecular_ops(sys: SpinSystem):
    lab = np.array(spin_operators(sys.spin_S))
    R = frame_rotation(sys.zfs_axis)
    mol = np.einsum("jk,jab->kab", R, lab)
    return lab, mol


def build_hamiltonian(sys: SpinSystem, field: FieldPoint) -> np.ndarray:
    """Spin Hamiltonian in GHz.

    ``D (Sz^2 - S(S+1)/3) + E (Sx^2 - Sy^2) + g muB/h B0.S`` with the
    zero-field operators taken along the molecular axes.
    """
    lab, (mx, my, mz) = _lab_and_molecular_ops(sys)
    s = sys.spin_S
    n = sys.dim
    H = sys.D * (mz @ mz - s * (s + 1) / 3 * np.eye(n)) + sys.E * (mx @ mx - my @ my)
    H = H + sys.g_factor * MUB_OVER_H * np.einsum("j,jab->ab", np.asarray(field.B0), lab)
    return (H + H.conj().T) / 2


def _check_hermitian(H):
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {H.shape}")
    if not np.all(np.isfinite(H)):
        raise DomainError("matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(H))) if H.size else 1.0)
    if np.max(np.abs(H - H.conj().T), initial=0.0) > 1e-10 * scale:
        raise DomainError("matrix is not Hermitian")
    return H


def eigensystem(H, label_op=None) -> EigenSystem:
    """Ascending eigen-decomposition with deterministic degenerate labelling.

    Within a degenerate cluster the basis is rotated to diagonalise
    ``label_op`` (defaults to the diagonal m-operator of the basis), ordered
    by descending eigenvalue of that operator. Each eigenvector is phased so
    its largest component is real and positive.
    """
    H = _check_hermitian(H)
    n = H.shape[0]
    energies, states = np.linalg.eigh(H)
    if label_op is None:
        label_op = np.diag(np.arange(n - 1, -1, -1, dtype=float)).astype(complex)
    tol = 1e-8 * max(1.0, float(np.max(np.abs(energies))) if n else 1.0)
    i = 0
    while i < n:
        j = i + 1
        while j < n and energies[j] - energies[j - 1] < tol:
            j += 1
        if j - i > 1:
            block = states[:, i:j]
            proj = block.conj().T @ label_op @ block
            w, u = np.linalg.eigh((proj + proj.conj().T) / 2)
            order = np.argsort(-w, kind="stable")
            states[:, i:j] = block @ u[:, order]
        i = j
    for k in range(n):
        col = states[:, k]
        big = int(np.argmax(np.abs(col) - 1e-12 * np.arange(n)))
        states[:, k] = col * (abs(col[big]) / col[big])
    return EigenSystem(energies=energies, states=states)


def diagonalize(sys: SpinSystem, field: FieldPoint) -> EigenSystem:
    """Eigen-decomposition of the spin Hamiltonian, labelled along the molecular axis."""
    _, mol = _lab_and_molecular_ops(sys)
    return eigensystem(build_hamiltonian(sys, field), label_op=mol[2])


def boltzmann_populations(energies, temperature) -> np.ndarray:
    if not temperature > 0:
        raise DomainError(f"temperature must be positive, got {temperature!r}")
    e = np.asarray(energies, dtype=float)
    w = np.exp(-H_OVER_K * (e - e.min()) / temperature)
    return w / w.sum()


def transition_table(sys: SpinSystem, field: FieldPoint, temperature: float) -> list:
    """All level pairs with frequency, drive intensity and Boltzmann weight."""
    if not temperature > 0:
        raise DomainError(f"temperature must be positive, got {temperature!r}")
    es = diagonalize(sys, field)
    lab, _ = _lab_and_molecular_ops(sys)
    drive = np.einsum("j,jab->ab", np.asarray(field.B1_dir), lab)
    elements = es.states.conj().T @ drive @ es.states
    pops = boltzmann_populations(es.energies, temperature)
    out = []
    n = len(es.energies)
    for i in range(n):
        for j in range(i + 1, n):
            out.append(
                Transition(
                    lower=i,
                    upper=j,
                    frequency=float(es.energies[j] - es.energies[i]),
                    intensity=float(abs(elements[i, j]) ** 2),
                    population_weight=float(pops[i] - pops[j]),
                )
            )
    return out


def zero_field_levels(D: float, E: float) -> np.ndarray:
    """Closed-form S=1 zero-field energies ``(-2D/3, D/3-E, D/3+E)``."""
    return np.array([-2 * D / 3, D / 3 - E, D / 3 + E])


def triplet_labels(es: EigenSystem, sys: SpinSystem) -> tuple:
    """Indices ``(i0, i_minus, i_plus)`` of the |0>, |-1>, |+1>-like S=1 levels.

    |0> is the level with the largest weight on molecular m=0; the other two
    are ordered by energy.
    """
    if sys.dim != 3:
        raise DomainError("sublevel labels are defined for S=1 only")
    _, mol = _lab_and_molecular_ops(sys)
    w, v = np.linalg.eigh(mol[2])
    m0 = v[:, int(np.argmin(np.abs(w)))]
    overlap = np.abs(m0.conj() @ es.states) ** 2
    i0 = int(np.argmax(overlap))
    rest = [i for i in range(3) if i != i0]
    rest.sort(key=lambda i: (es.energies[i], i))
    return i0, rest[0], rest[1]


def zeeman_operator(sys: SpinSystem, direction) -> np.ndarray:
    """``g muB/h (direction . S)`` in GHz/T."""
    lab, _ = _lab_and_molecular_ops(sys)
    return sys.g_factor * MUB_OVER_H * np.einsum("j,jab->ab", np.asarray(direction, dtype=float), lab)


def drive_operator(sys: SpinSystem, direction) -> np.ndarray:
    lab, _ = _lab_and_molecular_ops(sys)
    return np.einsum("j,jab->ab", np.asarray(direction, dtype=float), lab)
