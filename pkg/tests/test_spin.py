import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.spatial.transform import Rotation

from spinterface.errors import DomainError
from spinterface.spin import (
    MUB_OVER_H,
    FieldPoint,
    SpinSystem,
    build_hamiltonian,
    diagonalize,
    eigensystem,
    spin_operators,
    transition_table,
    triplet_labels,
    zero_field_levels,
)

SPINS = [0.5, 1, 1.5, 2, 2.5, 3]


@pytest.mark.parametrize("s", SPINS)
def test_commutation_algebra(s):
    sx, sy, sz = spin_operators(s)
    n = sx.shape[0]
    for a, b, c in ((sx, sy, sz), (sy, sz, sx), (sz, sx, sy)):
        assert np.max(np.abs(a @ b - b @ a - 1j * c)) < 1e-14
    casimir = sx @ sx + sy @ sy + sz @ sz
    assert np.max(np.abs(casimir - s * (s + 1) * np.eye(n))) < 1e-13
    for op in (sx, sy, sz):
        assert np.allclose(op, op.conj().T, atol=0)


def test_spin_half_and_one_representations():
    _, _, sz = spin_operators(0.5)
    assert np.array_equal(sz, np.diag([0.5, -0.5]))
    sx, _, sz = spin_operators(1)
    assert np.array_equal(sz, np.diag([1.0, 0.0, -1.0]))
    assert sx[0, 1] == pytest.approx(1 / np.sqrt(2), abs=1e-15)
    assert sx[1, 2] == pytest.approx(1 / np.sqrt(2), abs=1e-15)


@pytest.mark.parametrize("bad", [0, -1, 0.3, 1.25, "x"])
def test_invalid_spin_rejected(bad):
    with pytest.raises(DomainError):
        spin_operators(bad)


def test_system_invariants():
    with pytest.raises(DomainError):
        SpinSystem(D=-1.0)
    with pytest.raises(DomainError):
        SpinSystem(D=3.0, E=1.01)
    with pytest.raises(DomainError):
        SpinSystem(D=3.0, zfs_axis=(0, 0, 2))
    with pytest.raises(DomainError):
        FieldPoint(B1_dir=(1, 1, 0))
    assert SpinSystem(D=3.0, spin_S=1.5).dim == 4


def test_zero_field_compound1():
    es = diagonalize(SpinSystem(D=3.63), FieldPoint())
    assert np.allclose(es.energies, [-2.42, 1.21, 1.21], atol=1e-12)


def test_pure_zeeman_one_tesla():
    H = build_hamiltonian(SpinSystem(D=0.0, E=0.0, g_factor=2.0), FieldPoint(B0=(0, 0, 1.0)))
    e = np.linalg.eigvalsh(H)
    assert np.allclose(e, [-2 * MUB_OVER_H, 0, 2 * MUB_OVER_H], atol=1e-12)
    assert 2 * MUB_OVER_H == pytest.approx(27.992, abs=1e-3)


def test_all_zero_is_zero_matrix():
    H = build_hamiltonian(SpinSystem(D=0.0, g_factor=0.0), FieldPoint(B0=(0.1, 0.2, 0.3)))
    assert np.array_equal(H, np.zeros((3, 3)))


def test_eigensystem_diagonal_permutation():
    es = eigensystem(np.diag([3.0, 1.0, 2.0]))
    assert np.allclose(es.energies, [1, 2, 3])
    assert np.allclose(np.abs(es.states), [[0, 0, 1], [1, 0, 0], [0, 1, 0]])


def test_eigensystem_rhombic_zero_field():
    es = diagonalize(SpinSystem(D=3.63, E=0.1), FieldPoint())
    assert np.allclose(es.energies, [-2.42, 1.11, 1.31], atol=1e-12)


def test_non_hermitian_rejected():
    with pytest.raises(DomainError):
        eigensystem(np.array([[0, 1], [0, 0]], dtype=complex))


def test_random_reconstruction_10k():
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(10_000):
        n = int(rng.integers(2, 6))
        A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        H = 3 * (A + A.conj().T)
        es = eigensystem(H)
        V = es.states
        assert np.all(np.diff(es.energies) >= 0)
        worst = max(worst, np.max(np.abs(V @ np.diag(es.energies) @ V.conj().T - H)))
        assert np.max(np.abs(V.conj().T @ V - np.eye(n))) < 1e-10
    assert worst < 1e-9


def test_degenerate_labelling_is_deterministic():
    es = diagonalize(SpinSystem(D=3.63), FieldPoint())
    # degenerate pair ordered by descending molecular m: |+1> then |-1>
    assert abs(es.states[0, 1]) == pytest.approx(1.0)
    assert abs(es.states[2, 2]) == pytest.approx(1.0)
    assert triplet_labels(es, SpinSystem(D=3.63)) == (0, 1, 2)


@given(st.floats(0.0, 10.0), st.floats(0.0, 1.0))
def test_zero_field_closed_form_property(D, frac):
    E = frac * D / 3
    es = diagonalize(SpinSystem(D=D, E=E), FieldPoint())
    assert np.allclose(es.energies, np.sort(zero_field_levels(D, E)), atol=1e-10)


def test_transition_table_zero_field():
    tr = transition_table(SpinSystem(D=3.63), FieldPoint(B1_dir=(1, 0, 0)), 4.0)
    assert len(tr) == 3
    by_pair = {(t.lower, t.upper): t for t in tr}
    assert by_pair[(0, 1)].frequency == pytest.approx(3.63, abs=1e-12)
    assert by_pair[(0, 2)].frequency == pytest.approx(3.63, abs=1e-12)
    assert by_pair[(0, 1)].intensity == pytest.approx(0.5, abs=1e-12)
    assert by_pair[(0, 2)].intensity == pytest.approx(0.5, abs=1e-12)
    assert by_pair[(1, 2)].intensity == pytest.approx(0.0, abs=1e-24)


def test_transition_table_ten_millitesla():
    tr = transition_table(SpinSystem(D=3.63), FieldPoint(B0=(0, 0, 0.01)), 4.0)
    freqs = sorted(t.frequency for t in tr if t.intensity > 1e-9)
    zeeman = 2.0 * MUB_OVER_H * 0.01
    assert zeeman == pytest.approx(0.27992, abs=1e-5)
    assert freqs == pytest.approx([3.63 - zeeman, 3.63 + zeeman], abs=1e-10)
    assert freqs == pytest.approx([3.3501, 3.9099], abs=1e-4)


def test_degenerate_manifold_zero_frequencies():
    tr = transition_table(SpinSystem(D=0.0), FieldPoint(), 4.0)
    assert all(t.frequency == 0.0 for t in tr)


def test_temperature_must_be_positive():
    with pytest.raises(DomainError):
        transition_table(SpinSystem(D=1.0), FieldPoint(), 0.0)


def test_boltzmann_weights_exact():
    tr = transition_table(SpinSystem(D=3.63), FieldPoint(), 4.0)
    hk = 0.0479924
    p = np.exp(-hk * np.array([0.0, 3.63, 3.63]) / 4.0)
    p /= p.sum()
    assert tr[0].population_weight == pytest.approx(p[0] - p[1], rel=1e-5)


@given(st.floats(0.0, 8.0), st.floats(0.0, 1.0), st.floats(0.0, 0.5), st.floats(-50, 50))
def test_fan_and_global_shift(D, frac, B, shift):
    # allowed transitions along the axis for E=0 are D +- g muB B / h
    sys = SpinSystem(D=D)
    fp = FieldPoint(B0=(0, 0, B))
    freqs = sorted(t.frequency for t in transition_table(sys, fp, 4.0) if t.intensity > 1e-9)
    z = 2.0 * MUB_OVER_H * B
    expected = sorted([abs(D - z), D + z]) if D > 0 or B > 0 else []
    if abs(D - z) > 1e-6 and D + z > 0:
        assert freqs == pytest.approx(expected, abs=1e-10)
    H = build_hamiltonian(SpinSystem(D=D, E=frac * D / 3), fp)
    e1 = eigensystem(H).energies
    e2 = eigensystem(H + shift * np.eye(3)).energies
    assert np.allclose(np.diff(e1), np.diff(e2), atol=1e-10)


@given(st.integers(0, 10_000), st.one_of(st.just(0.0), st.floats(1e-4, 0.3)))
def test_frame_covariance(seed, B):
    rot = Rotation.random(random_state=seed).as_matrix()
    sys0 = SpinSystem(D=3.63)
    fp0 = FieldPoint(B0=(0.3 * B, -0.2 * B, B), B1_dir=(1, 0, 0))
    axis = rot @ np.array([0, 0, 1.0])
    sys1 = SpinSystem(D=3.63, zfs_axis=tuple(axis / np.linalg.norm(axis)))
    fp1 = FieldPoint(B0=tuple(rot @ np.asarray(fp0.B0)), B1_dir=tuple(rot @ np.asarray(fp0.B1_dir)))
    t0 = transition_table(sys0, fp0, 10.0)
    t1 = transition_table(sys1, fp1, 10.0)
    for a, b in zip(t0, t1):
        assert a.frequency == pytest.approx(b.frequency, abs=1e-9)
        assert a.intensity == pytest.approx(b.intensity, abs=1e-9)
