import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinterface.errors import DomainError
from spinterface.series import Spectrum, read_csv, read_matrix_csv
from spinterface.spectra import (
    SPEED_OF_LIGHT,
    LineShape,
    OpticalModel,
    Powder,
    Single,
    cw_esr_spectrum,
    fibonacci_sphere,
    fwhm,
    line_narrowing,
    odmr_map,
    ple_profile,
    polarization_response,
    resonance_fields,
    zeeman_pl_spectrum,
)
from spinterface.spin import MUB_OVER_H, SpinSystem

C1 = SpinSystem(D=3.63)


def test_free_electron_resonance_field():
    res = resonance_fields(SpinSystem(D=0.0), 9.4, (0, 0, 1), 1000.0, 300.0)
    expected = 9.4 / (2.0 * MUB_OVER_H) * 1e3
    assert len(res) == 1
    assert res[0].field_mT == pytest.approx(expected, abs=1e-6)
    assert res[0].field_mT == pytest.approx(335.8, abs=0.05)


def test_axial_resonance_fields_along_axis():
    res = resonance_fields(SpinSystem(D=3.0), 9.0, (0, 0, 1), 1000.0, 300.0)
    fields = sorted(r.field_mT for r in res)
    scale = 1e3 / (2.0 * MUB_OVER_H)
    assert fields == pytest.approx([6.0 * scale, 12.0 * scale], abs=1e-6)


def test_compound1_xband_along_axis():
    res = resonance_fields(C1, 9.4, (0, 0, 1), 1000.0, 77.0)
    fields = sorted(r.field_mT for r in res)
    assert fields == pytest.approx([206.1, 465.4], abs=0.1)


def test_no_resonance_below_splitting():
    assert resonance_fields(C1, 1.0, (0, 0, 1), 20.0, 77.0) == []


def test_resonance_field_errors():
    with pytest.raises(DomainError):
        resonance_fields(C1, 0.0, (0, 0, 1), 100.0, 77.0)
    with pytest.raises(DomainError):
        resonance_fields(C1, 9.4, (0, 0, 1), 100.0, 0.0)


def test_line_shape_validation():
    with pytest.raises(DomainError):
        LineShape("voigtish", 1.0)
    with pytest.raises(DomainError):
        LineShape("lorentzian", 0.0)


@pytest.mark.parametrize("kind", ["lorentzian", "gaussian"])
def test_line_shape_fwhm_and_derivative(kind):
    line = LineShape(kind, 2.0)
    assert line(0.0) == pytest.approx(1.0)
    assert line(1.0) == pytest.approx(0.5, abs=1e-12)
    x = np.linspace(-5, 5, 2001)
    num = np.gradient(line(x), x)
    ana = LineShape(kind, 2.0, derivative=True)(x)
    assert np.max(np.abs(num - ana)) < 1e-4


def test_derivative_spectrum_integrates_to_zero():
    B = np.linspace(150, 520, 7401)
    spec = cw_esr_spectrum(C1, 9.4, B, LineShape("lorentzian", 0.5, derivative=True), 77.0)
    area = np.trapezoid(spec.values, B) if hasattr(np, "trapezoid") else np.trapz(spec.values, B)
    assert abs(area) < 1e-6 * np.max(np.abs(spec.values)) * (B[-1] - B[0])


def test_single_orientation_lines_match_resonance_fields():
    B = np.linspace(150, 520, 3701)
    spec = cw_esr_spectrum(C1, 9.4, B, LineShape("lorentzian", 0.5), 77.0)
    inner = (B > 150) & (B < 520)
    y = spec.values
    peaks = B[1:-1][(y[1:-1] > y[:-2]) & (y[1:-1] > y[2:]) & inner[1:-1]]
    fields = sorted(r.field_mT for r in resonance_fields(C1, 9.4, (0, 0, 1), 1000.0, 77.0))
    assert peaks == pytest.approx(fields, abs=0.1)


@given(st.floats(0.0, 5.0), st.floats(0.0, 1.0), st.floats(5.0, 20.0),
       st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.1, 1)))
@settings(max_examples=25)
def test_resonance_fields_reproduce_frequency(D, frac, f_mw, axis):
    from spinterface.spin import FieldPoint, transition_table
    sys_ = SpinSystem(D=D, E=frac * D / 3)
    axis = np.asarray(axis) / np.linalg.norm(axis)
    for r in resonance_fields(sys_, f_mw, axis, 1500.0, 10.0):
        fp = FieldPoint(B0=tuple(axis * r.field_mT * 1e-3))
        freqs = [t.frequency for t in transition_table(sys_, fp, 10.0)]
        assert min(abs(f - f_mw) for f in freqs) < 1e-6


@pytest.mark.parametrize("orientation", [Single(), Powder(100)])
def test_absorption_spectra_non_negative(orientation):
    B = np.linspace(100, 600, 501)
    spec = cw_esr_spectrum(SpinSystem(D=3.63, E=0.3), 9.4, B, LineShape("gaussian", 2.0), 77.0, orientation)
    assert np.all(spec.values >= 0)
    m = odmr_map(C1, None, np.linspace(0, 30, 4), np.linspace(3, 4.3, 131), LineShape(), 4.0)
    assert np.all(m.contrast >= 0)


def test_zero_field_column_and_ten_millitesla_row():
    m = _fan_map()
    f = m.freq_axis
    assert f[np.argmax(m.contrast[0])] == pytest.approx(3.63, abs=1e-9)
    row = m.contrast[int(np.argmin(np.abs(m.field_axis - 10.0)))]
    lo, hi = f < 3.63, f > 3.63
    assert f[lo][np.argmax(row[lo])] == pytest.approx(3.3501, abs=1e-3)
    assert f[hi][np.argmax(row[hi])] == pytest.approx(3.9099, abs=1e-3)


def test_powder_isotropic_equals_single():
    B = np.linspace(300, 370, 701)
    line = LineShape("lorentzian", 1.0)
    single = cw_esr_spectrum(SpinSystem(D=0.0), 9.4, B, line, 77.0, Single())
    powder = cw_esr_spectrum(SpinSystem(D=0.0), 9.4, B, line, 77.0, Powder(200))
    assert np.max(np.abs(single.values - powder.values)) < 1e-6 * np.max(single.values)


@pytest.mark.slow
@pytest.mark.parametrize("E,derivative", [(0.0, False), (0.3, True)])
def test_powder_convergence(E, derivative):
    B = np.linspace(100, 600, 501)
    line = LineShape("lorentzian", 5.0, derivative=derivative)
    sys_ = SpinSystem(D=3.63, E=E)
    coarse = cw_esr_spectrum(sys_, 9.4, B, line, 77.0, Powder(2000)).values
    fine = cw_esr_spectrum(sys_, 9.4, B, line, 77.0, Powder(4000)).values
    # RMS change relative to the peak magnitude of the spectrum
    assert np.sqrt(np.mean((coarse - fine) ** 2)) / np.max(np.abs(fine)) < 0.01


def test_esr_metadata_records_orientation():
    spec = cw_esr_spectrum(C1, 9.4, np.linspace(200, 210, 11), LineShape(), 77.0)
    assert spec.metadata["orientation"].startswith("single:")
    with pytest.raises(DomainError):
        cw_esr_spectrum(C1, 9.4, np.array([]), LineShape(), 77.0)


def test_fibonacci_sphere_unit_vectors():
    v = fibonacci_sphere(500)
    assert v.shape == (500, 3)
    assert np.allclose(np.linalg.norm(v, axis=1), 1.0)


def test_zeeman_pl_nine_tesla():
    lam = np.linspace(1022.0, 1028.0, 6001)
    spec, diff = zeeman_pl_spectrum(C1, OpticalModel(), 9.0, lam, LineShape("lorentzian", 5.0))
    centres = sorted(spec.metadata["line_centres_nm"])
    shift = 2.0 * MUB_OVER_H * 9.0
    nu0 = SPEED_OF_LIGHT / 1025.0
    oracle = SPEED_OF_LIGHT / (nu0 - shift) - 1025.0
    assert oracle == pytest.approx(0.883, abs=0.01)
    # outer lines shift by roughly +-0.883 nm from the zero-field centre of that branch
    assert centres[2] - centres[0] == pytest.approx(2 * 0.883, abs=0.02)
    k = int(np.argmin(np.abs(lam - 1025.0 - 2.42 * 1025.0**2 / SPEED_OF_LIGHT)))
    assert diff.values[k] < 0
    assert not spec.metadata["coverage_warning"]


def test_zeeman_pl_zero_field_difference_vanishes():
    lam = np.linspace(1020, 1030, 501)
    _, diff = zeeman_pl_spectrum(C1, OpticalModel(), 0.0, lam, LineShape("lorentzian", 5.0))
    assert np.all(diff.values == 0.0)
    with pytest.raises(DomainError):
        zeeman_pl_spectrum(C1, OpticalModel(), -1.0, lam, LineShape())


def test_zeeman_pl_coverage_warning():
    spec, _ = zeeman_pl_spectrum(C1, OpticalModel(), 9.0, np.linspace(1025.0, 1025.1, 11), LineShape())
    assert spec.metadata["coverage_warning"]


def test_ple_profile_width():
    spec = ple_profile(OpticalModel(), np.linspace(-500, 500, 20001))
    assert fwhm(spec) == pytest.approx(150.0, abs=0.1)
    assert spec.values.max() == pytest.approx(1.0)
    edge = ple_profile(OpticalModel(), np.array([-75.0, 0.0, 75.0])).values
    assert edge == pytest.approx([0.5, 1.0, 0.5], abs=1e-12)


def test_line_narrowing():
    ens, sub = line_narrowing(OpticalModel(), np.linspace(-500, 500, 20001))
    assert fwhm(sub) == pytest.approx(5.0, abs=0.05)
    assert fwhm(ens) > 150.0
    assert fwhm(ens) / fwhm(sub) > 25


@given(st.floats(0.5, 100.0), st.floats(1.01, 50.0))
@settings(max_examples=20)
def test_subensemble_always_narrower(hom, ratio):
    ens, sub = line_narrowing(OpticalModel(homogeneous_fwhm=hom, inhomogeneous_fwhm=hom * ratio),
                              np.linspace(-60 * hom * ratio, 60 * hom * ratio, 24001))
    assert fwhm(sub) < fwhm(ens)


def test_optical_model_validation():
    with pytest.raises(DomainError):
        OpticalModel(branching=(0.5, 0.5, 0.5))
    with pytest.raises(DomainError):
        OpticalModel(homogeneous_fwhm=200.0)
    with pytest.raises(DomainError):
        OpticalModel(debye_waller=0.0)


def test_polarization_response():
    assert polarization_response(0.0) == pytest.approx(1.0)
    assert polarization_response(90.0) == pytest.approx(0.0, abs=1e-15)
    assert polarization_response(45.0) == pytest.approx(0.5)
    assert polarization_response(180.0) == pytest.approx(1.0)


@given(st.floats(-360, 360))
def test_polarization_response_periodic(theta):
    assert polarization_response(theta) == pytest.approx(polarization_response(theta + 180.0), abs=1e-12)
    assert 0.0 <= polarization_response(theta) <= 1.0


def _fan_map():
    B = np.linspace(0, 30, 61)
    f = np.linspace(2.6, 4.7, 2101)
    return odmr_map(C1, OpticalModel(), B, f, LineShape("lorentzian", 0.02), 77.0)


def test_odmr_ridges_follow_fan():
    m = _fan_map()
    low, high = m.ridges()
    z = 2.0 * MUB_OVER_H * m.field_axis * 1e-3
    step = m.freq_axis[1] - m.freq_axis[0]
    assert np.all(np.abs(low - (3.63 - z)) <= step + 1e-12)
    assert np.all(np.abs(high - (3.63 + z)) <= step + 1e-12)


def test_odmr_field_reversal_symmetry():
    f = np.linspace(3.0, 4.5, 301)
    line = LineShape("lorentzian", 0.02)
    pos = odmr_map(C1, None, np.linspace(0, 30, 7), f, line, 77.0).contrast
    neg = odmr_map(C1, None, -np.linspace(0, 30, 7), f, line, 77.0).contrast
    assert np.max(np.abs(pos - neg)) < 1e-10 * np.max(pos)


def test_odmr_map_csv_round_trip(tmp_path):
    m = _fan_map()
    path = m.to_csv(tmp_path / "map.csv")
    meta, rows, cols, mat = read_matrix_csv(path)
    assert np.array_equal(rows, m.field_axis)
    assert np.array_equal(cols, m.freq_axis)
    assert np.array_equal(mat, m.contrast)
    assert float(meta["D_GHz"]) == 3.63


def test_spectrum_csv_round_trip(tmp_path):
    s = Spectrum(np.array([1.0, 2.0]), np.array([0.1, 1e-300]), unit="mT", metadata={"a": 1})
    meta, data = read_csv(s.to_csv(tmp_path / "s.csv"))
    assert meta["a"] == "1"
    assert np.array_equal(data[:, 1], s.values)
