import numpy as np
import pytest

from centralspin import (Branch, FieldConfig, SensorParams,
                         build_electronic_hamiltonian, build_full_hamiltonian,
                         electronic_eigensystem, hermitian_eigensystem,
                         hyperfine_set_from_site1, odmr_spectrum,
                         spin1_operators, zero_field_peaks)
from centralspin import constants as C


def test_spin1_algebra():
    ops = spin1_operators()
    assert np.allclose(np.sort(np.linalg.eigvalsh(ops.sz)), [-1, 0, 1])
    assert np.allclose(ops.sx @ ops.sx + ops.sy @ ops.sy + ops.sz @ ops.sz,
                       2 * np.eye(3))
    comm = ops.sx @ ops.sy - ops.sy @ ops.sx
    assert np.allclose(comm, 1j * ops.sz)
    assert np.allclose(ops.ix @ ops.ix + ops.iy @ ops.iy + ops.iz @ ops.iz,
                       0.75 * np.eye(2))
    for m in (ops.sx, ops.sy, ops.sz, ops.ix, ops.iy, ops.iz):
        assert np.allclose(m, m.conj().T)


def test_hyperfine_symmetry_generation():
    hs = hyperfine_set_from_site1(-45e6, -85e6, -10e6, -67e6, C.GAMMA_N15)
    r = C.in_plane_rotation(2 * np.pi / 3)
    assert np.allclose(hs.site2.a, r @ hs.site1.a @ r.T, rtol=1e-12)
    r2 = C.in_plane_rotation(4 * np.pi / 3)
    assert np.allclose(hs.site3.a, r2 @ hs.site1.a @ r2.T, rtol=1e-12)
    for a in hs.tensors:
        assert a[2, 2] == -67e6
        assert a[0, 2] == a[1, 2] == a[2, 0] == a[2, 1] == 0.0
    # trace of the in-plane block is rotation invariant
    traces = [a[0, 0] + a[1, 1] for a in hs.tensors]
    assert np.allclose(traces, traces[0])


def test_isotropic_tensor_rotation_invariant():
    hs = hyperfine_set_from_site1(-50e6, -50e6, 0.0, -67e6, C.GAMMA_N15)
    for a in hs.tensors[1:]:
        assert np.allclose(a, hs.site1.a, atol=1e-6)


def test_electronic_hamiltonian_zero_field_spectrum(sensor):
    h = build_electronic_hamiltonian(sensor, FieldConfig(0.0))
    vals = np.sort(np.linalg.eigvalsh(h))
    assert np.allclose(vals, [0.0, sensor.d, sensor.d], atol=1e-3)


def test_electronic_hamiltonian_strain_splitting():
    p = SensorParams(C.ZERO_FIELD_SPLITTING, C.GAMMA_Z, C.GAMMA_PERP,
                     strain1=11e6, strain2=14e6)
    eps = np.hypot(11e6, 14e6)
    vals = np.sort(np.linalg.eigvalsh(build_electronic_hamiltonian(p, FieldConfig(0.0))))
    assert np.allclose(vals, [0.0, p.d - eps, p.d + eps], atol=1e-3)


def test_inplane_quadratic_shift(sensor):
    # Delta E31 = sqrt(D^2 + 4 g^2 B^2) ~ D + 2 g^2 B^2 / D at theta = 90 deg
    fld = FieldConfig(0.020, np.pi / 2, 0.0)
    es = electronic_eigensystem(build_electronic_hamiltonian(sensor, fld))
    de31 = es.energies[2] - es.energies[0]
    exact = np.sqrt(sensor.d ** 2 + 4 * (sensor.gamma_perp * 0.020) ** 2)
    assert de31 == pytest.approx(exact, rel=1e-12)
    assert de31 == pytest.approx(3.737e9, rel=1e-3)


def test_eigensystem_rejects_non_hermitian():
    with pytest.raises(ValueError):
        hermitian_eigensystem(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_eigensystem_phase_convention(sensor):
    fld = FieldConfig(0.015, np.pi / 2, 0.3)
    h = build_electronic_hamiltonian(sensor, fld)
    es = electronic_eigensystem(h)
    assert np.all(np.diff(es.energies) >= 0)
    for i in range(3):
        v = es.state(i)
        k = np.argmax(np.abs(v))
        assert v[k].real > 0 and abs(v[k].imag) < 1e-12
        resid = np.linalg.norm(h @ v - es.energies[i] * v)
        assert resid < 1e-9 * np.linalg.norm(h)
    gram = es.states.conj().T @ es.states
    assert np.allclose(gram, np.eye(3), atol=1e-10)


def test_mixing_angle_against_closed_form(sensor):
    # tan(2 alpha) = 2 g B / D; |<E3|0>| = sin(alpha)
    for b in (0.005, 0.02, 0.04):
        fld = FieldConfig(b, np.pi / 2, 0.0)
        es = electronic_eigensystem(build_electronic_hamiltonian(sensor, fld))
        alpha = 0.5 * np.arctan(2 * sensor.gamma_perp * b / sensor.d)
        overlap = abs(es.state(2)[1])          # |0> component of |E3>
        assert overlap == pytest.approx(np.sin(alpha), abs=1e-10)


def test_inplane_states_approach_m_pm(sensor):
    fld = FieldConfig(0.020, np.pi / 2, 0.35)
    es = electronic_eigensystem(build_electronic_hamiltonian(sensor, fld))
    phi = 0.35
    m_plus = np.array([1.0, 0.0, np.exp(2j * phi)]) / np.sqrt(2)
    m_minus = np.array([1.0, 0.0, -np.exp(2j * phi)]) / np.sqrt(2)
    zero = np.array([0.0, 1.0, 0.0])
    assert abs(zero.conj() @ es.state(0)) > 0.99
    assert abs(m_minus.conj() @ es.state(1)) > 0.99
    assert abs(m_plus.conj() @ es.state(2)) > 0.99


def test_zero_field_peaks_values(sensor_strained):
    peaks, meta = zero_field_peaks(sensor_strained, C.AZZ_N15)
    d = sensor_strained.d
    assert peaks[0] == pytest.approx(d - 102.2e6, abs=0.1e6)
    assert peaks[1] == pytest.approx(d - 38.3e6, abs=0.1e6)
    assert peaks[2] == pytest.approx(d + 38.3e6, abs=0.1e6)
    assert peaks[3] == pytest.approx(d + 102.2e6, abs=0.1e6)
    assert all(p["sign_degenerate"] for p in meta["peaks"])


def test_zero_field_peaks_limits(sensor, sensor_strained):
    peaks, _ = zero_field_peaks(sensor_strained, 0.0)
    eps = sensor_strained.strain_total
    assert np.allclose(np.sort(peaks), [sensor.d - eps] * 2 + [sensor.d + eps] * 2)
    peaks, _ = zero_field_peaks(sensor, -67e6)
    assert np.allclose(np.sort(peaks),
                       [sensor.d - 100.5e6, sensor.d - 33.5e6,
                        sensor.d + 33.5e6, sensor.d + 100.5e6])


def test_zero_field_peaks_against_24dim_oracle(sensor_strained):
    """Axial-only 24-dim diagonalization reproduces the closed form to < 10 kHz."""
    hs = hyperfine_set_from_site1(0.0, 0.0, 0.0, C.AZZ_N15, C.GAMMA_N15)
    lines = odmr_spectrum(sensor_strained, FieldConfig(0.0), hs, Branch.BOTH,
                          merge_tol=1e3)
    freqs = np.array(sorted(ln.frequency for ln in lines))
    peaks, _ = zero_field_peaks(sensor_strained, C.AZZ_N15)
    assert freqs.size == 4
    assert np.max(np.abs(freqs - peaks)) < 1e4


def test_full_hamiltonian_hermitian_and_degenerate(sensor, hyperfine_echo):
    fld = FieldConfig(0.013, 0.7, 1.1)
    h = build_full_hamiltonian(sensor, fld, hyperfine_echo)
    assert h.shape == (24, 24)
    assert np.max(np.abs(h - h.conj().T)) < 1e-12 * np.max(np.abs(h))
    # all couplings off: 8-fold degenerate electronic spectrum
    hs0 = hyperfine_set_from_site1(0.0, 0.0, 0.0, 0.0, 0.0)
    h0 = build_full_hamiltonian(sensor, fld, hs0)
    vals = np.sort(np.linalg.eigvalsh(h0))
    evals = np.sort(np.linalg.eigvalsh(build_electronic_hamiltonian(sensor, fld)))
    assert np.allclose(vals, np.repeat(evals, 8), atol=1e-3)


def test_full_hamiltonian_secular_ladder(sensor):
    """theta=0, axial-only coupling: levels split by azz * m_tot, 1:3:3:1."""
    hs = hyperfine_set_from_site1(0.0, 0.0, 0.0, C.AZZ_N15, 0.0)
    fld = FieldConfig(0.010, 0.0, 0.0)
    lines = odmr_spectrum(sensor, fld, hs, Branch.LOWER, merge_tol=1e3)
    assert len(lines) == 4
    freqs = np.array([ln.frequency for ln in lines])
    weights = np.array([ln.weight for ln in lines])
    base = sensor.d - sensor.gamma_z * 0.010
    expected = np.sort([base + C.AZZ_N15 * m for m in (-1.5, -0.5, 0.5, 1.5)])
    assert np.allclose(np.sort(freqs), expected, atol=1.0)
    ratio = weights / weights.min()
    assert np.allclose(np.sort(ratio), [1.0, 1.0, 3.0, 3.0], rtol=1e-6)


def test_full_tensor_barcode_near_335_337ghz(sensor, hyperfine_echo):
    fld = FieldConfig(0.010, 0.0, 0.0)
    lines = odmr_spectrum(sensor, fld, hyperfine_echo, Branch.LOWER)
    freqs = np.array([ln.frequency for ln in lines])
    center = np.average(freqs, weights=[ln.weight for ln in lines])
    assert 3.3e9 < center < 3.4e9


def test_odmr_two_lines_without_hyperfine(sensor):
    hs = hyperfine_set_from_site1(0.0, 0.0, 0.0, 0.0, 0.0)
    fld = FieldConfig(0.008, 0.0, 0.0)
    lines = odmr_spectrum(sensor, fld, hs)
    es = electronic_eigensystem(build_electronic_hamiltonian(sensor, fld))
    assert len(lines) == 2
    expected = np.sort([es.energies[1] - es.energies[0],
                        es.energies[2] - es.energies[0]])
    assert np.allclose(sorted(ln.frequency for ln in lines), expected, atol=1.0)


def test_odmr_branch_slopes_recover_gamma_z(sensor, hyperfine_echo):
    bzs = np.linspace(0.004, 0.040, 7)
    lower, upper = [], []
    for bz in bzs:
        fld = FieldConfig(bz, 0.0, 0.0)
        for acc, br in ((lower, Branch.LOWER), (upper, Branch.UPPER)):
            lines = odmr_spectrum(sensor, fld, hyperfine_echo, br)
            w = np.array([ln.weight for ln in lines])
            f = np.array([ln.frequency for ln in lines])
            acc.append(np.average(f, weights=w))
    slope_low = np.polyfit(bzs, lower, 1)[0]
    slope_up = np.polyfit(bzs, upper, 1)[0]
    assert slope_low == pytest.approx(-C.GAMMA_Z, rel=1e-3)
    assert slope_up == pytest.approx(+C.GAMMA_Z, rel=1e-3)


def test_odmr_inplane_cluster_near_published_carrier(sensor, hyperfine_echo):
    fld = FieldConfig(0.021, np.pi / 2, np.deg2rad(28.0))
    lines = odmr_spectrum(sensor, fld, hyperfine_echo, Branch.UPPER)
    freqs = np.array([ln.frequency for ln in lines])
    weights = np.array([ln.weight for ln in lines])
    center = np.average(freqs, weights=weights)
    assert abs(center - 3.765e9) < 0.05e9


def test_site_permutation_symmetry_at_theta0(sensor):
    from centralspin.spin_core import HyperfineSet
    hs = hyperfine_set_from_site1(-45e6, -85e6, -7e6, -67e6, C.GAMMA_N15)
    fld = FieldConfig(0.012, 0.0, 0.0)
    base = np.sort(np.linalg.eigvalsh(build_full_hamiltonian(sensor, fld, hs)))
    permuted = HyperfineSet(hs.site2, hs.site3, hs.site1, hs.nuclear_gamma)
    swapped = np.sort(np.linalg.eigvalsh(build_full_hamiltonian(sensor, fld, permuted)))
    assert np.allclose(base, swapped, atol=1e-2)


def test_phi_periodicity_c3(sensor, hyperfine_echo):
    for phi in (0.2, 1.1):
        f1 = FieldConfig(0.020, np.pi / 2, phi)
        f2 = FieldConfig(0.020, np.pi / 2, phi + 2 * np.pi / 3)
        s1 = np.sort(np.linalg.eigvalsh(build_full_hamiltonian(sensor, f1, hyperfine_echo)))
        s2 = np.sort(np.linalg.eigvalsh(build_full_hamiltonian(sensor, f2, hyperfine_echo)))
        assert np.max(np.abs(s1 - s2)) < 1e-9 * np.max(np.abs(s1))


def test_gyromagnetic_quadratic_invariant(sensor):
    """Branch shifts at theta=90: c * B^2 / D with c/gperp^2 in {1, 2}.

    The quadratic model deviates from exact diagonalization by (gperp*B/D)^2
    relative, so the 1% check runs inside that expansion's validity range.
    """
    for b in (0.005, 0.010, 0.016):      # gperp*B <= 0.09 D
        fld = FieldConfig(b, np.pi / 2, 0.0)
        es = electronic_eigensystem(build_electronic_hamiltonian(sensor, fld))
        de21 = es.energies[1] - es.energies[0]
        de31 = es.energies[2] - es.energies[0]
        c21 = (de21 - sensor.d) * sensor.d / b ** 2 / sensor.gamma_perp ** 2
        c31 = (de31 - sensor.d) * sensor.d / b ** 2 / sensor.gamma_perp ** 2
        assert c21 == pytest.approx(1.0, rel=0.01)
        assert c31 == pytest.approx(2.0, rel=0.01)
    # at the 0.15 D boundary the deviation is the documented x^2 correction
    b = 0.15 * sensor.d / sensor.gamma_perp
    x2 = (sensor.gamma_perp * b / sensor.d) ** 2
    es = electronic_eigensystem(build_electronic_hamiltonian(sensor, FieldConfig(b, np.pi / 2, 0.0)))
    c21 = (es.energies[1] - es.energies[0] - sensor.d) * sensor.d / b ** 2 / sensor.gamma_perp ** 2
    assert abs(c21 - 1.0) < 1.2 * x2
