"""Electronic spin-1 Hamiltonian, electron x 3-nuclei Hamiltonian, ODMR spectra.

Basis conventions: the electronic spin-1 space is ordered {|+1>, |0>, |-1>},
nuclear spin-1/2 spaces {|up>, |down>}.  The 24-dimensional joint space is
ordered electron (x) n1 (x) n2 (x) n3.  Every matrix element is a linear
frequency in Hz.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .constants import in_plane_rotation

_SQRT2 = np.sqrt(2.0)

_SX = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex) / _SQRT2
_SY = np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]], dtype=complex) / _SQRT2
_SZ = np.diag([1.0, 0.0, -1.0]).astype(complex)
_IX = np.array([[0, 1], [1, 0]], dtype=complex) / 2
_IY = np.array([[0, -1j], [1j, 0]], dtype=complex) / 2
_IZ = np.diag([0.5, -0.5]).astype(complex)


@dataclass(frozen=True)
class SpinMatrices:
    """Spin-1 (sx, sy, sz) and spin-1/2 (ix, iy, iz) operator matrices."""

    sx: np.ndarray
    sy: np.ndarray
    sz: np.ndarray
    ix: np.ndarray
    iy: np.ndarray
    iz: np.ndarray

    @property
    def svec(self) -> np.ndarray:
        return np.stack([self.sx, self.sy, self.sz])

    @property
    def ivec(self) -> np.ndarray:
        return np.stack([self.ix, self.iy, self.iz])


def spin1_operators() -> SpinMatrices:
    """Standard spin operators in the {|+1>,|0>,|-1>} and {|up>,|down>} bases."""
    return SpinMatrices(_SX.copy(), _SY.copy(), _SZ.copy(),
                        _IX.copy(), _IY.copy(), _IZ.copy())


@dataclass(frozen=True)
class SensorParams:
    """Spectroscopic constants of the electronic spin, linear Hz."""

    d: float                  # zero-field splitting
    gamma_z: float            # Hz/T out-of-plane
    gamma_perp: float         # Hz/T in-plane
    strain1: float = 0.0      # eps1
    strain2: float = 0.0      # eps2

    def __post_init__(self):
        if not (self.d > 0 and self.gamma_z > 0 and self.gamma_perp > 0):
            raise ValueError("d, gamma_z and gamma_perp must be positive")

    @property
    def strain_total(self) -> float:
        return float(np.hypot(self.strain1, self.strain2))


@dataclass(frozen=True)
class FieldConfig:
    """Vector magnetic field by magnitude (T), polar theta and azimuth phi (rad)."""

    magnitude: float
    theta: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        if self.magnitude < 0:
            raise ValueError("field magnitude must be >= 0")

    @property
    def vector(self) -> np.ndarray:
        st, ct = np.sin(self.theta), np.cos(self.theta)
        return self.magnitude * np.array([st * np.cos(self.phi),
                                          st * np.sin(self.phi), ct])


@dataclass(frozen=True)
class HyperfineTensor:
    """3x3 real hyperfine coupling tensor, entries in Hz, axes (x, y, z)."""

    a: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        if a.shape != (3, 3):
            raise ValueError("hyperfine tensor must be 3x3")
        object.__setattr__(self, "a", a)

    def rotated(self, angle_rad: float) -> "HyperfineTensor":
        r = in_plane_rotation(angle_rad)
        return HyperfineTensor(r @ self.a @ r.T)


@dataclass(frozen=True)
class HyperfineSet:
    """Tensors of the three nitrogen sites plus the nuclear gyromagnetic ratio."""

    site1: HyperfineTensor
    site2: HyperfineTensor
    site3: HyperfineTensor
    nuclear_gamma: float       # Hz/T

    @property
    def tensors(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (self.site1.a, self.site2.a, self.site3.a)


def hyperfine_set_from_site1(axx: float, ayy: float, axy: float, azz: float,
                             nuclear_gamma: float) -> HyperfineSet:
    """Assemble the three lattice-symmetric tensors from site-1 components.

    Site 1 carries the in-plane block [[axx, axy], [axy, ayy]] and the axial
    component azz; the z-mixing entries vanish by the mirror symmetry of the
    planar sites.  Sites 2 and 3 are exact 120/240 degree rotations about z.
    """
    for v in (axx, ayy, axy, azz):
        if not np.isfinite(v):
            raise ValueError("hyperfine components must be finite")
    site1 = HyperfineTensor(np.array([[axx, axy, 0.0],
                                      [axy, ayy, 0.0],
                                      [0.0, 0.0, azz]]))
    return HyperfineSet(site1,
                        site1.rotated(2 * np.pi / 3),
                        site1.rotated(4 * np.pi / 3),
                        nuclear_gamma)


def build_electronic_hamiltonian(params: SensorParams, fld: FieldConfig) -> np.ndarray:
    """3x3 Hermitian matrix of the electronic spin, Hz.

    H = D Sz^2 + gz Bz Sz + gp (Bx Sx + By Sy)
        + e1 (Sx^2 - Sy^2) + e2 (Sx Sy + Sy Sx)
    """
    bx, by, bz = fld.vector
    h = (params.d * (_SZ @ _SZ)
         + params.gamma_z * bz * _SZ
         + params.gamma_perp * (bx * _SX + by * _SY)
         + params.strain1 * (_SX @ _SX - _SY @ _SY)
         + params.strain2 * (_SX @ _SY + _SY @ _SX))
    return h


@dataclass(frozen=True)
class EigenSystem:
    """Ascending eigenpairs with a deterministic eigenvector phase convention."""

    energies: np.ndarray       # Hz, sorted ascending
    states: np.ndarray         # column i belongs to energies[i]

    def state(self, i: int) -> np.ndarray:
        return self.states[:, i]


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude component is real positive."""
    out = vectors.copy()
    for i in range(out.shape[1]):
        k = int(np.argmax(np.abs(out[:, i])))
        ph = out[k, i]
        if np.abs(ph) > 0:
            out[:, i] *= np.conj(ph) / np.abs(ph)
    return out


def hermitian_eigensystem(h: np.ndarray, rtol: float = 1e-12) -> EigenSystem:
    """Eigen-decomposition of any Hermitian matrix with the phase convention."""
    h = np.asarray(h, dtype=complex)
    scale = max(np.max(np.abs(h)), 1.0)
    if np.max(np.abs(h - h.conj().T)) > rtol * scale:
        raise ValueError("matrix is not Hermitian within tolerance")
    w, v = np.linalg.eigh(h)
    return EigenSystem(w, _fix_phases(v))


def electronic_eigensystem(h: np.ndarray) -> EigenSystem:
    """Ascending eigenpairs of the 3x3 electronic Hamiltonian."""
    h = np.asarray(h)
    if h.shape != (3, 3):
        raise ValueError("expected a 3x3 electronic Hamiltonian")
    return hermitian_eigensystem(h)


def zero_field_peaks(params: SensorParams, azz: float) -> tuple[np.ndarray, dict]:
    """Four zero-field ODMR peak frequencies, ascending, plus degeneracy metadata.

    f+-(m) = D +- sqrt((azz*m)^2 + strain^2) for |m| in {1/2, 3/2}; each peak is
    doubly degenerate in the sign of the total nuclear projection m.
    """
    eps = params.strain_total
    freqs = []
    meta = []
    for m in (0.5, 1.5):
        split = float(np.hypot(azz * m, eps))
        for sign in (-1.0, +1.0):
            freqs.append(params.d + sign * split)
            meta.append({"m_abs": m, "branch": "upper" if sign > 0 else "lower",
                         "sign_degenerate": True})
    order = np.argsort(freqs)
    return np.array(freqs)[order], {"peaks": [meta[i] for i in order]}


def _kron_chain(mats) -> np.ndarray:
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


_EYE2 = np.eye(2, dtype=complex)
_EYE3 = np.eye(3, dtype=complex)
_SVEC = np.stack([_SX, _SY, _SZ])
_IVEC = np.stack([_IX, _IY, _IZ])


def build_full_hamiltonian(params: SensorParams, fld: FieldConfig,
                           hs: HyperfineSet, include_nuclear_zeeman: bool = True
                           ) -> np.ndarray:
    """24x24 Hamiltonian of electron (x) n1 (x) n2 (x) n3, Hz.

    H = H0 (x) 1 + sum_i sum_{mu,nu} A^(i)_{mu nu} S_mu (x) I^(i)_nu
        [+ gamma_n B . sum_i I^(i)]
    """
    h = _kron_chain([build_electronic_hamiltonian(params, fld), _EYE2, _EYE2, _EYE2])
    bvec = fld.vector
    for i, a in enumerate(hs.tensors):
        for mu in range(3):
            for nu in range(3):
                if a[mu, nu] == 0.0:
                    continue
                mats = [_SVEC[mu] if j == 0 else
                        (_IVEC[nu] if j == i + 1 else _EYE2) for j in range(4)]
                h += a[mu, nu] * _kron_chain(mats)
        if include_nuclear_zeeman:
            for nu in range(3):
                if bvec[nu] == 0.0:
                    continue
                mats = [_EYE3 if j == 0 else
                        (_IVEC[nu] if j == i + 1 else _EYE2) for j in range(4)]
                h += hs.nuclear_gamma * bvec[nu] * _kron_chain(mats)
    return h


class Branch(Enum):
    LOWER = "lower"
    UPPER = "upper"
    BOTH = "both"


@dataclass(frozen=True)
class OdmrLine:
    """One barcode line: transition frequency (Hz) and dimensionless weight."""

    frequency: float
    weight: float
    branch: str = "both"


def odmr_spectrum(params: SensorParams, fld: FieldConfig, hs: HyperfineSet,
                  branch: Branch = Branch.BOTH, weight_floor: float = 1e-4,
                  merge_tol: float = 1.0,
                  include_nuclear_zeeman: bool = True) -> list[OdmrLine]:
    """Transition lines out of the optically polarized manifold.

    The initial manifold is the 8 joint eigenstates with the largest |0>
    electronic character (optical pumping populates |E1> ~ |0>).  Lines are
    weighted by |<f| Sx (x) 1 |i>|^2 averaged over the initial manifold, and
    assigned to the lower/upper branch by the dominant electronic character
    (|E2> vs |E3>) of the final state.  Lines closer than ``merge_tol`` Hz are
    merged; weights below ``weight_floor`` are dropped.
    """
    h = build_full_hamiltonian(params, fld, hs,
                               include_nuclear_zeeman=include_nuclear_zeeman)
    es = hermitian_eigensystem(h)
    el = electronic_eigensystem(build_electronic_hamiltonian(params, fld))

    # electronic-character weights of every 24-dim state: reshape to (3, 8)
    states = es.states.reshape(3, 8, 24)
    char = np.empty((3, 24))
    for k in range(3):
        ek = el.state(k).conj()
        amp = np.tensordot(ek, states, axes=(0, 0))   # (8, 24)
        char[k] = np.sum(np.abs(amp) ** 2, axis=0)
    init_idx = np.argsort(-char[0])[:8]
    init_set = set(int(i) for i in init_idx)

    sx24 = _kron_chain([_SX, _EYE2, _EYE2, _EYE2])
    lines: list[OdmrLine] = []
    for i in init_idx:
        vi = es.states[:, i]
        amps = es.states.conj().T @ (sx24 @ vi)       # <f|Sx|i> for all f
        for f in range(24):
            if f in init_set:
                continue
            w = float(np.abs(amps[f]) ** 2) / len(init_idx)
            freq = float(es.energies[f] - es.energies[i])
            if freq <= 0 or w <= 0:
                continue
            br = "lower" if char[1, f] >= char[2, f] else "upper"
            lines.append(OdmrLine(freq, w, br))

    if branch is not Branch.BOTH:
        lines = [ln for ln in lines if ln.branch == branch.value]

    # merge coincident frequencies
    lines.sort(key=lambda ln: ln.frequency)
    merged: list[OdmrLine] = []
    for ln in lines:
        if merged and abs(ln.frequency - merged[-1].frequency) <= merge_tol \
                and ln.branch == merged[-1].branch:
            prev = merged[-1]
            tot = prev.weight + ln.weight
            freq = (prev.frequency * prev.weight + ln.frequency * ln.weight) / tot
            merged[-1] = OdmrLine(freq, tot, prev.branch)
        else:
            merged.append(ln)
    return [ln for ln in merged if ln.weight >= weight_floor]
