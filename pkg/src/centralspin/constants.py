"""Reference constants for the hBN boron-vacancy central-spin sensor.

All frequencies are *linear* (Hz): every constant that the literature quotes
as X/2pi is stored as that quotient.  Angular frequencies appear only inside
quadrature kernels and time-evolution phases, where the 2pi is applied
explicitly.
"""
from __future__ import annotations

import numpy as np

# ---------------------------------------------------------------------------
# Electronic spin (ground-state manifold)
# ---------------------------------------------------------------------------
ZERO_FIELD_SPLITTING = 3.653e9        # Hz, D
GAMMA_Z = 28.0e9                      # Hz/T, out-of-plane gyromagnetic ratio
GAMMA_PERP = 19.6e9                   # Hz/T, in-plane gyromagnetic ratio
STRAIN_TOTAL = 18.5e6                 # Hz, combined strain magnitude

# ---------------------------------------------------------------------------
# Nuclear environment (three nearest-neighbor 15N, spin-1/2)
# ---------------------------------------------------------------------------
GAMMA_N15 = -4.3e6                    # Hz/T, 15N gyromagnetic ratio
AZZ_N15 = -67.0e6                     # Hz, shared axial hyperfine component

# Transverse hyperfine benchmark sets, (a_xx, a_yy) of site 1 in Hz.  The
# site-1 principal axes are taken along the lattice frame (a_xy = 0); sites
# 2 and 3 follow by 120/240 degree in-plane rotations.  Published transverse
# magnitudes exist only in graphical form, so these are representative
# benchmark values: "dft" mirrors ab-initio scale, "echo" is dft scaled by
# the in-plane/out-of-plane gyromagnetic anisotropy (0.7), "odmr" sits in
# between.  Signs follow the DFT convention (negative).
HYPERFINE_BENCHMARKS = {
    "echo": (-45.0e6, -85.0e6),
    "dft": (-64.0e6, -121.0e6),
    "odmr": (-59.0e6, -98.0e6),
}
FIELD_AZIMUTH_DEG = 28.0              # deg, fitted in-plane field azimuth

# ---------------------------------------------------------------------------
# Composite noise PSD (magnetic sensing mode), S(w) = S0/(w^a (1+(w/wc)^(b-a)))
# ---------------------------------------------------------------------------
PSD_COMPOSITE_S0 = 7.30e7             # published magnitude, unit-normalized below
PSD_COMPOSITE_ALPHA = 0.88
PSD_COMPOSITE_BETA = 7.24
PSD_COMPOSITE_FC = 6.99e6             # Hz, crossover frequency omega_c/2pi

# The published S0 magnitudes carry no unit statement and are not consistent
# with SI rad/s in the coherence integral (they would predict a millisecond
# 512-pulse coherence time instead of the measured 29 us).  One global scale
# converts the published magnitude into this package's convention (PSD of the
# angular detuning, rad/s per rad/s, entering -ln C = (1/pi) Int S F / w^2 dw).
# It is fixed once by requiring chi(T = 29 us) = 1 for the 512-pulse sequence
# with 24 ns pulses, i.e. by the same dataset the composite fit came from.
PSD_S0_UNIT_SCALE = 3.3219e4

# Per-sequence power-law fits, N -> (S0 as published, alpha).  Magnitudes are
# reproduced for reference only; round-trip tests use self-generated scales.
PSD_PIECEWISE_PUBLISHED = {
    1: (7.40e6, 0.73),
    8: (2.80e6, 0.69),
    128: (1.80e39, 5.20),
    256: (1.09e10, 1.24),
    512: (3.26e26, 3.39),
}

T2_XY8_512 = 29e-6                    # s, 1/e time of the 512-pulse XY8 profile
STRETCH_BETA = 1.5                    # stretch exponent, N-independent
T_PI_DEFAULT = 24e-9                  # s, pi-pulse duration used throughout

# ---------------------------------------------------------------------------
# Readout and sensitivity
# ---------------------------------------------------------------------------
READOUT_T_INIT = 0.4e-6               # s
READOUT_T_READ = 0.6e-6               # s
ALPHA0_SPCM = 0.36                    # photons per readout, bright state (SPCM)
ALPHA0_APD = 91.0                     # photons per readout, bright state (APD)
OPTICAL_CONTRAST = 0.1                # 2(a0-a1)/(a0+a1)
ENSEMBLE_EFFICIENCY_SPCM = 0.035      # published C*sqrt(Ne), SPCM
ENSEMBLE_EFFICIENCY_APD = 0.49        # published C*sqrt(Ne), APD projection

B_ELECTRON = 1.86e-3                  # T nm^3 / sqrt(Hz), single-electron threshold
B_PROTON = 2.82e-6                    # T nm^3 / sqrt(Hz), single-proton threshold

PLANCK = 6.62607015e-34               # J s
SPEED_OF_LIGHT = 299792458.0          # m/s


def in_plane_rotation(angle_rad: float) -> np.ndarray:
    """3x3 rotation about z by ``angle_rad``."""
    c, s = np.cos(angle_rad), np.sin(angle_rad)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
