"""Closed-form AC sensitivity, readout efficiency, and detection thresholds.

    eta_ac = (pi / (2 gamma)) * exp((T/T2)^beta) / (C sqrt(Ne))
             * sqrt(T_init + T + T_read) / T,

with gamma the angular gyromagnetic ratio (2 pi times the Hz/T value stored
everywhere else in this package).  The ensemble readout efficiency follows
from the photon budget of one readout window.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import B_ELECTRON, B_PROTON, PLANCK, SPEED_OF_LIGHT

TWO_PI = 2 * np.pi


@dataclass(frozen=True)
class ReadoutBudget:
    """Photon counts per readout for bright/dark states plus cycle overheads."""

    alpha0: float        # photons per readout, bright
    alpha1: float        # photons per readout, dark
    t_init: float        # s
    t_read: float        # s

    def __post_init__(self):
        if not self.alpha0 > self.alpha1 >= 0:
            raise ValueError("need alpha0 > alpha1 >= 0")
        if self.t_init < 0 or self.t_read < 0:
            raise ValueError("overhead times must be >= 0")

    @classmethod
    def from_contrast(cls, alpha0: float, contrast: float,
                      t_init: float, t_read: float) -> "ReadoutBudget":
        """Budget from the bright count and optical contrast 2(a0-a1)/(a0+a1)."""
        alpha1 = alpha0 * (2 - contrast) / (2 + contrast)
        return cls(alpha0, alpha1, t_init, t_read)


def ensemble_readout_efficiency(budget: ReadoutBudget) -> float:
    """C sqrt(Ne) = [2 (a0 + a1) / (a0 - a1)^2]^(-1/2)."""
    diff = budget.alpha0 - budget.alpha1
    if diff == 0:
        raise ValueError("zero optical contrast")
    return float(1.0 / math.sqrt(2 * (budget.alpha0 + budget.alpha1) / diff ** 2))


def eta_ac(t2: float, beta: float, readout_efficiency: float, gamma: float,
           interrogation: float, t_init: float, t_read: float) -> float:
    """AC sensitivity (T / sqrt(Hz)) at sensing time ``interrogation``.

    ``gamma`` is the linear gyromagnetic ratio in Hz/T; the formula's angular
    gamma is 2 pi times that.
    """
    t = np.asarray(interrogation, dtype=float)
    if np.any(t <= 0):
        raise ValueError("interrogation time must be positive")
    gamma_ang = TWO_PI * gamma
    out = (np.pi / (2 * gamma_ang)
           * np.exp((t / t2) ** beta) / readout_efficiency
           * np.sqrt(t_init + t + t_read) / t)
    return out if out.ndim else float(out)


def optimal_sensing_time(t2: float, beta: float, readout_efficiency: float,
                         gamma: float, t_init: float, t_read: float,
                         t_grid=None) -> tuple[float, float]:
    """(t_opt, eta_min): grid argmin of eta_ac refined by golden-section search."""
    if t_grid is None:
        t_grid = np.linspace(0.01 * t2, 5 * t2, 2000)
    t_grid = np.asarray(t_grid, dtype=float)
    etas = eta_ac(t2, beta, readout_efficiency, gamma, t_grid, t_init, t_read)
    k = int(np.argmin(etas))
    lo = t_grid[max(k - 1, 0)]
    hi = t_grid[min(k + 1, t_grid.size - 1)]
    inv_phi = (math.sqrt(5) - 1) / 2

    def f(t):
        return eta_ac(t2, beta, readout_efficiency, gamma, t, t_init, t_read)

    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(80):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    t_opt = (a + b) / 2
    return float(t_opt), float(f(t_opt))


def detection_threshold(distance_nm: float, species: str) -> float:
    """Sensitivity needed to detect a single spin at ``distance_nm``: B / d^3."""
    if distance_nm <= 0:
        raise ValueError("distance must be positive")
    coeff = {"electron": B_ELECTRON, "proton": B_PROTON}.get(species)
    if coeff is None:
        raise ValueError("species must be 'electron' or 'proton'")
    return coeff / distance_nm ** 3


@dataclass(frozen=True)
class ApdEstimate:
    current: float       # A
    power: float         # W
    photon_energy: float  # J
    flux: float          # photons / s
    count: float         # photons in the window


def apd_photon_estimate(v_sig: float, v_bkg: float, gain: float,
                        responsivity: float, wavelength: float,
                        window: float) -> ApdEstimate:
    """Photon count from an APD voltage reading.

    I = (V_sig - V_bkg)/G; P = I/R; E = h c / lambda; flux = P/E;
    count = flux * window.
    """
    if v_sig <= v_bkg:
        raise ValueError("signal voltage must exceed background")
    current = (v_sig - v_bkg) / gain
    power = current / responsivity
    energy = PLANCK * SPEED_OF_LIGHT / wavelength
    flux = power / energy
    return ApdEstimate(current, power, energy, flux, flux * window)


@dataclass(frozen=True)
class SensitivityReport:
    eta_current: float
    eta_projected: float
    t_opt: float                 # optimal total cycle time, s
    thresholds: dict[str, float]

    def to_dict(self) -> dict:
        return {"eta_current": self.eta_current,
                "eta_projected": self.eta_projected,
                "t_opt": self.t_opt,
                "thresholds": dict(self.thresholds)}


def sensitivity_report(t2: float, beta: float, efficiency_current: float,
                       efficiency_projected: float, gamma: float,
                       t_init: float, t_read: float,
                       threshold_distance_nm: float = 10.0) -> SensitivityReport:
    """Current and projected optimal sensitivities plus single-spin thresholds."""
    t_opt, eta_min = optimal_sensing_time(t2, beta, efficiency_current, gamma,
                                          t_init, t_read)
    eta_proj = eta_min * efficiency_current / efficiency_projected
    return SensitivityReport(
        eta_current=eta_min,
        eta_projected=eta_proj,
        t_opt=t_opt + t_init + t_read,
        thresholds={
            "electron": detection_threshold(threshold_distance_nm, "electron"),
            "proton": detection_threshold(threshold_distance_nm, "proton"),
        })
