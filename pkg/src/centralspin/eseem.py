"""Analytic spin-echo envelope modulation for the three-nitrogen register.

Conditioned on the electronic eigenstate lambda in {0, -, +} (that is
{|E1>, |E2>, |E3>}), nuclear spin i precesses about an effective field

    Omega_nu = gamma_n B_nu + sum_mu <S_mu>_lambda A^(i)_{mu nu}     (Hz).

The echo qubit is spanned by {|E1>, |E3>}, so the per-site Hahn-echo
modulation uses the lambda = 0 and lambda = + branches:

    Q_i(T) = 1 - 2 |n0 x n+|^2 sin^2(w0 T / 4) sin^2(w+ T / 4),

with unit axes n and angular frequencies w = 2 pi f.  The measured coherence
combines the three sites with a phenomenological contrast and envelope:

    C(T) = [(1 - c) + c prod_i Q_i(T)] exp(-(T / T_1e)^beta).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spin_core import (EigenSystem, FieldConfig, HyperfineSet, SensorParams,
                        build_electronic_hamiltonian, electronic_eigensystem,
                        spin1_operators)

TWO_PI = 2 * np.pi
_LAMBDA_INDEX = {"0": 0, "-": 1, "+": 2, 0: 0, 1: 1, 2: 2}


@dataclass(frozen=True)
class EchoEnvelopeParams:
    """Modulation contrast c, 1/e envelope time (s), stretch exponent beta."""

    contrast_c: float
    t_1e: float
    beta: float

    def __post_init__(self):
        if not 0.0 <= self.contrast_c <= 1.0:
            raise ValueError("contrast must lie in [0, 1]")
        if self.t_1e <= 0 or self.beta <= 0:
            raise ValueError("t_1e and beta must be positive")


@dataclass(frozen=True)
class NuclearPrecession:
    """Unit precession axis and linear frequency (Hz) of one nuclear spin."""

    axis: np.ndarray
    frequency: float
    degenerate: bool = False    # True when the effective field vanished


def electron_expectations(es: EigenSystem) -> np.ndarray:
    """<S_mu>_lambda for lambda in {0, -, +}; rows index lambda, columns x,y,z."""
    ops = spin1_operators()
    out = np.empty((3, 3))
    for lam in range(3):
        v = es.state(lam)
        for mu, s in enumerate((ops.sx, ops.sy, ops.sz)):
            val = v.conj() @ (s @ v)
            out[lam, mu] = float(np.real(val))
    return out


def _effective_fields(params: SensorParams, fld: FieldConfig,
                      hs: HyperfineSet) -> np.ndarray:
    """Omega vectors (Hz), shape (3 sites, 3 lambda, 3 xyz)."""
    es = electronic_eigensystem(build_electronic_hamiltonian(params, fld))
    sexp = electron_expectations(es)
    bvec = fld.vector
    out = np.empty((3, 3, 3))
    for i, a in enumerate(hs.tensors):
        for lam in range(3):
            out[i, lam] = hs.nuclear_gamma * bvec + sexp[lam] @ a
    return out


def nuclear_precession(site: int, lam, params: SensorParams, fld: FieldConfig,
                       hs: HyperfineSet) -> NuclearPrecession:
    """Precession axis/frequency of nuclear ``site`` (1..3) for branch lambda."""
    if site not in (1, 2, 3):
        raise ValueError("site must be 1, 2 or 3")
    omega = _effective_fields(params, fld, hs)[site - 1, _LAMBDA_INDEX[lam]]
    norm = float(np.linalg.norm(omega))
    if norm == 0.0:
        return NuclearPrecession(np.array([0.0, 0.0, 1.0]), 0.0, degenerate=True)
    return NuclearPrecession(omega / norm, norm)


def _site_q(om0: np.ndarray, omp: np.ndarray, t: np.ndarray) -> np.ndarray:
    f0 = np.linalg.norm(om0)
    fp = np.linalg.norm(omp)
    if f0 == 0.0 or fp == 0.0:
        return np.ones_like(t)
    k = np.linalg.norm(np.cross(om0 / f0, omp / fp)) ** 2
    return 1.0 - 2.0 * k * (np.sin(TWO_PI * f0 * t / 4) ** 2
                            * np.sin(TWO_PI * fp * t / 4) ** 2)


def site_modulation(site: int, params: SensorParams, fld: FieldConfig,
                    hs: HyperfineSet, t) -> np.ndarray:
    """Q_i(t) for nuclear site ``site`` (1..3); t in seconds (scalar or array)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < 0):
        raise ValueError("time must be >= 0")
    om = _effective_fields(params, fld, hs)[site - 1]
    return _site_q(om[0], om[2], t)


def modulation_product(params: SensorParams, fld: FieldConfig, hs: HyperfineSet,
                       t) -> np.ndarray:
    """prod_i Q_i(t) over the three sites."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    om = _effective_fields(params, fld, hs)
    out = np.ones_like(t)
    for i in range(3):
        out = out * _site_q(om[i, 0], om[i, 2], t)
    return out


def echo_coherence(params: SensorParams, fld: FieldConfig, hs: HyperfineSet,
                   env: EchoEnvelopeParams, t) -> np.ndarray:
    """Full spin-echo coherence C(t)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    bracket = (1.0 - env.contrast_c) + env.contrast_c * modulation_product(
        params, fld, hs, t)
    return bracket * np.exp(-(t / env.t_1e) ** env.beta)


def angle_sweep(params: SensorParams, base_field: FieldConfig, hs: HyperfineSet,
                envs, thetas, times) -> np.ndarray:
    """Coherence matrix: one row per polar angle, one column per time."""
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if thetas.size == 0 or times.size == 0:
        raise ValueError("theta and time grids must be non-empty")
    if isinstance(envs, EchoEnvelopeParams):
        envs = [envs] * thetas.size
    if len(envs) != thetas.size:
        raise ValueError("need one envelope per angle")
    out = np.empty((thetas.size, times.size))
    for r, (th, env) in enumerate(zip(thetas, envs)):
        fld = FieldConfig(base_field.magnitude, th, base_field.phi)
        out[r] = echo_coherence(params, fld, hs, env, times)
    return out


# ---------------------------------------------------------------------------
# Reference simulation (independent of the closed form above)
# ---------------------------------------------------------------------------

def two_spin_echo_simulation(a_tensor: np.ndarray, params: SensorParams,
                             fld: FieldConfig, nuclear_gamma: float, times,
                             keep_offdiagonal: bool = False) -> np.ndarray:
    """Brute-force pi/2 - tau - pi - tau - (sigma_x readout) echo of one nucleus.

    The electron is restricted to the qubit {|E1>, |E3>}; the joint 4-dim
    Hamiltonian carries the electronic energies, the nuclear Zeeman term and
    the hyperfine coupling built from the projected electron operators.  With
    ``keep_offdiagonal`` False the electron-flipping matrix elements are
    dropped (the model Hamiltonian of the analytic theory); True keeps the
    full projection, whose counter-rotating terms shift the echo at order
    ||A|| / (E3 - E1).  The nucleus starts maximally mixed; pulses are ideal.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    es = electronic_eigensystem(build_electronic_hamiltonian(params, fld))
    ops = spin1_operators()
    basis = np.stack([es.state(0), es.state(2)], axis=1)   # 3x2
    s_proj = np.array([basis.conj().T @ s @ basis
                       for s in (ops.sx, ops.sy, ops.sz)])
    if not keep_offdiagonal:
        s_proj = np.array([np.diag(np.diag(s)) for s in s_proj])

    h4 = np.kron(np.diag([es.energies[0], es.energies[2]]).astype(complex),
                 np.eye(2))
    ivec = ops.ivec
    for mu in range(3):
        for nu in range(3):
            if a_tensor[mu, nu] != 0.0:
                h4 += a_tensor[mu, nu] * np.kron(s_proj[mu], ivec[nu])
    bvec = fld.vector
    for nu in range(3):
        if bvec[nu] != 0.0:
            h4 += nuclear_gamma * bvec[nu] * np.kron(np.eye(2, dtype=complex),
                                                     ivec[nu])

    ev, u = np.linalg.eigh(h4)
    sx_q = np.kron(np.array([[0, 1], [1, 0]], dtype=complex), np.eye(2))
    pi_x = np.kron(np.array([[0, -1j], [-1j, 0]], dtype=complex), np.eye(2))
    plus = np.array([1, 1], dtype=complex) / np.sqrt(2)
    nuclear_states = (np.array([1, 0], dtype=complex),
                      np.array([0, 1], dtype=complex))

    out = np.empty(times.size)
    for k, t in enumerate(times):
        phases = np.exp(-1j * TWO_PI * ev * (t / 2))
        u_half = (u * phases) @ u.conj().T
        u_total = u_half @ pi_x @ u_half
        c = 0.0
        for nst in nuclear_states:
            psi = u_total @ np.kron(plus, nst)
            c += float(np.real(psi.conj() @ (sx_q @ psi))) / 2
        out[k] = c
    return out
