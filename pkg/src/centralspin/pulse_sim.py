"""Time-domain two-level simulator with stochastic detuning and finite pulses.

The qubit Hamiltonian (linear-frequency units, Hz) is

    H(t) = [Omega_x(t) sx + Omega_y(t) sy] / 2 - Delta(t) sz / 2
           + S_ac sin(2 pi f_ac t + phi_ac) sz / 2,

propagated stepwise with the closed-form SU(2) exponential (each step is
exact for its piecewise-constant Hamiltonian).  With a stochastic noise trace
the stepping grid is the trace's dt and pulse amplitudes enter with their
fractional occupancy of each step, which preserves every pulse area exactly;
without noise, segments are stepped exactly (subdivided only when an AC drive
must be resolved).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .fit_engine import StretchedExpFit, stretched_exp_fit
from .noise_spec import CoherenceTrace, PulseSequence, _low_freq_alpha

TWO_PI = 2 * np.pi


# ---------------------------------------------------------------------------
# Schedules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Segment:
    """One piecewise-constant control interval.

    A zero-duration segment with nonzero (omega_x, omega_y) encodes an ideal
    instantaneous pi pulse about that axis.
    """

    duration: float
    omega_x: float = 0.0
    omega_y: float = 0.0

    @property
    def is_pulse(self) -> bool:
        return self.omega_x != 0.0 or self.omega_y != 0.0


@dataclass(frozen=True)
class ControlSchedule:
    segments: tuple[Segment, ...]
    total: float

    @property
    def min_pulse_width(self) -> float:
        widths = [s.duration for s in self.segments if s.is_pulse and s.duration > 0]
        return min(widths) if widths else math.inf


def control_schedule(seq: PulseSequence) -> ControlSchedule:
    """Free/pulse segment list matching the uniform pulse-center layout.

    Layout: tau/2, pulse, tau, pulse, ..., pulse, tau/2; each finite-width
    pulse drives at Omega0 = 1/(2 t_pi) so its area is exactly pi.  With
    t_pi = 0 the pulses become ideal zero-duration rotations.
    """
    om = seq.rabi
    segs: list[Segment] = [Segment(seq.tau / 2)]
    for k, phase in enumerate(seq.phases):
        if seq.t_pi > 0:
            segs.append(Segment(seq.t_pi, om * np.cos(phase), om * np.sin(phase)))
        else:
            segs.append(Segment(0.0, np.cos(phase), np.sin(phase)))
        segs.append(Segment(seq.tau if k < seq.n_pulses - 1 else seq.tau / 2))
    return ControlSchedule(tuple(segs), seq.total)


# ---------------------------------------------------------------------------
# Noise synthesis
# ---------------------------------------------------------------------------

@dataclass
class NoiseTrace:
    """Detuning samples Delta(t) in Hz on a uniform dt grid."""

    dt: float
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)


def noise_trace_from_psd(psd, dt: float, duration: float, rng_seed) -> NoiseTrace:
    """Spectral synthesis of a real detuning trace whose angular PSD matches ``psd``.

    Each rfft bin receives an independent complex Gaussian amplitude with
    variance 2 S(w) M / dt (the factor 2 converts the coherence-functional
    PSD into the two-sided PSD of the angular detuning); the inverse
    transform divided by 2 pi yields Delta(t) in Hz.  Frequencies below
    2 pi / duration are absent by construction; a warning is issued when the
    PSD is non-integrable at low frequency.
    """
    if dt <= 0 or duration <= 0:
        raise ValueError("dt and duration must be positive")
    m = int(np.ceil(duration / dt))
    alpha = _low_freq_alpha(psd)
    if alpha is not None and alpha >= 1.0:
        warnings.warn("PSD diverges at low frequency; applying the "
                      "duration-limited infrared cutoff 2*pi/duration",
                      RuntimeWarning, stacklevel=2)
    freqs = TWO_PI * np.fft.rfftfreq(m, dt)
    s2 = np.zeros_like(freqs)
    s2[1:] = 2.0 * np.asarray(psd(freqs[1:]), dtype=float)
    amp = np.sqrt(s2 * m / dt)
    rng = np.random.default_rng(rng_seed)
    g = (rng.standard_normal(freqs.size)
         + 1j * rng.standard_normal(freqs.size)) / np.sqrt(2)
    x = amp * g
    x[0] = 0.0
    if m % 2 == 0:
        x[-1] = np.sqrt(2.0) * x[-1].real
    return NoiseTrace(dt, np.fft.irfft(x, n=m) / TWO_PI)


# ---------------------------------------------------------------------------
# AC signal and disorder
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AcSignal:
    """Target AC field: amplitude (Hz), frequency (Hz), phase (rad)."""

    amplitude: float
    frequency: float
    phase: float = np.pi / 2

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("amplitude must be >= 0")


@dataclass(frozen=True)
class GaussianDisorder:
    """Static Gaussian detuning distribution, standard deviation in Hz."""

    sigma: float
    n_nodes: int = 41

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        if self.n_nodes < 21:
            raise ValueError("use at least 21 quadrature nodes")
        x, w = np.polynomial.hermite_e.hermegauss(self.n_nodes)
        return x * self.sigma, w / np.sum(w)


# ---------------------------------------------------------------------------
# SU(2) stepping cores
# ---------------------------------------------------------------------------

_PSI0 = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2)


def _apply_su2(psi, vx, vy, vz, dt):
    """psi -> exp(-i pi (v . sigma) dt) psi for batches; v components in Hz."""
    vn = np.sqrt(vx * vx + vy * vy + vz * vz)
    ang = np.pi * vn * dt
    cos = np.cos(ang)
    sinc = np.where(vn > 0, np.sin(ang) / np.where(vn > 0, vn, 1.0), np.pi * dt)
    a = cos - 1j * sinc * vz
    b = -1j * sinc * (vx - 1j * vy)
    c = -1j * sinc * (vx + 1j * vy)
    d = cos + 1j * sinc * vz
    p0 = a * psi[..., 0] + b * psi[..., 1]
    p1 = c * psi[..., 0] + d * psi[..., 1]
    return np.stack([p0, p1], axis=-1)


def _ideal_pulse(psi, ax, ay):
    norm = math.hypot(ax, ay)
    nx, ny = ax / norm, ay / norm
    b = -1j * (nx - 1j * ny)
    c = -1j * (nx + 1j * ny)
    p0 = b * psi[..., 1]
    p1 = c * psi[..., 0]
    return np.stack([p0, p1], axis=-1)


def _sigma_x(psi):
    return 2.0 * np.real(np.conj(psi[..., 0]) * psi[..., 1])


def _occupancy_arrays(schedule: ControlSchedule, n_steps: int, dt: float):
    """Per-step (omega_x, omega_y) averaged over fractional pulse occupancy."""
    ox = np.zeros(n_steps)
    oy = np.zeros(n_steps)
    t0 = 0.0
    for seg in schedule.segments:
        if seg.is_pulse and seg.duration > 0:
            i0f, i1f = t0 / dt, (t0 + seg.duration) / dt
            i0, i1 = int(math.floor(i0f)), min(int(math.ceil(i1f)), n_steps)
            for i in range(i0, i1):
                frac = max(0.0, min(i + 1.0, i1f) - max(float(i), i0f))
                ox[i] += seg.omega_x * frac
                oy[i] += seg.omega_y * frac
        t0 += seg.duration
    return ox, oy


def _evolve_on_grid(schedule: ControlSchedule, deltas, ac: AcSignal | None,
                    sample_times) -> np.ndarray:
    """Grid-stepped batch evolution; ``deltas`` is (B, n_steps) detuning in Hz.

    Returns sigma_x expectation, shape (B, len(sample_times)); sample times
    are taken at the nearest following step boundary.
    """
    n_batch, n_steps = deltas.shape
    dt = schedule.total / n_steps
    ox, oy = _occupancy_arrays(schedule, n_steps, dt)
    mids = (np.arange(n_steps) + 0.5) * dt
    drive = np.zeros(n_steps) if ac is None else \
        ac.amplitude * np.sin(TWO_PI * ac.frequency * mids + ac.phase)
    sample_idx = np.clip(np.ceil(np.asarray(sample_times) / dt - 1e-9).astype(int),
                         0, n_steps)
    out = np.empty((n_batch, len(sample_idx)))
    order = np.argsort(sample_idx)
    psi = np.tile(_PSI0, (n_batch, 1))
    pos = 0
    for j in order:
        target = sample_idx[j]
        for s in range(pos, target):
            vz = drive[s] - deltas[:, s]
            psi = _apply_su2(psi, ox[s], oy[s], vz, dt)
        pos = max(pos, target)
        out[:, j] = _sigma_x(psi)
    return out


def _evolve_segments(schedule: ControlSchedule, deltas, ac_amp, ac_freq,
                     ac_phase, sample_times) -> np.ndarray:
    """Exact per-segment batch evolution for static detunings (no noise trace).

    ``deltas`` and ``ac_amp`` are (B,) arrays.  Segments are exact unless an
    AC drive requires midpoint subdivision (64 steps per AC period).
    """
    deltas = np.asarray(deltas, dtype=float)
    ac_amp = np.zeros_like(deltas) if ac_amp is None else np.asarray(ac_amp, float)
    has_ac = np.any(ac_amp != 0.0)
    boundaries = list(np.asarray(sample_times, dtype=float))
    psi = np.tile(_PSI0, (deltas.size, 1))
    out = np.empty((deltas.size, len(boundaries)))
    done = np.zeros(len(boundaries), dtype=bool)
    t0 = 0.0

    def record_until(t_next):
        for j, ts in enumerate(boundaries):
            if not done[j] and ts <= t_next + 1e-18:
                out[:, j] = _sigma_x(psi)
                done[j] = True

    record_until(t0)
    for seg in schedule.segments:
        if seg.duration == 0.0:
            if seg.is_pulse:
                psi = _ideal_pulse(psi, seg.omega_x, seg.omega_y)
            continue
        # split the segment at any interior sample boundary
        interior = sorted(ts for ts in boundaries
                          if t0 + 1e-18 < ts < t0 + seg.duration - 1e-18)
        edges = [t0] + interior + [t0 + seg.duration]
        for a, b in zip(edges[:-1], edges[1:]):
            dur = b - a
            if has_ac and ac_freq > 0:
                nsub = max(1, int(np.ceil(dur * ac_freq * 64)))
            else:
                nsub = 1
            dsub = dur / nsub
            for s in range(nsub):
                tm = a + (s + 0.5) * dsub
                vz = ac_amp * np.sin(TWO_PI * ac_freq * tm + ac_phase) - deltas
                psi = _apply_su2(psi, seg.omega_x, seg.omega_y, vz, dsub)
            record_until(b)
        t0 += seg.duration
    record_until(schedule.total)
    return out


# ---------------------------------------------------------------------------
# Public evolution API
# ---------------------------------------------------------------------------

def evolve_two_level(schedule: ControlSchedule, noise: NoiseTrace | None = None,
                     ac: AcSignal | None = None, sample_times=None,
                     static_delta: float = 0.0) -> np.ndarray:
    """Coherence <sigma_x>(t) from the x-polarized initial state.

    With a noise trace the stepping grid is the trace's dt (which must
    resolve every finite pulse to at least 8 steps); otherwise segments are
    propagated exactly.
    """
    if sample_times is None:
        sample_times = [schedule.total]
    sample_times = np.atleast_1d(np.asarray(sample_times, dtype=float))
    if np.any(sample_times < 0) or np.any(sample_times > schedule.total + 1e-15):
        raise ValueError("sample times must lie within the schedule")
    if noise is None:
        out = _evolve_segments(schedule, np.array([static_delta]),
                               None if ac is None else np.array([ac.amplitude]),
                               0.0 if ac is None else ac.frequency,
                               0.0 if ac is None else ac.phase, sample_times)
        return out[0]
    if noise.dt > schedule.min_pulse_width / 8:
        raise ValueError("noise dt is coarser than pulse width / 8; "
                         "pulses would be under-resolved")
    n_steps = int(np.ceil(schedule.total / noise.dt))
    if noise.samples.size < n_steps:
        raise ValueError("noise trace shorter than the schedule")
    deltas = (noise.samples[:n_steps] + static_delta)[None, :]
    return _evolve_on_grid(schedule, deltas, ac, sample_times)[0]


# ---------------------------------------------------------------------------
# Monte Carlo decoherence
# ---------------------------------------------------------------------------

@dataclass
class DecoherenceResult:
    trace: CoherenceTrace
    fit: StretchedExpFit
    trials: int
    seed: int


def monte_carlo_decoherence(psd, seq: PulseSequence, times, trials: int,
                            seed: int, dt: float | None = None) -> DecoherenceResult:
    """Disorder-free Monte Carlo coherence curve with a stretched-exponential fit.

    One noise realization per trial spans the full schedule; the per-trial
    generator is derived from (seed, time-index, trial-index) so results do
    not depend on evaluation order.
    """
    if trials < 10:
        raise ValueError("need at least 10 trials")
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if dt is None:
        dt = seq.t_pi / 24 if seq.t_pi > 0 else 1e-9
    mean = np.empty(times.size)
    sem = np.empty(times.size)
    for i, total in enumerate(times):
        seq_t = seq.with_total(float(total))
        schedule = control_schedule(seq_t)
        n_steps = int(np.ceil(schedule.total / dt))
        deltas = np.empty((trials, n_steps))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            for trial in range(trials):
                tr = noise_trace_from_psd(
                    psd, dt, schedule.total,
                    np.random.SeedSequence(entropy=(seed, i, trial)))
                deltas[trial] = tr.samples[:n_steps]
        cs = _evolve_on_grid(schedule, deltas, None, [schedule.total])[:, 0]
        mean[i] = float(np.mean(cs))
        sem[i] = float(np.std(cs, ddof=1) / np.sqrt(trials))
    trace = CoherenceTrace(times, mean, sem)
    usable = mean > 1e-3
    if np.count_nonzero(usable) >= 5:
        fit_trace = CoherenceTrace(times[usable], np.clip(mean[usable], 1e-6, 1.2))
        fit = stretched_exp_fit(fit_trace)
    else:
        fit = StretchedExpFit(math.inf, math.nan, 1.0,
                              diagnostic="too few usable points")
    return DecoherenceResult(trace, fit, trials, seed)


# ---------------------------------------------------------------------------
# AC sensing and robustness
# ---------------------------------------------------------------------------

@dataclass
class AcScanResult:
    amplitudes: np.ndarray
    coherence: np.ndarray

    @property
    def contrast(self) -> float:
        return float(self.coherence.max() - self.coherence.min()) / 2


def ac_sensing_scan(seq: PulseSequence, ac_amplitudes, disorder=0.0,
                    psd=None, trials: int = 50, seed: int = 0,
                    ac_phase: float = np.pi / 2) -> AcScanResult:
    """Final coherence versus AC amplitude at the sequence's resonance.

    The AC frequency is locked to 1 / T_res.  ``disorder`` is either a static
    detuning (Hz) or a GaussianDisorder averaged by Gauss-Hermite quadrature.
    The default phase puts the pulse centers at the signal's zero crossings
    (the uniform-center layout places them at the extrema of a sine with zero
    phase, where no phase accumulates).
    """
    amplitudes = np.atleast_1d(np.asarray(ac_amplitudes, dtype=float))
    f_ac = 1.0 / seq.resonance_period
    schedule = control_schedule(seq)
    if isinstance(disorder, GaussianDisorder):
        deltas, weights = disorder.nodes()
    else:
        deltas, weights = np.array([float(disorder)]), np.array([1.0])

    if psd is None:
        d_grid, a_grid = np.meshgrid(deltas, amplitudes, indexing="ij")
        out = _evolve_segments(schedule, d_grid.ravel(), a_grid.ravel(),
                               f_ac, ac_phase, [schedule.total])
        c = out[:, 0].reshape(deltas.size, amplitudes.size)
        return AcScanResult(amplitudes, weights @ c)

    dt = seq.t_pi / 24 if seq.t_pi > 0 else 1e-9
    n_steps = int(np.ceil(schedule.total / dt))
    base = np.empty((trials, n_steps))
    for trial in range(trials):
        tr = noise_trace_from_psd(psd, dt, schedule.total,
                                  np.random.SeedSequence(entropy=(seed, trial)))
        base[trial] = tr.samples[:n_steps]
    coh = np.empty(amplitudes.size)
    for k, amp in enumerate(amplitudes):
        ac = AcSignal(amp, f_ac, ac_phase)
        acc = 0.0
        for d, w in zip(deltas, weights):
            cs = _evolve_on_grid(schedule, base + d, ac, [schedule.total])[:, 0]
            acc += w * float(np.mean(cs))
        coh[k] = acc
    return AcScanResult(amplitudes, coh)


def control_error_fidelity(kind: str, epsilon: float, n_pulses: int,
                           pulse_axis: str = "x") -> float:
    """F(N) = |<psi0| U_eps(N) |psi0>|^2 with U built from exact error unitaries.

    CPMG composes U_{eps,axis}^N; XY8 composes the x/y pattern.  The initial
    state is (|up> + |down>)/sqrt(2), i.e. +x: a CPMG about x is error-immune
    for this state, so reproducing the error-sensitivity plots requires
    ``pulse_axis='y'`` (axis orthogonal to the initial coherence).
    """
    if n_pulses % 8:
        raise ValueError("N must be a multiple of 8")
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    axes = {"x": sx, "y": sy}

    def u(op):
        ang = (np.pi + epsilon) / 2
        return np.cos(ang) * np.eye(2) - 1j * np.sin(ang) * op

    if kind == "xy8":
        block = np.eye(2, dtype=complex)
        for p in "xyxyyxyx":
            block = block @ u(axes[p])
    elif kind == "cpmg":
        block = np.linalg.matrix_power(u(axes[pulse_axis]), 8)
    else:
        raise ValueError(f"unknown sequence kind {kind!r}")
    total = np.linalg.matrix_power(block, n_pulses // 8)
    amp = _PSI0.conj() @ (total @ _PSI0)
    return float(np.abs(amp) ** 2)


def disorder_averaged_fidelity(kind: str, w: float, rabi: float, n_pulses: int,
                               quadrature_points: int = 41,
                               tau: float | None = None) -> float:
    """Gauss-Hermite average of the finite-pulse sequence fidelity over detuning.

    F(N, Delta) propagates the full schedule (width t_pi = 1/(2 rabi), default
    inter-pulse spacing tau = t_pi) at static detuning Delta and projects onto
    the initial +x state; the average weights Delta ~ Normal(0, w).
    """
    if quadrature_points < 21:
        raise ValueError("use at least 21 quadrature nodes")
    t_pi = 1.0 / (2 * rabi)
    seq = PulseSequence(kind, n_pulses, tau if tau is not None else t_pi, t_pi)
    schedule = control_schedule(seq)
    if w == 0.0:
        deltas, weights = np.array([0.0]), np.array([1.0])
    else:
        deltas, weights = GaussianDisorder(w, quadrature_points).nodes()
    # fidelity needs the full state, not just sigma_x: reuse segment engine
    psi = np.tile(_PSI0, (deltas.size, 1))
    for seg in schedule.segments:
        if seg.duration == 0.0:
            if seg.is_pulse:
                psi = _ideal_pulse(psi, seg.omega_x, seg.omega_y)
            continue
        psi = _apply_su2(psi, seg.omega_x, seg.omega_y, -deltas, seg.duration)
    amp = psi @ _PSI0.conj()
    return float(weights @ (np.abs(amp) ** 2))
