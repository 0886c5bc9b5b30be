"""Derivative-free global fitting plus the concrete fitting tasks.

The global stage is a rand/1/bin differential evolution with bound clipping;
the local stage is a finite-difference gradient descent with backtracking.
The hyperfine-learning task searches the four shared parameters
{a_xx, a_yy, phi, eps1} globally while the per-dataset envelope parameters
{c, T_1e, beta} are eliminated by a fast nested fit, and finishes with a
joint least-squares polish over all parameters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit, least_squares

from .eseem import EchoEnvelopeParams, modulation_product
from .spin_core import FieldConfig, SensorParams, hyperfine_set_from_site1

TWO_PI = 2 * np.pi


# ---------------------------------------------------------------------------
# Spaces and results
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FitSpace:
    """Named box-bounded parameter space; scope marks globals vs per-dataset locals."""

    names: tuple[str, ...]
    lower: np.ndarray
    upper: np.ndarray
    scope: tuple[str, ...]     # "global" or "local:<dataset-id>"

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if not (len(self.names) == lo.size == hi.size == len(self.scope)):
            raise ValueError("inconsistent space definition")
        if np.any(lo >= hi):
            raise ValueError("lower bounds must be strictly below upper bounds")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return len(self.names)


@dataclass
class FitResult:
    params: dict[str, float]
    mse: float
    n_evals: int
    seed: int | None = None
    uncertainty: dict[str, float] = field(default_factory=dict)
    per_dataset_locals: dict = field(default_factory=dict)

    @property
    def vector(self) -> np.ndarray:
        return np.array(list(self.params.values()))


@dataclass(frozen=True)
class DEConfig:
    pop: int | None = None          # default 15 * dim
    generations: int = 300
    f: float = 0.7
    cr: float = 0.9
    seed: int = 0


# ---------------------------------------------------------------------------
# Differential evolution (rand/1/bin)
# ---------------------------------------------------------------------------

def differential_evolution(objective, space: FitSpace,
                           config: DEConfig = DEConfig()) -> FitResult:
    """Minimize ``objective`` over the box; deterministic for a given seed.

    Non-finite trial objectives are treated as +inf (trial rejected).  The
    best-so-far objective is monotone non-increasing across generations.
    """
    dim = space.dim
    pop_size = config.pop if config.pop is not None else 15 * dim
    if pop_size < 4:
        raise ValueError("population must be at least 4")
    rng = np.random.default_rng(config.seed)
    lo, hi = space.lower, space.upper

    def safe_eval(x):
        v = objective(x)
        return float(v) if np.isfinite(v) else math.inf

    pop = lo + rng.random((pop_size, dim)) * (hi - lo)
    cost = np.array([safe_eval(x) for x in pop])
    n_evals = pop_size

    for _ in range(config.generations):
        trials = np.empty_like(pop)
        for i in range(pop_size):
            choices = [j for j in range(pop_size) if j != i]
            r1, r2, r3 = rng.choice(choices, size=3, replace=False)
            mutant = pop[r1] + config.f * (pop[r2] - pop[r3])
            cross = rng.random(dim) < config.cr
            cross[rng.integers(dim)] = True
            trial = np.where(cross, mutant, pop[i])
            trials[i] = np.clip(trial, lo, hi)
        trial_cost = np.array([safe_eval(x) for x in trials])
        n_evals += pop_size
        better = trial_cost <= cost
        pop[better] = trials[better]
        cost[better] = trial_cost[better]

    best = int(np.argmin(cost))
    params = dict(zip(space.names, pop[best]))
    return FitResult(params=params, mse=float(cost[best]), n_evals=n_evals,
                     seed=config.seed)


# ---------------------------------------------------------------------------
# Local refinement (finite-difference descent with backtracking)
# ---------------------------------------------------------------------------

def local_refine(objective, start, step_scales, bounds=None,
                 max_iter: int = 500, rel_tol: float = 1e-10) -> FitResult:
    """Monotone finite-difference gradient descent from ``start``.

    ``step_scales`` sets the per-parameter finite-difference step and the
    initial line-search scale.  Raises on a non-finite gradient.
    """
    x = np.asarray(start, dtype=float).copy()
    scales = np.asarray(step_scales, dtype=float)
    if scales.shape != x.shape or np.any(scales <= 0):
        raise ValueError("step_scales must be positive and match start")
    lo = np.full_like(x, -np.inf) if bounds is None else np.asarray(bounds[0], float)
    hi = np.full_like(x, np.inf) if bounds is None else np.asarray(bounds[1], float)

    def clipped(v):
        return np.clip(v, lo, hi)

    x = clipped(x)
    fx = float(objective(x))
    n_evals = 1
    h = 1e-6
    for _ in range(max_iter):
        grad = np.empty_like(x)
        for k in range(x.size):
            dx = np.zeros_like(x)
            dx[k] = h * scales[k]
            fp = objective(clipped(x + dx))
            fm = objective(clipped(x - dx))
            n_evals += 2
            grad[k] = (fp - fm) / (2 * dx[k])
        if not np.all(np.isfinite(grad)):
            raise FloatingPointError("non-finite finite-difference gradient")
        step = grad * scales ** 2
        norm = np.linalg.norm(step / np.maximum(scales, 1e-300))
        if norm == 0.0:
            break
        alpha = 1.0
        improved = False
        for _ in range(30):
            x_new = clipped(x - alpha * step)
            f_new = float(objective(x_new))
            n_evals += 1
            if np.isfinite(f_new) and f_new < fx:
                improved = True
                break
            alpha *= 0.5
        if not improved:
            break
        rel = (fx - f_new) / max(abs(fx), 1e-300)
        x, fx = x_new, f_new
        if rel < rel_tol:
            break
    params = {f"x{k}": float(v) for k, v in enumerate(x)}
    return FitResult(params=params, mse=fx, n_evals=n_evals)


# ---------------------------------------------------------------------------
# Uncertainty from a local quadratic model
# ---------------------------------------------------------------------------

def quadratic_uncertainty(objective, x_opt, scales, n_points: int | None = None
                          ) -> np.ndarray:
    """Per-parameter standard deviations from the FD Hessian of the objective.

    The objective is assumed to be a mean-squared error; the covariance of the
    minimizer is approximated by 2 * mse * H^{-1} (pseudo-inverse when the
    quadratic model is degenerate, which yields very large uncertainties for
    unidentifiable directions).
    """
    x = np.asarray(x_opt, dtype=float)
    s = np.asarray(scales, dtype=float)
    n = x.size
    f0 = float(objective(x))
    hess = np.empty((n, n))
    h = 1e-4
    steps = h * s
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = steps[i]
        fpp = objective(x + ei)
        fmm = objective(x - ei)
        hess[i, i] = (fpp - 2 * f0 + fmm) / steps[i] ** 2
    for i in range(n):
        for j in range(i + 1, n):
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = steps[i]
            ej[j] = steps[j]
            fpq = objective(x + ei + ej)
            fpm = objective(x + ei - ej)
            fmp = objective(x - ei + ej)
            fmm = objective(x - ei - ej)
            hess[i, j] = hess[j, i] = (fpq - fpm - fmp + fmm) / (4 * steps[i] * steps[j])
    cov = 2.0 * max(f0, 0.0) * np.linalg.pinv(hess, rcond=1e-12, hermitian=True)
    var = np.clip(np.diag(cov), 0.0, None)
    sigma = np.sqrt(var)
    # flat directions: zero curvature with zero mse still means "unknown"
    eigvals = np.linalg.eigvalsh(hess)
    if np.any(eigvals <= 1e-12 * max(np.max(np.abs(eigvals)), 1e-300)):
        flat = np.abs(np.diag(hess)) <= 1e-12 * max(np.max(np.abs(hess)), 1e-300)
        sigma = np.where(flat, np.inf, sigma)
    return sigma


# ---------------------------------------------------------------------------
# Hyperfine-Hamiltonian learning from angle-resolved echo data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HyperfineFitFixed:
    """Quantities held fixed during the echo fit."""

    azz: float
    eps_total: float
    b_mag: float
    phi_init: float | None = None     # rad; centers the phi search window
    phi_halfwidth: float = np.deg2rad(40.0)
    axx_bounds: tuple[float, float] = (-130e6, -1e5)
    ayy_bounds: tuple[float, float] = (-130e6, -1e5)
    nuclear_gamma: float = -4.3e6


def hyperfine_fit_space(fixed: HyperfineFitFixed, dataset_ids) -> FitSpace:
    """The shared 4-parameter global block plus (c, log10 T_1e, beta) per dataset."""
    phi_c = fixed.phi_init if fixed.phi_init is not None else np.deg2rad(30.0)
    names = ["axx", "ayy", "phi", "eps1"]
    lower = [fixed.axx_bounds[0], fixed.ayy_bounds[0],
             phi_c - fixed.phi_halfwidth, -fixed.eps_total]
    upper = [fixed.axx_bounds[1], fixed.ayy_bounds[1],
             phi_c + fixed.phi_halfwidth, fixed.eps_total]
    scope = ["global"] * 4
    for ds in dataset_ids:
        names += [f"c[{ds}]", f"log10_t1e[{ds}]", f"beta[{ds}]"]
        lower += [0.0, -7.0, 0.3]
        upper += [1.0, -3.0, 4.0]
        scope += [f"local:{ds}"] * 3
    return FitSpace(tuple(names), np.array(lower), np.array(upper), tuple(scope))


def _strain2_from(eps1: float, eps_total: float) -> float:
    inside = eps_total ** 2 - eps1 ** 2
    if inside < 0:
        raise ValueError("|eps1| exceeds the total strain")
    return math.sqrt(inside)


def _modulation_for(globals_vec, theta, times, fixed: HyperfineFitFixed,
                    base: SensorParams) -> np.ndarray:
    axx, ayy, phi, eps1 = globals_vec
    params = SensorParams(base.d, base.gamma_z, base.gamma_perp,
                          strain1=eps1, strain2=_strain2_from(eps1, fixed.eps_total))
    fld = FieldConfig(fixed.b_mag, theta, phi)
    hs = hyperfine_set_from_site1(axx, ayy, 0.0, fixed.azz, fixed.nuclear_gamma)
    return modulation_product(params, fld, hs, times)


def _envelope_residual(x, t, y, p):
    c = _closed_form_contrast(x, t, y, p)
    e = np.exp(-(t / 10.0 ** x[0]) ** x[1])
    return ((1 - c) + c * p) * e - y


def _closed_form_contrast(x, t, y, p) -> float:
    e = np.exp(-(t / 10.0 ** x[0]) ** x[1])
    u = e * (p - 1.0)
    denom = float(u @ u)
    if denom <= 0:
        return 0.0
    c = float(u @ (y - e)) / denom
    return min(max(c, 0.0), 1.0)


class _EnvelopeGridFitter:
    """Vectorized elimination of (c, T_1e, beta) for one dataset.

    For a fixed envelope E(t) the contrast is linear, so the best SSE over c
    has the closed form S0 - T1^2/T2 per envelope candidate; a (log T_1e,
    beta) grid then reduces the inner fit to two matrix-vector products per
    candidate modulation.
    """

    def __init__(self, times, values, n_t1e: int = 18, n_beta: int = 12):
        t = np.asarray(times, float)
        y = np.asarray(values, float)
        lt = np.linspace(np.log10(max(t[-1] / 30, 1e-8)),
                         np.log10(t[-1] * 3), n_t1e)
        betas = np.linspace(0.4, 3.0, n_beta)
        lt_g, beta_g = np.meshgrid(lt, betas, indexing="ij")
        self.log_t1e = lt_g.ravel()
        self.betas = beta_g.ravel()
        with np.errstate(over="ignore"):
            env = np.exp(-(t[None, :] / 10.0 ** self.log_t1e[:, None])
                         ** self.betas[:, None])
        self.env = env
        self.s0 = np.sum((env - y[None, :]) ** 2, axis=1)
        self.m_t1 = env * (env - y[None, :])
        self.m_t2 = env * env
        self.t = t
        self.y = y

    def min_sse(self, modulation) -> float:
        u = modulation - 1.0
        t1 = self.m_t1 @ u
        t2 = self.m_t2 @ (u * u)
        with np.errstate(divide="ignore", invalid="ignore"):
            c = np.clip(np.where(t2 > 0, -t1 / t2, 0.0), 0.0, 1.0)
        sse = self.s0 + 2 * c * t1 + c * c * t2
        return float(np.min(sse))

    def refine(self, modulation) -> tuple[float, float, float, float]:
        """Grid pick followed by a bounded least-squares polish."""
        u = modulation - 1.0
        t1 = self.m_t1 @ u
        t2 = self.m_t2 @ (u * u)
        with np.errstate(divide="ignore", invalid="ignore"):
            c = np.clip(np.where(t2 > 0, -t1 / t2, 0.0), 0.0, 1.0)
        sse = self.s0 + 2 * c * t1 + c * c * t2
        k = int(np.argmin(sse))
        x0 = np.array([np.clip(self.log_t1e[k], -6.99, -3.01),
                       np.clip(self.betas[k], 0.31, 3.99)])
        res = least_squares(_envelope_residual, x0, args=(self.t, self.y, modulation),
                            bounds=([-7.0, 0.3], [-3.0, 4.0]),
                            method="trf", xtol=1e-13, ftol=1e-13, max_nfev=40)
        c_fit = _closed_form_contrast(res.x, self.t, self.y, modulation)
        return c_fit, 10.0 ** res.x[0], float(res.x[1]), float(2 * res.cost)


def _fit_envelope_locals(times, values, modulation) -> tuple[float, float, float, float]:
    """Best (c, t_1e, beta) given the modulation product; returns (..., sse)."""
    return _EnvelopeGridFitter(times, values).refine(np.asarray(modulation, float))


def fit_hyperfine(datasets, fixed: HyperfineFitFixed,
                  sensor: SensorParams | None = None,
                  config: DEConfig = DEConfig(pop=30, generations=60, seed=1),
                  grid_steps: tuple[float, float, float, float] = (8e6, 8e6,
                                                                   np.deg2rad(8.0),
                                                                   9e6),
                  window_fractions: tuple[float, ...] = (0.125, 0.25, 0.5, 1.0),
                  polish: bool = True) -> FitResult:
    """Learn {a_xx, a_yy, phi, eps1} from pooled angle-resolved echo traces.

    ``datasets`` is a sequence of (theta_rad, CoherenceTrace-like) pairs; any
    object with ``times`` and ``values`` arrays is accepted.  The pooled MSE
    weights every sample equally; envelope locals are eliminated per dataset
    inside the objective.

    The modulation landscape is comb-like: over the full trace the basin of
    attraction is only a few MHz wide, but it widens to tens of MHz when the
    fit sees only the first fraction of the trace.  The search therefore runs
    a time-window ladder: a deterministic coarse grid scan plus differential
    evolution on the shortest window (the MSE-map protocol of the azimuth and
    transverse-component heatmaps), then joint bounded least-squares polishes
    while the window doubles up to the full trace.  The top grid candidates
    are carried through the ladder and the best final polish wins.
    """
    if len(datasets) == 0:
        raise ValueError("need at least one dataset")
    if sensor is None:
        from .constants import GAMMA_PERP, GAMMA_Z, ZERO_FIELD_SPLITTING
        sensor = SensorParams(ZERO_FIELD_SPLITTING, GAMMA_Z, GAMMA_PERP)
    thetas = [float(th) for th, _ in datasets]
    times_list = [np.asarray(tr.times, float) for _, tr in datasets]
    values_list = [np.asarray(tr.values, float) for _, tr in datasets]
    n_data = len(datasets)
    n_total = sum(t.size for t in times_list)
    space = hyperfine_fit_space(fixed, range(n_data))
    lo4, hi4 = space.lower[:4], space.upper[:4]

    def window_fitters(fraction):
        n_pts = [max(12, int(round(t.size * fraction))) for t in times_list]
        return ([_EnvelopeGridFitter(t[:n], y[:n])
                 for t, y, n in zip(times_list, values_list, n_pts)], n_pts)

    def coarse_sse(globals_vec, fitters, n_pts) -> float:
        sse = 0.0
        for th, t, fitter, n in zip(thetas, times_list, fitters, n_pts):
            try:
                p = _modulation_for(globals_vec, th, t[:n], fixed, sensor)
            except ValueError:
                return math.inf
            sse += fitter.min_sse(p)
        return sse

    def joint_residual_window(x, n_pts, size):
        out = []
        for d, (th, t, y) in enumerate(zip(thetas, times_list, values_list)):
            n = n_pts[d]
            try:
                p = _modulation_for(x[:4], th, t[:n], fixed, sensor)
            except ValueError:
                return np.full(size, 1e6)
            c, lt, b = x[4 + 3 * d: 7 + 3 * d]
            e = np.exp(-(t[:n] / 10.0 ** lt) ** b)
            out.append(((1 - c) + c * p) * e - y[:n])
        return np.concatenate(out)

    def locals_for(globals_vec, fitters, n_pts):
        locs = []
        for th, t, fitter, n in zip(thetas, times_list, fitters, n_pts):
            p = _modulation_for(globals_vec, th, t[:n], fixed, sensor)
            c, t1e, beta, _ = fitter.refine(p)
            locs.append((c, np.log10(t1e), beta))
        return np.concatenate([globals_vec] + [np.array(l) for l in locs])

    lm_scales = np.concatenate([[1e6, 1e6, 1e-2, 1e6],
                                np.tile([1e-2, 1e-2, 1e-2], n_data)])

    def ladder_polish(x_full, n_evals):
        for frac in window_fractions[1:] + (1.0,):
            fitters, n_pts = window_fitters(frac)
            size = sum(n_pts)
            res = least_squares(joint_residual_window, x_full,
                                args=(n_pts, size),
                                bounds=(space.lower, space.upper),
                                method="trf", x_scale=lm_scales,
                                xtol=1e-15, ftol=1e-15, gtol=1e-15,
                                max_nfev=300)
            x_full = res.x
            n_evals += int(res.nfev)
        return x_full, n_evals

    # stage 1: coarse grid scan on the shortest window
    fitters0, n_pts0 = window_fitters(window_fractions[0])
    axes = [np.arange(lo4[k], hi4[k] + 1e-12, grid_steps[k]) for k in range(4)]
    cells = []
    for axx in axes[0]:
        for ayy in axes[1]:
            for phi in axes[2]:
                for eps1 in axes[3]:
                    v = (axx, ayy, phi, eps1)
                    cells.append((coarse_sse(np.array(v), fitters0, n_pts0), v))
    cells.sort(key=lambda kv: kv[0])
    n_evals = len(cells)

    # stage 2: differential evolution around the best cell (short window)
    steps = np.asarray(grid_steps)
    g0 = np.array(cells[0][1])
    de_space = FitSpace(space.names[:4],
                        np.maximum(g0 - 2 * steps, lo4),
                        np.minimum(g0 + 2 * steps, hi4), ("global",) * 4)
    de = differential_evolution(
        lambda v: coarse_sse(v, fitters0, n_pts0) / sum(n_pts0), de_space, config)
    n_evals += de.n_evals
    g_de = np.array([de.params[n] for n in de_space.names])

    # stage 3: window ladder from the DE result and the next-best grid cells
    candidates = [g_de] + [np.array(v) for _, v in cells[1:3]]
    best_x, best_mse = None, math.inf
    if not polish:
        fitters_full, n_full = window_fitters(1.0)
        x = np.clip(locals_for(g_de, fitters_full, n_full),
                    space.lower, space.upper)
        best_x = x
        best_mse = float(np.mean(joint_residual_window(x, n_full, n_total) ** 2))
    else:
        fitters_full, n_full = window_fitters(1.0)
        for g in candidates:
            x = np.clip(locals_for(g, fitters0, n_pts0),
                        space.lower, space.upper)
            x, n_evals = ladder_polish(x, n_evals)
            mse = float(np.mean(joint_residual_window(x, n_full, n_total) ** 2))
            if mse < best_mse:
                best_x, best_mse = x, mse

    def exact_global_mse(globals_vec) -> float:
        sse = 0.0
        for th, t, fitter in zip(thetas, times_list, fitters_full):
            try:
                p = _modulation_for(globals_vec, th, t, fixed, sensor)
            except ValueError:
                return math.inf
            sse += fitter.refine(p)[3]
        return sse / n_total

    params = dict(zip(space.names, best_x))
    sigma = quadratic_uncertainty(exact_global_mse, best_x[:4],
                                  scales=np.array([1e6, 1e6, 1e-2, 1e6]))
    uncertainty = dict(zip(space.names[:4], sigma))
    per_ds = {d: {"c": best_x[4 + 3 * d],
                  "t_1e": 10.0 ** best_x[5 + 3 * d],
                  "beta": best_x[6 + 3 * d]} for d in range(n_data)}
    return FitResult(params=params, mse=best_mse, n_evals=n_evals,
                     seed=config.seed, uncertainty=uncertainty,
                     per_dataset_locals=per_ds)


def pooled_mse_fixed_hyperfine(datasets, globals_vec, fixed: HyperfineFitFixed,
                               sensor: SensorParams | None = None) -> float:
    """Pooled MSE with the hyperfine globals frozen; only envelope locals fitted.

    This is the benchmark mode: rank candidate parameter sets by how well they
    explain the same data when each is given its best phenomenological
    envelope.
    """
    if sensor is None:
        from .constants import GAMMA_PERP, GAMMA_Z, ZERO_FIELD_SPLITTING
        sensor = SensorParams(ZERO_FIELD_SPLITTING, GAMMA_Z, GAMMA_PERP)
    sse = 0.0
    n_total = 0
    for th, tr in datasets:
        t = np.asarray(tr.times, float)
        y = np.asarray(tr.values, float)
        p = _modulation_for(globals_vec, float(th), t, fixed, sensor)
        sse += _fit_envelope_locals(t, y, p)[3]
        n_total += t.size
    return sse / n_total


# ---------------------------------------------------------------------------
# Stretched-exponential and Rabi fits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StretchedExpFit:
    t2: float
    beta: float
    amplitude: float
    diagnostic: str = ""

    @property
    def decaying(self) -> bool:
        return math.isfinite(self.t2)


def stretched_exp_fit(trace, envelope=None) -> StretchedExpFit:
    """Fit C(T) = amplitude * env(T) * exp(-(T/T2)^beta).

    ``envelope`` is an optional callable giving the coherent modulation
    prefactor (1 when omitted).  A trace that never decays returns a
    T2 = +inf sentinel with a diagnostic instead of a spurious fit.
    """
    t = np.asarray(trace.times, float)
    y = np.asarray(trace.values, float)
    if t.size < 5:
        raise ValueError("need at least 5 points")
    if np.any(y <= 0) or np.any(y > 1.2):
        raise ValueError("coherence values must lie in (0, 1.2]")
    env = np.ones_like(t) if envelope is None else np.asarray(envelope(t), float)
    ratio = y / np.where(env == 0, 1e-300, env)
    if np.min(ratio) > np.exp(-0.1) * ratio[0]:
        return StretchedExpFit(math.inf, math.nan, float(ratio[0]),
                               diagnostic="trace does not decay within its window")

    below = np.nonzero(ratio <= ratio[0] * np.exp(-1.0))[0]
    t2_guess = t[below[0]] if below.size else t[-1]

    def model(x):
        amp, lt2, beta = x
        return amp * env * np.exp(-(t / 10.0 ** lt2) ** beta) - y

    x0 = np.array([ratio[0], np.log10(max(t2_guess, 1e-9)), 1.5])
    res = least_squares(model, x0,
                        bounds=([1e-3, -9.0, 0.2], [1.3, 1.0, 6.0]),
                        method="trf", xtol=1e-14, ftol=1e-14, max_nfev=400)
    amp, lt2, beta = res.x
    return StretchedExpFit(10.0 ** lt2, float(beta), float(amp))


@dataclass(frozen=True)
class RabiFit:
    omega: float       # Hz, linear Rabi frequency Omega/2pi
    t_rabi: float      # s
    c0: float


def rabi_fit(values, t) -> RabiFit:
    """Fit c(t) = -c0 [1/2 - cos(2 pi f t) exp(-t/T_rabi) / 2].

    The oscillation frequency is seeded from the FFT; absence of a spectral
    peak at least 3x above the noise floor raises.
    """
    t = np.asarray(t, float)
    y = np.asarray(values, float)
    if t.size < 8:
        raise ValueError("need at least 8 samples")
    dt = np.median(np.diff(t))
    spec = np.abs(np.fft.rfft(y - np.mean(y)))
    freqs = np.fft.rfftfreq(t.size, dt)
    if spec.size < 3:
        raise ValueError("trace too short for spectral peak detection")
    k = int(np.argmax(spec[1:])) + 1
    floor = np.median(spec[1:]) + 1e-12 * max(np.max(np.abs(y)), 1.0)
    if spec[k] < 3 * floor:
        raise ValueError("no Rabi oscillation detected (FFT peak below 3x noise floor)")
    f0 = freqs[k]

    def model(tt, c0, f, t_r):
        return -c0 * (0.5 - 0.5 * np.cos(TWO_PI * f * tt) * np.exp(-tt / t_r))

    p0 = [max(-2 * np.min(y), 0.1), f0, t[-1]]
    popt, _ = curve_fit(model, t, y, p0=p0, maxfev=20000)
    c0, f, t_r = popt
    return RabiFit(float(abs(f)), float(abs(t_r)), float(c0))
