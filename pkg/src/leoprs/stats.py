"""Distribution fitting for interference samples.

Covers the empirical CDF, the Kolmogorov-Smirnov statistic with the
asymptotic p-value series, extreme-value (GEV) estimation by maximum
likelihood seeded from probability-weighted moments, a six-candidate
goodness-of-fit comparison, and the least-squares regression that maps the
waveform configuration (symbol count, comb size, transmit power) onto the
fitted GEV parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy import stats as spstats
from scipy.special import gamma as gamma_fn

GUMBEL_SHAPE_EPS = 1e-9
EULER_GAMMA = 0.5772156649015329
POSITIVE_SHIFT_EPS = 0.1   # dB margin when shifting data onto positive support
CANDIDATE_ORDER = ("normal", "lognormal", "gamma", "rayleigh", "rician", "gev")


class FitError(Exception):
    """Distribution fit failed; carries the best parameters seen so far."""

    def __init__(self, message, params=None):
        super().__init__(message)
        self.params = params


class RegressionError(Exception):
    """Parameter-model regression failed (insufficient span or rank)."""


class EvaluationError(Exception):
    """A parameter model evaluates outside its valid range."""


# ---------------------------------------------------------------------------
# ECDF and Kolmogorov-Smirnov
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Ecdf:
    """Right-continuous empirical CDF of a finite sample."""

    sorted_samples: np.ndarray

    def __call__(self, x):
        idx = np.searchsorted(self.sorted_samples, x, side="right")
        return idx / len(self.sorted_samples)


def ecdf(samples) -> Ecdf:
    samples = np.asarray(samples, dtype=float)
    if samples.size < 2:
        raise ValueError("need at least two samples")
    if not np.all(np.isfinite(samples)):
        raise ValueError("samples must be finite")
    return Ecdf(sorted_samples=np.sort(samples))


def kolmogorov_p(d: float, n: int) -> float:
    """Asymptotic two-sided KS p-value Q(lambda) with the small-n correction."""
    if d <= 0.0:
        return 1.0
    sqrt_n = math.sqrt(n)
    lam = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d
    total = 0.0
    for j in range(1, 101):
        term = 2.0 * (-1.0) ** (j - 1) * math.exp(-2.0 * j * j * lam * lam)
        total += term
        if abs(term) < 1e-12:
            break
    return min(max(total, 0.0), 1.0)


def ks_test(samples, cdf, p_value_n: int = 1000, rng=None):
    """KS distance between the sample ECDF and a CDF, plus a p-value.

    D is evaluated at both one-sided jumps of every sample point over the
    full sample. The p-value uses an effective sample size of `p_value_n`
    (random subsample when the sample is larger), since at campaign scale
    the raw asymptotic p-value collapses to zero for any realistic D.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.size < 10:
        raise ValueError("need at least 10 samples")
    if not np.all(np.isfinite(samples)):
        raise ValueError("samples must be finite")

    def _d(values):
        x = np.sort(values)
        n = len(x)
        g = np.asarray(cdf(x), dtype=float)
        d_plus = np.max(np.arange(1, n + 1) / n - g)
        d_minus = np.max(g - np.arange(0, n) / n)
        return max(d_plus, d_minus)

    d_full = float(_d(samples))
    if samples.size > p_value_n:
        if rng is None:
            rng = np.random.default_rng(0)
        sub = rng.choice(samples, size=p_value_n, replace=False)
        p = kolmogorov_p(float(_d(sub)), p_value_n)
    else:
        p = kolmogorov_p(d_full, samples.size)
    return d_full, p


# ---------------------------------------------------------------------------
# GEV distribution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GevParams:
    """Extreme-value parameters: shape k, scale sigma, location mu."""

    shape: float
    scale: float
    loc: float

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError("scale must be > 0")


def gev_cdf(x, p: GevParams):
    """CDF exp(-[1 + k (x - mu) / sigma]^(-1/k)), Gumbel limit at k ~ 0.

    Outside the support the value saturates at 0 or 1 by the sign of k.
    """
    x = np.asarray(x, dtype=float)
    z = (x - p.loc) / p.scale
    if abs(p.shape) < GUMBEL_SHAPE_EPS:
        out = np.exp(-np.exp(-z))
    else:
        t = 1.0 + p.shape * z
        with np.errstate(over="ignore"):
            out = np.where(t > 0.0,
                           np.exp(-np.power(np.maximum(t, 1e-300),
                                            -1.0 / p.shape)),
                           1.0 if p.shape < 0 else 0.0)
    return out if out.ndim else float(out)


def gev_pdf(x, p: GevParams):
    """Density of the GEV; zero outside the support."""
    x = np.asarray(x, dtype=float)
    z = (x - p.loc) / p.scale
    if abs(p.shape) < GUMBEL_SHAPE_EPS:
        t = np.exp(-z)
        out = t * np.exp(-t) / p.scale
    else:
        bracket = 1.0 + p.shape * z
        safe = np.maximum(bracket, 1e-300)
        with np.errstate(over="ignore", invalid="ignore"):
            t = np.power(safe, -1.0 / p.shape)
            out = np.where(bracket > 0.0,
                           np.power(safe, -1.0 - 1.0 / p.shape)
                           * np.exp(-t) / p.scale,
                           0.0)
        out = np.nan_to_num(out, nan=0.0, posinf=0.0)
    return out if out.ndim else float(out)


def gev_ppf(q, p: GevParams):
    """Inverse CDF; the module's sampler draws through this."""
    q = np.asarray(q, dtype=float)
    if np.any((q <= 0.0) | (q >= 1.0)):
        raise ValueError("quantile outside (0, 1)")
    if abs(p.shape) < GUMBEL_SHAPE_EPS:
        out = p.loc - p.scale * np.log(-np.log(q))
    else:
        out = p.loc + p.scale * (np.power(-np.log(q), -p.shape) - 1.0) / p.shape
    return out if out.ndim else float(out)


def gev_sample(p: GevParams, n: int, rng) -> np.ndarray:
    """Inverse-CDF sampling of n draws."""
    return gev_ppf(rng.uniform(size=n), p)


def gev_loglik(samples, p: GevParams) -> float:
    """Log-likelihood; -inf when any sample falls outside the support."""
    x = np.asarray(samples, dtype=float)
    z = (x - p.loc) / p.scale
    if abs(p.shape) < GUMBEL_SHAPE_EPS:
        return float(-len(x) * math.log(p.scale) - np.sum(z) - np.sum(np.exp(-z)))
    t = 1.0 + p.shape * z
    if np.any(t <= 0.0):
        return -math.inf
    log_t = np.log(t)
    return float(-len(x) * math.log(p.scale)
                 - (1.0 + 1.0 / p.shape) * np.sum(log_t)
                 - np.sum(np.exp(-log_t / p.shape)))


def gev_pwm_estimate(samples) -> GevParams:
    """Probability-weighted-moment starting point (Hosking's approximation)."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = len(x)
    j = np.arange(n)
    b0 = float(np.mean(x))
    b1 = float(np.sum(j / (n - 1) * x) / n)
    b2 = float(np.sum(j * (j - 1) / ((n - 1) * (n - 2)) * x) / n)
    l1, l2, l3 = b0, 2 * b1 - b0, 6 * b2 - 6 * b1 + b0
    t3 = l3 / l2 if l2 > 0 else 0.0

    c = 2.0 / (3.0 + t3) - math.log(2.0) / math.log(3.0)
    k_h = 7.8590 * c + 2.9554 * c * c   # Hosking sign convention
    if abs(k_h) < 1e-6:
        scale = l2 / math.log(2.0)
        loc = l1 - EULER_GAMMA * scale
        return GevParams(shape=0.0, scale=scale, loc=loc)
    g1 = gamma_fn(1.0 + k_h)
    scale = l2 * k_h / ((1.0 - 2.0 ** (-k_h)) * g1)
    loc = l1 - scale * (1.0 - g1) / k_h
    return GevParams(shape=-k_h, scale=max(scale, 1e-12), loc=loc)


def fit_gev(samples, max_iterations: int = 4000) -> GevParams:
    """Maximum-likelihood GEV fit via a derivative-free simplex search.

    Initialised from probability-weighted moments; the support constraint is
    enforced through a penalty. Parameters are scaled by the initial scale so
    convergence (simplex diameter < 1e-6) is dimensionless.
    """
    x = np.asarray(samples, dtype=float)
    if x.size < 50:
        raise ValueError("need at least 50 samples for a stable fit")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples must be finite")

    init = gev_pwm_estimate(x)
    s0, m0 = init.scale, init.loc

    def negloglik(theta):
        k, s_scaled, m_scaled = theta
        scale = s_scaled * s0
        loc = m0 + m_scaled * s0
        if scale <= 0.0:
            return 1e12 * (1.0 + abs(scale))
        z = (x - loc) / scale
        if abs(k) >= GUMBEL_SHAPE_EPS:
            t = 1.0 + k * z
            worst = float(np.min(t))
            if worst <= 0.0:
                return 1e10 * (1.0 + abs(worst))
        ll = gev_loglik(x, GevParams(shape=k, scale=scale, loc=loc))
        return -ll

    result = optimize.minimize(
        negloglik, x0=np.array([init.shape, 1.0, 0.0]),
        method="Nelder-Mead",
        options={"xatol": 1e-6, "fatol": 1e-10,
                 "maxiter": max_iterations, "maxfev": max_iterations},
    )
    k, s_scaled, m_scaled = result.x
    best = GevParams(shape=float(k), scale=float(max(s_scaled * s0, 1e-12)),
                     loc=float(m0 + m_scaled * s0))
    if not result.success:
        raise FitError("simplex search did not converge", params=best)
    return best


# ---------------------------------------------------------------------------
# Candidate comparison
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CandidateFit:
    name: str
    params: dict
    ks_d: float
    p_value: float


@dataclass(frozen=True)
class FitReport:
    candidates: tuple
    winner: str
    shift_dbw: float    # offset used to put data on positive support
    n_samples: int

    def by_name(self, name: str) -> CandidateFit:
        for c in self.candidates:
            if c.name == name:
                return c
        raise KeyError(name)


def fit_candidates(samples, p_value_n: int = 1000, rng=None) -> FitReport:
    """Fit all six candidate distributions and rank them by KS distance.

    Positive-support families (lognormal, gamma, rayleigh, rician) are fitted
    on x - min(x) + 0.1 dB; the shift is recorded in the report. Ties on D
    break by candidate order.
    """
    x = np.asarray(samples, dtype=float)
    if x.size < 50:
        raise ValueError("need at least 50 samples")
    if float(np.std(x)) == 0.0:
        raise FitError("degenerate samples with zero variance")

    shift = float(np.min(x)) - POSITIVE_SHIFT_EPS
    y = x - shift

    fits = []

    mu, sd = float(np.mean(x)), float(np.std(x))
    fits.append(("normal", {"mean": mu, "std": sd},
                 lambda v: spstats.norm.cdf(v, loc=mu, scale=sd)))

    log_y = np.log(y)
    lm, ls = float(np.mean(log_y)), float(np.std(log_y))
    fits.append(("lognormal", {"log_mean": lm, "log_std": ls, "shift": shift},
                 lambda v: spstats.lognorm.cdf(v - shift, s=ls, scale=math.exp(lm))))

    ga, _, gscale = spstats.gamma.fit(y, floc=0.0)
    fits.append(("gamma", {"a": float(ga), "scale": float(gscale), "shift": shift},
                 lambda v: spstats.gamma.cdf(v - shift, ga, scale=gscale)))

    rayleigh_scale = float(math.sqrt(np.mean(y ** 2) / 2.0))
    fits.append(("rayleigh", {"scale": rayleigh_scale, "shift": shift},
                 lambda v: spstats.rayleigh.cdf(v - shift, scale=rayleigh_scale)))

    rb, _, rscale = spstats.rice.fit(y, floc=0.0)
    fits.append(("rician", {"b": float(rb), "scale": float(rscale), "shift": shift},
                 lambda v: spstats.rice.cdf(v - shift, rb, scale=rscale)))

    gev = fit_gev(x)
    fits.append(("gev", {"shape": gev.shape, "scale": gev.scale, "loc": gev.loc},
                 lambda v: gev_cdf(v, gev)))

    candidates = []
    for name, params, cdf in fits:
        d, p = ks_test(x, cdf, p_value_n=p_value_n, rng=rng)
        candidates.append(CandidateFit(name=name, params=params,
                                       ks_d=float(d), p_value=float(p)))
    winner = min(candidates, key=lambda c: (c.ks_d, CANDIDATE_ORDER.index(c.name)))
    return FitReport(candidates=tuple(candidates), winner=winner.name,
                     shift_dbw=shift, n_samples=int(x.size))


# ---------------------------------------------------------------------------
# Parameter models vs waveform configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CsModel:
    """Regression coefficients for one comb size."""

    a1: float
    a2: float
    a3: float
    b1: float
    b2: float
    c1: float
    c2: float
    rms_mu: float = 0.0
    rms_sigma: float = 0.0
    rms_k: float = 0.0


@dataclass(frozen=True)
class GevModel:
    """Per-comb-size parameter models:
    mu = a1/sqrt(m) + a2 * ptx + a3, sigma = b1 * m + b2, k = c1/sqrt(m) + c2.
    """

    per_cs: dict = field(default_factory=dict)   # cs -> CsModel

    def to_dict(self) -> dict:
        return {str(cs): vars(m) for cs, m in sorted(self.per_cs.items())}


_MU_COLUMNS = ("inv_sqrt_m", "ptx_dbw", "intercept")


def _solve_ls(design: np.ndarray, target: np.ndarray, columns):
    """Least squares through an orthogonal factorisation, with a rank check."""
    _, sv, vt = np.linalg.svd(design, full_matrices=False)
    if sv[-1] < 1e-10 * sv[0]:
        weakest = columns[int(np.argmax(np.abs(vt[-1])))]
        raise RegressionError(f"design matrix is rank deficient in column "
                              f"'{weakest}'")
    beta, _, _, _ = np.linalg.lstsq(design, target, rcond=None)
    residual = target - design @ beta
    rms = float(np.sqrt(np.mean(residual ** 2)))
    return beta, rms


def fit_parameter_models(fits) -> GevModel:
    """Regress fitted GEV parameters against the waveform configuration.

    `fits` holds (m, ptx_dbw, cs, GevParams) tuples. Needs at least three
    distinct m values and two distinct transmit powers per comb size.
    """
    by_cs: dict = {}
    for m, ptx, cs, params in fits:
        by_cs.setdefault(cs, []).append((m, ptx, params))

    per_cs = {}
    for cs, rows in sorted(by_cs.items()):
        ms = sorted({m for m, _, _ in rows})
        ptxs = sorted({p for _, p, _ in rows})
        if len(ms) < 3:
            raise RegressionError(
                f"cs={cs}: need >= 3 distinct m values, got {ms}")
        if len(ptxs) < 2:
            raise RegressionError(
                f"cs={cs}: need >= 2 distinct transmit powers, got {ptxs}")

        m_arr = np.array([m for m, _, _ in rows], dtype=float)
        p_arr = np.array([p for _, p, _ in rows], dtype=float)
        mus = np.array([g.loc for _, _, g in rows])
        sigmas = np.array([g.scale for _, _, g in rows])
        ks = np.array([g.shape for _, _, g in rows])

        x_mu = np.column_stack([1.0 / np.sqrt(m_arr), p_arr, np.ones_like(m_arr)])
        beta_mu, rms_mu = _solve_ls(x_mu, mus, _MU_COLUMNS)

        x_sig = np.column_stack([m_arr, np.ones_like(m_arr)])
        beta_sig, rms_sig = _solve_ls(x_sig, sigmas, ("m", "intercept"))

        x_k = np.column_stack([1.0 / np.sqrt(m_arr), np.ones_like(m_arr)])
        beta_k, rms_k = _solve_ls(x_k, ks, ("inv_sqrt_m", "intercept"))

        per_cs[cs] = CsModel(
            a1=float(beta_mu[0]), a2=float(beta_mu[1]), a3=float(beta_mu[2]),
            b1=float(beta_sig[0]), b2=float(beta_sig[1]),
            c1=float(beta_k[0]), c2=float(beta_k[1]),
            rms_mu=rms_mu, rms_sigma=rms_sig, rms_k=rms_k,
        )
    return GevModel(per_cs=per_cs)


def model_eval(model: GevModel, m: int, ptx_dbw: float, cs: int) -> GevParams:
    """Evaluate the per-cs parameter model at a waveform configuration."""
    if cs not in model.per_cs:
        raise EvaluationError(f"no model for comb size {cs}")
    c = model.per_cs[cs]
    inv_sqrt_m = 1.0 / math.sqrt(m)
    sigma = c.b1 * m + c.b2
    if sigma <= 0.0:
        raise EvaluationError(f"scale model gives sigma={sigma:.4f} <= 0 at m={m}")
    return GevParams(
        shape=c.c1 * inv_sqrt_m + c.c2,
        scale=sigma,
        loc=c.a1 * inv_sqrt_m + c.a2 * ptx_dbw + c.a3,
    )
