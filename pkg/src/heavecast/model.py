"""Bayesian linear adjustment of the physics forecast.

Two model variants share the mean structure y = beta0 + beta1 * x + error:

* basic  -- independent Gaussian errors with a common variance.
* hybrid -- the error carries lagged-residual (AR(2)) terms and the noise
  standard deviation scales with the physics forecast x, so large forecast
  heave implies proportionally larger uncertainty.

Residual lags follow measurement time: eps_{t-1} = y_{t-1} - beta0 -
beta1 * x_{t-1}. Rows whose hourly predecessor is missing (post-gap rows)
have the corresponding lag set to zero, its unconditional mean. The first
two rows of a training set act only as lag providers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .datasets import HorizonDataset

__all__ = [
    "PriorSet",
    "ModelSpec",
    "PosteriorSamples",
    "PredictiveDistribution",
    "residuals",
    "log_posterior",
    "posterior_predictive",
    "map_sigma",
    "credible_interval",
    "conditional_moments",
]

DEFAULT_X_FLOOR = 0.01  # m; keeps the scaled-noise likelihood proper as x -> 0


@dataclass(frozen=True)
class PriorSet:
    """Prior hyperparameters.

    beta0 ~ N(mean, var); beta1 ~ N(mean, var) truncated to (0, inf);
    (phi1, phi2) ~ independent N(0, phi_sd^2) jointly truncated to the AR(2)
    stationarity triangle; sigma ~ half-Gaussian(sigma_scale).
    """

    beta0_mean: float = 0.0
    beta0_var: float = 3.0
    beta1_mean: float = 1.0
    beta1_var: float = 3.0
    phi_sd: float = 1.0
    sigma_scale: float = 1.0

    def __post_init__(self):
        for v in (self.beta0_var, self.beta1_var, self.phi_sd, self.sigma_scale):
            if not (np.isfinite(v) and v > 0.0):
                raise ValueError("prior scales must be finite and positive")


@dataclass(frozen=True)
class ModelSpec:
    """Which adjustment model to fit, with its priors, for one horizon."""

    kind: str  # "basic" | "hybrid"
    priors: PriorSet = field(default_factory=PriorSet)
    horizon: int = 0

    def __post_init__(self):
        if self.kind not in ("basic", "hybrid"):
            raise ValueError("kind must be 'basic' or 'hybrid'")

    @property
    def param_names(self) -> tuple[str, ...]:
        if self.kind == "basic":
            return ("beta0", "beta1", "sigma")
        return ("beta0", "beta1", "phi1", "phi2", "sigma")

    @property
    def n_params(self) -> int:
        return len(self.param_names)


@dataclass(frozen=True)
class PosteriorSamples:
    """Retained MCMC draws plus convergence diagnostics."""

    draws: np.ndarray  # (n_draws, n_params)
    param_names: tuple[str, ...]
    chain_ids: np.ndarray
    diagnostics: dict  # per-parameter {"rhat": ..., "ess": ...}
    acceptance_rate: float

    def column(self, name: str) -> np.ndarray:
        return self.draws[:, self.param_names.index(name)]

    def __len__(self) -> int:
        return self.draws.shape[0]


@dataclass(frozen=True)
class PredictiveDistribution:
    """Posterior-predictive draws of y* at one valid time."""

    valid_time: np.datetime64
    draws: np.ndarray
    levels: tuple[float, ...] = (0.05, 0.5, 0.95)

    @property
    def mean(self) -> float:
        return float(np.mean(self.draws))

    @property
    def summaries(self) -> dict[str, float]:
        out = {"mean": self.mean}
        qs = np.quantile(self.draws, self.levels)
        for lv, q in zip(self.levels, qs):
            out[f"p{round(lv * 100):02d}"] = float(q)
        return out


def in_support(params: np.ndarray, spec: ModelSpec) -> bool:
    """Prior support: beta1 > 0, sigma > 0 and AR(2) stationarity."""
    beta1, sigma = params[1], params[-1]
    if not (beta1 > 0.0 and sigma > 0.0):
        return False
    if spec.kind == "hybrid":
        p1, p2 = params[2], params[3]
        if not (-1.0 < p2 < 1.0 and p1 + p2 < 1.0 and p2 - p1 < 1.0):
            return False
    return True


def _log_prior(params: np.ndarray, spec: ModelSpec) -> float:
    pr = spec.priors
    beta0, beta1, sigma = params[0], params[1], params[-1]
    lp = norm.logpdf(beta0, pr.beta0_mean, np.sqrt(pr.beta0_var))
    # truncation of beta1 to (0, inf) renormalises by the prior mass above zero
    lp += norm.logpdf(beta1, pr.beta1_mean, np.sqrt(pr.beta1_var))
    lp -= np.log(norm.sf(0.0, pr.beta1_mean, np.sqrt(pr.beta1_var)))
    lp += np.log(2.0) + norm.logpdf(sigma, 0.0, pr.sigma_scale)
    if spec.kind == "hybrid":
        # joint truncation to the stationarity triangle contributes only a
        # constant, which is irrelevant to sampling and omitted here
        lp += norm.logpdf(params[2], 0.0, pr.phi_sd)
        lp += norm.logpdf(params[3], 0.0, pr.phi_sd)
    return float(lp)


def residuals(params: np.ndarray, ds: HorizonDataset) -> np.ndarray:
    """Plain adjustment residuals eps_t = y_t - beta0 - beta1 * x_t."""
    beta0, beta1 = float(params[0]), float(params[1])
    return ds.y - beta0 - beta1 * ds.x


def _lagged(eps: np.ndarray, post_gap: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Shifted residual series with post-gap lags zeroed."""
    e1 = np.zeros_like(eps)
    e2 = np.zeros_like(eps)
    e1[1:] = eps[:-1]
    e2[2:] = eps[:-2]
    e1[post_gap] = 0.0
    # lag-2 needs both predecessors present
    bad2 = post_gap.copy()
    bad2[1:] |= post_gap[:-1]
    e2[bad2] = 0.0
    return e1, e2


def conditional_moments(
    params: np.ndarray,
    x: np.ndarray,
    y: np.ndarray,
    post_gap: np.ndarray,
    spec: ModelSpec,
    x_floor: float = DEFAULT_X_FLOOR,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-row conditional mean and noise scale, teacher-forcing the lags.

    For the basic model the mean is beta0 + beta1*x and the scale is sigma.
    For the hybrid model the mean adds phi1*eps_{t-1} + phi2*eps_{t-2} and
    the scale is max(x, x_floor) * sigma.
    """
    beta0, beta1, sigma = float(params[0]), float(params[1]), float(params[-1])
    mean = beta0 + beta1 * x
    if spec.kind == "basic":
        return mean, np.full_like(x, sigma)
    p1, p2 = float(params[2]), float(params[3])
    e1, e2 = _lagged(y - mean, post_gap)
    mean = mean + p1 * e1 + p2 * e2
    scale = np.maximum(x, x_floor) * sigma
    return mean, scale


def log_posterior(
    params: np.ndarray,
    ds: HorizonDataset,
    spec: ModelSpec,
    x_floor: float = DEFAULT_X_FLOOR,
) -> float:
    """Unnormalised log posterior density; -inf outside the prior support.

    Every row contributes a Gaussian term; rows whose lagged residuals are
    unavailable (the first rows and post-gap rows) have those lags zeroed,
    matching a residual recursion initialised at its unconditional mean.
    With phi1 = phi2 = 0 and x identically 1 the hybrid likelihood is
    therefore exactly the basic one.
    """
    params = np.asarray(params, dtype=float)
    if params.shape != (spec.n_params,):
        raise ValueError(f"expected {spec.n_params} parameters for {spec.kind}")
    if not in_support(params, spec):
        return -np.inf
    mean, scale = conditional_moments(params, ds.x, ds.y, ds.post_gap, spec, x_floor)
    z = (ds.y - mean) / scale
    loglik = -0.5 * np.sum(z * z) - np.sum(np.log(scale)) - 0.5 * z.size * np.log(2.0 * np.pi)
    return float(loglik) + _log_prior(params, spec)


def posterior_predictive(
    samples: PosteriorSamples,
    ds: HorizonDataset,
    spec: ModelSpec,
    seed: int,
    x_floor: float = DEFAULT_X_FLOOR,
    context: HorizonDataset | None = None,
    levels: tuple[float, ...] = (0.05, 0.5, 0.95),
    allow_reset: bool = True,
) -> list[PredictiveDistribution]:
    """Posterior-predictive distributions for every row of ds.

    One y* draw per retained parameter draw, N(mean_t, scale_t^2), with
    lagged residuals teacher-forced from the observed y series. A context
    dataset (typically the training tail) supplies the lags of the first
    rows when it abuts ds in time.
    """
    x, y, post_gap, n_ctx = ds.x, ds.y, ds.post_gap, 0
    if context is not None and len(context) >= 1:
        tail = context.rows(slice(max(0, len(context) - 2), len(context)))
        if ds.valid_times.size and tail.valid_times[-1] + np.timedelta64(1, "h") == ds.valid_times[0]:
            n_ctx = len(tail)
            x = np.concatenate([tail.x, x])
            y = np.concatenate([tail.y, y])
            vt = np.concatenate([tail.valid_times, ds.valid_times])
            post_gap = np.ones(vt.size, dtype=bool)
            post_gap[1:] = np.diff(vt) != np.timedelta64(1, "h")
    if spec.kind == "hybrid" and not allow_reset and bool(np.any(post_gap)):
        raise ValueError("lagged residuals unavailable and post-gap reset disallowed")

    draws = samples.draws
    n_draws, n_rows = draws.shape[0], x.size
    beta0 = draws[:, 0:1]
    beta1 = draws[:, 1:2]
    sigma = draws[:, -1:]
    mean = beta0 + beta1 * x[None, :]
    if spec.kind == "hybrid":
        eps = y[None, :] - mean
        e1 = np.zeros_like(eps)
        e2 = np.zeros_like(eps)
        e1[:, 1:] = eps[:, :-1]
        e2[:, 2:] = eps[:, :-2]
        bad2 = post_gap.copy()
        bad2[1:] |= post_gap[:-1]
        e1[:, post_gap] = 0.0
        e2[:, bad2] = 0.0
        mean = mean + draws[:, 2:3] * e1 + draws[:, 3:4] * e2
        scale = np.maximum(x, x_floor)[None, :] * sigma
    else:
        scale = np.broadcast_to(sigma, (n_draws, n_rows))
    rng = np.random.default_rng(seed)
    ystar = mean + scale * rng.standard_normal((n_draws, n_rows))
    return [
        PredictiveDistribution(valid_time=ds.valid_times[i - n_ctx], draws=ystar[:, i], levels=levels)
        for i in range(n_ctx, n_rows)
    ]


def map_sigma(samples: PosteriorSamples) -> float:
    """Histogram-mode MAP estimate of the noise scale sigma."""
    draws = samples.column("sigma")
    if draws.size < 100:
        raise ValueError("need at least 100 draws for a mode estimate")
    if np.ptp(draws) == 0.0:
        return float(draws[0])
    n_bins = int(np.clip(np.sqrt(draws.size), 10, 500))
    counts, edges = np.histogram(draws, bins=n_bins)
    k = int(np.argmax(counts))
    return float(0.5 * (edges[k] + edges[k + 1]))


def credible_interval(
    dist: PredictiveDistribution, levels: tuple[float, ...]
) -> dict[float, float]:
    """Empirical quantiles (interpolated order statistics) of the draws."""
    if dist.draws.size < 2:
        raise ValueError("need at least two draws")
    levels = tuple(levels)
    if any(not 0.0 < lv < 1.0 for lv in levels):
        raise ValueError("levels must lie in (0, 1)")
    qs = np.quantile(dist.draws, levels)
    return {lv: float(q) for lv, q in zip(levels, qs)}
