"""Gibbs data-augmentation sampler for population size and model parameters.

Each sweep draws, in order: the population size from its label-free
posterior, stratum memberships for the unsampled block, link counts for all
unobserved pairs, then the conjugate Dirichlet/Beta parameter updates given
the completed realization.

Two state-size reductions keep a sweep at O(G^2) instead of O(N^2): the
unsampled units' strata are exchangeable given the sample, so a multinomial
count vector replaces per-unit labels; and the parameter posteriors consume
only link counts and pair totals, so unobserved links are drawn as binomial
pair counts rather than materialized edges. Both substitutions are
distribution-exact.
"""

import logging
import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.special import softmax

from .likelihoods import escape_probability, stratum_escape_log_weights
from .logmath import log_binom
from .sampling import IgnoredData
from .sbm import (
    SbmParams,
    SufficientCounts,
    ValidationError,
    _freeze,
    pair_totals_from_counts,
    upper_indices,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class McmcConfig:
    """Chain settings and priors.

    The flat prior on the population size is improper, so its posterior is
    truncated at a cap: ``n_max_cap`` when given, otherwise
    ``cap_multiplier`` times the sampled count. Cap hits are counted and
    reported so truncation pressure is visible.
    """

    chain_length: int = 1000
    burn_in_fraction: float = 0.1
    n_max_cap: int | None = None
    cap_multiplier: float = 100.0
    prior_alpha: float | tuple[float, ...] = 1.0
    prior_gamma: tuple[float, float] = (1.0, 1.0)
    seed: int | None = None

    def __post_init__(self):
        if self.chain_length < 1:
            raise ValidationError("chain_length must be >= 1")
        if not (0.0 <= self.burn_in_fraction < 1.0):
            raise ValidationError("burn_in_fraction must be in [0, 1)")
        if self.cap_multiplier < 1.0:
            raise ValidationError("cap_multiplier must be >= 1")
        if np.any(np.asarray(self.prior_alpha) <= 0) or min(self.prior_gamma) <= 0:
            raise ValidationError("prior hyperparameters must be positive")

    def effective_cap(self, n_sampled: int) -> int:
        cap = self.n_max_cap
        if cap is None:
            cap = max(int(math.ceil(self.cap_multiplier * n_sampled)), n_sampled)
        if cap < n_sampled:
            raise ValidationError(f"cap {cap} below sampled count {n_sampled}")
        return cap


@lru_cache(maxsize=64)
def _log_binom_support(n0: int, n1: int, cap: int) -> np.ndarray:
    """log C(n - n0, n1) over the truncated support n0+n1..cap (read-only)."""
    n_grid = np.arange(n0 + n1, cap + 1, dtype=np.int64)
    vals = log_binom(n_grid - n0, n1)
    return _freeze(vals)


def population_size_log_weights(n0: int, n1: int, log_one_minus_p: float, cap: int):
    """Unnormalized log posterior of N on its truncated support.

    Returns ``(support, log_weights)``. The weight at N is
    C(N - n0, n1) * (1 - p)^(N - n0 - n1); in terms of the excess
    M = N - n0 - n1 this is a negative-binomial kernel with n1 + 1 successes
    at success probability p, truncated at the cap.
    """
    support = np.arange(n0 + n1, cap + 1, dtype=np.int64)
    excess = np.arange(support.size, dtype=np.float64)
    if np.isneginf(log_one_minus_p):
        tail = np.full(support.size, -np.inf)
        tail[0] = 0.0
    else:
        tail = excess * log_one_minus_p
    return support, _log_binom_support(n0, n1, cap) + tail


def draw_population_size(
    data: IgnoredData,
    params: SbmParams,
    cfg: McmcConfig,
    rng: np.random.Generator,
    size: int | None = None,
):
    """Draw N from its posterior given the label-free data and current params.

    Vectorized over ``size`` draws (inverse CDF on the truncated support);
    with ``size=None`` a single int is returned.
    """
    cap = cfg.effective_cap(data.n_sampled)
    escape = escape_probability(data.strata_s0, params)
    support, log_w = population_size_log_weights(
        data.n0, data.n1, escape.log_one_minus_p, cap
    )
    weights = np.exp(log_w - log_w.max())
    cdf = np.cumsum(weights)
    u = rng.random(size=size) * cdf[-1]
    idx = np.searchsorted(cdf, u, side="right")
    drawn = support[np.minimum(idx, support.size - 1)]
    return int(drawn) if size is None else drawn


def imputation_probabilities(data: IgnoredData, params: SbmParams) -> np.ndarray:
    """Stratum distribution of one unsampled unit given the observed data.

    Proportional to lambda_k times the probability of avoiding every
    initial-sample member; identical for all unsampled units.
    """
    counts = data.strata_counts_s0(params.n_strata)
    log_w = stratum_escape_log_weights(counts, params)
    if np.all(np.isneginf(log_w)):
        raise ValidationError("inconsistent state: an unsampled unit cannot avoid the initial sample")
    return softmax(log_w)


def impute_strata(
    data: IgnoredData, n: int, params: SbmParams, rng: np.random.Generator
) -> np.ndarray:
    """Impute strata for the N - n0 - n1 unsampled units, as counts per stratum."""
    n_missing = n - data.n_sampled
    if n_missing < 0:
        raise ValidationError("population size below sampled count")
    if n_missing == 0:
        return np.zeros(params.n_strata, dtype=np.int64)
    return rng.multinomial(n_missing, imputation_probabilities(data, params)).astype(np.int64)


def impute_link_counts(
    data: IgnoredData,
    n: int,
    strata_all_counts: np.ndarray,
    params: SbmParams,
    rng: np.random.Generator,
) -> np.ndarray:
    """Impute link counts for every pair not touched by the initial sample.

    Pairs with both endpoints outside the initial sample (wave-wave,
    wave-unsampled, unsampled-unsampled) are the unobserved ones; for each
    stratum pair the count is Binomial(pairs available, beta).
    """
    g = params.n_strata
    strata_all_counts = np.asarray(strata_all_counts, dtype=np.int64)
    if int(strata_all_counts.sum()) != n:
        raise ValidationError("stratum counts do not sum to the population size")
    outside = strata_all_counts - data.strata_counts_s0(g)
    if np.any(outside < data.strata_counts_s1(g)):
        raise ValidationError("stratum counts inconsistent with the observed wave")
    totals = pair_totals_from_counts(outside)
    iu = upper_indices(g)
    draws = rng.binomial(totals[iu], params.beta[iu])
    out = np.zeros((g, g), dtype=np.int64)
    out[iu] = draws
    out.T[iu] = draws
    return out


def lambda_posterior_params(strata_counts: np.ndarray, cfg: McmcConfig) -> np.ndarray:
    alpha = np.asarray(cfg.prior_alpha, dtype=np.float64)
    return np.asarray(strata_counts, dtype=np.float64) + alpha


def beta_posterior_params(counts: SufficientCounts, cfg: McmcConfig):
    """Per-pair Beta parameters (successes + g1, failures + g2)."""
    g1, g2 = cfg.prior_gamma
    a = counts.link_counts + g1
    b = counts.pair_totals - counts.link_counts + g2
    return a.astype(np.float64), b.astype(np.float64)


def draw_lambda(strata_counts, cfg: McmcConfig, rng: np.random.Generator) -> np.ndarray:
    return rng.dirichlet(lambda_posterior_params(strata_counts, cfg))


def draw_beta(counts: SufficientCounts, cfg: McmcConfig, rng: np.random.Generator) -> np.ndarray:
    a, b = beta_posterior_params(counts, cfg)
    g = counts.strata_counts.size
    iu = upper_indices(g)
    draws = rng.beta(a[iu], b[iu])
    beta = np.zeros((g, g))
    beta[iu] = draws
    beta.T[iu] = draws
    return beta


def assemble_full_counts(
    data: IgnoredData, strata_unsampled: np.ndarray, imputed_links: np.ndarray, g: int
) -> SufficientCounts:
    """Sufficient counts of the completed realization: observed plus imputed."""
    strata_counts = (
        data.strata_counts_s0(g) + data.strata_counts_s1(g) + np.asarray(strata_unsampled, dtype=np.int64)
    )
    return SufficientCounts(
        strata_counts=strata_counts,
        link_counts=data.observed_link_counts(g) + np.asarray(imputed_links, dtype=np.int64),
        pair_totals=pair_totals_from_counts(strata_counts),
    )


@dataclass(frozen=True)
class AugmentedState:
    """One Gibbs state: current N, imputed stratum counts for the unsampled
    block, imputed link counts, and current (lambda, beta)."""

    n: int
    strata_unsampled: np.ndarray
    imputed_link_counts: np.ndarray
    params: SbmParams

    def __post_init__(self):
        object.__setattr__(
            self, "strata_unsampled", _freeze(np.asarray(self.strata_unsampled, dtype=np.int64))
        )
        object.__setattr__(
            self, "imputed_link_counts", _freeze(np.asarray(self.imputed_link_counts, dtype=np.int64))
        )


def initial_state(data: IgnoredData, g: int) -> AugmentedState:
    """Overdispersed-but-plausible start: sample stratum proportions, smoothed
    observed link fractions, and twice the sampled count for N."""
    counts_s = data.strata_counts_s0(g) + data.strata_counts_s1(g)
    lam0 = counts_s / data.n_sampled if data.n_sampled else np.full(g, 1.0 / g)
    m_obs = data.observed_link_counts(g)
    t_obs = data.observed_pair_totals(g)
    beta0 = (m_obs + 1.0) / (t_obs + 2.0)
    beta0 = np.minimum(np.maximum(beta0, 0.0), 1.0)
    return AugmentedState(
        n=2 * data.n_sampled,
        strata_unsampled=np.zeros(g, dtype=np.int64),
        imputed_link_counts=np.zeros((g, g), dtype=np.int64),
        params=SbmParams(lam=lam0, beta=beta0),
    )


def gibbs_sweep(
    state: AugmentedState, data: IgnoredData, cfg: McmcConfig, rng: np.random.Generator
) -> AugmentedState:
    """One full scan; sub-draws happen in a fixed order so the kernel is a
    well-defined Gibbs cycle."""
    g = state.params.n_strata
    n_new = draw_population_size(data, state.params, cfg, rng)
    strata_un = impute_strata(data, n_new, state.params, rng)
    all_counts = data.strata_counts_s0(g) + data.strata_counts_s1(g) + strata_un
    imputed = impute_link_counts(data, n_new, all_counts, state.params, rng)
    counts = assemble_full_counts(data, strata_un, imputed, g)
    lam = draw_lambda(counts.strata_counts, cfg, rng)
    beta = draw_beta(counts, cfg, rng)
    return AugmentedState(
        n=n_new,
        strata_unsampled=strata_un,
        imputed_link_counts=imputed,
        params=SbmParams(lam=lam, beta=beta),
    )


@dataclass(frozen=True)
class BayesEstimates:
    """Posterior means (and spreads) over the retained part of a chain."""

    n_mean: float
    n_rounded: int
    lam: np.ndarray
    beta_upper: np.ndarray
    n_sd: float
    lam_sd: np.ndarray
    beta_upper_sd: np.ndarray


@dataclass(frozen=True)
class ChainTrace:
    """Per-iteration draws of (N, lambda, beta) plus derived summaries."""

    n_draws: np.ndarray
    lam_draws: np.ndarray
    beta_upper_draws: np.ndarray
    burn_in: int
    cap: int
    cap_hits: int
    seed: int | None
    n_strata: int

    @property
    def chain_length(self) -> int:
        return self.n_draws.size

    def retained(self):
        keep = slice(self.burn_in, None)
        return self.n_draws[keep], self.lam_draws[keep], self.beta_upper_draws[keep]

    def estimates(self) -> BayesEstimates:
        n_kept, lam_kept, beta_kept = self.retained()
        n_mean = float(n_kept.mean())
        return BayesEstimates(
            n_mean=n_mean,
            n_rounded=int(round(n_mean)),
            lam=lam_kept.mean(axis=0),
            beta_upper=beta_kept.mean(axis=0),
            n_sd=float(n_kept.std()),
            lam_sd=lam_kept.std(axis=0),
            beta_upper_sd=beta_kept.std(axis=0),
        )


def run_chain(data: IgnoredData, cfg: McmcConfig, n_strata: int | None = None) -> ChainTrace:
    """Run the full augmentation chain and record every state.

    ``n_strata`` defaults to the smallest G consistent with the observed
    labels; pass it explicitly when the population has strata the sample
    missed. Fully deterministic given ``cfg.seed``.
    """
    g = n_strata if n_strata is not None else data.min_strata()
    if data.n_sampled and data.min_strata() > g:
        raise ValidationError("sample contains stratum labels outside 0..G-1")
    cap = cfg.effective_cap(data.n_sampled)
    rng = np.random.default_rng(cfg.seed)
    state = initial_state(data, g)
    length = cfg.chain_length
    n_draws = np.zeros(length, dtype=np.int64)
    lam_draws = np.zeros((length, g))
    beta_draws = np.zeros((length, g * (g + 1) // 2))
    cap_hits = 0
    for it in range(length):
        state = gibbs_sweep(state, data, cfg, rng)
        n_draws[it] = state.n
        lam_draws[it] = state.params.lam
        beta_draws[it] = state.params.beta_upper()
        if state.n == cap:
            cap_hits += 1
    burn = int(length * cfg.burn_in_fraction)
    if cap_hits:
        logger.info("population-size cap %d hit %d times over %d sweeps", cap, cap_hits, length)
    return ChainTrace(
        n_draws=_freeze(n_draws),
        lam_draws=_freeze(lam_draws),
        beta_upper_draws=_freeze(beta_draws),
        burn_in=burn,
        cap=cap,
        cap_hits=cap_hits,
        seed=cfg.seed,
        n_strata=g,
    )


def with_seed(cfg: McmcConfig, seed: int) -> McmcConfig:
    return replace(cfg, seed=seed)
