"""Observed and label-free likelihoods of a one-wave snowball sample.

Both likelihoods share their middle factors (sampled strata plus observed
link indicators); they differ only in a combinatorial head term. Computing
the shared part once makes the algebraic relationship between the two hold
to the last bit.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, xlog1py, xlogy

from .logmath import count_times_log, log_binom
from .sampling import IgnoredData
from .sbm import SbmParams, ValidationError, upper_indices


@dataclass(frozen=True)
class EscapeProbability:
    """Probability that a unit outside the initial sample is linked to none
    of its members, given the initial sample's strata. Carried in both plain
    and log form; the log form is what large-N likelihood tails need."""

    one_minus_p: float
    log_one_minus_p: float

    @property
    def p(self) -> float:
        return 1.0 - self.one_minus_p


def stratum_escape_log_weights(strata_counts_s0: np.ndarray, params: SbmParams) -> np.ndarray:
    """Per-stratum log(lambda_k * prod_i (1 - beta_{C_i,k})) over the initial sample."""
    counts = np.asarray(strata_counts_s0, dtype=np.float64)
    with np.errstate(divide="ignore"):
        log_lam = np.log(params.lam)
    return log_lam + xlog1py(counts[:, None], -params.beta).sum(axis=0)


def escape_probability(strata_s0, params: SbmParams) -> EscapeProbability:
    """Evaluate 1 - p = sum_k lambda_k prod_{i in S0} (1 - beta_{C_i,k})."""
    counts = np.bincount(np.asarray(strata_s0, dtype=np.int64), minlength=params.n_strata)
    log_weights = stratum_escape_log_weights(counts, params)
    log_omp = min(float(logsumexp(log_weights)), 0.0)
    return EscapeProbability(one_minus_p=float(np.exp(log_omp)), log_one_minus_p=log_omp)


def wave_inclusion_probability(strata_counts_s0, params: SbmParams) -> float:
    """p' = sum_k lambda_k (1 - prod_l (1 - beta_{k,l})^{n0l}).

    The marginal probability that a unit outside the initial sample joins the
    wave, given only the initial sample's stratum composition; the wave size
    is Binomial(N - n0, p') under the model.
    """
    counts = np.asarray(strata_counts_s0, dtype=np.float64)
    log_avoid = xlog1py(counts[None, :], -params.beta).sum(axis=1)
    return float(np.sum(params.lam * -np.expm1(log_avoid)))


def _sampled_block_log_terms(data: IgnoredData, params: SbmParams) -> float:
    """Stratum terms for all sampled units plus link terms for observed pairs."""
    g = params.n_strata
    counts_s = data.strata_counts_s0(g) + data.strata_counts_s1(g)
    m = data.observed_link_counts(g)
    t = data.observed_pair_totals(g)
    iu = upper_indices(g)
    ll = float(xlogy(counts_s, params.lam).sum())
    ll += float(xlogy(m[iu], params.beta[iu]).sum())
    ll += float(xlog1py((t - m)[iu], -params.beta[iu]).sum())
    return ll


def _check_support(data: IgnoredData, n: int):
    if n < data.n_sampled:
        raise ValidationError(
            f"population size {n} below sampled count {data.n_sampled} (support violation)"
        )


def observed_log_likelihood(data: IgnoredData, n: int, params: SbmParams) -> float:
    """Log-likelihood of the labeled sample at population size ``n``.

    Includes the design factor 1/C(n, n0) from conditioning on the initial
    sample size, so the value is monotonically decreasing in ``n``.
    """
    _check_support(data, n)
    escape = escape_probability(data.strata_s0, params)
    tail = count_times_log(n - data.n_sampled, escape.log_one_minus_p)
    return -float(log_binom(n, data.n0)) + _sampled_block_log_terms(data, params) + tail


def ignored_log_likelihood(data: IgnoredData, n: int, params: SbmParams) -> float:
    """Log-likelihood of the sample pattern with unit labels ignored.

    The C(n - n0, n1) head term counts the ways the wave can sit inside the
    population, which is what makes this likelihood informative about ``n``.
    """
    _check_support(data, n)
    escape = escape_probability(data.strata_s0, params)
    tail = count_times_log(n - data.n_sampled, escape.log_one_minus_p)
    head = float(log_binom(n - data.n0, data.n1))
    return head + _sampled_block_log_terms(data, params) + tail
