"""Log-space helpers shared by the likelihood and sampler code.

Everything runs through log-gamma; direct products of the model terms
underflow float64 well below the population sizes the chain visits.
"""

import numpy as np
from scipy.special import gammaln


def log_binom(n, k):
    """log C(n, k), vectorized; requires 0 <= k <= n elementwise."""
    n = np.asarray(n, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    return gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)


def count_times_log(count, log_value):
    """count * log_value with the 0 * (-inf) -> 0 convention."""
    if count == 0:
        return 0.0
    return float(count) * float(log_value)
