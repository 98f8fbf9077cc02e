"""Stochastic block model: parameters, population generation, counts, MLEs.

Strata are labeled 1..G in every external file format and 0..G-1 in memory;
all arrays here use the internal convention.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import xlog1py, xlogy

LAMBDA_SUM_TOL = 1e-12


class ValidationError(ValueError):
    """Raised when inputs violate a documented invariant."""


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def upper_indices(g: int):
    """Row-major upper-triangle index pair (k <= l) for a G x G matrix."""
    return np.triu_indices(g)


def beta_matrix_from_upper(upper, g: int) -> np.ndarray:
    """Build the symmetric G x G link matrix from its row-major upper triangle."""
    upper = np.asarray(upper, dtype=np.float64)
    if upper.shape != (g * (g + 1) // 2,):
        raise ValidationError(
            f"beta upper triangle must have length {g * (g + 1) // 2}, got {upper.shape}"
        )
    beta = np.zeros((g, g))
    iu = upper_indices(g)
    beta[iu] = upper
    beta.T[iu] = upper
    return beta


@dataclass(frozen=True)
class SbmParams:
    """Stratum probabilities and the symmetric link-probability matrix.

    ``beta`` is stored as a full symmetric matrix but is always constructed
    from an upper triangle (directly or via :meth:`from_upper`), so the two
    halves cannot drift apart.
    """

    lam: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=np.float64).reshape(-1)
        beta = np.asarray(self.beta, dtype=np.float64)
        g = lam.size
        if beta.shape != (g, g):
            raise ValidationError(f"beta must be {g}x{g}, got shape {beta.shape}")
        # re-symmetrize from the upper triangle so storage is canonical
        beta = beta_matrix_from_upper(beta[upper_indices(g)], g)
        object.__setattr__(self, "lam", _freeze(lam))
        object.__setattr__(self, "beta", _freeze(beta))

    @property
    def n_strata(self) -> int:
        return self.lam.size

    @classmethod
    def from_upper(cls, lam, beta_upper) -> "SbmParams":
        lam = np.asarray(lam, dtype=np.float64).reshape(-1)
        return cls(lam=lam, beta=beta_matrix_from_upper(beta_upper, lam.size))

    def beta_upper(self) -> np.ndarray:
        """Row-major upper triangle of beta (the external storage order)."""
        return self.beta[upper_indices(self.n_strata)].copy()


def validate_params(params: SbmParams) -> SbmParams:
    """Check the model invariants, returning the params unchanged if they hold."""
    lam, beta = params.lam, params.beta
    if lam.size < 1:
        raise ValidationError("at least one stratum is required (G >= 1)")
    if np.any(lam < 0):
        raise ValidationError("lambda has negative entries")
    if abs(float(lam.sum()) - 1.0) > LAMBDA_SUM_TOL:
        raise ValidationError(f"lambda does not sum to 1 (sum={float(lam.sum())!r})")
    if np.any(beta < 0) or np.any(beta > 1):
        raise ValidationError("beta out of range [0, 1]")
    if not np.array_equal(beta, beta.T):
        raise ValidationError("beta is not symmetric")
    return params


@dataclass(frozen=True)
class PopulationGraph:
    """A full realization: stratum labels and a symmetric 0/1 adjacency."""

    strata: np.ndarray
    adjacency: np.ndarray

    def __post_init__(self):
        strata = np.asarray(self.strata, dtype=np.int64).reshape(-1)
        adj = np.asarray(self.adjacency, dtype=bool)
        n = strata.size
        if adj.shape != (n, n):
            raise ValidationError(f"adjacency must be {n}x{n}, got {adj.shape}")
        if np.any(np.diagonal(adj)):
            raise ValidationError("adjacency has self-links")
        if not np.array_equal(adj, adj.T):
            raise ValidationError("adjacency is not symmetric")
        if n and strata.min() < 0:
            raise ValidationError("strata labels must be non-negative")
        object.__setattr__(self, "strata", _freeze(strata))
        object.__setattr__(self, "adjacency", _freeze(adj))

    @property
    def n_nodes(self) -> int:
        return self.strata.size

    @property
    def n_strata(self) -> int:
        return int(self.strata.max()) + 1 if self.n_nodes else 0

    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1).astype(np.int64)

    def edge_list(self) -> np.ndarray:
        """(E, 2) array of node-id pairs u < v."""
        u, v = np.nonzero(np.triu(self.adjacency, 1))
        return np.column_stack([u, v]).astype(np.int64)


@dataclass(frozen=True)
class SufficientCounts:
    """Stratum sizes N_k, symmetric link counts M, and pair totals.

    ``pair_totals`` holds C(N_k, 2) on the diagonal and N_k * N_l off it.
    """

    strata_counts: np.ndarray
    link_counts: np.ndarray
    pair_totals: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "strata_counts", _freeze(np.asarray(self.strata_counts, dtype=np.int64))
        )
        object.__setattr__(
            self, "link_counts", _freeze(np.asarray(self.link_counts, dtype=np.int64))
        )
        object.__setattr__(
            self, "pair_totals", _freeze(np.asarray(self.pair_totals, dtype=np.int64))
        )
        if np.any(self.link_counts < 0) or np.any(self.link_counts > self.pair_totals):
            raise ValidationError("link counts exceed pair totals")

    @property
    def n_total(self) -> int:
        return int(self.strata_counts.sum())


def pair_totals_from_counts(counts: np.ndarray) -> np.ndarray:
    """Pair totals induced by stratum sizes: C(n_k,2) diagonal, n_k*n_l off."""
    counts = np.asarray(counts, dtype=np.int64)
    totals = np.outer(counts, counts)
    np.fill_diagonal(totals, counts * (counts - 1) // 2)
    return totals


def symmetrize_block_counts(raw: np.ndarray) -> np.ndarray:
    """Fold an ordered-incidence G x G count matrix into unordered pair counts.

    Input convention: each unordered edge with stratum pair {k, l} contributes
    1 to raw[k, l] and 1 to raw[l, k] (so twice to raw[k, k] when k == l).
    """
    out = np.array(raw, dtype=np.int64, copy=True)
    diag = np.diagonal(out)
    if np.any(diag % 2):
        raise ValidationError("diagonal incidence counts must be even")
    np.fill_diagonal(out, diag // 2)
    return out


def _unrank_pairs(rank: np.ndarray, n: int):
    """Decode lexicographic pair ranks into index pairs (a, b), a < b < n."""
    rank = np.asarray(rank, dtype=np.int64)
    two_n = 2 * n - 1
    a = ((two_n - np.sqrt(two_n * two_n - 8.0 * rank)) // 2).astype(np.int64)
    # one-step correction for sqrt rounding at row boundaries
    start = a * (2 * n - a - 1) // 2
    a = np.where(start > rank, a - 1, a)
    nxt = (a + 1) * (2 * n - a - 2) // 2
    a = np.where(rank >= nxt, a + 1, a)
    start = a * (2 * n - a - 1) // 2
    b = rank - start + a + 1
    return a, b


def generate_population(params: SbmParams, n: int, seed=None) -> PopulationGraph:
    """Draw one population graph from the block model.

    Strata are i.i.d. categorical with probabilities ``lam``; conditional on
    strata, each unordered pair is linked independently with the probability
    given by its stratum pair. Edges are realized per stratum pair as a
    binomial edge count plus a uniform choice of which pairs carry them,
    which is distribution-identical to per-pair Bernoulli draws and lets
    sparse graphs at survey scale be drawn cheaply.

    Deterministic given ``seed``.
    """
    validate_params(params)
    if n < 0:
        raise ValidationError("population size must be >= 0")
    rng = np.random.default_rng(seed)
    g = params.n_strata
    strata = rng.choice(g, size=n, p=params.lam) if n else np.zeros(0, dtype=np.int64)
    adjacency = np.zeros((n, n), dtype=bool)
    members = [np.flatnonzero(strata == k) for k in range(g)]
    for k in range(g):
        for l in range(k, g):
            prob = float(params.beta[k, l])
            if k == l:
                size = members[k].size
                total = size * (size - 1) // 2
            else:
                total = members[k].size * members[l].size
            if total == 0 or prob == 0.0:
                continue
            n_edges = int(rng.binomial(total, prob))
            if n_edges == 0:
                continue
            picks = rng.choice(total, size=n_edges, replace=False)
            if k == l:
                a, b = _unrank_pairs(picks, members[k].size)
                rows, cols = members[k][a], members[k][b]
            else:
                rows = members[k][picks // members[l].size]
                cols = members[l][picks % members[l].size]
            adjacency[rows, cols] = True
            adjacency[cols, rows] = True
    return PopulationGraph(strata=strata, adjacency=adjacency)


def sufficient_counts(graph: PopulationGraph, n_strata: int | None = None) -> SufficientCounts:
    """Tally stratum sizes and link counts per unordered stratum pair."""
    g = n_strata if n_strata is not None else graph.n_strata
    if graph.n_nodes and graph.strata.max() >= g:
        raise ValidationError("graph contains stratum labels outside 0..G-1")
    counts = np.bincount(graph.strata, minlength=g)
    onehot = np.zeros((graph.n_nodes, g), dtype=np.int64)
    if graph.n_nodes:
        onehot[np.arange(graph.n_nodes), graph.strata] = 1
    raw = onehot.T @ graph.adjacency.astype(np.int64) @ onehot
    return SufficientCounts(
        strata_counts=counts,
        link_counts=symmetrize_block_counts(raw),
        pair_totals=pair_totals_from_counts(counts),
    )


def counts_log_likelihood(counts: SufficientCounts, params: SbmParams) -> float:
    """Log-likelihood of the block model given full-graph sufficient counts."""
    iu = upper_indices(params.n_strata)
    m = counts.link_counts[iu]
    t = counts.pair_totals[iu]
    b = params.beta[iu]
    ll = float(xlogy(counts.strata_counts, params.lam).sum())
    ll += float(xlogy(m, b).sum() + xlog1py(t - m, -b).sum())
    return ll


def full_log_likelihood(graph: PopulationGraph, params: SbmParams) -> float:
    """Log-likelihood of a complete realization; -inf for impossible configs.

    Uses the 0 * log 0 = 0 convention throughout, so zero-probability strata
    or links only matter when actually observed.
    """
    validate_params(params)
    return counts_log_likelihood(sufficient_counts(graph, params.n_strata), params)


@dataclass(frozen=True)
class MleEstimates:
    """Full-graph maximum likelihood estimates.

    Entries of ``beta`` whose pair total is zero are undefined and reported
    as NaN rather than an arbitrary value.
    """

    n: int
    lam: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lam", _freeze(np.asarray(self.lam, dtype=np.float64)))
        object.__setattr__(self, "beta", _freeze(np.asarray(self.beta, dtype=np.float64)))

    @property
    def n_strata(self) -> int:
        return self.lam.size

    def beta_upper(self) -> np.ndarray:
        return self.beta[upper_indices(self.n_strata)].copy()


def mle_from_full_graph(graph: PopulationGraph, n_strata: int | None = None) -> MleEstimates:
    """Closed-form MLEs: stratum fractions and per-pair link fractions."""
    if graph.n_nodes == 0:
        raise ValidationError("cannot compute MLEs on an empty graph")
    counts = sufficient_counts(graph, n_strata)
    lam_hat = counts.strata_counts / graph.n_nodes
    with np.errstate(divide="ignore", invalid="ignore"):
        beta_hat = np.where(
            counts.pair_totals > 0,
            counts.link_counts / np.maximum(counts.pair_totals, 1),
            np.nan,
        )
    return MleEstimates(n=graph.n_nodes, lam=lam_hat, beta=beta_hat)
