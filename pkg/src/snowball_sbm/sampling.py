"""One-wave snowball sampling: initial draw, wave tracing, label removal."""

from dataclasses import dataclass

import numpy as np

from .sbm import PopulationGraph, ValidationError, _freeze, pair_totals_from_counts, symmetrize_block_counts

INITIAL_MODES = ("bernoulli", "fixed_size", "degree_biased")


@dataclass(frozen=True)
class DesignConfig:
    """Initial-sample design.

    ``bernoulli`` includes each node independently with probability ``q``;
    ``fixed_size`` draws a uniform without-replacement sample of ``n0``
    nodes; ``degree_biased`` draws ``n0`` nodes with weights proportional to
    degree + 1. The estimator's conditioning assumes the first two; the
    degree-biased mode exists for robustness experiments and is flagged as
    model-misspecified in sample metadata.
    """

    mode: str = "bernoulli"
    q: float | None = None
    n0: int | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.mode not in INITIAL_MODES:
            raise ValidationError(f"unknown initial design mode {self.mode!r}")
        if self.mode == "bernoulli":
            if self.q is None or not (0.0 <= self.q <= 1.0):
                raise ValidationError("bernoulli design requires q in [0, 1]")
        else:
            if self.n0 is None or self.n0 < 0:
                raise ValidationError(f"{self.mode} design requires n0 >= 0")

    @property
    def misspecified(self) -> bool:
        return self.mode == "degree_biased"


def draw_initial(graph: PopulationGraph, cfg: DesignConfig) -> np.ndarray:
    """Select the initial sample; returns sorted node ids."""
    n = graph.n_nodes
    rng = np.random.default_rng(cfg.seed)
    if cfg.mode == "bernoulli":
        return np.flatnonzero(rng.random(n) < cfg.q)
    if cfg.n0 > n:
        raise ValidationError(f"initial sample size {cfg.n0} exceeds population size {n}")
    if cfg.mode == "fixed_size":
        ids = rng.choice(n, size=cfg.n0, replace=False)
    else:
        weights = graph.degrees() + 1.0
        ids = rng.choice(n, size=cfg.n0, replace=False, p=weights / weights.sum())
    return np.sort(ids).astype(np.int64)


@dataclass(frozen=True)
class SnowballSample:
    """Observed data: initial sample, first wave, their strata, and all links
    incident to the initial sample (absence of links to unsampled units is
    implied by the design).

    ``links_s0_s`` has one row per initial-sample node and one column per
    final-sample node, columns ordered initial sample first then wave, both
    ascending by original id. ``population_hint`` carries the true size for
    harness scoring only; it is dropped when labels are removed and is never
    visible to the estimator.
    """

    s0: np.ndarray
    s1: np.ndarray
    strata_s0: np.ndarray
    strata_s1: np.ndarray
    links_s0_s: np.ndarray
    population_hint: int | None = None

    def __post_init__(self):
        s0 = np.asarray(self.s0, dtype=np.int64)
        s1 = np.asarray(self.s1, dtype=np.int64)
        if np.intersect1d(s0, s1).size:
            raise ValidationError("initial sample and first wave overlap")
        links = np.asarray(self.links_s0_s, dtype=bool)
        if links.shape != (s0.size, s0.size + s1.size):
            raise ValidationError("link matrix shape does not match sample sizes")
        object.__setattr__(self, "s0", _freeze(s0))
        object.__setattr__(self, "s1", _freeze(s1))
        object.__setattr__(self, "strata_s0", _freeze(np.asarray(self.strata_s0, dtype=np.int64)))
        object.__setattr__(self, "strata_s1", _freeze(np.asarray(self.strata_s1, dtype=np.int64)))
        object.__setattr__(self, "links_s0_s", _freeze(links))

    @property
    def n0(self) -> int:
        return self.s0.size

    @property
    def n1(self) -> int:
        return self.s1.size


def trace_one_wave(graph: PopulationGraph, s0) -> SnowballSample:
    """Trace all links out of the initial sample; deterministic given inputs."""
    s0 = np.sort(np.asarray(s0, dtype=np.int64))
    if s0.size and (s0[0] < 0 or s0[-1] >= graph.n_nodes):
        raise ValidationError("initial sample contains unknown node ids")
    if np.unique(s0).size != s0.size:
        raise ValidationError("initial sample contains duplicate node ids")
    reached = graph.adjacency[s0].any(axis=0) if s0.size else np.zeros(graph.n_nodes, bool)
    reached[s0] = False
    s1 = np.flatnonzero(reached)
    final = np.concatenate([s0, s1])
    return SnowballSample(
        s0=s0,
        s1=s1,
        strata_s0=graph.strata[s0],
        strata_s1=graph.strata[s1],
        links_s0_s=graph.adjacency[np.ix_(s0, final)],
        population_hint=graph.n_nodes,
    )


@dataclass(frozen=True)
class IgnoredData:
    """The label-free reduction: sample sizes, stratum vectors, and the
    observed sub-adjacency under the canonical relabeling (initial-sample
    units first, then wave units, each block ordered by original id at the
    time labels were dropped).

    This object is the estimator's entire input.
    """

    strata_s0: np.ndarray
    strata_s1: np.ndarray
    links: np.ndarray

    def __post_init__(self):
        strata_s0 = np.asarray(self.strata_s0, dtype=np.int64)
        strata_s1 = np.asarray(self.strata_s1, dtype=np.int64)
        links = np.asarray(self.links, dtype=bool)
        n0, n1 = strata_s0.size, strata_s1.size
        if links.shape != (n0, n0 + n1):
            raise ValidationError("link matrix shape does not match sample sizes")
        s0_block = links[:, :n0]
        if np.any(np.diagonal(s0_block)):
            raise ValidationError("self-links in the initial-sample block")
        if not np.array_equal(s0_block, s0_block.T):
            raise ValidationError("initial-sample link block is not symmetric")
        if n1 and not links[:, n0:].any(axis=0).all():
            raise ValidationError("a wave unit has no link into the initial sample")
        if (strata_s0.size and strata_s0.min() < 0) or (strata_s1.size and strata_s1.min() < 0):
            raise ValidationError("stratum labels must be non-negative")
        object.__setattr__(self, "strata_s0", _freeze(strata_s0))
        object.__setattr__(self, "strata_s1", _freeze(strata_s1))
        object.__setattr__(self, "links", _freeze(links))

    @property
    def n0(self) -> int:
        return self.strata_s0.size

    @property
    def n1(self) -> int:
        return self.strata_s1.size

    @property
    def n_sampled(self) -> int:
        return self.n0 + self.n1

    def min_strata(self) -> int:
        """Smallest G consistent with the observed labels."""
        observed = [s.max() for s in (self.strata_s0, self.strata_s1) if s.size]
        return int(max(observed)) + 1 if observed else 1

    def strata_counts_s0(self, g: int) -> np.ndarray:
        return np.bincount(self.strata_s0, minlength=g)

    def strata_counts_s1(self, g: int) -> np.ndarray:
        return np.bincount(self.strata_s1, minlength=g)

    def observed_link_counts(self, g: int) -> np.ndarray:
        """Observed links per unordered stratum pair (within S0 plus S0-wave)."""
        onehot0 = np.zeros((self.n0, g), dtype=np.int64)
        if self.n0:
            onehot0[np.arange(self.n0), self.strata_s0] = 1
        onehot1 = np.zeros((self.n1, g), dtype=np.int64)
        if self.n1:
            onehot1[np.arange(self.n1), self.strata_s1] = 1
        within = onehot0.T @ self.links[:, : self.n0].astype(np.int64) @ onehot0
        cross = onehot0.T @ self.links[:, self.n0 :].astype(np.int64) @ onehot1
        return symmetrize_block_counts(within + cross + cross.T)

    def observed_pair_totals(self, g: int) -> np.ndarray:
        """Pair totals whose link status the sample actually observed."""
        c0 = self.strata_counts_s0(g)
        c1 = self.strata_counts_s1(g)
        cross = np.outer(c0, c1)
        return pair_totals_from_counts(c0) + symmetrize_block_counts(cross + cross.T)


def to_ignored_data(sample: SnowballSample) -> IgnoredData:
    """Drop original unit labels, keeping the sample pattern up to relabeling."""
    order0 = np.argsort(sample.s0, kind="stable")
    order1 = np.argsort(sample.s1, kind="stable")
    col_order = np.concatenate([order0, sample.n0 + order1])
    return IgnoredData(
        strata_s0=sample.strata_s0[order0],
        strata_s1=sample.strata_s1[order1],
        links=sample.links_s0_s[np.ix_(order0, col_order)],
    )
