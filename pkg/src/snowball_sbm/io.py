"""File formats: params JSON, graph TSV/CSV, sample JSON, traces, studies.

External files use 1-based stratum labels and 1-based canonical unit
indices; everything in memory is 0-based. JSON carries structured metadata,
CSV/TSV carry bulk numbers. All writers emit deterministic bytes for a given
input (sorted keys, fixed float repr, LF newlines).
"""

import json
import math
import os

import numpy as np

from .augmentation import ChainTrace, McmcConfig
from .harness import ClusterOverlay, StudyConfig, StudySummary
from .sampling import DesignConfig, IgnoredData, SnowballSample
from .sbm import PopulationGraph, SbmParams, ValidationError, validate_params

EDGE_HEADER = "u\tv"
STRATA_HEADER = "node_id,stratum"


def _dump_json(obj, path):
    with open(path, "w", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc})") from exc


def _require(mapping, key, path):
    if key not in mapping:
        raise ValidationError(f"{path}: missing required field {key!r}")
    return mapping[key]


# ---------------------------------------------------------------- params

def save_params(params: SbmParams, path: str):
    doc = {
        "G": params.n_strata,
        "lambda": [float(x) for x in params.lam],
        "beta": [float(x) for x in params.beta_upper()],
    }
    _dump_json(doc, path)


def load_params(path: str) -> SbmParams:
    doc = _load_json(path)
    g = _require(doc, "G", path)
    lam = _require(doc, "lambda", path)
    beta = _require(doc, "beta", path)
    if not isinstance(g, int) or g < 1:
        raise ValidationError(f"{path}: G must be a positive integer")
    if len(lam) != g:
        raise ValidationError(f"{path}: lambda must have length G={g}")
    params = SbmParams.from_upper(lam, beta)
    return validate_params(params)


# ----------------------------------------------------------------- graph

def save_graph(graph: PopulationGraph, edges_path: str, strata_path: str):
    """Edge-list TSV (u < v, one pair per line) plus a strata CSV covering
    every node, isolated ones included."""
    with open(edges_path, "w", newline="\n") as fh:
        fh.write(EDGE_HEADER + "\n")
        for u, v in graph.edge_list():
            fh.write(f"{u}\t{v}\n")
    with open(strata_path, "w", newline="\n") as fh:
        fh.write(STRATA_HEADER + "\n")
        for node, stratum in enumerate(graph.strata):
            fh.write(f"{node},{stratum + 1}\n")


def load_graph(edges_path: str, strata_path: str) -> PopulationGraph:
    strata_rows = {}
    with open(strata_path) as fh:
        for line_no, line in enumerate(fh):
            line = line.strip()
            if not line or (line_no == 0 and line == STRATA_HEADER):
                continue
            try:
                node_txt, stratum_txt = line.split(",")
                node, stratum = int(node_txt), int(stratum_txt)
            except ValueError as exc:
                raise ValidationError(f"{strata_path}:{line_no + 1}: bad row {line!r}") from exc
            if stratum < 1:
                raise ValidationError(f"{strata_path}:{line_no + 1}: strata are labeled 1..G")
            if node in strata_rows:
                raise ValidationError(f"{strata_path}: duplicate node id {node}")
            strata_rows[node] = stratum - 1
    n = len(strata_rows)
    if set(strata_rows) != set(range(n)):
        raise ValidationError(f"{strata_path}: node ids must cover 0..N-1 exactly once")
    strata = np.array([strata_rows[i] for i in range(n)], dtype=np.int64)

    adjacency = np.zeros((n, n), dtype=bool)
    with open(edges_path) as fh:
        for line_no, line in enumerate(fh):
            line = line.strip()
            if not line or (line_no == 0 and line == EDGE_HEADER):
                continue
            try:
                u_txt, v_txt = line.split("\t")
                u, v = int(u_txt), int(v_txt)
            except ValueError as exc:
                raise ValidationError(f"{edges_path}:{line_no + 1}: bad row {line!r}") from exc
            if u == v:
                raise ValidationError(f"{edges_path}:{line_no + 1}: self-link {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValidationError(f"{edges_path}:{line_no + 1}: node id outside 0..{n - 1}")
            if adjacency[u, v]:
                raise ValidationError(f"{edges_path}:{line_no + 1}: duplicate edge {u},{v}")
            adjacency[u, v] = adjacency[v, u] = True
    return PopulationGraph(strata=strata, adjacency=adjacency)


# ---------------------------------------------------------------- sample

def sample_to_doc(data: IgnoredData, meta: dict | None = None) -> dict:
    links = []
    n0 = data.n0
    for i in range(n0):
        row = np.flatnonzero(data.links[i])
        for j in row[row > i]:
            links.append([i + 1, int(j) + 1])
    doc = {
        "n0": data.n0,
        "n1": data.n1,
        "strata_s0": [int(s) + 1 for s in data.strata_s0],
        "strata_s1": [int(s) + 1 for s in data.strata_s1],
        "links": links,
    }
    if meta:
        doc["meta"] = meta
    return doc


def save_sample(data: IgnoredData, path: str, meta: dict | None = None):
    _dump_json(sample_to_doc(data, meta), path)


def sample_meta(sample: SnowballSample, cfg: DesignConfig, n_strata: int | None = None) -> dict:
    """Provenance for a traced sample; the true size travels here, outside
    the estimator-visible fields."""
    meta = {
        "design_mode": cfg.mode,
        "model_misspecified": cfg.misspecified,
        "conditioning": "fixed initial sample size",
        "seed": cfg.seed,
    }
    if cfg.mode == "bernoulli":
        meta["q"] = cfg.q
    else:
        meta["n0"] = cfg.n0
    if n_strata is not None:
        meta["n_strata"] = n_strata
    if sample.population_hint is not None:
        meta["population_hint"] = int(sample.population_hint)
    return meta


def load_sample(path: str):
    """Read a sample JSON; returns (IgnoredData, meta dict)."""
    doc = _load_json(path)
    n0 = _require(doc, "n0", path)
    n1 = _require(doc, "n1", path)
    strata_s0 = _require(doc, "strata_s0", path)
    strata_s1 = _require(doc, "strata_s1", path)
    links = _require(doc, "links", path)
    if not (isinstance(n0, int) and isinstance(n1, int) and n0 >= 0 and n1 >= 0):
        raise ValidationError(f"{path}: n0 and n1 must be non-negative integers")
    if len(strata_s0) != n0 or len(strata_s1) != n1:
        raise ValidationError(f"{path}: stratum vectors must have lengths n0 and n1")
    if any(int(s) < 1 for s in strata_s0 + strata_s1):
        raise ValidationError(f"{path}: strata are labeled 1..G")
    n = n0 + n1
    matrix = np.zeros((n0, n), dtype=bool)
    for pair in links:
        if len(pair) != 2:
            raise ValidationError(f"{path}: links must be [i, j] pairs")
        i, j = int(pair[0]), int(pair[1])
        if not (1 <= i < j <= n):
            raise ValidationError(f"{path}: link [{i}, {j}] outside canonical range")
        if i > n0:
            raise ValidationError(f"{path}: link [{i}, {j}] has no endpoint in the initial sample")
        matrix[i - 1, j - 1] = True
        if j <= n0:
            matrix[j - 1, i - 1] = True
    try:
        data = IgnoredData(
            strata_s0=np.array(strata_s0, dtype=np.int64) - 1,
            strata_s1=np.array(strata_s1, dtype=np.int64) - 1,
            links=matrix,
        )
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from exc
    return data, doc.get("meta", {})


# ------------------------------------------------------------ chain trace

def trace_header(g: int) -> str:
    cols = ["iter", "N"]
    cols += [f"lambda_{k + 1}" for k in range(g)]
    cols += [f"beta_{k + 1}_{l + 1}" for k in range(g) for l in range(k, g)]
    return ",".join(cols)


def save_trace_csv(trace: ChainTrace, path: str):
    with open(path, "w", newline="\n") as fh:
        fh.write(trace_header(trace.n_strata) + "\n")
        for it in range(trace.chain_length):
            vals = [str(it + 1), str(int(trace.n_draws[it]))]
            vals += [repr(float(x)) for x in trace.lam_draws[it]]
            vals += [repr(float(x)) for x in trace.beta_upper_draws[it]]
            fh.write(",".join(vals) + "\n")


def save_chain_summary(trace: ChainTrace, path: str, extra_meta: dict | None = None):
    est = trace.estimates()
    doc = {
        "n_mean": est.n_mean,
        "n_rounded": est.n_rounded,
        "lambda_mean": [float(x) for x in est.lam],
        "beta_upper_mean": [float(x) for x in est.beta_upper],
        "n_sd": est.n_sd,
        "lambda_sd": [float(x) for x in est.lam_sd],
        "beta_upper_sd": [float(x) for x in est.beta_upper_sd],
        "chain_length": trace.chain_length,
        "burn_in": trace.burn_in,
        "cap": trace.cap,
        "cap_hits": trace.cap_hits,
        "seed": trace.seed,
        "n_strata": trace.n_strata,
        "conditioning": "fixed initial sample size",
    }
    if extra_meta:
        doc["sample_meta"] = extra_meta
    _dump_json(doc, path)


# ------------------------------------------------------------------ study

def load_study_config(path: str) -> StudyConfig:
    doc = _load_json(path)
    base = os.path.dirname(os.path.abspath(path))

    def _resolve(p):
        return p if os.path.isabs(p) else os.path.join(base, p)

    pop = _require(doc, "population", path)
    kwargs = {}
    if "edges" in pop:
        kwargs["population"] = load_graph(_resolve(pop["edges"]), _resolve(_require(pop, "strata", path)))
    else:
        if "params_file" in pop:
            params = load_params(_resolve(pop["params_file"]))
        elif "params" in pop:
            spec = pop["params"]
            params = validate_params(
                SbmParams.from_upper(_require(spec, "lambda", path), _require(spec, "beta", path))
            )
        else:
            raise ValidationError(f"{path}: population needs 'edges' or 'params'/'params_file'")
        kwargs["params"] = params
        kwargs["population_size"] = _require(pop, "n", path)
        if "clustering" in pop:
            try:
                kwargs["clustering"] = ClusterOverlay(**pop["clustering"])
            except TypeError as exc:
                raise ValidationError(f"{path}: bad clustering options ({exc})") from exc

    design_doc = dict(_require(doc, "design", path))
    design_doc.pop("seed", None)
    mcmc_doc = dict(doc.get("mcmc", {}))
    mcmc_doc.pop("seed", None)
    if "prior_gamma" in mcmc_doc:
        mcmc_doc["prior_gamma"] = tuple(mcmc_doc["prior_gamma"])
    if isinstance(mcmc_doc.get("prior_alpha"), list):
        mcmc_doc["prior_alpha"] = tuple(mcmc_doc["prior_alpha"])
    try:
        design = DesignConfig(**design_doc)
        mcmc = McmcConfig(**mcmc_doc)
    except TypeError as exc:
        raise ValidationError(f"{path}: {exc}") from exc
    return StudyConfig(
        replicates=_require(doc, "replicates", path),
        design=design,
        mcmc=mcmc,
        master_seed=doc.get("master_seed", 0),
        threads=doc.get("threads"),
        bins=doc.get("bins", 20),
        **kwargs,
    )


def _float_or_none(x):
    x = float(x)
    return None if math.isnan(x) else x


def save_study_outputs(summary: StudySummary, out_dir: str):
    """Write estimates.csv, summary.json, and one hist_<name>.csv per estimand."""
    os.makedirs(out_dir, exist_ok=True)
    est_path = os.path.join(out_dir, "estimates.csv")
    with open(est_path, "w", newline="\n") as fh:
        fh.write(",".join(["replicate", "n0", "n1", *summary.column_names]) + "\n")
        for row_idx in range(summary.estimate_rows.shape[0]):
            vals = [
                str(int(summary.replicate_indices[row_idx])),
                str(int(summary.sample_sizes[row_idx, 0])),
                str(int(summary.sample_sizes[row_idx, 1])),
            ]
            vals += [repr(float(x)) for x in summary.estimate_rows[row_idx]]
            fh.write(",".join(vals) + "\n")

    doc = {
        "true_n": summary.true_n,
        "targets": {
            "N": summary.targets.n,
            "lambda": [float(x) for x in summary.targets.lam],
            "beta_upper": [_float_or_none(x) for x in summary.targets.beta_upper()],
        },
        "stats": {
            name: {k: _float_or_none(v) for k, v in entry.items()}
            for name, entry in summary.stats.items()
        },
        "mean_initial_fraction": _float_or_none(summary.mean_initial_fraction),
        "mean_final_fraction": _float_or_none(summary.mean_final_fraction),
        "replicates_completed": int(summary.estimate_rows.shape[0]),
        "failures": [{"replicate": int(i), "error": msg} for i, msg in summary.failures],
        "master_seed": summary.master_seed,
    }
    _dump_json(doc, os.path.join(out_dir, "summary.json"))

    for name, (edges, counts) in summary.histograms.items():
        with open(os.path.join(out_dir, f"hist_{name}.csv"), "w", newline="\n") as fh:
            fh.write("bin_left,bin_right,count\n")
            for b in range(counts.size):
                fh.write(f"{float(edges[b])!r},{float(edges[b + 1])!r},{int(counts[b])}\n")
