"""Experiment runners: iteration scaling, rewiring and connectivity sweeps, simple fractions.

Every random choice is derived from the master seed with
``mix64(master_seed, experiment, point_index, replicate_index)``; tasks may run
in a process pool and are re-assembled in task order, so outputs do not depend
on the number of workers.  Costs are reported in search nodes, which are
machine independent; wall-clock time only enters through ``time_limit``.
"""
from __future__ import annotations

import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .exact import OPTIMAL, SolveReport, branch_and_bound, brute_force
from .htnet import BandUnreachable, HTParams, find_iterations, ground_state_probability
from .instances import IsingInstance, frustration
from .models import ModelSpec
from .seeding import mix64
from .spectral import osc_check

EXPERIMENTS = ("scaling", "rewire-sweep", "connectivity-sweep", "simple-fraction")

SCHEMAS = {
    "scaling": ["N", "band_lo", "band_hi", "n_iter", "p_measured", "status"],
    "rewire-sweep": ["N", "percent", "median_cost", "iqr_lo", "iqr_hi", "p_simple",
                     "frustration_mean", "unsolved_count"],
    "connectivity-sweep": ["N", "k", "p_simple", "gap_mean", "cost_median",
                           "frustration_mean", "unsolved_count"],
    "simple-fraction": ["model", "dist", "N", "p_simple", "frustration_mean",
                        "unsolved_count"],
}
PROVENANCE = ["master_seed", "instance_seed", "code_version"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    master_seed: int
    sizes: tuple = ()
    bands: tuple = ((0.5, 0.55),)
    budgets: tuple = ()
    percents: tuple = ()
    ks: tuple = ()
    points: tuple = ()
    replicates: int = 25
    runs: int = 250
    node_budget: int | None = None
    time_limit: float | None = None
    brute_force_max_n: int = 26
    jobs: int = 1
    ht: HTParams = field(default_factory=lambda: HTParams(fixpoint_tol=None, record_every=0))
    iteration_ceiling: int = 1 << 20

    def validate(self) -> "ExperimentConfig":
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if not isinstance(self.master_seed, (int, np.integer)) or isinstance(self.master_seed, bool):
            raise ConfigError("an integer master seed is required")
        if self.replicates < 1 or self.runs < 1 or self.jobs < 1:
            raise ConfigError("replicates, runs and jobs must be positive")
        if self.node_budget is not None and self.node_budget < 0:
            raise ConfigError("node budget must be non-negative")
        if self.time_limit is not None and self.time_limit < 0:
            raise ConfigError("time limit must be non-negative")
        for lo, hi in self.bands:
            if not (0 <= lo <= hi <= 1 and hi > 0):
                raise ConfigError(f"invalid band ({lo}, {hi})")
        if self.experiment == "scaling":
            for N in self.sizes:
                if N % 4:
                    raise ConfigError(f"scaling needs N with even N/2, got {N}")
        if self.experiment == "rewire-sweep":
            if any(not 0 <= p <= 100 for p in self.percents):
                raise ConfigError("percentages must lie in [0, 100]")
            if any(N % 2 or N < 8 for N in self.sizes):
                raise ConfigError("rewire sweep needs even N >= 8")
        if self.experiment == "connectivity-sweep":
            for N in self.sizes:
                for k in self.ks:
                    if not 2 <= k < N or (k % 2 and N % 2):
                        raise ConfigError(f"no {k}-regular circulant on {N} vertices")
        if self.experiment == "simple-fraction" and not self.points:
            raise ConfigError("simple-fraction needs at least one model point")
        return self


@dataclass
class ResultTable:
    experiment: str
    columns: list
    rows: list
    details: list = field(default_factory=list)
    fit: list = field(default_factory=list)

    @property
    def all_columns(self) -> list:
        return self.columns + PROVENANCE

    @property
    def flagged(self) -> bool:
        return any(r.get("unsolved_count", 0) or r.get("status") == "unreachable"
                   for r in self.rows)


def instance_seed(config: ExperimentConfig, point: int, replicate: int) -> int:
    return mix64(config.master_seed, config.experiment, point, replicate)


def fingerprint(instance: IsingInstance) -> str:
    h = hashlib.blake2b(digest_size=16)
    h.update(np.int64(instance.n).tobytes())
    for a in (instance.rows, instance.cols):
        h.update(np.ascontiguousarray(a, dtype=np.int64).tobytes())
    for a in (instance.weights, instance.fields):
        h.update(np.ascontiguousarray(a, dtype=np.float64).tobytes())
    return h.hexdigest()


def _pmap(fn, tasks, jobs: int):
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, tasks, chunksize=1))


# ---------------------------------------------------------------------------
# exact ground truth plus verdict for one instance


def exact_ground(instance: IsingInstance, node_budget=None, time_limit=None,
                 brute_force_max_n: int = 26, seed: int = 0) -> SolveReport:
    """Enumeration up to ``brute_force_max_n`` spins, branch and bound beyond."""
    if instance.n <= brute_force_max_n:
        return brute_force(instance, method="blocked" if instance.n >= 16 else "gray")
    return branch_and_bound(instance, time_limit=time_limit, node_budget=node_budget,
                            seed=seed)


def _solve_task(task) -> dict:
    instance, node_budget, time_limit, bf_max, seed = task
    rep = exact_ground(instance, node_budget, time_limit, bf_max, seed)
    out = {"n": instance.n, "best_energy": rep.best_energy, "lower_bound": rep.lower_bound,
           "gap": rep.gap, "status": rep.status, "cost": rep.nodes_explored,
           "method": rep.method, "E_lambda": None, "is_simple": None,
           "frustration": None}
    if rep.status == OPTIMAL:
        verdict = osc_check(instance, rep.best_energy)
        out["E_lambda"] = verdict.e_lambda_energy
        out["is_simple"] = verdict.is_simple
        out["frustration"] = frustration(instance, rep.best_config)[1]
    return out


def _solve_points(config: ExperimentConfig, jobs_spec):
    """Solve ``[(point, replicate, ModelSpec, seed), ...]``; identical instances are solved once."""
    built, unique, order = [], {}, []
    for point, rep, spec, seed in jobs_spec:
        inst = spec.build(seed)
        key = fingerprint(inst)
        if key not in unique:
            unique[key] = len(order)
            order.append((inst, config.node_budget, config.time_limit,
                          config.brute_force_max_n, seed))
        built.append((point, rep, spec, seed, key))
    solved = _pmap(_solve_task, order, config.jobs)
    details = []
    for point, rep, spec, seed, key in built:
        rec = {"point": point, "replicate": rep, "model": spec.kind, "params": spec.params(),
               "instance_seed": seed}
        rec.update(solved[unique[key]])
        details.append(rec)
    return details


def _provenance(config: ExperimentConfig, seed: int) -> dict:
    return {"master_seed": int(config.master_seed), "instance_seed": int(seed),
            "code_version": __version__}


def _mean(xs):
    xs = [x for x in xs if x is not None]
    return float(np.mean(xs)) if xs else math.nan


def _summarise(recs):
    solved = [r for r in recs if r["status"] == OPTIMAL]
    p_simple = (sum(bool(r["is_simple"]) for r in solved) / len(solved)) if solved else math.nan
    return {"p_simple": p_simple,
            "frustration_mean": _mean([r["frustration"] for r in solved]),
            "unsolved_count": len(recs) - len(solved)}


# ---------------------------------------------------------------------------
# experiments


def _scaling_task(task):
    N, lo, hi, budget, runs, params, seed, ceiling = task
    from .instances import gen_mobius_ladder

    inst = gen_mobius_ladder(N // 2)
    ground = -(3 * (N // 2) - 4)
    if budget is not None:
        p = ground_state_probability(inst, ground, runs, replace(params, max_iters=budget), seed)
        return {"n_iter": budget, "p_measured": p, "status": "fixed_budget"}
    try:
        res = find_iterations(inst, ground, (lo, hi), runs, params, seed, ceiling)
        return {"n_iter": res.n_iter, "p_measured": res.p_measured, "status": "ok",
                "evaluations": res.evaluations}
    except BandUnreachable as exc:
        return {"n_iter": None, "p_measured": None, "status": "unreachable",
                "evaluations": str(exc)}


def fit_power_law(N, n_iter) -> dict:
    """Least-squares line through ``(log N, log n_iter)``: ``n_iter = a N^b``."""
    x, y = np.log(np.asarray(N, float)), np.log(np.asarray(n_iter, float))
    b, log_a = np.polyfit(x, y, 1)
    return {"slope": float(b), "intercept": float(log_a), "prefactor": float(math.exp(log_a))}


def exp_scaling(config: ExperimentConfig) -> ResultTable:
    """HT iterations needed for a ground-state probability band on Möbius ladders."""
    config.validate()
    tasks, keys = [], []
    point = 0
    for N in config.sizes:
        for lo, hi in config.bands:
            seed = instance_seed(config, point, 0)
            tasks.append((N, lo, hi, None, config.runs, config.ht, seed,
                          config.iteration_ceiling))
            keys.append((N, lo, hi, seed))
            point += 1
        for budget in config.budgets:
            seed = instance_seed(config, point, 0)
            tasks.append((N, None, None, int(budget), config.runs, config.ht, seed, None))
            keys.append((N, None, None, seed))
            point += 1
    results = _pmap(_scaling_task, tasks, config.jobs)
    rows, details = [], []
    for (N, lo, hi, seed), res in zip(keys, results):
        rows.append({"N": N, "band_lo": lo, "band_hi": hi, "n_iter": res["n_iter"],
                     "p_measured": res["p_measured"], "status": res["status"],
                     **_provenance(config, seed)})
        details.append({"N": N, "band_lo": lo, "band_hi": hi, **res, "instance_seed": seed})
    fits = []
    for lo, hi in config.bands:
        pts = [(r["N"], r["n_iter"]) for r in rows
               if r["band_lo"] == lo and r["band_hi"] == hi and r["status"] == "ok"]
        if len({n for n, _ in pts}) >= 2:
            f = fit_power_law(*zip(*pts))
            f.update(band_lo=lo, band_hi=hi, points=len(pts),
                     n_iter_at_1000=f["prefactor"] * 1000 ** f["slope"])
            fits.append(f)
    return ResultTable("scaling", SCHEMAS["scaling"], rows, details, fits)


def exp_rewire_sweep(config: ExperimentConfig) -> ResultTable:
    """Exact-solve cost versus the share of rewired Möbius-ladder edges."""
    config.validate()
    jobs, keys = [], []
    point = 0
    for N in config.sizes:
        for pct in config.percents:
            spec = ModelSpec("rewired-mobius", N, rewire_frac=pct / 100)
            for r in range(config.replicates):
                jobs.append((point, r, spec, instance_seed(config, point, r)))
            keys.append((N, pct, point))
            point += 1
    details = _solve_points(config, jobs)
    rows = []
    for N, pct, p in keys:
        recs = [d for d in details if d["point"] == p]
        cost = np.array([d["cost"] for d in recs], dtype=float)
        q25, q50, q75 = np.percentile(cost, [25, 50, 75])
        rows.append({"N": N, "percent": pct, "median_cost": float(q50), "iqr_lo": float(q25),
                     "iqr_hi": float(q75), **_summarise(recs),
                     **_provenance(config, recs[0]["instance_seed"])})
    return ResultTable("rewire-sweep", SCHEMAS["rewire-sweep"], rows, details)


def exp_connectivity_sweep(config: ExperimentConfig) -> ResultTable:
    """Exact-solve cost and simple fraction of random circulants versus degree ``k``."""
    config.validate()
    jobs, keys = [], []
    point = 0
    for N in config.sizes:
        for k in config.ks:
            spec = ModelSpec("circulant", N, k=k)
            for r in range(config.replicates):
                jobs.append((point, r, spec, instance_seed(config, point, r)))
            keys.append((N, k, point))
            point += 1
    details = _solve_points(config, jobs)
    rows = []
    for N, k, p in keys:
        recs = [d for d in details if d["point"] == p]
        s = _summarise(recs)
        rows.append({"N": N, "k": k, "p_simple": s["p_simple"],
                     "gap_mean": _mean([d["gap"] for d in recs]),
                     "cost_median": float(np.median([d["cost"] for d in recs])),
                     "frustration_mean": s["frustration_mean"],
                     "unsolved_count": s["unsolved_count"],
                     **_provenance(config, recs[0]["instance_seed"])})
    return ResultTable("connectivity-sweep", SCHEMAS["connectivity-sweep"], rows, details)


def exp_simple_fraction(config: ExperimentConfig) -> ResultTable:
    """Share of OSC-simple instances per model family and size."""
    config.validate()
    jobs = []
    for point, spec in enumerate(config.points):
        for r in range(config.replicates):
            jobs.append((point, r, spec, instance_seed(config, point, r)))
    details = _solve_points(config, jobs)
    rows = []
    for point, spec in enumerate(config.points):
        recs = [d for d in details if d["point"] == point]
        rows.append({"model": spec.kind, "dist": spec.dist, "N": spec.spin_count(),
                     **_summarise(recs), **_provenance(config, recs[0]["instance_seed"])})
    return ResultTable("simple-fraction", SCHEMAS["simple-fraction"], rows, details)


RUNNERS = {"scaling": exp_scaling, "rewire-sweep": exp_rewire_sweep,
           "connectivity-sweep": exp_connectivity_sweep,
           "simple-fraction": exp_simple_fraction}


def run(config: ExperimentConfig) -> ResultTable:
    return RUNNERS[config.experiment](config)


# desk-scale presets
PRESETS = {
    "scaling": dict(sizes=tuple(range(200, 2001, 200)), bands=((0.5, 0.55),), runs=250),
    "rewire-sweep": dict(sizes=(60, 80, 100), percents=tuple(range(0, 101, 10)),
                         replicates=25),
    "connectivity-sweep": dict(sizes=(30,), ks=tuple(range(2, 30)), replicates=25),
    "simple-fraction": dict(replicates=1000, points=(
        ModelSpec("sk", 3, "gaussian"), ModelSpec("sk", 20, "gaussian"),
        ModelSpec("sk", 5, "bimodal"), ModelSpec("sk", 20, "bimodal"),
        ModelSpec("mattis-complete", 20, "bimodal"), ModelSpec("torus", "4x4"),
        ModelSpec("chimera", "1x1"), ModelSpec("ladder-field", 12))),
}


def preset(experiment: str, master_seed: int, **overrides) -> ExperimentConfig:
    if experiment not in PRESETS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    kw = dict(PRESETS[experiment])
    kw.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(experiment, master_seed, **kw).validate()
