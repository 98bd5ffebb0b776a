"""Storage experiments over random request sets, written as CSV.

Every resource built during a run is checked by replaying its recipes; a
failing instance aborts the run and is saved as JSON next to the output.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .clustering import build_hierarchy
from .constructions import build_on, storage_formula
from .merging import bell_union, merge_resource, parts_resource
from .requests import RequestSet, cluster_requests_1d, cluster_requests_2d, gen_grouped, gen_uniform
from .resource import ResourceState
from .verification import verify_recipe

BELL_UNION = "bell_union"
MERGING = "merging"
CLUSTERING = "clustering"
COMBINED = "combined"
OPTIMAL = "cluster_state"

EXPERIMENTS = ("MergingRandom", "MergingCluster1D", "MergingCluster2D", "ClusteringGrouped", "Combined")


class ExperimentError(RuntimeError):
    def __init__(self, message: str, dump: Path | None = None):
        super().__init__(message if dump is None else f"{message} (instance saved to {dump})")
        self.dump = dump


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    n_range: tuple[int, ...]
    m_rule: str = "2n"
    group_size: int = 4
    bias: float = 10.0
    rounds: int = 1
    trials: int = 50
    seed: int = 0
    nn_only: bool = False

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if list(self.n_range) != sorted(set(self.n_range)) or not self.n_range:
            raise ValueError("n_range must be ascending and non-empty")
        m_of(self.m_rule, 4)

    def strategies(self) -> tuple[str, ...]:
        if self.experiment in ("ClusteringGrouped", "Combined"):
            return (BELL_UNION, MERGING, CLUSTERING, COMBINED)
        if self.experiment == "MergingRandom":
            return (BELL_UNION, MERGING)
        return (BELL_UNION, MERGING, OPTIMAL)


def m_of(rule: str, n: int) -> int:
    """Request count from a rule such as ``n``, ``2n``, ``n^2`` or ``40``."""
    r = rule.replace(" ", "").replace("**", "^")
    if r.isdigit():
        return int(r)
    if r == "n^2":
        return n * n
    if r.endswith("n"):
        coef = r[:-1]
        if coef == "":
            return n
        if coef.isdigit():
            return int(coef) * n
    raise ValueError(f"unsupported m rule {rule!r}")


_EVEN = tuple(range(8, 49, 4))

PRESETS: dict[str, ExperimentConfig] = {
    "fig4a": ExperimentConfig("MergingRandom", _EVEN, m_rule="n^2"),
    "fig4b": ExperimentConfig("MergingRandom", _EVEN, m_rule="2n"),
    "fig4c": ExperimentConfig("MergingCluster1D", _EVEN, m_rule="2n"),
    "fig4d": ExperimentConfig("MergingCluster2D", (9, 16, 25, 36, 49), m_rule="2n"),
    "fig5a": ExperimentConfig("ClusteringGrouped", _EVEN, m_rule="n", rounds=1),
    "fig5b": ExperimentConfig("Combined", _EVEN, m_rule="2n", rounds=2),
}


def preset(name: str, **overrides) -> ExperimentConfig:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    cfg = PRESETS[name]
    if overrides.get("n_range") is not None:
        overrides["n_range"] = tuple(overrides["n_range"])
    return replace(cfg, **{k: v for k, v in overrides.items() if v is not None})


# instances ---------------------------------------------------------------------------

def instance(cfg: ExperimentConfig, n: int, trial: int) -> RequestSet:
    seed = cfg.seed + trial
    m = m_of(cfg.m_rule, n)
    if cfg.experiment == "MergingRandom":
        return gen_uniform(n, m, seed=seed)
    if cfg.experiment in ("ClusteringGrouped", "Combined"):
        return gen_grouped(n, m, cfg.group_size, cfg.bias, seed=seed)
    if cfg.experiment == "MergingCluster1D":
        return cluster_requests_1d(n, nn_only=cfg.nn_only, sample=m, seed=seed)
    return cluster_requests_2d(n, nn_only=cfg.nn_only, sample=m, seed=seed)


def clustering_resource(rs: RequestSet, hierarchy) -> ResourceState:
    """Per hierarchy part, the cheaper of Bell pairs and a GHZ ladder over the
    part's active nodes (an odd count is padded with one outside node)."""

    def synth(sub: RequestSet, offset: int) -> ResourceState:
        bell = bell_union(sub, offset)
        nodes = sub.active_nodes()
        if len(nodes) % 2:
            spare = next((v for v in range(rs.n) if v not in set(nodes)), None)
            if spare is None:
                return bell
            nodes = sorted([*nodes, spare])
        if storage_formula("GhzLadder", len(nodes)) >= bell.storage:
            return bell
        return build_on("GhzLadder", nodes, list(sub), offset)

    res = parts_resource(rs, hierarchy, synth)
    res.meta["strategy"] = CLUSTERING
    return res


def resources(cfg: ExperimentConfig, rs: RequestSet) -> dict[str, ResourceState | int]:
    out: dict[str, ResourceState | int] = {BELL_UNION: bell_union(rs), MERGING: merge_resource(rs)}
    if CLUSTERING in cfg.strategies():
        h = build_hierarchy(rs, rounds=cfg.rounds)
        out[CLUSTERING] = clustering_resource(rs, h)
        comb = parts_resource(rs, h, merge_resource)
        comb.meta["strategy"] = COMBINED
        out[COMBINED] = comb
    if OPTIMAL in cfg.strategies():
        out[OPTIMAL] = rs.n
    return out


def _check(res: ResourceState, rs: RequestSet) -> str:
    base = res.union()
    for i, r in enumerate(rs):
        v = verify_recipe(res, r, request_id=i, base=base)
        if not v.ok:
            return f"request {i}: {v.detail}"
    return ""


def run_instance(cfg: ExperimentConfig, n: int, trial: int) -> dict[str, int]:
    """Total storage per strategy for one verified instance."""
    rs = instance(cfg, n, trial)
    out = {}
    for name, res in resources(cfg, rs).items():
        if isinstance(res, int):
            out[name] = res
            continue
        problem = _check(res, rs)
        if problem:
            raise _InstanceFailure(name, n, trial, rs, problem)
        out[name] = res.storage
    return out


class _InstanceFailure(Exception):
    def __init__(self, strategy, n, trial, rs, detail):
        super().__init__(f"{strategy} failed on n={n} trial={trial}: {detail}")
        self.payload = {"strategy": strategy, "n": n, "trial": trial, "detail": detail, "requests": rs.to_dict()}


def _job(args):
    cfg, n, trial = args
    try:
        return n, trial, run_instance(cfg, n, trial), None
    except _InstanceFailure as exc:
        return n, trial, None, (str(exc), exc.payload)


def threads() -> int:
    raw = os.environ.get("QNET_THREADS", "")
    if raw.strip():
        return max(1, int(raw))
    return max(1, os.cpu_count() or 1)


@dataclass
class Row:
    n: int
    strategy: str
    mean_total: float
    mean_per_node: float
    std: float
    std_per_node: float
    trials: int


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list[Row]
    raw: dict[int, list[dict[str, int]]] = field(default_factory=dict)

    def row(self, n: int, strategy: str) -> Row:
        for r in self.rows:
            if r.n == n and r.strategy == strategy:
                return r
        raise KeyError((n, strategy))

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key, value in asdict(self.config).items():
            if isinstance(value, tuple):
                value = " ".join(map(str, value))
            buf.write(f"# {key}={value}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "strategy", "mean_total", "mean_per_node", "std", "std_per_node", "trials"])
        for r in self.rows:
            w.writerow([r.n, r.strategy, f"{r.mean_total:.4f}", f"{r.mean_per_node:.4f}", f"{r.std:.4f}", f"{r.std_per_node:.4f}", r.trials])
        return buf.getvalue()


def read_csv(text: str) -> list[dict]:
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    out = []
    for rec in csv.DictReader(lines):
        out.append(
            {
                "n": int(rec["n"]),
                "strategy": rec["strategy"],
                **{k: float(rec[k]) for k in ("mean_total", "mean_per_node", "std", "std_per_node")},
                "trials": int(rec["trials"]),
            }
        )
    return out


def run_experiment(
    cfg: ExperimentConfig,
    workers: int | None = None,
    dump_dir: str | Path | None = None,
    progress: Callable[[int, int], None] | None = None,
) -> ExperimentResult:
    """Mean and spread of storage per n and strategy; seeds are seed + trial."""
    jobs = [(cfg, n, t) for n in cfg.n_range for t in range(cfg.trials)]
    workers = threads() if workers is None else max(1, workers)
    results: dict[tuple[int, int], dict[str, int]] = {}
    if workers == 1:
        done = map(_job, jobs)
        pool = None
    else:
        pool = ProcessPoolExecutor(max_workers=workers)
        done = pool.map(_job, jobs, chunksize=max(1, len(jobs) // (4 * workers)))
    try:
        for count, (n, t, storage, failure) in enumerate(done, 1):
            if failure is not None:
                message, payload = failure
                path = Path(dump_dir or ".") / f"failed_{cfg.experiment}_n{n}_t{t}.json"
                path.write_text(json.dumps(payload, indent=2))
                raise ExperimentError(message, path)
            results[(n, t)] = storage
            if progress:
                progress(count, len(jobs))
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)
    rows = []
    raw: dict[int, list[dict[str, int]]] = {}
    for n in cfg.n_range:
        per = [results[(n, t)] for t in range(cfg.trials)]
        raw[n] = per
        for s in cfg.strategies():
            vals = np.array([p[s] for p in per], dtype=float)
            std = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
            rows.append(Row(n, s, float(vals.mean()), float(vals.mean()) / n, std, std / n, cfg.trials))
    return ExperimentResult(cfg, rows, raw)


def growth(result: ExperimentResult, strategy: str) -> float:
    """Per-node mean at the largest n over the smallest n."""
    ns = result.config.n_range
    first = result.row(ns[0], strategy).mean_per_node
    last = result.row(ns[-1], strategy).mean_per_node
    return math.inf if first == 0 else last / first


__all__ = [
    "ExperimentConfig",
    "ExperimentError",
    "ExperimentResult",
    "PRESETS",
    "Row",
    "preset",
    "m_of",
    "instance",
    "resources",
    "clustering_resource",
    "run_instance",
    "run_experiment",
    "read_csv",
    "growth",
    "threads",
]
