"""Command-line front end.

Every subcommand reads JSON from a path or ``-`` (stdin) and writes to
``--out`` or stdout, so stages can be piped::

    optnet generate --n 16 --m 32 --grouped 4 --seed 7 > req.json
    optnet merge req.json | optnet verify --requests req.json
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .clustering import build_hierarchy
from .constructions import KINDS, ConstructionError, build
from .merging import bell_union, cluster_then_merge, merge_resource
from .probabilistic import PlanningError, plan
from .requests import (
    RequestError,
    RequestSet,
    cluster_requests_1d,
    cluster_requests_2d,
    gen_grouped,
    gen_uniform,
    matrix_to_csv,
    virtual_matrices,
)
from .resource import ResourceState
from .verification import certify, verify_recipe


class CliError(Exception):
    pass


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None


def _load(path: str, kind):
    text = _read(path)
    try:
        return kind.from_json(text)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise CliError(f"{path}: not a valid {kind.__name__} ({exc})") from None


def _emit(text: str, out: str | None) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


# subcommands ---------------------------------------------------------------------------

def cmd_generate(a) -> int:
    if a.ensemble == "uniform":
        rs = gen_uniform(a.n, a.m, seed=a.seed) if a.grouped is None else gen_grouped(a.n, a.m, a.grouped, a.bias, seed=a.seed)
    elif a.ensemble == "cluster1d":
        rs = cluster_requests_1d(a.n, nn_only=a.nn_only, sample=a.m, seed=a.seed)
    else:
        rs = cluster_requests_2d(a.n, nn_only=a.nn_only, sample=a.m, seed=a.seed)
    if a.probabilities != "none" and rs.m:
        if a.probabilities == "uniform":
            p = np.full(rs.m, 1.0 / rs.m)
        else:
            p = np.random.default_rng(a.seed).dirichlet(np.ones(rs.m))
            p = np.maximum(p, 1e-12)
            p /= p.sum()
        rs = RequestSet.build(rs.n, list(rs), probabilities=list(p))
    _emit(rs.to_json(indent=a.indent), a.out)
    return 0


def cmd_matrices(a) -> int:
    rs = _load(a.input, RequestSet)
    cm = virtual_matrices(rs)
    mat = {"A": cm.A, "S": cm.S, "C": cm.C, "L": cm.L, "vA": cm.virtual_A, "vS": cm.virtual_S, "vC": cm.virtual_C}[a.which]
    if a.which.startswith("v"):
        labels = [f"{i}:{j}" for i in range(rs.n) for j in range(rs.n)]
        keep = np.flatnonzero(cm.mask) if not a.unmasked else np.arange(rs.n * rs.n)
        mat = mat[np.ix_(keep, keep)]
        labels = [labels[i] for i in keep]
    else:
        labels = None
    _emit(matrix_to_csv(mat, labels), a.out)
    return 0


def cmd_cluster(a) -> int:
    rs = _load(a.input, RequestSet)
    h = build_hierarchy(rs, rounds=a.rounds, order=a.order, k=a.k, seed=a.seed)
    _emit(h.to_json(indent=a.indent), a.out)
    return 0


def cmd_merge(a) -> int:
    rs = _load(a.input, RequestSet)
    if a.strategy == "merge":
        res = merge_resource(rs)
    elif a.strategy == "bell":
        res = bell_union(rs)
    else:
        res = cluster_then_merge(rs, rounds=a.rounds, seed=a.seed)
    _emit(res.to_json(indent=a.indent), a.out)
    return 0


def cmd_construct(a) -> int:
    reqs = _load(a.requests, RequestSet) if a.requests else None
    if reqs is not None and reqs.n != a.n:
        raise CliError(f"request set is over {reqs.n} nodes, --n is {a.n}")
    res = build(a.kind, a.n, reqs)
    _emit(res.to_json(indent=a.indent), a.out)
    return 0


def cmd_verify(a) -> int:
    res = _load(a.input, ResourceState)
    rs = _load(a.requests, RequestSet)
    lines = []
    failed = 0
    base = res.union()
    for i, r in enumerate(rs):
        if a.search:
            v = certify(res, r, i, search=True, budget=a.budget)
        elif i in res.recipes:
            v = verify_recipe(res, r, request_id=i, base=base)
        else:
            v = certify(res, r, i, search=False)
        failed += not v.ok
        lines.append(v.to_json())
    summary = {"requests": rs.m, "failed": failed, "storage": res.storage}
    if not a.quiet:
        lines.append(json.dumps({"summary": summary}))
        _emit("\n".join(lines), a.out)
    return 1 if failed else 0


def cmd_plan(a) -> int:
    rs = _load(a.input, RequestSet)
    pl = plan(
        rs,
        a.k,
        boundaries=tuple(a.boundaries),
        margin=a.margin,
        allow_failure=a.allow_failure,
        confidence=a.confidence,
    )
    _emit(pl.to_json(indent=a.indent), a.out)
    return 0


def cmd_experiment(a) -> int:
    over = {"trials": a.trials, "seed": a.seed, "n_range": a.n_range, "rounds": a.rounds}
    if a.preset:
        cfg = ex.preset(a.preset, **over)
    else:
        if not a.experiment or not a.n_range:
            raise CliError("either --preset or both --experiment and --n-range are required")
        kw = {k: v for k, v in over.items() if v is not None and k != "n_range"}
        cfg = ex.ExperimentConfig(
            a.experiment,
            tuple(a.n_range),
            m_rule=a.m_rule or "2n",
            group_size=a.group_size,
            bias=a.bias,
            nn_only=a.nn_only,
            **kw,
        )
    out = Path(a.out) if a.out not in (None, "-") else None
    dump = out.parent if out else Path(".")

    def progress(done: int, total: int) -> None:
        print(f"\r{done}/{total} instances", end="" if done < total else "\n", file=sys.stderr, flush=True)

    result = ex.run_experiment(cfg, workers=a.workers, dump_dir=dump, progress=None if a.quiet else progress)
    text = result.to_csv()
    _emit(text, a.out)
    if a.plot or a.gnuplot:
        if out is None:
            raise CliError("--plot and --gnuplot need --out")
        from .plotting import gnuplot_script, plot_rows

        if a.plot:
            for p in plot_rows(ex.read_csv(text), out, title=a.preset or cfg.experiment):
                print(f"wrote {p}", file=sys.stderr)
        if a.gnuplot:
            gp = out.with_suffix(".gp")
            gp.write_text(gnuplot_script(out.name, cfg.strategies()))
            print(f"wrote {gp}", file=sys.stderr)
    return 0


# parser --------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="optnet", description="Resource states for quantum network requests.")
    sub = p.add_subparsers(dest="cmd", required=True)

    def io(sp, positional: bool = True):
        if positional:
            sp.add_argument("input", nargs="?", default="-", help="JSON input path or - for stdin")
        sp.add_argument("--out", "-o", default=None, help="output path (default stdout)")
        sp.add_argument("--indent", type=int, default=None)

    g = sub.add_parser("generate", help="random request set")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--ensemble", choices=("uniform", "cluster1d", "cluster2d"), default="uniform")
    g.add_argument("--grouped", type=int, default=None, metavar="SIZE", help="group size for biased sampling")
    g.add_argument("--bias", type=float, default=10.0)
    g.add_argument("--nn-only", action="store_true")
    g.add_argument("--probabilities", choices=("none", "uniform", "random"), default="none")
    g.add_argument("--seed", type=int, default=0)
    io(g, positional=False)
    g.set_defaults(fn=cmd_generate)

    m = sub.add_parser("matrices", help="connectivity matrices as CSV")
    m.add_argument("--which", choices=("A", "S", "C", "L", "vA", "vS", "vC"), default="C")
    m.add_argument("--unmasked", action="store_true", help="keep virtual rows of unused qubits")
    io(m)
    m.set_defaults(fn=cmd_matrices)

    c = sub.add_parser("cluster", help="spectral cluster hierarchy")
    c.add_argument("--rounds", type=int, default=1)
    c.add_argument("--order", choices=("smallest", "largest"), default="smallest")
    c.add_argument("--k", type=int, default=None)
    c.add_argument("--seed", type=int, default=None)
    io(c)
    c.set_defaults(fn=cmd_cluster)

    mg = sub.add_parser("merge", help="resource state by merging")
    mg.add_argument("--strategy", choices=("merge", "bell", "cluster-merge"), default="merge")
    mg.add_argument("--rounds", type=int, default=1)
    mg.add_argument("--seed", type=int, default=None)
    io(mg)
    mg.set_defaults(fn=cmd_merge)

    k = sub.add_parser("construct", help="fixed construction for n nodes")
    k.add_argument("--kind", choices=KINDS, required=True)
    k.add_argument("--n", type=int, required=True)
    k.add_argument("--requests", default=None, help="request set to attach recipes for (default: the kind's family)")
    io(k, positional=False)
    k.set_defaults(fn=cmd_construct)

    v = sub.add_parser("verify", help="check a resource against requests; exit 1 on any failure")
    v.add_argument("--requests", required=True)
    v.add_argument("--search", action="store_true", help="fall back to bounded search")
    v.add_argument("--budget", type=int, default=200_000)
    v.add_argument("--quiet", "-q", action="store_true")
    io(v)
    v.set_defaults(fn=cmd_verify)

    pl = sub.add_parser("plan", help="inventory for k random requests")
    pl.add_argument("--k", type=int, required=True)
    pl.add_argument("--boundaries", type=float, nargs="+", default=[0.5])
    pl.add_argument("--margin", action="store_true")
    pl.add_argument("--allow-failure", type=float, default=0.0)
    pl.add_argument("--confidence", type=float, default=None)
    io(pl)
    pl.set_defaults(fn=cmd_plan)

    e = sub.add_parser("experiment", help="storage experiment as CSV")
    e.add_argument("--preset", choices=sorted(ex.PRESETS), default=None)
    e.add_argument("--experiment", choices=ex.EXPERIMENTS, default=None)
    e.add_argument("--n-range", type=int, nargs="+", default=None)
    e.add_argument("--m-rule", default=None)
    e.add_argument("--group-size", type=int, default=4)
    e.add_argument("--bias", type=float, default=10.0)
    e.add_argument("--nn-only", action="store_true")
    e.add_argument("--rounds", type=int, default=None)
    e.add_argument("--trials", type=int, default=None)
    e.add_argument("--seed", type=int, default=None)
    e.add_argument("--workers", type=int, default=None, help="processes (default QNET_THREADS or CPU count)")
    e.add_argument("--plot", action="store_true", help="also write PNG figures next to --out")
    e.add_argument("--gnuplot", action="store_true", help="also write a gnuplot script next to --out")
    e.add_argument("--quiet", "-q", action="store_true")
    e.add_argument("--out", "-o", default=None)
    e.set_defaults(fn=cmd_experiment)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (CliError, RequestError, ConstructionError, PlanningError, ex.ExperimentError, ValueError) as exc:
        print(f"optnet {args.cmd}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
