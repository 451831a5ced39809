"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 budget exhausted (results were
written, but some rows or the solve itself are flagged as unfinished).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .exact import OPTIMAL, branch_and_bound, brute_force
from .experiments import ConfigError, preset, run
from .htnet import HTParams, ground_state_probability, ht_run, run_seeds, run_summary
from .instances import InstanceError, IsingInstance
from .models import MODEL_KINDS, ModelSpec
from .report import FORMATS, emit
from .spectral import osc_check

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET = 0, 2, 3


def _ints(text):
    return tuple(int(x) for x in text.split(",") if x.strip())


def _floats(text):
    return tuple(float(x) for x in text.split(",") if x.strip())


def _bands(text):
    out = []
    for part in text.split(","):
        lo, hi = part.split(":")
        out.append((float(lo), float(hi)))
    return tuple(out)


def _formats(text):
    fmts = [f.strip() for f in text.split(",") if f.strip()]
    for f in fmts:
        if f not in FORMATS:
            raise argparse.ArgumentTypeError(f"format must be one of {FORMATS}")
    return fmts


def _model_flags(p):
    p.add_argument("--model", choices=MODEL_KINDS)
    p.add_argument("--size", help="spin count, or RxC for torus / chimera cells")
    p.add_argument("--k", type=int)
    p.add_argument("--dist", default="unweighted",
                   help="unweighted | bimodal | gaussian(mean,variance)")
    p.add_argument("--rewire-frac", type=float, default=0.0)
    p.add_argument("--p0", type=float, default=0.9)
    p.add_argument("--p1", type=float, default=0.1)


def _shared_flags(p, formats="json"):
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path)
    p.add_argument("--format", type=_formats, default=[formats])
    p.add_argument("--time-limit-s", type=float)
    p.add_argument("--node-budget", type=int)
    p.add_argument("--runs", type=int)
    p.add_argument("--jobs", type=int, default=1)


def _instance(args) -> IsingInstance:
    if getattr(args, "instance", None):
        return IsingInstance.load(args.instance)
    if not args.model or args.size is None:
        raise ConfigError("give --instance PATH or --model with --size")
    size = args.size if args.model in ("torus", "mattis-torus", "chimera") else int(args.size)
    spec = ModelSpec(args.model, size, args.dist, args.k, args.rewire_frac, args.p0, args.p1)
    if args.seed is None and not spec.deterministic:
        raise ConfigError(f"model {args.model} is random: --seed is required")
    return spec.build(args.seed or 0)


def _write(text: str, out: Path | None, suffix: str | None = None):
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    path = out.with_suffix(suffix) if suffix else out
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    print(path)


# ---------------------------------------------------------------------------


def cmd_generate(args) -> int:
    _write(_instance(args).to_json(), args.out)
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = _instance(args)
    method = args.method
    if method == "auto":
        method = "brute" if inst.n <= 26 else "bb"
    if method == "brute":
        rep = brute_force(inst, count_degeneracy=True,
                          method="blocked" if inst.n >= 16 else "gray")
    else:
        rep = branch_and_bound(inst, time_limit=args.time_limit_s, node_budget=args.node_budget,
                               target_gap=args.target_gap, seed=args.seed or 0)
    for fmt in args.format:
        if fmt == "csv":
            _write(rep.gap_trace_csv(), args.out, ".csv" if args.out else None)
        elif fmt == "json":
            _write(rep.to_json(), args.out, ".json" if args.out else None)
        else:
            _write(_gap_svg(rep), args.out, ".svg" if args.out else None)
    return EXIT_OK if rep.status == OPTIMAL or args.target_gap > 0 else EXIT_BUDGET


def _gap_svg(rep) -> str:
    import io

    from .report import _figure

    plt = _figure()
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    t = [row[0] for row in rep.gap_trace]
    g = [row[2] for row in rep.gap_trace]
    ax.step(t, g, where="post")
    ax.set_xlabel("elapsed (s)")
    ax.set_ylabel("optimality gap")
    fig.tight_layout()
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buf.getvalue()


def cmd_osc_check(args) -> int:
    inst = _instance(args)
    ground = args.ground_energy
    status = OPTIMAL
    if ground is None:
        rep = (brute_force(inst, method="blocked" if inst.n >= 16 else "gray")
               if inst.n <= 26 else
               branch_and_bound(inst, time_limit=args.time_limit_s,
                                node_budget=args.node_budget))
        ground, status = rep.best_energy, rep.status
        if status != OPTIMAL:
            _write(json.dumps({"status": status, "best_energy": ground,
                               "lower_bound": rep.lower_bound}), args.out)
            return EXIT_BUDGET
    verdict = osc_check(inst, ground)
    rec = verdict.to_record()
    rec["ground_energy"] = ground
    rec["matched_vector_index"] = verdict.matched_vector_index
    _write(json.dumps(rec), args.out)
    return EXIT_OK


def cmd_ht_run(args) -> int:
    inst = _instance(args)
    params = HTParams(dt=args.dt, tau=args.tau, x0=args.x0, bias=args.bias,
                      max_iters=args.max_iters,
                      fixpoint_tol=None if args.fixpoint_tol <= 0 else args.fixpoint_tol,
                      init_amplitude=args.init_amplitude)
    seed = args.seed or 0
    runs = args.runs or 1
    if runs > 1:
        if args.ground_energy is None:
            raise ConfigError("--runs > 1 needs --ground-energy")
        p = ground_state_probability(inst, args.ground_energy, runs, params, seed)
        _write(json.dumps({"runs": runs, "seed": seed, "ground_energy": args.ground_energy,
                           "p_gs": p}), args.out)
        return EXIT_OK
    s, e, trace = ht_run(inst, params, run_seeds(seed, 1)[0], args.ground_energy)
    for fmt in args.format:
        if fmt == "csv":
            _write(trace.to_csv(), args.out, ".csv" if args.out else None)
        elif fmt == "json":
            _write(run_summary(s, e, trace, seed), args.out, ".json" if args.out else None)
        else:
            _write(_trace_svg(trace), args.out, ".svg" if args.out else None)
    return EXIT_OK


def _trace_svg(trace) -> str:
    import io

    from .report import _figure

    plt = _figure()
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    y = trace.proximity_history if trace.proximity_history is not None else trace.energy_history
    ax.plot(trace.iterations, y)
    ax.set_xlabel("iteration")
    ax.set_ylabel("proximity" if trace.proximity_history is not None else "energy")
    fig.tight_layout()
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buf.getvalue()


def cmd_experiment(args) -> int:
    if args.seed is None:
        raise ConfigError("experiments need a master --seed")
    over = dict(runs=args.runs, node_budget=args.node_budget, time_limit=args.time_limit_s,
                jobs=args.jobs, replicates=args.replicates, sizes=args.sizes)
    if args.experiment == "scaling":
        over.update(bands=args.bands, budgets=args.budgets)
    elif args.experiment == "rewire-sweep":
        over.update(percents=args.percents)
    elif args.experiment == "connectivity-sweep":
        over.update(ks=args.ks)
    elif args.model:
        sizes = args.sizes or ()
        if args.size:
            sizes = sizes + (args.size,)
        if not sizes:
            raise ConfigError("--model needs --size or --sizes")
        over["points"] = tuple(ModelSpec(args.model, s, args.dist, args.k, p0=args.p0,
                                         p1=args.p1) for s in sizes)
        over["sizes"] = None
    cfg = preset(args.experiment, args.seed, **over)
    table = run(cfg)
    out = args.out or Path(f"{args.experiment}")
    for fmt in args.format:
        for path in emit(table, fmt, out.with_suffix("." + fmt)):
            print(path)
    return EXIT_BUDGET if table.flagged else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ising-continuum",
                                 description="Ising instances, spectral simplicity, "
                                             "Hopfield-Tank dynamics and exact solvers")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write an instance as JSON")
    _model_flags(p)
    _shared_flags(p)
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("solve", help="exact ground state")
    p.add_argument("--instance", type=Path)
    _model_flags(p)
    _shared_flags(p)
    p.add_argument("--method", choices=("auto", "brute", "bb"), default="auto")
    p.add_argument("--target-gap", type=float, default=0.0)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("osc-check", help="spectral simplicity verdict")
    p.add_argument("--instance", type=Path)
    _model_flags(p)
    _shared_flags(p)
    p.add_argument("--ground-energy", type=float)
    p.set_defaults(fn=cmd_osc_check)

    p = sub.add_parser("ht-run", help="Hopfield-Tank simulation")
    p.add_argument("--instance", type=Path)
    _model_flags(p)
    _shared_flags(p)
    p.add_argument("--ground-energy", type=float)
    p.add_argument("--max-iters", type=int, default=3000)
    p.add_argument("--dt", type=float, default=0.9)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--x0", type=float, default=3.0)
    p.add_argument("--bias", type=float, default=0.0)
    p.add_argument("--init-amplitude", type=float, default=0.25)
    p.add_argument("--fixpoint-tol", type=float, default=1e-6,
                   help="<= 0 runs the full iteration budget")
    p.set_defaults(fn=cmd_ht_run)

    for name, exp in (("exp-scaling", "scaling"), ("exp-rewire", "rewire-sweep"),
                      ("exp-connectivity", "connectivity-sweep"),
                      ("exp-simple-fraction", "simple-fraction")):
        p = sub.add_parser(name, help=f"{exp} experiment")
        _model_flags(p)
        _shared_flags(p, formats="csv")
        p.add_argument("--sizes", type=_ints)
        p.add_argument("--replicates", type=int)
        if exp == "scaling":
            p.add_argument("--bands", type=_bands)
            p.add_argument("--budgets", type=_ints)
        if exp == "rewire-sweep":
            p.add_argument("--percents", type=_ints)
        if exp == "connectivity-sweep":
            p.add_argument("--ks", type=_ints)
        p.set_defaults(fn=cmd_experiment, experiment=exp)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.fn(args)
    except (ConfigError, InstanceError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
