"""Command-line interface: generate / run / cv / bench / diagnose.

Each subcommand emits machine-readable output (JSON, or CSV where records
are tabular). Exit status is 0 on success and nonzero on invalid arguments
or an all-failed sweep.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .bench import (
    AllFailedError,
    BenchConfig,
    BenchmarkReport,
    CvResult,
    Method,
    cross_validate,
    default_seeds,
    run_benchmark,
    run_method,
)
from .completion import CompletionConfig, soft_impute
from .diagnostics import AuditParams, check_lower_re, run_bound_audit
from .pipelines import FinalSolver, PipelineParams
from .synth import ExperimentSpec, generate_instance, load_instance, save_instance

_METHODS = {m.value: m for m in Method}
_SOLVERS = {s.value: s for s in FinalSolver}


def _add_spec_flags(p: argparse.ArgumentParser, require: bool) -> None:
    p.add_argument("--m", type=int, required=require, help="number of rows")
    p.add_argument("--n", type=int, required=require, help="number of columns")
    p.add_argument("--rank", type=int, required=require, help="target rank")
    p.add_argument("--sparsity", type=int, required=require, help="nonzeros in the coefficients")
    p.add_argument("--alpha-obs", type=float, default=0.5, help="observation probability")
    p.add_argument("--noise-sigma", type=float, default=1.0, help="label noise level")
    p.add_argument("--seed", type=int, default=0, help="instance seed")


def _add_out_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", type=str, default=None, help="output path (stdout when omitted)")
    p.add_argument("--format", choices=["json", "csv"], default="json")


def _parse_grid(text: str) -> list[float]:
    vals = [float(tok) for tok in text.split(",") if tok.strip()]
    if not vals:
        raise ValueError(f"empty grid: {text!r}")
    return vals


def _parse_sizes(text: str) -> list[tuple[int, int]]:
    sizes = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        m, _, n = tok.partition("x")
        sizes.append((int(m), int(n)))
    if not sizes:
        raise ValueError(f"empty sizes: {text!r}")
    return sizes


def _instance_from_args(args) -> tuple[ExperimentSpec, object]:
    if getattr(args, "instance", None):
        return load_instance(args.instance)
    if args.m is None or args.n is None or args.rank is None or args.sparsity is None:
        raise ValueError("either --instance or all of --m/--n/--rank/--sparsity are required")
    spec = ExperimentSpec(
        m=args.m,
        n=args.n,
        r=args.rank,
        s=args.sparsity,
        alpha_obs=args.alpha_obs,
        noise_sigma=args.noise_sigma,
        seed=args.seed,
    )
    return spec, generate_instance(spec)


def _emit(payload: dict, args) -> None:
    text = json.dumps(payload, indent=2)
    if args.out is None:
        print(text)
    else:
        Path(args.out).write_text(text)


def _params_from_args(args) -> PipelineParams:
    return PipelineParams(
        lambda1=args.lambda1,
        lambda2=args.lambda2,
        final_solver=_SOLVERS[args.solver],
    )


def _cmd_generate(args) -> int:
    spec = ExperimentSpec(
        m=args.m,
        n=args.n,
        r=args.rank,
        s=args.sparsity,
        alpha_obs=args.alpha_obs,
        noise_sigma=args.noise_sigma,
        seed=args.seed,
    )
    instance = generate_instance(spec)
    save_instance(args.out, spec, instance)
    print(f"wrote instance to {args.out}")
    return 0


def _cmd_run(args) -> int:
    spec, instance = _instance_from_args(args)
    record = run_method(
        instance,
        _METHODS[args.method],
        _params_from_args(args),
        seed=spec.seed,
        impute_test=args.impute_test,
    )
    report = BenchmarkReport(records=[record], cv_curves={}, workers=1)
    if args.format == "csv" and args.out is not None:
        report.write_csv(args.out)
    else:
        _emit(report.to_dict(), args)
    print(
        f"{record.method}: rmse={record.test_rmse:.6g} "
        f"f1={record.support_f1:.3f} time={record.total_seconds:.3f}s",
        file=sys.stderr,
    )
    return 0


def _cmd_cv(args) -> int:
    spec = ExperimentSpec(
        m=args.m,
        n=args.n,
        r=args.rank,
        s=args.sparsity,
        alpha_obs=args.alpha_obs,
        noise_sigma=args.noise_sigma,
        seed=args.seed,
    )
    result: CvResult = cross_validate(
        spec,
        _METHODS[args.method],
        _parse_grid(args.lambda1_grid),
        _parse_grid(args.lambda2_grid),
        base_params=PipelineParams(
            lambda1=1.0, lambda2=1.0, final_solver=_SOLVERS[args.solver]
        ),
        impute_test=args.impute_test,
    )
    payload = {
        "method": args.method,
        "lambda1_grid": result.lambda1_grid,
        "lambda2_grid": result.lambda2_grid,
        "rmse_curve": np.where(np.isnan(result.curve), None, result.curve).tolist(),
        "best_lambda1": result.best_lambda1,
        "best_lambda2": result.best_lambda2,
        "best_rmse": result.best_rmse,
        "records": [asdict(r) for r in result.records],
    }
    _emit(payload, args)
    return 0


def _cmd_bench(args) -> int:
    if args.sizes:
        sizes = _parse_sizes(args.sizes)
    elif args.m is not None and args.n is not None:
        sizes = [(args.m, args.n)]
    else:
        raise ValueError("bench needs --sizes or both --m and --n")
    seeds = [int(tok) for tok in args.seeds.split(",")] if args.seeds else default_seeds()
    methods = [_METHODS[tok.strip()] for tok in args.methods.split(",")]
    cfg = BenchConfig(
        sizes=sizes,
        rank=args.rank,
        sparsity=args.sparsity,
        alpha_obs=args.alpha_obs,
        noise_sigma=args.noise_sigma,
        seeds=seeds,
        methods=methods,
        lambda1_grid=_parse_grid(args.lambda1_grid),
        lambda2_grid=_parse_grid(args.lambda2_grid),
        final_solver=_SOLVERS[args.solver],
        workers=args.workers,
        impute_test=args.impute_test,
    )
    report = run_benchmark(cfg)
    if args.format == "csv":
        if args.out is None:
            raise ValueError("--format csv requires --out")
        report.write_csv(args.out)
    else:
        _emit(report.to_dict(), args)
    n_fail = sum(1 for r in report.records if r.error is not None)
    print(f"{len(report.records)} records ({n_fail} failed)", file=sys.stderr)
    return 0


def _cmd_diagnose(args) -> int:
    spec, instance = _instance_from_args(args)
    cfg = CompletionConfig(args.lambda1, max_iters=args.max_iters)
    res = soft_impute(instance.masked, cfg, keep_iterates=True)
    audit = run_bound_audit(
        instance, res.iterates, AuditParams(penalty=args.lambda2, curvature=args.curvature)
    )
    limit = res.iterates[-1]
    probe = check_lower_re(
        limit.T @ limit, curvature=args.curvature, re_tol=args.re_tol, probes=args.probes
    )
    payload = {
        "completion_iterations": res.iterations_used,
        "completion_converged": res.converged,
        "audit": audit.to_dict(),
        "re_probe": {
            "holds": probe.holds,
            "worst_margin": probe.worst_margin,
            "n_probes": probe.n_probes,
        },
    }
    _emit(payload, args)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparselr",
        description="Sparse parameter recovery on low-rank designs with missing entries",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic instance to a directory")
    _add_spec_flags(p, require=True)
    p.add_argument("--out", type=str, required=True, help="output directory")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("run", help="run one method on one instance")
    _add_spec_flags(p, require=False)
    p.add_argument("--instance", type=str, default=None, help="instance directory to load")
    p.add_argument("--method", choices=sorted(_METHODS), required=True)
    p.add_argument("--lambda1", type=float, required=True, help="completion penalty")
    p.add_argument("--lambda2", type=float, required=True, help="sparse-stage penalty")
    p.add_argument("--solver", choices=sorted(_SOLVERS), default=FinalSolver.IMATCS.value)
    p.add_argument("--impute-test", action="store_true", help="predict from completed test rows")
    _add_out_flags(p)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("cv", help="cross-validation sweep over both penalty grids")
    _add_spec_flags(p, require=True)
    p.add_argument("--method", choices=sorted(_METHODS), required=True)
    p.add_argument("--lambda1-grid", type=str, required=True, help="comma-separated values")
    p.add_argument("--lambda2-grid", type=str, required=True, help="comma-separated values")
    p.add_argument("--solver", choices=sorted(_SOLVERS), default=FinalSolver.IMATCS.value)
    p.add_argument("--impute-test", action="store_true")
    _add_out_flags(p)
    p.set_defaults(func=_cmd_cv)

    p = sub.add_parser("bench", help="full sweep: sizes x methods x seeds x grid")
    p.add_argument("--sizes", type=str, default=None, help="e.g. 500x200,2000x500")
    _add_spec_flags(p, require=False)
    p.add_argument("--seeds", type=str, default=None, help="comma-separated seeds")
    p.add_argument("--methods", type=str, default=",".join(sorted(_METHODS)))
    p.add_argument("--lambda1-grid", type=str, default="0.05")
    p.add_argument("--lambda2-grid", type=str, default="0.01")
    p.add_argument("--solver", choices=sorted(_SOLVERS), default=FinalSolver.IMATCS.value)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--impute-test", action="store_true")
    _add_out_flags(p)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("diagnose", help="completion-trace audit and lower-RE probe")
    _add_spec_flags(p, require=False)
    p.add_argument("--instance", type=str, default=None)
    p.add_argument("--lambda1", type=float, default=0.1, help="completion penalty for the trace")
    p.add_argument("--lambda2", type=float, default=0.1, help="sparse penalty for the audit")
    p.add_argument("--max-iters", type=int, default=100, help="trace length cap")
    p.add_argument("--curvature", type=float, default=1.0)
    p.add_argument("--re-tol", type=float, default=0.0)
    p.add_argument("--probes", type=int, default=3000)
    _add_out_flags(p)
    p.set_defaults(func=_cmd_diagnose)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AllFailedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
