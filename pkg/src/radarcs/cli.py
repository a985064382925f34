"""Command-line entry point: generate instances, solve them, run diagnostics,
and drive the Monte Carlo experiments.

Exit codes: 0 success, 2 usage or infeasible parameters, 3 numerical
non-convergence, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io as bundle_io
from .analysis import (
    check_conditions,
    exact_rip_constant,
    gram_closed_form,
    report_to_text,
    tail_probe_opnorm,
    write_survival_csv,
)
from .config import DopplerMode, GridDomainError, RadarConfig
from .experiments import (
    ExperimentSpec,
    ThresholdRule,
    emit_csv,
    parse_experiment_config,
    run_experiment,
    spec_from_mapping,
)
from .operator import MeasurementOperator, SizeCapError
from .signals import SignalFamily, complex_gaussian, derived_rng, generate_signals
from .solvers import (
    SingularSupportError,
    SolverOptions,
    basis_pursuit_denoise,
    check_lasso_optimality,
    declare_success,
    lasso,
    paper_lambda,
)
from .supports import (
    ParameterError,
    make_scene,
    sample_balanced_support,
    sample_most_balanced_support,
    sample_unconstrained_support,
    threshold_amplitude,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NO_CONVERGENCE = 3
EXIT_IO = 4


def _add_dims(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--nt", type=int, required=True, help="number of transmitters")
    parser.add_argument("--nr", type=int, required=True, help="number of receivers")
    parser.add_argument("--ntime", type=int, required=True, help="samples per period")
    parser.add_argument(
        "--doppler",
        choices=[m.value for m in DopplerMode],
        default=DopplerMode.DOPPLER_FREE.value,
    )


def _cfg_from(args) -> RadarConfig:
    return RadarConfig(args.nt, args.nr, args.ntime, DopplerMode(args.doppler))


def _sample_support(cfg, s, eta_token, seed):
    if eta_token == "free":
        return sample_unconstrained_support(cfg, s, seed)
    if eta_token == "near":
        return sample_most_balanced_support(cfg, s, seed)
    return sample_balanced_support(cfg, s, int(eta_token), seed)


def cmd_generate(args) -> int:
    cfg = _cfg_from(args)
    family = SignalFamily(args.family)
    rng = derived_rng(args.seed, "generate")
    seeds = rng.integers(0, 2**63, size=3)
    sig = generate_signals(cfg, family, int(seeds[0]))
    support = _sample_support(cfg, args.s, args.eta, int(seeds[1]))
    amplitude = args.amplitude
    if amplitude is None:
        amplitude = threshold_amplitude(cfg, args.sigma) if args.sigma > 0 else 1.0
    scene = make_scene(cfg, support, amplitude, int(seeds[2]))
    op = MeasurementOperator(cfg, sig)
    y = op.forward(scene)
    if args.sigma > 0:
        y = y + args.sigma * complex_gaussian(rng, (cfg.n_measurements,))
    bundle_io.write_bundle(
        args.out, cfg, sig, scene, y, args.sigma, materialize=args.materialize
    )
    print(f"wrote instance bundle to {args.out}")
    return EXIT_OK


def cmd_solve(args) -> int:
    bundle = bundle_io.read_bundle(args.out)
    cfg, sig = bundle.cfg, bundle.signals
    op = MeasurementOperator(cfg, sig)
    opts = SolverOptions(max_iterations=args.max_iterations)
    lam = args.lam if args.lam is not None else paper_lambda(cfg, bundle.sigma or 1.0)
    if args.solver == "lasso":
        result = lasso(cfg, sig, bundle.measurements, lam, opts, operator=op)
    else:
        result = basis_pursuit_denoise(
            cfg, sig, bundle.measurements, args.rho, opts, operator=op
        )
    amplitude = float(np.min(np.abs(bundle.scene.coefficients)))
    verdict = declare_success(cfg, bundle.scene, result.x_hat, amplitude / 2.0)

    lines = {
        "solver": args.solver,
        "lambda": repr(lam) if args.solver == "lasso" else "",
        "rho": repr(args.rho) if args.solver == "bpdn" else "",
        "converged": str(result.converged).lower(),
        "iterations": result.iterations,
        "final_objective": repr(result.final_objective),
        "residual_norm": repr(result.residual_norm),
        "success": str(verdict.success).lower(),
        "support_match": str(verdict.support_match).lower(),
        "max_error": repr(verdict.max_error),
        "nonzeros": len(result.recovered_support),
    }
    if args.solver == "lasso":
        kkt = check_lasso_optimality(
            cfg, sig, bundle.measurements, lam, result.x_hat, operator=op
        )
        lines["kkt_off_support"] = repr(kkt.off_support_residual)
        lines["kkt_on_support"] = repr(kkt.on_support_residual)
    if bundle.sigma > 0:
        noise_guess = bundle.measurements - op.forward(bundle.scene)
        cond = check_conditions(
            cfg, sig, bundle.scene, noise_guess, bundle.sigma, operator=op
        )
        for key, value in (
            ("mu", cond.mu),
            ("c1", cond.c1.value),
            ("c2", cond.c2.value),
            ("c3", cond.c3.value),
            ("c4", cond.c4.value),
            ("c5", cond.c5.value),
            ("conditions_hold", str(cond.all_hold).lower()),
        ):
            lines[f"conditions.{key}"] = value
    bundle_io.write_key_values(Path(args.out) / bundle_io.RESULT_FILE, lines)
    print(f"converged={lines['converged']} success={lines['success']}")
    return EXIT_OK if result.converged else EXIT_NO_CONVERGENCE


def cmd_analyze(args) -> int:
    bundle = bundle_io.read_bundle(args.out)
    cfg, sig = bundle.cfg, bundle.signals
    report = gram_closed_form(cfg, sig, bundle.scene.support)
    print(f"support_size = {len(bundle.scene.support)}")
    print(f"gram_deviation = {report.deviation:.12g}")
    print(f"coherence_within = {report.coherence_within:.12g}")
    for c, dev in sorted(report.block_deviations.items()):
        print(f"block_deviation.{c} = {dev:.12g}")
    if bundle.sigma > 0:
        op = MeasurementOperator(cfg, sig)
        noise_guess = bundle.measurements - op.forward(bundle.scene)
        cond = check_conditions(
            cfg, sig, bundle.scene, noise_guess, bundle.sigma, operator=op
        )
        sys.stdout.write(report_to_text(cond))
    return EXIT_OK


def cmd_rip(args) -> int:
    cfg = _cfg_from(args)
    sig = generate_signals(cfg, SignalFamily(args.family), args.seed)
    delta = exact_rip_constant(cfg, sig, args.s)
    print(f"delta_{args.s} = {delta:.12g}")
    return EXIT_OK


def cmd_tailprobe(args) -> int:
    cfg = _cfg_from(args)
    eta = None if args.eta == "free" else int(args.eta)
    result = tail_probe_opnorm(
        cfg, SignalFamily(args.family), args.s, eta, args.trials, args.seed
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_survival_csv(out / bundle_io.CURVES_FILE, result)
    print(f"median_deviation = {result.median_deviation:.12g}")
    print(f"wrote {out / bundle_io.CURVES_FILE}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    overrides = {
        "n_transmit": args.nt,
        "n_receive": args.nr,
        "n_samples": args.ntime,
        "doppler_mode": args.doppler,
        "family": args.family,
        "sigma": args.sigma,
        "sparsity_grid": args.s,
        "eta_list": args.eta,
        "trials": args.trials,
        "master_seed": args.seed,
    }
    if args.config:
        spec = parse_experiment_config(args.config, overrides)
    else:
        missing = [k for k in ("n_transmit", "n_receive", "n_samples", "sparsity_grid")
                   if overrides.get(k) is None]
        if missing:
            raise ParameterError(f"missing required flags/config keys: {missing}")
        spec = spec_from_mapping(
            {k: str(v) for k, v in overrides.items() if v is not None}
        )
    result = run_experiment(spec, n_threads=args.threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    emit_csv(result, out / bundle_io.CURVES_FILE)
    print("s,eta,success_rate")
    for row in result.rows:
        eta = "free" if row.eta is None else row.eta
        print(f"{row.s},{eta},{row.success_rate:.6f}")
    print(f"wrote {out / bundle_io.CURVES_FILE}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="radarcs",
        description="Sparse recovery for structured radar-type measurement operators.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a random instance bundle")
    _add_dims(p)
    p.add_argument("--s", type=int, required=True, help="sparsity")
    p.add_argument("--eta", default="free",
                   help="balancedness: an integer, 'near', or 'free'")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--amplitude", type=float, default=None,
                   help="target magnitude (default: the noise-threshold level)")
    p.add_argument("--family", choices=[f.value for f in SignalFamily],
                   default=SignalFamily.COMPLEX_GAUSSIAN.value)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--materialize", action="store_true",
                   help="also store the raw signal arrays")
    p.add_argument("--out", default=".", help="bundle directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="solve an instance bundle")
    p.add_argument("--out", default=".", help="bundle directory")
    p.add_argument("--solver", choices=["lasso", "bpdn"], default="lasso")
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--rho", type=float, default=0.0)
    p.add_argument("--max-iterations", type=int, default=5000)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("analyze", help="Gram/conditions diagnostics for a bundle")
    p.add_argument("--out", default=".", help="bundle directory")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("rip", help="exact restricted-isometry constant (tiny grids)")
    _add_dims(p)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--family", choices=[f.value for f in SignalFamily],
                   default=SignalFamily.COMPLEX_GAUSSIAN.value)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_rip)

    p = sub.add_parser("tailprobe", help="Gram-deviation survival curve")
    _add_dims(p)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--eta", default="1")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--family", choices=[f.value for f in SignalFamily],
                   default=SignalFamily.COMPLEX_GAUSSIAN.value)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_tailprobe)

    p = sub.add_parser("experiment", help="success-rate Monte Carlo over (s, eta)")
    p.add_argument("--config", default=None, help="flat key-value spec file")
    p.add_argument("--nt", type=int, default=None)
    p.add_argument("--nr", type=int, default=None)
    p.add_argument("--ntime", type=int, default=None)
    p.add_argument("--doppler", choices=[m.value for m in DopplerMode], default=None)
    p.add_argument("--family", choices=[f.value for f in SignalFamily], default=None)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--s", default=None, help="comma-separated sparsity grid")
    p.add_argument("--eta", default=None, help="comma-separated etas, 'free' allowed")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParameterError, GridDomainError, SizeCapError, SingularSupportError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
