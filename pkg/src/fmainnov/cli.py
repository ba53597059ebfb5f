"""Command line front end.

Exit codes: 0 success, 2 invalid input or arguments, 3 numerical failure.
"""

import argparse
import json
import sys
import warnings

from . import io
from .basis import DEFAULT_DIM, BasisSpec, kernel_on_grid, project_curves
from .benchmark import BenchmarkConfig, run_benchmark, write_outputs
from .core import FunctionalSample, center, fpca, lag_cov
from .errors import NumericalError, ValidationError
from .innovations import fit_fma, predict_one_step
from .selection import (
    DEFAULTS,
    select_all,
    select_d,
    select_dq_ffpe,
    select_q_aicc,
    select_q_lb,
)
from .simulate import SimConfig, simulate_fma


def _sample(path):
    return FunctionalSample(io.read_coeffs(path))


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_simulate(args):
    cfg = SimConfig(n=args.n, D=args.D, q=args.q, kappas=tuple(args.kappa or ()),
                    sigma_profile=args.sigma, seed=args.seed)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        sample, truth = simulate_fma(cfg, args.rep)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    io.write_coeffs(args.out, sample.coeffs)
    if args.truth:
        io.write_json(args.truth, io.true_model_doc(truth, cfg.D, {"seed": args.seed, "rep": args.rep}))
    return 0


def cmd_fit(args):
    sample = _sample(args.input)
    model = fit_fma(sample, args.d, args.q, k=args.k)
    model.provenance.update({"command": " ".join(sys.argv), "input": args.input})
    io.save_model(args.out, model)
    return 0


def cmd_select(args):
    sample = center(_sample(args.input))
    eig = fpca(lag_cov(sample, 0))
    params = dict(P=args.P, p=args.p, hbar=args.hbar, alpha=args.alpha,
                  q_max=args.qmax, d_max=args.dmax)
    if args.method == "all":
        doc = select_all(sample, **params, k=args.k).as_dict()
    elif args.method == "ffpe":
        d, q, trail = select_dq_ffpe(sample, args.dmax, args.qmax, args.k, eig=eig)
        doc = {"method": "ffpe", "d": d, "q": q, "params": params,
               "trail": [r.as_dict() for r in trail]}
    elif args.method == "ind":
        d, d_tve, trail = select_d(sample, args.P, args.p, args.hbar, args.alpha, args.dmax, eig=eig)
        doc = {"method": "ind", "d": d, "d_tve": d_tve, "params": params,
               "trail": [r.as_dict() for r in trail]}
    else:
        trail = []
        d = args.d
        if d is None:
            d, _, trail = select_d(sample, args.P, args.p, args.hbar, args.alpha, args.dmax, eig=eig)
        x = sample.coeffs @ eig.vectors[:, :d]
        if args.method == "lb":
            q, t = select_q_lb(x, args.hbar, args.alpha, args.qmax)
        else:
            q, t = select_q_aicc(x, args.qmax, args.k)
        doc = {"method": args.method, "d": d, "q": q, "params": params,
               "trail": [r.as_dict() for r in trail + t]}
    _emit(json.dumps(doc, indent=1) + "\n", args.out)
    return 0


def cmd_predict(args):
    model = io.load_model(args.model)
    coeffs = io.read_coeffs(args.input)
    if coeffs.shape[1] != model.basis.dim:
        raise ValidationError(f"input has {coeffs.shape[1]} coefficients, model expects {model.basis.dim}")
    pred, _ = predict_one_step(model, coeffs)
    if args.out:
        io.write_coeffs(args.out, pred[None, :])
    else:
        sys.stdout.write(",".join(repr(float(v)) for v in pred) + "\n")
    return 0


def cmd_benchmark(args):
    cfg = BenchmarkConfig.from_json(args.config)
    result = run_benchmark(cfg)
    write_outputs(result, args.out, args.selection, args.audit)
    return 0


def cmd_ingest(args):
    grid = io.read_curves(args.input)
    io.write_coeffs(args.out, project_curves(grid, BasisSpec(args.D)))
    return 0


def cmd_kernel(args):
    model = io.load_model(args.model)
    if not 1 <= args.lag <= model.q:
        raise ValidationError(f"lag {args.lag} outside 1..{model.q}")
    t, K = kernel_on_grid(model.embedded_theta(args.lag), args.grid_size, model.basis)
    io.write_grid(args.out, t, t, K)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fmainnov", description="Functional moving average estimation.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate an FMA(q) sample to a coefficient CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--D", type=int, default=DEFAULT_DIM)
    p.add_argument("--q", type=int, default=1)
    p.add_argument("--kappa", type=float, nargs="*", default=None,
                   help="one weight per lag (default 0.8 when q = 1)")
    p.add_argument("--sigma", choices=("slow", "fast"), default="fast")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rep", type=int, default=None, help="replication stream index")
    p.add_argument("--out", required=True)
    p.add_argument("--truth", help="write the true model JSON here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit an FMA(q) model on d principal directions")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--k", type=int, default=None, help="innovations steps (default from n)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("select", help="choose d and/or q")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--method", choices=("ffpe", "lb", "aicc", "ind", "all"), default="all")
    p.add_argument("--dmax", type=int, default=DEFAULTS["d_max"])
    p.add_argument("--qmax", type=int, default=DEFAULTS["q_max"])
    p.add_argument("--P", type=float, default=DEFAULTS["P"])
    p.add_argument("--p", type=int, default=DEFAULTS["p"])
    p.add_argument("--hbar", type=int, default=DEFAULTS["hbar"])
    p.add_argument("--alpha", type=float, default=DEFAULTS["alpha"])
    p.add_argument("--d", type=int, default=None, help="fixed d for lb/aicc (default: independence test)")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("predict", help="one-step prediction of the next curve")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("benchmark", help="Monte Carlo estimation-error and selection study")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="estimation-error report CSV")
    p.add_argument("--selection", default=None, help="selection-frequency CSV")
    p.add_argument("--audit", default=None, help="per-replication log CSV")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("ingest", help="project a curve CSV onto the Fourier basis")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--D", type=int, default=DEFAULT_DIM)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("kernel", help="evaluate an estimated operator kernel on a grid")
    p.add_argument("--model", required=True)
    p.add_argument("--grid-size", type=int, default=50)
    p.add_argument("--lag", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_kernel)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "simulate" and args.kappa is None and args.q == 1:
        args.kappa = [0.8]
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
