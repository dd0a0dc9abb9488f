"""Command-line front end: ``dvg <command> [options]``.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import warnings

import numpy as np

from . import calibration, charfn, dynamics, esscher, estimation, io, pricing
from .errors import DVGError, ValidationError


def _emit(obj, path=None):
    text = json.dumps(obj, indent=2, default=_json_default)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serialisable: {type(x).__name__}")


def _sig10(x):
    """Round to 10 significant digits for printed reports."""
    return float(io.fmt(x)) if isinstance(x, float) and math.isfinite(x) else x


def _round_tree(obj):
    if isinstance(obj, dict):
        return {k: _round_tree(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_tree(v) for v in obj]
    return _sig10(obj)


def _config(args, command, **kw):
    base = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            base = json.load(fh)
    base.update({k: v for k, v in kw.items() if v is not None})
    base["command"] = command
    return io.Config.from_dict(base)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_price(args):
    if args.request:
        with open(args.request) as fh:
            req = json.load(fh)
        model = io.params_from_dict(req.pop("model"))
        req = pricing.PricingRequest(model=model, **req)
    else:
        if not args.model_file:
            raise ValidationError("price needs --model-file or --request")
        missing = [n for n in ("spot", "strike", "steps") if getattr(args, n) is None]
        if missing:
            raise ValidationError(f"price needs --{', --'.join(missing)}")
        model = io.load_params(args.model_file)
        req = pricing.PricingRequest(spot=args.spot, strike=args.strike, steps=args.steps,
                                     model=model, kind=args.kind, rate=args.rate, h=args.h)
    if getattr(req.model, "measure", "Q") != "Q":
        raise ValidationError("pricing needs a risk-neutral model; map it with 'dvg map-q'")
    cfg = _config(args, "price", u_max=args.u_max, seed=args.seed, n_paths=args.n_paths)
    out = {"method": args.method, "spot": req.spot, "strike": req.strike, "steps": req.steps,
           "kind": req.kind}
    if args.method == "ft":
        out["price"] = pricing.price_fourier(req, pricing.FourierConfig(u_max=cfg.u_max))
    else:
        mc = pricing.price_mc(req, n_paths=cfg.n_paths, seed=cfg.seed)
        out.update(price=mc.price, stderr=mc.stderr, lower=mc.lower, upper=mc.upper,
                   n_paths=mc.n_paths, seed=cfg.seed)
    _emit(_round_tree(out), args.output)


def cmd_density(args):
    model = io.load_params(args.model_file)
    x = np.linspace(args.x_min, args.x_max, args.n)
    cfg = pricing.FourierConfig(tail_tol=args.tail_tol, max_u=args.max_u)
    f = pricing.density_inversion(model, args.steps, x, h=args.h, config=cfg)
    rows = [(io.fmt(a), io.fmt(b)) for a, b in zip(x, f)]
    _write_csv(args.output, ["x", "f"], rows)


def cmd_simulate(args):
    model = io.load_params(args.model_file)
    cfg = _config(args, "simulate", seed=args.seed)
    paths = dynamics.simulate(model, args.T, n_paths=args.n_paths, seed=cfg.seed)
    if args.output:
        paths.to_csv(args.output)
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        multi = paths.n_paths > 1
        w.writerow((["path"] if multi else []) + ["t", "Y", "V", "h"])
        for i in range(paths.n_paths):
            for j in range(paths.T):
                row = [j + 1, repr(float(paths.Y[i, j])), repr(float(paths.V[i, j])),
                       repr(float(paths.h[i, j]))]
                w.writerow(([i] if multi else []) + row)


def cmd_estimate(args):
    cfg = _config(args, "estimate", seed=args.seed, quad_order=args.quad_order)
    _, y = io.read_returns(args.returns)
    fit_cfg = estimation.FitConfig(n_starts=args.starts, seed=cfg.seed,
                                   quad_order=cfg.quad_order, variant=args.variant, v1=args.v1)
    res = estimation.fit(args.model, y, r=args.rate, config=fit_cfg)
    _emit(_round_tree(res.to_dict()), args.output)


def cmd_calibrate(args):
    moneyness = None if args.no_moneyness_filter else tuple(args.moneyness)
    cfg = _config(args, "calibrate", seed=args.seed, day_count=args.day_count)
    if not args.no_moneyness_filter:
        cfg.moneyness = moneyness
    quotes = io.read_surface(args.surface, annual_rates=args.annual_rates,
                             steps_per_year=cfg.steps_per_year)
    cal_cfg = calibration.CalibrationConfig(moneyness=moneyness, seed=cfg.seed,
                                            restarts=args.restarts)
    models = [m.strip() for m in args.models.split(",") if m.strip()]
    batch = calibration.batch_calibrate(quotes, models, args.loss, cal_cfg)
    os.makedirs(args.outdir, exist_ok=True)
    res_path = os.path.join(args.outdir, "results.csv")
    resid_path = os.path.join(args.outdir, "residuals.csv")
    calibration.write_results(batch, res_path, resid_path)
    summary = {m: {"days": len(rs),
                   "mean_loss": float(np.mean([r.loss for r in rs])) if rs else None}
               for m, rs in batch.items()}
    _emit(_round_tree({"results": res_path, "residuals": resid_path, "summary": summary}))


def cmd_map_q(args):
    p = io.load_params(args.model_file)
    if not isinstance(p, dynamics.DVGParams):
        raise ValidationError("map-q needs a historical (\"measure\": \"P\") parameter file")
    m = esscher.esscher_map(p)
    q = esscher.to_risk_neutral(p, identify=not args.keep_scale,
                                tilt_state=not args.no_state_tilt)
    doc = {"map": m.as_dict(), "P": io.params_to_dict(p), "Q": io.params_to_dict(q),
           "lambdaQ_closed_form": esscher.lambda_q_closed_form(p.lam, p.sigma)}
    if args.output:
        io.save_params(q, args.output)
    _emit(_round_tree(doc))


def cmd_table1(args):
    cfg = _config(args, "table1", seed=args.seed, n_paths=args.n_paths,
                  steps_per_month=args.steps_per_month)
    rows, summary = io.run_table1(cfg)
    if args.output:
        io.write_table1(rows, args.output)
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(io.TABLE1_COLUMNS)
        for r in rows:
            w.writerow([r["maturity"], io.fmt(r["strike"]), io.fmt(r["mc"]), io.fmt(r["lb"]),
                        io.fmt(r["ub"]), io.fmt(r["ft"]), "PASS" if r["pass"] else "FAIL"])
    print(summary, file=sys.stderr)


def cmd_coefs(args):
    model = io.load_params(args.model_file)
    u = np.linspace(args.u_min, args.u_max, args.n)
    path = charfn.coef_recursion(model, args.steps, 1j * u)
    A, B = path.at_remaining(args.steps)
    rows = [(io.fmt(ui), io.fmt(a.real), io.fmt(a.imag), io.fmt(b.real), io.fmt(b.imag))
            for ui, a, b in zip(u, A, B)]
    _write_csv(args.output, ["u", "ReA", "ImA", "ReB", "ImB"], rows)


def _write_csv(path, header, rows):
    fh = open(path, "w", newline="") if path else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    finally:
        if path:
            fh.close()


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dvg", description="Dynamic Variance-Gamma toolkit")
    parser.add_argument("--config", help="JSON file with configuration defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("price", help="price a European option")
    p.add_argument("--request", help="PricingRequest JSON (model embedded under 'model')")
    p.add_argument("--model-file")
    p.add_argument("--spot", type=float)
    p.add_argument("--strike", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--rate", type=float, help="per-step rate (overrides the model's r)")
    p.add_argument("--h", type=float, help="conditioning state (defaults to the model's h1)")
    p.add_argument("--kind", choices=("call", "put"), default="call")
    p.add_argument("--method", choices=("ft", "mc"), default="ft")
    p.add_argument("--n-paths", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--u-max", type=float, default=200.0)
    p.add_argument("--output")
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("density", help="density of the log-price by Fourier inversion")
    p.add_argument("--model-file", required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--x-min", type=float, default=-0.5)
    p.add_argument("--x-max", type=float, default=0.5)
    p.add_argument("--n", type=int, default=201)
    p.add_argument("--h", type=float)
    p.add_argument("--tail-tol", type=float, default=1e-10,
                   help="stop integrating once |phi(iu)| falls below this")
    p.add_argument("--max-u", type=float, default=1e5)
    p.add_argument("--output")
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("simulate", help="simulate return paths (CSV t,Y,V,h)")
    p.add_argument("--model-file", required=True)
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--n-paths", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="maximum-likelihood fit of MOD1..MOD5")
    p.add_argument("--model", required=True, choices=sorted(estimation.MODELS))
    p.add_argument("--returns", required=True)
    p.add_argument("--quad-order", type=int, default=10)
    p.add_argument("--rate", type=float, default=0.0, help="per-step risk-free rate")
    p.add_argument("--variant", choices=("canonical", "printed"), default="canonical")
    p.add_argument("--v1", type=float, help="initial variance (default: sample variance)")
    p.add_argument("--starts", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("calibrate", help="daily calibration to an option surface")
    p.add_argument("--surface", required=True)
    p.add_argument("--models", default="dvg", help="comma list of dvg,hn,vg-static,gamma-garch")
    p.add_argument("--loss", choices=calibration.LOSS_KINDS, default="dollar-rmse")
    p.add_argument("--moneyness", type=float, nargs=2, default=(0.975, 1.025))
    p.add_argument("--no-moneyness-filter", action="store_true")
    p.add_argument("--annual-rates", action="store_true",
                   help="rate and div_yield columns are annual; convert per --day-count")
    p.add_argument("--day-count", choices=sorted(io.STEPS_PER_YEAR), default="trading/252")
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--outdir", default=".")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("map-q", help="Esscher map of historical parameters")
    p.add_argument("--model-file", required=True)
    p.add_argument("--keep-scale", action="store_true",
                   help="keep a and the state scale instead of identifying a^Q")
    p.add_argument("--no-state-tilt", action="store_true",
                   help="leave alpha1 untouched by the tilt of the mixing variable")
    p.add_argument("--output", help="also write the Q parameter document here")
    p.set_defaults(func=cmd_map_q)

    p = sub.add_parser("table1", help="Monte Carlo vs Fourier comparison grid")
    p.add_argument("--n-paths", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps-per-month", type=int, default=30)
    p.add_argument("--output")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("coefs", help="dump A, B at c = iu as CSV")
    p.add_argument("--model-file", required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--u-min", type=float, default=0.0)
    p.add_argument("--u-max", type=float, default=50.0)
    p.add_argument("--n", type=int, default=101)
    p.add_argument("--output")
    p.set_defaults(func=cmd_coefs)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            args.func(args)
    except ValidationError as exc:
        print(json.dumps({"error": str(exc), "errors": exc.errors}), file=sys.stderr)
        return exc.exit_code
    except (FileNotFoundError, IsADirectoryError, json.JSONDecodeError) as exc:
        print(json.dumps({"error": str(exc), "errors": [str(exc)]}), file=sys.stderr)
        return 2
    except DVGError as exc:
        print(json.dumps({"error": str(exc), "errors": [str(exc)]}), file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
