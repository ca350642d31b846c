"""Command-line interface: ``twodsys <command> [options]``.

Exit codes: 0 success, 2 bad input or configuration, 3 numerical failure.
Log level comes from the ``TWODSYS_LOG`` environment variable.
Options may also come from a JSON ``--config`` file; flags win over it.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path


from . import __version__, gp, inference, kernel, sde
from .errors import (ConfigurationError, InvalidInputError, InvalidParameterError,
                     NumericalError)
from .files import parse_grid, read_timeseries, write_csv, write_svg_line

log = logging.getLogger("twodsys")

FIGURE_S = (-2, -1, 0, 1, 2)
FIGURE_P = (-1, 0, 0.5, 0.75, 0.9, 1)

DEFAULTS = {
    "output": None,
    "input": None,
    "seed": 0,
    "format": None,
    "params": "0,0,0,0",
    "grid": None,
    "count": 1,
    "gradient": False,
    "restarts": 5,
    "fit_noise": False,
    "noise_var": 0.0,
    "maxiter": 200,
    "budget": 20000,
    "threshold": 10.0,
    "j_prior": "uniform",
    "prior_file": None,
    "system": "1,0,0,1",
    "noise": "1,0,1",
    "dt": 0.01,
    "total_time": 100.0,
    "burn_in": 0.0,
    "x0": None,
}


def _floats(text, n, name):
    try:
        vals = [float(v) for v in str(text).split(",")]
    except ValueError:
        raise InvalidInputError(f"--{name} expects {n} comma-separated numbers, got {text!r}") from None
    if len(vals) != n:
        raise InvalidInputError(f"--{name} expects {n} numbers, got {len(vals)}")
    return vals


def _settings(args):
    """Merge flags > config file > defaults."""
    config = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                config = json.load(fh)
        except OSError as exc:
            raise InvalidInputError(f"{args.config}: cannot read config ({exc.strerror})") from exc
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"{args.config}:{exc.lineno}: invalid JSON ({exc.msg})") from exc
    merged = dict(DEFAULTS)
    merged.update({k.replace("-", "_"): v for k, v in config.items()})
    for key, value in vars(args).items():
        if value is not None:
            merged[key] = value
    return merged


def _emit_json(obj, output):
    text = json.dumps(obj, indent=2, sort_keys=False)
    if output:
        Path(output).write_text(text + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text + "\n")


def _emit_csv(output, header, columns):
    if output:
        write_csv(output, header, columns)
    else:
        write_csv(sys.stdout, header, columns)


def _natural_dict(theta):
    nat = kernel.to_natural(theta)
    return {"sigma": nat.sigma, "Delta": nat.Delta, "S11": nat.S11, "J": nat.J}


def _hyper_dict(theta):
    return {"h": theta.h, "s": theta.s, "k": theta.k, "p": theta.p, "j": theta.j}


def cmd_eval_kernel(opts):
    theta = kernel.HyperParams(*_floats(opts["params"], 4, "params"))
    tau = parse_grid(opts["grid"] or "0:0.1:10")
    value, grad = kernel.evaluate_grad(theta, tau)
    header = ["tau", "C"]
    cols = [tau, value]
    if opts["gradient"]:
        header += ["dC_dh", "dC_ds", "dC_dk", "dC_dp"]
        cols += [grad[:, i] for i in range(4)]
    if opts["format"] == "json":
        _emit_json({"command": "eval-kernel", "version": __version__,
                    "params": _hyper_dict(theta), "grid": opts["grid"],
                    "rows": [dict(zip(header, r)) for r in zip(*(c.tolist() for c in cols))]},
                   opts["output"])
    else:
        _emit_csv(opts["output"], header, cols)


def cmd_sample(opts):
    theta = kernel.HyperParams(*_floats(opts["params"], 4, "params"))
    t = parse_grid(opts["grid"] or "0:0.01:10")
    count = int(opts["count"])
    draws = gp.sample(theta, t, seed=int(opts["seed"]), count=count)
    header = ["t", "x"] if count == 1 else ["t"] + [f"x_{i}" for i in range(count)]
    _emit_csv(opts["output"], header, [t] + list(draws))


def cmd_fit(opts):
    if not opts.get("input"):
        raise InvalidInputError("fit needs --input")
    data = read_timeseries(opts["input"])
    cfg = gp.FitConfig(maxiter=int(opts["maxiter"]), fit_noise=bool(opts["fit_noise"]),
                       noise_var=float(opts["noise_var"]))
    res = gp.fit(data, cfg, restarts=int(opts["restarts"]), seed=int(opts["seed"]))
    theta = res.model.theta
    _emit_json({
        "command": "fit",
        "version": __version__,
        "seed": int(opts["seed"]),
        "inputs": {"input": str(opts["input"]), "restarts": int(opts["restarts"]),
                   "fit_noise": bool(opts["fit_noise"]), "noise_var": float(opts["noise_var"]),
                   "maxiter": int(opts["maxiter"])},
        "hyper": _hyper_dict(theta),
        "natural": _natural_dict(theta),
        "mean": res.model.mean,
        "noise_var": res.model.noise_var,
        "q_factor": kernel.q_factor(theta),
        "log_marginal_likelihood": res.log_marginal_likelihood,
        "converged": res.converged,
        "n_restarts_used": res.n_restarts_used,
        "n_points": len(data),
    }, opts["output"])


def cmd_classify(opts):
    if not opts.get("input"):
        raise InvalidInputError("classify needs --input")
    data = read_timeseries(opts["input"])
    if opts["prior_file"]:
        try:
            prior = inference.PriorSpec.from_json(opts["prior_file"])
        except OSError as exc:
            raise InvalidInputError(f"{opts['prior_file']}: cannot read prior ({exc.strerror})") from exc
        except (json.JSONDecodeError, TypeError) as exc:
            raise InvalidInputError(f"{opts['prior_file']}: invalid prior file ({exc})") from exc
    else:
        prior = inference.default_prior(data, j_prior=opts["j_prior"])
    res = inference.classify(data, prior, threshold_odds=float(opts["threshold"]),
                             budget=int(opts["budget"]), seed=int(opts["seed"]))
    odds = res.odds
    _emit_json({
        "command": "classify",
        "version": __version__,
        "seed": int(opts["seed"]),
        "inputs": {"input": str(opts["input"]), "budget": int(opts["budget"]),
                   "threshold": float(opts["threshold"]), "prior_file": opts["prior_file"],
                   "prior": prior.to_dict()},
        "label": res.label,
        "log_odds": odds.log_odds,
        "stderr": odds.stderr,
        "p_oscillatory": odds.p_oscillatory,
        "n_samples": odds.n_samples,
    }, opts["output"])


def cmd_simulate(opts):
    A, B, C, D = _floats(opts["system"], 4, "system")
    k11, k12, k22 = _floats(opts["noise"], 3, "noise")
    spec = sde.SystemSpec(A, B, C, D, ((k11, k12), (k12, k22)))
    x0 = tuple(_floats(opts["x0"], 2, "x0")) if opts["x0"] else None
    cfg = sde.SimConfig(dt=float(opts["dt"]), total_time=float(opts["total_time"]),
                        burn_in=float(opts["burn_in"]), seed=int(opts["seed"]), x0=x0)
    times, path = sde.simulate(spec, cfg)
    _emit_csv(opts["output"], ["t", "x1", "x2"], [times, path[:, 0], path[:, 1]])


def figure_cells():
    """The (s, p) grid of the sample figure, row-major in ``p``."""
    return [(s, p) for p in FIGURE_P for s in FIGURE_S]


def cell_name(s, p):
    return f"cell_s{s:+d}_p{p:g}"


def cmd_figure(opts):
    out = opts["output"]
    if not out:
        raise InvalidInputError("figure needs --output DIR")
    out = Path(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InvalidInputError(f"{out}: cannot create output directory ({exc.strerror})") from exc
    t = parse_grid("0:0.01:10")
    seed = int(opts["seed"])
    written = []
    for s, p in figure_cells():
        x = gp.sample((0.0, float(s), 0.0, float(p)), t, seed=seed)[0]
        name = cell_name(s, p)
        try:
            write_csv(out / f"{name}.csv", ["t", "x"], [t, x])
            write_svg_line(out / f"{name}.svg", t, x, title=f"s={s:+d}, p={p:g}")
        except OSError as exc:
            raise InvalidInputError(f"{out / name}: write failed ({exc.strerror})") from exc
        written.append(name)
    log.info("wrote %d cells to %s", len(written), out)


COMMANDS = {
    "eval-kernel": cmd_eval_kernel,
    "sample": cmd_sample,
    "fit": cmd_fit,
    "classify": cmd_classify,
    "simulate": cmd_simulate,
    "figure": cmd_figure,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="twodsys", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--output", help="output file (directory for figure); stdout if omitted")
        p.add_argument("--seed", type=int)
        p.add_argument("--config", help="JSON file of option defaults")
        p.add_argument("--format", choices=("csv", "json"))
        return p

    p = common(sub.add_parser("eval-kernel", help="tabulate C(tau)"))
    p.add_argument("--params", help="h,s,k,p")
    p.add_argument("--grid", help="start:step:end of lags")
    p.add_argument("--gradient", action="store_true", default=None)

    p = common(sub.add_parser("sample", help="draw GP samples"))
    p.add_argument("--params", help="h,s,k,p")
    p.add_argument("--grid", help="start:step:end of times")
    p.add_argument("--count", type=int)

    p = common(sub.add_parser("fit", help="maximum-likelihood fit of a t,x CSV"))
    p.add_argument("--input")
    p.add_argument("--restarts", type=int)
    p.add_argument("--fit-noise", action="store_true", default=None)
    p.add_argument("--noise-var", type=float)
    p.add_argument("--maxiter", type=int)

    p = common(sub.add_parser("classify", help="odds of oscillatory dynamics"))
    p.add_argument("--input")
    p.add_argument("--prior-file")
    p.add_argument("--budget", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--j-prior", choices=("uniform", "tilted"))

    p = common(sub.add_parser("simulate", help="Euler-Maruyama path of the 2D system"))
    p.add_argument("--system", help="A,B,C,D")
    p.add_argument("--noise", help="K11,K12,K22")
    p.add_argument("--dt", type=float)
    p.add_argument("--total-time", type=float)
    p.add_argument("--burn-in", type=float)
    p.add_argument("--x0", help="x1,x2 initial state (default: stationary draw)")

    common(sub.add_parser("figure", help="regenerate the 6x5 sample grid"))
    return parser


def _attach_negative_values(argv):
    """Join ``--flag -1,2`` into ``--flag=-1,2`` so argparse keeps the value."""
    out = []
    for tok in argv:
        if (out and out[-1].startswith("--") and "=" not in out[-1]
                and len(tok) > 1 and tok[0] == "-" and (tok[1].isdigit() or tok[1] == ".")):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    level = os.environ.get("TWODSYS_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(
        _attach_negative_values(sys.argv[1:] if argv is None else list(argv)))
    try:
        opts = _settings(args)
        COMMANDS[args.command](opts)
    except NumericalError as exc:
        print(f"twodsys: numerical failure: {exc}", file=sys.stderr)
        return 3
    except (InvalidInputError, InvalidParameterError, ConfigurationError) as exc:
        print(f"twodsys: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
