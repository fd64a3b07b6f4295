"""``censtail`` command-line interface.

Subcommands
-----------
estimate    tail index estimates of a CSV dataset over one k or a k range
curve       the tail product-limit process D_n(x) on an x grid
simulate    bias/MSE experiment (preset, INI config file and/or flags)
limitcheck  simulated versus analytic variance of the Gaussian limit
presets     list the built-in simulation presets
replay      regenerate the output described by a manifest and verify its hash

Every file written with ``--out`` gets a ``<out>.manifest.json`` companion.
Exit codes: 0 ok, 1 usage or invalid configuration, 2 data error,
3 numeric failure (including a replay whose output does not match).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import LimitLawParams
from .empirical import order_sample
from .errors import CensTailError, ConfigError, DataError, DomainError, NumericError
from .estimators import METHODS, estimate, p_hat, with_ci
from .io import (
    PRESETS,
    RunManifest,
    csv_text,
    load_config_file,
    parse_grid,
    parse_k_range,
    parse_methods,
    read_dataset,
    resolve_mc_config,
    sha256_file,
)
from .limits import d_n_curve, limit_check
from .montecarlo import McConfig, McResult, run_experiment

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _level(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not 0.0 <= v < 1.0:
        raise argparse.ArgumentTypeError(f"confidence level must lie in [0, 1), got {v}")
    return v


def _warn(message):
    print(f"censtail: {message}", file=sys.stderr)


# --- renderers: resolved inputs -> output text ------------------------------


def _load_input(resolved):
    sample = read_dataset(resolved["input"])
    digest = sha256_file(resolved["input"])
    if resolved.get("input_sha256") not in (None, digest):
        raise DataError(f"{resolved['input']} changed since the manifest was written")
    return order_sample(sample)


def render_estimate(resolved) -> str:
    s = _load_input(resolved)
    level = resolved.get("ci")
    rows = []
    for method in resolved["methods"]:
        for k in resolved["ks"]:
            row = [method, k, None, None, None, None]
            try:
                s.check_k(k)
                row[3] = p_hat(s, k)
                est = estimate(s, k, method)
                row[2] = est.gamma1_hat
                if level is not None and method in ("NEW", "NEW_INTEGRAL"):
                    est = with_ci(est, level)
                    row[4], row[5] = est.ci[0], est.ci[1]
            except (DomainError, NumericError) as exc:
                _warn(f"{method} at k={k}: {exc}")
            rows.append(row)
    return csv_text(("method", "k", "gamma1_hat", "p_hat", "ci_lower", "ci_upper"), rows)


def render_curve(resolved) -> str:
    s = _load_input(resolved)
    curve = d_n_curve(s, resolved["k"], resolved["gamma1"], parse_grid(resolved["grid"]))
    return csv_text(("x", "d_n"), zip(curve.x_grid, curve.d_values))


def result_csv(result: McResult) -> str:
    return csv_text(McResult.CSV_HEADER, result.rows())


def render_simulate(resolved) -> str:
    return result_csv(run_experiment(McConfig.from_dict(resolved)))


def render_limitcheck(resolved) -> str:
    params = LimitLawParams(resolved["gamma1"], resolved["p"])
    rng = np.random.default_rng(resolved["seed"])
    report = limit_check(params, resolved["grid_size"], resolved["replicates"], rng)
    return json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n"


def render_presets(resolved) -> str:
    keys = ("gamma1", "p", "eta1", "eta2", "n", "replicates", "seed")
    return csv_text(("name",) + keys, ([name] + [cfg[k] for k in keys] for name, cfg in PRESETS.items()))


RENDERERS = {
    "estimate": render_estimate,
    "curve": render_curve,
    "simulate": render_simulate,
    "limitcheck": render_limitcheck,
    "presets": render_presets,
}


# --- resolvers: argparse namespace -> JSON-safe inputs ----------------------


def _input_fields(args):
    if args.input is None:
        raise ConfigError("input", "--input is required")
    path = os.path.abspath(args.input)
    try:
        digest = sha256_file(path)
    except OSError as exc:
        raise DataError(f"cannot read {args.input}: {exc.strerror or exc}") from exc
    return {"input": path, "input_sha256": digest}


def resolve_estimate(args):
    if (args.k is None) == (args.k_range is None):
        raise ConfigError("k", "give exactly one of --k or --k-range")
    ks = [args.k] if args.k is not None else list(parse_k_range(args.k_range))
    out = _input_fields(args)
    out.update(ks=ks, methods=list(parse_methods(args.methods)), ci=args.ci)
    return out


def resolve_curve(args):
    if args.k is None or args.gamma1 is None:
        raise ConfigError("k" if args.k is None else "gamma1", "is required for curve")
    parse_grid(args.grid)
    out = _input_fields(args)
    out.update(k=args.k, gamma1=args.gamma1, grid=args.grid)
    return out


def resolve_simulate(args):
    values = load_config_file(args.config) if args.config else {}
    if args.preset:
        values["preset"] = args.preset
    flags = {
        "gamma1": args.gamma1,
        "p": args.p,
        "eta1": args.eta1,
        "eta2": args.eta2,
        "n": args.n,
        "replicates": args.replicates,
        "seed": args.seed,
        "model": args.model,
        "k_range": parse_k_range(args.k_range) if args.k_range else None,
        "methods": parse_methods(args.methods) if args.methods else None,
    }
    values.update({k: v for k, v in flags.items() if v is not None})
    return resolve_mc_config(values).to_dict()


def resolve_limitcheck(args):
    if args.gamma1 is None or args.p is None:
        raise ConfigError("gamma1" if args.gamma1 is None else "p", "is required for limitcheck")
    if not args.p > 0.5:
        raise ConfigError("p", f"must exceed 1/2 (equivalently q = 1 - p < 1/2) for the limit variance to be finite, got {args.p}")
    LimitLawParams(args.gamma1, args.p)
    if args.grid_size < 1000:
        raise ConfigError("grid_size", f"must be at least 1000, got {args.grid_size}")
    return {
        "gamma1": args.gamma1,
        "p": args.p,
        "replicates": args.replicates,
        "grid_size": args.grid_size,
        "seed": args.seed if args.seed is not None else 0,
    }


RESOLVERS = {
    "estimate": resolve_estimate,
    "curve": resolve_curve,
    "simulate": resolve_simulate,
    "limitcheck": resolve_limitcheck,
    "presets": lambda args: {},
}


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="censtail", description="Tail index estimation for randomly right-censored data.")
    parser.add_argument("--version", action="version", version=f"censtail {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def out_flag(p):
        p.add_argument("--out", help="output file (a manifest is written next to it); stdout if omitted")

    p = sub.add_parser("estimate", help="estimate the tail index of a dataset")
    p.add_argument("--input", help="CSV with columns z, delta (header optional)")
    p.add_argument("--k", type=_positive_int, help="number of upper order statistics")
    p.add_argument("--k-range", help="inclusive range 'a..b' or 'a..b:step'")
    p.add_argument("--methods", default="NEW", help=f"comma list from {','.join(METHODS)} (default NEW)")
    p.add_argument("--ci", type=_level, help="add asymptotic confidence bounds at this level (NEW only)")
    out_flag(p)

    p = sub.add_parser("curve", help="tail product-limit process D_n(x)")
    p.add_argument("--input")
    p.add_argument("--k", type=_positive_int)
    p.add_argument("--gamma1", type=float, help="tail index defining the power-law target")
    p.add_argument("--grid", default="1,10,50,log", help="x_min,x_max,points,linear|log (default 1,10,50,log)")
    out_flag(p)

    p = sub.add_parser("simulate", help="Monte Carlo bias/MSE experiment")
    p.add_argument("--config", help="INI file with a [simulate] section")
    p.add_argument("--preset", help="start from a named preset (see 'censtail presets')")
    p.add_argument("--gamma1", type=float)
    p.add_argument("--p", type=float)
    p.add_argument("--eta1", type=float)
    p.add_argument("--eta2", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--replicates", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--model", choices=("burr", "pareto", "frechet"))
    p.add_argument("--k-range")
    p.add_argument("--methods")
    out_flag(p)

    p = sub.add_parser("limitcheck", help="simulate the Gaussian limit and compare variances")
    p.add_argument("--gamma1", type=float)
    p.add_argument("--p", type=float)
    p.add_argument("--replicates", type=_positive_int, default=100_000)
    p.add_argument("--grid-size", type=int, default=1000, help="points of the geometric time grid (>= 1000)")
    p.add_argument("--seed", type=int)
    out_flag(p)

    p = sub.add_parser("presets", help="list simulation presets")
    out_flag(p)

    p = sub.add_parser("replay", help="regenerate a manifest's output and check it is byte-identical")
    p.add_argument("manifest")
    p.add_argument("--out", help="also write the regenerated output here")
    return parser


# --- driver -----------------------------------------------------------------


def _emit(command, resolved, text, out):
    if out is None:
        sys.stdout.write(text)
        return
    Path(out).write_text(text)
    RunManifest(
        command=command,
        resolved=resolved,
        seed=resolved.get("seed"),
        tool_version=__version__,
        output=os.path.abspath(out),
        output_sha256=hashlib.sha256(text.encode()).hexdigest(),
    ).write()


def _replay(args):
    manifest = RunManifest.load(args.manifest)
    if manifest.command not in RENDERERS:
        raise DataError(f"manifest names unknown command {manifest.command!r}")
    text = RENDERERS[manifest.command](manifest.resolved)
    digest = hashlib.sha256(text.encode()).hexdigest()
    if args.out:
        _emit(manifest.command, manifest.resolved, text, args.out)
    if digest != manifest.output_sha256:
        raise NumericError(f"replayed output hash {digest} differs from recorded {manifest.output_sha256}")
    print(f"reproduced {manifest.output} ({digest})")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "replay":
            _replay(args)
        else:
            resolved = RESOLVERS[args.command](args)
            _emit(args.command, resolved, RENDERERS[args.command](resolved), args.out)
    except DataError as exc:
        _warn(f"data error: {exc}")
        return EXIT_DATA
    except NumericError as exc:
        _warn(f"numeric failure: {exc}")
        return EXIT_NUMERIC
    except DomainError as exc:
        _warn(f"invalid configuration: {exc}")
        return EXIT_USAGE
    except CensTailError as exc:
        _warn(str(exc))
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
