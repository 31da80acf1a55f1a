"""Command-line interface: ``sinrpd {moment,sample,dickman,validate}``.

Every command accepts ``--config FILE`` (a JSON object keyed by option
name, e.g. ``{"beta": 3, "replicates": 1000}``); options given on the
command line override the file. Results go to standard output or
``--output`` as CSV (a ``# sinrpd <version>`` line, a header row, reals in
``.17g``) or JSON (``{"version", "config", "rows"}``). ``--figures DIR``
additionally renders PNG figures when matplotlib is installed.

Exit codes: 0 ok, 1 numerical failure, 2 usage error, 3 validation failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from . import closed_form as cf
from .errors import BudgetExceeded, DomainError, NotSupported, RangeError, TruncationWarning
from .model import MomentQuery, NetworkParams, PDParams, Scale, validate_network_params
from .quadrature import QuadSpec
from .sampler import (
    SUB_PD,
    RngStream,
    TruncationPolicy,
    sample_pd_stick_breaking,
    sample_propagation_batch,
)
from .validate import SCOPES, SuiteConfig, run_comparison_suite

EXIT_OK, EXIT_NUMERICAL, EXIT_USAGE, EXIT_VALIDATION = 0, 1, 2, 3

NETWORK_DEFAULTS = {"lam": 1.0, "beta": 4.0, "K": 1.0, "W": 0.0, "fading_moment": 1.0}
COMMON_DEFAULTS = {"format": "csv", "output": None, "figures": None,
                   "rel_tol": None, "abs_tol": 1e-14, "max_evals": 4_000_000}
COMMAND_DEFAULTS = {
    "moment": {**NETWORK_DEFAULTS, "n": None, "thresholds": None, "scale": "stinr", "density": False},
    "sample": {**NETWORK_DEFAULTS, "what": "stir", "count": 10, "replicates": 10, "seed": 1, "alpha": 0.5,
               "theta": 0.0, "users": 2, "max_points": 10_000, "rel_tail_tol": 1e-8, "strict": False},
    "dickman": {"alpha": 0.5, "theta": 0.0, "s_grid": "0.5:3.0:0.25"},
    "validate": {"scope": "all", "replicates": 100_000, "seed": 1, "beta": 4.0, "a": 1.0, "threshold": 4.0,
                 "max_points": 10_000, "rel_tail_tol": 1e-8},
}


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# parsing


def _comma_floats(text: str) -> tuple:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")


def _add_common(p):
    p.add_argument("--config", help="JSON file of option values; command-line options override it")
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--output", help="write the table here instead of standard output")
    p.add_argument("--figures", metavar="DIR", help="also render PNG figures into DIR (needs matplotlib)")
    p.add_argument("--rel-tol", type=float, help="quadrature relative tolerance")
    p.add_argument("--abs-tol", type=float, help="quadrature absolute tolerance")
    p.add_argument("--max-evals", type=int, help="quadrature evaluation budget")


def _add_network(p, with_noise=True):
    p.add_argument("--lambda", dest="lam", type=float, help="base-station density")
    p.add_argument("--beta", type=float, help="path-loss exponent (> 2)")
    p.add_argument("--K", type=float, help="path-loss constant")
    if with_noise:
        p.add_argument("--W", type=float, help="noise power")
    p.add_argument("--fading-moment", type=float, help="E[S^(2/beta)]")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sinrpd", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"sinrpd {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("moment", help="factorial moment measure or density")
    _add_common(p)
    _add_network(p)
    p.add_argument("--n", type=int, help="order of the moment")
    p.add_argument("--thresholds", type=_comma_floats, action="append",
                   help="comma list of n thresholds; repeat for several rows")
    p.add_argument("--scale", choices=[s.value for s in Scale])
    p.add_argument("--density", action="store_const", const=True, help="evaluate the density instead")

    p = sub.add_parser("sample", help="draw propagation, STIR/STINR, PD or access samples")
    _add_common(p)
    _add_network(p)
    p.add_argument("--what", choices=["propagation", "stir", "stinr", "pd", "access"])
    p.add_argument("--count", type=int, help="values written per replicate")
    p.add_argument("--replicates", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--theta", type=float)
    p.add_argument("--users", type=int, help="users served by randomized access")
    p.add_argument("--max-points", type=int)
    p.add_argument("--rel-tail-tol", type=float)
    p.add_argument("--strict", action="store_const", const=True,
                   help="fail (exit 1) if any replicate hits max-points before the tail tolerance")

    p = sub.add_parser("dickman", help="two-parameter Dickman function on a grid")
    _add_common(p)
    p.add_argument("--alpha", type=float)
    p.add_argument("--theta", type=float)
    p.add_argument("--s-grid", help="start:stop:step (stop included)")

    p = sub.add_parser("validate", help="compare closed forms with simulation")
    _add_common(p)
    p.add_argument("--scope", choices=list(SCOPES) + ["all"])
    p.add_argument("--replicates", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--beta", type=float)
    p.add_argument("--a", type=float, help="propagation constant")
    p.add_argument("--threshold", type=float, help="z-score pass threshold")
    p.add_argument("--max-points", type=int)
    p.add_argument("--rel-tail-tol", type=float)
    parser.subcommands = dict(sub.choices)
    return parser


def _resolve(args) -> dict:
    """Merge defaults, the config file and explicit options (in rising priority)."""
    values = {"command": args.command, **COMMON_DEFAULTS, **COMMAND_DEFAULTS[args.command]}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}")
        if not isinstance(data, dict):
            raise UsageError("config file must hold a JSON object")
        for key, value in data.items():
            key = {"lambda": "lam"}.get(key, key.replace("-", "_"))
            if key not in values:
                raise UsageError(f"unknown config key {key!r} for command {args.command}")
            values[key] = value
    for key, value in vars(args).items():
        if key in values and value is not None:
            values[key] = value
    return values


def _quad(values) -> QuadSpec:
    return QuadSpec(values["rel_tol"], values["abs_tol"], values["max_evals"])


def _network(values) -> NetworkParams:
    return validate_network_params({k: values[k] for k in NETWORK_DEFAULTS})


# --------------------------------------------------------------------------
# output


def _cell(x):
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    if isinstance(x, (list, tuple)):
        return ";".join(_cell(v) for v in x)
    if x is None:
        return ""
    return str(x)


def _json_value(x):
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, dict):
        return {k: _json_value(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_value(v) for v in x]
    return x


def render(rows: list[dict], config: dict, fmt: str) -> str:
    """Serialize a table; equal inputs give equal bytes."""
    if fmt == "json":
        doc = {"version": __version__, "config": _json_value(config), "rows": _json_value(rows)}
        return json.dumps(doc, indent=1, sort_keys=False) + "\n"
    buf = io.StringIO()
    buf.write(f"# sinrpd {__version__}\n")
    header = list(rows[0].keys()) if rows else []
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(row[k]) for k in header])
    return buf.getvalue()


def _emit(text: str, output):
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _public_config(values) -> dict:
    out = {k: v for k, v in sorted(values.items()) if k not in ("output", "figures", "config")}
    return {"command": values["command"], **out}


def _figures(values, draw):
    if not values["figures"]:
        return
    from . import plotting

    if not plotting.available():
        raise UsageError("--figures needs matplotlib; install the 'plot' extra")
    draw(plotting, Path(values["figures"]))


# --------------------------------------------------------------------------
# commands


def cmd_moment(values) -> int:
    if values["n"] is None:
        raise UsageError("--n is required")
    if not values["thresholds"]:
        raise UsageError("--thresholds is required")
    params = _network(values)
    spec = _quad(values)
    vectors = values["thresholds"]
    if vectors and not isinstance(vectors[0], (list, tuple)):
        vectors = [vectors]
    rows = []
    for t in vectors:
        query = MomentQuery(values["n"], tuple(t), values["scale"])
        inside = query.in_simplex()
        if values["density"]:
            value, error = cf.moment_density(params, query, spec), 0.0
        else:
            value, error = cf.moment_measure(params, query, spec, full_output=True)
        rows.append({"n": query.n, "scale": query.scale.value, "thresholds": list(query.thresholds),
                     "quantity": "density" if values["density"] else "measure",
                     "value": float(value), "error": float(error), "in_simplex": inside})
    _emit(render(rows, _public_config(values), values["format"]), values["output"])
    _figures(values, lambda pl, d: pl.values_figure(
        [r["value"] for r in rows], d / "moment.png", ylabel=rows[0]["quantity"],
        labels=[_cell(r["thresholds"]) for r in rows]))
    return EXIT_OK


def cmd_sample(values) -> int:
    what, count, reps, seed = values["what"], values["count"], values["replicates"], values["seed"]
    if count < 1 or reps < 1:
        raise UsageError("--count and --replicates must be >= 1")
    rows = []
    if what == "pd":
        pd = PDParams(values["alpha"], values["theta"])
        for r in range(reps):
            v = sample_pd_stick_breaking(pd, count, RngStream(seed, r, SUB_PD)).tilde_v
            rows.append({"replicate": r, "sum": float(v.sum()), **_columns("v", v)})
    else:
        params = _network(values)
        if what == "stir":
            params = params.with_noise(0.0)
        policy = TruncationPolicy(values["max_points"], values["rel_tail_tol"])
        n_users = values["users"] if what == "access" else 0
        keep = count if what != "access" else 1
        batch = sample_propagation_batch(params, policy, reps, seed, keep=keep, n_users=n_users)
        truncated = int(batch.truncated.sum())
        if truncated:
            message = (f"{truncated} of {reps} replicates reached max_points={policy.max_points} "
                       f"before rel_tail_tol={policy.rel_tail_tol:g}")
            if values["strict"]:
                print(f"sinrpd: error: {message}", file=sys.stderr)
                return EXIT_NUMERICAL
            warnings.warn(message, TruncationWarning)
        for r in range(reps):
            I = float(batch.total_power[r])
            if what == "propagation":
                vals = 1.0 / batch.inv_top[r]
            elif what == "access":
                vals = batch.access[r] / I
            else:
                vals = batch.inv_top[r] / (params.W + I)
            rows.append({"replicate": r, "I": I, "W_over_I": params.W / I, "truncated": bool(batch.truncated[r]),
                         **_columns("v", vals)})
    _emit(render(rows, _public_config(values), values["format"]), values["output"])
    _figures(values, lambda pl, d: pl.histogram_figure([row["v1"] for row in rows], d / "sample.png",
                                                       xlabel=f"first {what} value"))
    return EXIT_OK


def _columns(prefix, values):
    return {f"{prefix}{j + 1}": float(v) for j, v in enumerate(values)}


def _grid(text: str) -> list[float]:
    try:
        start, stop, step = (float(x) for x in str(text).split(":"))
    except ValueError:
        raise UsageError(f"--s-grid must be start:stop:step, got {text!r}")
    if step <= 0 or start <= 0 or stop < start:
        raise UsageError("--s-grid needs 0 < start <= stop and step > 0")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [start + k * step for k in range(count)]


def cmd_dickman(values) -> int:
    pd = PDParams(values["alpha"], values["theta"])
    spec = _quad(values)
    rows = []
    for s in _grid(values["s_grid"]):
        rho, err = cf.dickman(pd, s, spec, full_output=True)
        rows.append({"s": s, "rho": float(rho), "error": float(err)})
    _emit(render(rows, _public_config(values), values["format"]), values["output"])
    _figures(values, lambda pl, d: pl.dickman_figure(
        [r["s"] for r in rows], [r["rho"] for r in rows], d / "dickman.png",
        label=f"alpha={pd.alpha:g}, theta={pd.theta:g}"))
    return EXIT_OK


def cmd_validate(values) -> int:
    config = SuiteConfig(beta=values["beta"], a=values["a"], replicates=values["replicates"], seed=values["seed"],
                         threshold=values["threshold"], max_points=values["max_points"],
                         rel_tail_tol=values["rel_tail_tol"])
    reports = run_comparison_suite(values["scope"], config, _quad(values))
    rows = []
    for rep in reports:
        rows.append({"name": rep.name, "kind": rep.kind.value, "analytic": rep.analytic, "estimate": rep.mc.value,
                     "std_error": rep.mc.std_error, "bias_bound": rep.mc.bias_bound,
                     "replicates": rep.mc.replicates, "seed": rep.mc.seed, "scale": rep.scale,
                     "z_score": rep.z_score, "threshold": rep.threshold, "passed": rep.passed})
    _emit(render(rows, {**_public_config(values), "suite": config.to_dict()}, values["format"]), values["output"])
    _figures(values, lambda pl, d: pl.zscore_figure([r["name"] for r in rows], [r["z_score"] for r in rows],
                                                    config.threshold, d / "validate_z.png"))
    failed = [r["name"] for r in rows if not r["passed"]]
    if failed:
        print(f"sinrpd: {len(failed)} comparison(s) failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


COMMANDS = {"moment": cmd_moment, "sample": cmd_sample, "dickman": cmd_dickman, "validate": cmd_validate}


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"sinrpd: warning: {message}", file=sys.stderr)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    with warnings.catch_warnings():
        warnings.showwarning = _show_warning
        warnings.simplefilter("always", TruncationWarning)
        warnings.simplefilter("always", BudgetExceeded)
        try:
            values = _resolve(args)
            return COMMANDS[args.command](values)
        except (UsageError, RangeError) as exc:
            parser.subcommands[args.command].print_usage(sys.stderr)
            print(f"sinrpd {args.command}: error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        except (NotSupported, DomainError, ArithmeticError, ValueError) as exc:
            print(f"sinrpd {args.command}: numerical failure: {exc}", file=sys.stderr)
            return EXIT_NUMERICAL
        except ImportError as exc:
            print(f"sinrpd {args.command}: error: {exc}", file=sys.stderr)
            return EXIT_USAGE
