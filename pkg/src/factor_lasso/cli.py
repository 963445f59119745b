"""Command-line interface.

Exit codes: 0 success, 2 usage or parameter error, 3 data or I/O error,
4 numerical failure.  JSON output carries the exact configuration and a
canonical argument vector, so re-running ``factor-lasso <argv>`` reproduces
the result byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .bootstrap import BootstrapConfig, run_bootstrap
from .errors import CalibrationError, DataError, DimensionError, DomainError, NumericalError
from .factors import default_k_max, gram_eigen, select_num_factors_er
from .inference import FitConfig, factor_lasso_estimate
from .iv import iv_factor_lasso, load_iv_csv
from .lasso import DEFAULT_MAX_SWEEPS, DEFAULT_TOL
from .panel import demean_panel, load_csv
from .simulation import IV_ESTIMATORS, PPFM_ESTIMATORS, IvDesign, PpfmDesign, run_monte_carlo

__all__ = ["RunConfig", "build_parser", "parse_args", "config_to_argv", "execute", "emit_report", "main"]

# version of the output layout (bump when keys change)
OUTPUT_VERSION = "1.0"

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 2, 3, 4

COMMANDS = ("estimate", "iv-estimate", "bootstrap", "simulate", "factors")

# not part of the reproducibility record: they do not change results
_UNRECORDED = {"output", "threads"}


class _UsageError(Exception):
    pass


# ----------------------------------------------------------------------------
# argument types


def _int_at_least(lo):
    def conv(s):
        try:
            v = int(s)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected an integer, got {s!r}") from None
        if v < lo:
            raise argparse.ArgumentTypeError(f"must be >= {lo}, got {v}")
        return v

    return conv


def _float_in(lo, hi, lo_open=True, hi_open=True):
    def conv(s):
        try:
            v = float(s)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected a number, got {s!r}") from None
        bad_lo = v <= lo if lo_open else v < lo
        bad_hi = v >= hi if hi_open else v > hi
        if not math.isfinite(v) or bad_lo or bad_hi:
            lb = "(" if lo_open else "["
            rb = ")" if hi_open else "]"
            raise argparse.ArgumentTypeError(f"must lie in {lb}{lo}, {hi}{rb}, got {s}")
        return v

    return conv


def _bootstrap_arg(s):
    if s == "off":
        return "off"
    return _int_at_least(1)(s)


# ----------------------------------------------------------------------------
# parser


def _add_output(p):
    g = p.add_argument_group("output")
    g.add_argument("--output", "-o", default="-", help="output file ('-' for stdout, the default)")
    g.add_argument("--format", choices=("json", "csv"), default="json", help="report format (default json)")


def _add_panel_schema(p, with_time=True):
    g = p.add_argument_group("input")
    g.add_argument("--input", "-i", required=True, help="CSV file, one row per unit-period (header required)")
    g.add_argument("--id-col", default="id", help="unit identifier column (default id)")
    if with_time:
        g.add_argument("--time-col", default="time", help="period identifier column (default time)")
    g.add_argument("--y-col", default="y", help="outcome column (default y)")
    g.add_argument("--d-col", default="d", help="treatment column (default d)")
    g.add_argument("--x-prefix", default="x", help="prefix of the covariate columns (default x)")


def _add_method(p):
    g = p.add_argument_group("method")
    k = g.add_mutually_exclusive_group()
    k.add_argument("--k", type=_int_at_least(1), default=None, help="fixed number of factors K used in the PCA step")
    k.add_argument(
        "--k-auto",
        action="store_true",
        help="choose K by the eigenvalue-ratio rule argmax_k lambda_k / lambda_{k+1} (the default)",
    )
    g.add_argument("--k-max", type=_int_at_least(1), default=None, help="upper bound for the eigenvalue-ratio search (default min(8, n-2))")
    g.add_argument(
        "--c0",
        type=_float_in(1.0, math.inf, lo_open=False),
        default=1.1,
        help="c0 >= 1 in the penalty level kappa = 2 c0 / sqrt(nT) * Phi^-1(1 - q_n / (2p)) (default 1.1)",
    )
    g.add_argument(
        "--qn",
        type=_float_in(0.0, 1.0),
        default=None,
        help="q_n in (0, 1) in the same penalty level (default 0.1 / log n)",
    )
    g.add_argument(
        "--alpha-level",
        type=_float_in(0.0, 1.0, hi_open=False),
        default=0.05,
        help="tau for the asymptotic interval alpha_hat -/+ Phi^-1(1 - tau/2) sqrt(sigma_eta_eps) / (sigma_eta^2 sqrt(nT)) (default 0.05)",
    )
    g.add_argument(
        "--refinements",
        type=_int_at_least(1),
        default=2,
        help="rounds of penalty-loading re-estimation psi_j = sqrt((1/nT) sum_i (sum_t U_itj r_it)^2) from post-lasso residuals (default 2)",
    )
    g.add_argument("--tol", type=_float_in(0.0, math.inf), default=DEFAULT_TOL, help="coordinate-descent stopping tolerance on the largest coefficient change per sweep")
    g.add_argument("--max-sweeps", type=_int_at_least(1), default=DEFAULT_MAX_SWEEPS, help="coordinate-descent sweep limit")


def _add_threads(p):
    p.add_argument(
        "--threads",
        type=_int_at_least(0),
        default=None,
        help="parallel workers (0 = all CPUs); falls back to FACTOR_LASSO_THREADS, then 1",
    )


def _add_boot(p, with_b=True):
    g = p.add_argument_group("bootstrap")
    if with_b:
        g.add_argument("--b", type=_int_at_least(1), default=500, help="number of bootstrap replicates B (default 500)")
    g.add_argument("--ksteps", type=_int_at_least(1), default=15, help="coordinate-descent sweeps k per replicate lasso (default 15)")
    g.add_argument(
        "--tau",
        type=_float_in(0.0, 1.0),
        default=0.05,
        help="level of the interval alpha_hat -/+ q*_tau / sqrt(nT), q*_tau the (1 - tau) quantile of sqrt(nT)|alpha* - alpha_hat| (default 0.05)",
    )
    g.add_argument("--weights", choices=("mammen", "rademacher"), default="mammen", help="multiplier weights; mammen is z1/sqrt(2) + (z2^2 - 1)/2")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="factor-lasso",
        description="Factor-lasso treatment-effect estimation for high-dimensional panels.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    p = sub.add_parser("estimate", help="point estimate, clustered SE and asymptotic CI")
    _add_panel_schema(p)
    _add_method(p)
    _add_output(p)

    p = sub.add_parser("iv-estimate", help="cross-sectional IV version with first-stage diagnostics")
    _add_panel_schema(p, with_time=False)
    p.add_argument("--z-col", default="z", help="instrument column (default z)")
    _add_method(p)
    _add_output(p)

    p = sub.add_parser("bootstrap", help="k-step wild bootstrap confidence interval")
    _add_panel_schema(p)
    _add_method(p)
    _add_boot(p)
    p.add_argument("--seed", type=_int_at_least(0), default=0, help="bootstrap seed")
    _add_threads(p)
    _add_output(p)

    p = sub.add_parser("simulate", help="Monte Carlo comparison on a built-in design")
    p.add_argument("--design", choices=("ppfm", "iv"), default="ppfm", help="panel partial factor design or cross-sectional IV design")
    p.add_argument("--share-y", type=_float_in(0.0, 1.0, False, False), default=0.5, help="factor share of the explained variance in the outcome equation")
    p.add_argument("--share-d", type=_float_in(0.0, 1.0, False, False), default=0.5, help="factor share of the explained variance in the treatment equation")
    p.add_argument("--reps", type=_int_at_least(1), default=100, help="Monte Carlo replications R (default 100)")
    p.add_argument("--seed", type=_int_at_least(0), default=0, help="design and replication seed")
    p.add_argument(
        "--estimators",
        default=None,
        help=f"comma-separated list; ppfm: {','.join(PPFM_ESTIMATORS)}; iv: {','.join(IV_ESTIMATORS)}",
    )
    p.add_argument("--bootstrap", type=_bootstrap_arg, default="off", help="'off' or B, the number of k-step bootstrap replicates per replication (ppfm only)")
    _add_method(p)
    _add_boot(p, with_b=False)
    _add_threads(p)
    _add_output(p)

    p = sub.add_parser("factors", help="eigenvalues of the covariate Gram matrix and the selected K")
    _add_panel_schema(p)
    p.add_argument("--k-max", type=_int_at_least(1), default=None, help="upper bound for the eigenvalue-ratio search")
    _add_output(p)
    return parser


@dataclass(frozen=True)
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    output: str = "-"
    threads: int | None = None

    def recorded(self) -> dict:
        return {"command": self.command, **self.params}


def parse_args(argv) -> RunConfig:
    """Parse and validate ``argv``; raises ``SystemExit(2)`` on usage errors."""
    parser = build_parser()
    try:
        ns = parser.parse_args(list(argv))
        if ns.command is None:
            parser.print_help(sys.stderr)
            raise SystemExit(EXIT_USAGE)
        params = {k: v for k, v in vars(ns).items() if k not in _UNRECORDED and k != "command"}
        if "k_auto" in params:
            params.pop("k_auto")
        if ns.command == "simulate":
            _check_simulate(params)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        raise SystemExit(EXIT_USAGE) from None
    return RunConfig(ns.command, params, output=ns.output, threads=getattr(ns, "threads", None))


def _check_simulate(params):
    allowed = IV_ESTIMATORS if params["design"] == "iv" else PPFM_ESTIMATORS
    if params["estimators"] is not None:
        names = [s.strip() for s in params["estimators"].split(",") if s.strip()]
        bad = [s for s in names if s not in allowed]
        if bad or not names:
            raise _UsageError(f"simulate: unknown estimator(s) {bad}; choose from {','.join(allowed)}")
        params["estimators"] = ",".join(names)
    if params["design"] == "iv" and params["bootstrap"] != "off":
        raise _UsageError("simulate: --bootstrap is available for the ppfm design only")


def config_to_argv(config: RunConfig) -> list[str]:
    """Canonical argument vector that parses back to ``config``'s record."""
    parser = build_parser()
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    sp = sub.choices[config.command]
    argv = [config.command]
    for action in sp._actions:
        if not action.option_strings or action.dest in _UNRECORDED or action.dest == "help":
            continue
        flag = max(action.option_strings, key=len)
        if action.dest == "k_auto":
            if config.params.get("k") is None:
                argv.append(flag)
            continue
        value = config.params.get(action.dest)
        if value is None:
            continue
        argv += [flag, value if isinstance(value, str) else repr(value)]
    return argv


# ----------------------------------------------------------------------------
# execution


def _threads(config: RunConfig) -> int:
    n = config.threads
    if n is None:
        env = os.environ.get("FACTOR_LASSO_THREADS", "").strip()
        try:
            n = int(env) if env else 1
        except ValueError:
            raise _UsageError(f"FACTOR_LASSO_THREADS must be an integer, got {env!r}") from None
        if n < 0:
            raise _UsageError("FACTOR_LASSO_THREADS must be >= 0")
    return n if n > 0 else (os.cpu_count() or 1)


def _fit_config(P) -> FitConfig:
    return FitConfig(
        k=P.get("k"),
        k_max=P.get("k_max"),
        c0=P["c0"],
        q_n=P["qn"],
        tol=P["tol"],
        max_sweeps=P["max_sweeps"],
        refinements=P["refinements"],
        tau=P["alpha_level"],
    )


def _load_panel(P):
    return load_csv(P["input"], P["id_col"], P["time_col"], P["y_col"], P["d_col"], P["x_prefix"])


def _ints(a):
    return [int(v) for v in np.asarray(a).ravel()]


def _estimate_result(fit) -> dict:
    return {
        "alpha_hat": fit.alpha_hat,
        "se": fit.se,
        "ci": list(fit.ci),
        "K": fit.K_used,
        "J_hat": _ints(fit.J_hat),
        "kappa": fit.kappa,
        "diagnostics": {
            "n": fit.n,
            "T": fit.T,
            "p": fit.p,
            "sigma_eta_eps": fit.sigma_eta_eps,
            "sigma_eta_sq": fit.sigma_eta_sq,
            "support_y": _ints(fit.lasso_y.support),
            "support_d": _ints(fit.lasso_d.support),
            "sweeps_y": fit.lasso_y.sweeps,
            "sweeps_d": fit.lasso_d.sweeps,
            "converged": bool(fit.lasso_y.converged and fit.lasso_d.converged),
        },
    }


def execute(config: RunConfig) -> dict:
    """Run the command described by ``config`` and return the result fields."""
    P = config.params
    cmd = config.command
    if cmd == "estimate":
        return _estimate_result(factor_lasso_estimate(_load_panel(P), _fit_config(P)))
    if cmd == "bootstrap":
        fit = factor_lasso_estimate(_load_panel(P), _fit_config(P))
        bcfg = BootstrapConfig(B=P["b"], k=P["ksteps"], tau=P["tau"], seed=P["seed"], weight_scheme=P["weights"])
        res = run_bootstrap(fit, fit.factors, bcfg, workers=_threads(config))
        return {
            "alpha_hat": fit.alpha_hat,
            "q_star": res.q_star,
            "ci": list(res.ci),
            "draws_summary": res.summary(),
            "n_degenerate": res.n_degenerate,
            "K": fit.K_used,
            "J_hat": _ints(fit.J_hat),
            "se_asymptotic": fit.se,
            "ci_asymptotic": list(fit.ci),
        }
    if cmd == "iv-estimate":
        data = load_iv_csv(P["input"], P["y_col"], P["d_col"], P["z_col"], P["x_prefix"], P["id_col"])
        fit = iv_factor_lasso(data, _fit_config(P))
        return {
            "alpha_hat": fit.alpha_hat,
            "se": fit.se_alpha,
            "ci": list(fit.ci),
            "pi_hat": fit.pi_hat,
            "se_pi": fit.se_pi,
            "first_stage_F": fit.first_stage_F,
            "K": fit.K_used,
            "J_hat": _ints(fit.J_hat),
            "kappa": fit.kappa,
            "diagnostics": {"n": data.n, "p": data.p, **{f"support_{k}": _ints(v) for k, v in fit.supports.items()}},
        }
    if cmd == "factors":
        x = demean_panel(_load_panel(P)).x
        vals, _ = gram_eigen(x)
        k_max = P["k_max"] if P["k_max"] is not None else default_k_max(x.shape[0], vals.size)
        return {"K": select_num_factors_er(eigvals=vals, K_max=k_max), "k_max": k_max, "eigvals": [float(v) for v in vals]}
    if cmd == "simulate":
        cls = IvDesign if P["design"] == "iv" else PpfmDesign
        design = cls(share_y=P["share_y"], share_d=P["share_d"], seed=P["seed"])
        boot = None
        if P["bootstrap"] != "off":
            boot = BootstrapConfig(B=P["bootstrap"], k=P["ksteps"], tau=P["tau"], seed=P["seed"], weight_scheme=P["weights"])
        est = P["estimators"].split(",") if P["estimators"] else None
        rep = run_monte_carlo(design, est, P["reps"], _threads(config), fit_config=_fit_config(P), bootstrap=boot)
        return {"design": rep.design, "R": rep.R, "estimators": rep.rows()}
    raise _UsageError(f"unknown command {cmd!r}")


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if isinstance(obj, (np.integer, np.bool_)):
        return obj.item()
    return obj


def _csv_rows(command, result) -> list[dict]:
    if command == "simulate":
        return result["estimators"]
    row = {}
    for key, val in result.items():
        if key == "ci" or key == "ci_asymptotic":
            row[f"{key}_low"], row[f"{key}_high"] = val
        elif key in ("diagnostics", "draws_summary"):
            for k2, v2 in val.items():
                row[k2] = " ".join(map(str, v2)) if isinstance(v2, list) else v2
        elif isinstance(val, list):
            row[key] = " ".join(map(str, val))
        else:
            row[key] = val
    return [row]


def render(config: RunConfig, result: dict, fmt: str) -> str:
    """Serialise ``result`` (non-finite floats become null / "inf")."""
    result = _clean(result)
    if fmt == "json":
        doc = {
            "spec_version": OUTPUT_VERSION,
            "command": config.command,
            **result,
            "config": _clean(config.recorded()),
            "argv": config_to_argv(config),
        }
        return json.dumps(doc, indent=2, allow_nan=False) + "\n"
    rows = _csv_rows(config.command, result)
    buf = io.StringIO()
    fields = ["spec_version", *rows[0].keys()]
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({"spec_version": OUTPUT_VERSION, **r})
    return buf.getvalue()


def emit_report(config: RunConfig, result: dict, fmt: str = "json", path: str = "-") -> None:
    text = render(config, result, fmt)
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        config = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        result = execute(config)
        emit_report(config, result, config.params["format"], config.output)
    except (_UsageError, DomainError, CalibrationError) as exc:
        print(f"factor-lasso: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, DimensionError, OSError) as exc:
        print(f"factor-lasso: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"factor-lasso: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK
