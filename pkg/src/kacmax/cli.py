"""Command line runner: every experiment is a seeded, serialisable config.

``kacmax <command> [options]`` builds an ExperimentConfig, ``run`` turns it
into a ResultTable, and the table is written as CSV or JSON with the resolved
config echoed in its metadata. ``kacmax --config file.json`` replays an echo.

Exit codes: 0 success, 2 usage error, 3 numerical or cross-validation failure.
"""

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, field
from decimal import Decimal, InvalidOperation
from math import log

import numpy as np

from . import __version__
from .acceptance import run_all
from .correlations import NystromGrid, fredholm_bergman, gap_probability_series, nystrom_eigenvalues, rho_finite, rho_limit
from .deviations import (
    direct_mc_prob,
    eval_F,
    ldp_estimator,
    limit_cdf,
    mc_moment,
    moment_formula,
    quadrature_J,
)
from .ensembles import ensemble_points
from .errors import ConvergenceError, CrossValidationError, KacmaxError, SamplerError
from .polyroots import empirical_cdf, find_roots_batch, max_modulus_samples, sample_kac_batch
from .streams import MASK64, RngStream
from .symfunc import cauchy_series_J

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3
FORMATS = ("csv", "json")


class UsageError(Exception):
    """Bad flags or parameter values; mapped to exit code 2."""


# -- parameter parsing helpers ----------------------------------------------


def parse_grid(text):
    """``start:stop:step`` (inclusive) or a comma list.

    Points are generated as ``start + i * step`` from decimal arithmetic so
    the grid never drifts.

    >>> parse_grid("1.1:1.4:0.1")
    [1.1, 1.2, 1.3, 1.4]
    """
    text = str(text).strip()
    try:
        if ":" not in text:
            return [float(v) for v in text.split(",") if v.strip()]
        parts = [Decimal(p) for p in text.split(":")]
    except (ValueError, InvalidOperation):
        raise UsageError(f"cannot parse grid {text!r}") from None
    if len(parts) != 3 or parts[2] <= 0 or parts[1] < parts[0]:
        raise UsageError(f"grid must be start:stop:step with step > 0 and stop >= start, got {text!r}")
    start, stop, step = parts
    count = int((stop - start) / step + Decimal("1e-9"))
    return [float(start + i * step) for i in range(count + 1)]


def parse_complex(text):
    """``1.5``, ``1.5+0.2i``, ``-0.3j`` and friends."""
    t = str(text).strip().replace(" ", "").replace("i", "j")
    try:
        return complex(t)
    except ValueError:
        raise UsageError(f"cannot parse complex number {text!r}") from None


def parse_complex_list(text):
    if isinstance(text, (list, tuple)):
        return [parse_complex(v) for v in text]
    return [parse_complex(v) for v in str(text).split(",") if v.strip()]


def _cell(value):
    if isinstance(value, complex):
        return f"{value.real!r}{value.imag:+}j"
    return value


# -- config and results -----------------------------------------------------


@dataclass
class ExperimentConfig:
    command: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    out: str = None
    format: str = "csv"

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.format not in FORMATS:
            raise UsageError(f"format must be one of {FORMATS}, got {self.format!r}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed <= MASK64:
            raise UsageError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        allowed = COMMANDS[self.command].defaults
        unknown = sorted(set(self.params) - set(allowed))
        if unknown:
            raise UsageError(f"unknown parameter(s) for {self.command}: {', '.join(unknown)}")

    def resolved(self):
        """Copy with every omitted parameter filled in from the command defaults."""
        params = dict(COMMANDS[self.command].defaults)
        params.update(self.params)
        return ExperimentConfig(self.command, params, self.seed, self.out, self.format)

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise UsageError("config must be a JSON object")
        keys = {"command", "params", "seed", "out", "format"}
        unknown = sorted(set(data) - keys)
        if unknown:
            raise UsageError(f"unknown config key(s): {', '.join(unknown)}")
        if "command" not in data:
            raise UsageError("config needs a 'command'")
        return cls(
            data["command"],
            dict(data.get("params", {})),
            data.get("seed", 0),
            data.get("out"),
            data.get("format", "csv"),
        )

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"config is not valid JSON: {exc}") from None
        return cls.from_dict(data)


@dataclass
class ResultTable:
    columns: list
    rows: list
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError(f"row {row!r} does not match columns {self.columns!r}")

    def to_csv(self):
        buf = io.StringIO()
        for line in json.dumps(self.meta, sort_keys=True, default=_json_default, indent=1).splitlines():
            buf.write(f"# {line}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([format(v, ".17g") if isinstance(v, float) else _cell(v) for v in row])
        return buf.getvalue()

    def to_json(self):
        rows = [[_json_cell(v) for v in r] for r in self.rows]
        body = {"meta": _finite(self.meta), "columns": self.columns, "rows": rows}
        return json.dumps(body, sort_keys=True, default=_json_default, indent=1, allow_nan=False) + "\n"

    def render(self, fmt):
        return self.to_csv() if fmt == "csv" else self.to_json()


def _json_cell(value):
    # JSON has no NaN or infinity; missing values become null
    if isinstance(value, (float, np.floating)) and not np.isfinite(value):
        return None
    return _cell(value)


def _finite(obj):
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return _json_cell(obj)


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, complex):
        return _cell(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


# -- commands ----------------------------------------------------------------


@dataclass(frozen=True)
class Command:
    handler: object
    defaults: dict
    help: str


def _int(params, key, low=None):
    try:
        value = int(params[key])
    except (TypeError, ValueError):
        raise UsageError(f"{key} must be an integer, got {params[key]!r}") from None
    if low is not None and value < low:
        raise UsageError(f"{key} must be >= {low}, got {value}")
    return value


def _float(params, key):
    try:
        return float(params[key])
    except (TypeError, ValueError):
        raise UsageError(f"{key} must be a number, got {params[key]!r}") from None


def _stream(cfg, offset=0):
    return RngStream(cfg.seed, offset)


def cmd_sample_roots(cfg, threads):
    p = cfg.params
    n, count = _int(p, "n", 1), _int(p, "count", 1)
    gen = _stream(cfg).generator()
    roots, res, iters = find_roots_batch(sample_kac_batch(n, count, gen), _float(p, "tol"), _int(p, "max_iter", 1))
    rows = []
    for s in range(count):
        for j in range(n):
            z = roots[s, j]
            rows.append([s, j, float(z.real), float(z.imag), float(abs(z)), float(res[s, j]), int(iters[s])])
    return ResultTable(["sample", "index", "re", "im", "modulus", "residual", "iterations"], rows)


def cmd_cdf_fluctuations(cfg, threads):
    p = cfg.params
    n, samples = _int(p, "n", 1), _int(p, "samples", 1)
    grid = parse_grid(p["y_grid"])
    rho = max_modulus_samples(n, samples, _stream(cfg), threads=threads)
    rows = []
    for y, emp in empirical_cdf(rho, grid):
        lim = limit_cdf(y)
        rows.append([y, emp, lim, abs(emp - lim)])
    sup = max(r[3] for r in rows) if rows else 0.0
    return ResultTable(["y", "empirical", "limit", "abs_diff"], rows, {"sup_abs_diff": sup})


def cmd_eval_limit_cdf(cfg, threads):
    grid = parse_grid(cfg.params["y_grid"])
    return ResultTable(["y", "limit_cdf"], [[y, limit_cdf(y)] for y in grid])


def cmd_eval_F(cfg, threads):
    p = cfg.params
    rows = []
    totals = {}
    for y in parse_grid(p["y"]):
        f = eval_F(y, _int(p, "k_max", 0), p["method"])
        for k, c in enumerate(f.contributions):
            series = f.series_values.get(k, float("nan")) if p["method"] == "both" else float("nan")
            if p["method"] == "series":
                series = f.j_values[k]
            rows.append([y, str(k), float(f.j_values[k]), float(series), float(c)])
        rows.append([y, "total", float("nan"), float("nan"), f.value])
        totals[repr(y)] = {"value": f.value, "tail_estimate": f.tail_estimate, "cross_checked": list(f.cross_checked)}
    return ResultTable(["y", "term", "J", "series_J", "contribution"], rows, {"F": totals})


def cmd_quadrature_J(cfg, threads):
    p = cfg.params
    k, nodes = _int(p, "k", 0), _int(p, "nodes", 8)
    rows = [[y, k, nodes, quadrature_J(k, y, nodes)] for y in parse_grid(p["y"])]
    return ResultTable(["y", "k", "nodes", "J"], rows)


def cmd_series_J(cfg, threads):
    p = cfg.params
    k = _int(p, "k", 0)
    cut = None if p["degree_cut"] is None else _int(p, "degree_cut", 0)
    rows = []
    for y in parse_grid(p["y"]):
        s = cauchy_series_J(k, y, cut)
        rows.append([y, k, s.degree_cut, s.value, s.tail_bound])
    return ResultTable(["y", "k", "degree_cut", "J", "tail_bound"], rows)


def cmd_ldp(cfg, threads):
    p = cfg.params
    n, samples = _int(p, "n", 1), _int(p, "samples", 100)
    rows = []
    for i, y in enumerate(parse_grid(p["y"])):
        est = ldp_estimator(n, y, samples, _stream(cfg, i), sampler=p["sampler"], threads=threads)
        f = eval_F(y).value
        rows.append(
            [
                n,
                y,
                samples,
                est.sampler,
                est.p_hat,
                est.std_error,
                est.log_p_hat,
                est.rescaled,
                est.log_rescaled,
                est.rescaled_std_error,
                f,
                est.log_p_hat / n**2 + log(1.0 / y),
            ]
        )
    cols = [
        "n",
        "y",
        "samples",
        "sampler",
        "p_hat",
        "std_error",
        "log_p_hat",
        "rescaled",
        "log_rescaled",
        "rescaled_std_error",
        "F",
        "rate_gap",
    ]
    return ResultTable(cols, rows)


def cmd_direct_mc(cfg, threads):
    p = cfg.params
    n, samples = _int(p, "n", 1), _int(p, "samples", 1)
    rows = []
    for i, y in enumerate(parse_grid(p["y"])):
        ph, se = direct_mc_prob(n, y, samples, _stream(cfg, i), threads=threads)
        rows.append([n, y, samples, ph, se])
    return ResultTable(["n", "y", "samples", "p_hat", "std_error"], rows)


def cmd_moments(cfg, threads):
    p = cfg.params
    n, samples = _int(p, "n", 1), _int(p, "samples", 2)
    u = parse_complex_list(p["u"])
    exact = moment_formula(n, u)
    mc, se = mc_moment(n, u, samples, _stream(cfg), sampler=p["sampler"], threads=threads)
    z = (mc - exact) / se if se > 0 else float("nan")
    return ResultTable(
        ["n", "u", "samples", "formula", "mc", "std_error", "z_score"],
        [[n, ",".join(_cell(complex(v)) for v in u), samples, exact, mc, se, z]],
    )


def cmd_dpp_sample(cfg, threads):
    p = cfg.params
    n, count = _int(p, "n", 1), _int(p, "count", 1)
    pts = ensemble_points(n, count, _stream(cfg), sampler=p["sampler"], threads=threads)
    rows = []
    for s in range(count):
        for j in range(n):
            z = pts[s, j]
            rows.append([s, j, float(z.real), float(z.imag), float(abs(z))])
    return ResultTable(["sample", "index", "re", "im", "modulus"], rows)


def cmd_correlations(cfg, threads):
    p = cfg.params
    z = parse_complex_list(p["z"])
    n = _int(p, "n", 1)
    k = len(z)
    fin = rho_finite(z, n)
    inside = all(abs(v) < 1 for v in z)
    lim = rho_limit(z) if inside else float("nan")
    return ResultTable(
        ["n", "k", "rho_finite", "pi_k_rho_finite", "rho_limit"],
        [[n, k, fin, np.pi**k * fin, lim]],
        {"note": "rho_finite is a Lebesgue density; rho_limit is a density for dz/pi per point"},
    )


def cmd_fredholm(cfg, threads):
    p = cfg.params
    radial, angular = _int(p, "radial", 1), _int(p, "angular", 1)
    rows = []
    for t in parse_grid(p["t"]):
        grid = NystromGrid.build(t, radial, angular)
        det = fredholm_bergman(t, grid)
        exact = float(np.prod(1.0 - t ** (2.0 * np.arange(1, 202))))
        eig = nystrom_eigenvalues(t, grid)[:3]
        rows.append([t, radial, angular, det, exact, abs(det - exact), *map(float, eig)])
    return ResultTable(["t", "radial", "angular", "fredholm", "product", "abs_diff", "eig1", "eig2", "eig3"], rows)


def cmd_gap_series(cfg, threads):
    p = cfg.params
    n = p["n"]
    if n != "limit":
        n = _int(p, "n", 1)
    y = _float(p, "y")
    gs = gap_probability_series(y, n, _int(p, "k_max", 0), _int(p, "mc_points", 2), _stream(cfg))
    lim = limit_cdf(y)
    rows = []
    partial = 0.0
    for k, (term, se) in enumerate(zip(gs.terms, gs.std_errors)):
        partial += term
        rows.append([y, gs.kernel, k, term, se, partial, lim])
    return ResultTable(
        ["y", "kernel", "k", "term", "std_error", "partial_sum", "limit_cdf"],
        rows,
        {"value": gs.value, "truncation_estimate": gs.truncation_estimate},
    )


def cmd_selftest(cfg, threads):
    p = cfg.params
    only = None
    if p["only"]:
        try:
            only = {int(v) for v in str(p["only"]).split(",") if v.strip()}
        except ValueError:
            raise UsageError(f"--only takes a comma list of criterion numbers, got {p['only']!r}") from None
    results = run_all(quick=bool(p["quick"]), only=only)
    rows = [[r.number, r.name, "PASS" if r.passed else "FAIL", r.detail] for r in results]
    return ResultTable(["criterion", "name", "status", "detail"], rows, {"all_passed": all(r.passed for r in results)})


COMMANDS = {
    "sample-roots": Command(cmd_sample_roots, {"n": 16, "count": 1, "tol": 1e-10, "max_iter": 200}, "roots of Kac polynomials"),
    "cdf-fluctuations": Command(
        cmd_cdf_fluctuations, {"n": 256, "samples": 2000, "y_grid": "1.05:3:0.05"}, "empirical CDF of the max modulus vs the limit"
    ),
    "eval-limit-cdf": Command(cmd_eval_limit_cdf, {"y_grid": "1.1:3.0:0.1"}, "limit CDF prod (1 - y^-2k)"),
    "eval-F": Command(cmd_eval_F, {"y": "0.6", "k_max": 6, "method": "quadrature"}, "the constant F(y) term by term"),
    "quadrature-J": Command(cmd_quadrature_J, {"k": 2, "y": "0.5", "nodes": 64}, "torus integral J_k by quadrature"),
    "series-J": Command(cmd_series_J, {"k": 2, "y": "0.5", "degree_cut": None}, "torus integral J_k by the Schur series"),
    "ldp": Command(cmd_ldp, {"n": 20, "y": "0.6", "samples": 100000, "sampler": "dpp"}, "left deviation estimator"),
    "direct-mc": Command(cmd_direct_mc, {"n": 2, "y": "0.5", "samples": 100000}, "direct Monte Carlo of P(max modulus <= y)"),
    "moments": Command(
        cmd_moments, {"n": 5, "u": "1.3", "samples": 100000, "sampler": "dpp"}, "characteristic polynomial moments"
    ),
    "dpp-sample": Command(cmd_dpp_sample, {"n": 4, "count": 1, "sampler": "dpp"}, "truncated-CUE eigenvalue samples"),
    "correlations": Command(cmd_correlations, {"n": 10, "z": "0.3"}, "finite and limiting root correlations"),
    "fredholm": Command(cmd_fredholm, {"t": "0.3,0.5,0.7", "radial": 64, "angular": 128}, "Bergman Fredholm determinant"),
    "gap-series": Command(
        cmd_gap_series, {"y": 1.5, "n": "limit", "k_max": 4, "mc_points": 200000}, "inclusion-exclusion gap probability"
    ),
    "selftest": Command(cmd_selftest, {"quick": False, "only": ""}, "run the acceptance suite"),
}


def run(config, threads=None):
    """Execute a config and return its ResultTable with the resolved config echoed in ``meta``."""
    cfg = config.resolved()
    table = COMMANDS[cfg.command].handler(cfg, threads)
    echo = cfg.to_dict()
    echo.pop("out")
    table.meta = {"artifact": "kacmax", "version": __version__, "seed": cfg.seed, "config": echo, **table.meta}
    return table


# -- argparse front end -----------------------------------------------------

# argparse converters per parameter; grids and point lists stay raw strings
_FLAGS = {
    "n": int,
    "count": int,
    "tol": float,
    "max_iter": int,
    "samples": int,
    "y_grid": str,
    "y": str,
    "k_max": int,
    "method": str,
    "k": int,
    "nodes": int,
    "degree_cut": int,
    "sampler": str,
    "u": str,
    "z": str,
    "t": str,
    "radial": int,
    "angular": int,
    "mc_points": int,
    "only": str,
}
_CHOICES = {"method": ("quadrature", "series", "both"), "sampler": ("dpp", "truncation")}


def _add_globals(p, suppress):
    default = argparse.SUPPRESS if suppress else None
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS if suppress else 0, help="64-bit seed (default 0)")
    p.add_argument("--threads", type=int, default=default, help="worker threads (env KACMAX_THREADS)")
    p.add_argument("--out", default=default, help="output file (default stdout)")
    p.add_argument("--format", choices=FORMATS, default=argparse.SUPPRESS if suppress else "csv")


def build_parser():
    parser = argparse.ArgumentParser(prog="kacmax", description="Maximum modulus of Kac polynomial roots")
    _add_globals(parser, suppress=False)
    parser.add_argument("--config", help="replay an ExperimentConfig JSON file (or an output's echoed config)")
    parser.add_argument("--version", action="version", version=f"kacmax {__version__}")
    sub = parser.add_subparsers(dest="command")
    for name, cmd in COMMANDS.items():
        sp = sub.add_parser(name, help=cmd.help)
        _add_globals(sp, suppress=True)
        for key in cmd.defaults:
            flag = "--" + key.replace("_", "-")
            if key == "quick":
                sp.add_argument(flag, action="store_true", default=argparse.SUPPRESS)
                continue
            if key == "n" and name == "gap-series":
                sp.add_argument(flag, default=argparse.SUPPRESS, help="degree or 'limit'")
                continue
            sp.add_argument(
                flag,
                dest=key,
                type=_FLAGS[key],
                choices=_CHOICES.get(key),
                default=argparse.SUPPRESS,
                help=f"default {cmd.defaults[key]!r}",
            )
    return parser


def _config_from_args(args):
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        data = json.loads(text) if text.strip().startswith("{") else None
        if isinstance(data, dict) and "meta" in data and "config" in data.get("meta", {}):
            data = data["meta"]["config"]
        cfg = ExperimentConfig.from_dict(data) if data is not None else ExperimentConfig.from_json(text)
        if args.out:
            cfg.out = args.out
        return cfg
    if not args.command:
        raise UsageError("a subcommand is required (see --help)")
    keys = COMMANDS[args.command].defaults
    params = {k: getattr(args, k) for k in keys if hasattr(args, k)}
    return ExperimentConfig(args.command, params, args.seed, args.out, args.format)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _config_from_args(args)
        table = run(cfg, threads=args.threads)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, CrossValidationError, SamplerError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (KacmaxError, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = table.render(cfg.format)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if cfg.command == "selftest":
        for row in table.rows:
            print(f"criterion {row[0]:2d} [{row[2]}] {row[1]}: {row[3]}", file=sys.stderr)
        if not table.meta["all_passed"]:
            return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
