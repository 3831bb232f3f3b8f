"""Command-line front end producing figure-ready tables.

Commands
--------
pie-map    PIE over an (n_a, M) grid for several truncation depths K
pie-opt    PIE optimized over M versus n_a, plus the zero-power limits
asymptote  zero-power PIE limit versus n_b
range      optimized rate, PPM order and peak power versus distance
validate   oracle and Monte Carlo cross-checks

Settings come from built-in defaults, then ``--config FILE`` (JSON object with
the same keys as the long flags, dashes replaced by underscores), then flags.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import linkbudget, optimize, oracle
from .infotheory import DEFAULT_TOL, mi_bits

EXIT_OK, EXIT_USAGE, EXIT_COMPUTE, EXIT_VALIDATION = 0, 1, 2, 3
COMMANDS = ("pie-map", "pie-opt", "asymptote", "range", "validate")

SCHEMAS = {
    "pie-map": [("kind", str), ("n_a", float), ("M", int), ("K", str), ("pie", float)],
    "pie-opt": [("n_a", float), ("n_b", float), ("mode", str), ("pie_star", float),
                ("n_s_star", float), ("M_star", int)],
    "asymptote": [("n_b", float), ("pie_inf", float), ("n_s_inf", float)],
    "range": [("r_au", float), ("n_b", float), ("mode", str), ("n_a", float),
              ("eta_tot", float), ("M_star", int), ("pie_star", float),
              ("n_s_star", float), ("rate_bits_per_s", float), ("peak_power_W", float),
              ("error", str)],
    "validate": [("check", str), ("passed", str), ("value", float), ("threshold", float)],
}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    n_b: list = field(default_factory=lambda: [1e-3, 1e-2, 1e-1])
    n_b_min: float | None = None
    n_b_max: float | None = None
    n_b_points: int = 41
    n_a_min: float = 1e-7
    n_a_max: float = 1.0
    n_a_points: int = 29
    M_min: int = 2
    M_max: int = 10**6
    M_points: int = 25
    K: list = field(default_factory=lambda: ["1", "2", "5", "M"])
    r_min: float = 0.01
    r_max: float = 100.0
    r_points: int = 25
    fit_r_min: float = 10.0
    fit_r_max: float = 100.0
    mode: str = "both"
    P_t: float = 4.0
    B: float = 2e9
    f_c: float = 2e14
    D_t: float = 0.22
    D_r: float = 11.8
    eta_det: float = 0.025
    au_rounded: bool = False
    oracle_M_max: int = 12
    frames: int = 10**6
    perturb: float = 0.0
    tol: float = DEFAULT_TOL
    seed: int = 0
    format: str = "csv"
    out: str | None = None

    def validate(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.format not in ("csv", "json"):
            raise UsageError(f"format must be csv or json, got {self.format!r}")
        if self.mode not in ("simple", "complete", "both"):
            raise UsageError(f"mode must be simple, complete or both, got {self.mode!r}")
        for lo, hi, n in (("n_a_min", "n_a_max", "n_a_points"), ("r_min", "r_max", "r_points"),
                          ("M_min", "M_max", "M_points")):
            a, b, k = getattr(self, lo), getattr(self, hi), getattr(self, n)
            if not (a > 0 and b >= a and int(k) >= 1):
                raise UsageError(f"bad grid {lo}={a}, {hi}={b}, {n}={k}")
        if self.M_min < 2:
            raise UsageError("M_min must be >= 2")
        if not self.n_b or any(v < 0 for v in self.n_b):
            raise UsageError("n_b list must be nonempty and nonnegative")
        if (self.n_b_min is None) != (self.n_b_max is None):
            raise UsageError("give both n_b_min and n_b_max")
        if self.n_b_min is not None and not (0 < self.n_b_min <= self.n_b_max):
            raise UsageError("n_b grid bounds must be positive and ordered")
        for k in self.K:
            if k != "M" and not (str(k).isdigit() and int(k) >= 1):
                raise UsageError(f"K entries must be positive integers or 'M', got {k!r}")
        if not self.tol > 0:
            raise UsageError("tol must be > 0")
        if self.frames < 1:
            raise UsageError("frames must be >= 1")
        if not 2 <= self.oracle_M_max <= oracle.MAX_ENUM_M:
            raise UsageError(f"oracle_M_max must be in [2, {oracle.MAX_ENUM_M}]")
        return self

    def modes(self):
        return list(optimize.MODES) if self.mode == "both" else [self.mode]

    def n_a_grid(self):
        return np.geomspace(self.n_a_min, self.n_a_max, self.n_a_points)

    def M_grid(self):
        g = np.geomspace(self.M_min, self.M_max, self.M_points)
        return sorted({int(round(m)) for m in g})

    def r_grid_au(self):
        return np.geomspace(self.r_min, self.r_max, self.r_points)

    def n_b_grid(self):
        if self.n_b_min is not None:
            return list(np.geomspace(self.n_b_min, self.n_b_max, self.n_b_points))
        return list(self.n_b)

    def geometry(self, r_m):
        return linkbudget.LinkGeometry(P_t=self.P_t, B=self.B, f_c=self.f_c, D_t=self.D_t,
                                       D_r=self.D_r, eta_det=self.eta_det, r=r_m)


# ---------------------------------------------------------------- output

def format_value(v, typ):
    if v is None:
        return ""
    if typ is float:
        v = float(v)
        return "nan" if math.isnan(v) else format(v, ".16e")
    if typ is int:
        return str(int(v))
    return str(v)


def parse_value(s, typ):
    if s == "":
        return None
    return typ(s)


class TableWriter:
    """Streams rows as CSV, or collects them for a single JSON document."""

    def __init__(self, stream, command, fmt):
        self.stream = stream
        self.schema = SCHEMAS[command]
        self.command = command
        self.fmt = fmt
        self.rows = []
        self.metadata = {}
        if fmt == "csv":
            self._csv = csv.writer(stream, lineterminator="\n")
            self._csv.writerow([name for name, _ in self.schema])

    def write(self, row):
        if self.fmt == "csv":
            self._csv.writerow([format_value(row.get(n), t) for n, t in self.schema])
            self.stream.flush()
        else:
            self.rows.append({n: _json_value(row.get(n), t) for n, t in self.schema})

    def close(self):
        if self.fmt == "csv":
            for key, val in self.metadata.items():
                self.stream.write(f"# {key}: {json.dumps(val, sort_keys=True)}\n")
        else:
            doc = {"command": self.command, "columns": [n for n, _ in self.schema],
                   "rows": self.rows, "metadata": self.metadata}
            json.dump(doc, self.stream, indent=1, sort_keys=False)
            self.stream.write("\n")
        self.stream.flush()


def _json_value(v, typ):
    if v is None:
        return None
    if typ is float:
        v = float(v)
        return None if math.isnan(v) else v
    if typ is int:
        return int(v)
    return str(v)


def read_table(text, command):
    """Parse CSV text written by `TableWriter` back into typed rows and metadata."""
    schema = dict(SCHEMAS[command])
    body = [ln for ln in text.splitlines() if not ln.startswith("#")]
    meta = {}
    for ln in text.splitlines():
        if ln.startswith("# "):
            key, _, val = ln[2:].partition(": ")
            meta[key] = json.loads(val)
    reader = csv.DictReader(io.StringIO("\n".join(body)))
    rows = [{k: parse_value(v, schema[k]) for k, v in r.items()} for r in reader]
    return rows, meta


# ---------------------------------------------------------------- commands

def cmd_pie_map(cfg, out):
    n_b = cfg.n_b_grid()[0]
    Ms = cfg.M_grid()
    for n_a in cfg.n_a_grid():
        for K in cfg.K:
            best = None
            for M in Ms:
                k = M if K == "M" else min(int(K), M)
                val = mi_bits(M, M * n_a, n_b, k, cfg.tol) / n_a
                out.write({"kind": "grid", "n_a": n_a, "M": M, "K": K, "pie": val})
                if best is None or val > best[1] + optimize.TIE_TOL:
                    best = (M, val)
            out.write({"kind": "opt", "n_a": n_a, "M": best[0], "K": K, "pie": best[1]})
    out.metadata["n_b"] = n_b
    return EXIT_OK


def cmd_pie_opt(cfg, out):
    for n_b in cfg.n_b_grid():
        for mode in cfg.modes():
            for n_a in cfg.n_a_grid():
                r = optimize.optimize_ppm_order(n_a, n_b, mode, cfg.tol)
                out.write({"n_a": n_a, "n_b": n_b, "mode": mode, "pie_star": r.pie_star,
                           "n_s_star": r.n_s_star, "M_star": r.M_star})
        if n_b > 0:
            lim = optimize.asymptotic_pie(n_b)
            out.write({"n_b": n_b, "mode": "asymptote", "pie_star": lim.pie_inf,
                       "n_s_star": lim.n_s_inf})
    return EXIT_OK


def cmd_asymptote(cfg, out):
    for n_b in cfg.n_b_grid():
        lim = optimize.asymptotic_pie(n_b)
        out.write({"n_b": n_b, "pie_inf": lim.pie_inf, "n_s_inf": lim.n_s_inf})
    return EXIT_OK


def range_exponents(points, au, fit_r_min, fit_r_max):
    """Fitted power-law exponents of rate, M* and peak power per (n_b, mode)."""
    groups = {}
    for p in points:
        if p.error is None and fit_r_min <= p.r / au <= fit_r_max:
            groups.setdefault((p.n_b, p.mode), []).append(p)
    summary = []
    for (n_b, mode), pts in groups.items():
        if len(pts) < 2:
            continue
        r = [p.r for p in pts]
        summary.append({
            "n_b": n_b, "mode": mode,
            "rate_exponent": linkbudget.loglog_slope(r, [p.rate_bits_per_s for p in pts]),
            "M_star_exponent": linkbudget.loglog_slope(r, [p.M_star for p in pts]),
            "peak_power_exponent": linkbudget.loglog_slope(r, [p.peak_power_W for p in pts]),
        })
    return summary


def cmd_range(cfg, out):
    au = linkbudget.AU_ROUNDED if cfg.au_rounded else linkbudget.AU
    template = cfg.geometry(au)
    r_m = [r * au for r in cfg.r_grid_au()]
    points = []
    for p in linkbudget.iter_range_sweep(template, cfg.n_b_grid(), r_m, cfg.modes(), cfg.tol):
        points.append(p)
        out.write({"r_au": p.r / au, "n_b": p.n_b, "mode": p.mode, "n_a": p.n_a,
                   "eta_tot": p.eta_tot, "M_star": p.M_star, "pie_star": p.pie_star,
                   "n_s_star": p.n_s_star, "rate_bits_per_s": p.rate_bits_per_s,
                   "peak_power_W": p.peak_power_W, "error": p.error})
    out.metadata["au_m"] = au
    out.metadata["exponents"] = range_exponents(points, au, cfg.fit_r_min, cfg.fit_r_max)
    failed = sum(p.error is not None for p in points)
    out.metadata["failed_rows"] = failed
    return EXIT_COMPUTE if points and failed == len(points) else EXIT_OK


def _perturbed_n_s(n_s, n_b, dp):
    # pulse energy whose click probability is p_c + dp
    p_c = -math.expm1(-(n_s + n_b))
    return -math.log1p(-(p_c + dp)) - n_b


def validation_checks(cfg):
    """Run the oracle and Monte Carlo suites; returns a list of check rows."""
    checks = []
    worst = 0.0
    for M in range(2, cfg.oracle_M_max + 1):
        for K in sorted({1, 2, M}):
            for n_s in (0.1, 1.0, 5.0):
                for n_b in (0.0, 1e-3, 1e-1):
                    exact = oracle.brute_force_mi(M, n_s, n_b, K)
                    ns = _perturbed_n_s(n_s, n_b, cfg.perturb) if cfg.perturb else n_s
                    worst = max(worst, abs(mi_bits(M, ns, n_b, K, cfg.tol) - exact))
    checks.append({"check": "oracle_equivalence", "value": worst, "threshold": 1e-10,
                   "passed": worst <= 1e-10})

    M, n_s, n_b = 8, 1.0, 1e-2
    counts = oracle.simulate_frames(M, n_s, n_b, cfg.frames, cfg.seed)
    N = counts.num_frames
    p_b = -math.expm1(-n_b)
    p_c = -math.expm1(-(n_s + n_b))
    hits = counts.by_class[:, :, 1].sum()
    z = abs(hits / N - p_c) / math.sqrt(p_c * (1 - p_c) / N)
    checks.append({"check": "mc_pulse_click_prob", "value": z, "threshold": 4.0,
                   "passed": z <= 4.0})
    zmax = 0.0
    for k in range(1, 4):
        expect = math.comb(M - 1, k - 1) * p_c * p_b ** (k - 1) * (1 - p_b) ** (M - k)
        got = counts.by_class[:, k, 1].sum() / N
        zmax = max(zmax, abs(got - expect) / math.sqrt(expect * (1 - expect) / N))
    checks.append({"check": "mc_signal_k_click_freq", "value": zmax, "threshold": 4.0,
                   "passed": zmax <= 4.0})
    est, se = oracle.bootstrap_mi(counts.joint, 100, cfg.seed)
    analytic = mi_bits(M, n_s, n_b, None, cfg.tol)
    zmi = abs(est / M - analytic) / (se / M)
    checks.append({"check": "mc_plugin_mi", "value": zmi, "threshold": 3.0,
                   "passed": zmi <= 3.0})
    return checks


def cmd_validate(cfg, out):
    checks = validation_checks(cfg)
    for c in checks:
        out.write({**c, "passed": "true" if c["passed"] else "false"})
    ok = all(c["passed"] for c in checks)
    out.metadata["passed"] = ok
    return EXIT_OK if ok else EXIT_VALIDATION


HANDLERS = {"pie-map": cmd_pie_map, "pie-opt": cmd_pie_opt, "asymptote": cmd_asymptote,
            "range": cmd_range, "validate": cmd_validate}


# ---------------------------------------------------------------- parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _float_list(s):
    try:
        return [float(v) for v in s.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {s!r}")


def _str_list(s):
    return [v.strip() for v in s.split(",") if v.strip()]


def _int(s):
    """Integer flag that also accepts exact scientific notation like 1e6."""
    try:
        return int(s)
    except ValueError:
        pass
    try:
        v = float(s)
    except ValueError:
        v = math.nan
    if not (math.isfinite(v) and v == int(v)):
        raise argparse.ArgumentTypeError(f"expected an integer, got {s!r}")
    return int(v)


def build_parser():
    S = argparse.SUPPRESS
    common = _Parser(add_help=False, argument_default=S)
    common.add_argument("--config", metavar="PATH", help="JSON config file")
    common.add_argument("--n-b", dest="n_b", type=_float_list, help="background photons per bin (list)")
    for name in ("n_a", "r"):
        flag = name.replace("_", "-")
        common.add_argument(f"--{flag}-min", dest=f"{name}_min", type=float)
        common.add_argument(f"--{flag}-max", dest=f"{name}_max", type=float)
        common.add_argument(f"--{flag}-points", dest=f"{name}_points", type=_int)
    common.add_argument("--mode", choices=["simple", "complete", "both"])
    common.add_argument("--tol", type=float)
    common.add_argument("--seed", type=_int)
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("--out", metavar="PATH")

    parser = _Parser(prog="ppmlink", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pie-map", parents=[common], argument_default=S)
    p.add_argument("--M-min", dest="M_min", type=_int)
    p.add_argument("--M-max", dest="M_max", type=_int)
    p.add_argument("--M-points", dest="M_points", type=_int)
    p.add_argument("--K", type=_str_list, help="truncation depths, e.g. 1,2,5,M")

    sub.add_parser("pie-opt", parents=[common], argument_default=S)

    p = sub.add_parser("asymptote", parents=[common], argument_default=S)
    p.add_argument("--n-b-min", dest="n_b_min", type=float)
    p.add_argument("--n-b-max", dest="n_b_max", type=float)
    p.add_argument("--n-b-points", dest="n_b_points", type=_int)

    p = sub.add_parser("range", parents=[common], argument_default=S)
    for flag, dest in (("--P-t", "P_t"), ("--B", "B"), ("--f-c", "f_c"), ("--D-t", "D_t"),
                       ("--D-r", "D_r"), ("--eta-det", "eta_det"),
                       ("--fit-r-min", "fit_r_min"), ("--fit-r-max", "fit_r_max")):
        p.add_argument(flag, dest=dest, type=float)
    p.add_argument("--au-rounded", dest="au_rounded", action="store_true",
                   help="use 1 AU = 1.5e11 m")

    p = sub.add_parser("validate", parents=[common], argument_default=S)
    p.add_argument("--oracle-M-max", dest="oracle_M_max", type=_int)
    p.add_argument("--frames", type=_int)
    p.add_argument("--perturb", type=float, help="add this to p_c on the analytic side")
    return parser


COMMAND_DEFAULTS = {
    "pie-map": {"n_b": [1e-3], "n_a_min": 1e-4, "n_a_max": 1.0, "n_a_points": 17,
                "format": "csv"},
    "pie-opt": {},
    "asymptote": {"n_b": [1e-4, 1e-3, 1e-2, 1e-1, 1.0]},
    "range": {},
    "validate": {},
}


def load_config(argv):
    """Merge defaults, an optional JSON config file, and flags into a `RunConfig`."""
    ns = vars(build_parser().parse_args(argv))
    command = ns.pop("command")
    merged = dict(COMMAND_DEFAULTS[command])
    path = ns.pop("config", None)
    if path is not None:
        try:
            with open(path) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}")
        if not isinstance(file_cfg, dict):
            raise UsageError("config file must hold a JSON object")
        file_cfg.pop("command", None)
        merged.update(file_cfg)
    merged.update(ns)
    known = {f.name for f in fields(RunConfig)}
    unknown = set(merged) - known
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    if "K" in merged:
        merged["K"] = [str(k) for k in merged["K"]]
    try:
        cfg = RunConfig(command=command, **merged)
    except TypeError as exc:
        raise UsageError(str(exc))
    return cfg.validate()


def main(argv=None, stdout=None):
    stdout = sys.stdout if stdout is None else stdout
    try:
        cfg = load_config(argv)
    except UsageError as exc:
        print(f"ppmlink: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    stream = open(cfg.out, "w", newline="") if cfg.out else stdout
    try:
        writer = TableWriter(stream, cfg.command, cfg.format)
        try:
            code = HANDLERS[cfg.command](cfg, writer)
        except (ValueError, ArithmeticError) as exc:
            print(f"ppmlink: computation failed: {exc}", file=sys.stderr)
            code = EXIT_COMPUTE
        writer.close()
    finally:
        if cfg.out:
            stream.close()
    return code


def main_entry():
    sys.exit(main())
