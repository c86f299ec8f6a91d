"""
Command-line front end.

Every subcommand writes tidy rows (CSV with ``#`` header comments, or JSON
lines) in a fixed order, so identical command lines give byte-identical
output for any worker count.  SNR is accepted in dB only.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from typing import Callable, Optional

import numpy as np

from . import asymptotics, monte_carlo
from .channel import (ANGLE_PROFILES, DEFAULT_PROFILE, SystemConfig, UlaGeometry,
                      db_to_linear, los_spectrum, perturb_angles, ula_los)
from .exact_rate import DEFAULT_TOL, exact_rate, high_snr_rate, required_terms
from .errors import ConfigError, RateError, UnsupportedRegime
from .rng import RandomStream

SCHEMA = 1
METHOD_CHOICES = ("exact", "mc", "highsnr", "asym-nt", "asym-nr", "asym-de")
SWEEP_VARIABLES = ("snr_db", "K", "N", "Nt", "Nr")

# stream ids; channel draws and angle jitter never share a Philox key
MC_STREAM = 0
PERTURB_STREAM = 0xA46E

# published rows: (rho, Nt, Nr, delta_t, delta_r, K, T0)
TABLE1_ROWS = (
    (0.0, 2, 2, 0.15, 0.15, 1.0, 11),
    (0.0, 2, 2, 0.15, 0.15, 5.0, 15),
    (10.0, 2, 2, 0.15, 0.15, 1.0, 10),
    (0.0, 4, 4, 0.15, 0.15, 1.0, 12),
    (0.0, 2, 2, 0.10, 0.10, 1.0, 12),
)


@dataclass
class ResultRow:
    experiment: str
    Nt: int
    Nr: int
    delta_t: float
    delta_r: float
    K: float
    rho: float
    snr_db: float
    N0: float
    method: str
    rate: float
    uncertainty: float
    terms_used: Optional[int] = None
    reference: Optional[float] = None
    wall_time_ms: Optional[float] = None
    note: str = ""

    @classmethod
    def for_config(cls, experiment: str, config: SystemConfig, method: str, rate: float,
                   uncertainty: float = 0.0, **extra) -> "ResultRow":
        return cls(experiment, config.Nt, config.Nr, config.delta_t, config.delta_r, config.K,
                   config.rho, config.snr_db, config.N0, method, rate, uncertainty, **extra)

    def config(self) -> SystemConfig:
        return SystemConfig(Nt=self.Nt, Nr=self.Nr, delta_t=self.delta_t, delta_r=self.delta_r,
                            K=self.K, rho=self.rho, N0=self.N0)


COLUMNS = tuple(f.name for f in fields(ResultRow))
_INT_COLUMNS = {"Nt", "Nr", "terms_used"}
_STR_COLUMNS = {"experiment", "method", "note"}


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    values: tuple
    fixed: SystemConfig
    methods: tuple
    trials: int
    seed: int

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ConfigError(f"sweep variable must be one of {SWEEP_VARIABLES}")
        if not self.values:
            raise ConfigError("sweep values must be nonempty")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ConfigError("sweep values must be strictly increasing")
        if not self.methods:
            raise ConfigError("at least one method is required")

    def configs(self) -> list[SystemConfig]:
        out = []
        for v in self.values:
            if self.variable == "snr_db":
                out.append(self.fixed.replace(rho=db_to_linear(v)))
            elif self.variable == "K":
                out.append(self.fixed.replace(K=v))
            elif self.variable == "N":
                out.append(self.fixed.replace(Nt=_as_count(v), Nr=_as_count(v)))
            else:
                out.append(self.fixed.replace(**{self.variable: _as_count(v)}))
        return out


def _as_count(v) -> int:
    if float(v) != int(v):
        raise ConfigError(f"antenna count must be an integer, got {v}")
    return int(v)


# ---------------------------------------------------------------- output

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(name: str, text: str):
    if name in _STR_COLUMNS:
        return text
    if text == "":
        return None
    return int(text) if name in _INT_COLUMNS else float(text)


def format_rows(rows: list[ResultRow], fmt: str = "csv", header: Optional[dict] = None) -> str:
    """Serialize rows; ``header`` entries become ``# key=value`` comment lines in CSV."""
    if fmt == "json":
        return "".join(json.dumps(asdict(r)) + "\n" for r in rows)
    buf = io.StringIO()
    buf.write(f"# schema={SCHEMA}\n")
    for k, v in (header or {}).items():
        buf.write(f"# {k}={v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_fmt(getattr(r, c)) for c in COLUMNS])
    return buf.getvalue()


def parse_rows(text: str, fmt: str = "csv") -> list[ResultRow]:
    """Inverse of :func:`format_rows`."""
    if fmt == "json":
        return [ResultRow(**json.loads(line)) for line in text.splitlines() if line.strip()]
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    return [ResultRow(**{k: _parse(k, v) for k, v in rec.items()}) for rec in reader]


def header_comments(text: str) -> dict:
    out = {}
    for ln in text.splitlines():
        if ln.startswith("# ") and "=" in ln:
            k, v = ln[2:].split("=", 1)
            out[k] = v
    return out


# ---------------------------------------------------------------- execution

@dataclass(frozen=True)
class RunOptions:
    trials: int
    seed: int
    tol: float
    angles: str
    perturb: float
    spacing: float
    timing: bool


def _geometry(Nr: int, opts: RunOptions) -> UlaGeometry:
    if opts.angles in ANGLE_PROFILES:
        geom = UlaGeometry.preset(Nr, opts.angles, opts.spacing)
    else:
        try:
            theta = tuple(float(t) for t in opts.angles.split(","))
        except ValueError:
            raise ConfigError(f"--angles must be one of {ANGLE_PROFILES} or a comma list of radians") from None
        if len(theta) != Nr:
            raise ConfigError(f"--angles lists {len(theta)} angles but Nr = {Nr}")
        geom = UlaGeometry(theta, opts.spacing)
    if opts.perturb:
        geom = perturb_angles(geom, opts.perturb, RandomStream(opts.seed, PERTURB_STREAM))
    return geom


def _los(config: SystemConfig, opts: RunOptions) -> np.ndarray:
    return ula_los(config.Nt, _geometry(config.Nr, opts))


def _stream(opts: RunOptions) -> RandomStream:
    return RandomStream(opts.seed, MC_STREAM)


def _compute(experiment: str, config: SystemConfig, method: str, opts: RunOptions,
             workers: int) -> ResultRow:
    note = ""
    extra = {}
    if method in ("exact", "highsnr") and config.K == 0:
        if method == "highsnr":
            raise UnsupportedRegime("the high-SNR ceiling needs K > 0")
        print("note: exact engine needs K > 0; falling back to Monte Carlo", file=sys.stderr)
        method, note = "mc", "exact needs K>0; mc fallback"
    if method == "exact":
        res = exact_rate(config, los_spectrum(_los(config, opts), config.K), opts.tol)
    elif method == "highsnr":
        res = high_snr_rate(config, los_spectrum(_los(config, opts), config.K), opts.tol)
    elif method == "mc":
        res = monte_carlo.mc_rate(config, _los(config, opts), opts.trials, _stream(opts), workers)
    elif method == "asym-nt":
        res = asymptotics.rate_large_nt(config)
    elif method == "asym-nr":
        res = asymptotics.rate_large_nr(config)
    elif method == "asym-de":
        res = asymptotics.rate_large_both(config, _los(config, opts))
    else:
        raise ConfigError(f"unknown method {method!r}")
    if res.diagnostics is not None:
        extra["terms_used"] = res.diagnostics.terms_used
    return ResultRow.for_config(experiment, config, res.method, res.rate, res.uncertainty,
                                note=note, **extra)


def _timed(task: Callable[[int], list[ResultRow]], timing: bool, workers: int) -> list[ResultRow]:
    t0 = time.perf_counter()
    rows = task(workers)
    if timing:
        ms = (time.perf_counter() - t0) * 1e3
        for r in rows:
            r.wall_time_ms = round(ms, 3)
    return rows


def run_tasks(tasks: list[Callable[[int], list[ResultRow]]], timing: bool = False,
              workers: Optional[int] = None) -> list[ResultRow]:
    """Evaluate tasks on a thread pool; rows come back in task order.

    Each task receives the worker budget for its own inner parallelism.
    """
    workers = workers or monte_carlo.default_workers()
    if workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda t: _timed(t, timing, 1), tasks))
    else:
        parts = [_timed(t, timing, workers) for t in tasks]
    return [r for part in parts for r in part]


def _point_tasks(experiment, configs, methods, opts):
    return [lambda w, c=c, m=m: [_compute(experiment, c, m, opts, w)]
            for c in configs for m in methods]


# ---------------------------------------------------------------- commands

def _options(args) -> RunOptions:
    return RunOptions(args.trials, args.seed, args.tol, args.angles, args.perturb_angles,
                      args.spacing, args.timing)


def _base_config(args) -> SystemConfig:
    return SystemConfig.from_snr_db(args.nt, args.nr, args.delta_t, args.delta_r, args.K, args.snr_db)


def _methods(text: str) -> tuple:
    methods = tuple(m.strip() for m in text.split(",") if m.strip())
    bad = [m for m in methods if m not in METHOD_CHOICES]
    if bad or not methods:
        raise ConfigError(f"--method must be a comma list drawn from {METHOD_CHOICES}")
    return methods


def cmd_rate(args) -> tuple[list[ResultRow], dict]:
    opts = _options(args)
    tasks = _point_tasks("rate", [_base_config(args)], _methods(args.method), opts)
    return run_tasks(tasks, opts.timing), {}


def cmd_sweep(args) -> tuple[list[ResultRow], dict]:
    opts = _options(args)
    try:
        values = tuple(float(v) for v in args.values.split(","))
    except ValueError:
        raise ConfigError("--values must be a comma-separated list of numbers") from None
    spec = SweepSpec(args.var, values, _base_config(args), _methods(args.method),
                     args.trials, args.seed)
    tasks = _point_tasks("sweep", spec.configs(), spec.methods, opts)
    return run_tasks(tasks, opts.timing), {"sweep": spec.variable}


def cmd_table1(args) -> tuple[list[ResultRow], dict]:
    opts = _options(args)

    def row_task(spec):
        rho, Nt, Nr, dt, dr, K, published = spec
        if args.rho_units == "db":
            config = SystemConfig.from_snr_db(Nt, Nr, dt, dr, K, rho)
        else:
            config = SystemConfig(Nt, Nr, dt, dr, K, rho)

        def task(_workers):
            spectrum = los_spectrum(_los(config, opts), K)
            t0 = required_terms(config, spectrum, opts.tol)
            res = exact_rate(config, spectrum, opts.tol)
            return [ResultRow.for_config("table1", config, res.method, res.rate, res.uncertainty,
                                         terms_used=t0, reference=float(published))]
        return task

    rows = run_tasks([row_task(s) for s in TABLE1_ROWS], opts.timing)
    return rows, {"rho_units": args.rho_units, "tol": repr(opts.tol)}


FIG1_SNR_DB = tuple(range(-10, 41, 5))
FIG1_K = (1.0, 5.0, 10.0)


def cmd_fig1(args) -> tuple[list[ResultRow], dict]:
    opts = _options(args)
    tasks = []
    for K in FIG1_K:
        for snr in FIG1_SNR_DB:
            impaired = SystemConfig.from_snr_db(2, 2, 0.15, 0.15, K, snr)
            ideal = impaired.replace(delta_t=0.0, delta_r=0.0)
            tasks += _point_tasks("fig1", [impaired], ("exact", "mc", "highsnr"), opts)
            tasks += _point_tasks("fig1", [ideal], ("exact", "mc"), opts)
    return run_tasks(tasks, opts.timing), {}


def _n_grid(n_max: int) -> list[int]:
    if n_max < 2:
        raise ConfigError("--n-max must be at least 2")
    return [2 ** k for k in range(1, int(math.log2(n_max)) + 1)]


def _k_list(text: str) -> tuple:
    try:
        return tuple(float(k) for k in text.split(","))
    except ValueError:
        raise ConfigError("--K-list must be a comma-separated list of numbers") from None


def cmd_fig2(args) -> tuple[list[ResultRow], dict]:
    opts = _options(args)
    configs = [SystemConfig.from_snr_db(N, N, d, d, K, 10.0)
               for K in _k_list(args.K_list) for d in (0.0, 0.15) for N in _n_grid(args.n_max)]
    return run_tasks(_point_tasks("fig2", configs, ("mc", "asym-de"), opts), opts.timing), {}


def cmd_fig3(args) -> tuple[list[ResultRow], dict]:
    opts = _options(args)

    def loss_task(config):
        def task(workers):
            Hbar = _los(config, opts)
            ideal = config.replace(delta_t=0.0, delta_r=0.0)
            # matched draws for numerator and denominator
            r_ideal = monte_carlo.sample_rates(ideal, Hbar, opts.trials, _stream(opts), workers)
            r_hw = monte_carlo.sample_rates(config, Hbar, opts.trials, _stream(opts), workers)
            e_ideal, e_hw = monte_carlo.estimate(r_ideal), monte_carlo.estimate(r_hw)
            loss = monte_carlo.paired_loss(r_ideal, r_hw)
            return [ResultRow.for_config("fig3", ideal, "mc", e_ideal.mean, e_ideal.std_error),
                    ResultRow.for_config("fig3", config, "mc", e_hw.mean, e_hw.std_error),
                    ResultRow.for_config("fig3", config, "rate_loss", loss.mean, loss.std_error)]
        return task

    configs = [SystemConfig.from_snr_db(N, N, 0.15, 0.15, K, 10.0)
               for K in _k_list(args.K_list) for N in _n_grid(args.n_max)]
    return run_tasks([loss_task(c) for c in configs], opts.timing), {}


def cmd_selftest(args) -> tuple[list[ResultRow], dict]:
    """Fast internal consistency checks; fails with exit code 3 on any mismatch."""
    opts = _options(args)
    config = SystemConfig.from_snr_db(2, 2, 0.15, 0.15, 1.0, 10.0)
    ex = _compute("selftest", config, "exact", opts, 1)
    mc = _compute("selftest", config, "mc", opts, monte_carlo.default_workers())
    checks = [
        ("exact_vs_mc", abs(ex.rate - mc.rate) <= max(3 * mc.uncertainty, 0.02)),
        ("high_snr_ceiling",
         _compute("selftest", config.replace(rho=1e6), "exact", opts, 1).rate
         <= _compute("selftest", config, "highsnr", opts, 1).rate + 0.01),
    ]
    rows = [ex, mc]
    for name, ok in checks:
        rows.append(ResultRow.for_config("selftest", config, name, float(ok), 0.0,
                                         note="pass" if ok else "FAIL"))
    if not all(ok for _, ok in checks):
        raise _SelftestFailed(rows)
    return rows, {}


class _SelftestFailed(RateError):
    def __init__(self, rows):
        super().__init__("one or more self-test checks failed")
        self.rows = rows


# ---------------------------------------------------------------- parser

def _add_output(p, trials=100_000):
    p.add_argument("--trials", type=int, default=trials, help="Monte Carlo trials per point")
    p.add_argument("--seed", type=int, default=0, help="random seed (unsigned 64-bit)")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL,
                   help="series truncation tolerance, bits/s/Hz")
    p.add_argument("--spacing", type=float, default=0.5, help="antenna spacing in wavelengths")
    p.add_argument("--perturb-angles", type=float, default=0.0, metavar="EPS",
                   help="jitter arrival angles by up to EPS radians")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--timing", action="store_true", help="fill the wall_time_ms column")


def _add_link(p):
    p.add_argument("--nt", type=int, default=2)
    p.add_argument("--nr", type=int, default=2)
    p.add_argument("--delta-t", type=float, default=0.0)
    p.add_argument("--delta-r", type=float, default=0.0)
    p.add_argument("--K", type=float, default=1.0)
    p.add_argument("--snr-db", type=float, default=10.0)
    p.add_argument("--method", default="exact",
                   help=f"comma list from {', '.join(METHOD_CHOICES)}")


def _add_angles(p, default=DEFAULT_PROFILE):
    p.add_argument("--angles", default=default,
                   help=f"profile ({', '.join(ANGLE_PROFILES)}) or comma list of radians")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rician-rate",
        description="Ergodic rate of Rician MIMO links with transceiver hardware impairments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rate", help="rate of a single configuration")
    _add_link(p); _add_angles(p); _add_output(p)
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("sweep", help="sweep one parameter")
    _add_link(p); _add_angles(p); _add_output(p)
    p.add_argument("--var", choices=SWEEP_VARIABLES, required=True)
    p.add_argument("--values", required=True, help="comma list, strictly increasing")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("table1", help="required series terms for the reference configurations")
    _add_angles(p); _add_output(p)
    p.add_argument("--rho-units", choices=("db", "linear"), default="db")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("fig1", help="rate against SNR at 2x2")
    _add_angles(p); _add_output(p)
    p.set_defaults(func=cmd_fig1)

    for name, fn, helptext in (("fig2", cmd_fig2, "rate against array size"),
                               ("fig3", cmd_fig3, "relative rate loss against array size")):
        p = sub.add_parser(name, help=helptext)
        _add_angles(p, default="common"); _add_output(p, trials=10_000)
        p.add_argument("--n-max", type=int, default=64)
        p.add_argument("--K-list", default="1,10" if name == "fig2" else "0,1,10,100")
        p.set_defaults(func=fn)

    p = sub.add_parser("selftest", help="quick internal consistency checks")
    _add_angles(p); _add_output(p, trials=20_000)
    p.set_defaults(func=cmd_selftest)
    return parser


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    header = {"command": args.command}
    try:
        rows, extra = args.func(args)
    except _SelftestFailed as exc:
        _emit(format_rows(exc.rows, args.format, header), args.out)
        print(f"error: SelftestFailed: {exc}", file=sys.stderr)
        return 3
    except ConfigError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except RateError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        # e.g. a seed outside the 64-bit range
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    header.update(extra)
    _emit(format_rows(rows, args.format, header), args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
