"""Command-line entry point.

Units: seconds for alpha (per symbol), beta, s, r and AoI; state variance
for d, q_w and every MSE column.

Flags can also come from a file passed as ``@path``: one flag per line, as
``--flag value``, ``flag value`` or ``flag = value``; ``#`` starts a comment.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import time
from typing import Callable, Sequence

import numpy as np

from . import coding, linalg, metrics, montecarlo, pareto, process, timing
from .coding import ChannelSpec, SourceVariance
from .errors import AoiMseError, InfeasibleError, ValidationError
from .metrics import SystemConfig, TradeoffPoint
from .process import ProcessModel
from .timing import LinkTiming

EXIT_OK, EXIT_VALIDATION, EXIT_INFEASIBLE, EXIT_CHECK_FAILED = 0, 1, 2, 3

SWEEP_HEADER = ["d", "epsilon", "n", "r", "aoi", "mse", "mse_delay", "mse_channel", "feasible"]
SIM_HEADER = ["d", "epsilon", "r", "aoi", "aoi_se", "mse", "mse_se", "mse_delay",
              "mse_delay_se", "mse_channel", "mse_channel_se", "cycles"]


class _Parser(argparse.ArgumentParser):
    """Exits with status 1 on bad flags and reads ``@file`` one flag per line."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")

    def convert_arg_line_to_args(self, line):
        line = line.split("#", 1)[0].strip()
        if not line:
            return []
        if "=" in line and not line.startswith("-"):
            key, value = (part.strip() for part in line.split("=", 1))
        else:
            key, _, value = line.partition(" ")
            value = value.strip()
        if not key.startswith("-"):
            key = "--" + key
        return [key] + ([value] if value else [])


def _number(check: Callable[[float], bool], constraint: str):
    def parse(text: str) -> float:
        try:
            v = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
        if not (math.isfinite(v) and check(v)):
            raise argparse.ArgumentTypeError(f"must be {constraint}, got {text}")
        return v
    return parse


positive = _number(lambda v: v > 0.0, "> 0")
nonneg = _number(lambda v: v >= 0.0, ">= 0")
negative = _number(lambda v: v < 0.0, "< 0 (stable process)")
open_unit = _number(lambda v: 0.0 < v < 1.0, "in (0, 1)")
half_open_unit = _number(lambda v: 0.0 <= v < 1.0, "in [0, 1)")


def _count(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return v


def _matrix(text: str) -> list[float]:
    try:
        return [float(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a list of numbers, got {text!r}")


def _qw(text: str):
    if text.strip().lower() in ("d", "worst", "worst-case"):
        return None
    return nonneg(text)


def _add_system_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("system (defaults: a=-0.02, q_u=1, P=10, s=0, q_w=d, alpha=1, beta=0)")
    g.add_argument("--a", type=negative, default=-0.02, help="scalar system coefficient (1/s)")
    g.add_argument("--qu", type=positive, default=1.0, help="scalar input-noise intensity")
    g.add_argument("--k", type=_count, default=1, help="state dimension for --A/--Qu")
    g.add_argument("--A", type=_matrix, default=None, help="row-major k*k system matrix")
    g.add_argument("--Qu", type=_matrix, default=None, help="row-major k*k input-noise matrix")
    g.add_argument("--snr", type=positive, default=10.0, help="linear channel SNR P")
    g.add_argument("--alpha", type=positive, default=1.0, help="seconds per channel symbol")
    g.add_argument("--beta", type=nonneg, default=0.0, help="fixed extra delay per attempt (s)")
    g.add_argument("--s", type=nonneg, default=0.0, help="waiting time after each ACK (s)")
    g.add_argument("--qw", type=_qw, default=None,
                   help="distortion variance q_w, or 'd' for the worst case q_w = d")
    g.add_argument("--source-var", choices=[m.value for m in SourceVariance],
                   default=SourceVariance.STEADY_STATE.value,
                   help="covariance whose eigenvalues enter R(d)")
    g.add_argument("--integer-blocklength", action="store_true",
                   help="round n up to an integer before computing r")


def _add_sim_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("simulation")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--paths", type=_count, default=200)
    g.add_argument("--cycles", type=_count, default=500, help="success cycles per path")
    g.add_argument("--threads", type=_count, default=1)


def _add_grid_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("grid (defaults: 60 log-spaced d over [1e-3 q_x, 0.99 q_x], "
                             "60 linear eps over [1e-4, 0.5])")
    g.add_argument("--d-min", type=positive, default=None)
    g.add_argument("--d-max", type=positive, default=None)
    g.add_argument("--d-points", type=_count, default=60)
    g.add_argument("--d-spacing", choices=pareto.SPACINGS, default="log")
    g.add_argument("--eps-min", type=open_unit, default=1e-4)
    g.add_argument("--eps-max", type=open_unit, default=0.5)
    g.add_argument("--eps-points", type=_count, default=60)
    g.add_argument("--eps-spacing", choices=pareto.SPACINGS, default="linear")
    g.add_argument("--workers", type=_count, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="aoimse", fromfile_prefix_chars="@", description=(
        "MSE / Age-of-Information trade-off for remote monitoring of a Gauss-Markov "
        "process over a short-blocklength AWGN link."))
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("point", help="evaluate one (d, eps) pair", fromfile_prefix_chars="@")
    _add_system_args(p)
    p.add_argument("--d", type=positive, required=True, help="tolerated distortion")
    p.add_argument("--eps", type=open_unit, required=True, help="excess-distortion probability")

    p = sub.add_parser("sweep", help="sweep the (d, eps) grid", fromfile_prefix_chars="@")
    _add_system_args(p)
    _add_grid_args(p)
    p.add_argument("-o", "--output", required=True, help="CSV path; front goes to *.front.csv")

    p = sub.add_parser("front", help="Pareto front of an existing sweep CSV",
                       fromfile_prefix_chars="@")
    p.add_argument("input", help="sweep CSV")
    p.add_argument("-o", "--output", default=None, help="defaults to standard output")

    p = sub.add_parser("simulate", help="Monte Carlo estimate at one (d, eps) pair",
                       fromfile_prefix_chars="@")
    _add_system_args(p)
    _add_sim_args(p)
    p.add_argument("--d", type=positive, required=True)
    p.add_argument("--eps", type=half_open_unit, required=True)
    p.add_argument("--r", type=positive, default=None,
                   help="attempt delay; bypasses the coding pipeline (required for --eps 0)")

    p = sub.add_parser("validate", help="cross-check closed forms against oracles",
                       fromfile_prefix_chars="@")
    _add_system_args(p)
    _add_sim_args(p)
    p.add_argument("--d", type=positive, default=1.0)
    p.add_argument("--eps", type=half_open_unit, default=0.1)
    p.add_argument("--r", type=positive, default=None,
                   help="attempt delay; bypasses the coding pipeline (required for --eps 0)")
    p.add_argument("--inject-fault", action="store_true",
                   help="perturb the closed-form MSE to confirm the harness detects it")
    return parser


def system_from_args(args) -> SystemConfig:
    if args.A is not None or args.Qu is not None:
        if args.A is None or args.Qu is None:
            raise ValidationError("--A and --Qu must be given together")
        k = args.k
        for flag, vals in (("--A", args.A), ("--Qu", args.Qu)):
            if len(vals) != k * k:
                raise ValidationError(f"{flag} needs k*k = {k * k} entries, got {len(vals)}")
        model = ProcessModel(np.reshape(args.A, (k, k)), np.reshape(args.Qu, (k, k)))
    else:
        if args.k != 1:
            raise ValidationError("--k > 1 needs --A and --Qu")
        model = ProcessModel.scalar(args.a, args.qu)
    return SystemConfig(
        model=model,
        channel=ChannelSpec(args.snr),
        timing=LinkTiming(args.alpha, args.beta, args.s),
        q_w=args.qw,
        source_var_mode=SourceVariance(args.source_var),
        integer_blocklength=args.integer_blocklength,
    )


def fmt(v: float) -> str:
    return f"{v:.12g}"


def point_row(p: TradeoffPoint) -> list[str]:
    if not p.feasible:
        return [fmt(p.d), fmt(p.eps), "", "", "", "", "", "", "0"]
    return [fmt(v) for v in (p.d, p.eps, p.n, p.r, p.aoi, p.mse, p.mse_delay_avg,
                             p.mse_channel_avg)] + ["1"]


def write_points(stream, points: Sequence[TradeoffPoint]) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for p in points:
        w.writerow(point_row(p))


def read_points(stream) -> list[TradeoffPoint]:
    reader = csv.DictReader(stream)
    if reader.fieldnames != SWEEP_HEADER:
        raise ValidationError(f"unexpected CSV header {reader.fieldnames}")
    out = []
    for row in reader:
        if row["feasible"] == "1":
            out.append(TradeoffPoint(
                d=float(row["d"]), eps=float(row["epsilon"]), n=float(row["n"]),
                r=float(row["r"]), aoi=float(row["aoi"]), mse=float(row["mse"]),
                mse_delay_avg=float(row["mse_delay"]),
                mse_channel_avg=float(row["mse_channel"])))
        else:
            out.append(TradeoffPoint(d=float(row["d"]), eps=float(row["epsilon"]),
                                     feasible=False))
    return out


def front_path(output: str) -> str:
    return output[:-4] + ".front.csv" if output.endswith(".csv") else output + ".front.csv"


def cmd_point(args) -> int:
    cfg = system_from_args(args)
    p = metrics.evaluate_point(cfg, args.d, args.eps)
    write_points(sys.stdout, [p])
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = system_from_args(args)
    top = float(np.linalg.eigvalsh(np.asarray(cfg.model.Q_x)).max())
    d_lo = args.d_min if args.d_min is not None else 1e-3 * top
    d_hi = args.d_max if args.d_max is not None else 0.99 * top
    grid = pareto.SweepGrid.from_ranges(d_lo, d_hi, args.d_points, args.eps_min,
                                        args.eps_max, args.eps_points,
                                        args.d_spacing, args.eps_spacing)
    points = pareto.sweep(grid, cfg, workers=args.workers)
    buf = io.StringIO()
    write_points(buf, points)
    front = io.StringIO()
    if any(p.feasible for p in points):
        write_points(front, pareto.pareto_front(points))
    else:
        write_points(front, [])
    with open(args.output, "w", newline="") as fh:
        fh.write(buf.getvalue())
    with open(front_path(args.output), "w", newline="") as fh:
        fh.write(front.getvalue())
    return EXIT_OK


def cmd_front(args) -> int:
    with open(args.input, newline="") as fh:
        points = read_points(fh)
    front = pareto.pareto_front(points)
    if args.output is None:
        write_points(sys.stdout, front)
    else:
        with open(args.output, "w", newline="") as fh:
            write_points(fh, front)
    return EXIT_OK


def _attempt_delay(cfg: SystemConfig, args) -> float:
    if args.r is not None:
        return args.r
    if args.eps == 0.0:
        raise ValidationError("--eps 0 cannot be coded (Qinv(0) is infinite); pass --r")
    return metrics.evaluate_point(cfg, args.d, args.eps).r


def _sim_config(cfg: SystemConfig, args, r: float) -> montecarlo.SimConfig:
    return montecarlo.SimConfig(
        model=cfg.model, q_w=cfg.distortion_variance(args.d), r=r, s=cfg.timing.s,
        eps=args.eps, horizon_cycles=args.cycles, paths=args.paths, seed=args.seed,
        threads=args.threads)


def cmd_simulate(args) -> int:
    cfg = system_from_args(args)
    r = _attempt_delay(cfg, args)
    res = montecarlo.simulate(_sim_config(cfg, args, r))

    def se(v):
        return "" if v is None else fmt(v)

    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(SIM_HEADER)
    w.writerow([fmt(args.d), fmt(args.eps), fmt(r), fmt(res.aoi_mean), se(res.aoi_se),
                fmt(res.mse_mean), se(res.mse_se), fmt(res.mse_delay_mean),
                se(res.mse_delay_se), fmt(res.mse_channel_mean), se(res.mse_channel_se),
                str(res.cycles_observed)])
    return EXIT_OK


def run_checks(cfg: SystemConfig, d: float, eps: float, r: float | None, sim_args,
               inject_fault: bool = False) -> list[tuple[str, float, float, float, bool]]:
    """Closed form vs numeric vs Monte Carlo checks at one operating point.

    Returns ``(name, analytic, oracle, tolerance, passed)`` rows.
    """
    rows = []
    m = cfg.model
    q_w = cfg.distortion_variance(d)
    s = cfg.timing.s

    if r is None:
        cp = coding.make_coding_point(m, cfg.channel, d, eps, cfg.source_var_mode, q_w)
        tol = 1e-9 * max(1.0, cp.n * cp.C)
        rows.append(("blocklength_residual", 0.0, cp.residual, tol, cp.residual <= tol))
        r = metrics.evaluate_point(cfg, d, eps).r

    m1, m2 = timing.success_delay_moments(r, eps)
    s1, s2 = _geometric_series_moments(r, eps)
    rows.append(("success_delay_mean", m1, s1, 1e-10 * max(1.0, s1), abs(m1 - s1) <= 1e-10 * max(1.0, s1)))
    rows.append(("success_delay_second_moment", m2, s2, 1e-10 * max(1.0, s2),
                 abs(m2 - s2) <= 1e-10 * max(1.0, s2)))

    cm = metrics.cycle_metrics(m, q_w, r, s, eps, cfg.tol)
    analytic_mse = cm.mse * (1.0 + 1e-3) if inject_fault else cm.mse
    numeric = metrics.avg_mse_general(m, q_w, r, s, eps)
    tol = 1e-8 * (1.0 + abs(numeric.mse))
    rows.append(("mse_closed_form_vs_numeric", analytic_mse, numeric.mse, tol,
                 abs(analytic_mse - numeric.mse) <= tol))

    h = r / 3.0
    phi, sigma = process.transition(m, h)
    quad = np.array([[linalg.quadrature(
        lambda mu, i=i, j=j: (linalg.mat_exp(m.A, h - mu) @ m.Q_u
                              @ linalg.mat_exp(m.A, h - mu).T)[i, j], 0.0, h, tol=1e-12)
        for j in range(m.k)] for i in range(m.k)])
    err = float(np.abs(sigma - quad).max())
    rows.append(("transition_covariance_vs_quadrature", float(np.trace(sigma)),
                 float(np.trace(quad)), 1e-9, err <= 1e-9))

    res = montecarlo.simulate(montecarlo.SimConfig(
        model=m, q_w=q_w, r=r, s=s, eps=eps, horizon_cycles=sim_args.cycles,
        paths=sim_args.paths, seed=sim_args.seed, threads=sim_args.threads))
    for name, analytic, est, se in (
        ("aoi_vs_simulation", cm.aoi, res.aoi_mean, res.aoi_se),
        ("mse_vs_simulation", analytic_mse, res.mse_mean, res.mse_se),
    ):
        band = 3.0 * (se or 0.0) + 1e-9 * max(1.0, abs(analytic))
        rows.append((name, analytic, est, band, abs(analytic - est) <= band))
    return rows


def _geometric_series_moments(r: float, eps: float) -> tuple[float, float]:
    m1 = m2 = 0.0
    j = 0
    w = 1.0 - eps
    while True:
        m1 += w * (j + 1) * r
        m2 += w * ((j + 1) * r) ** 2
        w *= eps
        j += 1
        if w * (j + 1) ** 2 * r * r / max(1e-300, 1.0 - eps) ** 3 < 1e-16 * max(1.0, m2) or w == 0.0:
            return m1, m2


def cmd_validate(args) -> int:
    cfg = system_from_args(args)
    if args.eps == 0.0 and args.r is None:
        raise ValidationError("--eps 0 cannot be coded (Qinv(0) is infinite); pass --r")
    t0 = time.perf_counter()
    rows = run_checks(cfg, args.d, args.eps, args.r, args, inject_fault=args.inject_fault)
    width = max(len(r[0]) for r in rows)
    print(f"{'check':<{width}}  {'analytic':>18}  {'oracle':>18}  {'tolerance':>10}  result")
    for name, analytic, oracle, tol, ok in rows:
        print(f"{name:<{width}}  {analytic:>18.12g}  {oracle:>18.12g}  {tol:>10.3g}  "
              f"{'PASS' if ok else 'FAIL'}")
    failed = sum(not r[4] for r in rows)
    print(f"{len(rows) - failed}/{len(rows)} checks passed in {time.perf_counter() - t0:.1f}s")
    return EXIT_OK if failed == 0 else EXIT_CHECK_FAILED


COMMANDS = {"point": cmd_point, "sweep": cmd_sweep, "front": cmd_front,
            "simulate": cmd_simulate, "validate": cmd_validate}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except InfeasibleError as exc:
        print(f"aoimse {args.command}: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ValidationError, OSError) as exc:
        print(f"aoimse {args.command}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except AoiMseError as exc:
        print(f"aoimse {args.command}: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
