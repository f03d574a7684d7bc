"""Convergence sweeps, moment and stability runs, CSV output and the CLI."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import fem1d
from .problems import (
    application_problem,
    manufactured_problem,
    random_initial_problem,
    reference_first_moment,
)
from .stepper import StepError, Trajectory, build_temporal_mesh, solve

__all__ = [
    "ExperimentConfig",
    "ConvergenceRow",
    "error_ENh",
    "rate",
    "run_table",
    "run_rate_curve",
    "run_moment",
    "run_stability",
    "write_csv",
    "PRESETS",
    "main",
]

log = logging.getLogger(__name__)

MODES = ("time", "space", "moment", "rate-curve", "stability")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.16e}"
    return str(v)


def _parse_gamma(token, alpha: float) -> float:
    if isinstance(token, str):
        t = token.strip().lower()
        if t in ("1/alpha", "inv", "alpha^-1"):
            return 1.0 / alpha
        return float(t)
    return float(token)


@dataclass
class ExperimentConfig:
    problem: str = "manufactured"
    mode: str = "time"
    alphas: list[float] = field(default_factory=lambda: [0.625])
    gammas: list = field(default_factory=lambda: [1.0])
    Ns: list[int] = field(default_factory=lambda: [80, 160, 320, 640])
    Ps: list[int] = field(default_factory=lambda: [5120])
    out: str | None = None
    seed: int = 0
    seeds: list[int] = field(default_factory=list)
    L: float | None = None
    T: float | None = None
    sigma: float = 0.5

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; choose from {', '.join(MODES)}")
        for name in ("alphas", "gammas", "Ns", "Ps"):
            if not getattr(self, name):
                raise ValueError(f"{name} must not be empty")
        if min(self.Ns) < 1:
            raise ValueError("every N must be at least 1")
        if min(self.Ps) < 2:
            raise ValueError("every P must be at least 2")
        for a in self.alphas:
            if not 0.0 < a < 1.0:
                raise ValueError(f"alpha must lie in (0, 1), got {a}")

    def gamma_values(self, alpha: float) -> list[float]:
        return [_parse_gamma(g, alpha) for g in self.gammas]


@dataclass
class ConvergenceRow:
    alpha: float
    gamma: float
    N: int
    P: int
    E_Nh: float | None
    rate: float | None = None
    seconds: float = 0.0
    error: str = ""

    # wall time is logged, not written, so CSV output stays byte-stable
    HEADER = ("alpha", "gamma", "N", "P", "E_Nh", "rate", "error")

    def as_tuple(self) -> tuple:
        return (self.alpha, self.gamma, self.N, self.P, self.E_Nh, self.rate, self.error)


def error_ENh(trajectory: Trajectory, exact, order: int = 10, composite: bool = False) -> float:
    """``max_n ||U^n_h - u(t_n)||`` over every time level, including ``n = 0``.

    By default the norm uses one ``order``-point Gauss rule across the whole
    domain; ``composite=True`` applies it on each element instead.
    """
    sm, t = trajectory.smesh, trajectory.times
    return max(
        fem1d.l2_norm(sm, trajectory[n], lambda x, tn=t[n]: exact(x, tn), order=order,
                      composite=composite)
        for n in range(len(trajectory))
    )


def rate(coarse: float, fine: float) -> float:
    """Observed order ``log2(coarse / fine)`` for a halving of the mesh size."""
    if not (coarse > 0 and fine > 0):
        raise ValueError(f"rates need positive errors, got {coarse}, {fine}")
    return math.log2(coarse / fine)


def _problem(config: ExperimentConfig, alpha: float):
    if config.problem == "manufactured":
        return manufactured_problem(alpha)
    if config.problem == "application":
        return application_problem(alpha, config.sigma, config.L or 9.0, config.T or 10.0)
    if config.problem == "random":
        return random_initial_problem(alpha, config.seed, config.L or 9.0, config.T or 40.0)
    raise ValueError(f"unknown problem {config.problem!r}")


def _run_cell(problem, alpha: float, gamma: float, N: int, P: int) -> ConvergenceRow:
    start = time.perf_counter()
    try:
        smesh = problem.mesh(P)
        traj = solve(problem, smesh, build_temporal_mesh(N, problem.T, gamma))
        E = error_ENh(traj, problem.exact)
        err = ""
    except (StepError, ArithmeticError, ValueError) as exc:
        E, err = None, f"{type(exc).__name__}: {exc}"
        log.warning("run alpha=%g gamma=%g N=%d P=%d failed: %s", alpha, gamma, N, P, exc)
    return ConvergenceRow(alpha, gamma, N, P, E, None, time.perf_counter() - start, err)


def _with_rates(rows: list[ConvergenceRow]) -> list[ConvergenceRow]:
    out = []
    for i, row in enumerate(rows):
        r = None
        if i > 0 and rows[i - 1].E_Nh and row.E_Nh:
            r = rate(rows[i - 1].E_Nh, row.E_Nh)
        out.append(replace(row, rate=r))
    return out


def run_table(config: ExperimentConfig) -> list[ConvergenceRow]:
    """Refinement sweep: ``time`` mode fixes P and sweeps N, ``space`` mode the reverse."""
    if config.problem != "manufactured":
        raise ValueError("convergence tables need the manufactured problem")
    rows: list[ConvergenceRow] = []
    for alpha in config.alphas:
        problem = _problem(config, alpha)
        for gamma in config.gamma_values(alpha):
            if config.mode == "space":
                outer, inner = config.Ns, sorted(config.Ps)
                cells = [[(N, P) for P in inner] for N in outer]
            else:
                outer, inner = config.Ps, sorted(config.Ns)
                cells = [[(N, P) for N in inner] for P in outer]
            for column in cells:
                col = [_run_cell(problem, alpha, gamma, N, P) for N, P in column]
                for row in _with_rates(col):
                    log.info("alpha=%g gamma=%g N=%d P=%d E=%s rate=%s (%.1fs)", row.alpha,
                             row.gamma, row.N, row.P, row.E_Nh, row.rate, row.seconds)
                    rows.append(row)
    return rows


def run_rate_curve(alpha_grid: Sequence[float], config: ExperimentConfig) -> list[tuple]:
    """``(alpha, r_t, min(2 alpha, 1))`` from the two finest N on uniform steps."""
    Ns = sorted(config.Ns)[-2:]
    if len(Ns) < 2:
        raise ValueError("a rate needs at least two values of N")
    out = []
    for alpha in alpha_grid:
        cfg = replace(config, alphas=[alpha], gammas=[1.0], Ns=Ns, Ps=[max(config.Ps)], mode="time")
        rows = run_table(cfg)
        out.append((alpha, rows[-1].rate, min(2.0 * alpha, 1.0)))
    return out


def run_moment(config: ExperimentConfig, every: int = 1) -> list[tuple]:
    """``(t_n, numerical moment, reference moment, difference, flag)`` per time level."""
    alpha = config.alphas[0]
    problem = application_problem(alpha, config.sigma, config.L or 12.0, config.T or 20.0)
    gamma = config.gamma_values(alpha)[0]
    traj = solve(problem, problem.mesh(config.Ps[0]), build_temporal_mesh(config.Ns[0], problem.T, gamma))
    rows = []
    for n in range(0, len(traj), every):
        tn = float(traj.times[n])
        num = fem1d.first_moment(traj.smesh, traj[n])
        try:
            ref, flag = reference_first_moment(alpha, tn), ""
        except ArithmeticError as exc:
            ref, flag = float("nan"), str(exc)
        rows.append((tn, num, ref, num - ref, flag))
    return rows


def run_stability(config: ExperimentConfig) -> list[tuple]:
    """``(seed, alpha, N, P, ||U^0||, max_n ||U^n||, ratio)`` for random initial data."""
    seeds = config.seeds or [config.seed]
    rows = []
    for alpha in config.alphas:
        gamma = config.gamma_values(alpha)[0]
        for seed in seeds:
            for N in config.Ns:
                for P in config.Ps:
                    problem = random_initial_problem(alpha, seed, config.L or 9.0, config.T or 40.0)
                    traj = solve(problem, problem.mesh(P), build_temporal_mesh(N, problem.T, gamma))
                    norms = [fem1d.l2_norm(traj.smesh, u) for u in traj.states]
                    rows.append((seed, alpha, N, P, norms[0], max(norms), max(norms) / norms[0]))
    return rows


def write_csv(path: str | Path | None, header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """Write rows (floats at 17 significant digits); returns the CSV text."""
    lines = []

    class _Sink:
        def write(self, s):
            lines.append(s)

    writer = csv.writer(_Sink(), lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    text = "".join(lines)
    if path is not None:
        Path(path).write_text(text)
    return text


def format_table(rows: Sequence[ConvergenceRow]) -> str:
    """Three-significant-digit display of a sweep, as in the published tables."""
    out = [f"{'alpha':>6} {'gamma':>6} {'N':>6} {'P':>6} {'E':>10} {'rate':>6}"]
    for r in rows:
        e = f"{r.E_Nh:.2e}" if r.E_Nh is not None else "failed"
        rt = f"{r.rate:.3f}" if r.rate is not None else ""
        out.append(f"{r.alpha:6.3g} {r.gamma:6.3g} {r.N:6d} {r.P:6d} {e:>10} {rt:>6}")
    return "\n".join(out)


PRESETS: dict[str, dict] = {
    "table1": dict(problem="manufactured", mode="time", alphas=[0.625],
                   gammas=[1.0, "1/alpha", 2.0], Ns=[80, 160, 320, 640], Ps=[5120]),
    "table2": dict(problem="manufactured", mode="time", alphas=[0.25, 0.5, 0.75],
                   gammas=[1.0], Ns=[80, 160, 320, 640], Ps=[5120]),
    "table3": dict(problem="manufactured", mode="space", alphas=[0.25, 0.5, 0.75],
                   gammas=["1/alpha"], Ns=[10000], Ps=[4, 8, 16, 32, 64]),
    "fig1": dict(problem="manufactured", mode="rate-curve",
                 alphas=[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
                 gammas=[1.0], Ns=[160, 320], Ps=[1024]),
    "fig2": dict(problem="application", mode="moment", alphas=[0.75], gammas=["1/alpha"],
                 Ns=[100], Ps=[162], L=9.0, T=10.0),
    "moment-desk": dict(problem="application", mode="moment", alphas=[0.75],
                        gammas=["1/alpha"], Ns=[400], Ps=[1152], L=12.0, T=20.0),
    "moment-full": dict(problem="application", mode="moment", alphas=[0.75],
                         gammas=["1/alpha"], Ns=[1400], Ps=[56000], L=20.0, T=70.0),
    "stability": dict(problem="random", mode="stability", alphas=[0.75], gammas=["1/alpha"],
                      Ns=[400], Ps=[324], L=9.0, T=40.0, seeds=[1, 2, 3]),
}

_LIST_KEYS = {"alpha": "alphas", "gamma": "gammas", "num_steps": "Ns", "num_elements": "Ps",
              "seeds": "seeds"}
_SCALAR_KEYS = {"problem": str, "mode": str, "out": str, "seed": int, "L": float, "T": float,
                "sigma": float}


def _split(value: str) -> list[str]:
    return [v for v in value.replace(",", " ").split() if v]


def _coerce(key: str, value):
    if key in ("Ns", "Ps", "seeds"):
        return [int(v) for v in value]
    if key == "alphas":
        return [float(v) for v in value]
    if key == "gammas":
        return [v if not _is_number(v) else float(v) for v in value]
    return value


def _is_number(v) -> bool:
    try:
        float(v)
    except (TypeError, ValueError):
        return False
    return True


def read_config(path: str | Path) -> dict:
    """Flat ``key = value`` file; lists are comma or space separated, ``#`` starts a comment."""
    out: dict = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key == "grading":
            key = "gamma"
        if key in _LIST_KEYS:
            name = _LIST_KEYS[key]
            out[name] = _coerce(name, _split(value))
        elif key in _SCALAR_KEYS:
            out[key] = _SCALAR_KEYS[key](value)
        else:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="fracfp",
        description="Time-fractional Fokker-Planck experiments (finite elements in space, "
                    "implicit fractional time stepping).",
    )
    p.add_argument("--preset", choices=sorted(PRESETS), help="start from a named experiment")
    p.add_argument("--config", help="flat key = value file; flags override it")
    p.add_argument("--problem", choices=["manufactured", "application", "random"])
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--alpha", nargs="+", type=float)
    p.add_argument("--gamma", "--grading", dest="gamma", nargs="+",
                   help="grading exponents; '1/alpha' is accepted")
    p.add_argument("--num-steps", nargs="+", type=int, help="values of N")
    p.add_argument("--num-elements", nargs="+", type=int, help="values of P")
    p.add_argument("--seed", type=int)
    p.add_argument("--seeds", nargs="+", type=int)
    p.add_argument("--L", type=float, help="half-width (application) of the domain")
    p.add_argument("--T", type=float, help="final time")
    p.add_argument("--sigma", type=float)
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    values: dict = {}
    if args.preset:
        values.update(PRESETS[args.preset])
    if args.config:
        values.update(read_config(args.config))
    flags = {
        "problem": args.problem, "mode": args.mode, "alphas": args.alpha,
        "gammas": _coerce("gammas", args.gamma) if args.gamma else None,
        "Ns": args.num_steps, "Ps": args.num_elements, "seed": args.seed, "seeds": args.seeds,
        "L": args.L, "T": args.T, "sigma": args.sigma, "out": args.out,
    }
    values.update({k: v for k, v in flags.items() if v is not None})
    return ExperimentConfig(**values)


def run(config: ExperimentConfig) -> str:
    """Run the experiment ``config`` describes and return its CSV text."""
    if config.mode in ("time", "space"):
        rows = run_table(config)
        log.info("\n%s", format_table(rows))
        return write_csv(config.out, ConvergenceRow.HEADER, [r.as_tuple() for r in rows])
    if config.mode == "rate-curve":
        rows = run_rate_curve(config.alphas, config)
        return write_csv(config.out, ("alpha", "r_t", "min_2alpha_1"), rows)
    if config.mode == "moment":
        rows = run_moment(config)
        return write_csv(config.out, ("t", "moment_num", "moment_ref", "error", "flag"), rows)
    rows = run_stability(config)
    return write_csv(config.out, ("seed", "alpha", "N", "P", "norm0", "max_norm", "ratio"), rows)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = config_from_args(args)
        text = run(config)
    except Exception as exc:  # noqa: BLE001 - reported as a machine-readable line
        print(json.dumps({"status": "error", "type": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1
    if config.out is None:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
