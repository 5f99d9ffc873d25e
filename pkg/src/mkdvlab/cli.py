"""Command-line front end.

Every subcommand prints a JSON summary on stdout. Tabular results are also
written as CSV when ``--output`` names a directory. Exit status is 0 on
success, 1 on invalid input and 2 when a numerical health check fails.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .errors import MkdvLabError, NumericalHealthError, ValidationError
from .evolve import (
    SCHEMES,
    EvolverConfig,
    conservation_audit,
    evolve,
    residual_along_flow,
    stability_experiment,
)
from .grid import Grid, sobolev_norm
from .hessian import build_report, criterion_check, expected_diagonal
from .hierarchy import N_MAX, value_H
from .linops import (
    build_L_Nj,
    factorization_residual,
    gateaux_hessian,
    iso_inertia_scan,
    normalize,
)
from .solitons import n_soliton, phase_vector, profile_Q, speed_set

COMMANDS = (
    "soliton",
    "conserved",
    "residual",
    "spectrum",
    "factorization",
    "inertia-scan",
    "hessian",
    "criterion",
    "evolve",
    "stability",
)
SHAPES = ("sech", "gauss", "mode")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ValidationError(f"cli: {message}")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in str(text).replace(" ", "").split(",") if v != ""]
    except ValueError:
        raise ValidationError(f"cli: expected comma-separated numbers, got {text!r}") from None


def _orders(text: str) -> list[int]:
    text = str(text).strip()
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return list(range(int(lo), int(hi) + 1))
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise ValidationError(f"cli: expected orders like 1..5 or 1,2,3, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mkdvlab", description="mKdV multi-soliton stability laboratory")
    p.add_argument("--version", action="version", version=f"mkdv-soliton-lab {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="key = value file; flags override its entries")
    p.add_argument("--speeds", default="1", help="comma-separated increasing speeds")
    p.add_argument("--phases", default=None, help="comma-separated phases (default zeros)")
    p.add_argument("--grid-length", type=float, default=80.0)
    p.add_argument("--grid-count", type=int, default=2048)
    p.add_argument("--time", type=float, default=0.0)
    p.add_argument("--times", default=None, help="comma-separated list of times")
    p.add_argument("--orders", default="1..5")
    p.add_argument("--index", type=int, default=1, help="soliton index j for L_{N,j}")
    p.add_argument("--operator", choices=("L", "hessian"), default="L")
    p.add_argument("--count", type=int, default=10, help="eigenvalues to report")
    p.add_argument("--zero-tol", type=float, default=1e-6)
    p.add_argument("--sobolev-index", type=int, default=2)
    p.add_argument("--dt", type=float, default=1e-4)
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--scheme", choices=SCHEMES, default="etdrk4")
    p.add_argument("--dealias", type=float, default=2 / 3)
    p.add_argument("--save-interval", type=float, default=0.1)
    p.add_argument("--amplitude", type=float, default=1e-3, help="H^k size of the perturbation")
    p.add_argument("--shape", choices=SHAPES, default="sech")
    p.add_argument("--output", default=None, help="directory for CSV/JSON files")
    p.add_argument("--seed", type=int, default=0)
    return p


def _read_config(path: str) -> dict:
    parser = configparser.ConfigParser()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cli: cannot read config {path}: {exc}") from None
    parser.read_string("[config]\n" + text)
    return {k.replace("-", "_"): v for k, v in parser["config"].items()}


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        known = {a.dest for a in parser._actions}
        entries = _read_config(args.config)
        unknown = sorted(set(entries) - known)
        if unknown:
            raise ValidationError(f"cli: unknown config keys {unknown}")
        parser.set_defaults(**entries)
        args = parser.parse_args(argv)
        # set_defaults bypasses type conversion; re-run it for values from the file
        for action in parser._actions:
            value = getattr(args, action.dest, None)
            if action.dest in entries and isinstance(value, str) and action.type is not None:
                setattr(args, action.dest, action.type(value))
    return args


def _workers() -> int:
    raw = os.environ.get("MKDVLAB_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise ValidationError(f"cli: MKDVLAB_THREADS must be a positive integer, got {raw!r}")
    return n


def _pmap(fn, items):
    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        return list(pool.map(fn, items))


class _Run:
    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.grid = Grid(args.grid_length, args.grid_count)
        self.speeds = speed_set(_floats(args.speeds))
        self.c = self.speeds.array
        raw = _floats(args.phases) if args.phases is not None else [0.0] * self.c.size
        self.phases = phase_vector(raw, self.c.size)
        self.times = _floats(args.times) if args.times is not None else [args.time]

    def meta(self, **extra) -> str:
        a = self.args
        items = {
            "grid_length": a.grid_length,
            "grid_count": a.grid_count,
            "speeds": ";".join(f"{v:g}" for v in self.c),
            "phases": ";".join(f"{v:g}" for v in self.phases),
            "zero_tol": a.zero_tol,
        }
        items.update(extra)
        return " ".join(f"{k}={v}" for k, v in items.items())

    def write_csv(self, name: str, columns: list[str], rows, **extra) -> None:
        if self.args.output is None:
            return
        out = Path(self.args.output)
        out.mkdir(parents=True, exist_ok=True)
        lines = [f"# mkdv-soliton-lab v{__version__}", f"# {self.meta(**extra)}", ",".join(columns)]
        for row in rows:
            lines.append(",".join(_fmt(v) for v in row))
        (out / f"{name}.csv").write_text("\n".join(lines) + "\n")

    def write_json(self, name: str, summary: dict) -> None:
        if self.args.output is None:
            return
        out = Path(self.args.output)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{name}.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.16e}"


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if np.isfinite(v) else None
    return v


def cmd_soliton(run: _Run) -> dict:
    t = run.args.time
    u = n_soliton(run.c, run.phases, t, run.grid)
    run.write_csv("soliton", ["x", "u"], zip(run.grid.x, u), time=t)
    return {"time": t, "max_abs_u": float(np.max(np.abs(u))), "mass": float(value_H(run.grid, 0, u))}


def _closed_form(c, n: int) -> float:
    j = n - 1
    return float(np.sum((-1.0) ** j * 2 / (2 * j + 1) * np.asarray(c) ** ((2 * j + 1) / 2)))


def cmd_conserved(run: _Run) -> dict:
    orders = _orders(run.args.orders)
    for n in orders:
        if not 1 <= n <= N_MAX:
            raise ValidationError(f"hierarchy.value_H: order must be in 1..{N_MAX}, got {n}")
    if run.c.size == 1:
        u = profile_Q(run.c[0], run.grid)
    else:
        u = n_soliton(run.c, run.phases, run.args.time, run.grid)
    rows = []
    for n in orders:
        val = float(value_H(run.grid, n, u))
        ref = _closed_form(run.c, n)
        rows.append((n, val, ref, abs(val - ref) / abs(ref)))
    run.write_csv("conserved", ["n", "value", "closed_form", "relative_error"], rows)
    return {"orders": orders, "values": [r[1] for r in rows], "closed_form": [r[2] for r in rows],
            "max_relative_error": max(r[3] for r in rows)}


def cmd_residual(run: _Run) -> dict:
    res = residual_along_flow(run.c, run.phases, run.times, run.grid)
    run.write_csv("residual", ["t", "residual"], zip(run.times, res))
    return {"times": run.times, "residuals": res, "max_residual": float(res.max())}


def cmd_spectrum(run: _Run) -> dict:
    a = run.args
    if a.operator == "L":
        op = build_L_Nj(run.c, a.index, run.grid)
    else:
        op = gateaux_hessian(run.c, n_soliton(run.c, run.phases, a.time, run.grid), run.grid)
    raw = op.eigenvalues()[: a.count]
    scaled = normalize(op, run.c).eigenvalues()[: a.count]
    run.write_csv("spectrum", ["i", "eigenvalue", "normalized_eigenvalue"],
                  zip(range(raw.size), raw, scaled), operator=a.operator, index=a.index)
    return {"operator": a.operator, "index": a.index, "eigenvalues": raw,
            "normalized_eigenvalues": scaled, "asymmetry": op.asymmetry}


def cmd_factorization(run: _Run) -> dict:
    js = list(range(1, run.c.size + 1))
    res = _pmap(lambda j: factorization_residual(run.c, j, run.grid, seed=run.args.seed), js)
    run.write_csv("factorization", ["j", "residual"], zip(js, res), seed=run.args.seed)
    return {"residuals": dict(zip(map(str, js), res)), "max_residual": max(res)}


def cmd_inertia_scan(run: _Run) -> dict:
    scan = iso_inertia_scan(run.c, run.phases, run.times, run.grid, zero_tol=run.args.zero_tol)
    rows = [(t, i.negatives, i.zeros, i.gap) for t, i in zip(scan.times, scan.inertias)]
    run.write_csv("inertia_scan", ["t", "negatives", "zeros", "gap"], rows)
    return {
        "times": scan.times,
        "inertia": [i.pair() for i in scan.inertias],
        "components": [i.pair() for i in scan.components],
        "sum": scan.total.pair(),
        "constant": scan.constant,
        "sum_rule": scan.sum_rule,
    }


def cmd_hessian(run: _Run) -> dict:
    rep = build_report(run.c)
    run.write_csv("hessian", ["j", "diagonal_entry", "expected"],
                  zip(range(1, run.c.size + 1), rep.diagonal_form, expected_diagonal(run.c)))
    return {"D": rep.D, "diagonal_form": rep.diagonal_form, "p": rep.p,
            "expected_p": (run.c.size + 1) // 2, "diagonality": rep.diagonality,
            "condition": rep.condition}


def cmd_criterion(run: _Run) -> dict:
    res = criterion_check(run.c, run.phases, run.args.time, run.grid, zero_tol=run.args.zero_tol)
    return {"n": res.n, "p": res.p, "equal": res.equal, "zeros": res.inertia.zeros,
            "gap": res.inertia.gap}


def _config(run: _Run) -> EvolverConfig:
    a = run.args
    return EvolverConfig(dt=a.dt, horizon=a.horizon, dealias_fraction=a.dealias, scheme=a.scheme,
                         save_interval=a.save_interval)


def cmd_evolve(run: _Run) -> dict:
    cfg = _config(run)
    t0 = run.args.time
    u0 = n_soliton(run.c, run.phases, t0, run.grid)
    traj = evolve(u0, cfg, run.grid)
    errs, hs = [], []
    for t, u in zip(traj.times, traj.states):
        exact = n_soliton(run.c, run.phases, t0 + t, run.grid, check=False)
        errs.append(float(sobolev_norm(run.grid, u - exact, 0)))
        hs.append([float(value_H(run.grid, n, u)) for n in range(1, 5)])
    rows = [(t0 + t, e, *h) for t, e, h in zip(traj.times, errs, hs)]
    run.write_csv("evolve", ["t", "l2_error", "H1", "H2", "H3", "H4"], rows,
                  dt=cfg.dt, scheme=cfg.scheme, dealias=cfg.dealias_fraction)
    return {"final_time": t0 + float(traj.times[-1]), "final_l2_error": errs[-1],
            "max_l2_error": max(errs), "drift": conservation_audit(traj, 4)}


def _perturbation(run: _Run) -> np.ndarray:
    a = run.args
    x = run.grid.x
    if a.shape == "sech":
        f = np.cos(x) / np.cosh(x)
    elif a.shape == "gauss":
        f = np.exp(-0.5 * x**2)
    else:
        rng = np.random.default_rng(a.seed)
        k = rng.uniform(0.5, 2.0)
        f = np.cos(k * x) * np.exp(-((x / 4) ** 2))
    return a.amplitude * f / sobolev_norm(run.grid, f, a.sobolev_index)


def cmd_stability(run: _Run) -> dict:
    cfg = _config(run)
    rep = stability_experiment(run.c, run.phases, _perturbation(run), cfg, run.grid,
                               run.args.sobolev_index)
    run.write_csv("stability", ["t", "distance"], zip(rep.times, rep.distances),
                  dt=cfg.dt, k=run.args.sobolev_index, amplitude=run.args.amplitude)
    summary = {"delta0": rep.delta0, "max_distance": rep.max_distance, "ratio": rep.ratio,
               "certified": rep.certified}
    if not rep.certified:
        summary["error"] = "evolve.distance_to_family: optimizer did not converge"
    return summary


HANDLERS = {
    "soliton": cmd_soliton,
    "conserved": cmd_conserved,
    "residual": cmd_residual,
    "spectrum": cmd_spectrum,
    "factorization": cmd_factorization,
    "inertia-scan": cmd_inertia_scan,
    "hessian": cmd_hessian,
    "criterion": cmd_criterion,
    "evolve": cmd_evolve,
    "stability": cmd_stability,
}


def run(argv=None) -> int:
    """Parse ``argv``, dispatch, emit results and return the exit status."""
    try:
        args = parse_args(argv)
        job = _Run(args)
        summary = _jsonable(HANDLERS[args.command](job))
        summary = {"command": args.command, "version": __version__, **summary}
        job.write_json(args.command.replace("-", "_"), summary)
        print(json.dumps(summary, sort_keys=True))
        if summary.get("certified") is False:
            print(f"error: {summary['error']}", file=sys.stderr)
            return 2
        return 0
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalHealthError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MkdvLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
