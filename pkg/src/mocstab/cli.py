"""Command-line experiment runner.

Subcommands write plot-ready CSV and JSON; nothing is rendered.  Every
subcommand accepts ``--config FILE`` with ``key = value`` lines (keys are the
long option names, dashes or underscores) whose values act as defaults that
explicit flags override.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import vonneumann
from .models import Family, GNSoliton, KinkSolution, ConstantSolution, gross_neveu, linearize, model_by_name, solution_by_name
from .schemes import PeriodicGrid, SimulationReport, run_simulation
from .vonneumann import SchemeKind

MODEL_IDS = ("spun", "random", "isotropic", "main", "free", "gross-neveu")
SOLUTION_IDS = ("1+", "1-", "2+", "2-", "3+", "3-", "kink", "soliton")
SCHEME_IDS = tuple(s.value for s in SchemeKind)


class ConfigError(ValueError):
    pass


def read_config(path: str | Path) -> dict[str, str]:
    """Parse a ``key = value`` file; blank lines and ``#`` comments are skipped."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _positive(kind):
    def conv(text: str):
        value = kind(text)
        if not value > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return value

    conv.__name__ = f"positive {kind.__name__}"
    return conv


pos_float = _positive(float)
pos_int = _positive(int)


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value file supplying defaults for the other options")
    p.add_argument("--out", help="output path (stdout when omitted)")
    p.add_argument("--seed", type=_seed, default=0, help="noise generator seed (default 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mocstab",
        description="Stability of method-of-characteristics schemes for counter-propagating wave systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    parser.commands = sub.choices

    p = sub.add_parser("sweep", help="largest amplification factor versus z = k h")
    _common(p)
    p.add_argument("--scheme", choices=SCHEME_IDS, required=True)
    p.add_argument("--h", type=pos_float, required=True)
    p.add_argument("--model", choices=MODEL_IDS, default="main")
    p.add_argument("--solution", choices=SOLUTION_IDS, default="2-")
    p.add_argument("--alpha", type=float, help="spun-fiber parameter (default 2/3)")
    p.add_argument("--n-z", type=pos_int, default=2001)
    p.add_argument("--reduced", action="store_true", help="use the 4x4 transverse subsystem")

    p = sub.add_parser("simulate", help="evolve a perturbed exact solution and record the error")
    _common(p)
    p.add_argument("--scheme", choices=SCHEME_IDS, required=True)
    p.add_argument("--model", choices=MODEL_IDS, default="main")
    p.add_argument("--solution", choices=SOLUTION_IDS, default="2-")
    p.add_argument("--alpha", type=float)
    step = p.add_mutually_exclusive_group()
    step.add_argument("--h", type=pos_float, help="grid step (length is rounded to a whole number of steps)")
    step.add_argument("--nodes", type=pos_int, help="number of grid nodes")
    p.add_argument("--length", type=pos_float, default=100.0)
    p.add_argument("--origin", type=float, help="left end of the domain (default 0, or -length/2 for localized solutions)")
    p.add_argument("--t-end", type=pos_float, required=True)
    p.add_argument("--noise", type=float, default=1e-12, help="uniform noise amplitude")
    p.add_argument("--sample-every", type=pos_int, default=1, help="record diagnostics every this many steps")
    p.add_argument("--spectrum-at", type=float, action="append", default=[], help="also keep the spectrum at this time")
    p.add_argument("--omega", type=float, default=0.7, help="soliton frequency")
    p.add_argument("--t1", type=float, help="start of the growth-rate window")
    p.add_argument("--t2", type=float, help="end of the growth-rate window")
    p.add_argument("--column", default="total_error", choices=("total_error", "band_error", "max_error"))

    p = sub.add_parser("classify", help="physical stability of the 18 constant-solution systems")
    _common(p)
    p.add_argument("--alpha", type=float)
    p.add_argument("--k-max", type=pos_float, default=10.0)
    p.add_argument("--n-k", type=pos_int, default=2001)
    p.add_argument("--tol", type=pos_float, default=1e-8)

    p = sub.add_parser("soliton", help="ME and LF runs on the Gross-Neveu soliton for several grid sizes")
    _common(p)
    p.add_argument("--m", type=pos_int, nargs="+", default=[2**11, 2**12], help="grid sizes (up to 2**14)")
    p.add_argument("--length", type=pos_float, default=64.0)
    p.add_argument("--omega", type=float, default=0.7)
    p.add_argument("--noise", type=float, default=1e-12)
    p.add_argument("--schemes", nargs="+", choices=("me", "lf"), default=["me", "lf"])
    p.add_argument("--me-t-end", type=pos_float, default=1000.0)
    p.add_argument("--me-t1", type=float, help="ME growth window start (default 0.3 * t_end)")
    p.add_argument("--me-sample-dt", type=pos_float, default=5.0)
    p.add_argument("--lf-t-end", type=pos_float, default=35.0)
    p.add_argument("--lf-spectrum-at", type=float, default=20.0)
    p.add_argument("--lf-sample-dt", type=pos_float, default=0.25)
    return parser


def _apply_config(parser: argparse.ArgumentParser, sub: argparse.ArgumentParser, path: str) -> None:
    try:
        cfg = read_config(path)
    except (OSError, ConfigError) as exc:
        parser.error(f"cannot read config: {exc}")
    actions = {a.dest: a for a in sub._actions if a.dest not in ("help", "config")}
    unknown = sorted(set(cfg) - set(actions))
    if unknown:
        sub.error(f"unknown config keys: {', '.join(unknown)}")
    for key, text in cfg.items():
        action = actions[key]
        convert = action.type or str
        try:
            if isinstance(action, argparse._StoreTrueAction):
                value = text.lower() in ("1", "true", "yes", "on")
            elif action.nargs in ("+", "*") or isinstance(action, argparse._AppendAction):
                value = [convert(v) for v in text.replace(",", " ").split()]
            else:
                value = convert(text)
        except (ValueError, argparse.ArgumentTypeError) as exc:
            sub.error(f"config {key}: {exc}")
        items = value if isinstance(value, list) else [value]
        if action.choices is not None and any(v not in action.choices for v in items):
            sub.error(f"config {key}: invalid choice {text!r}")
        # a config value satisfies a required option; an explicit flag still overrides it
        action.required = False
        sub.set_defaults(**{key: value})


def parse_args(argv: Sequence[str] | None = None, parser: argparse.ArgumentParser | None = None) -> argparse.Namespace:
    parser = parser or build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    command = next((a for a in argv if a in parser.commands), None)
    if known.config and command:
        _apply_config(parser, parser.commands[command], known.config)
    return parser.parse_args(argv)


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _sibling(out: str, suffix: str) -> Path:
    path = Path(out)
    return path.with_name(path.stem + suffix)


def _resolve(parser_error, model_id: str, solution_id: str, alpha: float | None, omega: float = 0.7):
    model = model_by_name(model_id, alpha=alpha if model_id == "spun" else None)
    try:
        solution = solution_by_name(solution_id, omega=omega)
    except ValueError as exc:
        parser_error(str(exc))
    gn_model = model.family is Family.GROSS_NEVEU
    if gn_model != isinstance(solution, GNSoliton):
        parser_error(f"solution {solution_id!r} does not belong to model {model_id!r}")
    return model, solution


def cmd_sweep(args, error) -> int:
    model, solution = _resolve(error, args.model, args.solution, args.alpha)
    if not isinstance(solution, ConstantSolution):
        error("sweep needs a constant solution (1+ .. 3-)")
    lin = linearize(model, solution, reduced=args.reduced)
    result = vonneumann.sweep(args.scheme, args.h, lin.p, args.n_z, model=model.name, solution=solution.name)
    _emit(result.to_csv(), args.out)
    return 0


def _simulate(model, solution, scheme, grid, t_end, noise, seed, sample_every, spectrum_times=()):
    return run_simulation(
        model,
        solution,
        scheme,
        grid,
        t_end,
        noise_amplitude=noise,
        seed=seed,
        sample_every=sample_every,
        spectrum_times=tuple(spectrum_times),
    )


def cmd_simulate(args, error) -> int:
    model, solution = _resolve(error, args.model, args.solution, args.alpha, args.omega)
    origin = args.origin
    if origin is None:
        origin = -args.length / 2 if isinstance(solution, (KinkSolution, GNSoliton)) else 0.0
    if args.nodes is not None:
        grid = PeriodicGrid(args.nodes, args.length, origin)
    elif args.h is not None:
        grid = PeriodicGrid.from_step(args.h, args.length, origin)
    else:
        error("one of --h or --nodes is required")
    report = _simulate(
        model, solution, args.scheme, grid, args.t_end, args.noise, args.seed, args.sample_every, args.spectrum_at
    )
    if (args.t1 is None) != (args.t2 is None):
        error("--t1 and --t2 go together")
    if args.t1 is not None:
        try:
            report.measure_growth(args.t1, args.t2, args.column)
        except ValueError as exc:
            print(f"mocstab: growth rate not measured: {exc}", file=sys.stderr)
    _emit(report.to_json() + "\n", args.out)
    if args.out is not None:
        _sibling(args.out, ".series.csv").write_text(report.series_csv())
        _sibling(args.out, ".spectrum.csv").write_text(report.final_spectrum.to_csv())
        for spec in report.spectra[:-1]:
            _sibling(args.out, f".spectrum_t{spec.t:g}.csv").write_text(spec.to_csv())
    return 0


def classification_table(rows) -> str:
    lines = [f"{'model':<10} {'solution':<8} class"]
    lines += [f"{r.model:<10} {r.solution:<8} {r.stability.value}" for r in rows]
    counts = {c: sum(r.stability is c for r in rows) for c in vonneumann.StabilityClass}
    lines.append("counts: " + ", ".join(f"{c.value}={n}" for c, n in counts.items()))
    return "\n".join(lines) + "\n"


def classification_csv(rows) -> str:
    out = ["model,solution,stability"]
    out += [f"{r.model},{r.solution},{r.stability.value}" for r in rows]
    return "\n".join(out) + "\n"


def cmd_classify(args, error) -> int:
    k_grid = np.linspace(0.0, args.k_max, args.n_k)
    rows = vonneumann.classify_fiber_systems(k_grid, args.tol, args.alpha)
    sys.stdout.write(classification_table(rows))
    if args.out is not None:
        Path(args.out).write_text(classification_csv(rows))
    return 0


def fit_inverse_m(ms: Sequence[int], gammas: Sequence[float]) -> dict:
    """Least-squares ``gamma = c * 2**11 / M`` and the log-log slope of gamma versus M."""
    ms = np.asarray(ms, dtype=float)
    g = np.asarray(gammas, dtype=float)
    x = 2.0**11 / ms
    c = float(np.dot(x, g) / np.dot(x, x))
    fit = {"c": c, "c_over_ln10": c / math.log(10)}
    if len(ms) > 1 and np.all(g > 0):
        fit["loglog_slope"] = float(np.polyfit(np.log(ms), np.log(g), 1)[0])
    return fit


def soliton_experiments(
    ms: Sequence[int],
    *,
    schemes: Sequence[str] = ("me", "lf"),
    length: float = 64.0,
    omega: float = 0.7,
    noise: float = 1e-12,
    seed: int = 0,
    me_t_end: float = 1000.0,
    me_t1: float | None = None,
    me_sample_dt: float = 5.0,
    lf_t_end: float = 35.0,
    lf_spectrum_at: float = 20.0,
    lf_sample_dt: float = 0.25,
) -> dict[str, dict[int, SimulationReport]]:
    """Run ME and/or LF on the Gross-Neveu soliton for each grid size in ``ms``.

    ME growth is measured on the mid-band error (the full error is dominated
    by the slow phase drift of the soliton) over ``[me_t1, t_end]``.
    """
    model = gross_neveu()
    sol = GNSoliton(omega=omega)
    out: dict[str, dict[int, SimulationReport]] = {s: {} for s in schemes}
    for m in ms:
        grid = PeriodicGrid(m, length, -length / 2)
        if "me" in schemes:
            every = max(1, round(me_sample_dt / grid.h))
            rep = run_simulation(model, sol, "me", grid, me_t_end, noise, seed, every)
            t_last = float(rep.series["t"][-1])
            t1 = 0.3 * t_last if me_t1 is None else me_t1
            if rep.blowup_time is None:
                rep.measure_growth(t1, t_last, "band_error")
            out["me"][m] = rep
        if "lf" in schemes:
            every = max(1, round(lf_sample_dt / grid.h))
            out["lf"][m] = run_simulation(
                model, sol, "lf", grid, lf_t_end, noise, seed, every, spectrum_times=(lf_spectrum_at,)
            )
    return out


def cmd_soliton(args, error) -> int:
    if any(m > 2**14 for m in args.m):
        error("grid sizes above 2**14 are not supported")
    if not 0 < args.omega < 1:
        error("--omega must lie in (0, 1)")
    runs = soliton_experiments(
        args.m,
        schemes=args.schemes,
        length=args.length,
        omega=args.omega,
        noise=args.noise,
        seed=args.seed,
        me_t_end=args.me_t_end,
        me_t1=args.me_t1,
        me_sample_dt=args.me_sample_dt,
        lf_t_end=args.lf_t_end,
        lf_spectrum_at=args.lf_spectrum_at,
        lf_sample_dt=args.lf_sample_dt,
    )
    summary: dict = {"schema_version": 1, "omega": args.omega, "L": args.length, "seed": args.seed}
    if "me" in runs:
        me = {m: rep for m, rep in runs["me"].items()}
        summary["me"] = {str(m): rep.to_dict() for m, rep in me.items()}
        measured = [(m, rep.growth.gamma) for m, rep in me.items() if rep.growth is not None]
        if measured:
            summary["me_fit"] = fit_inverse_m(*zip(*measured))
    if "lf" in runs:
        lf = runs["lf"]
        summary["lf"] = {str(m): rep.to_dict() for m, rep in lf.items()}
        summary["lf_spectrum_argmax"] = {
            str(m): rep.spectrum_near(args.lf_spectrum_at).argmax_z(0.3) for m, rep in lf.items()
        }
    _emit(json.dumps(summary, indent=2, sort_keys=True) + "\n", args.out)
    if args.out is not None:
        for scheme, reps in runs.items():
            for m, rep in reps.items():
                spec = rep.spectrum_near(args.lf_spectrum_at) if scheme == "lf" else rep.final_spectrum
                _sibling(args.out, f".{scheme}.M{m}.spectrum.csv").write_text(spec.to_csv())
                _sibling(args.out, f".{scheme}.M{m}.series.csv").write_text(rep.series_csv())
    return 0


COMMANDS = {"sweep": cmd_sweep, "simulate": cmd_simulate, "classify": cmd_classify, "soliton": cmd_soliton}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parse_args(argv, parser)
    sub = parser.commands[args.command]
    try:
        return COMMANDS[args.command](args, sub.error)
    except OSError as exc:
        print(f"mocstab: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
