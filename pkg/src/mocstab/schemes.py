"""Nonlinear characteristic steppers on a periodic grid with ``dt = dx = h``.

The ``+`` family travels right, so its node ``m`` is fed from node ``m - 1``;
the ``-`` family is fed from ``m + 1``.  Periodic wraparound is ``np.roll``.
The right-hand side of each family is evaluated with *both* families taken
at the family's upstream node, which is why a single evaluation of the
model at every node followed by a shift suffices for SE, ME and LF.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import diagnostics
from .diagnostics import ErrorSpectrum, GrowthRateEstimate
from .models import CouplingModel, Family
from .vonneumann import SchemeKind

REPORT_SCHEMA_VERSION = 1


class BlowUpError(ArithmeticError):
    """The field left the finite/bounded range during a step."""

    def __init__(self, step: int, t: float, max_abs: float):
        super().__init__(f"blow-up at step {step} (t={t:g}), max |component| = {max_abs:g}")
        self.step = step
        self.t = t
        self.max_abs = max_abs


@dataclass(frozen=True)
class PeriodicGrid:
    """``nodes`` points ``x_m = origin + m h`` with ``h = length / nodes``.

    Node ``nodes`` is identified with node 0.
    """

    nodes: int
    length: float
    origin: float = 0.0

    def __post_init__(self):
        if self.nodes < 3:
            raise ValueError("a periodic grid needs at least 3 nodes")
        if not self.length > 0:
            raise ValueError("grid length must be positive")

    @property
    def h(self) -> float:
        return self.length / self.nodes

    @property
    def x(self) -> np.ndarray:
        return self.origin + self.h * np.arange(self.nodes)

    @classmethod
    def from_step(cls, h: float, length: float, origin: float = 0.0) -> "PeriodicGrid":
        nodes = int(round(length / h))
        if not math.isclose(nodes * h, length, rel_tol=1e-9):
            raise ValueError(f"length {length} is not a whole number of steps h={h}")
        return cls(nodes, length, origin)


@dataclass
class FieldState:
    """Both characteristic families at one time level.

    Stokes: ``plus``/``minus`` are ``(nodes, 3)`` real arrays.
    Gross-Neveu: ``(nodes,)`` complex arrays.
    """

    grid: PeriodicGrid
    plus: np.ndarray
    minus: np.ndarray
    family: Family
    step: int = 0
    t0: float = 0.0

    def __post_init__(self):
        if len(self.plus) != self.grid.nodes or len(self.minus) != self.grid.nodes:
            raise ValueError("field arrays must have one entry per grid node")

    @property
    def t(self) -> float:
        # computed from the step count so long runs do not accumulate rounding
        return self.t0 + self.step * self.grid.h

    def advanced(self, plus: np.ndarray, minus: np.ndarray) -> "FieldState":
        return replace(self, plus=plus, minus=minus, step=self.step + 1)

    def rotated(self, k: int) -> "FieldState":
        """Cyclic rotation of node values by ``k`` (content of node m moves to m + k)."""
        return replace(self, plus=np.roll(self.plus, k, axis=0), minus=np.roll(self.minus, k, axis=0))

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(self.plus))), float(np.max(np.abs(self.minus))))


@dataclass
class LFStatePair:
    previous: FieldState
    current: FieldState

    def __post_init__(self):
        if self.previous.grid != self.current.grid:
            raise ValueError("leap-frog levels live on different grids")
        if not math.isclose(self.current.t - self.previous.t, self.current.grid.h, rel_tol=1e-9, abs_tol=1e-12):
            raise ValueError("leap-frog levels must be exactly one step apart")


def _shift(plus, minus, k: int = 1):
    return np.roll(plus, k, axis=0), np.roll(minus, -k, axis=0)


def _checked(state: FieldState, blowup: float) -> FieldState:
    m = state.max_abs()
    if not math.isfinite(m) or m > blowup:
        raise BlowUpError(state.step, state.t, m)
    return state


def step_se(state: FieldState, model: CouplingModel, blowup: float = math.inf) -> FieldState:
    h = state.grid.h
    fp, fm = model.rhs(state.plus, state.minus)
    return _checked(state.advanced(*_shift(state.plus + h * fp, state.minus + h * fm)), blowup)


def step_me(state: FieldState, model: CouplingModel, blowup: float = math.inf) -> FieldState:
    h = state.grid.h
    fp, fm = model.rhs(state.plus, state.minus)
    bp, bm = _shift(state.plus + h * fp, state.minus + h * fm)
    sp, sm = _shift(state.plus, state.minus)
    gp, gm = model.rhs(bp, bm)
    return _checked(state.advanced(0.5 * (sp + bp + h * gp), 0.5 * (sm + bm + h * gm)), blowup)


def step_lf(pair: LFStatePair, model: CouplingModel, blowup: float = math.inf) -> LFStatePair:
    cur, prev = pair.current, pair.previous
    h = cur.grid.h
    fp, fm = model.rhs(cur.plus, cur.minus)
    pp, pm = _shift(prev.plus, prev.minus, 2)
    fp, fm = _shift(fp, fm)
    new = _checked(cur.advanced(pp + 2 * h * fp, pm + 2 * h * fm), blowup)
    return LFStatePair(cur, new)


def step_crk(state: FieldState, model: CouplingModel, blowup: float = math.inf) -> FieldState:
    """Classical RK4 along characteristics with unshifted stage increments."""
    h = state.grid.h
    up_p, up_m = np.roll(state.plus, 1, axis=0), np.roll(state.minus, 1, axis=0)
    dn_p, dn_m = np.roll(state.plus, -1, axis=0), np.roll(state.minus, -1, axis=0)

    def stage(kp, km, weight):
        fp, _ = model.rhs(up_p + weight * kp, up_m + weight * km)
        _, fm = model.rhs(dn_p + weight * kp, dn_m + weight * km)
        return h * fp, h * fm

    fp, fm = model.rhs(state.plus, state.minus)
    k1 = _shift(h * fp, h * fm)
    k2 = stage(*k1, 0.5)
    k3 = stage(*k2, 0.5)
    k4 = stage(*k3, 1.0)
    new_p = up_p + (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]) / 6
    new_m = dn_m + (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]) / 6
    return _checked(state.advanced(new_p, new_m), blowup)


_TWO_LEVEL = {SchemeKind.SE: step_se, SchemeKind.ME: step_me, SchemeKind.CRK: step_crk}


def initial_state(reference, grid: PeriodicGrid, noise_amplitude: float = 0.0, seed: int = 0) -> FieldState:
    """Reference profile at ``t = 0`` plus uniform noise in ``[-a, a]`` per real degree of freedom."""
    plus, minus = reference.state(grid.x, 0.0)
    plus = np.array(plus, copy=True)
    minus = np.array(minus, copy=True)
    rng = np.random.default_rng(seed)
    if noise_amplitude > 0:
        for arr in (plus, minus):
            if np.iscomplexobj(arr):
                arr += rng.uniform(-noise_amplitude, noise_amplitude, arr.shape)
                arr += 1j * rng.uniform(-noise_amplitude, noise_amplitude, arr.shape)
            else:
                arr += rng.uniform(-noise_amplitude, noise_amplitude, arr.shape)
    return FieldState(grid, plus, minus, reference.family)


SERIES_COLUMNS = ("t", "total_error", "conservation_plus", "conservation_minus", "band_error", "max_error")


@dataclass
class SimulationReport:
    metadata: dict
    series: dict[str, np.ndarray]
    spectra: list[ErrorSpectrum] = field(default_factory=list)
    blowup_time: float | None = None
    growth: GrowthRateEstimate | None = None

    @property
    def final_spectrum(self) -> ErrorSpectrum:
        return self.spectra[-1]

    def spectrum_near(self, t: float) -> ErrorSpectrum:
        return min(self.spectra, key=lambda s: abs(s.t - t))

    def measure_growth(self, t1: float, t2: float, column: str = "total_error") -> GrowthRateEstimate:
        self.growth = diagnostics.measure_growth_rate(self.series["t"], self.series[column], t1, t2)
        self.metadata["growth_column"] = column
        return self.growth

    def destruction_time(self, threshold: float = 1.0) -> float | None:
        return diagnostics.destruction_time(
            self.series["t"], self.series["total_error"], self.metadata["reference_norm"], threshold
        )

    def to_dict(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "metadata": self.metadata,
            "blowup_time": self.blowup_time,
            "destruction_time": self.destruction_time(),
            "growth_rate": self.growth.to_dict() if self.growth else None,
            "samples": len(self.series["t"]),
            "spectrum_times": [s.t for s in self.spectra],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def series_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SERIES_COLUMNS)
        cols = [self.series[c].tolist() for c in SERIES_COLUMNS]
        for row in zip(*cols):
            w.writerow([repr(v) for v in row])
        return buf.getvalue()


def run_simulation(
    model: CouplingModel,
    reference,
    scheme: SchemeKind | str,
    grid: PeriodicGrid,
    t_end: float,
    noise_amplitude: float = 1e-12,
    seed: int = 0,
    sample_every: int = 1,
    *,
    spectrum_times: tuple[float, ...] = (),
    band: tuple[float, float] = diagnostics.MID_BAND,
    bootstrap: SchemeKind | str = SchemeKind.SE,
    blowup: float = 1e6,
) -> SimulationReport:
    """Evolve ``reference + noise`` to ``t_end`` and record error diagnostics.

    Samples are taken at ``t = 0`` and every ``sample_every`` steps.  The
    number of steps is ``t_end / h`` truncated down to a multiple of
    ``sample_every``.  Error spectra are kept at the samples nearest each of
    ``spectrum_times`` and at the final (or last finite) state.  A blow-up
    ends the run early and is recorded, not raised.
    """
    scheme = SchemeKind.parse(scheme)
    bootstrap = SchemeKind.parse(bootstrap)
    if bootstrap is SchemeKind.LF:
        raise ValueError("leap-frog cannot bootstrap itself")
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")
    h = grid.h
    n_steps = int(math.floor(t_end / h + 1e-9))
    n_steps -= n_steps % sample_every
    state = initial_state(reference, grid, noise_amplitude, seed)
    rows: list[tuple] = []
    spectra: list[ErrorSpectrum] = []
    pending = sorted(spectrum_times)

    def record(s: FieldState, force_spectrum: bool = False):
        spec = diagnostics.error_spectrum(s, reference)
        cp, cm = diagnostics.conservation_sums(s)
        rows.append(
            (
                s.t,
                diagnostics.total_error(s, reference),
                cp,
                cm,
                diagnostics.band_error(spec, band),
                diagnostics.max_error(s, reference),
            )
        )
        keep = force_spectrum
        while pending and pending[0] <= s.t + 0.5 * h * sample_every:
            pending.pop(0)
            keep = True
        if keep and (not spectra or spectra[-1].t != s.t):
            spectra.append(spec)

    record(state)
    blowup_time = None
    previous = None
    try:
        for n in range(n_steps):
            if scheme is SchemeKind.LF:
                if previous is None:
                    nxt = _TWO_LEVEL[bootstrap](state, model, blowup)
                else:
                    nxt = step_lf(LFStatePair(previous, state), model, blowup).current
                previous, state = state, nxt
            else:
                state = _TWO_LEVEL[scheme](state, model, blowup)
            if (n + 1) % sample_every == 0:
                record(state, force_spectrum=(n + 1 == n_steps))
    except BlowUpError as exc:
        # the failed step never replaced `state`, which is the last bounded level
        blowup_time = exc.t
        if not spectra or spectra[-1].t != state.t:
            spectra.append(diagnostics.error_spectrum(state, reference))

    series = {name: np.array(col, dtype=float) for name, col in zip(SERIES_COLUMNS, zip(*rows))}
    metadata = {
        "model": model.name,
        "solution": reference.name,
        "scheme": scheme.value,
        "h": h,
        "L": grid.length,
        "nodes": grid.nodes,
        "origin": grid.origin,
        "seed": seed,
        "noise_amplitude": noise_amplitude,
        "t_end_requested": t_end,
        "t_end": n_steps * h,
        "sample_every": sample_every,
        "band": list(band),
        "bootstrap": bootstrap.value if scheme is SchemeKind.LF else None,
        "reference_norm": diagnostics.reference_norm(reference, grid),
    }
    return SimulationReport(metadata, series, spectra, blowup_time)
