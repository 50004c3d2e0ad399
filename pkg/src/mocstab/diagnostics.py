"""Error norms, error spectra, growth-rate fits and conservation sums."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass
from typing import TYPE_CHECKING

import numpy as np

from .models import Family

if TYPE_CHECKING:
    from .schemes import FieldState

# band of normalized wavenumbers holding the mid-spectrum instability
MID_BAND = (math.pi / 4, 3 * math.pi / 4)


def error_components(state: "FieldState", reference) -> list[np.ndarray]:
    """Per-node deviation from the reference, one array per error component.

    Stokes: the two transverse components of each family (components along
    the background axis decouple and are left out).  Gross-Neveu: ``u`` and
    ``v``.
    """
    rp, rm = reference.state(state.grid.x, state.t)
    dp = state.plus - rp
    dm = state.minus - rm
    if state.family is Family.GROSS_NEVEU:
        return [dp, dm]
    a, b = reference.transverse
    return [dp[:, a], dp[:, b], dm[:, a], dm[:, b]]


def total_error(state: "FieldState", reference) -> float:
    """Euclidean norm of the error summed over nodes and components (not scaled by h)."""
    return math.sqrt(sum(float(np.sum(np.abs(c) ** 2)) for c in error_components(state, reference)))


def max_error(state: "FieldState", reference) -> float:
    return max(float(np.max(np.abs(c))) for c in error_components(state, reference))


@dataclass
class ErrorSpectrum:
    """Folded error spectrum on ``z = 2 pi q / nodes``, ``q = 0 .. nodes // 2``.

    ``magnitude[q]`` is the Euclidean norm over components of the DFT
    coefficients at ``+q`` and ``-q`` combined, so
    ``sum(magnitude**2) == nodes * sum(node errors**2)``.
    """

    z_grid: np.ndarray
    magnitude: np.ndarray
    nodes: int
    t: float = 0.0

    @property
    def log10_magnitude(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log10(self.magnitude)

    def argmax_z(self, z_min: float = 0.0) -> float:
        """Location of the largest spectral magnitude with ``z >= z_min``."""
        mask = self.z_grid >= z_min
        return float(self.z_grid[mask][np.argmax(self.magnitude[mask])])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["z", "log10_err"])
        for z, v in zip(self.z_grid.tolist(), self.log10_magnitude.tolist()):
            w.writerow([repr(z), repr(v)])
        return buf.getvalue()


def spectrum_of(components: list[np.ndarray], t: float = 0.0) -> ErrorSpectrum:
    n = len(components[0])
    power = np.zeros(n)
    for c in components:
        power += np.abs(np.fft.fft(c)) ** 2
    half = n // 2
    folded = power[: half + 1].copy()
    q = np.arange(1, half + 1)
    paired = q[n - q != q]
    folded[paired] += power[n - paired]
    z = 2 * np.pi * np.arange(half + 1) / n
    return ErrorSpectrum(z, np.sqrt(folded), n, t)


def error_spectrum(state: "FieldState", reference) -> ErrorSpectrum:
    return spectrum_of(error_components(state, reference), state.t)


def band_error(spectrum: ErrorSpectrum, band: tuple[float, float] = MID_BAND) -> float:
    """Node-space norm of the error restricted to ``band[0] <= z <= band[1]``."""
    lo, hi = band
    slack = 1e-12  # so z = pi at the Nyquist index is inside a band ending at np.pi
    mask = (spectrum.z_grid >= lo - slack) & (spectrum.z_grid <= hi + slack)
    return math.sqrt(float(np.sum(spectrum.magnitude[mask] ** 2)) / spectrum.nodes)


def conservation_sums(state: "FieldState") -> tuple[float, float]:
    """Rectangle-rule integrals ``h * sum_m |S±_m|^2`` of each family."""
    h = state.grid.h
    if state.family is Family.GROSS_NEVEU:
        return h * float(np.sum(np.abs(state.plus) ** 2)), h * float(np.sum(np.abs(state.minus) ** 2))
    return h * float(np.sum(state.plus**2)), h * float(np.sum(state.minus**2))


@dataclass
class GrowthRateEstimate:
    gamma: float
    t1: float
    t2: float
    fit_residual: float

    def to_dict(self) -> dict:
        return asdict(self)


def _chord_fit(t: np.ndarray, loge: np.ndarray, t1: float, t2: float) -> tuple[float, float]:
    l1 = float(np.interp(t1, t, loge))
    l2 = float(np.interp(t2, t, loge))
    gamma = (l2 - l1) / (t2 - t1)
    inside = (t >= t1) & (t <= t2)
    chord = l1 + gamma * (t[inside] - t1)
    resid = float(np.max(np.abs(loge[inside] - chord))) if inside.any() else 0.0
    return gamma, resid


def measure_growth_rate(t, err, t1: float, t2: float) -> GrowthRateEstimate:
    """Exponential growth rate between ``t1`` and ``t2`` from the log of the error.

    ``ln e`` is linearly interpolated at the window ends; the residual is the
    largest deviation of ``ln e`` from that chord inside the window.
    """
    t = np.asarray(t, dtype=float)
    err = np.asarray(err, dtype=float)
    if not t2 > t1:
        raise ValueError(f"need t2 > t1, got t1={t1}, t2={t2}")
    if t1 < t[0] or t2 > t[-1]:
        raise ValueError(f"window [{t1}, {t2}] outside the series range [{t[0]}, {t[-1]}]")
    lo = max(int(np.searchsorted(t, t1, side="right")) - 1, 0)
    hi = int(np.searchsorted(t, t2, side="left")) + 1
    if np.any(err[lo:hi] <= 0) or not np.all(np.isfinite(err[lo:hi])):
        raise ValueError("error series must be positive and finite on the fit window")
    with np.errstate(divide="ignore", invalid="ignore"):
        loge = np.log(err)
    gamma, resid = _chord_fit(t[lo:hi], loge[lo:hi], t1, t2)
    return GrowthRateEstimate(gamma, float(t1), float(t2), resid)


def auto_growth_window(t, err, max_points: int = 80, rel_tol: float = 0.1) -> GrowthRateEstimate:
    """Longest window whose chord residual stays below ``rel_tol * |ln e(t2) - ln e(t1)|``."""
    t = np.asarray(t, dtype=float)
    err = np.asarray(err, dtype=float)
    ok = np.isfinite(err) & (err > 0)
    t, err = t[ok], err[ok]
    if len(t) < 2:
        raise ValueError("need at least two positive samples")
    idx = np.unique(np.linspace(0, len(t) - 1, min(max_points, len(t))).astype(int))
    loge = np.log(err)
    best = None
    for a in range(len(idx)):
        for b in range(len(idx) - 1, a, -1):
            i, j = idx[a], idx[b]
            span = t[j] - t[i]
            if best is not None and span <= best.t2 - best.t1:
                break
            gamma = (loge[j] - loge[i]) / span
            resid = float(np.max(np.abs(loge[i : j + 1] - (loge[i] + gamma * (t[i : j + 1] - t[i])))))
            if resid < rel_tol * abs(loge[j] - loge[i]):
                best = GrowthRateEstimate(float(gamma), float(t[i]), float(t[j]), resid)
                break
    if best is None:
        raise ValueError("no window satisfies the linearity criterion")
    return best


def reference_norm(reference, grid) -> float:
    """Euclidean norm over nodes of the reference solution at ``t = 0``."""
    rp, rm = reference.state(grid.x, 0.0)
    return math.sqrt(float(np.sum(np.abs(rp) ** 2) + np.sum(np.abs(rm) ** 2)))


def destruction_time(t, total_err, ref_norm: float, threshold: float = 1.0) -> float | None:
    """First sample time at which the error norm reaches ``threshold`` times the solution norm."""
    t = np.asarray(t, dtype=float)
    rel = np.asarray(total_err, dtype=float) / ref_norm
    hit = np.nonzero(~(rel < threshold))[0]
    return float(t[hit[0]]) if hit.size else None
