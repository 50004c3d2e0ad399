"""Von Neumann analysis of the characteristic-stepping schemes.

For a linear(ized) system ``s_t + Sigma s_x = P s`` discretized with
``dt = dx = h`` along characteristics, a Fourier mode ``s_m = s e^{ikmh}`` is
advanced by an amplification operator that depends on ``z = kh`` through the
shift matrix ``Q(z) = exp(-i z Sigma)``.  The two-level schemes give a matrix
``N(z)``; leap-frog gives a quadratic pencil in the amplification factor.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .models import ALL_CONSTANT_SOLUTIONS, FIBER_MODELS, CouplingModel, ConstantSolution, linearize, model_by_name
from .smallmat import ConvergenceError, QuadraticPencil, eigenvalues, max_abs_eigenvalue, quad_eigenvalues


class SchemeKind(enum.Enum):
    SE = "se"
    ME = "me"
    LF = "lf"
    CRK = "crk"

    @classmethod
    def parse(cls, value: "SchemeKind | str") -> "SchemeKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown scheme {value!r}; choose from {[s.value for s in cls]}") from None


class StabilityClass(enum.Enum):
    STABLE = "stable"
    UNSTABLE_AT_K_ZERO = "unstable-k0"
    UNSTABLE_K_NONZERO_ONLY = "unstable-k-nonzero"


class SweepError(RuntimeError):
    def __init__(self, message: str, z: float):
        super().__init__(message)
        self.z = z


def q_matrix(z: float, n: int) -> np.ndarray:
    """``exp(-i z Sigma)`` for the block signature ``diag(I, -I)`` of size ``n``."""
    if n % 2:
        raise ValueError(f"q_matrix needs an even dimension, got {n}")
    half = n // 2
    return np.diag(np.r_[np.full(half, np.exp(-1j * z)), np.full(half, np.exp(1j * z))])


def _check_p(p) -> np.ndarray:
    p = np.asarray(p, dtype=complex)
    if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape[0] % 2:
        raise ValueError(f"P must be square with even dimension, got shape {p.shape}")
    return p


def amplification_se(z: float, h: float, p) -> np.ndarray:
    p = _check_p(p)
    n = p.shape[0]
    return q_matrix(z, n) @ (np.eye(n) + h * p)


def amplification_me(z: float, h: float, p) -> np.ndarray:
    p = _check_p(p)
    n = p.shape[0]
    q = q_matrix(z, n)
    g = np.eye(n) + h * p
    return 0.5 * (q + g @ q @ g)


def amplification_lf(z: float, h: float, p) -> QuadraticPencil:
    """Pencil ``lam^2 I - 2 lam h Q P - Q^2`` of the leap-frog recurrence.

    The recurrence for a Fourier mode is
    ``s^{n+1} = 2h Q P s^n + Q^2 s^{n-1}``, so the constant term carries a
    minus sign; at ``z = 0`` this reproduces the ODE leap-frog factors
    ``h lam_P ± sqrt(1 + (h lam_P)^2)``.
    """
    p = _check_p(p)
    n = p.shape[0]
    q = q_matrix(z, n)
    return QuadraticPencil(np.eye(n), -2.0 * h * (q @ p), -(q @ q))


def amplification_crk(z: float, h: float, p) -> np.ndarray:
    """Amplification matrix of the straightforward characteristic RK4 step.

    Stage increments are evaluated at the unshifted node while the base
    values are shifted, so each stage contributes one more factor of ``P``
    to the left of ``Q P``.
    """
    p = _check_p(p)
    n = p.shape[0]
    q = q_matrix(z, n)
    qp = q @ p
    pqp = p @ qp
    ppqp = p @ pqp
    pppqp = p @ ppqp
    return q + h * qp + (h**2 / 2) * pqp + (h**3 / 6) * ppqp + (h**4 / 24) * pppqp


_MATRIX_BUILDERS = {
    SchemeKind.SE: amplification_se,
    SchemeKind.ME: amplification_me,
    SchemeKind.CRK: amplification_crk,
}


def amplification_eigenvalues(scheme: SchemeKind | str, z: float, h: float, p) -> np.ndarray:
    scheme = SchemeKind.parse(scheme)
    if scheme is SchemeKind.LF:
        return quad_eigenvalues(amplification_lf(z, h, p))
    return eigenvalues(_MATRIX_BUILDERS[scheme](z, h, p))


def max_abs_lambda(scheme: SchemeKind | str, z: float, h: float, p) -> float:
    return max_abs_eigenvalue(amplification_eigenvalues(scheme, z, h, p))


def growth_rate(max_abs: float | np.ndarray, h: float):
    """Per-unit-time growth rate ``(|lam| - 1) / h`` of a per-step factor."""
    return (np.asarray(max_abs) - 1.0) / h


def theoretical_rate_se(h: float, p) -> float:
    """``(h/2) max|lam_P|^2``: SE rate in the ODE and anti-ODE limits."""
    return 0.5 * h * max_abs_eigenvalue(eigenvalues(p)) ** 2


def theoretical_rate_me_endpoint(h: float, p) -> float:
    """``(h^3/8) max|lam_P|^4``: ME rate in the ODE and anti-ODE limits."""
    return h**3 / 8 * max_abs_eigenvalue(eigenvalues(p)) ** 4


def theoretical_rate_me_mid(h: float) -> float:
    """ME rate near ``z = pi/2`` for the main model, read off its sweep (``|lam| ~ 1 + h^2``)."""
    return h


@dataclass
class SweepResult:
    scheme: SchemeKind
    h: float
    z_grid: np.ndarray
    max_abs: np.ndarray
    model: str = ""
    solution: str = ""

    def __post_init__(self):
        self.z_grid = np.asarray(self.z_grid, dtype=float)
        self.max_abs = np.asarray(self.max_abs, dtype=float)
        if self.z_grid.shape != self.max_abs.shape:
            raise ValueError("z_grid and max_abs lengths differ")
        if np.any(np.diff(self.z_grid) <= 0):
            raise ValueError("z_grid must be strictly increasing")

    @property
    def gamma(self) -> np.ndarray:
        return growth_rate(self.max_abs, self.h)

    def peak(self) -> tuple[float, float]:
        """``(z, max|lam|)`` at the curve maximum, refined by a parabola through the top three points."""
        i = int(np.argmax(self.max_abs))
        if 0 < i < len(self.z_grid) - 1:
            y0, y1, y2 = self.max_abs[i - 1 : i + 2]
            denom = y0 - 2 * y1 + y2
            if denom < 0:
                dz = self.z_grid[i + 1] - self.z_grid[i]
                off = 0.5 * (y0 - y2) / denom
                return float(self.z_grid[i] + off * dz), float(y1 - 0.25 * (y0 - y2) * off)
        return float(self.z_grid[i]), float(self.max_abs[i])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# scheme={self.scheme.value} h={self.h!r} model={self.model} solution={self.solution}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["z", "max_abs_lambda", "gamma"])
        for z, m, g in zip(self.z_grid.tolist(), self.max_abs.tolist(), self.gamma.tolist()):
            w.writerow([repr(z), repr(m), repr(g)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SweepResult":
        lines = text.splitlines()
        if not lines or not lines[0].startswith("#"):
            raise ValueError("missing sweep header line")
        meta = dict(item.split("=", 1) for item in lines[0][1:].split())
        rows = list(csv.reader(lines[1:]))
        if rows[0] != ["z", "max_abs_lambda", "gamma"]:
            raise ValueError(f"unexpected columns {rows[0]}")
        data = np.array([[float(v) for v in r[:2]] for r in rows[1:]])
        return cls(
            scheme=SchemeKind.parse(meta["scheme"]),
            h=float(meta["h"]),
            z_grid=data[:, 0],
            max_abs=data[:, 1],
            model=meta.get("model", ""),
            solution=meta.get("solution", ""),
        )


def sweep(
    scheme: SchemeKind | str,
    h: float,
    p,
    n_z: int = 2001,
    *,
    z_max: float = math.pi,
    model: str = "",
    solution: str = "",
) -> SweepResult:
    """Largest amplification factor on ``n_z`` uniformly spaced ``z`` in ``[0, z_max]``."""
    if n_z < 2:
        raise ValueError("n_z must be at least 2")
    if h <= 0:
        raise ValueError("h must be positive")
    scheme = SchemeKind.parse(scheme)
    z_grid = np.linspace(0.0, z_max, n_z)
    out = np.empty(n_z)
    for i, z in enumerate(z_grid):
        try:
            out[i] = max_abs_lambda(scheme, z, h, p)
        except ConvergenceError as exc:
            raise SweepError(f"eigensolver failed at z={z!r}: {exc}", z=float(z)) from exc
    return SweepResult(scheme, h, z_grid, out, model=model, solution=solution)


# ---------------------------------------------------------------------------
# Physical (in)stability


def physical_dispersion(p, sigma, k: float) -> np.ndarray:
    """Frequencies ``omega`` of modes ``e^{ikx - i omega t}``: ``i * eig(P - i k Sigma)``."""
    p = np.asarray(p, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if p.shape != sigma.shape:
        raise ValueError(f"P {p.shape} and Sigma {sigma.shape} differ in shape")
    return 1j * eigenvalues(p - 1j * k * sigma)


DEFAULT_K_GRID = np.linspace(0.0, 10.0, 2001)


def max_growth_over_k(p, sigma, k_grid: Iterable[float] = DEFAULT_K_GRID) -> np.ndarray:
    """``max_j |Im omega_j(k)|`` for each ``k`` in the grid."""
    return np.array([np.max(np.abs(physical_dispersion(p, sigma, k).imag)) for k in k_grid])


def classify_system(
    model: CouplingModel,
    solution: ConstantSolution,
    k_grid: Sequence[float] = DEFAULT_K_GRID,
    tol: float = 1e-8,
    reduced: bool = False,
) -> StabilityClass:
    k_grid = np.asarray(k_grid, dtype=float)
    if k_grid[0] != 0.0:
        raise ValueError("k_grid must start at k = 0")
    lin = linearize(model, solution, reduced=reduced)
    growth = max_growth_over_k(lin.p, lin.sigma, k_grid)
    if growth.max() <= tol:
        return StabilityClass.STABLE
    if growth[0] > tol:
        return StabilityClass.UNSTABLE_AT_K_ZERO
    return StabilityClass.UNSTABLE_K_NONZERO_ONLY


@dataclass
class ClassificationRow:
    model: str
    solution: str
    stability: StabilityClass
    p_eigenvalues: np.ndarray = field(repr=False)


def classify_fiber_systems(
    k_grid: Sequence[float] = DEFAULT_K_GRID, tol: float = 1e-8, alpha: float | None = None
) -> list[ClassificationRow]:
    """All 18 combinations of the three fiber models and six constant solutions."""
    rows = []
    for name in FIBER_MODELS:
        model = model_by_name(name, alpha=alpha if name == "spun" else None)
        for sol in ALL_CONSTANT_SOLUTIONS:
            lin = linearize(model, sol, reduced=True)
            rows.append(
                ClassificationRow(name, sol.name, classify_system(model, sol, k_grid, tol), eigenvalues(lin.p))
            )
    return rows
