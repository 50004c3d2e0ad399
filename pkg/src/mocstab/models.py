"""Right-hand sides, exact solutions and linearizations of the test models.

Two model families are supported:

* Stokes coupled-wave models for counter-propagating Stokes vectors,
  ``S±_t ± S±_x = S± x (Jc S∓) + S± x (Js S±)`` with diagonal ``Jc``, ``Js``.
* The Gross-Neveu model in characteristic variables ``u, v``.

Stokes fields are stored as real arrays of shape ``(nodes, 3)``; Gross-Neveu
fields as complex arrays of shape ``(nodes,)``.  All right-hand sides are
vectorized over the leading node axis and also accept complex input (they
are polynomial), which the Fourier-mode linearization tests rely on.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np


class Family(enum.Enum):
    STOKES = "stokes"
    GROSS_NEVEU = "gross-neveu"


def _cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # np.cross is several times slower on (n, 3) arrays
    out = np.empty(np.broadcast_shapes(a.shape, b.shape), dtype=np.result_type(a, b))
    a0, a1, a2 = a[..., 0], a[..., 1], a[..., 2]
    b0, b1, b2 = b[..., 0], b[..., 1], b[..., 2]
    out[..., 0] = a1 * b2 - a2 * b1
    out[..., 1] = a2 * b0 - a0 * b2
    out[..., 2] = a0 * b1 - a1 * b0
    return out


def _skew(v) -> np.ndarray:
    """Matrix of ``w -> v x w``."""
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


@dataclass(frozen=True)
class CouplingModel:
    """Diagonal cross (``jc``) and self (``js``) coupling of a Stokes model.

    Gross-Neveu models carry no coupling matrices; ``jc``/``js`` are zero and
    ignored.
    """

    name: str
    family: Family = Family.STOKES
    jc: tuple[float, float, float] = (0.0, 0.0, 0.0)
    js: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def rhs(self, plus: np.ndarray, minus: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if self.family is Family.STOKES:
            return stokes_rhs(plus, minus, self)
        return gn_rhs(plus, minus)

    @property
    def is_free(self) -> bool:
        return self.family is Family.STOKES and not any(self.jc) and not any(self.js)


def spun(alpha: float = 2.0 / 3.0) -> CouplingModel:
    """Highly spun birefringent fiber; ``alpha`` is the core ellipticity."""
    return CouplingModel(
        name="spun",
        jc=(alpha, -alpha, -2.0 * alpha),
        js=(0.0, 0.0, 2.0 - 3.0 * alpha),
    )


def random_birefringence() -> CouplingModel:
    return CouplingModel(name="random", jc=(-1.0, 1.0, -1.0))


def isotropic() -> CouplingModel:
    return CouplingModel(name="isotropic", jc=(-2.0, -2.0, 0.0), js=(-1.0, -1.0, 0.0))


def main_model() -> CouplingModel:
    """``J = diag(1, -1, -2)`` with no self coupling.

    Its linearization about ``(2-)`` is the reference 4x4 matrix of
    :func:`reference_p`.  It equals ``spun(2/3)`` scaled by 3/2.
    """
    return CouplingModel(name="main", jc=(1.0, -1.0, -2.0))


def free() -> CouplingModel:
    """Zero coupling: pure advection along both characteristic families."""
    return CouplingModel(name="free")


def gross_neveu() -> CouplingModel:
    return CouplingModel(name="gross-neveu", family=Family.GROSS_NEVEU)


FIBER_MODELS = ("spun", "random", "isotropic")

_MODEL_FACTORIES = {
    "spun": spun,
    "random": random_birefringence,
    "isotropic": isotropic,
    "main": main_model,
    "free": free,
    "gross-neveu": gross_neveu,
}


def model_by_name(name: str, alpha: float | None = None) -> CouplingModel:
    try:
        factory = _MODEL_FACTORIES[name]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; choose from {sorted(_MODEL_FACTORIES)}") from None
    if alpha is not None:
        if name != "spun":
            raise ValueError("alpha only applies to the 'spun' model")
        return factory(alpha)
    return factory()


def stokes_rhs(splus, sminus, model: CouplingModel) -> tuple[np.ndarray, np.ndarray]:
    """Nonlinear right-hand sides ``(f+, f-)`` of the Stokes model."""
    splus = np.asarray(splus)
    sminus = np.asarray(sminus)
    jc = np.asarray(model.jc)
    js = np.asarray(model.js)
    fplus = _cross(splus, jc * sminus)
    fminus = _cross(sminus, jc * splus)
    if any(model.js):
        fplus += _cross(splus, js * splus)
        fminus += _cross(sminus, js * sminus)
    return fplus, fminus


def gn_rhs(u, v) -> tuple[np.ndarray, np.ndarray]:
    """Gross-Neveu right-hand sides in characteristic variables."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    fu = 1j * ((v.real**2 + v.imag**2) * u + v * v * u.conj()) - 1j * v
    fv = 1j * ((u.real**2 + u.imag**2) * v + u * u * v.conj()) - 1j * u
    return fu, fv


_SQRT_HALF = math.sqrt(0.5)


def gn_change_of_variables(psi, chi):
    """Physical spinor components ``(psi, chi)`` to characteristic ``(u, v)``."""
    return (psi + chi) * _SQRT_HALF, (psi - chi) * _SQRT_HALF


def gn_inverse_change_of_variables(u, v):
    return (u + v) * _SQRT_HALF, (u - v) * _SQRT_HALF


# ---------------------------------------------------------------------------
# Reference solutions


@dataclass(frozen=True)
class ConstantSolution:
    """``S+_j = 1``, ``S-_j = sign``, other components zero; named ``(j±)``."""

    j: int
    sign: int

    def __post_init__(self):
        if self.j not in (1, 2, 3):
            raise ValueError(f"component index must be 1, 2 or 3, got {self.j}")
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")

    @property
    def name(self) -> str:
        return f"{self.j}{'+' if self.sign > 0 else '-'}"

    family = Family.STOKES

    def vectors(self) -> tuple[np.ndarray, np.ndarray]:
        sp = np.zeros(3)
        sp[self.j - 1] = 1.0
        return sp, self.sign * sp

    @property
    def transverse(self) -> tuple[int, int]:
        """Zero-based indices of the two components off the background axis."""
        return tuple(i for i in range(3) if i != self.j - 1)

    def state(self, x: np.ndarray, t: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
        sp, sm = self.vectors()
        n = len(x)
        return np.tile(sp, (n, 1)), np.tile(sm, (n, 1))


def constant_profile(sol: ConstantSolution) -> tuple[np.ndarray, np.ndarray]:
    return sol.vectors()


ALL_CONSTANT_SOLUTIONS = tuple(ConstantSolution(j, s) for j in (1, 2, 3) for s in (1, -1))


@dataclass(frozen=True)
class KinkSolution:
    """The sech/tanh kink profile with optional sign flips.

    ``sign13`` flips components 1 and 3, ``sign2`` flips component 2; the
    default ``(1, 1)`` branch tends to ``(2-)`` as ``x -> -inf``.  The
    profile is used as initial data; ``state`` ignores ``t``.
    """

    sign13: int = 1
    sign2: int = 1

    name = "kink"
    family = Family.STOKES
    transverse = (0, 2)

    def state(self, x, t: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
        return kink_profile(x, self.sign13, self.sign2)


def kink_profile(x, sign13: int = 1, sign2: int = 1) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    r2 = math.sqrt(2.0)
    sech = 1.0 / np.cosh(r2 * x)
    th = np.tanh(r2 * x)
    out = []
    for pm in (1.0, -1.0):
        s1 = sign13 * pm * sech / math.sqrt(3.0)
        s2 = -sign2 * pm * th
        out.append(np.stack([s1, s2, r2 * s1], axis=-1))
    return out[0], out[1]


@dataclass(frozen=True)
class GNSoliton:
    """Standing Gross-Neveu soliton with frequency ``omega`` in (0, 1)."""

    omega: float = 0.7
    center: float = 0.0

    name = "soliton"
    family = Family.GROSS_NEVEU

    def __post_init__(self):
        if not 0.0 < self.omega < 1.0:
            raise ValueError(f"omega must lie in (0, 1), got {self.omega}")

    @property
    def beta(self) -> float:
        return math.sqrt(1.0 - self.omega**2)

    @property
    def mu(self) -> float:
        return math.sqrt((1.0 - self.omega) / (1.0 + self.omega))

    def profile(self, x) -> tuple[np.ndarray, np.ndarray]:
        return gn_soliton_profile(x, self)

    def state(self, x, t: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
        u, v = self.profile(x)
        phase = np.exp(-1j * self.omega * t)
        return u * phase, v * phase


def gn_soliton_profile(x, s: GNSoliton) -> tuple[np.ndarray, np.ndarray]:
    """``(U(x), V(x))``; ``V`` is the complex conjugate of ``U``."""
    y = s.beta * (np.asarray(x, dtype=float) - s.center)
    # divide through by cosh^2 so large |x| cannot overflow
    th = np.tanh(y)
    sech = 1.0 / np.cosh(y)
    denom = 1.0 - s.mu**2 * th**2
    amp = math.sqrt(1.0 - s.omega)
    re = amp * sech / denom
    im = amp * s.mu * th * sech / denom
    return re + 1j * im, re - 1j * im


_SOLUTION_NAMES = {sol.name: sol for sol in ALL_CONSTANT_SOLUTIONS}


def solution_by_name(name: str, omega: float = 0.7, center: float = 0.0):
    if name in _SOLUTION_NAMES:
        return _SOLUTION_NAMES[name]
    if name == "kink":
        return KinkSolution()
    if name == "soliton":
        return GNSoliton(omega=omega, center=center)
    raise ValueError(
        f"unknown solution {name!r}; choose from {sorted(_SOLUTION_NAMES) + ['kink', 'soliton']}"
    )


# ---------------------------------------------------------------------------
# Linearization


@dataclass(frozen=True)
class LinearizationP:
    """Linear coupling matrix ``p`` and the block signature ``sigma``."""

    p: np.ndarray
    sigma: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.p.shape[0]


def signature(n: int) -> np.ndarray:
    if n % 2:
        raise ValueError(f"signature needs an even dimension, got {n}")
    return np.diag(np.r_[np.ones(n // 2), -np.ones(n // 2)])


def stokes_jacobian(model: CouplingModel, splus, sminus) -> np.ndarray:
    """Analytic 6x6 Jacobian of ``(f+, f-)`` with respect to ``(S+, S-)``."""
    sp = np.asarray(splus, dtype=float)
    sm = np.asarray(sminus, dtype=float)
    jc = np.asarray(model.jc, dtype=float)
    js = np.asarray(model.js, dtype=float)
    jac = np.zeros((6, 6))
    jac[:3, :3] = -_skew(jc * sm) - _skew(js * sp) + _skew(sp) @ np.diag(js)
    jac[:3, 3:] = _skew(sp) @ np.diag(jc)
    jac[3:, 3:] = -_skew(jc * sp) - _skew(js * sm) + _skew(sm) @ np.diag(js)
    jac[3:, :3] = _skew(sm) @ np.diag(jc)
    return jac


def linearize(model: CouplingModel, sol: ConstantSolution, reduced: bool = False) -> LinearizationP:
    """Linearize a Stokes model about a constant solution.

    The full form is the 6x6 Jacobian ordered ``[S+_1..3, S-_1..3]``.  The
    reduced form drops the two components along the background axis, which
    decouple into free transport, leaving ``[s+_a, s+_b, s-_a, s-_b]`` with
    ``a < b`` the transverse components.
    """
    if model.family is not Family.STOKES:
        raise ValueError("linearize is defined for Stokes models only")
    if not isinstance(sol, ConstantSolution):
        raise TypeError(f"linearization needs a constant solution, got {type(sol).__name__}")
    jac = stokes_jacobian(model, *sol.vectors())
    if not reduced:
        return LinearizationP(jac, signature(6))
    a, b = sol.transverse
    keep = [a, b, 3 + a, 3 + b]
    return LinearizationP(jac[np.ix_(keep, keep)], signature(4))


def reference_p() -> np.ndarray:
    """The 4x4 coupling matrix of the main model about ``(2-)``, built from blocks."""
    a = np.array([[0.0, 1.0], [-1.0, 0.0]])
    b = -np.array([[0.0, 2.0], [1.0, 0.0]])
    return np.block([[-a, b], [-b, a]])
