"""Small dense complex eigenvalue solvers.

Matrices handled here never exceed 16x16, so the solver favours robustness
over speed: Householder reduction to upper Hessenberg form followed by a
Wilkinson-shifted complex QR iteration with deflation, written in plain
Python complex arithmetic (numpy scalar access is slower at this size).

Defective eigenvalues (Jordan blocks) are only recoverable to roughly the
square root of machine precision by any backward-stable method.  The linear
stability problems in this package hit exactly that case (the coupling
matrix of the main Stokes model has a 2x2 Jordan block at zero), so computed
eigenvalues that form a tight cluster are replaced by the cluster mean when
the mean is itself an accurate eigenvalue, i.e. when ``m - mean*I`` is
numerically singular.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

MAX_DIM = 16


class ConvergenceError(ArithmeticError):
    """QR iteration did not converge within the iteration cap."""

    def __init__(self, message: str, iterations: int, unconverged: int):
        super().__init__(message)
        self.iterations = iterations
        self.unconverged = unconverged


def as_complex_matrix(m) -> np.ndarray:
    """Validate ``m`` as a finite square complex matrix of dimension 1..16."""
    a = np.array(m, dtype=complex)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not 1 <= a.shape[0] <= MAX_DIM:
        raise ValueError(f"matrix dimension must be in 1..{MAX_DIM}, got {a.shape[0]}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


@dataclass(frozen=True)
class QuadraticPencil:
    """The matrix polynomial ``lam**2 * a2 + lam * a1 + a0``."""

    a2: np.ndarray
    a1: np.ndarray
    a0: np.ndarray

    def __post_init__(self):
        a2, a1, a0 = (as_complex_matrix(x) for x in (self.a2, self.a1, self.a0))
        if not (a2.shape == a1.shape == a0.shape):
            raise ValueError(
                f"pencil coefficient shapes disagree: {a2.shape}, {a1.shape}, {a0.shape}"
            )
        object.__setattr__(self, "a2", a2)
        object.__setattr__(self, "a1", a1)
        object.__setattr__(self, "a0", a0)

    @property
    def n(self) -> int:
        return self.a0.shape[0]

    def evaluate(self, lam: complex) -> np.ndarray:
        return lam * lam * self.a2 + lam * self.a1 + self.a0

    def companion(self) -> np.ndarray:
        """First companion form ``[[0, I], [-a0, -a1]]`` of the monic pencil."""
        n = self.n
        if np.array_equal(self.a2, np.eye(n)):
            a1, a0 = self.a1, self.a0
        else:
            a1 = np.linalg.solve(self.a2, self.a1)
            a0 = np.linalg.solve(self.a2, self.a0)
        c = np.zeros((2 * n, 2 * n), dtype=complex)
        c[:n, n:] = np.eye(n)
        c[n:, :n] = -a0
        c[n:, n:] = -a1
        return c


def _hessenberg(a: list[list[complex]]) -> None:
    """In-place Householder reduction to upper Hessenberg form."""
    n = len(a)
    for k in range(n - 2):
        x = [a[i][k] for i in range(k + 1, n)]
        alpha = math.sqrt(sum(abs(v) ** 2 for v in x))
        if alpha == 0.0:
            continue
        x0 = x[0]
        phase = x0 / abs(x0) if x0 != 0 else 1.0
        v = list(x)
        v[0] = x0 + phase * alpha
        vnorm2 = sum(abs(c) ** 2 for c in v)
        if vnorm2 == 0.0:
            continue
        beta = 2.0 / vnorm2
        # rows: a <- (I - beta v v^H) a
        for j in range(k, n):
            s = sum(v[i].conjugate() * a[k + 1 + i][j] for i in range(len(v))) * beta
            if s != 0:
                for i in range(len(v)):
                    a[k + 1 + i][j] -= v[i] * s
        # cols: a <- a (I - beta v v^H)
        for i in range(n):
            row = a[i]
            s = sum(row[k + 1 + j] * v[j] for j in range(len(v))) * beta
            if s != 0:
                for j in range(len(v)):
                    row[k + 1 + j] -= s * v[j].conjugate()
        for i in range(k + 2, n):
            a[i][k] = 0j


def _eig2(a: complex, b: complex, c: complex, d: complex) -> tuple[complex, complex]:
    half_tr = 0.5 * (a + d)
    disc = cmath.sqrt((0.5 * (a - d)) ** 2 + b * c)
    l1 = half_tr + disc
    l2 = half_tr - disc
    # the smaller root via the determinant avoids cancellation
    det = a * d - b * c
    if abs(l1) >= abs(l2) and l1 != 0:
        l2 = det / l1
    elif l2 != 0:
        l1 = det / l2
    return l1, l2


def _hqr(h: list[list[complex]], tol: float, max_iter: int) -> list[complex]:
    n = len(h)
    scale = math.sqrt(sum(abs(x) ** 2 for row in h for x in row)) or 1.0
    eigs: list[complex] = [0j] * n
    hi = n - 1
    its = 0
    total = 0
    while hi >= 0:
        if hi == 0:
            eigs[0] = h[0][0]
            break
        l = hi
        while l > 0:
            s = abs(h[l][l - 1])
            d = abs(h[l - 1][l - 1]) + abs(h[l][l])
            if d == 0.0:
                d = scale
            if s <= tol * d or s <= 1e-300:
                h[l][l - 1] = 0j
                break
            l -= 1
        if l == hi:
            eigs[hi] = h[hi][hi]
            hi -= 1
            its = 0
            continue
        if l == hi - 1:
            eigs[hi - 1], eigs[hi] = _eig2(h[hi - 1][hi - 1], h[hi - 1][hi], h[hi][hi - 1], h[hi][hi])
            hi -= 2
            its = 0
            continue
        if total >= max_iter:
            raise ConvergenceError(
                f"QR iteration did not converge after {total} iterations "
                f"({hi + 1} eigenvalues unresolved)",
                iterations=total,
                unconverged=hi + 1,
            )
        its += 1
        total += 1
        if its % 10 == 0:
            # exceptional shift breaks cycles
            mu = h[hi][hi] + 0.75 * abs(h[hi][hi - 1]) * cmath.exp(1j * its)
        else:
            e1, e2 = _eig2(h[hi - 1][hi - 1], h[hi - 1][hi], h[hi][hi - 1], h[hi][hi])
            mu = e1 if abs(e1 - h[hi][hi]) <= abs(e2 - h[hi][hi]) else e2
        for k in range(l, hi + 1):
            h[k][k] -= mu
        rots = []
        for k in range(l, hi):
            x, y = h[k][k], h[k + 1][k]
            r = math.hypot(abs(x), abs(y))
            if r == 0.0:
                c, s = 1.0, 0j
            else:
                c = abs(x) / r
                s = (x / abs(x) if x != 0 else 1.0) * y.conjugate() / r
            rots.append((c, s))
            rk, rk1 = h[k], h[k + 1]
            for j in range(k, hi + 1):
                t1, t2 = rk[j], rk1[j]
                rk[j] = c * t1 + s * t2
                rk1[j] = -s.conjugate() * t1 + c * t2
        for idx, k in enumerate(range(l, hi)):
            c, s = rots[idx]
            for i in range(l, min(k + 2, hi) + 1):
                row = h[i]
                t1, t2 = row[k], row[k + 1]
                row[k] = c * t1 + s.conjugate() * t2
                row[k + 1] = -s * t1 + c * t2
        for k in range(l, hi + 1):
            h[k][k] += mu
    return eigs


def _merge_clusters(a: np.ndarray, eigs: list[complex], cluster_tol: float, resid_tol: float) -> list[complex]:
    norm = float(np.linalg.norm(a))
    radius = cluster_tol * max(norm, 1.0)
    n = len(eigs)
    label = list(range(n))

    def find(i):
        while label[i] != i:
            label[i] = label[label[i]]
            i = label[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(eigs[i] - eigs[j]) <= radius:
                label[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    out = list(eigs)
    eye = np.eye(a.shape[0])
    for members in groups.values():
        if len(members) < 2:
            continue
        mean = sum(eigs[i] for i in members) / len(members)
        smin = np.linalg.svd(a - mean * eye, compute_uv=False)[-1]
        if smin <= resid_tol * max(norm, 1e-300):
            for i in members:
                out[i] = mean
    return out


def eigenvalues(
    m,
    *,
    tol: float = 1e-12,
    max_iter: int | None = None,
    cluster_tol: float = 1e-5,
    residual_tol: float = 1e-12,
) -> np.ndarray:
    """All eigenvalues of a small dense complex matrix, in no particular order.

    Args:
        m: square array-like, dimension 1..16, finite entries.
        tol: relative size of a subdiagonal entry below which it is deflated.
        max_iter: total QR iteration cap; defaults to ``100 * n``.
        cluster_tol: radius (relative to ``||m||_F``) within which computed
            eigenvalues are considered one cluster.
        residual_tol: a cluster is collapsed to its mean only when the
            smallest singular value of ``m - mean*I`` is below
            ``residual_tol * ||m||_F``.

    Raises:
        ConvergenceError: the iteration cap was reached.
        ValueError: bad shape or non-finite input.
    """
    a = as_complex_matrix(m)
    n = a.shape[0]
    if max_iter is None:
        max_iter = 100 * n
    h = [[complex(x) for x in row] for row in a.tolist()]
    _hessenberg(h)
    eigs = _hqr(h, tol, max_iter)
    if n > 1 and cluster_tol > 0:
        eigs = _merge_clusters(a, eigs, cluster_tol, residual_tol)
    return np.array(eigs, dtype=complex)


def quad_eigenvalues(p: QuadraticPencil, **kwargs) -> np.ndarray:
    """The ``2n`` roots of ``det(lam**2 a2 + lam a1 + a0) = 0``.

    Solved through the first companion linearization
    ``[[0, I], [-a0, -a1]]`` (after normalizing ``a2`` to the identity).
    Keyword arguments are forwarded to :func:`eigenvalues`.
    """
    return eigenvalues(p.companion(), **kwargs)


def max_abs_eigenvalue(eigs: Sequence[complex]) -> float:
    """Spectral radius of a list of eigenvalues."""
    eigs = list(eigs)
    if not eigs:
        raise ValueError("empty eigenvalue sequence")
    return max(abs(complex(e)) for e in eigs)


def min_residual(m, lam: complex) -> float:
    """``min_v ||(m - lam I) v|| / ||v||``, the smallest singular value."""
    a = as_complex_matrix(m)
    return float(np.linalg.svd(a - lam * np.eye(a.shape[0]), compute_uv=False)[-1])
