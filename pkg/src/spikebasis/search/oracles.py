"""Independent oracles: 2-D grid search, the SL± kurtosis divergence family,
the doubly-stochastic bound and random dictionary ensembles."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from ..costs import cost_kurtosis, cost_kurtosis_orthonormal, evaluate
from ..errors import AtomicMarginal, DegenerateParameters
from ..linalg import Basis, as_basis, canonicalize, require_orthonormal
from ..processes import Process


def rotation2(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class GridSearch:
    theta_star: float
    cost_star: float
    thetas: np.ndarray
    values: np.ndarray  # NaN where the cost is undefined


def brute_force_2d(cost: str, grid_points: int = 1000, process=Process.GENERALIZED,
                   p: float = 1.0) -> GridSearch:
    """Evaluate ``cost(R(theta))`` on ``theta_k = k (pi/2) / G``, ``k < G``.

    ``[0, pi/2)`` is a fundamental domain for the column permutation and
    sign symmetries of every cost. The argmin ignores undefined points.
    """
    if grid_points < 1000:
        raise ValueError("grid_points must be >= 1000")
    thetas = np.arange(grid_points) * (0.5 * math.pi / grid_points)
    vals = np.empty(grid_points)
    for k, t in enumerate(thetas):
        try:
            vals[k] = evaluate(Basis(rotation2(t)), cost, process, p).value
        except AtomicMarginal:
            vals[k] = np.nan
    k = int(np.nanargmin(vals))
    return GridSearch(float(thetas[k]), float(vals[k]), thetas, vals)


# ---------------------------------------------------------------------------
# Kurtosis over SL±: the diagonal family diag(a, 1/a, 1, ..., 1)
# ---------------------------------------------------------------------------


def laplace_det(m) -> float:
    """Determinant by first-row Laplace expansion (exponential time; oracle use only)."""
    m = np.asarray(m, dtype=np.float64)
    k = m.shape[0]
    if k == 0:
        return 1.0
    if k == 1:
        return float(m[0, 0])
    total = 0.0
    for j in range(k):
        if m[0, j] != 0.0:
            minor = np.delete(m[1:], j, axis=1)
            total += (-1) ** j * m[0, j] * laplace_det(minor)
    return total


def laplace_cofactors(m) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    k = m.shape[0]
    out = np.empty((k, k))
    for i in range(k):
        for j in range(k):
            minor = np.delete(np.delete(m, i, axis=0), j, axis=1)
            out[i, j] = (-1) ** (i + j) * laplace_det(minor)
    return out


def kurtosis_sum_oracle(m) -> float:
    """``sum_j kappa_j`` straight from Laplace cofactors, sharing no code with :mod:`costs`."""
    m = np.asarray(m, dtype=np.float64)
    n = m.shape[0]
    d = laplace_cofactors(m)
    det = laplace_det(m)
    total = 0.0
    for j in range(n):
        s2 = sum((d[i, j] / det) ** 2 for i in range(n))
        s4 = sum((d[i, j] / det) ** 4 for i in range(n))
        total += 3.0 * s4 / n - 3.0 * (s2 / n) ** 2
    return float(total)


def sl_family(n: int, a: float) -> Basis:
    if a == 0:
        raise DegenerateParameters("a must be nonzero")
    if n < 2:
        raise ValueError("n must be >= 2")
    d = np.ones(n)
    d[0], d[1] = a, 1.0 / a
    return Basis(np.diag(d), name=f"diag({a:g},1/{a:g},1...)")


def sl_family_scale(n: int) -> float:
    """Factor by which ``C_kappa`` on the family differs from ``-(a^4 + a^-4 + n - 2)``."""
    return 3.0 * (n - 1) / n**2


@dataclass(frozen=True)
class DivergenceRow:
    a: float
    det: float
    cost: float
    oracle: float
    family_form: float  # -(a^4 + a^-4 + n - 2)
    scaled_form: float  # sl_family_scale(n) * family_form

    @property
    def agrees(self) -> bool:
        return abs(self.cost - self.oracle) <= 1e-9 and abs(self.scaled_form - self.oracle) <= 1e-9

    def to_dict(self) -> dict:
        return {"a": self.a, "det": self.det, "cost": self.cost, "oracle": self.oracle,
                "family_form": self.family_form, "scaled_form": self.scaled_form,
                "agrees": self.agrees}


@dataclass(frozen=True)
class Divergence:
    n: int
    scale: float
    rows: tuple

    @property
    def all_agree(self) -> bool:
        return all(r.agrees for r in self.rows)

    @property
    def decreasing(self) -> bool:
        """Cost strictly decreases as ``a`` grows over the ``a > 1`` rows."""
        big = sorted((r for r in self.rows if r.a > 1), key=lambda r: r.a)
        return all(u.cost > v.cost for u, v in zip(big, big[1:]))

    def to_dict(self) -> dict:
        return {"n": self.n, "scale": self.scale, "all_agree": self.all_agree,
                "decreasing": self.decreasing, "rows": [r.to_dict() for r in self.rows]}


def sl_divergence_demo(n: int, a_values) -> Divergence:
    """Kurtosis cost along ``diag(a, 1/a, 1, ..., 1)``, checked against a cofactor oracle.

    The cofactor oracle gives ``C_kappa = -3(n-1)/n^2 * (a^4 + a^-4 + n - 2)``;
    ``family_form`` is the unscaled bracket and ``scaled_form`` includes the
    factor. Both ``cost`` and ``scaled_form`` must match the oracle.
    """
    rows = []
    scale = sl_family_scale(n)
    for a in a_values:
        a = float(a)
        b = sl_family(n, a)
        if abs(abs(b.det) - 1.0) > 1e-12:
            raise AssertionError(f"|det| = {abs(b.det)!r} for a = {a!r}")
        form = -(a**4 + a**-4 + n - 2)
        rows.append(DivergenceRow(a, b.det, cost_kurtosis(b).value,
                                  -kurtosis_sum_oracle(b.entries), form, scale * form))
    return Divergence(n, scale, tuple(rows))


# ---------------------------------------------------------------------------
# Doubly-stochastic bound on O(n)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StochasticBound:
    surrogate: float
    bound: float
    is_signed_permutation: bool
    residual: float  # canonical distance to I_n

    @property
    def within_bound(self) -> bool:
        return self.surrogate <= self.bound + 1e-9

    @property
    def consistent(self) -> bool:
        """Bound holds, and reaching it implies a signed permutation."""
        return self.within_bound and (not self.is_signed_permutation or self.residual < 1e-6)


def doubly_stochastic_bound(b) -> StochasticBound:
    """``sum b_ij^4 <= n`` for orthonormal ``b``: ``(b_ij^2)`` is doubly stochastic."""
    b = require_orthonormal(b)
    n = b.n
    rep = cost_kurtosis_orthonormal(b)
    sur = rep.surrogate
    return StochasticBound(sur, float(n), sur > n - 1e-9, canonicalize(b, np.eye(n)).residual)


# ---------------------------------------------------------------------------
# Random dictionary members
# ---------------------------------------------------------------------------


def random_orthogonal(n: int, rng) -> np.ndarray:
    """Haar-distributed O(n) element (QR of a Gaussian matrix, signs fixed by diag(R))."""
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def random_sl_pm(n: int, rng, spread: float = 0.5) -> np.ndarray:
    """``Q1 diag(e^z) Q2`` with ``sum z = 0``, so ``|det| = 1`` up to rounding."""
    z = spread * rng.standard_normal(n)
    z -= z.mean()
    m = random_orthogonal(n, rng) * np.exp(z) @ random_orthogonal(n, rng)
    return m / abs(np.linalg.det(m)) ** (1.0 / n)


def conjecture_scan(n: int, radii, directions: int = 20, seed: int = 0) -> list[dict]:
    """Generalized-spike ``C_H`` on spheres ``expm(r A)`` around the standard basis.

    Exploratory only: ``C_H`` is undefined at the standard basis itself, so
    the scan reports how the cost behaves on atom-free neighbourhoods.
    """
    rng = np.random.default_rng(seed)
    dirs = []
    for _ in range(directions):
        a = rng.standard_normal((n, n))
        a = a - a.T
        dirs.append(a / np.linalg.norm(a))
    rows = []
    for r in radii:
        vals = []
        for a in dirs:
            try:
                vals.append(evaluate(Basis(expm(float(r) * a)), "ch", Process.GENERALIZED).value)
            except AtomicMarginal:
                pass
        rows.append({"radius": float(r), "evaluated": len(vals),
                     "mean": float(np.mean(vals)) if vals else math.nan,
                     "min": float(np.min(vals)) if vals else math.nan})
    return rows


def ensemble_min_cost(make, count: int, cost: str, process, p: float = 1.0) -> float:
    """Smallest cost over ``count`` bases produced by ``make()``."""
    return min(evaluate(as_basis(make()), cost, process, p).value for _ in range(count))
