"""Basis-selection cost functionals: sparsity, marginal entropy, kurtosis."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import AtomicMarginal, NotVolumePreserving
from .linalg import as_basis, format_float, is_volume_preserving, require_orthonormal
from .processes import (
    ATOM_TOL,
    Process,
    SpikeBatch,
    abs_moment_constant,
    central_moments,
    gaussian_mixture_entropy,
    marginal_model,
    marginal_sigmas,
    simple_spike_marginal_entropy,
)

L0_RTOL = 1e-10


class Method(str, Enum):
    CLOSED_FORM = "ClosedForm"
    MONTE_CARLO = "MonteCarlo"
    EXACT_DISCRETE = "ExactDiscrete"


@dataclass(frozen=True)
class CostReport:
    cost_name: str
    value: float
    per_coordinate: tuple[float, ...]
    method: Method
    process: Process
    p: float | None = None
    sample_count: int | None = None
    seed: int | None = None
    stderr: float | None = None
    surrogate: float | None = None
    flags: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if (self.sample_count is not None) != (self.method is Method.MONTE_CARLO):
            raise ValueError("sample_count is required exactly for Monte Carlo reports")

    def to_dict(self) -> dict:
        d = {
            "cost_name": self.cost_name,
            "value": self.value,
            "p": self.p,
            "per_coordinate": list(self.per_coordinate),
            "method": self.method.value,
            "process": self.process.value,
            "sample_count": self.sample_count,
            "seed": self.seed,
            "stderr": self.stderr,
        }
        if self.surrogate is not None:
            d["surrogate"] = self.surrogate
        if self.flags:
            d["flags"] = list(self.flags)
        return d


def _report(name, per, method, process, **kw) -> CostReport:
    per = tuple(float(v) for v in per)
    return CostReport(name, float(math.fsum(per)), per, method, process, **kw)


def _check_p(p: float, upper: float = 2.0) -> tuple[str, ...]:
    if p < 0:
        raise ValueError("p must be >= 0")
    if p > upper:
        raise ValueError(f"p must be <= {upper:g}")
    return ("outside_bsb_range",) if p > 1.0 else ()


def _lp_terms(m: np.ndarray, p: float) -> np.ndarray:
    """Entrywise ``|m|^p``, with ``p = 0`` counting nonzeros relative to each column's max."""
    a = np.abs(m)
    if p == 0:
        colmax = np.max(a, axis=0, keepdims=True)
        return (a > L0_RTOL * colmax).astype(np.float64)
    return a**p


def cost_lp_closed(b, p: float, process=Process.GENERALIZED) -> CostReport:
    """Expected ``||B^{-1} X||_p^p`` in closed form.

    Simple spike: ``(1/n) sum_ij |(B^{-1})_ij|^p``. Generalized spike:
    ``E|Z|^p * (1/n) sum_ij sigma_ij^p`` with ``sigma`` the scaled cofactors.
    ``p = 0`` counts nonzero coordinates. ``per_coordinate[j]`` is the
    contribution of output coordinate ``j``.
    """
    flags = _check_p(p)
    process = Process.parse(process)
    b = as_basis(b)
    n = b.n
    if process is Process.SIMPLE:
        # column i of B^{-1} is the image of e_i; coordinate j reads row j
        per = _lp_terms(b.inverse, p).sum(axis=1) / n
    else:
        sig = marginal_sigmas(b)  # sig[i, j] = |(B^{-1})_{ji}|
        const = 1.0 if p == 0 else abs_moment_constant(p)
        per = const * _lp_terms(sig.T, p).sum(axis=1) / n
    return _report("Cp", per, Method.CLOSED_FORM, process, p=float(p), flags=flags)


def cost_lp_monte_carlo(b, p: float, samples: SpikeBatch) -> CostReport:
    """Sample mean of ``||B^{-1} x||_p^p`` over ``samples``, with its standard error."""
    flags = _check_p(p)
    if len(samples) == 0:
        raise ValueError("empty sample list")
    y = samples.transform(b)
    a = np.abs(y)
    if p == 0:
        terms = (a > L0_RTOL * np.max(a, axis=1, keepdims=True)).astype(np.float64)
    else:
        terms = a**p
    per_sample = terms.sum(axis=1)
    count = per_sample.size
    stderr = float(np.std(per_sample, ddof=1) / math.sqrt(count)) if count > 1 else float("nan")
    return _report("Cp", terms.mean(axis=0), Method.MONTE_CARLO, samples.process, p=float(p),
                   sample_count=count, seed=samples.seed, stderr=stderr, flags=flags)


def kurtosis_per_coordinate(b) -> np.ndarray:
    b = as_basis(b)
    return np.array([central_moments(b, j)[2] for j in range(b.n)])


def kurtosis_bracket(b) -> float:
    """``(3/n) sum_j (sum_i D_ij^4 - (1/n)(sum_i D_ij^2)^2)`` on raw cofactors ``D``.

    On volume-preserving bases this is the sum of marginal kurtoses, i.e.
    ``-cost_kurtosis(b).value``.
    """
    d = as_basis(b).cofactors
    n = d.shape[0]
    d2 = d * d
    return float(3.0 / n * np.sum(np.sum(d2 * d2, axis=0) - np.sum(d2, axis=0) ** 2 / n))


def cost_kurtosis(b) -> CostReport:
    """``C_kappa = -sum_j kappa(Y_j)`` for the generalized spike process."""
    kappa = kurtosis_per_coordinate(b)
    return _report("Ckappa", -kappa, Method.CLOSED_FORM, Process.GENERALIZED)


def cost_kurtosis_orthonormal(b) -> CostReport:
    """Kurtosis cost through ``sum_ij b_ij^4``, valid on O(n) only.

    ``surrogate`` is ``sum b_ij^4`` (at most ``n``, attained only at signed
    permutations) and ``value = -(3/n)(surrogate - 1)``.
    """
    b = require_orthonormal(b)
    n = b.n
    m4 = b.entries**4
    per = -(3.0 / n) * (m4.sum(axis=0) - 1.0 / n)
    return _report("Ckappa", per, Method.CLOSED_FORM, Process.GENERALIZED,
                   surrogate=float(m4.sum()))


def kurtosis_surrogate(b) -> float:
    return float(np.sum(np.asarray(b, dtype=np.float64) ** 4))


def cost_marginal_entropy(b, process=Process.SIMPLE) -> CostReport:
    """Sum of marginal entropies in bits.

    Simple spike: exact discrete entropies. Generalized spike: quadrature
    of ``-f log2 f`` on the exact Gaussian-mixture marginals; raises
    :class:`AtomicMarginal` when any marginal has a point mass at 0.
    """
    process = Process.parse(process)
    b = as_basis(b)
    if process is Process.SIMPLE:
        per = [simple_spike_marginal_entropy(b, j) for j in range(b.n)]
        return _report("CH", per, Method.EXACT_DISCRETE, process)
    models = [marginal_model(b, j) for j in range(b.n)]
    atomic = [m.coordinate for m in models if m.has_atom]
    if atomic:
        raise AtomicMarginal(
            f"coordinates {atomic} have an atom at 0 (a scaled cofactor is below {ATOM_TOL:g}); "
            "differential entropy is undefined"
        )
    per = [gaussian_mixture_entropy(m) for m in models]
    return _report("CH", per, Method.CLOSED_FORM, process)


def spacing_entropy(x, m: int | None = None) -> float:
    """Vasicek m-spacing estimate of differential entropy, in bits."""
    x = np.sort(np.asarray(x, dtype=np.float64))
    n = x.size
    if n < 4:
        raise ValueError("need at least 4 samples")
    if m is None:
        m = max(1, int(round(math.sqrt(n))))
    hi = x[np.minimum(np.arange(n) + m, n - 1)]
    lo = x[np.maximum(np.arange(n) - m, 0)]
    gaps = np.maximum(hi - lo, 1e-300)
    return float(np.mean(np.log2(n / (2.0 * m) * gaps)))


def marginal_entropy_spacing(b, samples: SpikeBatch, m: int | None = None) -> CostReport:
    """Sample-based cross-check of the generalized-spike ``C_H`` (biased at finite ``m``)."""
    if len(samples) == 0:
        raise ValueError("empty sample list")
    y = samples.transform(b)
    per = [spacing_entropy(y[:, j], m) for j in range(y.shape[1])]
    return _report("CH", per, Method.MONTE_CARLO, samples.process,
                   sample_count=len(samples), seed=samples.seed)


def mutual_information_simple(b) -> float:
    """``sum_j H(Y_j) - log2 n`` for the simple spike under a volume-preserving basis."""
    b = as_basis(b)
    if not is_volume_preserving(b):
        raise NotVolumePreserving(f"|det B| = {abs(b.det):.12g} != 1")
    return cost_marginal_entropy(b, Process.SIMPLE).value - math.log2(b.n)


def evaluate(b, cost: str, process=Process.GENERALIZED, p: float = 1.0) -> CostReport:
    """Closed-form/exact cost by short name (``cp``, ``ckappa``, ``ch``)."""
    key = cost.lower()
    if key == "cp":
        return cost_lp_closed(b, p, process)
    if key == "ckappa":
        return cost_kurtosis(b)
    if key == "ch":
        return cost_marginal_entropy(b, process)
    raise ValueError(f"unknown cost {cost!r}")


def write_batch_csv(rows, path) -> None:
    """Write ``(basis_id, CostReport)`` pairs as basis_id,cost_name,p,value,method,stderr."""
    def fmt(v):
        return "" if v is None else format_float(v)

    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["basis_id", "cost_name", "p", "value", "method", "stderr"])
        for basis_id, rep in rows:
            w.writerow([basis_id, rep.cost_name, fmt(rep.p), fmt(rep.value),
                        rep.method.value, fmt(rep.stderr)])
