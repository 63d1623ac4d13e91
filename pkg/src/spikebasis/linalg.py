"""Dense small-matrix primitives: bases, cofactors, reference bases.

A basis is an invertible n x n matrix whose *columns* are the basis
vectors; coordinates of a signal ``x`` in that basis are ``B^{-1} x``.
Indices are 0-based throughout.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import DegenerateParameters, NotOrthonormal, SingularBasis, SingularMinor

# Minor-determinant cofactors up to this size; adjugate via the inverse above it.
MINOR_CUTOFF = 12
SINGULAR_RTOL = 1e-12


class Basis:
    """Invertible square matrix with lazily cached inverse and cofactors.

    Construction fails with :class:`SingularBasis` when
    ``|det| < 1e-12 * max|b_ij|**n``. The stored arrays are read-only.
    """

    def __init__(self, entries, name: str | None = None):
        a = np.array(entries, dtype=np.float64)
        if a.ndim == 0:
            a = a.reshape(1, 1)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise ValueError(f"basis must be a non-empty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("basis entries must be finite")
        n = a.shape[0]
        det = float(np.linalg.det(a))
        scale = float(np.max(np.abs(a)))
        if scale == 0.0 or abs(det) < SINGULAR_RTOL * scale**n:
            raise SingularBasis(f"matrix is singular to working precision (det={det:.3e})")
        a.setflags(write=False)
        self._entries = a
        self._det = det
        self.name = name

    @property
    def n(self) -> int:
        return self._entries.shape[0]

    @property
    def entries(self) -> np.ndarray:
        return self._entries

    @property
    def det(self) -> float:
        return self._det

    @cached_property
    def inverse(self) -> np.ndarray:
        inv = np.linalg.inv(self._entries)
        inv.setflags(write=False)
        return inv

    @cached_property
    def cofactors(self) -> np.ndarray:
        cof = _cofactor_matrix(self._entries, self.inverse, self._det)
        cof.setflags(write=False)
        return cof

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self._entries, dtype=dtype)

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"<Basis{label} n={self.n} det={self._det:.6g}>"

    def with_columns(self, permutation, signs=None) -> "Basis":
        """Return the basis with columns reordered and optionally negated."""
        m = self._entries[:, list(permutation)]
        if signs is not None:
            m = m * np.asarray(signs, dtype=np.float64)
        return Basis(m, name=self.name)

    def to_dict(self) -> dict:
        return {"n": self.n, "entries": self._entries.tolist()}


def as_basis(b) -> Basis:
    return b if isinstance(b, Basis) else Basis(b)


def _cofactor_matrix(a: np.ndarray, inv: np.ndarray, det: float) -> np.ndarray:
    n = a.shape[0]
    if n == 1:
        return np.ones((1, 1))
    if n > MINOR_CUTOFF:
        return det * inv.T
    idx = np.arange(n)
    minors = np.empty((n, n, n - 1, n - 1))
    for i in range(n):
        rows = idx[idx != i]
        for j in range(n):
            cols = idx[idx != j]
            minors[i, j] = a[np.ix_(rows, cols)]
    signs = (-1.0) ** np.add.outer(idx, idx)
    return signs * np.linalg.det(minors)


def _check_index(n: int, i: int, j: int) -> None:
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"cofactor index ({i}, {j}) out of range for n={n}")


def cofactor(b, i: int, j: int) -> float:
    """Signed minor ``(-1)**(i+j) * det(B without row i, column j)``."""
    b = as_basis(b)
    _check_index(b.n, i, j)
    return float(b.cofactors[i, j])


def cofactor_matrix(b) -> np.ndarray:
    return as_basis(b).cofactors


def verify_cofactor_identity(b, i: int, j: int) -> float:
    """Residual of ``b_ij - r^T (B^(i,j))^{-1} c = det(B) / cofactor_ij``.

    ``B^(i,j)`` is ``B`` with row ``i`` and column ``j`` deleted, ``r`` is row
    ``i`` without entry ``j`` and ``c`` is column ``j`` without entry ``i``.
    """
    b = as_basis(b)
    n = b.n
    _check_index(n, i, j)
    delta = cofactor(b, i, j)
    if abs(delta) < 1e-12:
        raise SingularMinor(f"cofactor ({i}, {j}) = {delta:.3e} vanishes")
    a = b.entries
    if n == 1:
        lhs = a[0, 0]
    else:
        keep_r = np.arange(n) != i
        keep_c = np.arange(n) != j
        minor = a[np.ix_(keep_r, keep_c)]
        row = a[i, keep_c]
        col = a[keep_r, j]
        lhs = a[i, j] - row @ np.linalg.solve(minor, col)
    return float(abs(lhs - b.det / delta))


class DictionaryClass(str, Enum):
    ORTHONORMAL = "Orthonormal"
    VOLUME_PRESERVING = "VolumePreserving"
    GENERAL_LINEAR = "GeneralLinear"

    def contains(self, b, tol: float = 1e-10) -> bool:
        b = as_basis(b)
        if self is DictionaryClass.ORTHONORMAL:
            return is_orthonormal(b, tol)
        if self is DictionaryClass.VOLUME_PRESERVING:
            return is_volume_preserving(b, tol)
        return True


def is_orthonormal(b, tol: float = 1e-10) -> bool:
    m = np.asarray(b, dtype=np.float64)
    return bool(np.max(np.abs(m.T @ m - np.eye(m.shape[0]))) <= tol)


def is_volume_preserving(b, tol: float = 1e-10) -> bool:
    return bool(abs(abs(as_basis(b).det) - 1.0) <= tol)


def require_orthonormal(b, tol: float = 1e-10) -> Basis:
    b = as_basis(b)
    if not is_orthonormal(b, tol):
        raise NotOrthonormal("basis is not orthonormal within %g" % tol)
    return b


def householder_reflector(n: int) -> Basis:
    """``I - (2/n) 1 1^T``: reflection about the zero-sum hyperplane."""
    if n < 2:
        raise ValueError("householder_reflector needs n >= 2")
    m = np.eye(n) - np.full((n, n), 2.0 / n)
    return Basis(m, name=f"householder{n}")


def walsh(n: int = 4) -> Basis:
    """Sylvester-ordered Walsh-Hadamard matrix, normalized; n a power of two."""
    if n < 1 or n & (n - 1):
        raise ValueError("walsh needs n to be a power of two")
    h = np.ones((1, 1))
    while h.shape[0] < n:
        h = np.block([[h, h], [h, -h]])
    return Basis(h / np.sqrt(n), name=f"walsh{n}")


def haar2() -> Basis:
    return Basis(np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0), name="haar2")


def reference_lsdb(n: int) -> Basis:
    """Least statistically-dependent orthonormal basis for the simple spike, n in {2, 3, 4}.

    For ``n >= 5`` the optimum is the standard basis or
    :func:`householder_reflector`, tied.
    """
    if n == 2:
        return haar2()
    if n == 3:
        s3, s6, s2 = np.sqrt(3.0), np.sqrt(6.0), np.sqrt(2.0)
        m = np.array(
            [
                [1 / s3, 1 / s6, 1 / s2],
                [1 / s3, 1 / s6, -1 / s2],
                [1 / s3, -2 / s6, 0.0],
            ]
        )
        return Basis(m, name="lsdb3")
    if n == 4:
        m = 0.5 * np.array(
            [[1, 1, 1, 1], [1, 1, -1, -1], [1, -1, 1, -1], [1, -1, -1, 1]], dtype=np.float64
        )
        return Basis(m, name="walsh4")
    raise ValueError(f"no explicit reference LSDB for n={n} (supported: 2, 3, 4)")


class GLPair(NamedTuple):
    analysis: Basis
    synthesis: Basis
    sl_pm: bool


def gl_lsdb_pair(a: float, b, c) -> GLPair:
    """Analysis/synthesis pair of the GL(n) LSDB family for the simple spike.

    ``b`` and ``c`` have length ``n - 1``. The analysis matrix has first row
    all ``a``; row ``k`` carries ``c_k`` on the diagonal and ``b_k``
    elsewhere. The synthesis matrix is its inverse, built from
    ``d_k = 1/(c_k - b_k)``. Use ``synthesis`` as the basis when evaluating
    costs, since coordinates are ``analysis @ x``.
    """
    b = np.atleast_1d(np.asarray(b, dtype=np.float64))
    c = np.atleast_1d(np.asarray(c, dtype=np.float64))
    if b.shape != c.shape or b.ndim != 1:
        raise ValueError("b and c must be 1-D arrays of equal length")
    n = b.size + 1
    if n <= 2:
        raise ValueError("gl_lsdb_pair needs n > 2")
    if a == 0 or np.any(b == c):
        raise DegenerateParameters("need a != 0 and b_k != c_k for every k")
    d = 1.0 / (c - b)

    analysis = np.empty((n, n))
    analysis[0, :] = a
    for k in range(1, n):
        analysis[k, :] = b[k - 1]
        analysis[k, k] = c[k - 1]

    synthesis = np.zeros((n, n))
    synthesis[0, 0] = (1.0 + np.dot(b, d)) / a
    synthesis[0, 1:] = -d
    synthesis[1:, 0] = -b * d / a
    synthesis[1:, 1:] = np.diag(d)

    sl_pm = bool(abs(abs(a) - abs(np.prod(d))) <= 1e-10)
    return GLPair(Basis(analysis, name="gl_analysis"), Basis(synthesis, name="gl_synthesis"), sl_pm)


@dataclass(frozen=True)
class CanonicalForm:
    """``B ~ reference[:, permutation] * signs`` with Frobenius ``residual``."""

    permutation: tuple[int, ...]
    signs: tuple[int, ...]
    residual: float

    def to_dict(self) -> dict:
        return {
            "permutation": list(self.permutation),
            "signs": list(self.signs),
            "residual": self.residual,
        }


def canonicalize(b, reference) -> CanonicalForm:
    """Match columns of ``b`` to signed columns of ``reference`` greedily.

    Pairs are taken in order of decreasing absolute cosine similarity (ties
    to the lowest indices); column ``k`` of ``b`` is matched to reference
    column ``permutation[k]`` with sign ``signs[k]``.
    """
    m = np.asarray(b, dtype=np.float64)
    r = np.asarray(reference, dtype=np.float64)
    if m.shape != r.shape or m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("b and reference must be square matrices of the same size")
    n = m.shape[0]
    mn = m / np.maximum(np.linalg.norm(m, axis=0), 1e-300)
    rn = r / np.maximum(np.linalg.norm(r, axis=0), 1e-300)
    inner = mn.T @ rn
    score = np.abs(inner)

    perm = [-1] * n
    signs = [1] * n
    free_b = set(range(n))
    free_r = set(range(n))
    # Stable sort on -score keeps lowest (k, l) first among ties.
    order = np.argsort(-score, axis=None, kind="stable")
    for flat in order:
        k, l = divmod(int(flat), n)
        if k in free_b and l in free_r:
            perm[k] = l
            signs[k] = -1 if inner[k, l] < 0 else 1
            free_b.discard(k)
            free_r.discard(l)
            if not free_b:
                break
    target = r[:, perm] * np.asarray(signs, dtype=np.float64)
    residual = float(np.linalg.norm(m - target))
    return CanonicalForm(tuple(perm), tuple(signs), residual)


# ---------------------------------------------------------------------------
# Matrix I/O
# ---------------------------------------------------------------------------


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def write_basis_csv(b, path) -> None:
    m = np.asarray(b, dtype=np.float64)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in m:
            w.writerow([format_float(v) for v in row])


def write_basis_json(b, path) -> None:
    m = np.asarray(b, dtype=np.float64)
    rows = ",\n    ".join("[" + ", ".join(format_float(v) for v in row) + "]" for row in m)
    text = '{\n  "n": %d,\n  "entries": [\n    %s\n  ]\n}\n' % (m.shape[0], rows)
    Path(path).write_text(text, encoding="utf-8")


def read_basis(path) -> Basis:
    """Load a basis from ``.json`` (``{"n":..., "entries":[[...]]}``) or CSV."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        data = json.loads(text)
        m = np.asarray(data["entries"], dtype=np.float64)
        if "n" in data and m.shape != (int(data["n"]), int(data["n"])):
            raise ValueError(f"{path}: 'n'={data['n']} does not match entries shape {m.shape}")
    else:
        rows = [r for r in csv.reader(text.splitlines()) if r and any(f.strip() for f in r)]
        m = np.asarray([[float(f) for f in r] for r in rows], dtype=np.float64)
    return Basis(m, name=path.stem)
