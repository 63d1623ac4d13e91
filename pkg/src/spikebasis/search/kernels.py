"""Hot loops of the orthogonal-group search.

Two interchangeable implementations of every kernel:

* ``*_numba`` -- explicit loops compiled with ``numba.njit``;
* ``*_numpy`` -- vectorized numpy with the same arithmetic.

The module-level names (``sweep``, ``orth_cost``, ...) point at the backend
chosen by ``SPIKEBASIS_BACKEND``. All costs here assume an orthonormal
matrix ``b``: then ``B^{-1} = B^T`` and the cofactors are ``+-b_ij``, so
coordinate ``j`` of the transformed process reads column ``j`` and every
cost is a sum of per-column terms ``g(b[:, j])``:

``KIND_LP``       ``g = sum |v_i|^p``;  cost ``scale * G / n``
``KIND_KAPPA``    ``g = sum v_i^4``;    cost ``-(3/n)(G - 1)``
``KIND_SOFT_H``   ``g = -sum_i log2(mean_k exp(-(v_i - v_k)^2 / 2h^2))``;
                  cost ``G / n``. A Gaussian-kernel relaxation of the
                  simple-spike marginal entropy: exact whenever values in a
                  column either coincide or sit many ``h`` apart.

with ``G = sum_j g(b[:, j])``.
"""

import math

import numpy as np

from .._accel import BACKEND, njit

KIND_LP = 0
KIND_KAPPA = 1
KIND_SOFT_H = 2

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
TWO_PI = 2.0 * math.pi
# Column-sign and column-swap invariance make every plane objective pi/2-periodic.
PERIOD = 0.5 * math.pi


def givens_pairs(n):
    """Plane indices ``(p, q)``, ``p < q``, in lexicographic order."""
    return np.array([(p, q) for p in range(n) for q in range(p + 1, n)], dtype=np.int64).reshape(-1, 2)


# ---------------------------------------------------------------------------
# numba path
# ---------------------------------------------------------------------------


@njit
def _rotate_cols(m, p, q, c, s):
    # m <- m @ G with G[p,p]=c, G[p,q]=-s, G[q,p]=s, G[q,q]=c
    for r in range(m.shape[0]):
        a = m[r, p]
        b = m[r, q]
        m[r, p] = c * a + s * b
        m[r, q] = -s * a + c * b


@njit
def givens_matrix_numba(angles, pairs, n):
    """``G(pairs[0], angles[0]) @ G(pairs[1], angles[1]) @ ...``."""
    m = np.eye(n)
    for k in range(angles.shape[0]):
        _rotate_cols(m, pairs[k, 0], pairs[k, 1], math.cos(angles[k]), math.sin(angles[k]))
    return m


@njit
def _col_term(v, kind, p, h):
    n = v.shape[0]
    s = 0.0
    if kind == KIND_LP:
        for i in range(n):
            s += abs(v[i]) ** p
        return s
    if kind == KIND_KAPPA:
        for i in range(n):
            x = v[i] * v[i]
            s += x * x
        return s
    inv2h2 = 0.5 / (h * h)
    for i in range(n):
        dens = 0.0
        for k in range(n):
            d = v[i] - v[k]
            dens += math.exp(-d * d * inv2h2)
        s -= math.log2(dens / n)
    return s


@njit
def _finish(total, n, kind, scale):
    if kind == KIND_LP:
        return scale * total / n
    if kind == KIND_KAPPA:
        return -(3.0 / n) * (total - 1.0)
    return total / n


@njit
def orth_cost_numba(b, kind, p, scale, h):
    n = b.shape[0]
    total = 0.0
    for j in range(n):
        total += _col_term(b[:, j], kind, p, h)
    return _finish(total, n, kind, scale)


@njit
def _plane_cost(bp, bq, theta, rest, wp, wq, kind, p, scale, h):
    c = math.cos(theta)
    s = math.sin(theta)
    for i in range(bp.shape[0]):
        wp[i] = c * bp[i] + s * bq[i]
        wq[i] = -s * bp[i] + c * bq[i]
    total = rest + _col_term(wp, kind, p, h) + _col_term(wq, kind, p, h)
    return _finish(total, bp.shape[0], kind, scale)


@njit
def _golden_numba(bp, bq, lo, hi, tol, rest, wp, wq, kind, p, scale, h):
    c = hi - INV_PHI * (hi - lo)
    d = lo + INV_PHI * (hi - lo)
    fc = _plane_cost(bp, bq, c, rest, wp, wq, kind, p, scale, h)
    fd = _plane_cost(bp, bq, d, rest, wp, wq, kind, p, scale, h)
    while hi - lo > tol:
        if fc < fd:
            hi = d
            d = c
            fd = fc
            c = hi - INV_PHI * (hi - lo)
            fc = _plane_cost(bp, bq, c, rest, wp, wq, kind, p, scale, h)
        else:
            lo = c
            c = d
            fc = fd
            d = lo + INV_PHI * (hi - lo)
            fd = _plane_cost(bp, bq, d, rest, wp, wq, kind, p, scale, h)
    if fc < fd:
        return c, fc
    return d, fd


@njit
def sweep_numba(b, pairs, kind, p, scale, h, n_grid, local_width, angle_tol):
    """One Jacobi sweep: for each plane ``(p, q)`` minimize over ``b <- b @ G(theta)``.

    Each 1-D problem scans ``n_grid`` points of the period, refines the best
    bracket by golden section, and also refines ``[-local_width,
    local_width]`` around the current point when ``local_width > 0``. A
    rotation is applied only if it strictly lowers the cost. ``b`` is
    updated in place. Returns ``(cost, largest |theta| applied)``.
    """
    n = b.shape[0]
    terms = np.empty(n)
    for j in range(n):
        terms[j] = _col_term(b[:, j], kind, p, h)
    wp = np.empty(n)
    wq = np.empty(n)
    bp = np.empty(n)
    bq = np.empty(n)
    step = PERIOD / n_grid
    max_move = 0.0
    for k in range(pairs.shape[0]):
        pp = pairs[k, 0]
        qq = pairs[k, 1]
        for i in range(n):
            bp[i] = b[i, pp]
            bq[i] = b[i, qq]
        rest = 0.0
        for j in range(n):
            if j != pp and j != qq:
                rest += terms[j]
        f0 = _finish(rest + terms[pp] + terms[qq], n, kind, scale)
        best_t = 0.0
        best_f = f0
        g_t = 0.0
        g_f = f0
        for g in range(n_grid):
            t = -0.5 * PERIOD + g * step
            f = _plane_cost(bp, bq, t, rest, wp, wq, kind, p, scale, h)
            if f < g_f:
                g_f = f
                g_t = t
        t1, f1 = _golden_numba(bp, bq, g_t - step, g_t + step, angle_tol, rest, wp, wq,
                               kind, p, scale, h)
        if f1 < best_f:
            best_f = f1
            best_t = t1
        if local_width > 0.0:
            t2, f2 = _golden_numba(bp, bq, -local_width, local_width, angle_tol, rest, wp, wq,
                                   kind, p, scale, h)
            if f2 < best_f:
                best_f = f2
                best_t = t2
        if best_f < f0:
            c = math.cos(best_t)
            s = math.sin(best_t)
            _rotate_cols(b, pp, qq, c, s)
            terms[pp] = _col_term(b[:, pp], kind, p, h)
            terms[qq] = _col_term(b[:, qq], kind, p, h)
            if abs(best_t) > max_move:
                max_move = abs(best_t)
    total = 0.0
    for j in range(n):
        total += terms[j]
    return _finish(total, n, kind, scale), max_move


@njit
def batch_cost_numba(mats, kind, p, scale, h):
    out = np.empty(mats.shape[0])
    for m in range(mats.shape[0]):
        out[m] = orth_cost_numba(mats[m], kind, p, scale, h)
    return out


# ---------------------------------------------------------------------------
# numpy path
# ---------------------------------------------------------------------------


def givens_matrix_numpy(angles, pairs, n):
    m = np.eye(n)
    for (p, q), t in zip(pairs, angles):
        c, s = math.cos(t), math.sin(t)
        m[:, [p, q]] = m[:, [p, q]] @ np.array([[c, -s], [s, c]])
    return m


def _col_terms_numpy(v, kind, p, h):
    """Column terms for ``v`` of shape ``(..., n_rows)``."""
    if kind == KIND_LP:
        return np.sum(np.abs(v) ** p, axis=-1)
    if kind == KIND_KAPPA:
        return np.sum(v**4, axis=-1)
    d = v[..., :, None] - v[..., None, :]
    dens = np.exp(-0.5 * (d / h) ** 2).mean(axis=-1)
    return -np.sum(np.log2(dens), axis=-1)


def _finish_numpy(total, n, kind, scale):
    if kind == KIND_LP:
        return scale * total / n
    if kind == KIND_KAPPA:
        return -(3.0 / n) * (total - 1.0)
    return total / n


def orth_cost_numpy(b, kind, p, scale, h):
    """Vectorized cost; ``b`` may carry leading batch dimensions."""
    b = np.asarray(b, dtype=np.float64)
    cols = np.swapaxes(b, -1, -2)
    total = _col_terms_numpy(cols, kind, p, h).sum(axis=-1)
    return _finish_numpy(total, b.shape[-1], kind, scale)


def _golden_numpy(f, lo, hi, tol):
    c = hi - INV_PHI * (hi - lo)
    d = lo + INV_PHI * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - INV_PHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + INV_PHI * (hi - lo)
            fd = f(d)
    return (c, fc) if fc < fd else (d, fd)


def sweep_numpy(b, pairs, kind, p, scale, h, n_grid, local_width, angle_tol):
    n = b.shape[0]
    terms = _col_terms_numpy(b.T, kind, p, h)
    step = PERIOD / n_grid
    grid = -0.5 * PERIOD + step * np.arange(n_grid)
    cg, sg = np.cos(grid)[:, None], np.sin(grid)[:, None]
    max_move = 0.0
    for pp, qq in pairs:
        bp, bq = b[:, pp].copy(), b[:, qq].copy()
        rest = terms.sum() - terms[pp] - terms[qq]
        f0 = _finish_numpy(rest + terms[pp] + terms[qq], n, kind, scale)

        def line(t, bp=bp, bq=bq, rest=rest):
            c, s = math.cos(t), math.sin(t)
            pair = _col_terms_numpy(np.stack([c * bp + s * bq, -s * bp + c * bq]), kind, p, h)
            return float(_finish_numpy(rest + pair.sum(), n, kind, scale))

        fg = _finish_numpy(rest + _col_terms_numpy(cg * bp + sg * bq, kind, p, h)
                           + _col_terms_numpy(-sg * bp + cg * bq, kind, p, h), n, kind, scale)
        g = int(np.argmin(fg))
        g_t = grid[g] if fg[g] < f0 else 0.0
        best_t, best_f = 0.0, f0
        t1, f1 = _golden_numpy(line, g_t - step, g_t + step, angle_tol)
        if f1 < best_f:
            best_t, best_f = t1, f1
        if local_width > 0.0:
            t2, f2 = _golden_numpy(line, -local_width, local_width, angle_tol)
            if f2 < best_f:
                best_t, best_f = t2, f2
        if best_f < f0:
            c, s = math.cos(best_t), math.sin(best_t)
            b[:, [pp, qq]] = b[:, [pp, qq]] @ np.array([[c, -s], [s, c]])
            terms[pp] = _col_terms_numpy(b[:, pp], kind, p, h)
            terms[qq] = _col_terms_numpy(b[:, qq], kind, p, h)
            max_move = max(max_move, abs(best_t))
    return float(_finish_numpy(terms.sum(), n, kind, scale)), max_move


def batch_cost_numpy(mats, kind, p, scale, h):
    return orth_cost_numpy(mats, kind, p, scale, h)


# ---------------------------------------------------------------------------
# backend dispatch
# ---------------------------------------------------------------------------

_IMPL = {
    "numba": dict(sweep=sweep_numba, givens_matrix=givens_matrix_numba,
                  orth_cost=orth_cost_numba, batch_cost=batch_cost_numba),
    "numpy": dict(sweep=sweep_numpy, givens_matrix=givens_matrix_numpy,
                  orth_cost=orth_cost_numpy, batch_cost=batch_cost_numpy),
}


def kernel(name, backend=None):
    return _IMPL[backend or BACKEND][name]


sweep = kernel("sweep")
givens_matrix = kernel("givens_matrix")
orth_cost = kernel("orth_cost")
batch_cost = kernel("batch_cost")
