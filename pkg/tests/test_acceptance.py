"""Acceptance criteria, each checked at its stated tolerance.

Every test records one PASS/FAIL line, printed in the pytest terminal
summary under "acceptance criteria".
"""

import json
import math
import time

import numpy as np
import pytest
from scipy import stats

from conftest import record_acceptance
from spikebasis.costs import cost_lp_closed, cost_marginal_entropy, mutual_information_simple
from spikebasis.linalg import (
    Basis,
    gl_lsdb_pair,
    haar2,
    householder_reflector,
    reference_lsdb,
    verify_cofactor_identity,
)
from spikebasis.processes import (
    Process,
    abs_moment,
    density_integral,
    marginal_cdf,
    marginal_model,
    sample_generalized,
)
from spikebasis.search.oracles import doubly_stochastic_bound, random_orthogonal


def h2(q):
    return -q * math.log2(q) - (1 - q) * math.log2(1 - q)


def check(criterion, ok, detail):
    record_acceptance(criterion, ok, detail)
    assert ok, detail


def read_json(path):
    return json.loads(path.read_text(encoding="utf-8"))


def test_criterion_1_bsb_generalized(run_cli, tmp_path):
    worst, failures = 0.0, []
    t0 = time.perf_counter()
    for p in (0.5, 1.0):
        for n in range(2, 7):
            out = tmp_path / f"p{p}_n{n}"
            code, _, _ = run_cli("search", "--dict", "on", "--cost", "cp", "--p", p, "--n", n,
                                 "--restarts", 20, "--out", out)
            res = read_json(out / "search.json")
            worst = max(worst, res["canonical_residual"])
            if code != 0 or res["canonical_residual"] >= 1e-6 or res["reference"] != "identity":
                failures.append((p, n))
    elapsed = time.perf_counter() - t0
    check(1, not failures and elapsed < 60,
          f"cp search p in {{0.5,1}}, n=2..6: max residual {worst:.2e} (< 1e-6), {elapsed:.1f} s (< 60 s)"
          + (f", failures {failures}" if failures else ""))


def test_criterion_2_kmb_orthonormal(run_cli, tmp_path):
    worst_sur, worst_res, failures = 0.0, 0.0, []
    for n in range(2, 7):
        out = tmp_path / f"n{n}"
        code, _, _ = run_cli("search", "--dict", "on", "--cost", "ckappa", "--n", n, "--restarts", 20,
                             "--out", out)
        res = read_json(out / "search.json")
        dev = abs(res["surrogate"] - n)
        worst_sur, worst_res = max(worst_sur, dev), max(worst_res, res["canonical_residual"])
        if code != 0 or dev > 1e-8 or res["canonical_residual"] >= 1e-6:
            failures.append(n)
    rng = np.random.default_rng(2)
    max_sur, bad = -np.inf, 0
    for _ in range(10_000):
        b = doubly_stochastic_bound(random_orthogonal(5, rng))
        max_sur = max(max_sur, b.surrogate)
        if b.surrogate > 5 + 1e-9 or (b.surrogate > 5 - 1e-6 and b.residual >= 1e-6):
            bad += 1
    check(2, not failures and bad == 0,
          f"ckappa search n=2..6: max |sum b^4 - n| {worst_sur:.1e} (<= 1e-8), max residual {worst_res:.1e}; "
          f"10^4 random O(5): max sum b^4 = {max_sur:.4f} (<= 5 + 1e-9), {bad} violations")


def test_criterion_3_sl_divergence(run_cli, tmp_path):
    worst, ok = 0.0, True
    scales = []
    for n in range(2, 6):
        out = tmp_path / f"n{n}"
        code, _, _ = run_cli("sl-diverge", "--n", n, "--a", "1.5,2,4,8", "--out", out)
        rep = read_json(out / "sl_diverge.json")
        for r in rep["rows"]:
            worst = max(worst, abs(r["cost"] - r["oracle"]), abs(r["scaled_form"] - r["oracle"]))
        costs = [r["cost"] for r in rep["rows"]]
        ok &= code == 0 and rep["decreasing"] and all(u > v for u, v in zip(costs, costs[1:]))
        scales.append(f"{rep['scale']:.4g}")
    ok &= worst <= 1e-9
    check(3, ok, f"diag(a,1/a,1..) n=2..5, a in {{1.5,2,4,8}}: max |cost - oracle| {worst:.1e} (<= 1e-9), "
                 f"strictly decreasing; oracle scale 3(n-1)/n^2 = {', '.join(scales)}")


def test_criterion_4_lsdb_table():
    ch = lambda m: cost_marginal_entropy(m, Process.SIMPLE).value  # noqa: E731
    haar, mi = ch(haar2()), mutual_information_simple(haar2())
    ok = abs(haar - 1.0) <= 1e-12 and abs(mi) <= 1e-12
    walsh, std4 = ch(reference_lsdb(4)), ch(np.eye(4))
    ok &= walsh < std4 and abs(std4 - 4 * h2(0.25)) <= 1e-9 and abs(walsh - 3.0) <= 1e-9
    rng = np.random.default_rng(4)
    worst_tie, ens_ok = 0.0, True
    for n in range(5, 9):
        s, h = ch(np.eye(n)), ch(householder_reflector(n))
        worst_tie = max(worst_tie, abs(s - h))
        lo = min(ch(random_orthogonal(n, rng)) for _ in range(1000))
        ens_ok &= max(s, h) <= lo
    ok &= worst_tie <= 1e-12 and ens_ok
    check(4, ok, f"Haar C_H={haar!r}, I={mi:.1e}; Walsh {walsh:.10f} < I_4 {std4:.10f} = 4h(1/4); "
                 f"n=5..8 I vs B_HR max gap {worst_tie:.1e} (<= 1e-12), below 10^3 random O(n): {ens_ok}")


def test_criterion_5_sparsity_constants():
    worst = 0.0
    for n in range(3, 9):
        first = gl_lsdb_pair(1.0, np.zeros(n - 1), np.ones(n - 1)).synthesis
        second = gl_lsdb_pair(1.0, np.ones(n - 1), 2 * np.ones(n - 1)).synthesis
        for p in (0.0, 0.5, 1.0):
            worst = max(worst,
                        abs(cost_lp_closed(first, p, Process.SIMPLE).value - (2 - 1 / n)),
                        abs(cost_lp_closed(second, p, Process.SIMPLE).value - (n + (2**p - 1) * (1 - 1 / n))))
    c1 = {n: cost_lp_closed(householder_reflector(n), 1.0, Process.SIMPLE).value for n in range(2, 65)}
    hr_gap = max(abs(c1[n] - (3 * n - 4) / n) for n in c1)
    mono = all(c1[n] < c1[n + 1] < 3 for n in range(2, 64))
    ok = worst <= 1e-12 and hr_gap <= 1e-12 and mono
    ok &= abs(c1[5] - 2.2) <= 1e-12 and abs(c1[6] - 14 / 6) <= 1e-12
    check(5, ok, f"GL pair constants n=3..8, p in {{0,0.5,1}}: max error {worst:.1e} (<= 1e-12); "
                 f"C_1(B_HR): n=5 {c1[5]:.12g}, n=6 {c1[6]:.12g} (14/6), n=64 {c1[64]:.6f}, "
                 f"increasing below 3: {mono}")


def test_criterion_6_moments_and_marginals():
    rng = np.random.default_rng(6)
    ps = (0.5, 1.0, 2.0, 3.0)
    comparisons, outside, max_z = 0, [], 0.0
    norm_err, ks_max = 0.0, 0.0
    for k in range(50):
        n = 2 + k % 5
        b = Basis(random_orthogonal(n, rng))
        y = sample_generalized(n, 1_000_000, seed=1000 + k).transform(b)
        for j in range(n):
            a = np.abs(y[:, j])
            for p in ps:
                v = a**p
                se = v.std(ddof=1) / math.sqrt(v.size)
                z = abs(v.mean() - abs_moment(b, j, p)) / se
                comparisons += 1
                max_z = max(max_z, z)
                if z > 3:
                    outside.append((k, j, p, round(z, 2)))
            model = marginal_model(b, j)
            norm_err = max(norm_err, abs(density_integral(model) - 1.0))
            ks = stats.kstest(y[:100_000, j], lambda t: marginal_cdf(model, t)).statistic
            ks_max = max(ks_max, ks)
    ok = not outside and norm_err <= 1e-6 and ks_max < 0.01
    check(6, ok, f"{comparisons} moment comparisons, max |z| {max_z:.2f}, beyond 3 SE: {outside or 'none'}; "
                 f"pdf integral error {norm_err:.1e} (<= 1e-6); max KS {ks_max:.4f} (< 0.01)")


def test_criterion_7_covariance():
    errs = {}
    for n in (2, 4, 8):
        x = sample_generalized(n, 1_000_000, seed=7 + n).vectors()
        errs[n] = float(np.max(np.abs(x.T @ x / len(x) - np.eye(n) / n)))
    check(7, max(errs.values()) <= 0.005,
          "max-abs covariance error vs I_n/n: " + ", ".join(f"n={n} {e:.2e}" for n, e in errs.items())
          + " (<= 0.005)")


def test_criterion_8_cofactor_identity():
    rng = np.random.default_rng(8)
    worst, checked, matrices = 0.0, 0, 0
    while matrices < 1000:
        m = rng.uniform(-1, 1, size=(5, 5))
        if abs(np.linalg.det(m)) < 1e-3:
            continue
        matrices += 1
        b = Basis(m)
        for i in range(5):
            for j in range(5):
                if abs(b.cofactors[i, j]) > 1e-6:
                    worst = max(worst, verify_cofactor_identity(b, i, j))
                    checked += 1
    check(8, worst < 1e-8, f"{matrices} random 5x5, {checked} (i,j) pairs: max residual {worst:.1e} (< 1e-8)")


@pytest.mark.slow
def test_criterion_9_determinism(run_cli, tmp_path):
    codes, times = [], []
    for d in ("first", "second"):
        t0 = time.perf_counter()
        code, _, _ = run_cli("verify", "--n", "2..6", "--seed", 42, "--out", tmp_path / d)
        times.append(time.perf_counter() - t0)
        codes.append(code)
    same = (tmp_path / "first/verify.json").read_bytes() == (tmp_path / "second/verify.json").read_bytes()
    ok = same and codes == [0, 0] and max(times) < 300
    check(9, ok, f"verify --n 2..6 --seed 42 twice: byte-identical {same}, exit codes {codes}, "
                 f"wall {times[0]:.1f} s / {times[1]:.1f} s (< 300 s)")
