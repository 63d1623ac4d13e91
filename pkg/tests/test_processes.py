import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from spikebasis.errors import AtomicMarginal
from spikebasis.linalg import haar2, householder_reflector
from spikebasis.processes import (
    MarginalModel,
    Process,
    abs_moment,
    abs_moment_constant,
    central_moments,
    density_integral,
    discrete_entropy,
    gaussian_mixture_entropy,
    marginal_cdf,
    marginal_model,
    marginal_pdf,
    marginal_sigmas,
    moment_table,
    sample,
    sample_generalized,
    sample_simple,
    simple_spike_marginal_entropy,
)
from spikebasis.search.oracles import random_orthogonal, random_sl_pm, rotation2


def h2(q):
    return -q * math.log2(q) - (1 - q) * math.log2(1 - q)


class TestSamplers:
    def test_n_one(self):
        batch = sample_simple(1, 20, seed=3)
        assert np.array_equal(batch.vectors(), np.ones((20, 1)))

    def test_simple_location_frequencies(self):
        batch = sample_simple(5, 100_000, seed=0)
        freq = np.bincount(batch.locations, minlength=5) / len(batch)
        assert np.all(np.abs(freq - 0.2) < 0.01)
        assert np.all(batch.amplitudes == 1.0)

    def test_determinism(self):
        a, b = sample_generalized(4, 50, seed=9), sample_generalized(4, 50, seed=9)
        assert np.array_equal(a.vectors(), b.vectors())
        assert not np.array_equal(a.vectors(), sample_generalized(4, 50, seed=9, stream=1).vectors())

    def test_streams_split_seed(self):
        assert np.array_equal(sample_generalized(3, 10, seed=5, stream=2).vectors(),
                              sample_generalized(3, 10, seed=7).vectors())

    def test_generalized_moments(self):
        x = sample_generalized(4, 1_000_000, seed=1).vectors()
        assert np.max(np.abs(x.T @ x / len(x) - np.eye(4) / 4)) < 0.005
        assert np.max(np.abs(x.mean(axis=0))) < 0.005
        assert np.all(np.abs((x != 0).mean(axis=0) - 0.25) < 0.01)

    def test_one_nonzero_per_sample(self):
        x = sample("generalized", 6, 1000, seed=2).vectors()
        assert np.all((x != 0).sum(axis=1) == 1)

    def test_sample_items(self):
        batch = sample_generalized(3, 4, seed=0)
        s = batch[2]
        assert s.vector[s.location] == s.amplitude and np.count_nonzero(s.vector) == 1
        assert len(list(batch)) == 4

    def test_empty(self, tmp_path):
        batch = sample_simple(3, 0, seed=0)
        batch.write_csv(tmp_path / "s.csv")
        assert (tmp_path / "s.csv").read_text() == "x1,x2,x3\n"

    def test_invalid(self):
        with pytest.raises(ValueError):
            sample_simple(0, 3, seed=0)
        with pytest.raises(ValueError):
            sample_generalized(2, -1, seed=0)

    def test_transform(self, rng):
        b = random_sl_pm(4, rng)
        batch = sample_generalized(4, 30, seed=4)
        assert np.allclose(batch.transform(b), np.linalg.solve(b, batch.vectors().T).T)

    def test_process_parse(self):
        assert Process.parse("simple") is Process.SIMPLE
        assert Process.parse("GeneralizedSpike") is Process.GENERALIZED
        with pytest.raises(ValueError):
            Process.parse("ramp")


class TestMarginalModel:
    def test_identity_has_atom(self):
        m = marginal_model(np.eye(4), 2)
        assert m.sigmas == (0.0, 0.0, 1.0, 0.0)
        assert m.has_atom and m.atom_mass == pytest.approx(0.75)
        assert sum(m.weights) == pytest.approx(1.0)

    def test_haar(self):
        for j in range(2):
            m = marginal_model(haar2(), j)
            assert np.allclose(m.sigmas, [1 / np.sqrt(2)] * 2)
            assert not m.has_atom

    @given(st.floats(0.01, 1.5))
    def test_rotation(self, theta):
        m = marginal_model(rotation2(theta), 0)
        assert np.allclose(m.sigmas, [abs(math.cos(theta)), abs(math.sin(theta))])

    def test_sigmas_are_scaled_cofactors(self, rng):
        m = rng.standard_normal((4, 4))
        # coordinate j given a spike at i equals (B^{-1})_{ji}
        assert np.allclose(marginal_sigmas(m), np.abs(np.linalg.inv(m)).T)

    def test_index(self):
        with pytest.raises(IndexError):
            marginal_model(np.eye(2), 2)


class TestDensity:
    def test_standard_normal_peak(self):
        assert marginal_pdf(MarginalModel(0, (1.0,)), 0.0) == pytest.approx(1 / math.sqrt(2 * math.pi))

    def test_haar_peak(self):
        assert marginal_pdf(marginal_model(haar2(), 0), 0.0) == pytest.approx(1 / math.sqrt(math.pi))

    def test_atom_refused(self):
        with pytest.raises(AtomicMarginal):
            marginal_pdf(marginal_model(np.eye(3), 0), 0.1)

    def test_normalization(self, rng):
        for _ in range(10):
            b = random_orthogonal(3, rng)
            for j in range(3):
                model = marginal_model(b, j)
                assert density_integral(model) == pytest.approx(1.0, abs=1e-6)
            assert density_integral(MarginalModel(0, (1e-3, 1.0))) == pytest.approx(1.0, abs=1e-6)

    def test_vectorized(self):
        model = marginal_model(rotation2(0.4), 1)
        ys = np.linspace(-2, 2, 7)
        assert np.allclose(marginal_pdf(model, ys), [marginal_pdf(model, y) for y in ys])

    def test_cdf(self):
        model = marginal_model(np.eye(2), 0)  # half an atom at 0, half N(0, 1)
        assert marginal_cdf(model, -1e-9) == pytest.approx(0.25, abs=1e-6)
        assert marginal_cdf(model, 0.0) == pytest.approx(0.75)
        assert marginal_cdf(marginal_model(haar2(), 0), 0.0) == pytest.approx(0.5)

    def test_entropy_of_gaussian(self):
        # one component: N(0, s^2) has entropy 0.5 log2(2 pi e s^2)
        for s in (0.3, 1.0, 2.5):
            expected = 0.5 * math.log2(2 * math.pi * math.e * s * s)
            assert gaussian_mixture_entropy(MarginalModel(0, (s, s))) == pytest.approx(expected, abs=1e-9)


    @given(st.lists(st.floats(1e-7, 10.0), min_size=2, max_size=5), st.floats(0.01, 100.0))
    def test_entropy_scale_equivariance(self, sig, c):
        # H(cY) = H(Y) + log2 c
        base = gaussian_mixture_entropy(MarginalModel(0, tuple(sig)))
        scaled = gaussian_mixture_entropy(MarginalModel(0, tuple(c * s for s in sig)))
        assert scaled == pytest.approx(base + math.log2(c), abs=1e-8)


class TestMoments:
    def test_constant(self):
        assert abs_moment_constant(1.0) == pytest.approx(math.sqrt(2 / math.pi), rel=1e-14)
        assert abs_moment_constant(2.0) == pytest.approx(1.0, rel=1e-14)
        assert abs_moment_constant(4.0) == pytest.approx(3.0, rel=1e-14)
        assert abs_moment_constant(3.0) == pytest.approx(2 * math.sqrt(2 / math.pi), rel=1e-14)
        with pytest.raises(ValueError):
            abs_moment_constant(0.0)

    @pytest.mark.parametrize("n", [2, 5])
    def test_identity(self, n):
        assert abs_moment(np.eye(n), 0, 2.0) == pytest.approx(1 / n)
        assert abs_moment(np.eye(n), 1, 1.0) == pytest.approx(math.sqrt(2 / math.pi) / n)
        mu2, mu4, kappa = central_moments(np.eye(n), 0)
        assert (mu2, mu4) == pytest.approx((1 / n, 3 / n))
        assert kappa == pytest.approx(3 * (n - 1) / n**2)

    def test_haar_kurtosis(self):
        mu2, mu4, kappa = central_moments(haar2(), 0)
        assert (mu2, mu4) == pytest.approx((0.5, 0.75))
        assert kappa == pytest.approx(0.0, abs=1e-15)

    def test_table(self, rng):
        b = random_orthogonal(4, rng)
        t = moment_table(b, 1)
        assert t.abs_p[2.0] == t.mu2 == abs_moment(b, 1, 2.0)
        assert t.mu4 >= t.mu2**2
        assert "kappa" in t.to_dict()
        with pytest.raises(ValueError):
            abs_moment(b, 0, 0.0)

    def test_second_moment_monte_carlo(self, rng):
        b = random_sl_pm(3, rng)
        y = sample_generalized(3, 1_000_000, seed=8).transform(b)
        closed = sum(abs_moment(b, j, 2.0) for j in range(3))
        assert np.mean(np.sum(y**2, axis=1)) == pytest.approx(closed, rel=0.01)

    def test_kurtosis_monte_carlo(self, rng):
        b = random_orthogonal(4, rng)
        y = sample_generalized(4, 1_000_000, seed=11).transform(b)
        for j in range(4):
            yj = y[:, j]
            k_hat = yj**4 - 6 * np.mean(yj**2) * yj**2
            kappa = central_moments(b, j)[2]
            # kappa = E y^4 - 3 (E y^2)^2; delta-method influence values give the standard error
            est = np.mean(yj**4) - 3 * np.mean(yj**2) ** 2
            se = np.std(k_hat, ddof=1) / math.sqrt(len(yj))
            assert abs(est - kappa) < 3 * se


class TestSimpleEntropy:
    @pytest.mark.parametrize("n", [2, 3, 6])
    def test_identity(self, n):
        assert simple_spike_marginal_entropy(np.eye(n), 0) == pytest.approx(h2(1 / n), abs=1e-15)

    def test_haar(self):
        assert simple_spike_marginal_entropy(haar2(), 0) == 0.0
        assert simple_spike_marginal_entropy(haar2(), 1) == 1.0

    def test_householder_five(self):
        for j in range(5):
            assert simple_spike_marginal_entropy(householder_reflector(5), j) == pytest.approx(h2(0.2), abs=1e-15)

    def test_merging(self):
        assert discrete_entropy([1.0, 1.0 + 1e-13, 2.0, 3.0]) == 1.5
        assert discrete_entropy([]) == 0.0
