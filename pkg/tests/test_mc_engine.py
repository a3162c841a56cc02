"""Monte Carlo engine: exactness, reproducibility, variance-swap pipeline."""

import math

import numpy as np
import pytest

from volswap.exceptions import DomainError
from volswap.mc_engine import (McConfig, kappa_mc, path_normals,
                               simulate_vol_path, variance_swap_expectation,
                               variance_swap_mc)
from volswap.model import MarketState, SabrParams, SwapContract

CONTRACT = SwapContract(t0=0.0, tenor=1.0)
STATE = MarketState(t=0.5, sigma=0.25, nu=0.03)
PARAMS = SabrParams(alpha=0.4)


class TestSimulatePath:
    def test_tiny_alpha_is_constant(self):
        xi = path_normals(1, 0, 16)
        path = simulate_vol_path(SabrParams(alpha=1e-14), 0.3, 1.0, 16, xi)
        assert np.allclose(path, 0.3, rtol=1e-12)

    def test_martingale_mean(self):
        # E[sigma_H] = sigma_0 for the driftless lognormal
        n = 60_000
        total = 0.0
        total_sq = 0.0
        for p in range(n):
            xi = path_normals(7, p, 1)
            end = simulate_vol_path(PARAMS, 0.25, 1.0, 1, xi)[-1]
            total += end
            total_sq += end * end
        mean = total / n
        se = math.sqrt((total_sq / n - mean * mean) / n)
        assert abs(mean - 0.25) <= 3.0 * se

    def test_second_moment(self):
        # E[sigma_H^2] = sigma_0^2 e^(alpha^2 H)
        n = 120_000
        alpha = 0.4
        vals = np.empty(n)
        for p in range(n):
            xi = path_normals(11, p, 1)
            vals[p] = simulate_vol_path(SabrParams(alpha=alpha), 0.25, 1.0, 1, xi)[-1] ** 2
        expected = 0.25 ** 2 * math.exp(alpha ** 2)
        se = vals.std(ddof=1) / math.sqrt(n)
        assert abs(vals.mean() - expected) <= 3.0 * se

    def test_stream_length_checked(self):
        with pytest.raises(DomainError):
            simulate_vol_path(PARAMS, 0.25, 1.0, 8, np.zeros(7))


class TestKappaMc:
    def test_terminal_exact(self):
        state = MarketState(t=1.0, sigma=0.25, nu=0.04)
        est = kappa_mc(state, PARAMS, CONTRACT, McConfig(1000, 10, seed=1))
        assert est.mean == math.sqrt(0.04)
        assert est.std_error == 0.0

    def test_deterministic_limit(self):
        params = SabrParams(alpha=1e-12)
        est = kappa_mc(STATE, params, CONTRACT, McConfig(4000, 50, seed=3))
        expected = math.sqrt(0.03 + 0.25 ** 2 * 0.5)
        assert est.mean == pytest.approx(expected, rel=1e-10)
        assert est.std_error < 1e-12

    def test_reproducible(self):
        cfg = McConfig(20_000, 40, seed=99)
        a = kappa_mc(STATE, PARAMS, CONTRACT, cfg)
        b = kappa_mc(STATE, PARAMS, CONTRACT, cfg)
        assert a == b

    def test_worker_count_invariance(self):
        cfg = McConfig(20_000, 40, seed=99)
        ref = kappa_mc(STATE, PARAMS, CONTRACT, cfg, workers=1)
        for workers in (2, 3):
            est = kappa_mc(STATE, PARAMS, CONTRACT, cfg, workers=workers)
            assert est == ref

    def test_jensen_ordering(self):
        cfg = McConfig(50_000, 100, seed=17)
        est = kappa_mc(STATE, PARAMS, CONTRACT, cfg)
        bound = math.sqrt(variance_swap_expectation(STATE, PARAMS, CONTRACT))
        assert est.mean * CONTRACT.tenor <= bound + 3.0 * est.std_error

    def test_step_size_bias_within_noise(self):
        a = kappa_mc(STATE, PARAMS, CONTRACT, McConfig(60_000, 250, seed=5))
        b = kappa_mc(STATE, PARAMS, CONTRACT, McConfig(60_000, 500, seed=6))
        combined = math.hypot(a.std_error, b.std_error)
        assert abs(a.mean - b.mean) <= 3.0 * combined

    def test_antithetic_agrees_and_tightens(self):
        plain = kappa_mc(STATE, PARAMS, CONTRACT, McConfig(40_000, 100, seed=21))
        anti = kappa_mc(STATE, PARAMS, CONTRACT,
                        McConfig(40_000, 100, seed=21, antithetic=True))
        combined = math.hypot(plain.std_error, anti.std_error)
        assert abs(plain.mean - anti.mean) <= 3.0 * combined
        assert anti.std_error <= 1.05 * plain.std_error

    def test_antithetic_requires_even_paths(self):
        with pytest.raises(DomainError):
            McConfig(1001, 10, seed=1, antithetic=True)


class TestVarianceSwap:
    def test_expectation_deterministic_limit(self):
        params = SabrParams(alpha=1e-9)
        expected = 0.03 + 0.25 ** 2 * 0.5
        assert variance_swap_expectation(STATE, params, CONTRACT) == pytest.approx(
            expected, rel=1e-12)

    def test_expectation_at_maturity(self):
        state = MarketState(t=1.0, sigma=0.2, nu=0.07)
        assert variance_swap_expectation(state, PARAMS, CONTRACT) == 0.07

    def test_expectation_example(self):
        # sigma=0.2, alpha=0.5, tau=1, nu=0: 0.04 (e^0.25 - 1)/0.25
        state = MarketState(t=0.0, sigma=0.2, nu=0.0)
        params = SabrParams(alpha=0.5)
        expected = 0.04 * math.expm1(0.25) / 0.25
        assert variance_swap_expectation(state, params, CONTRACT) == pytest.approx(
            expected, rel=1e-14)

    def test_mc_matches_closed_form(self):
        state = MarketState(t=0.0, sigma=0.2, nu=0.0)
        params = SabrParams(alpha=0.5)
        est = variance_swap_mc(state, params, CONTRACT,
                               McConfig(60_000, 200, seed=31))
        expected = variance_swap_expectation(state, params, CONTRACT)
        assert abs(est.mean - expected) <= 3.0 * est.std_error

    def test_mc_terminal(self):
        state = MarketState(t=1.0, sigma=0.2, nu=0.05)
        est = variance_swap_mc(state, PARAMS, CONTRACT, McConfig(100, 5, seed=2))
        assert est.mean == 0.05 and est.std_error == 0.0

    def test_mc_deterministic_limit(self):
        params = SabrParams(alpha=1e-12)
        est = variance_swap_mc(STATE, params, CONTRACT, McConfig(2000, 50, seed=8))
        assert est.mean == pytest.approx(0.03 + 0.25 ** 2 * 0.5, rel=1e-10)
        assert est.std_error < 1e-9
