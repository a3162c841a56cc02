"""Identity verification: exact terminal sums, expansions, residual checks."""

import math
from fractions import Fraction

import pytest

from volswap import specfun, verify
from volswap.exceptions import InconclusiveError
from volswap.model import MarketState, SabrParams, SwapContract

STATE = MarketState(t=0.5, sigma=0.25, nu=0.03)
PARAMS = SabrParams(alpha=0.4)
CONTRACT = SwapContract(t0=0.0, tenor=1.0)


class TestTerminalIdentity:
    def test_exact_zero_up_to_forty(self):
        for s in range(1, 41):
            assert verify.check_terminal_identity(s) == Fraction(0), f"s={s}"

    def test_s_zero_normalization(self):
        # the s=0 sum is -1; times Gamma(-1/2)/(2 sqrt(pi)) = -1 it yields
        # the leading coefficient 1
        total = verify.check_terminal_identity(0)
        assert total == Fraction(-1)
        prefactor = specfun.gamma_half_integer(-1).rational / 2
        assert total * prefactor == Fraction(1)

    def test_returns_exact_rational_type(self):
        assert isinstance(verify.check_terminal_identity(7), Fraction)


class TestBesselExpansion:
    @pytest.mark.parametrize("y", [0.1, 0.5, 1.0, 2.0, 5.0])
    def test_sixty_terms_hit_tolerance(self, y):
        report = verify.check_bessel_sqrt_expansion(y, 60)
        assert report.passed
        assert report.relative <= 1e-6

    def test_forty_terms_at_unit_argument(self):
        report = verify.check_bessel_sqrt_expansion(1.0, 40)
        assert report.relative <= 1e-6

    def test_single_term_is_not_exact(self):
        report = verify.check_bessel_sqrt_expansion(1.0, 1)
        assert report.relative > 0.0
        assert not report.passed

    def test_residual_monotone_under_pairing(self):
        for y in (0.1, 1.0, 5.0):
            residuals = [verify.check_bessel_sqrt_expansion(y, n).relative
                         for n in range(10, 61, 2)]
            floor = 1e-14
            for earlier, later in zip(residuals, residuals[1:]):
                assert later <= earlier + floor


class TestPsiPdeResidual:
    def test_reference_points(self):
        for tau, y in ((0.25, 1.0), (0.25, 3.0)):
            report = verify.check_psi_pde_residual(tau, y, 0.3, 20)
            assert report.passed
            assert report.relative <= 1e-6

    def test_terminal_truncation_only(self):
        report = verify.check_psi_pde_residual(0.0, 1.0, 0.3, 20)
        assert report.passed

    def test_blowup_guard(self):
        with pytest.raises(InconclusiveError):
            verify.check_psi_pde_residual(0.5, 1.0, 1.0, 30)


class TestFunctionalCalculus:
    def test_per_term_grid(self):
        for zeta in (0.5, 2.0, 8.0):
            for tau in (0.1, 0.5):
                for alpha in (0.2, 0.5):
                    for n in range(11):
                        report = verify.functional_term_residual(
                            n, zeta, tau, alpha)
                        assert report.relative <= 1e-9, report.point

    def test_summed_residual(self):
        report = verify.check_functional_residual(STATE, PARAMS, CONTRACT, 10)
        assert report.passed

    def test_finite_difference_cross_check(self):
        reports = verify.check_functional_fd(STATE, PARAMS, CONTRACT, 10,
                                             step=1e-4)
        assert len(reports) == 2
        for report in reports:
            assert report.relative <= 1e-5, report.point

    def test_deterministic(self):
        a = verify.check_functional_residual(STATE, PARAMS, CONTRACT, 8)
        b = verify.check_functional_residual(STATE, PARAMS, CONTRACT, 8)
        assert a == b


class TestKummerOde:
    @pytest.mark.parametrize("a,b,z", [(-0.5, 0.5, 1.0), (1.5, 4.5, 4.0)])
    def test_reference_points(self, a, b, z):
        report = verify.check_kummer_ode(a, b, z)
        assert report.passed
        assert report.relative <= 1e-9

    def test_near_origin(self):
        # at z -> 0 the residual collapses to -b F'(0) + a F(0) = 0
        report = verify.check_kummer_ode(-0.5, 0.5, 1e-12)
        assert report.relative <= 1e-9


class TestPsiSeriesHelpers:
    def test_optimal_truncation_converges_small_growth(self):
        value, estimate = verify.psi_series_optimal(0.25, 1.0, 0.3)
        direct = verify.psi_series(0.25, 1.0, 0.3, 25)
        assert value == pytest.approx(direct, abs=max(10 * estimate, 1e-12))

    def test_psi_in_unit_interval(self):
        value, estimate = verify.psi_series_optimal(0.25, 1.0, 0.3)
        assert estimate < 1e-6
        assert 0.0 <= value <= 1.0
