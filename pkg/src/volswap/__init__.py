"""Volatility-swap pricing laboratory for the lognormal-vol SABR model.

Three independent routes to the fair strike kappa:

* :mod:`volswap.series_pricer` — the analytic hypergeometric series,
* :mod:`volswap.mc_engine` — exact-increment Monte Carlo (reproducible,
  deterministic under any degree of parallelism),
* :mod:`volswap.pde_engine` — Crank-Nicolson solve of the reduced
  Feynman-Kac problem plus quadrature,

with :mod:`volswap.verify` holding mechanized checks of the identities the
construction rests on.
"""

__version__ = "0.1.0"

from .exceptions import (AccuracyError, DomainError, InconclusiveError,
                         InstabilityError, SingularityError, VolswapError)
from .model import (DiscountCurve, MarketState, PricingResult, SabrParams,
                    SwapContract, discount_factor, validate_state)
from .series_pricer import (SeriesConfig, SeriesDiagnostics, SeriesVariables,
                            fair_value, kappa_series, price_volatility_swap,
                            series_variables)
from .mc_engine import McConfig, McEstimate, kappa_mc, variance_swap_expectation, variance_swap_mc
from .pde_engine import GridSpec, PsiSolution, kappa_quadrature, solve_psi

__all__ = [
    "__version__",
    "AccuracyError", "DomainError", "InconclusiveError", "InstabilityError",
    "SingularityError", "VolswapError",
    "DiscountCurve", "MarketState", "PricingResult", "SabrParams",
    "SwapContract", "discount_factor", "validate_state",
    "SeriesConfig", "SeriesDiagnostics", "SeriesVariables", "fair_value",
    "kappa_series", "price_volatility_swap", "series_variables",
    "McConfig", "McEstimate", "kappa_mc", "variance_swap_expectation",
    "variance_swap_mc",
    "GridSpec", "PsiSolution", "kappa_quadrature", "solve_psi",
]
