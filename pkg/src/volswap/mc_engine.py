"""Monte Carlo oracle for the volatility swap.

The volatility process dsigma = alpha sigma dZ is lognormal, so increments
are simulated exactly: sigma_{k+1} = sigma_k * exp(alpha sqrt(dt) xi
- alpha^2 dt / 2).  Realized variance accumulates the accrued nu plus a
trapezoidal quadrature of sigma^2 over the remaining window.

Reproducibility contract: every path draws from its own counter-based
Philox substream keyed by (seed, path index), normals come from the
inverse CDF of 64-bit uniforms, and payoffs are reduced block-by-block in
a fixed order.  Results are therefore bit-identical for any worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .exceptions import DomainError
from .model import MarketState, SabrParams, SwapContract

#: paths per reduction block; fixed so the pairwise block sums (and hence
#: the final estimate) never depend on how blocks are farmed out.
BLOCK_PATHS = 8192

U64_TO_UNIT = 2.0 ** -53


@dataclass(frozen=True)
class McConfig:
    n_paths: int
    n_steps: int
    seed: int
    antithetic: bool = False

    def __post_init__(self):
        if self.n_paths < 2:
            raise DomainError(f"n_paths must be >= 2, got {self.n_paths}")
        if self.n_steps < 1:
            raise DomainError(f"n_steps must be >= 1, got {self.n_steps}")
        if self.antithetic and self.n_paths % 2:
            raise DomainError("antithetic mode requires an even n_paths")


@dataclass(frozen=True)
class McEstimate:
    """Sample mean with its standard error (antithetic pairs count as one draw)."""

    mean: float
    std_error: float
    n_paths: int


def resolve_workers(requested: int = 0) -> int:
    """Worker count: explicit argument, else VOLSWAP_THREADS, else cpu count."""
    if requested > 0:
        return requested
    env = os.environ.get("VOLSWAP_THREADS", "0")
    try:
        n = int(env)
    except ValueError:
        n = 0
    if n > 0:
        return n
    return os.cpu_count() or 1


def _path_uniforms(seed: int, path_index: int, n: int) -> np.ndarray:
    """n uniforms in (0,1) from the Philox substream of one path."""
    bg = np.random.Philox(key=seed, counter=[0, 0, 0, path_index])
    raw = bg.random_raw(n)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * U64_TO_UNIT


def simulate_vol_path(params: SabrParams, sigma_start: float, horizon: float,
                      n_steps: int, stream: np.ndarray) -> np.ndarray:
    """One exact-increment volatility path on n_steps + 1 equidistant times.

    ``stream`` supplies the n_steps standard normals of this path's
    substream (see :func:`path_normals`); the returned samples have no
    discretization error in distribution.
    """
    if sigma_start <= 0:
        raise DomainError(f"sigma_start must be positive, got {sigma_start}")
    if horizon < 0:
        raise DomainError(f"horizon must be non-negative, got {horizon}")
    xi = np.asarray(stream, dtype=np.float64)
    if xi.shape != (n_steps,):
        raise DomainError(f"stream must provide exactly {n_steps} normals")
    if horizon == 0.0:
        return np.full(n_steps + 1, sigma_start)
    dt = horizon / n_steps
    increments = params.alpha * math.sqrt(dt) * xi - 0.5 * params.alpha ** 2 * dt
    log_sigma = np.concatenate(([0.0], np.cumsum(increments)))
    return sigma_start * np.exp(log_sigma)


def path_normals(seed: int, path_index: int, n_steps: int) -> np.ndarray:
    """Standard normals of one path's substream (inverse-CDF of Philox uniforms)."""
    return ndtri(_path_uniforms(seed, path_index, n_steps))


def _block_payoffs(args) -> tuple:
    """Payoff sum / sum-of-squares over one fixed block of paths.

    Returns (sum, sum_sq, n_draws) where a draw is a path, or an antithetic
    pair when pairing is enabled.  The per-path arithmetic is elementwise or
    row-wise, so values do not depend on the block partitioning.
    """
    (seed, lo, hi, alpha, sigma, nu, tau, tenor, n_steps, antithetic,
     square_root) = args
    dt = tau / n_steps
    drift = -0.5 * alpha * alpha * dt
    scale = alpha * math.sqrt(dt)

    def payoffs_from(xi: np.ndarray) -> np.ndarray:
        increments = scale * xi + drift
        log_sigma = np.cumsum(increments, axis=1)
        sig2 = np.empty((xi.shape[0], n_steps + 1))
        sig2[:, 0] = sigma * sigma
        sig2[:, 1:] = sigma * sigma * np.exp(2.0 * log_sigma)
        realized = nu + np.trapezoid(sig2, dx=dt, axis=1)
        if square_root:
            return np.sqrt(realized) / tenor
        return realized

    if antithetic:
        pairs = np.arange(lo, hi)
        xi = np.vstack([path_normals(seed, 2 * int(k), n_steps) for k in pairs])
        vals = 0.5 * (payoffs_from(xi) + payoffs_from(-xi))
    else:
        idx = np.arange(lo, hi)
        xi = np.vstack([path_normals(seed, int(p), n_steps) for p in idx])
        vals = payoffs_from(xi)
    return float(np.sum(vals)), float(np.sum(vals * vals)), vals.size


def _estimate(state: MarketState, params: SabrParams, contract: SwapContract,
              config: McConfig, square_root: bool, workers: int) -> McEstimate:
    tau = contract.maturity - state.t
    if tau < 0:
        raise DomainError(f"valuation time {state.t} is past maturity")
    if tau == 0.0:
        value = math.sqrt(state.nu) / contract.tenor if square_root else state.nu
        return McEstimate(mean=value, std_error=0.0, n_paths=config.n_paths)

    n_draws = config.n_paths // 2 if config.antithetic else config.n_paths
    blocks = [(config.seed, lo, min(lo + BLOCK_PATHS, n_draws), params.alpha,
               state.sigma, state.nu, tau, contract.tenor, config.n_steps,
               config.antithetic, square_root)
              for lo in range(0, n_draws, BLOCK_PATHS)]

    workers = min(resolve_workers(workers), len(blocks))
    if workers <= 1:
        results = [_block_payoffs(b) for b in blocks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_block_payoffs, blocks, chunksize=1))

    total = 0.0
    total_sq = 0.0
    count = 0
    for s, ss, n in results:   # fixed block order: deterministic reduction
        total += s
        total_sq += ss
        count += n
    mean = total / count
    var = max(total_sq - count * mean * mean, 0.0) / (count - 1)
    return McEstimate(mean=mean, std_error=math.sqrt(var / count),
                      n_paths=config.n_paths)


def kappa_mc(state: MarketState, params: SabrParams, contract: SwapContract,
             config: McConfig, workers: int = 0) -> McEstimate:
    """Sample estimate of kappa = E[(1/T) sqrt(nu + int sigma^2)].

    At tau = 0 no simulation is needed and the exact sqrt(nu)/T is returned
    with zero standard error.
    """
    return _estimate(state, params, contract, config, True, workers)


def variance_swap_mc(state: MarketState, params: SabrParams,
                     contract: SwapContract, config: McConfig,
                     workers: int = 0) -> McEstimate:
    """Same pipeline without the square root: E[nu + int sigma^2].

    Exists to validate the simulator against the closed form
    :func:`variance_swap_expectation`.
    """
    return _estimate(state, params, contract, config, False, workers)


def variance_swap_expectation(state: MarketState, params: SabrParams,
                              contract: SwapContract) -> float:
    """Closed-form E[int_{t0}^{t0+T} sigma^2 ds | sigma_t] = nu + sigma^2 (e^(a^2 tau) - 1)/a^2.

    The a -> 0 limit nu + sigma^2 tau is taken through a short series once
    a^2 tau drops below 1e-8.
    """
    tau = contract.maturity - state.t
    if tau < 0:
        raise DomainError(f"valuation time {state.t} is past maturity")
    x = params.alpha ** 2 * tau
    if x < 1e-8:
        growth = tau * (1.0 + x / 2.0 + x * x / 6.0)
    else:
        growth = math.expm1(x) / params.alpha ** 2
    return state.nu + state.sigma ** 2 * growth
