"""Long-only, fully invested random portfolios."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.special import logsumexp

from ..numerics import RngStream, check_finite

__all__ = ["PortfolioSet", "random_weights", "equal_weights", "portfolio_returns",
           "random_portfolios"]


@dataclass
class PortfolioSet:
    weights: pd.DataFrame  # one row per portfolio
    returns: pd.DataFrame  # one column per portfolio


def random_weights(n_assets: int, count: int, seed: int = 0) -> np.ndarray:
    """Uniform draws on the simplex: normalized standard exponentials (Dirichlet(1))."""
    if n_assets < 1 or count < 1:
        raise ValueError("need at least one asset and one portfolio")
    e = RngStream(seed).generator.standard_exponential((count, n_assets))
    return e / e.sum(axis=1, keepdims=True)


def equal_weights(n_assets: int) -> np.ndarray:
    if n_assets < 1:
        raise ValueError("need at least one asset")
    return np.full((1, n_assets), 1.0 / n_assets)


def portfolio_returns(asset_returns, weights) -> np.ndarray:
    """Percent log returns of portfolios rebalanced to ``weights`` every period.

    Weights apply to simple returns: ``100 * ln(sum_i w_i exp(r_i / 100))``.
    """
    R = check_finite("asset_returns", asset_returns)
    R = R[:, None] if R.ndim == 1 else R
    W = np.atleast_2d(np.asarray(weights, dtype=float))
    if W.shape[1] != R.shape[1]:
        raise ValueError(f"{W.shape[1]} weights for {R.shape[1]} assets")
    if np.any(W < 0) or not np.allclose(W.sum(axis=1), 1.0, rtol=0, atol=1e-12):
        raise ValueError("weights must be non-negative and sum to one")
    return np.column_stack([100.0 * logsumexp(R / 100.0, axis=1, b=w) for w in W])


def random_portfolios(asset_returns: pd.DataFrame, count: int = 50, seed: int = 0,
                      equal: bool = False) -> PortfolioSet:
    """``count`` random portfolios (or the single equal-weight one) over the frame's columns."""
    if asset_returns.shape[1] < 1:
        raise ValueError("need at least one asset column")
    n = asset_returns.shape[1]
    W = equal_weights(n) if equal else random_weights(n, count, seed)
    names = ["equal"] if equal else [f"p{i:03d}" for i in range(W.shape[0])]
    rets = portfolio_returns(asset_returns.to_numpy(dtype=float), W)
    return PortfolioSet(pd.DataFrame(W, index=names, columns=asset_returns.columns),
                        pd.DataFrame(rets, index=asset_returns.index, columns=names))
