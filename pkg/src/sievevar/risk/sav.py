"""Symmetric-absolute-value CAViaR: ``f_t = b0 + b1 f_{t-1} + b2 |y_{t-1}|``."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from ..numerics import RngStream, check_finite, sample_quantile
from ..sieve_net import pinball
from .caviar import MIN_OBS, caviar_path

__all__ = ["SavModel", "fit_sav_caviar"]


@dataclass
class SavModel:
    alpha: float
    b0: float
    b1: float
    b2: float
    quantile: float
    n_train: int
    loss: float

    @property
    def tag(self) -> str:
        return "sav-caviar"

    @property
    def beta(self) -> float:
        return self.b1

    def var_path(self, returns) -> np.ndarray:
        y = check_finite("returns", returns).ravel()
        phi = np.empty(y.size)
        phi[0] = 0.0
        phi[1:] = self.b0 + self.b2 * np.abs(y[:-1])
        return caviar_path(phi, self.b1, self.quantile)

    def to_dict(self) -> dict:
        return {"model": self.tag, "alpha": self.alpha, "b0": self.b0, "b1": self.b1,
                "b2": self.b2, "initial_quantile": self.quantile, "n_train": self.n_train,
                "loss": self.loss}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _loss(b, y, absy, q, alpha):
    b0, b1, b2 = b
    if abs(b1) >= 1.0:
        return np.inf
    phi = np.concatenate([[0.0], b0 + b2 * absy[:-1]])
    f = caviar_path(phi, b1, q)
    return float(np.mean(pinball(y[1:] - f[1:], alpha)))


def fit_sav_caviar(returns, alpha: float = 0.01, seed: int = 0, candidates: int = 300,
                   refine: int = 5) -> SavModel:
    """Multi-start Nelder-Mead on the pinball loss.

    Random starting vectors are screened by their loss; the best ``refine``
    are polished with Nelder-Mead.  ``|b1| < 1`` is enforced by an infinite
    penalty.
    """
    y = check_finite("returns", returns).ravel()
    if y.size < MIN_OBS:
        raise ValueError(f"need at least {MIN_OBS} returns, got {y.size}")
    if not 0.0 < alpha < 0.5:
        raise ValueError("alpha must lie in (0, 0.5)")
    q = sample_quantile(y, alpha)
    absy = np.abs(y)
    g = RngStream(seed).generator
    scale = abs(q) or 1.0
    starts = np.column_stack([
        g.uniform(-0.5, 0.5, candidates) * scale,
        g.uniform(0.0, 0.99, candidates),
        g.uniform(-1.0, 0.0, candidates) * scale / max(float(absy.mean()), 1e-12),
    ])
    starts = np.vstack([starts, [0.0, 0.9, q * 0.1 / max(float(absy.mean()), 1e-12)]])
    values = np.array([_loss(s, y, absy, q, alpha) for s in starts])
    best = None
    for i in np.argsort(values)[:refine]:
        res = optimize.minimize(_loss, starts[i], args=(y, absy, q, alpha), method="Nelder-Mead",
                                options={"xatol": 1e-8, "fatol": 1e-10, "maxiter": 4000})
        if best is None or res.fun < best.fun:
            best = res
    b0, b1, b2 = (float(v) for v in best.x)
    return SavModel(alpha, b0, b1, b2, q, y.size, float(best.fun))
