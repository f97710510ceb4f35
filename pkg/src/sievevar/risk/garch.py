"""Gaussian GARCH(1,1) by quasi maximum likelihood, and a simulator."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats
from scipy.signal import lfilter
from scipy.special import expit, logit

from ..numerics import Normal, RngStream, check_finite, draw

__all__ = ["GarchSpec", "GarchFit", "GarchConvergenceError", "fit_garch11", "simulate_garch11",
           "garch_variance"]

MIN_OBS = 300


class GarchConvergenceError(RuntimeError):
    def __init__(self, message: str, grad_norm: float):
        super().__init__(f"{message} (final gradient norm {grad_norm:.3g})")
        self.grad_norm = grad_norm


@dataclass(frozen=True)
class GarchSpec:
    p: int = 1
    q: int = 1
    distribution: str = "normal"

    def __post_init__(self):
        if (self.p, self.q) != (1, 1) or self.distribution != "normal":
            raise ValueError("only the Gaussian GARCH(1,1) is implemented")


def garch_variance(eps: np.ndarray, omega: float, a: float, b: float, s2_0: float) -> np.ndarray:
    """``s2_t = omega + a eps_{t-1}^2 + b s2_{t-1}`` with ``s2_0`` given."""
    eps = np.asarray(eps, dtype=float)
    s2 = np.empty(eps.size)
    s2[0] = s2_0
    if eps.size > 1:
        s2[1:] = lfilter([1.0], [1.0, -b], omega + a * eps[:-1] ** 2, zi=[b * s2_0])[0]
    return s2


def _unpack(u: np.ndarray, scale2: float):
    """Unconstrained ``u`` to ``(mu, omega, a, b)`` with ``a, b >= 0`` and ``a + b < 1``."""
    mu = u[0]
    omega = scale2 * np.exp(u[1])
    persistence = expit(u[2])
    a = persistence * expit(u[3])
    return mu, omega, a, persistence - a


def _negloglik(u, y, scale2, s2_0):
    mu, omega, a, b = _unpack(u, scale2)
    eps = y - mu
    s2 = garch_variance(eps, omega, a, b, s2_0)
    return 0.5 * float(np.sum(np.log(2 * np.pi * s2) + eps**2 / s2)) / y.size


@dataclass
class GarchFit:
    mu: float
    omega: float
    alpha1: float
    beta1: float
    s2_0: float
    loglik: float
    n_train: int
    var_alpha: float = 0.01
    grad_norm: float = 0.0
    spec: GarchSpec = field(default_factory=GarchSpec)

    @property
    def tag(self) -> str:
        return "garch11"

    @property
    def alpha(self) -> float:
        """VaR tail probability (the ARCH coefficient is ``alpha1``)."""
        return self.var_alpha

    def variance(self, returns) -> np.ndarray:
        y = check_finite("returns", returns).ravel()
        return garch_variance(y - self.mu, self.omega, self.alpha1, self.beta1, self.s2_0)

    def sigma(self, returns) -> np.ndarray:
        return np.sqrt(self.variance(returns))

    def var_path(self, returns) -> np.ndarray:
        return self.mu + stats.norm.ppf(self.var_alpha) * self.sigma(returns)

    def with_alpha(self, var_alpha: float) -> "GarchFit":
        return GarchFit(self.mu, self.omega, self.alpha1, self.beta1, self.s2_0, self.loglik,
                        self.n_train, var_alpha, self.grad_norm, self.spec)

    def to_dict(self) -> dict:
        return {"model": self.tag, "mu": self.mu, "omega": self.omega, "alpha1": self.alpha1,
                "beta1": self.beta1, "persistence": self.alpha1 + self.beta1,
                "loglik": self.loglik, "n_train": self.n_train, "var_alpha": self.var_alpha,
                "grad_norm": self.grad_norm}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def fit_garch11(returns, var_alpha: float = 0.01, spec: GarchSpec = GarchSpec()) -> GarchFit:
    """Gaussian QMLE over a small grid of starting points.

    The recursion starts at the sample variance.  ``VaR_t = mu + z_alpha sigma_t``.

    Raises
    ------
    ValueError
        Fewer than 300 returns, or (near-)constant returns.
    GarchConvergenceError
        No start converged; the message carries the final gradient norm.
    """
    y = check_finite("returns", returns).ravel()
    if y.size < MIN_OBS:
        raise ValueError(f"need at least {MIN_OBS} returns, got {y.size}")
    var = float(np.var(y))
    if var <= 1e-12 * max(1.0, float(np.mean(y**2))):
        raise ValueError("returns are (nearly) constant; variance model is degenerate")
    best = None
    for persistence in (0.5, 0.9, 0.98):
        for share in (0.05, 0.2):
            omega = var * (1 - persistence)
            u0 = np.array([np.mean(y), np.log(omega / var), logit(persistence), logit(share)])
            res = optimize.minimize(_negloglik, u0, args=(y, var, var), method="L-BFGS-B")
            if best is None or res.fun < best.fun:
                best = res
    grad = optimize.approx_fprime(best.x, _negloglik, 1e-7, y, var, var)
    gnorm = float(np.linalg.norm(grad))
    if not best.success and gnorm > 1e-3:
        raise GarchConvergenceError(f"GARCH optimizer failed: {best.message}", gnorm)
    mu, omega, a, b = _unpack(best.x, var)
    return GarchFit(float(mu), float(omega), float(a), float(b), var,
                    float(-best.fun * y.size), y.size, var_alpha, gnorm, spec)


def simulate_garch11(n: int, omega: float = 0.05, alpha: float = 0.05, beta: float = 0.90,
                     seed: int = 0, mu: float = 0.0, burn: int = 500):
    """Gaussian GARCH(1,1) returns and their conditional standard deviations."""
    if alpha < 0 or beta < 0 or alpha + beta >= 1 or omega <= 0:
        raise ValueError("need omega > 0, alpha, beta >= 0 and alpha + beta < 1")
    z = draw(RngStream(seed), Normal(), n + burn)
    s2 = np.empty(n + burn)
    eps = np.empty(n + burn)
    s2[0] = omega / (1 - alpha - beta)
    eps[0] = np.sqrt(s2[0]) * z[0]
    for t in range(1, n + burn):
        s2[t] = omega + alpha * eps[t - 1] ** 2 + beta * s2[t - 1]
        eps[t] = np.sqrt(s2[t]) * z[t]
    return mu + eps[burn:], np.sqrt(s2[burn:])
