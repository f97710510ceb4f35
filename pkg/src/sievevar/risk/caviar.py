"""Semiparametric CAViaR: a ReLU sieve in lagged squared returns plus linear VaR feedback.

The return quantile follows ``f_t = beta * f_{t-1} + phi(x_{t-1})`` (``p = 1``)
or ``f_t = phi(x_{t-1})`` (``p = 0``), where ``x_{t-1}`` stacks the last
``lags`` squared returns.  The recursion starts from the unconditional
training quantile, ``f_0 = q``, and the parameters minimize the mean
pinball loss over ``t >= 1``.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import stats
from scipy.signal import lfilter

from ..numerics import RngStream, check_finite, sample_quantile
from ..plm import prune_features
from ..sieve_net import (
    SieveNetArch,
    SieveNetParams,
    TrainConfig,
    _backward,
    _forward_cache,
    _Scaler,
    _spread_hinges,
    init_params,
    minimize_gd,
    pinball,
)

__all__ = [
    "CaviarSpec",
    "CaviarModel",
    "ConstantQuantile",
    "RecursionDivergence",
    "VarForecastSeries",
    "fit_caviar",
    "fit_constant_quantile",
    "forecast_var",
    "lagged_squares",
    "caviar_path",
]

MIN_OBS = 300
DIVERGENCE_FACTOR = 1e3
BETA_BOUND = 0.995


class RecursionDivergence(RuntimeError):
    """The VaR recursion left the plausible range of the returns."""


@dataclass(frozen=True)
class CaviarSpec:
    alpha: float = 0.01
    p: int = 1
    lags: int = 2
    hidden_sizes: tuple = (10,)
    train_config: TrainConfig = field(default_factory=lambda: TrainConfig(
        optimizer="adam", learning_rate=0.01, max_epochs=1500, patience=50, init="quantile"))

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(self.hidden_sizes))
        if not 0.0 < self.alpha < 0.5:
            raise ValueError("alpha must lie in (0, 0.5)")
        if self.p not in (0, 1):
            raise ValueError("p must be 0 or 1")
        if self.lags < 1:
            raise ValueError("need at least one lag of squared returns")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden_sizes"] = list(self.hidden_sizes)
        return d


@dataclass
class VarForecastSeries:
    """VaR path in return-quantile units (negative for small ``alpha``)."""

    values: np.ndarray
    model: str
    alpha: float
    out_of_sample: np.ndarray

    def __post_init__(self):
        self.values = check_finite("VaR path", self.values).ravel()
        self.out_of_sample = np.asarray(self.out_of_sample, dtype=bool).ravel()
        if self.out_of_sample.shape != self.values.shape:
            raise ValueError("flag and value arrays differ in length")

    def __len__(self) -> int:
        return self.values.size


def lagged_squares(returns, lags: int, pad: float) -> np.ndarray:
    """Row ``t`` holds ``(y_{t-1}^2, ..., y_{t-lags}^2)``; lags before the sample equal ``pad``."""
    y2 = np.asarray(returns, dtype=float) ** 2
    n = y2.size
    full = np.concatenate([np.full(lags, pad), y2])
    return np.column_stack([full[lags - j : lags - j + n] for j in range(1, lags + 1)])


def caviar_path(phi: np.ndarray, beta: float, q: float) -> np.ndarray:
    """``f_0 = q`` and ``f_t = beta * f_{t-1} + phi_t`` for ``t >= 1``."""
    phi = np.asarray(phi, dtype=float)
    f = np.empty(phi.size)
    f[0] = q
    if phi.size > 1:
        f[1:] = lfilter([1.0], [1.0, -beta], phi[1:], zi=[beta * q])[0]
    return f


def _check_returns(returns) -> np.ndarray:
    y = check_finite("returns", returns).ravel()
    if y.size < MIN_OBS:
        raise ValueError(f"need at least {MIN_OBS} returns, got {y.size}")
    return y


def _guard(f: np.ndarray, scale: float):
    limit = DIVERGENCE_FACTOR * scale
    if not np.all(np.isfinite(f)) or np.max(np.abs(f)) > limit:
        raise RecursionDivergence(f"VaR recursion exceeded {limit:.3g} in absolute value")


@dataclass
class ConstantQuantile:
    """Flat VaR at the unconditional training quantile."""

    alpha: float
    quantile: float
    n_train: int
    tag: str = "unconditional"

    def var_path(self, returns) -> np.ndarray:
        return np.full(np.asarray(returns).size, self.quantile)

    def to_dict(self) -> dict:
        return {"model": self.tag, "alpha": self.alpha, "quantile": self.quantile,
                "n_train": self.n_train}


def fit_constant_quantile(returns, alpha: float) -> ConstantQuantile:
    y = check_finite("returns", returns).ravel()
    return ConstantQuantile(alpha, sample_quantile(y, alpha), y.size)


@dataclass
class CaviarModel:
    spec: CaviarSpec
    network: SieveNetParams
    beta: float
    quantile: float
    pad: float
    scale: float
    n_train: int
    beta_se: Optional[float]
    loss_trace: np.ndarray
    epochs: int
    converged: bool
    in_sample: np.ndarray = field(repr=False)

    @property
    def alpha(self) -> float:
        return self.spec.alpha

    @property
    def tag(self) -> str:
        return "sann-caviar" if self.spec.p == 1 else "sann-caviar-p0"

    def phi(self, returns) -> np.ndarray:
        Z = lagged_squares(returns, self.spec.lags, self.pad)
        out, _ = _forward_cache(self.network, Z, None)
        return out

    def var_path(self, returns) -> np.ndarray:
        """VaR for every period, using returns up to ``t - 1`` and frozen parameters."""
        y = check_finite("returns", returns).ravel()
        f = caviar_path(self.phi(y), self.beta, self.quantile)
        _guard(f, self.scale)
        return f

    def to_dict(self) -> dict:
        trace = self.loss_trace
        return {
            "model": self.tag,
            "spec": self.spec.to_dict(),
            "beta": self.beta if self.spec.p == 1 else None,
            "beta_se": self.beta_se,
            "initial_quantile": self.quantile,
            "n_train": self.n_train,
            "training": {"epochs": self.epochs, "converged": self.converged,
                         "final_loss": float(trace[-1]) if trace.size else None},
            "network": self.network.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _objective(start: SieveNetParams, Zs: np.ndarray, ys: np.ndarray, qs: float, alpha: float,
               p: int):
    n_net = start.arch.n_params
    y = ys[1:]
    m = y.size

    def fun_grad(theta):
        net = start.with_vector(theta[:n_net])
        beta = theta[n_net] if p else 0.0
        phi, cache = _forward_cache(net, Zs, None)
        f = caviar_path(phi, beta, qs)
        r = y - f[1:]
        value = float(np.mean(pinball(r, alpha)))
        g = np.zeros(ys.size)
        g[1:] = -(alpha - (y <= f[1:])) / m
        if p:
            # adjoint of the linear recursion
            dphi = np.zeros(ys.size)
            dphi[1:] = lfilter([1.0], [1.0, -beta], g[1:][::-1])[::-1]
            dbeta_path = lfilter([1.0], [1.0, -beta], f[:-1])
            dbeta = float(g[1:] @ dbeta_path)
        else:
            dphi, dbeta = g, 0.0
        grad = np.concatenate([_backward(net, cache, dphi), [dbeta] if p else []])
        return value, grad

    return fun_grad


def _powell_se(model: CaviarModel, y: np.ndarray) -> Optional[float]:
    """Sandwich SE of ``beta`` holding the hidden layers fixed.

    The gradient of ``f_t`` with respect to ``(beta, output layer)`` follows
    the same recursion as ``f``; the density term uses Powell's uniform
    kernel with a Hall-Sheather bandwidth.
    """
    alpha = model.spec.alpha
    Z = lagged_squares(y, model.spec.lags, model.pad)
    _, (acts, _, _) = _forward_cache(model.network, Z, None)
    G = acts[-1]
    kept, _ = prune_features(G, collinear_tol=1e-6)
    basis = np.column_stack([np.ones(y.size), G[:, kept]])
    f = caviar_path(model.phi(y), model.beta, model.quantile)
    beta = model.beta
    d_beta = lfilter([1.0], [1.0, -beta], f[:-1])
    d_basis = lfilter([1.0], [1.0, -beta], basis[1:], axis=0)
    D = np.column_stack([d_beta, d_basis])
    resid = y[1:] - f[1:]
    T = resid.size
    z = stats.norm.ppf(alpha)
    h = T ** (-1 / 3) * stats.norm.ppf(0.975) ** (2 / 3) * \
        (1.5 * stats.norm.pdf(z) ** 2 / (2 * z**2 + 1)) ** (1 / 3)
    lo, hi = max(alpha - h, 1e-4), min(alpha + h, 1 - 1e-4)
    c = float(np.std(resid)) * (stats.norm.ppf(hi) - stats.norm.ppf(lo))
    inside = (np.abs(resid) < c).astype(float)
    A = D.T @ D / T
    Dm = (D * inside[:, None]).T @ D / (2.0 * c * T)
    try:
        Dinv = np.linalg.inv(Dm)
    except np.linalg.LinAlgError:
        return None
    cov = alpha * (1 - alpha) * Dinv @ A @ Dinv / T
    v = cov[0, 0]
    return float(np.sqrt(v)) if np.isfinite(v) and v >= 0 else None


def fit_caviar(spec: CaviarSpec, returns) -> CaviarModel:
    """Fit the semiparametric CAViaR on ``returns`` (the training sample).

    Raises
    ------
    ValueError
        Fewer than 300 returns or non-finite values.
    RecursionDivergence
        The fitted recursion leaves ``1e3`` times the return scale.
    """
    y = _check_returns(returns)
    alpha = spec.alpha
    q = sample_quantile(y, alpha)
    pad = float(np.mean(y**2))
    Z = lagged_squares(y, spec.lags, pad)
    arch = SieveNetArch(spec.lags, spec.hidden_sizes)
    scaler = _Scaler.fit(Z, None, y, center_y=False)
    Zs, _, ys = scaler.transform(Z, None, y)
    qs = q / scaler.y_scale

    cfg = replace(spec.train_config, loss="pinball", alpha=alpha, solve_output=False)
    start = init_params(arch, RngStream(cfg.seed))
    if cfg.init == "quantile":
        start = _spread_hinges(start, Zs)
    start = SieveNetParams(arch, start.weights, start.biases, 0.1 * start.out_weights,
                           qs * (1.0 - (0.5 if spec.p else 0.0)), start.linear_weights)
    theta0 = start.to_vector()
    mask = start.output_mask()
    if spec.p:
        theta0 = np.append(theta0, 0.5)
        mask = np.append(mask, False)

        def project(theta):
            theta[-1] = np.clip(theta[-1], -BETA_BOUND, BETA_BOUND)
            return theta
    else:
        project = None
    theta, trace, epochs, converged = minimize_gd(
        theta0, _objective(start, Zs, ys, qs, alpha, spec.p), cfg, mask, project)
    n_net = arch.n_params
    net_std = start.with_vector(theta[:n_net])
    if cfg.l1_penalty > 0:
        w = net_std.out_weights
        w[np.abs(w) < cfg.zero_threshold] = 0.0
    network = scaler.fold(net_std)
    beta = float(theta[n_net]) if spec.p else 0.0
    model = CaviarModel(spec, network, beta, q, pad, float(np.std(y)) or 1.0, y.size, None,
                        trace * scaler.y_scale, epochs, converged, np.empty(0))
    model.in_sample = model.var_path(y)
    if spec.p:
        model.beta_se = _powell_se(model, y)
    return model


def forecast_var(model, returns, window: int) -> VarForecastSeries:
    """One-step-ahead VaR over the last ``window`` periods with frozen parameters.

    ``returns`` is the full series (training sample followed by the
    hold-out); realized returns update the recursion state.
    """
    y = check_finite("returns", returns).ravel()
    if not 1 <= window <= y.size:
        raise ValueError(f"window {window} does not fit a series of length {y.size}")
    path = np.asarray(model.var_path(y), dtype=float)
    return VarForecastSeries(path[-window:], model.tag, model.alpha, np.ones(window, dtype=bool))
