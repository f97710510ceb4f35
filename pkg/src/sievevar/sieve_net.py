"""ReLU networks used as nonparametric sieves.

A network maps nonparametric inputs ``z`` (and optionally linear inputs
``x`` through a skip connection) to a scalar::

    f(z, x) = out_bias + sum_r out_weights[r] * h_L(z)[r] + x @ linear_weights
    h_l(z)  = G(W_l h_{l-1}(z) + b_l),   h_0(z) = z

with ``G`` the ReLU or a ReLU clipped at ``clip``. One or two hidden layers
are supported. Training is full-batch gradient descent with heavy-ball
momentum; the L1 penalty on ``out_weights`` is applied as a proximal
(soft-threshold) step so that switched-off hidden units are exactly zero.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .numerics import RngStream, check_finite

__all__ = [
    "SieveNetArch",
    "SieveNetParams",
    "TrainConfig",
    "TrainResult",
    "DivergenceError",
    "init_params",
    "forward",
    "predict",
    "hidden_features",
    "loss",
    "loss_and_grad",
    "train",
    "active_units",
    "grow",
    "sieve_order_schedule",
    "pinball",
    "minimize_gd",
]


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int, value: float):
        super().__init__(f"loss became non-finite ({value}) at epoch {epoch}")
        self.epoch = epoch


@dataclass(frozen=True)
class SieveNetArch:
    input_dim: int
    hidden_sizes: tuple = (10,)
    activation: str = "relu"
    clip: Optional[float] = None
    linear_dim: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        if self.input_dim < 1:
            raise ValueError("input_dim must be at least 1")
        if len(self.hidden_sizes) not in (1, 2):
            raise ValueError("one or two hidden layers are supported")
        if any(h < 1 for h in self.hidden_sizes):
            raise ValueError("hidden layer sizes must be at least 1")
        if self.activation not in ("relu", "clipped_relu"):
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.activation == "clipped_relu" and not (self.clip and self.clip > 0):
            raise ValueError("clipped_relu needs a positive clip level")
        if self.linear_dim < 0:
            raise ValueError("linear_dim must be non-negative")

    @property
    def n_params(self) -> int:
        n, prev = 0, self.input_dim
        for h in self.hidden_sizes:
            n += h * prev + h
            prev = h
        return n + prev + 1 + self.linear_dim


@dataclass
class SieveNetParams:
    """Weights of a sieve network.

    ``weights[l]`` has shape ``(hidden_sizes[l], fan_in)``; column ``j``
    multiplies input ``j`` and ``biases[l]`` plays the role of the constant
    input unit.
    """

    arch: SieveNetArch
    weights: list
    biases: list
    out_weights: np.ndarray
    out_bias: float = 0.0
    linear_weights: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        self.weights = [np.asarray(w, dtype=float) for w in self.weights]
        self.biases = [np.asarray(b, dtype=float) for b in self.biases]
        self.out_weights = np.asarray(self.out_weights, dtype=float)
        self.linear_weights = np.asarray(self.linear_weights, dtype=float).reshape(-1)
        self.out_bias = float(self.out_bias)
        prev = self.arch.input_dim
        for w, b, h in zip(self.weights, self.biases, self.arch.hidden_sizes):
            if w.shape != (h, prev) or b.shape != (h,):
                raise ValueError("weight shapes do not match the architecture")
            prev = h
        if self.out_weights.shape != (prev,):
            raise ValueError("output weight shape does not match the architecture")
        if self.linear_weights.shape != (self.arch.linear_dim,):
            raise ValueError("linear weight shape does not match linear_dim")

    def to_vector(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts += [w.ravel(), b]
        parts += [self.out_weights, [self.out_bias], self.linear_weights]
        return np.concatenate([np.asarray(p, dtype=float) for p in parts])

    def with_vector(self, theta: np.ndarray) -> "SieveNetParams":
        theta = np.asarray(theta, dtype=float)
        if theta.size != self.arch.n_params:
            raise ValueError("parameter vector has the wrong length")
        i, weights, biases = 0, [], []
        prev = self.arch.input_dim
        for h in self.arch.hidden_sizes:
            weights.append(theta[i : i + h * prev].reshape(h, prev))
            i += h * prev
            biases.append(theta[i : i + h])
            i += h
            prev = h
        out_w = theta[i : i + prev]
        i += prev
        out_b = theta[i]
        lin = theta[i + 1 :]
        return SieveNetParams(self.arch, [w.copy() for w in weights],
                              [b.copy() for b in biases], out_w.copy(), out_b, lin.copy())

    def output_mask(self) -> np.ndarray:
        """Boolean mask of the output weights inside :meth:`to_vector`."""
        mask = np.zeros(self.arch.n_params, dtype=bool)
        start = self.arch.n_params - self.arch.linear_dim - 1 - self.arch.hidden_sizes[-1]
        mask[start : start + self.arch.hidden_sizes[-1]] = True
        return mask

    def copy(self) -> "SieveNetParams":
        return self.with_vector(self.to_vector())

    def to_dict(self) -> dict:
        a = self.arch
        return {
            "arch": {
                "input_dim": a.input_dim,
                "hidden_sizes": list(a.hidden_sizes),
                "activation": a.activation,
                "clip": a.clip,
                "linear_dim": a.linear_dim,
            },
            "weights": [w.ravel().tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "out_weights": self.out_weights.tolist(),
            "out_bias": self.out_bias,
            "linear_weights": self.linear_weights.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SieveNetParams":
        a = d["arch"]
        arch = SieveNetArch(a["input_dim"], tuple(a["hidden_sizes"]), a["activation"],
                            a.get("clip"), a.get("linear_dim", 0))
        prev, weights = arch.input_dim, []
        for h, w in zip(arch.hidden_sizes, d["weights"]):
            weights.append(np.asarray(w, dtype=float).reshape(h, prev))
            prev = h
        return cls(arch, weights, d["biases"], d["out_weights"], d["out_bias"],
                   d.get("linear_weights", []))

    def to_json(self) -> str:
        # repr of a float round-trips exactly through json
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "SieveNetParams":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class TrainConfig:
    """Training settings.

    The L1 penalty acts on the output weights of the last hidden layer, in
    the standardized parameterization when ``standardize`` is on.
    ``tol`` and ``patience`` define when the loss has levelled off: training
    stops once the relative improvement over ``patience`` epochs drops
    below ``tol``.

    ``optimizer="adam"``, ``init="quantile"`` (first-layer hinges placed at
    spread-out data quantiles) and ``solve_output`` (output layer re-solved
    by least squares every epoch) are opt-in aids for hard fits.
    """

    loss: str = "squared"
    alpha: float = 0.5
    l1_penalty: float = 0.0
    learning_rate: float = 0.05
    momentum: float = 0.9
    max_epochs: int = 2000
    tol: float = 1e-5
    patience: int = 25
    seed: int = 0
    weight_bound: Optional[float] = None
    standardize: bool = True
    zero_threshold: float = 1e-6
    optimizer: str = "gd"
    init: str = "uniform"
    solve_output: bool = False

    def __post_init__(self):
        if self.loss not in ("squared", "pinball"):
            raise ValueError(f"unknown loss {self.loss!r}")
        if self.optimizer not in ("gd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.init not in ("uniform", "quantile"):
            raise ValueError(f"unknown init {self.init!r}")
        if self.solve_output and (self.loss != "squared" or self.l1_penalty > 0):
            raise ValueError("solve_output needs squared loss without L1 penalty")
        if self.loss == "pinball" and not 0.0 < self.alpha < 1.0:
            raise ValueError("pinball alpha must lie in (0, 1)")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        if self.l1_penalty < 0 or self.tol < 0:
            raise ValueError("l1_penalty and tol must be non-negative")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be at least 1")


@dataclass
class TrainResult:
    params: SieveNetParams
    loss_trace: np.ndarray
    epochs: int
    converged: bool


# --------------------------------------------------------------------------
# forward / backward

def _act(arch: SieveNetArch, pre: np.ndarray) -> np.ndarray:
    out = np.maximum(pre, 0.0)
    if arch.activation == "clipped_relu":
        out = np.minimum(out, arch.clip)
    return out


def _act_grad(arch: SieveNetArch, pre: np.ndarray) -> np.ndarray:
    g = pre > 0.0
    if arch.activation == "clipped_relu":
        g &= pre < arch.clip
    return g.astype(float)


def init_params(arch: SieveNetArch, stream: RngStream) -> SieveNetParams:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization."""
    g = stream.generator
    weights, biases = [], []
    prev = arch.input_dim
    for h in arch.hidden_sizes:
        bound = 1.0 / math.sqrt(prev)
        weights.append(g.uniform(-bound, bound, (h, prev)))
        biases.append(g.uniform(-bound, bound, h))
        prev = h
    bound = 1.0 / math.sqrt(prev)
    out_w = g.uniform(-bound, bound, prev)
    out_b = g.uniform(-bound, bound)
    lin = np.zeros(arch.linear_dim)
    return SieveNetParams(arch, weights, biases, out_w, out_b, lin)


def _as_inputs(params: SieveNetParams, Z, X=None):
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None] if params.arch.input_dim == 1 else Z.reshape(1, -1)
    if Z.shape[1] != params.arch.input_dim:
        raise ValueError(
            f"expected {params.arch.input_dim} nonparametric inputs, got {Z.shape[1]}"
        )
    if params.arch.linear_dim:
        if X is None:
            raise ValueError("this network has linear inputs; pass X")
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(Z.shape[0], -1)
        if X.shape != (Z.shape[0], params.arch.linear_dim):
            raise ValueError(f"linear inputs must have shape ({Z.shape[0]}, {params.arch.linear_dim})")
    else:
        X = None
    return Z, X


def _forward_cache(params: SieveNetParams, Z, X=None):
    arch = params.arch
    acts, pres = [Z], []
    a = Z
    for w, b in zip(params.weights, params.biases):
        pre = a @ w.T + b
        a = _act(arch, pre)
        pres.append(pre)
        acts.append(a)
    out = a @ params.out_weights + params.out_bias
    if X is not None:
        out = out + X @ params.linear_weights
    return out, (acts, pres, X)


def _backward(params: SieveNetParams, cache, dout: np.ndarray) -> np.ndarray:
    """Gradient of ``sum(dout * f)`` with respect to the parameter vector."""
    acts, pres, X = cache
    arch = params.arch
    grads_w, grads_b = [], []
    d_out_w = acts[-1].T @ dout
    d_out_b = dout.sum()
    d_lin = X.T @ dout if X is not None else np.zeros(0)
    delta = np.outer(dout, params.out_weights) * _act_grad(arch, pres[-1])
    for layer in range(len(params.weights) - 1, -1, -1):
        grads_w.append(delta.T @ acts[layer])
        grads_b.append(delta.sum(axis=0))
        if layer > 0:
            delta = (delta @ params.weights[layer]) * _act_grad(arch, pres[layer - 1])
    grads_w.reverse()
    grads_b.reverse()
    parts = []
    for gw, gb in zip(grads_w, grads_b):
        parts += [gw.ravel(), gb]
    parts += [d_out_w, [d_out_b], d_lin]
    return np.concatenate([np.asarray(p, dtype=float) for p in parts])


def forward(params: SieveNetParams, z, x=None) -> float:
    """Network output for a single input vector."""
    z = check_finite("z", z).reshape(-1)
    if z.size != params.arch.input_dim:
        raise ValueError(f"expected input of dimension {params.arch.input_dim}, got {z.size}")
    X = None if x is None else check_finite("x", x).reshape(1, -1)
    return float(predict(params, z[None, :], X)[0])


def predict(params: SieveNetParams, Z, X=None) -> np.ndarray:
    Z, X = _as_inputs(params, Z, X)
    out, _ = _forward_cache(params, Z, X)
    return out


def hidden_features(params: SieveNetParams, Z) -> np.ndarray:
    """Output of the last hidden layer, one column per unit."""
    Z, _ = _as_inputs(params, Z, np.zeros((np.asarray(Z).shape[0], params.arch.linear_dim)))
    _, (acts, _, _) = _forward_cache(params, Z, None)
    return acts[-1]


# --------------------------------------------------------------------------
# losses

def pinball(residual: np.ndarray, alpha: float) -> np.ndarray:
    """Check loss ``(alpha - 1{r < 0}) * r`` for residual ``r = y - f``."""
    return (alpha - (residual < 0)) * residual


def _data_loss_grad(f: np.ndarray, y: np.ndarray, cfg: TrainConfig):
    n = y.size
    if cfg.loss == "squared":
        r = f - y
        return float(np.mean(r * r)), 2.0 * r / n
    r = y - f
    value = float(np.mean(pinball(r, cfg.alpha)))
    # at y == f the (alpha - 1) branch is used
    dfdf = -(cfg.alpha - (y <= f)) / n
    return value, dfdf


def loss(params: SieveNetParams, Z, y, cfg: TrainConfig, X=None) -> float:
    """Mean loss plus ``l1_penalty * sum |out_weights|``."""
    Z, X = _as_inputs(params, Z, X)
    y = check_finite("y", y).reshape(-1)
    if y.size == 0:
        raise ValueError("empty data")
    f, _ = _forward_cache(params, Z, X)
    value, _ = _data_loss_grad(f, y, cfg)
    return value + cfg.l1_penalty * float(np.abs(params.out_weights).sum())


def loss_and_grad(params: SieveNetParams, Z, y, cfg: TrainConfig, X=None):
    """Smooth part of the objective and its gradient (no L1 term)."""
    Z, X = _as_inputs(params, Z, X)
    y = np.asarray(y, dtype=float).reshape(-1)
    f, cache = _forward_cache(params, Z, X)
    value, dout = _data_loss_grad(f, y, cfg)
    return value, _backward(params, cache, dout)


# --------------------------------------------------------------------------
# optimizer

def minimize_gd(
    theta0: np.ndarray,
    fun_grad: Callable[[np.ndarray], tuple],
    cfg: TrainConfig,
    l1_mask: Optional[np.ndarray] = None,
    project: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    refit: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    fixed: Optional[np.ndarray] = None,
):
    """Full-batch gradient descent with an L1 proximal step.

    ``fun_grad`` returns the smooth objective and its gradient. ``refit``
    may replace a block of parameters by its exact minimizer before each
    evaluation; the coordinates flagged in ``fixed`` are then left to it and
    skipped by the gradient step. The returned parameters are the best iterate seen, so the
    final objective never exceeds the initial one.

    Returns
    -------
    theta, trace, epochs, converged
    """
    theta = np.array(theta0, dtype=float)
    velocity = np.zeros_like(theta)
    m1 = np.zeros_like(theta)
    m2 = np.zeros_like(theta)
    lam = cfg.l1_penalty
    mask = np.zeros(theta.size, dtype=bool) if l1_mask is None else l1_mask
    trace = []
    best_theta, best_value = theta.copy(), np.inf
    converged = False
    shrink = cfg.learning_rate * lam
    for epoch in range(cfg.max_epochs):
        if refit is not None:
            theta = refit(theta)
        value, grad = fun_grad(theta)
        value += lam * float(np.abs(theta[mask]).sum())
        if not np.isfinite(value) or not np.all(np.isfinite(grad)):
            raise DivergenceError(epoch, value)
        trace.append(value)
        if value < best_value:
            best_value, best_theta = value, theta.copy()
        w = cfg.patience
        if epoch >= w and cfg.tol > 0:
            past = trace[epoch - w]
            if past - value <= cfg.tol * max(abs(past), 1e-12):
                converged = True
                break
        if fixed is not None:
            grad = np.where(fixed, 0.0, grad)
        if cfg.optimizer == "adam":
            k = epoch + 1
            m1 = 0.9 * m1 + 0.1 * grad
            m2 = 0.999 * m2 + 0.001 * grad * grad
            step = cfg.learning_rate * (m1 / (1 - 0.9**k)) / (np.sqrt(m2 / (1 - 0.999**k)) + 1e-8)
            theta = theta - step
        else:
            velocity = cfg.momentum * velocity - cfg.learning_rate * grad
            theta = theta + velocity
        if lam > 0:
            t = theta[mask]
            theta[mask] = np.sign(t) * np.maximum(np.abs(t) - shrink, 0.0)
        if project is not None:
            theta = project(theta)
    return best_theta, np.asarray(trace), len(trace), converged


# --------------------------------------------------------------------------
# standardization folding

@dataclass
class _Scaler:
    z_mean: np.ndarray
    z_scale: np.ndarray
    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: float
    y_scale: float

    @classmethod
    def fit(cls, Z, X, y, center_y: bool = True):
        def ms(a):
            m = a.mean(axis=0)
            s = a.std(axis=0)
            return m, np.where(s > 0, s, 1.0)

        zm, zs = ms(Z)
        xm, xs = ms(X) if X is not None else (np.zeros(0), np.ones(0))
        ys = float(y.std()) or 1.0
        return cls(zm, zs, xm, xs, float(y.mean()) if center_y else 0.0, ys)

    @classmethod
    def identity(cls, arch: SieveNetArch):
        return cls(np.zeros(arch.input_dim), np.ones(arch.input_dim),
                   np.zeros(arch.linear_dim), np.ones(arch.linear_dim), 0.0, 1.0)

    def transform(self, Z, X, y):
        Zs = (Z - self.z_mean) / self.z_scale
        Xs = (X - self.x_mean) / self.x_scale if X is not None else None
        ys = (y - self.y_mean) / self.y_scale
        return Zs, Xs, ys

    def fold(self, p: SieveNetParams) -> SieveNetParams:
        """Map standardized-space weights to raw-data weights."""
        w0 = p.weights[0] / self.z_scale
        b0 = p.biases[0] - w0 @ self.z_mean
        lin_std = p.linear_weights / self.x_scale
        out_w = p.out_weights * self.y_scale
        lin = lin_std * self.y_scale
        out_b = self.y_mean + self.y_scale * (p.out_bias - lin_std @ self.x_mean)
        return SieveNetParams(p.arch, [w0] + p.weights[1:], [b0] + p.biases[1:],
                              out_w, out_b, lin)

    def unfold(self, p: SieveNetParams) -> SieveNetParams:
        w0 = p.weights[0] * self.z_scale
        b0 = p.biases[0] + p.weights[0] @ self.z_mean
        lin_std = p.linear_weights * self.x_scale / self.y_scale
        out_w = p.out_weights / self.y_scale
        out_b = (p.out_bias - self.y_mean) / self.y_scale + (lin_std / self.x_scale) @ self.x_mean
        return SieveNetParams(p.arch, [w0] + p.weights[1:], [b0] + p.biases[1:],
                              out_w, out_b, lin_std)


def _spread_hinges(params: SieveNetParams, Zs: np.ndarray) -> SieveNetParams:
    """Place first-layer hinges at evenly spaced quantiles of the projected data."""
    p = params.copy()
    w = p.weights[0]
    h = w.shape[0]
    norms = np.linalg.norm(w, axis=1)
    w = w / np.where(norms > 0, norms, 1.0)[:, None]
    proj = Zs @ w.T
    levels = (np.arange(h) + 0.5) / h
    # orient levels by the leading weight so flipped units do not reuse knots
    lead = np.sign(w[:, 0])
    levels = np.where(lead < 0, 1.0 - levels, levels)
    p.weights[0] = w
    p.biases[0] = -np.array([np.quantile(proj[:, j], levels[j]) for j in range(h)])
    return p


def _output_solver(params: SieveNetParams, Zs, Xs, ys):
    """Refit hook: least-squares solve of the output layer given the hidden layers."""
    mask = params.output_mask()
    out_idx = np.flatnonzero(mask)
    bias_idx = out_idx[-1] + 1
    lin_idx = np.arange(bias_idx + 1, params.arch.n_params)
    cols = np.concatenate([out_idx, [bias_idx], lin_idx])

    fixed = np.zeros(params.arch.n_params, dtype=bool)
    fixed[cols] = True

    def refit(theta):
        p = params.with_vector(theta)
        _, (acts, _, _) = _forward_cache(p, Zs, None)
        parts = [acts[-1], np.ones((Zs.shape[0], 1))]
        if Xs is not None:
            parts.append(Xs)
        A = np.hstack(parts)
        coef, *_ = np.linalg.lstsq(A, ys, rcond=None)
        theta = theta.copy()
        theta[cols] = coef
        return theta

    return refit, fixed


def _bound_projector(params: SieveNetParams, bound: float):
    mask = params.output_mask()
    idx = np.flatnonzero(mask)
    bias_idx = idx[-1] + 1

    def project(theta):
        total = np.abs(theta[idx]).sum() + abs(theta[bias_idx])
        if total > bound:
            theta = theta.copy()
            theta[idx] *= bound / total
            theta[bias_idx] *= bound / total
        return theta

    return project


def train(arch: SieveNetArch, cfg: TrainConfig, Z, y, X=None,
          init: Optional[SieveNetParams] = None) -> TrainResult:
    """Fit a sieve network by gradient descent on the configured loss.

    Inputs (and the target) are standardized internally; the returned
    weights act on raw data. Deterministic given ``cfg.seed``.
    """
    Z = check_finite("Z", Z)
    if Z.ndim == 1:
        Z = Z[:, None]
    y = check_finite("y", y).reshape(-1)
    X = None if X is None else check_finite("X", X).reshape(Z.shape[0], -1)
    if arch.linear_dim and X is None:
        raise ValueError("architecture has linear inputs but X is None")
    if Z.shape[0] != y.size:
        raise ValueError("Z and y have different numbers of rows")
    if Z.shape[0] == 0:
        raise ValueError("empty data")
    scaler = _Scaler.fit(Z, X, y) if cfg.standardize else _Scaler.identity(arch)
    Zs, Xs, ys = scaler.transform(Z, X, y)
    if init is not None:
        start = scaler.unfold(init)
    else:
        start = init_params(arch, RngStream(cfg.seed))
        if cfg.init == "quantile":
            start = _spread_hinges(start, Zs)
    if start.arch != arch:
        raise ValueError("initial parameters do not match the architecture")
    mask = start.output_mask()

    def fun_grad(theta):
        p = start.with_vector(theta)
        return loss_and_grad(p, Zs, ys, cfg, Xs)

    refit, fixed = _output_solver(start, Zs, Xs, ys) if cfg.solve_output else (None, None)
    project = _bound_projector(start, cfg.weight_bound) if cfg.weight_bound else None
    theta, trace, epochs, converged = minimize_gd(
        start.to_vector(), fun_grad, cfg, mask, project, refit, fixed
    )
    if cfg.l1_penalty > 0:
        small = mask & (np.abs(theta) < cfg.zero_threshold)
        theta[small] = 0.0
    params = scaler.fold(start.with_vector(theta))
    # trace is reported on the raw-data scale of the loss
    factor = scaler.y_scale ** 2 if cfg.loss == "squared" else scaler.y_scale
    return TrainResult(params, trace * factor, epochs, converged)


# --------------------------------------------------------------------------
# sieve order helpers

def active_units(params: SieveNetParams, threshold: float = 1e-6) -> int:
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    return int(np.sum(np.abs(params.out_weights) > threshold))


def grow(params: SieveNetParams, extra: int, stream: Optional[RngStream] = None) -> SieveNetParams:
    """Add ``extra`` units to the last hidden layer with zero output weight.

    The grown network computes exactly the same function, so the smaller
    sieve is nested in the larger one.
    """
    arch = params.arch
    stream = stream or RngStream(0)
    fan_in = arch.hidden_sizes[-2] if len(arch.hidden_sizes) == 2 else arch.input_dim
    bound = 1.0 / math.sqrt(fan_in)
    new_sizes = arch.hidden_sizes[:-1] + (arch.hidden_sizes[-1] + extra,)
    new_arch = replace(arch, hidden_sizes=new_sizes)
    g = stream.generator
    weights = [w.copy() for w in params.weights]
    biases = [b.copy() for b in params.biases]
    weights[-1] = np.vstack([weights[-1], g.uniform(-bound, bound, (extra, fan_in))])
    biases[-1] = np.concatenate([biases[-1], g.uniform(-bound, bound, extra)])
    out_w = np.concatenate([params.out_weights, np.zeros(extra)])
    return SieveNetParams(new_arch, weights, biases, out_w, params.out_bias,
                          params.linear_weights.copy())


def sieve_order_schedule(n: int, d: int) -> int:
    """Largest r >= 2 with r**(2(1 + 1/(d+1))) * ln r <= n."""
    if n < 3 or d < 1:
        raise ValueError("need n >= 3 and d >= 1")
    power = 2.0 * (1.0 + 1.0 / (d + 1))

    def crit(r):
        return r**power * math.log(r)

    r = 2
    while crit(r + 1) <= n:
        r += 1
    return r
