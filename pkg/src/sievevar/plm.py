"""Semiparametric ANN (SANN) partially linear model.

``y = x'beta + phi(z) + e``.  The sieve network is trained with linear skip
inputs for ``x``; its last hidden layer then serves as a series basis
``G(z)`` and ``beta`` is recovered by partialling ``G(z)`` out of both ``y``
and ``x`` (Frisch-Waugh-Lovell).  A Robinson-style variant with a
local-linear smoother in place of the sieve is provided for comparison.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from .kernel import KernelSpec, local_linear_predict
from .numerics import SingularSystemError, check_finite, ols_solve
from .sieve_net import (
    SieveNetArch,
    SieveNetParams,
    TrainConfig,
    hidden_features,
    predict as net_predict,
    train,
)

__all__ = [
    "PlmSpec",
    "SannFit",
    "OverlapWarning",
    "fit_sann",
    "two_step_beta",
    "beta_std_errors",
    "predict",
    "prune_features",
    "residual_maker",
    "hc0_std_errors",
    "KernelPlmFit",
    "fit_kernel_plm",
]

ZERO_COLUMN_TOL = 1e-8
COLLINEAR_TOL = 1e-10


class OverlapWarning(UserWarning):
    """Linear and nonparametric inputs share columns."""


@dataclass(frozen=True)
class PlmSpec:
    linear_columns: tuple
    nonparam_columns: tuple
    target: str = "y"
    hidden_sizes: tuple = (10,)
    activation: str = "relu"
    clip: Optional[float] = None
    train_config: TrainConfig = field(default_factory=TrainConfig)
    # hidden units whose column is this close to the span of earlier ones are dropped
    prune_tol: float = 1e-4

    def __post_init__(self):
        object.__setattr__(self, "linear_columns", tuple(self.linear_columns))
        object.__setattr__(self, "nonparam_columns", tuple(self.nonparam_columns))
        object.__setattr__(self, "hidden_sizes", tuple(self.hidden_sizes))
        if not self.linear_columns:
            raise ValueError("need at least one linear column")
        if not self.nonparam_columns:
            raise ValueError("need at least one nonparametric column")
        if self.target in self.linear_columns or self.target in self.nonparam_columns:
            raise ValueError("target column cannot also be a regressor")
        if not 0.0 <= self.prune_tol < 1.0:
            raise ValueError("prune_tol must lie in [0, 1)")

    @property
    def arch(self) -> SieveNetArch:
        return SieveNetArch(len(self.nonparam_columns), self.hidden_sizes, self.activation,
                            self.clip, linear_dim=len(self.linear_columns))

    @property
    def overlap(self) -> list:
        return sorted(set(self.linear_columns) & set(self.nonparam_columns))

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in ("target", "activation", "clip", "prune_tol")}
        d["linear_columns"] = list(self.linear_columns)
        d["nonparam_columns"] = list(self.nonparam_columns)
        d["hidden_sizes"] = list(self.hidden_sizes)
        d["train_config"] = asdict(self.train_config)
        return d


@dataclass(frozen=True)
class SannFit:
    spec: PlmSpec
    beta_hat: np.ndarray
    std_errors: np.ndarray
    sieve: SieveNetParams
    fitted: np.ndarray
    residuals: np.ndarray
    kept_columns: tuple
    pruned_columns: tuple
    overlap_warning: bool
    loss_trace: np.ndarray
    epochs: int
    converged: bool

    def coefficients(self) -> pd.DataFrame:
        return pd.DataFrame({"coef": self.beta_hat, "std_error": self.std_errors},
                            index=list(self.spec.linear_columns))

    def to_dict(self) -> dict:
        trace = self.loss_trace
        return {
            "spec": self.spec.to_dict(),
            "coefficients": dict(zip(self.spec.linear_columns, self.beta_hat.tolist())),
            "std_errors": dict(zip(self.spec.linear_columns, self.std_errors.tolist())),
            "se_type": "HC0",
            "pruned_columns": list(self.pruned_columns),
            "kept_columns": list(self.kept_columns),
            "overlap_warning": self.overlap_warning,
            "training": {
                "epochs": self.epochs,
                "converged": self.converged,
                "initial_loss": float(trace[0]) if trace.size else None,
                "final_loss": float(trace[-1]) if trace.size else None,
                "best_loss": float(trace.min()) if trace.size else None,
            },
            "n_obs": int(self.fitted.size),
            "residual_variance": float(np.mean(self.residuals**2)),
            "sieve": self.sieve.to_dict(),
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _columns(data: pd.DataFrame, names: Sequence[str]) -> np.ndarray:
    missing = [c for c in names if c not in data.columns]
    if missing:
        raise KeyError(f"missing columns: {missing}")
    return check_finite("data", data[list(names)].to_numpy(dtype=float))


def prune_features(G: np.ndarray, zero_tol: float = ZERO_COLUMN_TOL,
                   collinear_tol: float = COLLINEAR_TOL, protect: Optional[np.ndarray] = None):
    """Indices of feature columns to keep next to an intercept.

    Drops columns with norm below ``zero_tol`` and columns whose residual on
    the intercept, the ``protect`` columns and previously kept columns is
    below ``collinear_tol`` relative to the column norm (duplicates,
    constants, copies of protected regressors).
    """
    n = G.shape[0]
    basis = [np.ones(n) / np.sqrt(n)]
    if protect is not None:
        for col in np.asarray(protect, dtype=float).reshape(n, -1).T:
            r = col.copy()
            for _ in range(2):
                for q in basis:
                    r -= (q @ r) * q
            rn = np.linalg.norm(r)
            if rn > collinear_tol * max(np.linalg.norm(col), 1e-300):
                basis.append(r / rn)
    kept, pruned = [], []
    for j in range(G.shape[1]):
        col = G[:, j]
        norm = np.linalg.norm(col)
        if norm < zero_tol:
            pruned.append(j)
            continue
        r = col.copy()
        for _ in range(2):  # re-orthogonalize once for stability
            for q in basis:
                r -= (q @ r) * q
        rn = np.linalg.norm(r)
        if rn <= collinear_tol * norm:
            pruned.append(j)
            continue
        basis.append(r / rn)
        kept.append(j)
    return kept, pruned


def residual_maker(B: np.ndarray, A: np.ndarray) -> np.ndarray:
    """``M_B A``: residuals of the OLS projection of each column of ``A`` on ``B``."""
    coef = ols_solve(B, A)
    return A - B @ coef


def hc0_std_errors(X: np.ndarray, resid: np.ndarray) -> np.ndarray:
    """White (HC0) sandwich standard errors for an OLS fit on ``X``."""
    bread = np.linalg.inv(X.T @ X)
    meat = (X * resid[:, None] ** 2).T @ X
    cov = bread @ meat @ bread
    return np.sqrt(np.clip(np.diag(cov), 0.0, None))


def _basis(sieve: SieveNetParams, Z: np.ndarray, kept) -> np.ndarray:
    G = hidden_features(sieve, Z)[:, list(kept)]
    return np.column_stack([np.ones(Z.shape[0]), G])


def two_step_beta(X, G, y, linear_names: Optional[Sequence[str]] = None,
                  protect: Optional[Sequence[int]] = None, collinear_tol: float = COLLINEAR_TOL):
    """Partialled estimate of ``beta`` given a feature matrix ``G``.

    ``protect`` lists linear columns that also feed the sieve; basis columns
    collinear with them are pruned. Returns ``(beta, std_errors, kept,
    pruned, B)`` where ``B`` is the intercept plus the kept columns of ``G``.
    """
    X = check_finite("X", X)
    X = X[:, None] if X.ndim == 1 else X
    G = check_finite("G", G)
    y = check_finite("y", y).ravel()
    kept, pruned = prune_features(G, collinear_tol=collinear_tol,
                                  protect=X[:, list(protect)] if protect else None)
    B = np.column_stack([np.ones(G.shape[0]), G[:, kept]])
    MX = residual_maker(B, X)
    My = residual_maker(B, y)
    try:
        left = np.linalg.norm(MX, axis=0)
        gone = np.flatnonzero(left <= COLLINEAR_TOL * np.maximum(np.linalg.norm(X, axis=0), 1e-300))
        if gone.size:
            raise SingularSystemError("explained by the basis", gone.tolist())
        beta = ols_solve(MX, My)
    except SingularSystemError as err:
        names = err.columns if linear_names is None else [linear_names[i] for i in err.columns]
        raise SingularSystemError(
            f"linear columns {names} have no variation left after partialling out the sieve basis",
            err.columns,
        ) from err
    return beta, hc0_std_errors(MX, My - MX @ beta), kept, pruned, B


def fit_sann(spec: PlmSpec, data: pd.DataFrame, init: Optional[SieveNetParams] = None) -> SannFit:
    """Two-step SANN estimator.

    1. Train the augmented network (sieve in ``z`` plus linear skip inputs in
       ``x``) and take its last hidden layer as the basis ``G(z)``.
    2. Prune zero and (near-)collinear basis columns, partial ``[1, G]`` out
       of ``x`` and ``y`` and regress residual on residual.  Near-duplicate
       hinges would otherwise get huge offsetting output weights that blow
       up away from the training points.

    The output layer is then re-solved so that the stored network reproduces
    ``x'beta_hat`` plus the OLS fit of ``y - x'beta_hat`` on ``[1, G]``.

    Raises
    ------
    SingularSystemError
        If the partialled linear regressors are collinear; the error lists
        the offending linear columns.
    """
    X = _columns(data, spec.linear_columns)
    Z = _columns(data, spec.nonparam_columns)
    y = _columns(data, [spec.target])[:, 0]
    overlap = bool(spec.overlap)
    if overlap:
        warnings.warn(f"columns {spec.overlap} enter both the linear and the sieve part; "
                      "beta is only identified through the network's nonlinearity",
                      OverlapWarning, stacklevel=2)
    res = train(spec.arch, spec.train_config, Z, y, X, init=init)
    G = hidden_features(res.params, Z)
    if spec.train_config.l1_penalty > 0:
        # units switched off by the L1 penalty leave a zero column in the output layer
        G = G * (res.params.out_weights != 0.0)
    protect = [i for i, c in enumerate(spec.linear_columns) if c in spec.nonparam_columns]
    beta, se, kept, pruned, B = two_step_beta(X, G, y, spec.linear_columns, protect,
                                              collinear_tol=spec.prune_tol)
    gamma = ols_solve(B, y - X @ beta)
    out_w = np.zeros(G.shape[1])
    out_w[kept] = gamma[1:]
    sieve = SieveNetParams(res.params.arch, res.params.weights, res.params.biases,
                           out_w, gamma[0], beta)
    fitted = net_predict(sieve, Z, X)
    return SannFit(spec, beta, se, sieve, fitted, y - fitted, tuple(kept), tuple(pruned),
                   overlap, res.loss_trace, res.epochs, res.converged)


def beta_std_errors(fit: SannFit, data: pd.DataFrame) -> np.ndarray:
    """HC0 standard errors of ``beta_hat`` from the partialled regression on ``data``."""
    X = _columns(data, fit.spec.linear_columns)
    Z = _columns(data, fit.spec.nonparam_columns)
    y = _columns(data, [fit.spec.target])[:, 0]
    B = _basis(fit.sieve, Z, fit.kept_columns)
    MX = residual_maker(B, X)
    My = residual_maker(B, y)
    return hc0_std_errors(MX, My - MX @ fit.beta_hat)


def predict(fit: SannFit, newdata: pd.DataFrame) -> np.ndarray:
    """``x'beta_hat + phi_hat(z)`` for each row of ``newdata``."""
    X = _columns(newdata, fit.spec.linear_columns)
    Z = _columns(newdata, fit.spec.nonparam_columns)
    return net_predict(fit.sieve, Z, X)


def nonparametric_component(fit: SannFit, Z) -> np.ndarray:
    """The fitted ``phi_hat(z)`` (including the intercept)."""
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    return net_predict(fit.sieve, Z, np.zeros((Z.shape[0], fit.sieve.arch.linear_dim)))


# --------------------------------------------------------------------------
# kernel counterpart

@dataclass(frozen=True)
class KernelPlmFit:
    beta_hat: np.ndarray
    std_errors: np.ndarray
    bandwidths: np.ndarray
    Z: np.ndarray
    partial_residual: np.ndarray

    def nonparametric_component(self, Zq) -> np.ndarray:
        return local_linear_predict(self.Z, self.partial_residual, Zq, self.bandwidths)


def fit_kernel_plm(X, Z, y, spec: KernelSpec = KernelSpec("silverman_uni")) -> KernelPlmFit:
    """Robinson's estimator with local-linear estimates of ``E[x|z]`` and ``E[y|z]``."""
    X = check_finite("X", X)
    X = X[:, None] if X.ndim == 1 else X
    Z = check_finite("Z", Z)
    Z = Z[:, None] if Z.ndim == 1 else Z
    y = check_finite("y", y).ravel()
    bw = spec.resolve(Z)
    Ey = local_linear_predict(Z, y, Z, bw)
    EX = np.column_stack([local_linear_predict(Z, X[:, j], Z, bw) for j in range(X.shape[1])])
    MX, My = X - EX, y - Ey
    beta = ols_solve(MX, My)
    se = hc0_std_errors(MX, My - MX @ beta)
    return KernelPlmFit(beta, se, bw, Z, y - X @ beta)
