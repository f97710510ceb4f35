"""Local-linear kernel regression and rule-of-thumb bandwidths.

Also the optimal-rate exponents used to compare second-order kernel
smoothers with ReLU sieves as the input dimension grows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd

from .numerics import SingularSystemError, check_finite

__all__ = [
    "KernelSpec",
    "silverman_bandwidth",
    "silverman_multi_bandwidth",
    "robust_scale",
    "local_linear_fit",
    "local_linear_predict",
    "RateCurve",
    "amise_rates",
    "kernel_exponent",
    "sieve_exponent",
    "rate_table",
]

MAD_TO_SD = 1.4826
IQR_TO_SD = 1.346


@dataclass(frozen=True)
class KernelSpec:
    """Gaussian (second-order) product kernel.

    ``bandwidths`` either holds one positive value per column or names a
    rule: ``"silverman_uni"`` (per-column univariate rule) or
    ``"silverman_multi"``. ``corrected`` flips the sign of the multivariate
    rule's sample-size exponent to ``-1/(2P + l)``; by default the exponent is
    ``+1/(2P + l)`` so the bandwidth grows with ``n``.
    """

    bandwidths: Union[str, Sequence[float]] = "silverman_multi"
    order: int = 2
    corrected: bool = False

    def resolve(self, X: np.ndarray) -> np.ndarray:
        if isinstance(self.bandwidths, str):
            if self.bandwidths == "silverman_uni":
                return np.array([silverman_bandwidth(X[:, j]) for j in range(X.shape[1])])
            if self.bandwidths == "silverman_multi":
                return silverman_multi_bandwidth(X, self.order, corrected=self.corrected)
            raise ValueError(f"unknown bandwidth rule {self.bandwidths!r}")
        bw = np.asarray(self.bandwidths, dtype=float).reshape(-1)
        if bw.size == 1 and X.shape[1] > 1:
            bw = np.repeat(bw, X.shape[1])
        if bw.size != X.shape[1]:
            raise ValueError(f"need {X.shape[1]} bandwidths, got {bw.size}")
        if np.any(bw <= 0) or not np.all(np.isfinite(bw)):
            raise ValueError("bandwidths must be positive and finite")
        return bw


def silverman_bandwidth(values) -> float:
    """``(4 sd^5 / (3 n))^(1/5)`` with ``sd`` the sample standard deviation."""
    v = check_finite("values", values).ravel()
    if v.size < 2:
        raise ValueError("need at least two observations")
    sd = float(np.std(v, ddof=1))
    if sd <= 0:
        raise ValueError("constant column: bandwidth undefined")
    return (4.0 * sd**5 / (3.0 * v.size)) ** 0.2


def robust_scale(values, mad_rule: str = "normal") -> float:
    """min(sd, MAD-based scale, IQR / 1.346), MAD taken about the median.

    ``mad_rule="normal"`` uses the normal-consistent ``1.4826 * MAD`` so all
    three measures estimate the same sd on Gaussian data; ``"printed"``
    divides the MAD by 1.4826 instead.
    """
    v = check_finite("values", values).ravel()
    if v.size < 2:
        raise ValueError("need at least two observations")
    sd = float(np.std(v, ddof=1))
    raw_mad = float(np.median(np.abs(v - np.median(v))))
    if mad_rule == "normal":
        mad = raw_mad * MAD_TO_SD
    elif mad_rule == "printed":
        mad = raw_mad / MAD_TO_SD
    else:
        raise ValueError(f"unknown mad_rule {mad_rule!r}")
    q75, q25 = np.quantile(v, [0.75, 0.25])
    iqr = float(q75 - q25) / IQR_TO_SD
    candidates = [c for c in (sd, mad, iqr) if c > 0]
    if sd <= 0 or not candidates:
        raise ValueError("constant column: bandwidth undefined")
    return min(candidates)


def _multi_rule(scale: float, n: int, order: int, n_vars: int, corrected: bool) -> float:
    power = 1.0 / (2 * order + n_vars)
    return 1.06 * scale * n ** (-power if corrected else power)


def silverman_multi_bandwidth(frame, kernel_order: int = 2, n_vars: Optional[int] = None,
                              corrected: bool = False, mad_rule: str = "normal") -> np.ndarray:
    """Per-column ``1.06 * scale_j * n^(1/(2P + l))``.

    ``scale_j`` is :func:`robust_scale` of column ``j``, ``P`` the kernel
    order and ``l`` the number of variables (all columns by default).
    """
    X = check_finite("frame", np.asarray(frame, dtype=float))
    if X.ndim == 1:
        X = X[:, None]
    n, k = X.shape
    l = k if n_vars is None else int(n_vars)
    return np.array([_multi_rule(robust_scale(X[:, j], mad_rule), n, kernel_order, l, corrected)
                     for j in range(k)])


def _as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return a[:, None] if a.ndim == 1 else a


def local_linear_predict(X, y, Xq, bandwidths) -> np.ndarray:
    """Local-linear estimates at each row of ``Xq``.

    Each prediction is the intercept of a Gaussian-product-kernel weighted
    regression of ``y`` on ``[1, X - x0]``.
    """
    X = _as_matrix(check_finite("X", X))
    Xq = _as_matrix(check_finite("Xq", Xq))
    y = check_finite("y", y).ravel()
    n, d = X.shape
    if Xq.shape[1] != d:
        raise ValueError(f"query points have {Xq.shape[1]} columns, data has {d}")
    if y.size != n:
        raise ValueError("X and y have different numbers of rows")
    h = np.asarray(bandwidths, dtype=float).reshape(-1)
    if h.size == 1:
        h = np.repeat(h, d)
    if np.any(h <= 0):
        raise ValueError("bandwidths must be positive")
    out = np.empty(Xq.shape[0])
    block = max(1, 2_000_000 // max(n * (d + 1), 1))
    for start in range(0, Xq.shape[0], block):
        q = Xq[start : start + block]
        u = (X[None, :, :] - q[:, None, :]) / h  # (m, n, d)
        logw = -0.5 * np.sum(u**2, axis=2)
        # rescaling weights per query point leaves the solution unchanged
        sw = np.exp(0.5 * (logw - logw.max(axis=1, keepdims=True)))
        D = np.concatenate([np.ones(u.shape[:2] + (1,)), u], axis=2) * sw[:, :, None]
        Q, R = np.linalg.qr(D)
        diag = np.abs(np.diagonal(R, axis1=1, axis2=2))
        bad = np.flatnonzero(diag.min(axis=1) <= 1e-10 * diag.max(axis=1))
        if bad.size:
            raise SingularSystemError(
                f"local design is singular at query point {int(bad[0]) + start}; "
                "try a larger bandwidth"
            )
        rhs = np.einsum("mni,mn->mi", Q, sw * y[None, :])
        out[start : start + q.shape[0]] = np.linalg.solve(R, rhs[:, :, None])[:, 0, 0]
    return out


def local_linear_fit(spec: KernelSpec, data, x0, target: Optional[str] = None) -> float:
    """Local-linear prediction at a single query point ``x0``.

    ``data`` is either a ``(X, y)`` pair or a DataFrame whose ``target``
    column is the response and whose other columns are regressors.
    """
    if isinstance(data, pd.DataFrame):
        if target is None:
            raise ValueError("pass target= when data is a DataFrame")
        X = data.drop(columns=[target]).to_numpy(float)
        y = data[target].to_numpy(float)
    else:
        X, y = data
        X = _as_matrix(X)
    bw = spec.resolve(_as_matrix(X))
    return float(local_linear_predict(X, y, np.atleast_2d(np.asarray(x0, float)).reshape(1, -1), bw)[0])


# --------------------------------------------------------------------------
# rates

def kernel_exponent(order: int, dim: int) -> float:
    """Exponent of ``n`` in the optimal AMISE of an order-``order`` kernel."""
    if order < 1 or dim < 1:
        raise ValueError("order and dim must be at least 1")
    return -2.0 * order / (2.0 * order + dim)


def sieve_exponent(dim: int) -> float:
    """Exponent of ``n / log n`` in the ReLU sieve convergence rate.

    This bounds the estimation error itself, not its square; double it to
    compare with :func:`kernel_exponent`.
    """
    if dim < 1:
        raise ValueError("dim must be at least 1")
    return -(1.0 + 2.0 / (dim + 1)) / (4.0 * (1.0 + 1.0 / (1 + dim)))


@dataclass
class RateCurve:
    estimator: str
    exponent: float
    base: str
    n: np.ndarray
    values: np.ndarray


def amise_rates(estimator: str, n_grid, order: int = 2, dim: int = 1) -> RateCurve:
    """Rate curve (constants ignored) for ``"kernel"`` or ``"sieve"``."""
    n = check_finite("n_grid", n_grid).ravel()
    if estimator == "kernel":
        e = kernel_exponent(order, dim)
        return RateCurve("kernel", e, "n", n, n**e)
    if estimator == "sieve":
        if np.any(n <= math.e):
            raise ValueError("sieve rate needs n > e so that n / log n > 1")
        e = sieve_exponent(dim)
        return RateCurve("sieve", e, "n/log(n)", n, (n / np.log(n)) ** e)
    raise ValueError(f"unknown estimator {estimator!r}")


def rate_table(dims: Sequence[int], order: int = 2) -> pd.DataFrame:
    """Exponents per input dimension, including the sieve rate on the squared-error scale."""
    rows = []
    for d in dims:
        s = sieve_exponent(d)
        rows.append({"dim": int(d), "kernel_exponent": kernel_exponent(order, d),
                     "sieve_exponent": s, "sieve_mise_exponent": 2.0 * s})
    return pd.DataFrame(rows, columns=["dim", "kernel_exponent", "sieve_exponent",
                                       "sieve_mise_exponent"])
