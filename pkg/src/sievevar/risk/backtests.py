"""VaR backtests and the integrated-VaR economics metric."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy import optimize

from ..numerics import check_finite, chi_square_sf

__all__ = ["TestResult", "VarBacktestReport", "failures_test", "duration_test",
           "integrated_var_change", "exceedances", "durations", "backtest"]


@dataclass(frozen=True)
class TestResult:
    statistic: Optional[float]
    p_value: Optional[float]
    status: str = "ok"  # or "not_applicable"

    def to_dict(self) -> dict:
        return asdict(self)


def _indicators(hits) -> np.ndarray:
    h = np.asarray(hits)
    if h.ndim != 1 or h.size < 1:
        raise ValueError("need a non-empty 1-D indicator series")
    if not np.all((h == 0) | (h == 1)):
        raise ValueError("indicators must be 0/1")
    return h.astype(bool)


def exceedances(returns, var_path) -> np.ndarray:
    """``1{y_t < VaR_t}`` with VaR as a return quantile."""
    y = check_finite("returns", returns).ravel()
    v = check_finite("var_path", var_path).ravel()
    if y.shape != v.shape:
        raise ValueError("returns and VaR path differ in length")
    return (y < v).astype(int)


def _xlogy(x: float, y: float) -> float:
    return 0.0 if x == 0 else x * math.log(y)


def failures_test(hits, alpha: float) -> TestResult:
    """Unconditional-coverage likelihood ratio, chi-square(1)."""
    h = _indicators(hits)
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    T = h.size
    x = int(h.sum())
    pi = x / T
    null = _xlogy(T - x, 1 - alpha) + _xlogy(x, alpha)
    alt = _xlogy(T - x, 1 - pi) + _xlogy(x, pi)
    lr = max(-2.0 * (null - alt), 0.0)
    return TestResult(lr, chi_square_sf(lr, 1))


def durations(hits):
    """Durations between exceedances with censoring flags for the two ends.

    Returns ``(d, censored)``: the first duration runs from the start of the
    sample to the first hit and the last from the final hit to the end of the
    sample; each is censored unless the sample starts or ends with a hit.
    """
    h = _indicators(hits)
    idx = np.flatnonzero(h)
    T = h.size
    d = [idx[0] + 1]
    cens = [not h[0]]
    d += list(np.diff(idx))
    cens += [False] * (idx.size - 1)
    if not h[-1]:
        d.append(T - 1 - idx[-1])
        cens.append(True)
    return np.asarray(d, dtype=float), np.asarray(cens, dtype=bool)


def _weibull_profile(b: float, d: np.ndarray, cens: np.ndarray) -> float:
    """Weibull log-likelihood at shape ``b`` with the scale profiled out."""
    k = int(np.sum(~cens))
    s = float(np.sum(d**b))
    a_b = k / s  # a^b at the optimum
    logf = k * math.log(a_b) + k * math.log(b) + (b - 1) * float(np.sum(np.log(d[~cens])))
    return logf - a_b * s


def duration_test(hits) -> TestResult:
    """Weibull duration test of memoryless exceedances (shape ``b = 1``)."""
    h = _indicators(hits)
    if h.sum() < 2:
        return TestResult(None, None, "not_applicable")
    d, cens = durations(h)
    keep = d > 0
    d, cens = d[keep], cens[keep]
    restricted = _weibull_profile(1.0, d, cens)
    res = optimize.minimize_scalar(lambda lb: -_weibull_profile(math.exp(lb), d, cens),
                                   bounds=(-5.0, 5.0), method="bounded",
                                   options={"xatol": 1e-10})
    unrestricted = max(-res.fun, restricted)
    lr = 2.0 * (unrestricted - restricted)
    return TestResult(lr, chi_square_sf(lr, 1))


def integrated_var_change(var_path, quantile: float) -> float:
    """Percent change of ``sum |VaR_t|`` against a flat path at ``quantile``."""
    v = check_finite("var_path", var_path).ravel()
    if v.size == 0:
        raise ValueError("empty VaR path")
    if quantile == 0:
        raise ValueError("unconditional quantile is zero")
    base = v.size * abs(quantile)
    return 100.0 * (float(np.abs(v).sum()) - base) / base


@dataclass
class VarBacktestReport:
    model: str
    alpha: float
    n_out: int
    exceedances: int
    expected: float
    failures_lr: float
    failures_p: float
    duration_lr: Optional[float]
    duration_p: Optional[float]
    duration_status: str
    integrated_var_change: float
    var_lag_coef: Optional[float] = None
    var_lag_se: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @staticmethod
    def columns() -> list:
        return list(VarBacktestReport.__dataclass_fields__)


def backtest(model, returns, window: int, quantile: Optional[float] = None) -> VarBacktestReport:
    """Backtest ``model`` on the last ``window`` returns of ``returns``.

    ``quantile`` is the unconditional training quantile for the integrated
    VaR comparison; by default the empirical quantile of the training part.
    """
    y = check_finite("returns", returns).ravel()
    if not 1 <= window < y.size:
        raise ValueError(f"window {window} does not fit a series of length {y.size}")
    path = np.asarray(model.var_path(y), dtype=float)
    out_y, out_v = y[-window:], path[-window:]
    hits = exceedances(out_y, out_v)
    if quantile is None:
        quantile = float(np.quantile(y[:-window], model.alpha))
    fail = failures_test(hits, model.alpha)
    dur = duration_test(hits)
    is_recursive = getattr(getattr(model, "spec", None), "p", 1) == 1 and hasattr(model, "beta")
    coef = getattr(model, "beta", None) if is_recursive else None
    se = getattr(model, "beta_se", None) if is_recursive else None
    return VarBacktestReport(
        model=model.tag, alpha=model.alpha, n_out=window, exceedances=int(hits.sum()),
        expected=model.alpha * window, failures_lr=fail.statistic, failures_p=fail.p_value,
        duration_lr=dur.statistic, duration_p=dur.p_value, duration_status=dur.status,
        integrated_var_change=integrated_var_change(out_v, quantile),
        var_lag_coef=None if coef is None else float(coef),
        var_lag_se=None if se is None else float(se),
    )
