"""Estimator menu for the Monte-Carlo harness.

Every estimator is a callable ``est(train, evals, layout, seed)`` returning an
:class:`EstimatorOutput` with one prediction vector per evaluation frame.
Evaluation frames share the regressor columns of the training frame.
"""
from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np
import pandas as pd

from ..kernel import KernelSpec, local_linear_predict
from ..numerics import ols_solve
from ..plm import OverlapWarning, PlmSpec, fit_kernel_plm, fit_sann, hc0_std_errors
from ..plm import predict as plm_predict
from ..sieve_net import SieveNetArch, TrainConfig, predict, train
from .dgps import DgpLayout

__all__ = [
    "EstimatorOutput",
    "TrueModel",
    "MeanModel",
    "LinearModel",
    "LocalLinear",
    "Ann",
    "Sann",
    "KernelPlm",
    "make_estimator",
    "ESTIMATORS",
    "DEFAULT_ANN_CONFIG",
]

DEFAULT_ANN_CONFIG = TrainConfig(l1_penalty=0.01)


@dataclass
class EstimatorOutput:
    predictions: list
    coefficients: dict = field(default_factory=dict)  # name -> (coef, se)


def _regressors(frame: pd.DataFrame, names: Sequence[str]) -> np.ndarray:
    return frame[list(names)].to_numpy(dtype=float)


def _config_dict(cfg: TrainConfig) -> dict:
    return asdict(cfg)


@dataclass(frozen=True)
class TrueModel:
    """Oracle: the noiseless conditional mean."""

    name: str = "true"

    def __call__(self, train, evals, layout: DgpLayout, seed: int) -> EstimatorOutput:
        return EstimatorOutput([f["truth"].to_numpy(dtype=float) for f in evals])

    def config(self) -> dict:
        return {"type": "true"}


@dataclass(frozen=True)
class MeanModel:
    name: str = "mean"

    def __call__(self, train, evals, layout, seed) -> EstimatorOutput:
        m = float(train["y"].mean())
        return EstimatorOutput([np.full(len(f), m) for f in evals])

    def config(self) -> dict:
        return {"type": "mean"}


@dataclass(frozen=True)
class LinearModel:
    """OLS of ``y`` on an intercept and every regressor, with HC0 errors."""

    name: str = "linear"

    def __call__(self, train, evals, layout, seed) -> EstimatorOutput:
        cols = layout.regressors
        X = np.column_stack([np.ones(len(train)), _regressors(train, cols)])
        y = train["y"].to_numpy(dtype=float)
        coef = ols_solve(X, y)
        se = hc0_std_errors(X, y - X @ coef)
        preds = [np.column_stack([np.ones(len(f)), _regressors(f, cols)]) @ coef for f in evals]
        coefs = {c: (float(coef[i + 1]), float(se[i + 1])) for i, c in enumerate(cols)}
        return EstimatorOutput(preds, coefs)

    def config(self) -> dict:
        return {"type": "linear", "intercept": True, "se": "HC0"}


@dataclass(frozen=True)
class LocalLinear:
    name: str = "ll"
    kernel: KernelSpec = KernelSpec("silverman_multi")

    def __call__(self, train, evals, layout, seed) -> EstimatorOutput:
        cols = layout.regressors
        X = _regressors(train, cols)
        bw = self.kernel.resolve(X)
        y = train["y"].to_numpy(dtype=float)
        return EstimatorOutput([local_linear_predict(X, y, _regressors(f, cols), bw) for f in evals])

    def config(self) -> dict:
        k = self.kernel
        bws = k.bandwidths if isinstance(k.bandwidths, str) else list(k.bandwidths)
        return {"type": "local_linear", "bandwidths": bws, "order": k.order,
                "corrected": k.corrected}


@dataclass(frozen=True)
class Ann:
    """Fully nonparametric sieve network on every regressor."""

    name: str = "ann"
    hidden_sizes: tuple = (25,)
    train_config: TrainConfig = DEFAULT_ANN_CONFIG

    def __call__(self, train_frame, evals, layout, seed) -> EstimatorOutput:
        cols = layout.regressors
        cfg = replace(self.train_config, seed=seed)
        res = train(SieveNetArch(len(cols), tuple(self.hidden_sizes)), cfg,
                    _regressors(train_frame, cols), train_frame["y"].to_numpy(dtype=float))
        return EstimatorOutput([predict(res.params, _regressors(f, cols)) for f in evals])

    def config(self) -> dict:
        return {"type": "ann", "hidden_sizes": list(self.hidden_sizes),
                "train_config": _config_dict(self.train_config)}


@dataclass(frozen=True)
class Sann:
    """SANN partially linear model; ``overlap`` feeds every regressor to both parts."""

    name: str = "sann"
    hidden_sizes: tuple = (25,)
    train_config: TrainConfig = DEFAULT_ANN_CONFIG
    overlap: bool = False

    def spec_for(self, layout: DgpLayout, seed: int) -> PlmSpec:
        if not layout.linear:
            raise ValueError("this design has no linear part")
        nonparam = layout.regressors if self.overlap else layout.nonparam
        linear = layout.regressors if self.overlap else layout.linear
        return PlmSpec(linear, nonparam, "y", tuple(self.hidden_sizes),
                       train_config=replace(self.train_config, seed=seed))

    def __call__(self, train_frame, evals, layout, seed) -> EstimatorOutput:
        spec = self.spec_for(layout, seed)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", OverlapWarning)
            fit = fit_sann(spec, train_frame)
        coefs = {c: (float(b), float(s)) for c, b, s in
                 zip(spec.linear_columns, fit.beta_hat, fit.std_errors)}
        return EstimatorOutput([plm_predict(fit, f) for f in evals], coefs)

    def config(self) -> dict:
        return {"type": "sann", "hidden_sizes": list(self.hidden_sizes), "overlap": self.overlap,
                "train_config": _config_dict(self.train_config)}


@dataclass(frozen=True)
class KernelPlm:
    """Robinson partially linear estimator with local-linear smoothing."""

    name: str = "kernel_plm"
    kernel: KernelSpec = KernelSpec("silverman_uni")

    def __call__(self, train_frame, evals, layout, seed) -> EstimatorOutput:
        if not layout.linear:
            raise ValueError("this design has no linear part")
        X = _regressors(train_frame, layout.linear)
        Z = _regressors(train_frame, layout.nonparam)
        fit = fit_kernel_plm(X, Z, train_frame["y"].to_numpy(dtype=float), self.kernel)
        preds = [_regressors(f, layout.linear) @ fit.beta_hat
                 + fit.nonparametric_component(_regressors(f, layout.nonparam)) for f in evals]
        coefs = {c: (float(b), float(s)) for c, b, s in
                 zip(layout.linear, fit.beta_hat, fit.std_errors)}
        return EstimatorOutput(preds, coefs)

    def config(self) -> dict:
        k = self.kernel
        bws = k.bandwidths if isinstance(k.bandwidths, str) else list(k.bandwidths)
        return {"type": "kernel_plm", "bandwidths": bws}


ESTIMATORS = {
    "true": TrueModel,
    "mean": MeanModel,
    "linear": LinearModel,
    "ll": LocalLinear,
    "ann": Ann,
    "sann": Sann,
    "kernel_plm": KernelPlm,
}


def make_estimator(name: str, **options):
    """Build a menu estimator by name, e.g. ``make_estimator("ann", hidden_sizes=(50,))``."""
    if name not in ESTIMATORS:
        raise ValueError(f"unknown estimator {name!r}; choose from {sorted(ESTIMATORS)}")
    cls = ESTIMATORS[name]
    if "train_config" in options and isinstance(options["train_config"], dict):
        options["train_config"] = TrainConfig(**options["train_config"])
    if "kernel" in options and isinstance(options["kernel"], dict):
        options["kernel"] = KernelSpec(**options["kernel"])
    if "hidden_sizes" in options:
        options["hidden_sizes"] = tuple(options["hidden_sizes"])
    return cls(name=options.pop("name", name), **options)
