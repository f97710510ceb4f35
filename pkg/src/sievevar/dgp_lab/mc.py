"""Monte-Carlo driver and metric suite.

The design (regressors) stays fixed across replications and only the noise
is redrawn, so the pointwise bias and variance of each estimator are taken
over replications at fixed evaluation points.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..numerics import trapezoid_integrate
from ..sieve_net import SieveNetArch, TrainConfig, predict, train
from .dgps import DgpLayout, DgpSpec, generate, layout
from .estimators import Ann, make_estimator

__all__ = [
    "McResult",
    "IdentityError",
    "run_mc",
    "pointwise_metrics",
    "integrate_metrics",
    "decompose_mse",
    "sieve_sweep",
    "default_split",
    "estimator_seed",
]

IDENTITY_TOL = 1e-10


class IdentityError(AssertionError):
    """The MSE = Bias^2 + Var_e identity failed beyond rounding."""


def default_split(kind: str) -> Union[int, float]:
    return 250 if kind in ("model1", "model2") else 0.2


def _split_index(n: int, split: Union[int, float]) -> int:
    """Index of the first test row; the test set is always the tail."""
    if isinstance(split, float) and 0.0 < split < 1.0:
        n_test = int(round(split * n))
    else:
        n_test = int(split)
    if not 1 <= n_test < n - 1:
        raise ValueError(f"test split {split!r} leaves no room for training on n={n}")
    return n - n_test


def estimator_seed(seed: int, replication: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(2, replication)).generate_state(1)[0])


def pointwise_metrics(preds: np.ndarray, truth: np.ndarray, check: bool = True) -> pd.DataFrame:
    """Bias^2, Var_e and MSE at each evaluation point.

    ``preds`` has one row per replication.  Var_e averages over replications
    with weight ``1/N``, which makes MSE = Bias^2 + Var_e an exact identity;
    it is verified here to a relative ``1e-10``.
    """
    P = np.atleast_2d(np.asarray(preds, dtype=float))
    psi = np.asarray(truth, dtype=float)
    # anchored mean: identical replications give exactly that value back
    mean = P[0] + np.mean(P - P[0], axis=0)
    bias2 = (mean - psi) ** 2
    var_e = np.mean((P - mean) ** 2, axis=0)
    mse = np.mean((psi - P) ** 2, axis=0)
    if check:
        scale = np.maximum(1.0, np.maximum(mse, np.mean(P**2, axis=0) + psi**2))
        gap = np.abs(mse - bias2 - var_e)
        if np.any(gap > IDENTITY_TOL * scale):
            worst = int(np.argmax(gap / scale))
            raise IdentityError(f"MSE decomposition off by {gap[worst]:.3e} at point {worst}")
    return pd.DataFrame({"bias2": bias2, "var_e": var_e, "mse": mse, "mean_prediction": mean,
                         "truth": psi})


def integrate_metrics(curve: pd.DataFrame, grid: Optional[np.ndarray]) -> dict:
    """Average of the pointwise metrics over the evaluation set.

    On a grid this is the trapezoid integral divided by the grid span, i.e.
    the integral against the uniform density on the grid's support.
    """
    out = {}
    for col in ("bias2", "var_e", "mse"):
        v = curve[col].to_numpy()
        if grid is not None:
            out[col] = trapezoid_integrate(grid, v) / float(grid[-1] - grid[0])
        else:
            out[col] = float(v.mean())
    return out


def _grid_frame(lay: DgpLayout) -> Optional[pd.DataFrame]:
    if lay.grid is None:
        return None
    # other regressors sit at zero, where every design here reduces to the grid component
    frame = pd.DataFrame({c: np.zeros(lay.grid.size) for c in lay.regressors})
    frame[lay.grid_column] = lay.grid
    frame["truth"] = lay.grid_truth(lay.grid)
    return frame


@dataclass
class McResult:
    """Outcome of :func:`run_mc`.

    ``replications`` has one row per (replication, estimator) with RMSPE on
    the test split; failed fits carry ``status="failed"`` and are excluded
    from every aggregate.  ``curves`` holds pointwise metrics on the
    evaluation set, ``integrated`` their averages.
    """

    config: dict
    replications: pd.DataFrame
    coefficients: pd.DataFrame
    curves: pd.DataFrame
    integrated: pd.DataFrame
    eval_set: str

    def summary(self) -> pd.DataFrame:
        ok = self.replications[self.replications.status == "ok"]
        agg = ok.groupby("estimator", sort=False).agg(
            rmspe_mean=("rmspe", "mean"), rmspe_sd=("rmspe", "std"),
            mse_truth_mean=("mse_truth", "mean"), replications=("rmspe", "size"))
        fails = (self.replications.status != "ok").groupby(self.replications.estimator,
                                                            sort=False).sum()
        agg["failures"] = fails.reindex(agg.index).fillna(0).astype(int)
        missing = [e for e in fails.index if e not in agg.index]
        for e in missing:
            agg.loc[e] = [np.nan, np.nan, np.nan, 0, int(fails[e])]
        return agg.join(self.integrated.set_index("estimator")).reset_index()

    def coefficient_summary(self) -> pd.DataFrame:
        if self.coefficients.empty:
            return pd.DataFrame(columns=["estimator", "name", "coef_mean", "coef_sd", "se_mean"])
        return (self.coefficients.groupby(["estimator", "name"], sort=False)
                .agg(coef_mean=("coef", "mean"), coef_sd=("coef", "std"),
                     se_mean=("std_error", "mean"))
                .reset_index())

    def mean_rmspe(self) -> dict:
        s = self.summary()
        return dict(zip(s.estimator, s.rmspe_mean))

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "eval_set": self.eval_set,
            "summary": _records(self.summary()),
            "coefficients": _records(self.coefficient_summary()),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def write(self, directory: Union[str, Path], prefix: str = "") -> list:
        """Write replication, curve, coefficient CSVs and a JSON summary."""
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        paths = []
        for name, frame in (("replications", self.replications), ("curves", self.curves),
                            ("coefficients", self.coefficients), ("summary", self.summary())):
            p = d / f"{prefix}{name}.csv"
            frame.to_csv(p, index=False, float_format="%.10g", lineterminator="\n")
            paths.append(p)
        p = d / f"{prefix}summary.json"
        p.write_text(self.to_json() + "\n", encoding="utf-8")
        paths.append(p)
        return paths


def _records(frame: pd.DataFrame) -> list:
    out = []
    for row in frame.to_dict(orient="records"):
        out.append({k: (None if isinstance(v, float) and not math.isfinite(v) else
                        (v.item() if hasattr(v, "item") else v)) for k, v in row.items()})
    return out


def _one_replication(spec: DgpSpec, estimators, b: int, split, eval_frame):
    frame = generate(spec, b)
    cut = _split_index(len(frame), split)
    train_frame, test_frame = frame.iloc[:cut], frame.iloc[cut:]
    lay = layout(spec)
    seed = estimator_seed(spec.seed, b)
    y_test = test_frame["y"].to_numpy()
    truth_test = test_frame["truth"].to_numpy()
    evals = [test_frame] + ([eval_frame] if eval_frame is not None else [])
    rows, coefs, preds = [], [], {}
    for est in estimators:
        try:
            out = est(train_frame, evals, lay, seed)
            test_pred = np.asarray(out.predictions[0], dtype=float)
            if not np.all(np.isfinite(test_pred)):
                raise FloatingPointError("non-finite predictions")
        except Exception as exc:  # noqa: BLE001 - any failure is recorded and excluded
            rows.append({"replication": b, "estimator": est.name, "status": "failed",
                         "rmspe": np.nan, "mse_truth": np.nan,
                         "error": f"{type(exc).__name__}: {exc}"})
            continue
        rows.append({"replication": b, "estimator": est.name, "status": "ok",
                     "rmspe": float(np.sqrt(np.mean((y_test - test_pred) ** 2))),
                     "mse_truth": float(np.mean((truth_test - test_pred) ** 2)), "error": ""})
        for name, (c, s) in out.coefficients.items():
            coefs.append({"replication": b, "estimator": est.name, "name": name,
                          "coef": c, "std_error": s})
        preds[est.name] = np.asarray(out.predictions[-1], dtype=float)
    return rows, coefs, preds


def run_mc(spec: DgpSpec, estimators: Sequence, B: int = 50,
           split: Union[int, float, None] = None, workers: int = 1) -> McResult:
    """Run ``B`` replications of every estimator on the design ``spec``.

    ``estimators`` holds estimator objects or menu names.  ``split`` is the
    test fraction (float in (0, 1)) or the number of trailing test rows;
    by default 250 rows for the two partially linear models and 20% elsewhere.
    Pointwise metrics use the design's grid when it has one (with other
    regressors at zero) and the fixed test rows otherwise.
    """
    if B < 2:
        raise ValueError("need at least two replications")
    ests = [make_estimator(e) if isinstance(e, str) else e for e in estimators]
    names = [e.name for e in ests]
    if len(set(names)) != len(names):
        raise ValueError(f"estimator names must be unique, got {names}")
    split = default_split(spec.kind) if split is None else split
    lay = layout(spec)
    eval_frame = _grid_frame(lay)

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_one_replication, spec, ests, b, split, eval_frame)
                       for b in range(B)]
            results = [f.result() for f in futures]
    else:
        results = [_one_replication(spec, ests, b, split, eval_frame) for b in range(B)]

    rows = [r for res in results for r in res[0]]
    coefs = [c for res in results for c in res[1]]
    if eval_frame is not None:
        truth, grid, eval_set = eval_frame["truth"].to_numpy(), lay.grid, "grid"
        point_x = lay.grid
    else:
        cut = _split_index(spec.n, split)
        truth = generate(spec, 0)["truth"].to_numpy()[cut:]
        grid, eval_set, point_x = None, "test", np.full(truth.size, np.nan)

    curves, integrated = [], []
    for name in names:
        stack = [res[2][name] for res in results if name in res[2]]
        if not stack:
            continue
        curve = pointwise_metrics(np.vstack(stack), truth)
        curve.insert(0, "x", point_x)
        curve.insert(0, "point", np.arange(truth.size))
        curve.insert(0, "estimator", name)
        curves.append(curve)
        integ = integrate_metrics(curve, grid)
        integrated.append({"estimator": name, "int_bias2": integ["bias2"],
                           "int_var_e": integ["var_e"], "int_mse": integ["mse"]})

    config = {"dgp": spec.to_dict(), "B": B, "split": split,
              "estimators": [dict(name=e.name, **e.config()) for e in ests]}
    return McResult(
        config=config,
        replications=pd.DataFrame(rows, columns=["replication", "estimator", "status", "rmspe",
                                                 "mse_truth", "error"]),
        coefficients=pd.DataFrame(coefs, columns=["replication", "estimator", "name", "coef",
                                                  "std_error"]),
        curves=pd.concat(curves, ignore_index=True) if curves else pd.DataFrame(),
        integrated=pd.DataFrame(integrated, columns=["estimator", "int_bias2", "int_var_e",
                                                     "int_mse"]),
        eval_set=eval_set,
    )


def decompose_mse(spec: DgpSpec, orders: Sequence[int], B: int = 20,
                  train_config: Optional[TrainConfig] = None,
                  split: Union[int, float, None] = None) -> tuple[pd.DataFrame, McResult]:
    """Bias^2 / variance decomposition of one-layer sieves across hidden-unit counts.

    Returns the integrated metrics per order and the underlying
    :class:`McResult` (whose curves are labelled ``ann_r<order>``).
    """
    if B < 2:
        raise ValueError("need at least two replications per sieve order")
    kwargs = {} if train_config is None else {"train_config": train_config}
    ests = [Ann(name=f"ann_r{r}", hidden_sizes=(int(r),), **kwargs) for r in orders]
    mc = run_mc(spec, ests, B=B, split=split)
    table = mc.integrated.copy()
    table.insert(1, "order", [int(n.split("_r")[1]) for n in table.estimator])
    return table, mc


def sieve_sweep(spec: DgpSpec, sizes: Sequence[int], train_config: Optional[TrainConfig] = None
                ) -> pd.DataFrame:
    """In-sample MSE against the truth for one-layer sieves of increasing width.

    Used on the noiseless chaos map, where the in-sample fit measures pure
    approximation error.
    """
    cfg = train_config or TrainConfig(optimizer="adam", learning_rate=0.01, init="quantile",
                                      solve_output=True, max_epochs=3000)
    cfg = replace(cfg, seed=spec.seed)
    frame = generate(spec, 0)
    lay = layout(spec)
    Z = frame[list(lay.regressors)].to_numpy()
    y = frame["y"].to_numpy()
    truth = frame["truth"].to_numpy()
    rows = []
    for h in sizes:
        res = train(SieveNetArch(Z.shape[1], (int(h),)), cfg, Z, y)
        mse = float(np.mean((predict(res.params, Z) - truth) ** 2))
        rows.append({"hidden_units": int(h), "mse": mse, "epochs": res.epochs,
                     "converged": res.converged})
    return pd.DataFrame(rows)
