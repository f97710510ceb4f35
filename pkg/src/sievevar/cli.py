"""Command line front end: ``simulate``, ``fit``, ``var-backtest`` and ``rates``.

Every subcommand accepts ``--output-dir``, ``--seed`` and ``--config``.  The
config file is a JSON object keyed by option names (dashes or underscores);
flags given on the command line win over it.  Each run writes CSV artifacts
plus ``report.json``, which embeds the resolved configuration.

Exit codes: 0 success, 1 runtime error, 2 usage error.  Errors are printed to
stderr as a JSON object.
"""
from __future__ import annotations

import argparse
import json
import logging
import re
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from . import __version__
from .dgp_lab import PRESETS, DgpSpec, decompose_mse, generate, layout, run_mc, sieve_sweep
from .kernel import rate_table
from .numerics import RngStream
from .plm import PlmSpec, fit_sann
from .risk import (
    CaviarSpec,
    VarBacktestReport,
    backtest,
    exceedances,
    fit_caviar,
    fit_constant_quantile,
    fit_garch11,
    fit_sav_caviar,
    random_portfolios,
    simulate_garch11,
)
from .sieve_net import TrainConfig

log = logging.getLogger("sievevar")

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2
FIXTURE = "assets.csv"
MODELS = ("sann-caviar", "sann-caviar-p0", "garch", "sav-caviar", "unconditional")
CSV_OPTS = {"index": False, "float_format": "%.10g", "lineterminator": "\n"}

# unconditional covariance of the six fixture assets (percent log returns)
ASSETS = ("GE", "Walmart", "Altria", "Brent", "Gold", "USD_CHF")
ASSET_MEANS = (-0.032, -0.017, -0.010, -0.002, -0.0001, 0.004)
ASSET_COV = np.array([
    [1.722, 0.242, 0.238, 0.101, -0.021, 0.033],
    [0.242, 0.190, 0.065, -0.020, -0.021, 0.034],
    [0.238, 0.065, 0.435, 0.022, -0.015, 0.027],
    [0.101, -0.020, 0.022, 0.987, 0.145, -0.177],
    [-0.021, -0.021, -0.015, 0.145, 1.012, -0.215],
    [0.033, 0.034, 0.027, -0.177, -0.215, 1.006],
])


class UsageError(Exception):
    """Bad flags, config values, presets or missing input files."""


class DataError(ValueError):
    """Input data that cannot be turned into returns."""


# --------------------------------------------------------------------------
# data

def ingest_prices(path, date_column: str = "date",
                  price_columns: Optional[Sequence[str]] = None) -> pd.DataFrame:
    """Percent log returns ``100 * diff(ln P)`` indexed by date.

    Rows with any missing price are dropped (with a warning).  Raises
    :class:`DataError` for unparseable dates or non-positive prices, naming
    the offending CSV row (header is row 1).
    """
    raw = pd.read_csv(path, dtype=str, keep_default_na=False)
    if date_column not in raw.columns:
        raise DataError(f"date column {date_column!r} not found")
    cols = list(price_columns) if price_columns else [c for c in raw.columns if c != date_column]
    missing = [c for c in cols if c not in raw.columns]
    if missing or not cols:
        raise DataError(f"price columns not found: {missing or 'none given'}")
    dates = pd.to_datetime(raw[date_column].str.strip(), format="ISO8601", errors="coerce")
    bad = np.flatnonzero(dates.isna().to_numpy())
    if bad.size:
        raise DataError(f"row {bad[0] + 2}: cannot parse date {raw[date_column].iloc[bad[0]]!r}")
    prices = raw[cols].apply(lambda s: pd.to_numeric(s.str.strip().replace("", np.nan),
                                                     errors="coerce"))
    blank = raw[cols].apply(lambda s: s.str.strip().isin(["", "NA", "NaN", "nan", "null"]))
    garbage = prices.isna() & ~blank
    if garbage.to_numpy().any():
        r, c = np.argwhere(garbage.to_numpy())[0]
        raise DataError(f"row {r + 2}: price {raw[cols[c]].iloc[r]!r} in {cols[c]!r} "
                        "is not a number")
    nonpos = (prices <= 0).to_numpy()
    if nonpos.any():
        r, c = np.argwhere(nonpos)[0]
        raise DataError(f"row {r + 2}: non-positive price {prices.iat[r, c]} in {cols[c]!r}")
    keep = prices.notna().all(axis=1).to_numpy()
    if not keep.all():
        warnings.warn(f"dropped {int((~keep).sum())} rows with missing prices", stacklevel=2)
    prices = prices[keep]
    prices.index = pd.DatetimeIndex(dates[keep], name="date")
    if len(prices) < 2:
        raise DataError("need at least two price rows")
    rets = 100.0 * np.log(prices).diff().iloc[1:]
    return rets.astype(float)


def write_frame(frame: pd.DataFrame, path) -> Path:
    """Write a date-indexed frame; :func:`read_frame` restores it exactly."""
    p = Path(path)
    frame.to_csv(p, date_format="%Y-%m-%d", float_format="%.17g", lineterminator="\n")
    return p


def read_frame(path) -> pd.DataFrame:
    frame = pd.read_csv(path, index_col=0, parse_dates=[0], dtype=float)
    frame.index = pd.DatetimeIndex(frame.index, name="date")
    return frame


def synthetic_asset_prices(n_returns: int = 2992, seed: int = 0) -> pd.DataFrame:
    """Six price series whose returns have the tabulated means and covariance.

    Gaussian shocks with the target covariance are scaled by a common
    unit-variance GARCH(1,1) volatility path, which keeps the unconditional
    covariance while adding volatility clustering.
    """
    _, sigma = simulate_garch11(n_returns, omega=0.02, alpha=0.08, beta=0.90, seed=seed)
    g = RngStream(np.random.SeedSequence(seed, spawn_key=(1,))).generator
    shocks = g.standard_normal((n_returns, len(ASSETS))) @ np.linalg.cholesky(ASSET_COV).T
    rets = np.asarray(ASSET_MEANS) + sigma[:, None] * shocks
    logp = np.vstack([np.zeros(len(ASSETS)), np.cumsum(rets / 100.0, axis=0)])
    dates = pd.bdate_range("2000-01-03", periods=n_returns + 1, name="date")
    return pd.DataFrame(100.0 * np.exp(logp), index=dates, columns=list(ASSETS))


def fixture_path() -> Path:
    return Path(str(resources.files("sievevar") / "data" / FIXTURE))


def write_fixture(path=None, seed: int = 0) -> Path:
    p = Path(path) if path else fixture_path()
    synthetic_asset_prices(seed=seed).to_csv(p, date_format="%Y-%m-%d", float_format="%.8f",
                                             lineterminator="\n")
    return p


# --------------------------------------------------------------------------
# parsing helpers

def parse_dims(text) -> list:
    """``"1..15"``, ``"1,2,5"`` or a single integer."""
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    s = str(text).strip()
    m = re.fullmatch(r"(\d+)\s*\.\.\s*(\d+)", s)
    if m:
        lo, hi = int(m.group(1)), int(m.group(2))
        if lo > hi:
            raise ValueError(f"empty dimension range {s!r}")
        return list(range(lo, hi + 1))
    if re.fullmatch(r"\d+(\s*,\s*\d+)*", s):
        return [int(v) for v in s.split(",")]
    raise ValueError(f"cannot parse dimensions {s!r}; use '1..15' or '1,2,5'")


def _names(value) -> list:
    if value is None:
        return []
    if isinstance(value, (list, tuple)):
        return [str(v) for v in value]
    return [v.strip() for v in str(value).split(",") if v.strip()]


def _sizes(value) -> tuple:
    try:
        sizes = tuple(int(v) for v in _names(value))
    except ValueError as e:
        raise UsageError(f"hidden sizes must be integers: {value!r}") from e
    if not sizes or min(sizes) < 1:
        raise UsageError(f"hidden sizes must be positive: {value!r}")
    return sizes


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


COMMON = {"output_dir": "sievevar-out", "seed": 0}
DEFAULTS = {
    "simulate": {"preset": "table2", "cell": "2x1", "model": "model2", "B": None, "n": None,
                 "noise_sd": None, "hidden": None, "workers": 1},
    "fit": {"data": None, "preset": "model2", "n": None, "target": "y", "linear": None,
            "nonparametric": None, "hidden": "10", "l1": 0.0, "max_epochs": None},
    "var-backtest": {"data": None, "date_column": "date", "columns": None, "asset": None,
                     "portfolio": None, "count": 50, "model": "sann-caviar", "alpha": 0.01,
                     "holdout": 1000, "lags": 2, "hidden": "10", "max_epochs": None,
                     "workers": 1},
    "rates": {"kernel_order": 2, "dims": "1..15"},
}


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    common = _Parser(add_help=False)
    common.add_argument("--output-dir", default=S, help="directory for reports (default: sievevar-out)")
    common.add_argument("--seed", type=int, default=S, help="master seed (default: 0)")
    common.add_argument("--config", default=None, help="JSON file with option values")

    parser = _Parser(prog="sievevar", description="Sieve and semiparametric estimation studies.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo studies")
    p.add_argument("--preset", choices=sorted(PRESETS), default=S)
    p.add_argument("--cell", default=S, help="table2 cell, relevant x noise (e.g. 15x10)")
    p.add_argument("--model", choices=("model1", "model2", "model2a"), default=S,
                   help="table3 design")
    p.add_argument("--B", type=int, default=S, help="replications")
    p.add_argument("--n", type=int, default=S, help="sample size")
    p.add_argument("--noise-sd", type=float, default=S)
    p.add_argument("--hidden", type=int, default=S, help="hidden units (table2/table3)")
    p.add_argument("--workers", type=int, default=S)

    p = sub.add_parser("fit", parents=[common], help="fit a partially linear sieve model")
    p.add_argument("--data", default=S, help="CSV with target and regressor columns")
    p.add_argument("--preset", choices=("model1", "model2", "linear"), default=S,
                   help="simulated design used when --data is absent")
    p.add_argument("--n", type=int, default=S)
    p.add_argument("--target", default=S)
    p.add_argument("--linear", default=S, help="comma-separated linear columns")
    p.add_argument("--nonparametric", default=S, help="comma-separated sieve inputs")
    p.add_argument("--hidden", default=S, help="comma-separated hidden layer sizes")
    p.add_argument("--l1", type=float, default=S, help="L1 penalty on the output layer")
    p.add_argument("--max-epochs", type=int, default=S)

    p = sub.add_parser("var-backtest", parents=[common], help="VaR forecasts and backtests")
    p.add_argument("--data", default=S, help="price CSV (default: bundled synthetic assets)")
    p.add_argument("--date-column", default=S)
    p.add_argument("--columns", default=S, help="comma-separated price columns to ingest")
    p.add_argument("--asset", default=S, help="single asset to model (default: first column)")
    p.add_argument("--portfolio", choices=("equal", "random"), default=S)
    p.add_argument("--count", type=int, default=S, help="number of random portfolios")
    p.add_argument("--model", default=S,
                   help=f"comma-separated models from {', '.join(MODELS)}, or 'all'")
    p.add_argument("--alpha", type=float, default=S)
    p.add_argument("--holdout", type=int, default=S)
    p.add_argument("--lags", type=int, default=S, help="lags of squared returns")
    p.add_argument("--hidden", default=S)
    p.add_argument("--max-epochs", type=int, default=S)
    p.add_argument("--workers", type=int, default=S)

    p = sub.add_parser("rates", parents=[common], help="AMISE rate exponents")
    p.add_argument("--kernel-order", type=int, default=S)
    p.add_argument("--dims", default=S, help="'1..15' or '1,2,5'")
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    """Defaults, then the JSON config file, then explicit flags."""
    cmd = args.command
    cfg = {**COMMON, **DEFAULTS[cmd]}
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise UsageError(f"config file not found: {path}")
        try:
            loaded = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise UsageError(f"config file is not valid JSON: {e}") from e
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a JSON object")
        for key, value in loaded.items():
            k = key.replace("-", "_")
            if k not in cfg:
                raise UsageError(f"unknown config key {key!r} for {cmd}")
            cfg[k] = value
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    cfg.update(flags)
    if not isinstance(cfg["seed"], int) or isinstance(cfg["seed"], bool) or cfg["seed"] < 0:
        raise UsageError("seed must be a non-negative integer")
    return cfg


def _provenance(cmd: str, cfg: dict) -> dict:
    # the output directory is where the report lives, not part of the run
    return {"command": cmd, "version": __version__,
            **{k: v for k, v in sorted(cfg.items()) if k != "output_dir"}}


def _write_json(path: Path, payload: dict) -> Path:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_jsonable) + "\n",
                    encoding="utf-8")
    return path


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _write_csv(path: Path, frame: pd.DataFrame) -> Path:
    frame.to_csv(path, **CSV_OPTS)
    return path


def _positive(cfg: dict, *keys):
    for k in keys:
        v = cfg.get(k)
        if v is not None and (not isinstance(v, int) or isinstance(v, bool) or v < 1):
            raise UsageError(f"{k} must be a positive integer, got {v!r}")


# --------------------------------------------------------------------------
# subcommands

def cmd_simulate(cfg: dict, out: Path) -> tuple[list, dict]:
    _positive(cfg, "B", "n", "hidden", "workers")
    preset, seed = cfg["preset"], cfg["seed"]
    if preset not in PRESETS:
        raise UsageError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    opt = {k: cfg[k] for k in ("B", "n") if cfg[k] is not None}
    try:
        if preset == "table2":
            extra = {k: cfg[k] for k in ("noise_sd", "hidden") if cfg[k] is not None}
            study = PRESETS[preset](cfg["cell"], seed=seed, **opt, **extra)
        elif preset == "table3":
            extra = {"hidden": cfg["hidden"]} if cfg["hidden"] is not None else {}
            study = PRESETS[preset](cfg["model"], seed=seed, **opt, **extra)
        elif preset == "fig2":
            study = PRESETS[preset](seed=seed, **{k: v for k, v in opt.items() if k == "n"})
        else:
            study = PRESETS[preset](seed=seed, **opt)
    except (ValueError, TypeError) as e:
        raise UsageError(str(e)) from e

    report = {"study": study.name, "dgp": study.spec.to_dict()}
    paths = []
    if preset == "fig2":
        table = sieve_sweep(study.spec, study.orders, study.train_config)
        paths.append(_write_csv(out / "sweep.csv", table))
        report["sweep"] = table.to_dict(orient="records")
    elif preset == "fig3":
        table, mc = decompose_mse(study.spec, study.orders, B=study.B,
                                  train_config=study.train_config)
        paths.append(_write_csv(out / "decomposition.csv", table))
        paths += mc.write(out)
        report["decomposition"] = table.to_dict(orient="records")
    else:
        mc = run_mc(study.spec, study.estimators, B=study.B, split=study.split,
                    workers=cfg["workers"])
        paths += mc.write(out)
        report.update(mc.to_dict())
    return paths + [out / "report.json"], report


def _fit_data(cfg: dict):
    if cfg["data"] is not None:
        path = Path(cfg["data"])
        if not path.is_file():
            raise UsageError(f"data file not found: {path}")
        frame = pd.read_csv(path)
        linear, nonparam = _names(cfg["linear"]), _names(cfg["nonparametric"])
        if not linear or not nonparam:
            raise UsageError("--linear and --nonparametric are required with --data")
        return frame, linear, nonparam
    try:
        spec = DgpSpec(cfg["preset"], n=cfg["n"], seed=cfg["seed"])
    except ValueError as e:
        raise UsageError(str(e)) from e
    lay = layout(spec)
    if not lay.linear:
        raise UsageError(f"preset {cfg['preset']!r} has no linear part")
    frame = generate(spec, 0)
    linear = _names(cfg["linear"]) or list(lay.linear)
    nonparam = _names(cfg["nonparametric"]) or list(lay.nonparam)
    return frame, linear, nonparam


def cmd_fit(cfg: dict, out: Path) -> tuple[list, dict]:
    _positive(cfg, "n", "max_epochs")
    frame, linear, nonparam = _fit_data(cfg)
    missing = [c for c in [cfg["target"], *linear, *nonparam] if c not in frame.columns]
    if missing:
        raise UsageError(f"columns not in data: {missing}")
    try:
        tc = TrainConfig(l1_penalty=float(cfg["l1"]), seed=cfg["seed"])
        if cfg["max_epochs"] is not None:
            tc = replace(tc, max_epochs=cfg["max_epochs"])
        spec = PlmSpec(tuple(linear), tuple(nonparam), cfg["target"], _sizes(cfg["hidden"]),
                       train_config=tc)
    except (ValueError, TypeError) as e:
        raise UsageError(str(e)) from e
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fit = fit_sann(spec, frame)
    coefs = fit.coefficients().rename_axis("name").reset_index()
    fitted = pd.DataFrame({"fitted": fit.fitted, "residual": fit.residuals})
    paths = [_write_csv(out / "coefficients.csv", coefs), _write_csv(out / "fitted.csv", fitted)]
    return paths + [out / "report.json"], {"fit": fit.to_dict()}


def _models(value) -> list:
    names = _names(value)
    if names == ["all"]:
        return list(MODELS)
    bad = [m for m in names if m not in MODELS]
    if bad or not names:
        raise UsageError(f"unknown model(s) {bad or value!r}; choose from {MODELS} or 'all'")
    return names


def _fit_model(name: str, train: np.ndarray, alpha: float, cfg: dict, seed: int):
    if name in ("sann-caviar", "sann-caviar-p0"):
        tc = replace(CaviarSpec().train_config, seed=seed)
        if cfg["max_epochs"] is not None:
            tc = replace(tc, max_epochs=cfg["max_epochs"])
        spec = CaviarSpec(alpha=alpha, p=1 if name == "sann-caviar" else 0, lags=cfg["lags"],
                          hidden_sizes=_sizes(cfg["hidden"]), train_config=tc)
        return fit_caviar(spec, train)
    if name == "garch":
        return fit_garch11(train, var_alpha=alpha)
    if name == "sav-caviar":
        return fit_sav_caviar(train, alpha=alpha, seed=seed)
    return fit_constant_quantile(train, alpha)


def _backtest_series(y: np.ndarray, models: list, cfg: dict, seed: int):
    """Fit every model on the training part of ``y`` and backtest on the hold-out."""
    H, alpha = cfg["holdout"], cfg["alpha"]
    train = y[:-H]
    q = float(np.quantile(train, alpha))
    reports, paths, fits = [], {}, {}
    for i, name in enumerate(models):
        model = _fit_model(name, train, alpha, cfg, int(
            np.random.SeedSequence(seed, spawn_key=(i,)).generate_state(1)[0]))
        reports.append(backtest(model, y, H, quantile=q))
        paths[name] = np.asarray(model.var_path(y), dtype=float)
        fits[name] = model.to_dict()
    return reports, paths, fits


def _portfolio_job(args):
    y, models, cfg, seed = args
    reports, _, _ = _backtest_series(y, models, cfg, seed)
    return reports


def cmd_var_backtest(cfg: dict, out: Path) -> tuple[list, dict]:
    _positive(cfg, "count", "holdout", "lags", "max_epochs", "workers")
    models = _models(cfg["model"])
    alpha = cfg["alpha"]
    if not isinstance(alpha, (int, float)) or not 0.0 < alpha < 0.5:
        raise UsageError(f"alpha must lie in (0, 0.5), got {alpha!r}")
    _sizes(cfg["hidden"])
    path = Path(cfg["data"]) if cfg["data"] is not None else fixture_path()
    if not path.is_file():
        raise UsageError(f"data file not found: {path}")
    rets = ingest_prices(path, cfg["date_column"], _names(cfg["columns"]) or None)
    if cfg["holdout"] >= len(rets):
        raise UsageError(f"holdout {cfg['holdout']} leaves no training data ({len(rets)} returns)")

    written = []
    if cfg["portfolio"] == "random":
        ps = random_portfolios(rets, count=cfg["count"], seed=cfg["seed"])
        seeds = np.random.SeedSequence(cfg["seed"], spawn_key=(7,)).generate_state(ps.returns.shape[1])
        jobs = [(ps.returns[c].to_numpy(), models, cfg, int(s))
                for c, s in zip(ps.returns.columns, seeds)]
        if cfg["workers"] > 1:
            with ProcessPoolExecutor(cfg["workers"]) as pool:
                results = list(pool.map(_portfolio_job, jobs))
        else:
            results = [_portfolio_job(j) for j in jobs]
        rows = [{"portfolio": c, **r.to_dict()} for c, rs in zip(ps.returns.columns, results)
                for r in rs]
        table = pd.DataFrame(rows, columns=["portfolio", *VarBacktestReport.columns()])
        summary = _portfolio_summary(table)
        written += [_write_csv(out / "weights.csv", ps.weights.rename_axis("portfolio")
                               .reset_index()),
                    _write_csv(out / "backtests.csv", table),
                    _write_csv(out / "portfolio_summary.csv", summary)]
        report = {"series": "random_portfolios", "n_portfolios": int(ps.returns.shape[1]),
                  "summary": summary.to_dict(orient="records")}
        return written + [out / "report.json"], report

    if cfg["portfolio"] == "equal":
        ps = random_portfolios(rets, equal=True)
        series, label = ps.returns["equal"], "equal_weight_portfolio"
    else:
        asset = cfg["asset"] or rets.columns[0]
        if asset not in rets.columns:
            raise UsageError(f"asset {asset!r} not in data columns {list(rets.columns)}")
        series, label = rets[asset], asset
    y = series.to_numpy()
    reports, var_paths, fits = _backtest_series(y, models, cfg, cfg["seed"])
    table = pd.DataFrame([r.to_dict() for r in reports], columns=VarBacktestReport.columns())
    written.append(_write_csv(out / "backtests.csv", table))
    dates = series.index.strftime("%Y-%m-%d")
    for name, v in var_paths.items():
        frame = pd.DataFrame({"date": dates, "return": y, "var": v,
                              "exceed": exceedances(y, v),
                              "out_of_sample": np.arange(y.size) >= y.size - cfg["holdout"]})
        frame["out_of_sample"] = frame["out_of_sample"].astype(int)
        written.append(_write_csv(out / f"var_path_{name}.csv", frame))
    report = {"series": label, "n_returns": int(y.size), "n_train": int(y.size - cfg["holdout"]),
              "reports": [r.to_dict() for r in reports], "models": fits}
    if len(reports) == 1:
        report.update(reports[0].to_dict())
    return written + [out / "report.json"], report


def _portfolio_summary(table: pd.DataFrame) -> pd.DataFrame:
    g = table.groupby("model", sort=False)
    return g.agg(
        portfolios=("portfolio", "size"),
        exceedances_mean=("exceedances", "mean"),
        expected=("expected", "first"),
        failures_p_mean=("failures_p", "mean"),
        failures_reject_5pct=("failures_p", lambda p: float(np.mean(p < 0.05))),
        duration_p_mean=("duration_p", "mean"),
        duration_reject_5pct=("duration_p", lambda p: float(np.mean(p.dropna() < 0.05))
                              if p.notna().any() else np.nan),
        integrated_var_change_mean=("integrated_var_change", "mean"),
    ).reset_index()


def cmd_rates(cfg: dict, out: Path) -> tuple[list, dict]:
    try:
        dims = parse_dims(cfg["dims"])
        order = int(cfg["kernel_order"])
        table = rate_table(dims, order=order)
    except (ValueError, TypeError) as e:
        raise UsageError(str(e)) from e
    return [_write_csv(out / "rates.csv", table), out / "report.json"], \
        {"rates": table.to_dict(orient="records")}


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "var-backtest": cmd_var_backtest,
            "rates": cmd_rates}


def _fail(kind: str, message: str, code: int) -> int:
    print(json.dumps({"error": {"type": kind, "message": message}, "exit_code": code}),
          file=sys.stderr)
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
        cfg = resolve_config(args)
        out = Path(cfg["output_dir"])
        out.mkdir(parents=True, exist_ok=True)
        paths, report = COMMANDS[args.command](cfg, out)
        _write_json(out / "report.json", {"run_config": _provenance(args.command, cfg), **report})
    except UsageError as e:
        return _fail("usage", str(e), EXIT_USAGE)
    except Exception as e:  # noqa: BLE001 - every runtime failure maps to exit code 1
        log.debug("run failed", exc_info=True)
        return _fail("runtime", f"{type(e).__name__}: {e}", EXIT_RUNTIME)
    print(json.dumps({"status": "ok", "outputs": [str(p) for p in paths]}))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
