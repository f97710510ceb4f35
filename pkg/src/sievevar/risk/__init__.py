from .backtests import (
    TestResult,
    VarBacktestReport,
    backtest,
    duration_test,
    durations,
    exceedances,
    failures_test,
    integrated_var_change,
)
from .caviar import (
    CaviarModel,
    CaviarSpec,
    ConstantQuantile,
    RecursionDivergence,
    VarForecastSeries,
    caviar_path,
    fit_caviar,
    fit_constant_quantile,
    forecast_var,
    lagged_squares,
)
from .garch import GarchConvergenceError, GarchFit, GarchSpec, fit_garch11, simulate_garch11
from .portfolios import PortfolioSet, equal_weights, portfolio_returns, random_portfolios
from .sav import SavModel, fit_sav_caviar

__all__ = [
    "TestResult",
    "VarBacktestReport",
    "backtest",
    "duration_test",
    "durations",
    "exceedances",
    "failures_test",
    "integrated_var_change",
    "CaviarModel",
    "CaviarSpec",
    "ConstantQuantile",
    "RecursionDivergence",
    "VarForecastSeries",
    "caviar_path",
    "fit_caviar",
    "fit_constant_quantile",
    "forecast_var",
    "lagged_squares",
    "GarchConvergenceError",
    "GarchFit",
    "GarchSpec",
    "fit_garch11",
    "simulate_garch11",
    "PortfolioSet",
    "equal_weights",
    "portfolio_returns",
    "random_portfolios",
    "SavModel",
    "fit_sav_caviar",
]
