"""Sieve estimation with ReLU networks, semiparametric CAViaR and VaR backtests."""
__version__ = "0.1.0"
