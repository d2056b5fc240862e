"""Hierarchical risk parity research toolkit."""

import json

from ._hrplab import (
    DataError,
    Error,
    NumericalError,
    ValidationError,
    backtest_json,
    correlation,
    covariance,
    distance,
    gmv_weights,
    hrp_weights,
    run_cli,
    seriation,
    shrink,
    single_linkage,
    summarize,
    synthetic,
    tangency_weights,
)


def backtest(returns, rf, factors, **kwargs):
    """Run a backtest from CSV paths and return the parsed report."""
    return json.loads(backtest_json(str(returns), str(rf), str(factors), **kwargs))


__all__ = [
    "DataError",
    "Error",
    "NumericalError",
    "ValidationError",
    "backtest",
    "backtest_json",
    "correlation",
    "covariance",
    "distance",
    "gmv_weights",
    "hrp_weights",
    "run_cli",
    "seriation",
    "shrink",
    "single_linkage",
    "summarize",
    "synthetic",
    "tangency_weights",
]
