"""Forecast metrics, plug-in predictors, the rolling backtest and the CLI."""

from .backtest import ArGarchSpec, BacktestData, BacktestReport, rolling_backtest, window_spans
from .metrics import exp_transform, mse, mspe
from .predict import ArGarchModel, PlugInModel, one_step_predict

__all__ = [
    "ArGarchModel", "ArGarchSpec", "BacktestData", "BacktestReport", "PlugInModel",
    "exp_transform", "mse", "mspe", "one_step_predict", "rolling_backtest", "window_spans",
]
