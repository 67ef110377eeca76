"""Dynamic network connectedness from VAR variance decompositions."""

__version__ = "0.1.0"

from .connectedness import ConnectednessReport, degrees, net_measures, pairwise, report, total
from .fevd import ConnectednessTable, FevdMatrix, fevd, fevd_cholesky, fevd_generalized, normalize
from .ingest import OhlcPanel, Panel, load_ohlc, load_panel, log_returns, range_volatility, save_panel
from .lasso import LassoConfig, estimate_lasso, lambda_path
from .risk import TailConfig, covar, mes, risk_vs_connectedness
from .rolling import RollingConfig, RollingSeries, extract_path, roll, single_shot
from .var_model import (MaCoefficients, VarModel, VarSpec, estimate_ols, ma_coefficients,
                        select_lag, stability_check)

__all__ = [
    "Panel", "OhlcPanel", "load_panel", "load_ohlc", "save_panel", "log_returns", "range_volatility",
    "VarSpec", "VarModel", "MaCoefficients", "estimate_ols", "select_lag", "ma_coefficients",
    "stability_check", "LassoConfig", "estimate_lasso", "lambda_path",
    "FevdMatrix", "ConnectednessTable", "fevd", "fevd_cholesky", "fevd_generalized", "normalize",
    "ConnectednessReport", "report", "pairwise", "degrees", "net_measures", "total",
    "RollingConfig", "RollingSeries", "roll", "extract_path", "single_shot",
    "TailConfig", "mes", "covar", "risk_vs_connectedness",
]
