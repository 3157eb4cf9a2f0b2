"""Multi-component ARCH volatility forecasts, forward-variance market models and evaluation."""

__version__ = "0.1.0"

from .arch_process import (ProcessSpec, VolState, build_garch11, build_igarch1, build_igarch2,
                           build_lm_arch, effective_variance, init_state, run_cascade,
                           update_state)
from .forecast import (ForecastCurve, ForecastWeights, forecast_weights, forecasted_volatility,
                       forward_variance, term_structure)
from .timeseries import (ImpliedVolSeries, PriceSeries, ReturnSeries, load_csv, log_returns,
                         realized_volatility)

__all__ = [
    "ProcessSpec", "VolState", "build_garch11", "build_igarch1", "build_igarch2",
    "build_lm_arch", "effective_variance", "init_state", "run_cascade", "update_state",
    "ForecastCurve", "ForecastWeights", "forecast_weights", "forecasted_volatility",
    "forward_variance", "term_structure", "ImpliedVolSeries", "PriceSeries", "ReturnSeries",
    "load_csv", "log_returns", "realized_volatility",
]
