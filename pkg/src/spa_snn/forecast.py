"""OU-based forecasting of recorded network observables.

A recorded window (membrane potential, conductance, or spike rate, sampled at
a fixed interval) is fitted with a mean-reverting model by moment matching:
the mean from the sample mean, the reversion rate from the lag-1
autocorrelation, and the diffusion from the stationary variance.  The fitted
model yields a conditional-mean forecast and its model mean-square error,
plus a bound check comparing realized forecast error against the model MSE.

These diagnostics are advisory: they describe how predictable the network's
working state is, and never feed back into training.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .stochastic import OuModel

# A series whose variance is below this is treated as constant.
_DEGENERATE_VAR = 1e-24


class NotOuLikeError(ValueError):
    """The series shows no positive lag-1 autocorrelation to fit."""


def fit_ou(series, dt: float) -> OuModel:
    """Moment-matching fit of a mean-reverting model to a sampled series.

    mean   <- sample mean
    rate   <- -ln(lag-1 autocorrelation) / dt
    diffusion from  diffusion^2 / (2 rate) = sample variance

    Raises NotOuLikeError when the lag-1 autocorrelation is not positive.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or len(x) < 10:
        raise ValueError("need a 1-d series of at least 10 points")
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    m = float(x.mean())
    centered = x - m
    var = float(centered @ centered) / len(x)
    if var < _DEGENERATE_VAR:
        return OuModel(reversion_rate=1.0, mean=m, diffusion=0.0)
    rho1 = float(centered[1:] @ centered[:-1]) / (centered @ centered)
    if rho1 <= 0.0:
        raise NotOuLikeError("series not OU-like")
    rate = -math.log(rho1) / dt
    if rate <= 0.0:  # rho1 >= 1 can occur on near-linear drifts
        raise NotOuLikeError("series not OU-like")
    diffusion = math.sqrt(2.0 * rate * var)
    return OuModel(reversion_rate=rate, mean=m, diffusion=diffusion)


@dataclass
class ForecastWindow:
    """A recorded observable window plus its fitted model."""

    observable: str
    series: np.ndarray
    dt: float
    model: OuModel

    @classmethod
    def from_series(cls, observable: str, series, dt: float) -> "ForecastWindow":
        series = np.asarray(series, dtype=float)
        return cls(observable=observable, series=series, dt=dt, model=fit_ou(series, dt))


def forecast_value(win: ForecastWindow, horizon: float) -> float:
    """Conditional-mean forecast ``horizon`` ms past the window end."""
    m = win.model.mean
    x_last = float(win.series[-1])
    return m + (x_last - m) * math.exp(-win.model.reversion_rate * horizon)


def forecast_mse(win: ForecastWindow, horizon: float) -> float:
    """Model mean-square error of the conditional-mean forecast:
    diffusion^2 * (1 - exp(-2 rate horizon)) / (2 rate)."""
    lam = win.model.reversion_rate
    c = win.model.diffusion
    return c * c * (1.0 - math.exp(-2.0 * lam * horizon)) / (2.0 * lam)


@dataclass
class ForecastCheck:
    """Realized-vs-model forecast error comparison for one horizon."""

    observable: str
    horizon: float
    e_realized: float
    e_model: float
    passed: bool


def check_bound(e_realized: float, e_model: float, observable: str = "",
                horizon: float = 0.0, rel_tol: float = 0.05) -> ForecastCheck:
    """Check that the realized forecast MSE does not exceed the model MSE
    beyond a statistical tolerance (relative, default 5%)."""
    passed = e_realized <= e_model * (1.0 + rel_tol) + 1e-12
    return ForecastCheck(
        observable=observable, horizon=horizon,
        e_realized=float(e_realized), e_model=float(e_model), passed=passed,
    )


def realized_forecast_mse(win: ForecastWindow, tail, horizon_steps: int = 1) -> float:
    """Empirical MSE of rolling conditional-mean forecasts against a held-out
    continuation ``tail`` of the same observable."""
    tail = np.asarray(tail, dtype=float)
    if len(tail) <= horizon_steps:
        raise ValueError("tail shorter than the forecast horizon")
    lam = win.model.reversion_rate
    m = win.model.mean
    decay = math.exp(-lam * win.dt * horizon_steps)
    series = np.concatenate([win.series[-1:], tail])
    origins = series[: len(tail) - horizon_steps + 1]
    targets = tail[horizon_steps - 1 :]
    preds = m + (origins - m) * decay
    err = targets - preds
    return float(err @ err) / len(err)
