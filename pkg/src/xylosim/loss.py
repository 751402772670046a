"""
Peak loss over readout membrane traces.

For the target channel the loss is the squared gap between ``g`` and the
mean of the trace over a window of ``M`` seconds starting at its peak. Every
other channel is pushed towards zero with weight ``w_l``::

    loss = (mean(x_y[m : m + M/dt]) - g)**2 + w_l * sum_{i != y} mean(x_i**2)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericalError, ShapeError

__all__ = ["TraceMatrix", "PeakLossParams", "window_steps", "peak_loss", "peak_loss_terms"]


@dataclass(frozen=True, eq=False)
class TraceMatrix:
    """Membrane potential per step (rows) and readout channel (columns)."""

    values: np.ndarray
    dt_s: float = 0.010

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 2:
            raise ShapeError(f"traces must be (T>=1, C>=2), got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise NumericalError("traces contain non-finite values")
        if not self.dt_s > 0:
            raise ConfigError("dt_s must be positive")
        object.__setattr__(self, "values", values)

    @property
    def num_steps(self) -> int:
        return self.values.shape[0]

    @property
    def num_channels(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class PeakLossParams:
    window_s: float = 0.100
    target_peak: float = 1.5
    off_target_weight: float = 1.0

    def __post_init__(self):
        if not self.window_s > 0:
            raise ConfigError("window_s must be positive")
        if not self.off_target_weight >= 0:
            raise ConfigError("off_target_weight must be non-negative")


def window_steps(window_s: float, dt_s: float) -> int:
    if window_s < dt_s * (1 - 1e-9):
        raise ConfigError(f"window {window_s} s is shorter than one step ({dt_s} s)")
    return max(1, int(round(window_s / dt_s)))


def peak_loss_terms(traces: TraceMatrix, target_class: int, params: PeakLossParams = PeakLossParams()) -> np.ndarray:
    """Per-channel loss contributions; they sum to :func:`peak_loss`."""
    x = traces.values
    c = traces.num_channels
    if not 0 <= target_class < c:
        raise IndexError(f"target class {target_class} out of range for {c} channels")
    width = window_steps(params.window_s, traces.dt_s)
    terms = params.off_target_weight * np.mean(x**2, axis=0)
    target = x[:, target_class]
    m = int(np.argmax(target))
    terms[target_class] = (np.mean(target[m : m + width]) - params.target_peak) ** 2
    return terms


def peak_loss(traces: TraceMatrix, target_class: int, params: PeakLossParams = PeakLossParams()) -> float:
    return float(np.sum(peak_loss_terms(traces, target_class, params)))
