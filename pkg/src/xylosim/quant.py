"""
Float-to-integer deployment pass.

Each layer gets one symmetric scale ``s = 127 / max|W|``. Weights become
``round(W * s)`` clipped to int8, thresholds become
``clip(round(theta * s * kappa), 1, 32767)`` and time constants map to shift
decays via ``dash = round(log2(tau / dt))``. Rounding is half away from zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from .errors import ConfigError, NumericalError
from .snn import I16_MAX, MAX_DASH, W8_MAX, W8_MIN, QuantLayer, QuantNetwork
from .synnet import FloatNetwork

__all__ = ["QuantReport", "round_half_away", "dash_from_tau", "quantize_network"]


def round_half_away(x):
    """Round to nearest integer, ties away from zero."""
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def dash_from_tau(tau_s: float, dt_s: float) -> int:
    if not tau_s >= dt_s / 2:
        raise ConfigError(f"tau {tau_s} s is shorter than half a step ({dt_s} s)")
    if tau_s < dt_s:
        return 0
    dash = int(round_half_away(math.log2(tau_s / dt_s)))
    return min(max(dash, 0), MAX_DASH)


@dataclass
class QuantReport:
    scales: List[float] = field(default_factory=list)
    max_abs_weights: List[float] = field(default_factory=list)
    weight_mse: List[float] = field(default_factory=list)
    dash_table: List[Tuple[float, int]] = field(default_factory=list)
    kappa: float = 1.0

    def to_dict(self) -> dict:
        return {
            "kappa": self.kappa,
            "layers": [
                {"scale": s, "max_abs_weight": m, "weight_mse": e}
                for s, m, e in zip(self.scales, self.max_abs_weights, self.weight_mse)
            ],
            "dash_table": [{"tau_s": tau, "dash": d} for tau, d in self.dash_table],
        }


def quantize_network(net: FloatNetwork, kappa: float = 1.0):
    """Returns ``(QuantNetwork, QuantReport)``."""
    if not kappa > 0:
        raise ConfigError("kappa must be positive")
    report = QuantReport(kappa=kappa)
    dash_map = {}

    def dashes(taus):
        out = []
        for tau in taus:
            key = float(tau)
            if key not in dash_map:
                dash_map[key] = dash_from_tau(key, net.dt_s)
            out.append(dash_map[key])
        return np.array(out, dtype=np.int64)

    qlayers = []
    for layer in net.layers:
        w = layer.weights
        if not np.all(np.isfinite(w)) or not np.all(np.isfinite(layer.threshold)):
            raise NumericalError("network contains non-finite weights or thresholds")
        max_abs = float(np.abs(w).max()) if w.size else 0.0
        scale = W8_MAX / max_abs if max_abs > 0 else 1.0
        wq = np.clip(round_half_away(w * scale), W8_MIN, W8_MAX).astype(np.int64)
        th = np.clip(round_half_away(layer.threshold * scale * kappa), 1, I16_MAX).astype(np.int64)
        qlayers.append(
            QuantLayer(
                wq,
                syn_dash=dashes(layer.tau_syn_s),
                mem_dash=dashes(layer.tau_mem_s),
                threshold=th,
                max_spikes_per_step=net.max_spikes_per_step,
            )
        )
        report.scales.append(scale)
        report.max_abs_weights.append(max_abs)
        report.weight_mse.append(float(np.mean((w - wq / scale) ** 2)) if w.size else 0.0)
    report.dash_table = sorted(dash_map.items())
    return QuantNetwork(qlayers[:-1], qlayers[-1], net.dt_s), report
