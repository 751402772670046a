"""
SynNet float models.

A SynNet is a stack of fully connected LIF layers. Each hidden
layer spreads its neurons over a ladder of synaptic time constants
``tau_n = 2**n * dt`` (n = 1 .., count), shortest first. Membrane and readout
time constants are fixed at 20 ms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from .errors import ConfigError, ShapeError

__all__ = [
    "SynNetSpec",
    "FloatLayer",
    "FloatNetwork",
    "FloatRunResult",
    "assign_time_constants",
    "group_sizes",
    "build_synnet",
    "run_float",
]


@dataclass(frozen=True)
class SynNetSpec:
    hidden_widths: Tuple[int, ...] = (31, 31, 31)
    tau_counts: Tuple[int, ...] = (3, 7, 7)
    num_inputs: int = 16
    num_classes: int = 4
    dt_s: float = 0.010
    tau_mem_s: float = 0.020
    threshold: float = 1.0
    max_spikes_per_step: int = 15

    def __post_init__(self):
        object.__setattr__(self, "hidden_widths", tuple(int(h) for h in self.hidden_widths))
        object.__setattr__(self, "tau_counts", tuple(int(c) for c in self.tau_counts))
        if len(self.hidden_widths) != len(self.tau_counts):
            raise ConfigError("hidden_widths and tau_counts must have the same length")
        for width, count in zip(self.hidden_widths, self.tau_counts):
            if width < 1 or count < 1:
                raise ConfigError("layer widths and tau counts must be positive")
            if count > width:
                raise ConfigError(f"{count} time constants cannot be spread over {width} neurons")
        if self.num_inputs < 1 or self.num_classes < 1:
            raise ConfigError("num_inputs and num_classes must be positive")
        if not (self.dt_s > 0 and self.tau_mem_s >= self.dt_s):
            raise ConfigError("need dt_s > 0 and tau_mem_s >= dt_s")
        if not self.threshold > 0:
            raise ConfigError("threshold must be positive")


def group_sizes(width: int, count: int) -> List[int]:
    """Split ``width`` into ``count`` near-equal groups; earlier groups take the remainder."""
    if not 1 <= count <= width:
        raise ConfigError(f"need 1 <= count <= width, got count={count}, width={width}")
    base, extra = divmod(width, count)
    return [base + (1 if g < extra else 0) for g in range(count)]


def assign_time_constants(width: int, count: int, dt_s: float) -> np.ndarray:
    sizes = group_sizes(width, count)
    return np.concatenate(
        [np.full(size, 2.0 ** (g + 1) * dt_s) for g, size in enumerate(sizes)]
    )


@dataclass(frozen=True, eq=False)
class FloatLayer:
    weights: np.ndarray
    tau_syn_s: np.ndarray
    tau_mem_s: np.ndarray
    threshold: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        if w.ndim != 2:
            raise ShapeError(f"weights must be 2-D, got shape {w.shape}")
        n = w.shape[0]
        object.__setattr__(self, "weights", w)
        for name in ("tau_syn_s", "tau_mem_s", "threshold"):
            arr = np.array(np.broadcast_to(np.asarray(getattr(self, name), dtype=np.float64), (n,)))
            if not np.all(arr > 0):
                raise ConfigError(f"{name} must be positive")
            object.__setattr__(self, name, arr)

    @property
    def num_inputs(self) -> int:
        return self.weights.shape[1]

    @property
    def num_outputs(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True, eq=False)
class FloatNetwork:
    hidden_layers: Sequence[FloatLayer]
    readout: FloatLayer
    dt_s: float = 0.010
    max_spikes_per_step: int = 15

    def __post_init__(self):
        object.__setattr__(self, "hidden_layers", tuple(self.hidden_layers))
        layers = self.layers
        for i, (a, b) in enumerate(zip(layers[:-1], layers[1:])):
            if a.num_outputs != b.num_inputs:
                raise ShapeError(
                    f"layer {i} has {a.num_outputs} outputs but layer {i + 1} expects {b.num_inputs} inputs"
                )

    @property
    def layers(self) -> tuple:
        return self.hidden_layers + (self.readout,)

    @property
    def num_inputs(self) -> int:
        return self.layers[0].num_inputs

    @property
    def num_classes(self) -> int:
        return self.readout.num_outputs

    def __eq__(self, other):
        if not isinstance(other, FloatNetwork):
            return NotImplemented
        if len(self.layers) != len(other.layers) or self.dt_s != other.dt_s:
            return False
        return all(
            np.array_equal(getattr(a, f), getattr(b, f))
            for a, b in zip(self.layers, other.layers)
            for f in ("weights", "tau_syn_s", "tau_mem_s", "threshold")
        )


def build_synnet(spec: SynNetSpec = SynNetSpec(), init_seed: int = 0) -> FloatNetwork:
    """
    Randomly initialised SynNet. Weights are uniform in
    ``[-1/sqrt(fan_in), 1/sqrt(fan_in)]``; the same seed gives the same network.
    """
    rng = np.random.default_rng(init_seed)
    widths = list(spec.hidden_widths) + [spec.num_classes]
    fan_in = spec.num_inputs
    layers = []
    for i, width in enumerate(widths):
        bound = 1.0 / np.sqrt(fan_in)
        weights = rng.uniform(-bound, bound, size=(width, fan_in))
        if i < len(spec.hidden_widths):
            tau_syn = assign_time_constants(width, spec.tau_counts[i], spec.dt_s)
        else:
            tau_syn = np.full(width, spec.tau_mem_s)
        layers.append(FloatLayer(weights, tau_syn, spec.tau_mem_s, spec.threshold))
        fan_in = width
    return FloatNetwork(layers[:-1], layers[-1], spec.dt_s, spec.max_spikes_per_step)


@dataclass
class FloatRunResult:
    class_spike_counts: np.ndarray
    readout_traces: np.ndarray

    @property
    def decision(self) -> int:
        return int(np.argmax(self.class_spike_counts))


def run_float(net: FloatNetwork, counts) -> FloatRunResult:
    """
    Real-valued reference simulation over a (bins, channels) raster.

    Uses the same step order as the integer core with per-step retention
    ``1 - dt/tau`` (forward Euler), which for ``tau = 2**n * dt`` equals the
    shift-decay retention ``1 - 2**-n``.
    """
    counts = np.asarray(getattr(counts, "counts", counts), dtype=np.float64)
    if counts.ndim != 2 or counts.shape[1] != net.num_inputs:
        raise ShapeError(f"raster shape {counts.shape} does not match {net.num_inputs} inputs")
    keep_syn = [np.clip(1 - net.dt_s / layer.tau_syn_s, 0, 1) for layer in net.layers]
    keep_mem = [np.clip(1 - net.dt_s / layer.tau_mem_s, 0, 1) for layer in net.layers]
    i_syn = [np.zeros(layer.num_outputs) for layer in net.layers]
    v_mem = [np.zeros(layer.num_outputs) for layer in net.layers]
    totals = np.zeros(net.num_classes, dtype=np.int64)
    traces = np.zeros((counts.shape[0], net.num_classes))
    for t, x in enumerate(counts):
        for l, layer in enumerate(net.layers):
            i_syn[l] = i_syn[l] * keep_syn[l] + layer.weights @ x
            v_mem[l] = v_mem[l] * keep_mem[l] + i_syn[l]
            spikes = np.clip(np.floor(v_mem[l] / layer.threshold), 0, net.max_spikes_per_step)
            v_mem[l] = v_mem[l] - spikes * layer.threshold
            x = spikes
        totals += x.astype(np.int64)
        traces[t] = v_mem[-1]
    return FloatRunResult(totals, traces)
