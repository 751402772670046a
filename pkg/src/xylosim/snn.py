"""
Integer LIF simulation core.

Weights are 8-bit signed, synaptic current and membrane potential are 16-bit
signed with saturating adds, and exponential decay is realised with bit
shifts: ``v <- v - (v >> dash)`` gives per-step retention ``1 - 2**-dash``,
i.e. a time constant of ``2**dash`` simulation steps.

Per step and per output neuron ``j`` the order of operations is:

1. ``i_syn[j] = decay16(i_syn[j], syn_dash[j])``
2. ``i_syn[j] = sat_add16(i_syn[j], sum_i W[j, i] * counts[i])``
3. ``v_mem[j] = decay16(v_mem[j], mem_dash[j])``
4. ``v_mem[j] = sat_add16(v_mem[j], i_syn[j])``
5. emit ``k = min(v_mem // threshold, max_spikes_per_step)`` spikes when
   ``v_mem >= threshold`` and subtract ``k * threshold``.

Spikes from layer ``l`` reach layer ``l + 1`` within the same step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numba
import numpy as np

from .errors import ConfigError, ShapeError

__all__ = [
    "I16_MIN",
    "I16_MAX",
    "decay16",
    "sat_add16",
    "QuantLayer",
    "QuantNetwork",
    "LayerState",
    "StepTelemetry",
    "InferenceReport",
    "SnnStream",
    "layer_step",
    "network_step",
    "initial_states",
    "run_raster",
    "tone_detector",
]

I16_MIN, I16_MAX = -32768, 32767
W8_MIN, W8_MAX = -128, 127
MAX_DASH = 15


def decay16(value, dash):
    """One step of shift decay. Works on Python ints and integer arrays."""
    if isinstance(value, np.ndarray):
        return value - (value >> np.asarray(dash, dtype=value.dtype))
    return value - (value >> dash)


def sat_add16(a, b):
    """Add and clamp into the signed 16-bit range."""
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return np.clip(np.add(a, b, dtype=np.int64), I16_MIN, I16_MAX)
    return max(I16_MIN, min(I16_MAX, a + b))


def _int_array(values, name, ndim, lo, hi):
    arr = np.asarray(values)
    if arr.ndim != ndim:
        raise ShapeError(f"{name} must be {ndim}-D, got shape {arr.shape}")
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        if not np.all(np.equal(np.mod(arr, 1), 0)):
            raise ConfigError(f"{name} must hold integers")
    arr = arr.astype(np.int64)
    if arr.size and (arr.min() < lo or arr.max() > hi):
        raise ConfigError(f"{name} values must lie in [{lo}, {hi}]")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class QuantLayer:
    """Fully connected integer LIF layer; ``weights`` is (out, in)."""

    weights: np.ndarray
    syn_dash: np.ndarray
    mem_dash: np.ndarray
    threshold: np.ndarray
    max_spikes_per_step: int = 15

    def __post_init__(self):
        w = _int_array(self.weights, "weights", 2, W8_MIN, W8_MAX)
        n = w.shape[0]

        def per_neuron(values, name, lo, hi):
            arr = np.broadcast_to(np.asarray(values), (n,))
            return _int_array(np.array(arr), name, 1, lo, hi)

        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "syn_dash", per_neuron(self.syn_dash, "syn_dash", 0, MAX_DASH))
        object.__setattr__(self, "mem_dash", per_neuron(self.mem_dash, "mem_dash", 0, MAX_DASH))
        object.__setattr__(self, "threshold", per_neuron(self.threshold, "threshold", 1, I16_MAX))
        if int(self.max_spikes_per_step) != self.max_spikes_per_step or self.max_spikes_per_step < 1:
            raise ConfigError("max_spikes_per_step must be an integer >= 1")
        object.__setattr__(self, "max_spikes_per_step", int(self.max_spikes_per_step))

    @property
    def num_inputs(self) -> int:
        return self.weights.shape[1]

    @property
    def num_outputs(self) -> int:
        return self.weights.shape[0]

    def __eq__(self, other):
        if not isinstance(other, QuantLayer):
            return NotImplemented
        return (
            self.weights.shape == other.weights.shape
            and np.array_equal(self.weights, other.weights)
            and np.array_equal(self.syn_dash, other.syn_dash)
            and np.array_equal(self.mem_dash, other.mem_dash)
            and np.array_equal(self.threshold, other.threshold)
            and self.max_spikes_per_step == other.max_spikes_per_step
        )


@dataclass(frozen=True, eq=False)
class QuantNetwork:
    """Stack of hidden layers followed by a spiking readout."""

    hidden_layers: Sequence[QuantLayer]
    readout: QuantLayer
    dt_s: float = 0.010

    def __post_init__(self):
        object.__setattr__(self, "hidden_layers", tuple(self.hidden_layers))
        if not self.dt_s > 0:
            raise ConfigError("dt_s must be positive")
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

    @property
    def num_neurons(self) -> int:
        return sum(layer.num_outputs for layer in self.layers)

    def __eq__(self, other):
        if not isinstance(other, QuantNetwork):
            return NotImplemented
        return (
            len(self.layers) == len(other.layers)
            and all(a == b for a, b in zip(self.layers, other.layers))
            and self.dt_s == other.dt_s
        )


@dataclass
class LayerState:
    i_syn: np.ndarray
    v_mem: np.ndarray

    @classmethod
    def zeros(cls, n: int) -> "LayerState":
        return cls(np.zeros(n, dtype=np.int64), np.zeros(n, dtype=np.int64))

    def copy(self) -> "LayerState":
        return LayerState(self.i_syn.copy(), self.v_mem.copy())


@dataclass
class StepTelemetry:
    syn_ops: int = 0
    neuron_updates: int = 0
    spikes_emitted: int = 0

    def __add__(self, other: "StepTelemetry") -> "StepTelemetry":
        return StepTelemetry(
            self.syn_ops + other.syn_ops,
            self.neuron_updates + other.neuron_updates,
            self.spikes_emitted + other.spikes_emitted,
        )

    def scaled(self, factor: float) -> "StepTelemetry":
        return StepTelemetry(self.syn_ops * factor, self.neuron_updates * factor, self.spikes_emitted * factor)


def layer_step(layer: QuantLayer, state: LayerState, input_counts):
    """Advance one layer by one step. Returns ``(spike_counts, telemetry)``."""
    counts = np.asarray(input_counts, dtype=np.int64)
    if counts.shape != (layer.num_inputs,):
        raise ShapeError(f"expected {layer.num_inputs} input counts, got shape {counts.shape}")

    i_syn = state.i_syn - (state.i_syn >> layer.syn_dash)
    active = np.count_nonzero(counts)
    if active:
        i_syn += layer.weights @ counts
        np.clip(i_syn, I16_MIN, I16_MAX, out=i_syn)

    v = state.v_mem - (state.v_mem >> layer.mem_dash)
    v += i_syn
    np.clip(v, I16_MIN, I16_MAX, out=v)

    spikes = np.floor_divide(v, layer.threshold)
    np.clip(spikes, 0, layer.max_spikes_per_step, out=spikes)
    v -= spikes * layer.threshold

    state.i_syn = i_syn
    state.v_mem = v
    telemetry = StepTelemetry(
        syn_ops=int(active) * layer.num_outputs,
        neuron_updates=layer.num_outputs,
        spikes_emitted=int(spikes.sum()),
    )
    return spikes, telemetry


def initial_states(net: QuantNetwork) -> List[LayerState]:
    return [LayerState.zeros(layer.num_outputs) for layer in net.layers]


def network_step(net: QuantNetwork, states: List[LayerState], input_counts):
    """Push one input bin through every layer. Returns ``(readout_spikes, telemetry)``."""
    if len(states) != len(net.layers):
        raise ShapeError(f"expected {len(net.layers)} layer states, got {len(states)}")
    x = np.asarray(input_counts, dtype=np.int64)
    if x.shape != (net.num_inputs,):
        raise ShapeError(f"expected {net.num_inputs} input counts, got shape {x.shape}")
    total = StepTelemetry()
    for layer, state in zip(net.layers, states):
        x, t = layer_step(layer, state, x)
        total = total + t
    return x, total


@dataclass(eq=False)
class InferenceReport:
    decision: int
    class_spike_counts: np.ndarray
    telemetry: StepTelemetry
    simulated_steps: int
    readout_traces: Optional[np.ndarray] = None
    estimated_dynamic_energy_j: Optional[float] = None
    estimated_active_energy_j: Optional[float] = None
    latency_s: Optional[float] = None

    def __eq__(self, other):
        if not isinstance(other, InferenceReport):
            return NotImplemented
        traces_equal = (self.readout_traces is None and other.readout_traces is None) or (
            self.readout_traces is not None
            and other.readout_traces is not None
            and np.array_equal(self.readout_traces, other.readout_traces)
        )
        return (
            self.decision == other.decision
            and np.array_equal(self.class_spike_counts, other.class_spike_counts)
            and self.telemetry == other.telemetry
            and self.simulated_steps == other.simulated_steps
            and traces_equal
            and self.estimated_dynamic_energy_j == other.estimated_dynamic_energy_j
            and self.estimated_active_energy_j == other.estimated_active_energy_j
            and self.latency_s == other.latency_s
        )


@numba.njit(cache=True, nogil=True)
def _run_kernel(x, weights, n_out, n_in, syn_dash, mem_dash, threshold, cap, i_syn, v_mem, out, traces, tel):
    """
    Compiled equivalent of repeated :func:`network_step` over the rows of
    ``x``. Layer parameters are zero-padded to (layers, max_out[, max_in]).
    Mutates the state arrays, ``out``, ``traces`` and ``tel``.
    """
    num_layers = n_out.shape[0]
    width = weights.shape[1]
    buf_in = np.zeros(max(width, x.shape[1]), dtype=np.int64)
    buf_out = np.zeros(width, dtype=np.int64)
    record = traces.shape[0] > 0
    for t in range(x.shape[0]):
        for i in range(x.shape[1]):
            buf_in[i] = x[t, i]
        for l in range(num_layers):
            active = 0
            for i in range(n_in[l]):
                if buf_in[i] != 0:
                    active += 1
            tel[0] += active * n_out[l]
            tel[1] += n_out[l]
            for j in range(n_out[l]):
                isyn = i_syn[l, j] - (i_syn[l, j] >> syn_dash[l, j])
                if active:
                    acc = 0
                    for i in range(n_in[l]):
                        acc += weights[l, j, i] * buf_in[i]
                    isyn += acc
                    if isyn > 32767:
                        isyn = 32767
                    elif isyn < -32768:
                        isyn = -32768
                v = v_mem[l, j] - (v_mem[l, j] >> mem_dash[l, j])
                v += isyn
                if v > 32767:
                    v = 32767
                elif v < -32768:
                    v = -32768
                k = 0
                if v >= threshold[l, j]:
                    k = v // threshold[l, j]
                    if k > cap[l]:
                        k = cap[l]
                    v -= k * threshold[l, j]
                i_syn[l, j] = isyn
                v_mem[l, j] = v
                buf_out[j] = k
                tel[2] += k
            for j in range(n_out[l]):
                buf_in[j] = buf_out[j]
        last = num_layers - 1
        for c in range(n_out[last]):
            out[t, c] = buf_in[c]
            if record:
                traces[t, c] = v_mem[last, c]


def _pack(net: QuantNetwork):
    layers = net.layers
    width = max(max(l.num_outputs for l in layers), max(l.num_inputs for l in layers))
    L = len(layers)
    weights = np.zeros((L, width, width), dtype=np.int64)
    per_neuron = [np.zeros((L, width), dtype=np.int64) for _ in range(3)]
    syn_dash, mem_dash, threshold = per_neuron
    threshold[:] = 1
    for l, layer in enumerate(layers):
        weights[l, : layer.num_outputs, : layer.num_inputs] = layer.weights
        syn_dash[l, : layer.num_outputs] = layer.syn_dash
        mem_dash[l, : layer.num_outputs] = layer.mem_dash
        threshold[l, : layer.num_outputs] = layer.threshold
    n_out = np.array([l.num_outputs for l in layers], dtype=np.int64)
    n_in = np.array([l.num_inputs for l in layers], dtype=np.int64)
    cap = np.array([l.max_spikes_per_step for l in layers], dtype=np.int64)
    return weights, n_out, n_in, syn_dash, mem_dash, threshold, cap


class SnnStream:
    """
    Network state carried across successive raster chunks.

    ``feed`` accepts any number of bins and returns the readout spikes for
    each; feeding a raster in pieces gives exactly the same result as
    feeding it whole. Runs a compiled loop with the same arithmetic as
    :func:`network_step`.
    """

    def __init__(self, net: QuantNetwork, record_traces: bool = False):
        self.net = net
        self.record_traces = record_traces
        self._packed = _pack(net)
        self.reset()

    def reset(self):
        width = self._packed[0].shape[1]
        L = len(self.net.layers)
        self._i_syn = np.zeros((L, width), dtype=np.int64)
        self._v_mem = np.zeros((L, width), dtype=np.int64)
        self.class_spike_counts = np.zeros(self.net.num_classes, dtype=np.int64)
        self.telemetry = StepTelemetry()
        self.steps = 0
        self._traces: list = []

    @property
    def states(self) -> List[LayerState]:
        """Snapshot of per-layer state."""
        return [
            LayerState(self._i_syn[l, : layer.num_outputs].copy(), self._v_mem[l, : layer.num_outputs].copy())
            for l, layer in enumerate(self.net.layers)
        ]

    def feed(self, counts) -> np.ndarray:
        counts = np.ascontiguousarray(getattr(counts, "counts", counts), dtype=np.int64)
        if counts.ndim != 2 or counts.shape[1] != self.net.num_inputs:
            raise ShapeError(
                f"raster has shape {counts.shape}, network expects {self.net.num_inputs} channels"
            )
        T, C = counts.shape[0], self.net.num_classes
        out = np.zeros((T, C), dtype=np.int64)
        # traces hold the readout membrane after spike reset, at the end of each step
        traces = np.zeros((T if self.record_traces else 0, C), dtype=np.int64)
        tel = np.zeros(3, dtype=np.int64)
        weights, n_out, n_in, syn_dash, mem_dash, threshold, cap = self._packed
        _run_kernel(
            counts, weights, n_out, n_in, syn_dash, mem_dash, threshold, cap,
            self._i_syn, self._v_mem, out, traces, tel,
        )
        self.telemetry = self.telemetry + StepTelemetry(int(tel[0]), int(tel[1]), int(tel[2]))
        if self.record_traces:
            self._traces.append(traces)
        self.class_spike_counts += out.sum(axis=0)
        self.steps += T
        return out

    @property
    def traces(self) -> Optional[np.ndarray]:
        if not self.record_traces:
            return None
        if not self._traces:
            return np.zeros((0, self.net.num_classes), dtype=np.int64)
        return np.concatenate(self._traces, axis=0)

    def report(self) -> InferenceReport:
        return InferenceReport(
            decision=int(np.argmax(self.class_spike_counts)),
            class_spike_counts=self.class_spike_counts.copy(),
            telemetry=StepTelemetry(**vars(self.telemetry)),
            simulated_steps=self.steps,
            readout_traces=self.traces,
        )


def run_raster(net: QuantNetwork, raster, record_traces: bool = False) -> InferenceReport:
    """
    Simulate ``net`` from zero state over every bin of ``raster``.

    The decision is the readout with the most spikes; ties go to the lowest
    class index (``np.argmax`` semantics).
    """
    num_channels = raster.num_channels if hasattr(raster, "num_channels") else np.shape(raster)[1]
    if num_channels != net.num_inputs:
        raise ShapeError(f"raster has {num_channels} channels, network expects {net.num_inputs}")
    stream = SnnStream(net, record_traces=record_traces)
    stream.feed(raster)
    return stream.report()


def tone_detector(
    bands: Sequence[int],
    num_inputs: int = 16,
    weight: int = 64,
    inhibition: int = 32,
    threshold: int = 256,
    dt_s: float = 0.010,
) -> QuantNetwork:
    """
    Hand-wired readout-only network: input band ``bands[c]`` excites class
    ``c``; the other selected bands inhibit it.
    """
    if len(set(bands)) != len(bands):
        raise ConfigError("bands must be distinct")
    w = np.zeros((len(bands), num_inputs), dtype=np.int64)
    for c, band in enumerate(bands):
        if not 0 <= band < num_inputs:
            raise ConfigError(f"band {band} out of range for {num_inputs} inputs")
        w[:, band] = -inhibition
        w[c, band] = weight
    readout = QuantLayer(w, syn_dash=0, mem_dash=1, threshold=threshold)
    return QuantNetwork([], readout, dt_s)
