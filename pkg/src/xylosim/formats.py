"""
On-disk formats.

evt-csv
    ASCII raster. Header ``# channels=<N> dt_ms=<D>``, then one
    ``<bin>,<channel>,<count>`` line per non-zero cell, sorted by bin then
    channel. A trailing ``# bins=<T>`` line preserves trailing empty bins
    and is optional on read.
qnet
    JSON document with ``dt_ms`` and ``layers[]`` (the last layer is the
    readout); every layer carries ``rows``, ``cols``, row-major ``weights``,
    ``syn_dash``, ``mem_dash``, ``threshold`` and ``max_spikes_per_step``.
fnet
    JSON document for float networks, used between ``build-net`` and
    ``quantize``.
"""

from __future__ import annotations

import csv
import json
import math
import re
from pathlib import Path
from typing import Union

import numpy as np
from scipy.io import wavfile

from .afe import AudioBuffer, EventRaster
from .errors import ConfigError, ParseError, ShapeError
from .loss import TraceMatrix
from .snn import QuantLayer, QuantNetwork
from .synnet import FloatLayer, FloatNetwork

PathLike = Union[str, Path]

_HEADER = re.compile(r"^#\s*channels=(\d+)\s+dt_ms=([0-9.eE+-]+)\s*$")
_FOOTER = re.compile(r"^#\s*bins=(\d+)\s*$")


def _fmt_ms(dt_s: float):
    ms = dt_s * 1000.0
    return int(round(ms)) if abs(ms - round(ms)) < 1e-9 else ms


# -- evt-csv ------------------------------------------------------------------


def write_evt_csv(raster: EventRaster, path: PathLike) -> None:
    lines = [f"# channels={raster.num_channels} dt_ms={_fmt_ms(raster.bin_dt_s)}"]
    bins, chans = np.nonzero(raster.counts)
    for t, c in zip(bins, chans):
        lines.append(f"{t},{c},{raster.counts[t, c]}")
    lines.append(f"# bins={raster.num_bins}")
    with open(path, "w", newline="\n", encoding="ascii") as f:
        f.write("\n".join(lines) + "\n")


def read_evt_csv(path: PathLike) -> EventRaster:
    with open(path, encoding="ascii") as f:
        lines = f.read().splitlines()
    if not lines:
        raise ParseError("empty file", line=1, path=path)
    m = _HEADER.match(lines[0])
    if not m:
        raise ParseError("expected header '# channels=<N> dt_ms=<D>'", line=1, path=path)
    num_channels, dt_ms = int(m.group(1)), float(m.group(2))
    cells = []
    num_bins = None
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        footer = _FOOTER.match(line)
        if footer:
            num_bins = int(footer.group(1))
            continue
        parts = line.split(",")
        try:
            t, c, n = (int(p) for p in parts)
        except ValueError:
            raise ParseError(f"expected '<bin>,<channel>,<count>', got {line!r}", line=lineno, path=path)
        if not 0 <= c < num_channels or t < 0 or n < 0:
            raise ParseError(f"cell out of range: {line!r}", line=lineno, path=path)
        cells.append((t, c, n))
    last = max((t for t, _, _ in cells), default=-1) + 1
    if num_bins is None:
        num_bins = last
    elif num_bins < last:
        raise ParseError(f"bins={num_bins} but events reach bin {last - 1}", path=path)
    counts = np.zeros((num_bins, num_channels), dtype=np.int64)
    for t, c, n in cells:
        counts[t, c] = n
    return EventRaster(counts, dt_ms / 1000.0)


# -- qnet ---------------------------------------------------------------------


def qnet_to_dict(net: QuantNetwork) -> dict:
    layers = []
    for layer in net.layers:
        layers.append(
            {
                "rows": layer.num_outputs,
                "cols": layer.num_inputs,
                "weights": [int(w) for w in layer.weights.ravel()],
                "syn_dash": [int(d) for d in layer.syn_dash],
                "mem_dash": [int(d) for d in layer.mem_dash],
                "threshold": [int(t) for t in layer.threshold],
                "max_spikes_per_step": layer.max_spikes_per_step,
            }
        )
    return {"format": "qnet", "version": 1, "dt_ms": _fmt_ms(net.dt_s), "layers": layers}


def qnet_from_dict(doc: dict) -> QuantNetwork:
    try:
        layers = []
        for entry in doc["layers"]:
            rows, cols = int(entry["rows"]), int(entry["cols"])
            weights = entry["weights"]
            if any(not isinstance(w, int) or isinstance(w, bool) for w in weights):
                raise ParseError("qnet weights must be integers")
            if len(weights) != rows * cols:
                raise ShapeError(f"layer declares {rows}x{cols} but has {len(weights)} weights")
            layers.append(
                QuantLayer(
                    np.array(weights, dtype=np.int64).reshape(rows, cols),
                    syn_dash=entry["syn_dash"],
                    mem_dash=entry["mem_dash"],
                    threshold=entry["threshold"],
                    max_spikes_per_step=entry["max_spikes_per_step"],
                )
            )
        if not layers:
            raise ParseError("qnet has no layers")
        return QuantNetwork(layers[:-1], layers[-1], float(doc["dt_ms"]) / 1000.0)
    except KeyError as exc:
        raise ParseError(f"qnet is missing field {exc}") from None


def save_qnet(net: QuantNetwork, path: PathLike) -> None:
    with open(path, "w", encoding="ascii") as f:
        json.dump(qnet_to_dict(net), f, indent=1)
        f.write("\n")


def load_qnet(path: PathLike) -> QuantNetwork:
    with open(path, encoding="ascii") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, line=exc.lineno, path=path) from None
    return qnet_from_dict(doc)


# -- fnet ---------------------------------------------------------------------


def save_fnet(net: FloatNetwork, path: PathLike) -> None:
    doc = {
        "format": "fnet",
        "version": 1,
        "dt_s": net.dt_s,
        "max_spikes_per_step": net.max_spikes_per_step,
        "layers": [
            {
                "weights": layer.weights.tolist(),
                "tau_syn_s": layer.tau_syn_s.tolist(),
                "tau_mem_s": layer.tau_mem_s.tolist(),
                "threshold": layer.threshold.tolist(),
            }
            for layer in net.layers
        ],
    }
    with open(path, "w", encoding="ascii") as f:
        json.dump(doc, f)
        f.write("\n")


def load_fnet(path: PathLike) -> FloatNetwork:
    with open(path, encoding="ascii") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, line=exc.lineno, path=path) from None
    try:
        layers = [
            FloatLayer(e["weights"], e["tau_syn_s"], e["tau_mem_s"], e["threshold"])
            for e in doc["layers"]
        ]
        return FloatNetwork(layers[:-1], layers[-1], doc["dt_s"], doc.get("max_spikes_per_step", 15))
    except KeyError as exc:
        raise ParseError(f"fnet is missing field {exc}", path=path) from None


# -- audio --------------------------------------------------------------------


def read_wav(path: PathLike, expected_rate_hz: float = None) -> AudioBuffer:
    """
    Read a mono 16-bit PCM or 32-bit float WAV file as floats in [-1, 1).
    A sample rate other than ``expected_rate_hz`` is rejected.
    """
    rate, data = wavfile.read(path)
    if data.ndim != 1:
        raise ShapeError(f"{path}: expected mono audio, got {data.shape[1]} channels")
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    else:
        raise ConfigError(f"{path}: unsupported sample format {data.dtype} (need int16 or float32)")
    if expected_rate_hz is not None and rate != expected_rate_hz:
        raise ConfigError(f"{path}: sample rate {rate} Hz, expected {expected_rate_hz:g} Hz (no resampling)")
    return AudioBuffer(samples, float(rate))


def write_wav(audio: AudioBuffer, path: PathLike, sample_format: str = "int16") -> None:
    if sample_format == "int16":
        data = np.clip(np.round(audio.samples * 32768.0), -32768, 32767).astype(np.int16)
    elif sample_format == "float32":
        data = audio.samples.astype(np.float32)
    else:
        raise ConfigError(f"unknown sample format {sample_format!r}")
    rate = int(audio.sample_rate_hz)
    if rate != audio.sample_rate_hz:
        raise ConfigError("WAV sample rate must be an integer")
    wavfile.write(path, rate, data)


# -- traces and tables --------------------------------------------------------


def write_traces_csv(traces, path: PathLike) -> None:
    traces = np.asarray(traces)
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["step", "channel", "v_mem"])
        for t in range(traces.shape[0]):
            for c in range(traces.shape[1]):
                v = traces[t, c]
                w.writerow([t, c, int(v) if float(v).is_integer() else repr(float(v))])


def read_traces_csv(path: PathLike, dt_s: float = 0.010) -> TraceMatrix:
    rows = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ["step", "channel", "v_mem"]:
            raise ParseError("expected header 'step,channel,v_mem'", line=1, path=path)
        for lineno, row in enumerate(reader, start=2):
            try:
                rows.append((int(row[0]), int(row[1]), float(row[2])))
            except (ValueError, IndexError):
                raise ParseError(f"malformed trace row {row!r}", line=lineno, path=path) from None
    if not rows:
        raise ParseError("no trace rows", path=path)
    steps = max(r[0] for r in rows) + 1
    chans = max(r[1] for r in rows) + 1
    values = np.full((steps, chans), math.nan)
    for t, c, v in rows:
        values[t, c] = v
    if np.isnan(values).any():
        raise ParseError("trace grid is incomplete", path=path)
    return TraceMatrix(values, dt_s)


def write_confusion_csv(confusion, path: PathLike) -> None:
    confusion = np.asarray(confusion)
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["truth"] + [f"pred_{j}" for j in range(confusion.shape[1])])
        for i, row in enumerate(confusion):
            w.writerow([i] + [int(v) for v in row])
