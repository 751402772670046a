"""
Dataset evaluation, activity accounting and the energy/latency proxy.

The energy model mirrors how inference power is usually reported for
neuromorphic chips: a constant idle draw plus a dynamic part proportional to
activity. It is a calibrated proxy, not a hardware measurement::

    dynamic = syn_ops * energy_per_synop + neuron_updates * energy_per_neuron_update
    idle    = idle_power * wall_time
    active  = idle + dynamic
"""

from __future__ import annotations

import configparser
import csv
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .afe import AfeConfig, AfeEncoder, AudioBuffer, LifEncoderConfig, encode_audio
from .errors import ConfigError, ParseError, ValidationError
from .formats import read_wav
from .snn import InferenceReport, QuantNetwork, SnnStream, StepTelemetry, run_raster
from .synnet import SynNetSpec

__all__ = [
    "SPLITS",
    "ManifestEntry",
    "Manifest",
    "load_manifest",
    "EnergyModelParams",
    "EnergyBreakdown",
    "estimate_energy",
    "calibrate_energy_per_synop",
    "per_step_cycles_for",
    "simulate_latency",
    "EvalResult",
    "evaluate",
    "RunConfig",
    "load_config",
    "BenchResult",
    "bench",
    "benchmark_rasters",
    "annotate_report",
]

SPLITS = ("train", "val", "test")

# Published hardware figures: 351 uW idle, 84 ms per 1 s sample (100 bins)
# in accelerated mode at a 12.5 MHz clock.
PUBLISHED_IDLE_POWER_W = 351e-6
PUBLISHED_INFERENCE_TIME_S = 0.084
PUBLISHED_DYNAMIC_ENERGY_J = 28.4e-6
PUBLISHED_ACTIVE_ENERGY_J = 57.6e-6
DEFAULT_CLOCK_HZ = 12.5e6
DEFAULT_PER_STEP_CYCLES = 10500
# Calibrated once with calibrate_energy_per_synop(): seed-0 full-size SynNet,
# quantized with kappa=1, over benchmark_rasters(50, seed=0) gives a mean of
# 96799 syn_ops per sample -> 28.4 uJ / 96799.
DEFAULT_ENERGY_PER_SYNOP_J = 2.934e-10


@dataclass(frozen=True)
class ManifestEntry:
    path: Path
    label: int
    split: str


@dataclass(frozen=True)
class Manifest:
    entries: Tuple[ManifestEntry, ...]

    def __len__(self):
        return len(self.entries)

    def split(self, name: Optional[str]) -> List[ManifestEntry]:
        if name is None:
            return list(self.entries)
        return [e for e in self.entries if e.split == name]


def load_manifest(path, num_classes: int = 4) -> Manifest:
    """
    Read a ``path,label,split`` CSV with a header row. Relative audio paths
    resolve against the manifest's directory.
    """
    path = Path(path)
    base = path.parent
    entries = []
    seen = set()
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["path", "label", "split"]:
            raise ParseError("expected header 'path,label,split'", line=1, path=path)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 3:
                raise ParseError(f"expected 3 fields, got {len(row)}", line=lineno, path=path)
            raw_path, raw_label, split = (cell.strip() for cell in row)
            try:
                label = int(raw_label)
            except ValueError:
                raise ParseError(f"label {raw_label!r} is not an integer", line=lineno, path=path) from None
            if split not in SPLITS:
                raise ParseError(f"split {split!r} not in {SPLITS}", line=lineno, path=path)
            if not 0 <= label < num_classes:
                raise ValidationError(
                    f"{path}:{lineno}: label {label} out of range for {num_classes} classes"
                )
            audio_path = Path(raw_path)
            if not audio_path.is_absolute():
                audio_path = base / audio_path
            if audio_path in seen:
                raise ValidationError(f"{path}:{lineno}: duplicate path {raw_path}")
            seen.add(audio_path)
            entries.append(ManifestEntry(audio_path, label, split))
    return Manifest(tuple(entries))


# -- energy and latency -------------------------------------------------------


@dataclass(frozen=True)
class EnergyModelParams:
    idle_power_w: float = PUBLISHED_IDLE_POWER_W
    energy_per_synop_j: float = DEFAULT_ENERGY_PER_SYNOP_J
    energy_per_neuron_update_j: float = 0.0
    clock_hz: float = DEFAULT_CLOCK_HZ

    def __post_init__(self):
        for name in ("idle_power_w", "energy_per_synop_j", "energy_per_neuron_update_j"):
            if not getattr(self, name) >= 0:
                raise ConfigError(f"{name} must be non-negative")
        if not self.clock_hz > 0:
            raise ConfigError("clock_hz must be positive")


@dataclass(frozen=True)
class EnergyBreakdown:
    idle_energy_j: float
    dynamic_energy_j: float
    active_energy_j: float
    wall_time_s: float

    @property
    def active_power_w(self) -> float:
        return self.active_energy_j / self.wall_time_s if self.wall_time_s > 0 else float("nan")

    @property
    def dynamic_power_w(self) -> float:
        return self.dynamic_energy_j / self.wall_time_s if self.wall_time_s > 0 else float("nan")


def estimate_energy(telemetry: StepTelemetry, params: EnergyModelParams, wall_time_s: float) -> EnergyBreakdown:
    dynamic = (
        telemetry.syn_ops * params.energy_per_synop_j
        + telemetry.neuron_updates * params.energy_per_neuron_update_j
    )
    idle = params.idle_power_w * wall_time_s
    return EnergyBreakdown(idle, dynamic, idle + dynamic, wall_time_s)


def calibrate_energy_per_synop(
    mean_syn_ops: float,
    target_dynamic_energy_j: float = PUBLISHED_DYNAMIC_ENERGY_J,
    mean_neuron_updates: float = 0.0,
    energy_per_neuron_update_j: float = 0.0,
) -> float:
    """Per-SynOp energy that makes the mean dynamic energy hit the target."""
    if not mean_syn_ops > 0:
        raise ConfigError("calibration needs a workload with non-zero syn_ops")
    remainder = target_dynamic_energy_j - mean_neuron_updates * energy_per_neuron_update_j
    if remainder < 0:
        raise ConfigError("neuron-update energy alone exceeds the target")
    return remainder / mean_syn_ops


def per_step_cycles_for(inference_time_s: float, num_bins: int, clock_hz: float = DEFAULT_CLOCK_HZ) -> int:
    """Clock cycles per step that reproduce a measured per-sample inference time."""
    return int(round(inference_time_s * clock_hz / num_bins))


def simulate_latency(
    num_bins: int,
    mode: str = "accelerated",
    params: EnergyModelParams = EnergyModelParams(),
    per_step_cost_cycles: int = DEFAULT_PER_STEP_CYCLES,
    dt_s: float = 0.010,
) -> float:
    """
    Seconds to process ``num_bins`` bins. Real-time mode is paced by the input;
    accelerated mode runs as fast as the core's per-step cycle budget allows.
    """
    if num_bins < 0:
        raise ValueError("num_bins must be non-negative")
    if mode == "realtime":
        return num_bins * dt_s
    if mode == "accelerated":
        return num_bins * per_step_cost_cycles / params.clock_hz
    raise ConfigError(f"mode must be 'realtime' or 'accelerated', got {mode!r}")


def annotate_report(
    report: InferenceReport,
    params: EnergyModelParams,
    mode: str = "accelerated",
    per_step_cost_cycles: int = DEFAULT_PER_STEP_CYCLES,
    dt_s: float = 0.010,
) -> InferenceReport:
    latency = simulate_latency(report.simulated_steps, mode, params, per_step_cost_cycles, dt_s)
    energy = estimate_energy(report.telemetry, params, latency)
    return replace(
        report,
        latency_s=latency,
        estimated_dynamic_energy_j=energy.dynamic_energy_j,
        estimated_active_energy_j=energy.active_energy_j,
    )


# -- evaluation ---------------------------------------------------------------


@dataclass(eq=False)
class EvalResult:
    accuracy: float
    accuracy_defined: bool
    confusion: np.ndarray
    telemetry: StepTelemetry
    num_samples: int
    total_bins: int
    paths: List[Path] = field(default_factory=list)
    decisions: List[int] = field(default_factory=list)

    @property
    def correct(self) -> int:
        return int(np.trace(self.confusion))


def evaluate(
    net: QuantNetwork,
    manifest: Manifest,
    afe: AfeConfig = AfeConfig(),
    split: Optional[str] = "test",
    carry_state: bool = False,
) -> EvalResult:
    """
    Encode and classify every entry of ``split`` (all entries if ``None``).

    Samples are independent unless ``carry_state`` is set, in which case
    encoder and network state run on across entries as one stream.
    Confusion rows are the true class, columns the prediction.
    """
    entries = manifest.split(split)
    missing = [str(e.path) for e in entries if not e.path.is_file()]
    if missing:
        raise FileNotFoundError(f"missing audio file: {missing[0]}")
    encoder = AfeEncoder(afe)
    stream = SnnStream(net)
    confusion = np.zeros((net.num_classes, net.num_classes), dtype=np.int64)
    telemetry = StepTelemetry()
    total_bins = 0
    decisions = []
    for entry in entries:
        audio = read_wav(entry.path, expected_rate_hz=afe.sample_rate_hz)
        if not carry_state:
            encoder.reset()
            stream.reset()
        before_counts = stream.class_spike_counts.copy()
        before_tel = stream.telemetry
        raster = encoder.process(audio)
        stream.feed(raster)
        counts = stream.class_spike_counts - before_counts
        decision = int(np.argmax(counts))
        decisions.append(decision)
        confusion[entry.label, decision] += 1
        tel = stream.telemetry
        telemetry = telemetry + StepTelemetry(
            tel.syn_ops - before_tel.syn_ops,
            tel.neuron_updates - before_tel.neuron_updates,
            tel.spikes_emitted - before_tel.spikes_emitted,
        )
        total_bins += raster.num_bins
    n = len(entries)
    accuracy = float(np.trace(confusion)) / n if n else float("nan")
    return EvalResult(
        accuracy=accuracy,
        accuracy_defined=n > 0,
        confusion=confusion,
        telemetry=telemetry,
        num_samples=n,
        total_bins=total_bins,
        paths=[e.path for e in entries],
        decisions=decisions,
    )


# -- configuration ------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    afe: AfeConfig = AfeConfig()
    synnet: SynNetSpec = SynNetSpec()
    energy: EnergyModelParams = EnergyModelParams()
    kappa: float = 1.0
    per_step_cost_cycles: int = DEFAULT_PER_STEP_CYCLES


def _int_list(text: str) -> Tuple[int, ...]:
    return tuple(int(v) for v in text.replace("[", "").replace("]", "").split(",") if v.strip())


def load_config(path=None) -> RunConfig:
    """
    Read an INI-style ``key = value`` file with optional sections ``[afe]``,
    ``[encoder]``, ``[synnet]``, ``[energy]`` and ``[quant]``. Missing keys
    keep their defaults; unknown keys are an error.
    """
    if path is None:
        return RunConfig()
    parser = configparser.ConfigParser()
    try:
        with open(path) as f:
            parser.read_file(f)
    except configparser.Error as exc:
        raise ParseError(str(exc).splitlines()[0], line=getattr(exc, "lineno", None), path=path) from None

    known = {"afe", "encoder", "synnet", "energy", "quant"}
    for section in parser.sections():
        if section not in known:
            raise ConfigError(f"{path}: unknown section [{section}]")

    def take(section, converters):
        if not parser.has_section(section):
            return {}
        out = {}
        for key, raw in parser.items(section):
            if key not in converters:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
            try:
                out[key] = converters[key](raw)
            except ValueError as exc:
                raise ConfigError(f"{path}: bad value for {section}.{key}: {exc}") from None
        return out

    enc = LifEncoderConfig(
        **take("encoder", {"tau_mem_s": float, "threshold": float, "max_events_per_bin": int})
    )
    afe = AfeConfig(
        encoder=enc,
        **take(
            "afe",
            {
                "sample_rate_hz": float,
                "num_bands": int,
                "f_low_hz": float,
                "f_high_hz": float,
                "q_factor": float,
                "gain_db": int,
                "bin_dt_s": float,
            },
        ),
    )
    synnet = SynNetSpec(
        **take(
            "synnet",
            {
                "hidden_widths": _int_list,
                "tau_counts": _int_list,
                "num_inputs": int,
                "num_classes": int,
                "dt_s": float,
                "tau_mem_s": float,
                "threshold": float,
                "max_spikes_per_step": int,
            },
        )
    )
    energy = EnergyModelParams(
        **take(
            "energy",
            {
                "idle_power_w": float,
                "energy_per_synop_j": float,
                "energy_per_neuron_update_j": float,
                "clock_hz": float,
            },
        )
    )
    quant = take("quant", {"kappa": float, "per_step_cost_cycles": int})
    return RunConfig(afe, synnet, energy, **quant)


# -- benchmarking -------------------------------------------------------------


@dataclass
class BenchResult:
    num_samples: int
    bins_per_sample: int
    wall_time_s: float
    mean_telemetry: StepTelemetry
    bin_dt_s: float = 0.010

    @property
    def samples_per_s(self) -> float:
        return self.num_samples / self.wall_time_s

    @property
    def realtime_factor(self) -> float:
        """Simulated audio seconds per wall-clock second."""
        return self.samples_per_s * self.bins_per_sample * self.bin_dt_s


def bench(net: QuantNetwork, rasters: Sequence, repeat: int = 1) -> BenchResult:
    """Time ``run_raster`` over ``rasters`` (single-threaded)."""
    total = StepTelemetry()
    count = 0
    start = time.perf_counter()
    for _ in range(repeat):
        for raster in rasters:
            total = total + run_raster(net, raster).telemetry
            count += 1
    elapsed = time.perf_counter() - start
    bins = rasters[0].num_bins if rasters else 0
    dt = rasters[0].bin_dt_s if rasters else net.dt_s
    return BenchResult(count, bins, elapsed, total.scaled(1.0 / max(count, 1)), dt)


def benchmark_rasters(num_samples: int = 50, seed: int = 0, afe: AfeConfig = AfeConfig(), duration_s: float = 1.0):
    """
    Seeded synthetic workload: 1 s pure tones with log-uniform random
    frequency across the filterbank span and amplitude in [0.25, 1], each
    encoded from silence.
    """
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * afe.sample_rate_hz))
    t = np.arange(n) / afe.sample_rate_hz
    rasters = []
    for _ in range(num_samples):
        freq = np.exp(rng.uniform(np.log(afe.f_low_hz), np.log(afe.f_high_hz)))
        amp = rng.uniform(0.25, 1.0)
        phase = rng.uniform(0, 2 * np.pi)
        audio = AudioBuffer(amp * np.sin(2 * np.pi * freq * t + phase), afe.sample_rate_hz)
        rasters.append(encode_audio(audio, afe))
    return rasters
