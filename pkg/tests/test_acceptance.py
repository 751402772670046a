"""
Acceptance suite. Each test prints one ``[PASS]``/``[FAIL]`` line that is
also collected into the "acceptance criteria" section of the pytest summary.

Run standalone with ``python3 tests/test_acceptance.py``.
"""

import math
import sys
import time
import warnings

import numpy as np
import pytest

from xylosim.afe import AfeConfig, AfeEncoder, AudioBuffer, EventRaster, design_filterbank, encode_audio
from xylosim.loss import PeakLossParams, TraceMatrix, peak_loss
from xylosim.quant import quantize_network
from xylosim.runner import (
    EnergyModelParams,
    PUBLISHED_ACTIVE_ENERGY_J,
    PUBLISHED_DYNAMIC_ENERGY_J,
    PUBLISHED_IDLE_POWER_W,
    PUBLISHED_INFERENCE_TIME_S,
    bench,
    benchmark_rasters,
    calibrate_energy_per_synop,
    estimate_energy,
    evaluate,
    load_manifest,
    per_step_cycles_for,
    simulate_latency,
)
from xylosim.snn import QuantLayer, QuantNetwork, SnnStream, decay16, run_raster, tone_detector
from xylosim.synnet import FloatLayer, FloatNetwork, SynNetSpec, build_synnet, run_float

from oracles import layers_as_lists, measure_band, naive_run, scalar_peak_loss

pytestmark = pytest.mark.acceptance


def test_filterbank_fidelity(criterion):
    start = time.perf_counter()
    cfg = AfeConfig()
    spec = design_filterbank(cfg)
    nyquist = cfg.sample_rate_hz / 2
    worst_peak = worst_bw = 0.0
    checked = 0
    for k, fc in enumerate(spec.center_hz):
        if fc >= 0.4 * nyquist:
            continue
        peak, lo, hi = measure_band(spec.num[k], spec.den[k], cfg.sample_rate_hz)
        worst_peak = max(worst_peak, abs(peak / fc - 1))
        worst_bw = max(worst_bw, abs((hi - lo) / (fc / cfg.q_factor) - 1))
        checked += 1
    elapsed = time.perf_counter() - start
    ok = worst_peak <= 0.05 and worst_bw <= 0.10 and elapsed < 5.0
    criterion(
        "filterbank fidelity",
        ok,
        f"{checked} bands, worst peak err {worst_peak:.2%} (<=5%), worst bw err {worst_bw:.2%} (<=10%), {elapsed:.2f}s",
    )
    assert ok


def test_decay_fidelity(criterion):
    start = time.perf_counter()
    worst = 0.0
    ok = True
    for dash in range(1, 8):
        v = v0 = 20000
        for k in range(1, 51):
            v = decay16(v, dash)
            ideal = v0 * (1 - 2.0**-dash) ** k
            bound = max(2 * k, 0.02 * v0)
            ok &= abs(v - ideal) <= bound
            worst = max(worst, abs(v - ideal) / bound)
    elapsed = time.perf_counter() - start
    ok = bool(ok) and elapsed < 1.0
    criterion("decay fidelity", ok, f"dash 1..7, worst deviation {worst:.2f} of bound, {elapsed:.3f}s")
    assert ok


def _tiny_net(rng):
    num_inputs = int(rng.integers(1, 9))
    total = int(rng.integers(1, 5))
    num_layers = int(rng.integers(1, total + 1))
    cuts = np.sort(rng.choice(np.arange(1, total), size=num_layers - 1, replace=False)) if num_layers > 1 else []
    widths = np.diff(np.concatenate([[0], cuts, [total]])).astype(int)
    extreme = rng.random() < 0.3
    layers, fan_in = [], num_inputs
    for width in widths:
        if extreme:
            w = rng.choice([-128, 127, 0, 1, -1], size=(width, fan_in))
            th = rng.choice([1, 2, 32767], size=width)
        else:
            w = rng.integers(-128, 128, size=(width, fan_in))
            th = rng.integers(1, 2000, size=width)
        layers.append(
            QuantLayer(w, rng.integers(0, 16, width), rng.integers(0, 16, width), th, int(rng.integers(1, 16)))
        )
        fan_in = width
    return QuantNetwork(layers[:-1], layers[-1])


def test_oracle_equivalence(criterion):
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    mismatches = 0
    for _ in range(1000):
        net = _tiny_net(rng)
        bins = int(rng.integers(0, 21))
        raster = rng.integers(0, 16, size=(bins, net.num_inputs)) * (rng.random((bins, net.num_inputs)) < 0.6)
        want_out, want_ops, want_traces = naive_run(layers_as_lists(net), raster)
        stream = SnnStream(net, record_traces=True)
        got_out = stream.feed(raster)
        shape = (bins, net.num_classes)
        same = (
            np.array_equal(got_out.reshape(shape), np.array(want_out, dtype=np.int64).reshape(shape))
            and stream.telemetry.syn_ops == want_ops
            and np.array_equal(stream.traces.reshape(shape), np.array(want_traces, dtype=np.int64).reshape(shape))
        )
        mismatches += not same
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 30.0
    criterion("oracle equivalence", ok, f"1000 instances, {mismatches} mismatches, {elapsed:.2f}s")
    assert ok


def _partition(rng, length, max_cuts):
    n = int(rng.integers(0, max_cuts + 1))
    return sorted(rng.integers(0, length + 1, size=n).tolist())


def test_streaming_invariance(criterion):
    rng = np.random.default_rng(99)
    start = time.perf_counter()
    cfg = AfeConfig()
    t = np.arange(48000) / 48000.0
    audio = AudioBuffer(0.3 * np.sin(2 * np.pi * 700 * t) + rng.normal(0, 0.2, t.size), 48000.0)
    whole_raster = encode_audio(audio, cfg)
    net, _ = quantize_network(build_synnet(SynNetSpec(threshold=0.05), 11))
    reference = SnnStream(net, record_traces=True)
    reference.feed(whole_raster.counts)
    whole_report = reference.report()

    failures = 0
    for _ in range(100):
        encoder = AfeEncoder(cfg)
        parts = [encoder.process(chunk) for chunk in audio.split(_partition(rng, audio.samples.size, 12))]
        chunked_raster = EventRaster.concatenate(parts)
        stream = SnnStream(net, record_traces=True)
        for block in np.split(chunked_raster.counts, _partition(rng, chunked_raster.num_bins, 12)):
            stream.feed(block)
        failures += not (chunked_raster == whole_raster and stream.report() == whole_report)
    elapsed = time.perf_counter() - start
    active = whole_report.telemetry.spikes_emitted
    ok = failures == 0 and elapsed < 30.0 and active > 0
    criterion(
        "streaming invariance",
        ok,
        f"100 partitions (audio + raster), {failures} differ, {active} spikes in reference, {elapsed:.2f}s",
    )
    assert ok


def test_peak_loss_correctness(criterion):
    example = TraceMatrix(np.array([[0.0, 1.0], [2.0, 0.0], [1.0, 0.0]]), dt_s=0.010)
    worked = peak_loss(example, 0, PeakLossParams(window_s=0.020, target_peak=1.5, off_target_weight=1.0))
    worked_ok = abs(worked - 1 / 3) <= 1e-12 / 3

    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(500):
        T, C = int(rng.integers(1, 60)), int(rng.integers(2, 8))
        values = rng.normal(0, rng.uniform(0.1, 10), (T, C))
        if rng.random() < 0.2:
            values = np.round(values)  # ties in the argmax
        dt = float(rng.choice([0.001, 0.01, 0.02]))
        params = PeakLossParams(float(rng.uniform(dt, 0.3)), float(rng.uniform(0, 3)), float(rng.uniform(0, 2)))
        y = int(rng.integers(0, C))
        got = peak_loss(TraceMatrix(values, dt), y, params)
        steps = max(1, int(round(params.window_s / dt)))
        want = scalar_peak_loss(values.tolist(), y, steps, params.target_peak, params.off_target_weight)
        worst = max(worst, abs(got - want) / max(abs(want), 1e-300))
    ok = worked_ok and worst <= 1e-12
    criterion("peak loss correctness", ok, f"worked example {worked!r} (1/3), 500 random, worst rel err {worst:.1e}")
    assert ok


def _toy_suite(num_nets=200, seed=123):
    rng = np.random.default_rng(seed)
    probe = rng.poisson(1.0, (50, 16))
    agree = 0
    found = 0
    while found < num_nets:
        hidden = int(rng.integers(2, 9))
        w1 = rng.uniform(-1, 1, (hidden, 16)) / 4
        w2 = rng.uniform(-1, 1, (2, hidden)) / math.sqrt(hidden)
        taus = 2.0 ** rng.integers(1, 5, hidden) * 0.01
        net = FloatNetwork([FloatLayer(w1, taus, 0.02, 1.0)], FloatLayer(w2, 0.02, 0.02, 1.0))
        counts = run_float(net, probe).class_spike_counts
        # high margin: the winning class leads the other by more than 20 %
        if counts.max() == 0 or (counts.max() - counts.min()) / counts.max() <= 0.2:
            continue
        found += 1
        qnet, _ = quantize_network(net)
        agree += run_raster(qnet, EventRaster(probe)).decision == int(np.argmax(counts))
    return agree, found


def test_quantization_behavior(criterion):
    worst = 0.0
    for seed in range(20):
        net = build_synnet(SynNetSpec(), seed)
        qnet, report = quantize_network(net)
        for flayer, qlayer, s in zip(net.layers, qnet.layers, report.scales):
            worst = max(worst, float(np.max(np.abs(flayer.weights - qlayer.weights / s))) * s)
    agree, total = _toy_suite()
    ok = worst <= 0.5 + 1e-9 and agree / total >= 0.95
    criterion(
        "quantization behavior",
        ok,
        f"worst round-trip error {worst:.4f}/scale (<=0.5), argmax kept {agree}/{total} ({agree / total:.1%}, >=95%)",
    )
    assert ok


def test_end_to_end_tone_classification(criterion, tone_manifest):
    bands = (3, 6, 9, 12)
    manifest = load_manifest(tone_manifest(bands, per_class=10))
    result = evaluate(tone_detector(bands), manifest, AfeConfig())
    ok = result.num_samples == 40 and result.accuracy == 1.0
    criterion(
        "end-to-end tone classification",
        ok,
        f"{result.correct}/{result.num_samples} correct, bands {bands}, confusion diag {np.diag(result.confusion).tolist()}",
    )
    assert ok


def test_energy_latency_calibration(criterion):
    net, _ = quantize_network(build_synnet(SynNetSpec(), 0))
    result = bench(net, benchmark_rasters(50, seed=0))
    cycles = per_step_cycles_for(PUBLISHED_INFERENCE_TIME_S, result.bins_per_sample)
    e_synop = calibrate_energy_per_synop(result.mean_telemetry.syn_ops, PUBLISHED_DYNAMIC_ENERGY_J)
    params = EnergyModelParams(idle_power_w=PUBLISHED_IDLE_POWER_W, energy_per_synop_j=e_synop)
    latency = simulate_latency(result.bins_per_sample, "accelerated", params, cycles)
    energy = estimate_energy(result.mean_telemetry, params, latency)
    dyn_err = abs(energy.dynamic_energy_j / PUBLISHED_DYNAMIC_ENERGY_J - 1)
    act_err = abs(energy.active_energy_j / PUBLISHED_ACTIVE_ENERGY_J - 1)
    ok = dyn_err <= 0.02 and act_err <= 0.02
    criterion(
        "energy/latency calibration",
        ok,
        f"latency {latency * 1e3:.1f} ms, dynamic {energy.dynamic_energy_j * 1e6:.2f} uJ ({dyn_err:.2%}), "
        f"active {energy.active_energy_j * 1e6:.2f} uJ ({act_err:.2%}), e_synop {e_synop:.4g} J (proxy model)",
    )
    assert ok


def test_performance(criterion):
    net, _ = quantize_network(build_synnet(SynNetSpec(), 0))
    rasters = benchmark_rasters(50, seed=1)
    run_raster(net, rasters[0])
    result = bench(net, rasters, repeat=4)
    ok = result.samples_per_s >= 100.0
    criterion(
        "performance (soft)",
        ok,
        f"{result.samples_per_s:.0f} samples/s single-threaded (>=100), {result.realtime_factor:.0f}x real time",
    )
    if not ok:
        warnings.warn(f"simulation throughput {result.samples_per_s:.1f} samples/s is below 100")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s", "-p", "no:cacheprovider"]))
