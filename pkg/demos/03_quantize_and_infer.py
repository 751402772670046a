"""
Build, quantize and run a SynNet
================================

A float 16 -> 31 -> 31 -> 31 -> 4 network is built with a ladder of
synaptic time constants, quantized to int8 weights and shift-based decay,
and run on an encoded tone. The float and integer versions see the same
raster; their spike counts should tell the same story.
"""

import numpy as np

from xylosim import (
    AfeConfig,
    AudioBuffer,
    SynNetSpec,
    build_synnet,
    design_filterbank,
    encode_audio,
    quantize_network,
    run_raster,
)
from xylosim.synnet import run_float

spec = SynNetSpec(threshold=0.05)
fnet = build_synnet(spec, init_seed=3)
qnet, report = quantize_network(fnet)

for i, (scale, mse) in enumerate(zip(report.scales, report.weight_mse)):
    print(f"layer {i}: scale {scale:8.2f}  weight mse {mse:.2e}")
print("tau -> dash:", report.dash_table)

###############################################################################
# Encode a tone and run both networks.

cfg = AfeConfig()
fc = design_filterbank(cfg).center_hz[9]
t = np.arange(48000) / cfg.sample_rate_hz
raster = encode_audio(AudioBuffer(0.5 * np.sin(2 * np.pi * fc * t), cfg.sample_rate_hz), cfg)

float_counts = run_float(fnet, raster.counts).class_spike_counts
result = run_raster(qnet, raster, record_traces=True)
print("float spike counts:", float_counts.tolist())
print("int   spike counts:", result.class_spike_counts.tolist(), "-> class", result.decision)
print("synaptic ops:", result.telemetry.syn_ops, " neuron updates:", result.telemetry.neuron_updates)
print("readout v_mem range:", int(result.readout_traces.min()), int(result.readout_traces.max()))
