"""
Energy and latency proxy
========================

The energy model has three constants: idle power, energy per synaptic
operation and energy per neuron update. Idle power comes straight from the
published table (351 uW). The per-synop constant is fitted once so that
the mean dynamic energy of the full-size network on a fixed synthetic
workload equals 28.4 uJ per inference; this is where the
``DEFAULT_ENERGY_PER_SYNOP_J`` constant in ``xylosim.runner`` comes from.
None of this is a hardware measurement.
"""

from xylosim import SynNetSpec, build_synnet, quantize_network
from xylosim.runner import (
    DEFAULT_ENERGY_PER_SYNOP_J,
    PUBLISHED_INFERENCE_TIME_S,
    EnergyModelParams,
    bench,
    benchmark_rasters,
    calibrate_energy_per_synop,
    estimate_energy,
    per_step_cycles_for,
    simulate_latency,
)

qnet, _ = quantize_network(build_synnet(SynNetSpec(), 0))
result = bench(qnet, benchmark_rasters(50, seed=0))
mean = result.mean_telemetry
print(f"mean per inference: {mean.syn_ops:.0f} syn ops, {mean.neuron_updates:.0f} neuron updates")

e_synop = calibrate_energy_per_synop(mean.syn_ops)
print(f"fitted energy per synop: {e_synop:.4e} J (library default {DEFAULT_ENERGY_PER_SYNOP_J:.4e} J)")

###############################################################################
# Accelerated mode: 84 ms per 100-bin sample at 12.5 MHz means 10500
# cycles per time step. Real-time mode takes one bin period per step.

cycles = per_step_cycles_for(PUBLISHED_INFERENCE_TIME_S, result.bins_per_sample)
params = EnergyModelParams(energy_per_synop_j=e_synop)
for mode in ("accelerated", "realtime"):
    latency = simulate_latency(result.bins_per_sample, mode, params, cycles)
    energy = estimate_energy(mean, params, latency)
    print(
        f"{mode:>11}: latency {latency * 1e3:6.1f} ms  idle {energy.idle_energy_j * 1e6:6.2f} uJ"
        f"  dynamic {energy.dynamic_energy_j * 1e6:5.2f} uJ  active {energy.active_energy_j * 1e6:6.2f} uJ"
    )

###############################################################################
# Simulator throughput on this machine, for comparison with real time.

print(f"simulated {result.samples_per_s:.0f} samples/s ({result.realtime_factor:.0f}x real time)")
