"""
Command-line entry point: ``xylosim <subcommand> ...``.

Results go to stdout as ``key=value`` lines. Failures print a single
``error: <Kind>: <message>`` line to stderr and exit with status 1; usage
errors exit with status 2 after printing the subcommand help.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import formats
from .afe import AfeEncoder
from .errors import XyloSimError
from .loss import PeakLossParams, peak_loss
from .quant import quantize_network
from .runner import (
    EnergyModelParams,
    annotate_report,
    bench,
    benchmark_rasters,
    calibrate_energy_per_synop,
    estimate_energy,
    evaluate,
    load_config,
    load_manifest,
    simulate_latency,
)
from .snn import run_raster, tone_detector
from .synnet import build_synnet


def _emit(**values):
    for key, value in values.items():
        if isinstance(value, (list, tuple, np.ndarray)):
            value = ",".join(str(int(v)) for v in value)
        elif isinstance(value, bool):
            value = str(value).lower()
        print(f"{key}={value}")


def cmd_encode(args):
    cfg = load_config(args.config)
    audio = formats.read_wav(args.input, expected_rate_hz=cfg.afe.sample_rate_hz)
    raster = AfeEncoder(cfg.afe).process(audio)
    formats.write_evt_csv(raster, args.out)
    _emit(bins=raster.num_bins, channels=raster.num_channels, events=int(raster.counts.sum()))


def cmd_build_net(args):
    cfg = load_config(args.config)
    if args.tone_detector:
        bands = [int(b) for b in args.tone_detector.split(",")]
        net = tone_detector(bands, num_inputs=cfg.afe.num_bands, dt_s=cfg.synnet.dt_s)
        formats.save_qnet(net, args.out)
        _emit(format="qnet", classes=net.num_classes)
    else:
        net = build_synnet(cfg.synnet, args.seed)
        formats.save_fnet(net, args.out)
        shapes = ";".join(f"{l.num_outputs}x{l.num_inputs}" for l in net.layers)
        _emit(format="fnet", shapes=shapes)


def cmd_quantize(args):
    cfg = load_config(args.config)
    kappa = args.kappa if args.kappa is not None else cfg.kappa
    qnet, report = quantize_network(formats.load_fnet(args.input), kappa=kappa)
    formats.save_qnet(qnet, args.out)
    if args.report:
        with open(args.report, "w") as f:
            json.dump(report.to_dict(), f, indent=1)
            f.write("\n")
    _emit(layers=len(qnet.layers), scales=";".join(f"{s:.6g}" for s in report.scales))


def cmd_infer(args):
    cfg = load_config(args.config)
    net = formats.load_qnet(args.net)
    if args.raster:
        raster = formats.read_evt_csv(args.raster)
    else:
        audio = formats.read_wav(args.input, expected_rate_hz=cfg.afe.sample_rate_hz)
        raster = AfeEncoder(cfg.afe).process(audio)
    report = run_raster(net, raster, record_traces=bool(args.traces))
    report = annotate_report(report, cfg.energy, args.mode, cfg.per_step_cost_cycles, net.dt_s)
    if args.traces:
        formats.write_traces_csv(report.readout_traces, args.traces)
    _emit(
        decision=report.decision,
        counts=report.class_spike_counts,
        steps=report.simulated_steps,
        syn_ops=report.telemetry.syn_ops,
        neuron_updates=report.telemetry.neuron_updates,
        spikes=report.telemetry.spikes_emitted,
        latency_s=f"{report.latency_s:.6g}",
        dynamic_energy_j=f"{report.estimated_dynamic_energy_j:.6g}",
        active_energy_j=f"{report.estimated_active_energy_j:.6g}",
    )


def cmd_eval(args):
    cfg = load_config(args.config)
    net = formats.load_qnet(args.net)
    manifest = load_manifest(args.manifest, num_classes=net.num_classes)
    split = None if args.split == "all" else args.split
    result = evaluate(net, manifest, cfg.afe, split=split, carry_state=args.carry_state)
    if args.confusion:
        formats.write_confusion_csv(result.confusion, args.confusion)
    latency = simulate_latency(result.total_bins, "accelerated", cfg.energy, cfg.per_step_cost_cycles, net.dt_s)
    energy = estimate_energy(result.telemetry, cfg.energy, latency)
    n = max(result.num_samples, 1)
    _emit(
        accuracy=result.accuracy,
        accuracy_defined=result.accuracy_defined,
        samples=result.num_samples,
        correct=result.correct,
        syn_ops=result.telemetry.syn_ops,
        mean_dynamic_energy_j=f"{energy.dynamic_energy_j / n:.6g}",
        mean_active_energy_j=f"{energy.active_energy_j / n:.6g}",
    )


def cmd_bench(args):
    cfg = load_config(args.config)
    if args.net:
        net = formats.load_qnet(args.net)
    else:
        net, _ = quantize_network(build_synnet(cfg.synnet, args.seed), kappa=cfg.kappa)
    rasters = benchmark_rasters(args.samples, args.seed, cfg.afe)
    run_raster(net, rasters[0])  # compile outside the timed region
    result = bench(net, rasters, repeat=args.repeat)
    energy_params = cfg.energy
    if args.calibrate:
        e = calibrate_energy_per_synop(
            result.mean_telemetry.syn_ops,
            mean_neuron_updates=result.mean_telemetry.neuron_updates,
            energy_per_neuron_update_j=energy_params.energy_per_neuron_update_j,
        )
        energy_params = EnergyModelParams(
            energy_params.idle_power_w, e, energy_params.energy_per_neuron_update_j, energy_params.clock_hz
        )
    latency = simulate_latency(result.bins_per_sample, "accelerated", energy_params, cfg.per_step_cost_cycles, net.dt_s)
    energy = estimate_energy(result.mean_telemetry, energy_params, latency)
    _emit(
        samples_per_s=f"{result.samples_per_s:.1f}",
        realtime_factor=f"{result.realtime_factor:.1f}",
        mean_syn_ops=f"{result.mean_telemetry.syn_ops:.1f}",
        energy_per_synop_j=f"{energy_params.energy_per_synop_j:.6g}",
        latency_s=f"{latency:.6g}",
        speedup=f"{result.bins_per_sample * net.dt_s / latency:.3g}" if latency > 0 else "nan",
        idle_energy_j=f"{energy.idle_energy_j:.6g}",
        dynamic_energy_j=f"{energy.dynamic_energy_j:.6g}",
        active_energy_j=f"{energy.active_energy_j:.6g}",
    )


def cmd_loss_eval(args):
    traces = formats.read_traces_csv(args.traces, dt_s=args.dt_ms / 1000.0)
    params = PeakLossParams(args.window_ms / 1000.0, args.g, args.wl)
    _emit(loss=repr(peak_loss(traces, args.target, params)))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_help(sys.stderr)
        self.exit(2, f"error: UsageError: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="xylosim", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("encode", help="encode a WAV file into an evt-csv raster")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("build-net", help="build a SynNet (fnet) or a tone-detector qnet")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tone-detector", metavar="BANDS", help="comma-separated band per class; writes qnet")
    p.set_defaults(func=cmd_build_net)

    p = sub.add_parser("quantize", help="quantize an fnet into a qnet")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.add_argument("--kappa", type=float)
    p.add_argument("--config")
    p.set_defaults(func=cmd_quantize)

    p = sub.add_parser("infer", help="classify one raster or WAV file")
    p.add_argument("--net", required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--raster")
    src.add_argument("--in", dest="input")
    p.add_argument("--traces")
    p.add_argument("--mode", choices=("accelerated", "realtime"), default="accelerated")
    p.add_argument("--config")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("eval", help="evaluate a qnet on a manifest split")
    p.add_argument("--net", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--afe", "--config", dest="config")
    p.add_argument("--split", choices=("train", "val", "test", "all"), default="test")
    p.add_argument("--confusion")
    p.add_argument("--carry-state", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="simulation throughput and energy/latency estimates")
    p.add_argument("--net")
    p.add_argument("--config")
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--repeat", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--calibrate", action="store_true", help="fit energy_per_synop to 28.4 uJ/inference")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("loss-eval", help="peak loss of a readout trace CSV")
    p.add_argument("--traces", required=True)
    p.add_argument("--target", type=int, required=True)
    p.add_argument("--window-ms", type=float, default=100.0)
    p.add_argument("--g", type=float, default=1.5)
    p.add_argument("--wl", type=float, default=1.0)
    p.add_argument("--dt-ms", type=float, default=10.0)
    p.set_defaults(func=cmd_loss_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (XyloSimError, OSError, ValueError, IndexError) as exc:
        message = str(exc).replace("\n", " ")
        print(f"error: {type(exc).__name__}: {message}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
