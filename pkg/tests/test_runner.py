import numpy as np
import pytest

from xylosim.afe import AfeConfig, AudioBuffer
from xylosim.errors import ConfigError, ParseError, ValidationError
from xylosim.formats import write_wav
from xylosim.runner import (
    EnergyModelParams,
    calibrate_energy_per_synop,
    estimate_energy,
    evaluate,
    load_config,
    load_manifest,
    per_step_cycles_for,
    simulate_latency,
)
from xylosim.snn import StepTelemetry, tone_detector

BANDS = (3, 6, 9, 12)


def _write(tmp_path, text, name="m.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_manifest_three_entries(tmp_path):
    path = _write(tmp_path, "path,label,split\na.wav,0,train\nb.wav,3,val\nsub/c.wav,1,test\n")
    manifest = load_manifest(path)
    assert len(manifest) == 3
    assert manifest.entries[2].path == tmp_path / "sub" / "c.wav"
    assert [e.label for e in manifest.split("val")] == [3]


def test_manifest_duplicate_path(tmp_path):
    path = _write(tmp_path, "path,label,split\na.wav,0,train\na.wav,1,test\n")
    with pytest.raises(ValidationError, match="a.wav"):
        load_manifest(path)


def test_manifest_label_range(tmp_path):
    path = _write(tmp_path, "path,label,split\na.wav,4,train\n")
    with pytest.raises(ValidationError):
        load_manifest(path, num_classes=4)


def test_manifest_parse_error_line(tmp_path):
    path = _write(tmp_path, "path,label,split\na.wav,0,train\nb.wav,x,train\n")
    with pytest.raises(ParseError) as info:
        load_manifest(path)
    assert info.value.line == 3


def test_evaluate_tone_detector(tone_manifest):
    manifest = load_manifest(tone_manifest(BANDS))
    result = evaluate(tone_detector(BANDS), manifest, AfeConfig())
    assert result.accuracy == 1.0 and result.accuracy_defined
    assert np.array_equal(result.confusion, np.eye(4, dtype=int))
    again = evaluate(tone_detector(BANDS), manifest, AfeConfig())
    assert np.array_equal(again.confusion, result.confusion)
    assert again.telemetry == result.telemetry


def test_evaluate_order_invariant(tone_manifest, tmp_path):
    path = tone_manifest(BANDS, per_class=2)
    lines = path.read_text().splitlines()
    reordered = _write(tmp_path, "\n".join([lines[0]] + lines[:0:-1]) + "\n", "rev.csv")
    a = evaluate(tone_detector(BANDS), load_manifest(path))
    b = evaluate(tone_detector(BANDS), load_manifest(reordered))
    assert a.accuracy == b.accuracy
    assert np.array_equal(a.confusion, b.confusion)


def test_empty_split_is_undefined(tone_manifest):
    manifest = load_manifest(tone_manifest(BANDS, split="train"))
    result = evaluate(tone_detector(BANDS), manifest, split="test")
    assert not result.accuracy_defined
    assert np.isnan(result.accuracy)


def test_missing_file_fails_fast(tmp_path):
    path = _write(tmp_path, "path,label,split\nnope.wav,0,test\n")
    with pytest.raises(FileNotFoundError, match="nope.wav"):
        evaluate(tone_detector(BANDS), load_manifest(path))


def test_carry_state_streams_across_entries(tone_manifest):
    manifest = load_manifest(tone_manifest(BANDS))
    independent = evaluate(tone_detector(BANDS), manifest)
    carried = evaluate(tone_detector(BANDS), manifest, carry_state=True)
    assert carried.num_samples == independent.num_samples
    assert carried.total_bins == independent.total_bins


def test_idle_energy_example():
    energy = estimate_energy(StepTelemetry(), EnergyModelParams(idle_power_w=351e-6), 0.084)
    assert energy.idle_energy_j == pytest.approx(29.484e-6)
    assert energy.dynamic_energy_j == 0
    assert energy.active_energy_j == energy.idle_energy_j


def test_energy_linear_in_syn_ops():
    params = EnergyModelParams(energy_per_synop_j=3e-10, energy_per_neuron_update_j=1e-11)
    one = estimate_energy(StepTelemetry(1000, 0, 0), params, 0.1)
    two = estimate_energy(StepTelemetry(2000, 0, 0), params, 0.1)
    assert two.dynamic_energy_j == 2 * one.dynamic_energy_j


def test_calibration_hits_target():
    e = calibrate_energy_per_synop(50_000, 28.4e-6, mean_neuron_updates=9700, energy_per_neuron_update_j=1e-10)
    params = EnergyModelParams(energy_per_synop_j=e, energy_per_neuron_update_j=1e-10)
    energy = estimate_energy(StepTelemetry(50_000, 9700, 0), params, 0.084)
    assert energy.dynamic_energy_j == pytest.approx(28.4e-6, rel=1e-12)
    with pytest.raises(ConfigError):
        calibrate_energy_per_synop(0)


def test_latency_examples():
    assert simulate_latency(100, "realtime") == pytest.approx(1.0)
    assert simulate_latency(0, "accelerated") == 0
    cycles = per_step_cycles_for(0.084, 100)
    assert cycles == 10500
    accel = simulate_latency(100, "accelerated", EnergyModelParams(), cycles)
    assert accel == pytest.approx(0.084)
    assert 1.0 / accel == pytest.approx(11.9, abs=0.05)
    with pytest.raises(ConfigError):
        simulate_latency(1, "warp")


def test_energy_params_non_negative():
    with pytest.raises(ConfigError):
        EnergyModelParams(idle_power_w=-1)


def test_load_config(tmp_path):
    path = _write(
        tmp_path,
        "[afe]\ngain_db = 6\n[encoder]\nthreshold = 40\n[synnet]\nhidden_widths = 8, 8\ntau_counts = [2, 3]\n"
        "[energy]\nidle_power_w = 1e-4\n[quant]\nkappa = 2\nper_step_cost_cycles = 500\n",
        "cfg.ini",
    )
    cfg = load_config(path)
    assert cfg.afe.gain_db == 6 and cfg.afe.encoder.threshold == 40
    assert cfg.synnet.hidden_widths == (8, 8) and cfg.synnet.tau_counts == (2, 3)
    assert cfg.energy.idle_power_w == 1e-4 and cfg.kappa == 2 and cfg.per_step_cost_cycles == 500


def test_load_config_unknown_key(tmp_path):
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, "[afe]\ncolour = blue\n", "cfg.ini"))
