import numpy as np
import pytest

from xylosim.afe import AfeConfig, AudioBuffer, design_filterbank
from xylosim.formats import write_wav

_ACCEPTANCE_LINES = []


def record_criterion(name, passed, detail=""):
    line = f"[{'PASS' if passed else 'FAIL'}] {name}" + (f" :: {detail}" if detail else "")
    _ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


@pytest.fixture
def criterion():
    return record_criterion


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def afe_config():
    return AfeConfig()


@pytest.fixture(scope="session")
def filterbank(afe_config):
    return design_filterbank(afe_config)


def tone(freq, amplitude=0.5, duration_s=1.0, fs=48000.0, phase=0.0):
    t = np.arange(int(round(duration_s * fs))) / fs
    return AudioBuffer(amplitude * np.sin(2 * np.pi * freq * t + phase), fs)


@pytest.fixture
def tone_manifest(tmp_path, filterbank):
    """Write 1 s tone WAVs at the centres of ``bands`` and a manifest for them."""

    def make(bands, per_class=1, split="test", amplitude=0.5, name="manifest.csv"):
        rng = np.random.default_rng(7)
        lines = ["path,label,split"]
        for label, band in enumerate(bands):
            for n in range(per_class):
                fname = f"tone_c{label}_{n}.wav"
                audio = tone(filterbank.center_hz[band], amplitude, phase=rng.uniform(0, 2 * np.pi))
                write_wav(audio, tmp_path / fname)
                lines.append(f"{fname},{label},{split}")
        path = tmp_path / name
        path.write_text("\n".join(lines) + "\n")
        return path

    return make
