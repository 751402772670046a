"""Bit-accurate simulation of an audio SNN inference pipeline: AFE encoding, integer LIF core, quantization."""

from .afe import (
    AfeConfig,
    AfeEncoder,
    AudioBuffer,
    EventRaster,
    FilterbankSpec,
    LifEncoderConfig,
    design_filterbank,
    encode_audio,
)
from .errors import ConfigError, NumericalError, ParseError, ShapeError, ValidationError, XyloSimError
from .loss import PeakLossParams, TraceMatrix, peak_loss
from .quant import QuantReport, dash_from_tau, quantize_network
from .runner import EnergyModelParams, estimate_energy, evaluate, load_manifest, simulate_latency
from .snn import InferenceReport, QuantLayer, QuantNetwork, SnnStream, run_raster, tone_detector
from .synnet import FloatNetwork, SynNetSpec, build_synnet, run_float

__version__ = "0.1.0"
