"""Forward-pass-only causal convolutional phase-difference estimators.

Two identical stacks of 1-D frequency convolutions serve as the estimation
heads: one emits the baseband time difference (M outputs per frame), the other
the frequency difference (M-1 outputs, the lowest bin dropped).  Temporal
context enters purely as input channels, so the network is causal by
construction.  Inference runs in float32.

Weight container ("PDNW"): magic, u16 version, u8 head (0=time head, 1=freq
head), u16 layer count, then per layer u8 kind (0=plain, 1=gated), u16 in,
u16 out, u16 kernel, f32 weights [out][in][k], f32 bias [out] (gated layers
append gate weights and gate bias), all little-endian, closed by a u32 CRC32
of every preceding byte.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .formats import (
    BadMagicError,
    ChecksumError,
    DimensionMismatchError,
    FormatError,
    TruncatedFileError,
    UnsupportedVersionError,
    _Reader,
)
from .phasediff import bin_phase_advance, log_magnitude
from .spectral import FrameStream

PDNW_MAGIC = b"PDNW"
PDNW_VERSION = 1

HEAD_BPD = "bpd"
HEAD_FPD = "fpd"
_HEAD_CODES = {HEAD_BPD: 0, HEAD_FPD: 1}
_HEAD_NAMES = {code: name for name, code in _HEAD_CODES.items()}

KIND_CONV = "conv"
KIND_GATED = "gated_conv"
_KIND_CODES = {KIND_CONV: 0, KIND_GATED: 1}
_KIND_NAMES = {code: name for name, code in _KIND_CODES.items()}

DEFAULT_CHANNELS = 64
DEFAULT_LOOK_BACK = 3
DEFAULT_GATED_LAYERS = 5
# The gated kernel width that realizes the published 206k-parameter budget.
DEFAULT_GATED_KERNEL = 5


class ModelHeadError(ValueError):
    """A model with the wrong estimation head was supplied."""


@dataclass(frozen=True)
class LayerSpec:
    """One convolution layer; gated layers carry a second conv whose sigmoid
    output multiplies the main branch."""

    kind: str
    weight: np.ndarray
    bias: np.ndarray
    gate_weight: np.ndarray | None = None
    gate_bias: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in _KIND_CODES:
            raise ValueError(f"unknown layer kind {self.kind!r}")
        weight = np.ascontiguousarray(self.weight, dtype=np.float32)
        bias = np.ascontiguousarray(self.bias, dtype=np.float32)
        if weight.ndim != 3:
            raise ValueError("weight must have shape (out, in, kernel)")
        if weight.shape[2] % 2 != 1:
            raise ValueError("kernel size must be odd")
        if bias.shape != (weight.shape[0],):
            raise ValueError("bias length must match output channels")
        object.__setattr__(self, "weight", weight)
        object.__setattr__(self, "bias", bias)
        if self.kind == KIND_GATED:
            if self.gate_weight is None or self.gate_bias is None:
                raise ValueError("gated layer requires gate weights and bias")
            gw = np.ascontiguousarray(self.gate_weight, dtype=np.float32)
            gb = np.ascontiguousarray(self.gate_bias, dtype=np.float32)
            if gw.shape != weight.shape or gb.shape != bias.shape:
                raise ValueError("gate tensors must match the main branch shapes")
            object.__setattr__(self, "gate_weight", gw)
            object.__setattr__(self, "gate_bias", gb)
        elif self.gate_weight is not None or self.gate_bias is not None:
            raise ValueError("plain layer must not carry gate tensors")

    @property
    def out_channels(self):
        return self.weight.shape[0]

    @property
    def in_channels(self):
        return self.weight.shape[1]

    @property
    def kernel_size(self):
        return self.weight.shape[2]

    @property
    def param_count(self):
        count = self.weight.size + self.bias.size
        if self.kind == KIND_GATED:
            count *= 2
        return count


@dataclass(frozen=True)
class ConvNetModel:
    """Immutable layer stack with a declared estimation head."""

    layers: tuple
    head: str

    def __post_init__(self):
        if self.head not in _HEAD_CODES:
            raise ValueError(f"unknown head {self.head!r}")
        layers = tuple(self.layers)
        if not layers:
            raise ValueError("model needs at least one layer")
        for prev, cur in zip(layers, layers[1:]):
            if cur.in_channels != prev.out_channels:
                raise DimensionMismatchError(
                    f"layer expects {cur.in_channels} input channels, "
                    f"previous layer emits {prev.out_channels}"
                )
        if layers[-1].out_channels != 1:
            raise ValueError("final layer must emit a single channel")
        object.__setattr__(self, "layers", layers)

    @property
    def input_channels(self):
        return self.layers[0].in_channels

    @property
    def look_back(self):
        return self.input_channels - 1

    @property
    def param_count(self):
        return sum(layer.param_count for layer in self.layers)


def _conv1d(x, weight, bias):
    # x: (..., in_channels, M) float32; zero same-padding along the last axis.
    k = weight.shape[2]
    half = k // 2
    m = x.shape[-1]
    pad = [(0, 0)] * (x.ndim - 1) + [(half, k - 1 - half)]
    xp = np.pad(x, pad)
    out = np.broadcast_to(bias[:, None], x.shape[:-2] + (weight.shape[0], m)).copy()
    for t in range(k):
        out += weight[:, :, t] @ xp[..., t : t + m]
    return out


def _sigmoid(x):
    # branch on sign to keep exp() in range for float32
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _run_layers(model, x):
    x = np.ascontiguousarray(x, dtype=np.float32)
    for layer in model.layers:
        main = _conv1d(x, layer.weight, layer.bias)
        if layer.kind == KIND_GATED:
            gate = _conv1d(x, layer.gate_weight, layer.gate_bias)
            x = _sigmoid(gate) * main
        else:
            x = main
    return x


def build_feature(log_mag_frames):
    """Mean-subtracted feature block from the look-back window of
    log-magnitude frames, oldest first; shape (frames, bins)."""
    block = np.asarray(log_mag_frames, dtype=np.float64)
    if block.ndim != 2:
        raise ValueError("expected a (frames, bins) block of log-magnitudes")
    return block - block.mean()


def forward(model, feature):
    """Run one feature block through the network.

    Returns M values for the time head or M-1 for the frequency head (the
    lowest bin is dropped).  Outputs are unbounded radians, not wrapped.
    """
    feature = np.asarray(feature)
    if feature.ndim != 2 or feature.shape[0] != model.input_channels:
        raise ValueError(
            f"feature must be ({model.input_channels}, bins), got {feature.shape}"
        )
    out = _run_layers(model, feature)[0]
    return out[1:] if model.head == HEAD_FPD else out


def forward_batch(model, features):
    """Vectorized :func:`forward` over a (frames, channels, bins) stack."""
    features = np.asarray(features)
    if features.ndim != 3 or features.shape[1] != model.input_channels:
        raise ValueError("features must be (frames, channels, bins)")
    out = _run_layers(model, features)[:, 0, :]
    return out[:, 1:] if model.head == HEAD_FPD else out


def build_model(
    head,
    channels=DEFAULT_CHANNELS,
    look_back=DEFAULT_LOOK_BACK,
    gated_layers=DEFAULT_GATED_LAYERS,
    gated_kernel=DEFAULT_GATED_KERNEL,
    rng=None,
):
    """Construct the default architecture with uniform random weights.

    One 1x1 channel-mixing layer, ``gated_layers`` gated convolutions, and a
    1x1 projection to a single channel.
    """
    rng = np.random.default_rng(rng)

    def init(out_ch, in_ch, k):
        bound = 1.0 / np.sqrt(in_ch * k)
        weight = rng.uniform(-bound, bound, (out_ch, in_ch, k)).astype(np.float32)
        bias = rng.uniform(-bound, bound, out_ch).astype(np.float32)
        return weight, bias

    layers = [LayerSpec(KIND_CONV, *init(channels, look_back + 1, 1))]
    for _ in range(gated_layers):
        w, b = init(channels, channels, gated_kernel)
        gw, gb = init(channels, channels, gated_kernel)
        layers.append(LayerSpec(KIND_GATED, w, b, gw, gb))
    layers.append(LayerSpec(KIND_CONV, *init(1, channels, 1)))
    return ConvNetModel(tuple(layers), head)


# ---------------------------------------------------------------------------
# PDNW container

def save_model(model):
    """Serialize a model to PDNW bytes."""
    chunks = [
        PDNW_MAGIC,
        struct.pack(
            "<HBH", PDNW_VERSION, _HEAD_CODES[model.head], len(model.layers)
        ),
    ]
    for layer in model.layers:
        chunks.append(
            struct.pack(
                "<BHHH",
                _KIND_CODES[layer.kind],
                layer.in_channels,
                layer.out_channels,
                layer.kernel_size,
            )
        )
        chunks.append(layer.weight.astype("<f4").tobytes())
        chunks.append(layer.bias.astype("<f4").tobytes())
        if layer.kind == KIND_GATED:
            chunks.append(layer.gate_weight.astype("<f4").tobytes())
            chunks.append(layer.gate_bias.astype("<f4").tobytes())
    payload = b"".join(chunks)
    return payload + struct.pack("<I", zlib.crc32(payload))


def load_model(data):
    """Parse PDNW bytes back into a :class:`ConvNetModel`.

    Distinct errors: bad magic, unsupported version, truncation, checksum
    mismatch, and inconsistent layer dimensions.
    """
    if len(data) < 4:
        raise TruncatedFileError("file shorter than its checksum")
    payload, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    reader = _Reader(payload)
    magic = reader.take(4)
    if magic != PDNW_MAGIC:
        raise BadMagicError(f"bad magic {magic!r}, expected {PDNW_MAGIC!r}")
    version, head_code, layer_count = reader.unpack("HBH")
    if version != PDNW_VERSION:
        raise UnsupportedVersionError(f"unsupported version {version}")
    if head_code not in _HEAD_NAMES:
        raise FormatError(f"unknown head code {head_code}")
    layers = []
    for _ in range(layer_count):
        kind_code, in_ch, out_ch, kernel = reader.unpack("BHHH")
        if kind_code not in _KIND_NAMES:
            raise FormatError(f"unknown layer kind code {kind_code}")
        weight = reader.array("<f4", out_ch * in_ch * kernel).reshape(out_ch, in_ch, kernel)
        bias = reader.array("<f4", out_ch)
        if _KIND_NAMES[kind_code] == KIND_GATED:
            gate_weight = reader.array("<f4", out_ch * in_ch * kernel).reshape(
                out_ch, in_ch, kernel
            )
            gate_bias = reader.array("<f4", out_ch)
            layers.append(LayerSpec(KIND_GATED, weight, bias, gate_weight, gate_bias))
        else:
            layers.append(LayerSpec(KIND_CONV, weight, bias))
    reader.expect_end()
    if zlib.crc32(payload) != crc:
        raise ChecksumError("CRC32 mismatch")
    return ConvNetModel(tuple(layers), _HEAD_NAMES[head_code])


def save_model_file(model, path):
    with open(path, "wb") as fh:
        fh.write(save_model(model))


def load_model_file(path):
    with open(path, "rb") as fh:
        return load_model(fh.read())


# ---------------------------------------------------------------------------
# Streaming estimation

class DnnDifferenceEstimator:
    """Per-stream feature buffering and per-frame inference.

    Each arriving magnitude frame is log-compressed once, floored against the
    running maximum; missing history at stream start replicates the first
    frame.  Emits the time difference with the deterministic per-bin advance
    restored, and the raw frequency difference.
    """

    def __init__(self, bpd_model, fpd_model, hop, fft_size):
        if bpd_model.head != HEAD_BPD:
            raise ModelHeadError(f"time-difference model has head {bpd_model.head!r}")
        if fpd_model.head != HEAD_FPD:
            raise ModelHeadError(f"frequency-difference model has head {fpd_model.head!r}")
        if bpd_model.input_channels != fpd_model.input_channels:
            raise ValueError("models disagree on the look-back window")
        self.bpd_model = bpd_model
        self.fpd_model = fpd_model
        self.hop = hop
        self.fft_size = fft_size
        self._history = []
        self._running_max = 0.0
        self._advance = None

    def step(self, magnitude):
        magnitude = np.asarray(magnitude, dtype=np.float64)
        if self._advance is None:
            self._advance = bin_phase_advance(magnitude.size, self.hop, self.fft_size)
        self._running_max = max(self._running_max, magnitude.max())
        log_cur = log_magnitude(magnitude, self._running_max)

        window = self.bpd_model.input_channels
        if not self._history:
            self._history = [log_cur] * (window - 1)
        self._history.append(log_cur)
        if len(self._history) > window:
            self._history.pop(0)

        feature = build_feature(np.stack(self._history))
        bpd = forward(self.bpd_model, feature).astype(np.float64)
        fpd = forward(self.fpd_model, feature).astype(np.float64)
        return bpd + self._advance, fpd, bpd


def estimate_differences_dnn(magnitude, bpd_model, fpd_model, hop, fft_size):
    """Grid driver: returns ``(tpd, fpd, bpd)`` grids with shapes (M, N-1),
    (M-1, N), and (M, N); the frame-0 time difference is dropped from ``tpd``
    as it pairs no previous frame."""
    stream = magnitude if isinstance(magnitude, FrameStream) else FrameStream(magnitude)
    estimator = DnnDifferenceEstimator(bpd_model, fpd_model, hop, fft_size)
    tpd_cols, fpd_cols, bpd_cols = [], [], []
    for _, frame in stream:
        tpd, fpd, bpd = estimator.step(frame)
        tpd_cols.append(tpd)
        fpd_cols.append(fpd)
        bpd_cols.append(bpd)
    return (
        np.stack(tpd_cols[1:], axis=1),
        np.stack(fpd_cols, axis=1),
        np.stack(bpd_cols, axis=1),
    )
