"""Readers and writers for the binary formats shared with the inference side.

This is an independent implementation of the documented byte layouts (PSPC
spectrogram grids, PPDF phase-difference dumps, PDNW weight containers); the
inference package is consumed only through these files and its command line.
All integers are little-endian; grids are stored frame by frame with the
frequency axis contiguous.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile

PSPC_MAGIC = b"PSPC"
PPDF_MAGIC = b"PPDF"
PDNW_MAGIC = b"PDNW"
VERSION = 1

MAGNITUDE_KIND = 0
COMPLEX_KIND = 1


def read_wav(path, expected_rate=None):
    rate, data = wavfile.read(path)
    if data.ndim != 1 or data.size == 0:
        raise ValueError(f"{path}: need non-empty mono audio")
    if expected_rate is not None and rate != expected_rate:
        raise ValueError(f"{path}: rate {rate} != expected {expected_rate}")
    if data.dtype == np.int16:
        data = data.astype(np.float64) / 32768.0
    else:
        data = data.astype(np.float64)
    return int(rate), data


def write_wav(path, rate, samples):
    wavfile.write(path, rate, np.asarray(samples, dtype=np.float32))


@dataclass(frozen=True)
class PspcData:
    data: np.ndarray
    sample_rate: int
    hop: int
    window_length: int
    kind: int


def read_pspc(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != PSPC_MAGIC:
        raise ValueError(f"{path}: not a PSPC file")
    version, m, n, rate, hop, win, kind = struct.unpack_from("<HIIIIIB", blob, 4)
    if version != VERSION:
        raise ValueError(f"{path}: unsupported PSPC version {version}")
    payload = np.frombuffer(blob, dtype="<f4", offset=27)
    if kind == COMPLEX_KIND:
        if payload.size != 2 * m * n:
            raise ValueError(f"{path}: truncated payload")
        grid = payload[0::2].reshape(n, m) + 1j * payload[1::2].reshape(n, m)
    else:
        if payload.size != m * n:
            raise ValueError(f"{path}: truncated payload")
        grid = payload.reshape(n, m)
    return PspcData(np.array(grid.T, dtype=grid.dtype), rate, hop, win, kind)


@dataclass(frozen=True)
class PpdfData:
    bpd: np.ndarray  # (bins, frames); column 0 is zero for oracle dumps
    fpd: np.ndarray  # (bins - 1, frames)


def write_ppdf(path, bpd, fpd):
    bpd = np.asarray(bpd, dtype=np.float64)
    fpd = np.asarray(fpd, dtype=np.float64)
    m, n = bpd.shape
    if fpd.shape != (m - 1, n):
        raise ValueError("fpd shape inconsistent with bpd")
    frames = np.empty((n, 2 * m - 1), dtype="<f4")
    frames[:, :m] = bpd.T
    frames[:, m:] = fpd.T
    with open(path, "wb") as fh:
        fh.write(PPDF_MAGIC + struct.pack("<HII", VERSION, m, n))
        fh.write(frames.tobytes())


def read_ppdf(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != PPDF_MAGIC:
        raise ValueError(f"{path}: not a PPDF file")
    version, m, n = struct.unpack_from("<HII", blob, 4)
    if version != VERSION:
        raise ValueError(f"{path}: unsupported PPDF version {version}")
    payload = np.frombuffer(blob, dtype="<f4", offset=14)
    if payload.size != (2 * m - 1) * n:
        raise ValueError(f"{path}: truncated payload")
    frames = payload.reshape(n, 2 * m - 1).astype(np.float64)
    return PpdfData(frames[:, :m].T.copy(), frames[:, m:].T.copy())


KIND_CONV = 0
KIND_GATED = 1
HEAD_CODES = {"bpd": 0, "fpd": 1}


def write_pdnw(path, head, layers):
    """Serialize a layer list to the shared weight container.

    ``layers`` is a sequence of dicts with ``kind`` (0 plain, 1 gated),
    ``weight`` (out, in, k) float32, ``bias`` (out,), and for gated layers
    ``gate_weight`` and ``gate_bias``.
    """
    chunks = [PDNW_MAGIC, struct.pack("<HBH", VERSION, HEAD_CODES[head], len(layers))]
    for layer in layers:
        weight = np.ascontiguousarray(layer["weight"], dtype="<f4")
        bias = np.ascontiguousarray(layer["bias"], dtype="<f4")
        out_ch, in_ch, kernel = weight.shape
        chunks.append(struct.pack("<BHHH", layer["kind"], in_ch, out_ch, kernel))
        chunks.append(weight.tobytes())
        chunks.append(bias.tobytes())
        if layer["kind"] == KIND_GATED:
            chunks.append(np.ascontiguousarray(layer["gate_weight"], dtype="<f4").tobytes())
            chunks.append(np.ascontiguousarray(layer["gate_bias"], dtype="<f4").tobytes())
    payload = b"".join(chunks)
    blob = payload + struct.pack("<I", zlib.crc32(payload))
    with open(path, "wb") as fh:
        fh.write(blob)
    return blob


def read_pdnw(path):
    """Parse a weight container back into (head, layer dicts)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    payload, (crc,) = blob[:-4], struct.unpack("<I", blob[-4:])
    if zlib.crc32(payload) != crc:
        raise ValueError(f"{path}: checksum mismatch")
    if payload[:4] != PDNW_MAGIC:
        raise ValueError(f"{path}: not a PDNW file")
    version, head_code, layer_count = struct.unpack_from("<HBH", payload, 4)
    if version != VERSION:
        raise ValueError(f"{path}: unsupported PDNW version {version}")
    head = {code: name for name, code in HEAD_CODES.items()}[head_code]
    offset = 9
    layers = []
    for _ in range(layer_count):
        kind, in_ch, out_ch, kernel = struct.unpack_from("<BHHH", payload, offset)
        offset += 7

        def take(count):
            nonlocal offset
            arr = np.frombuffer(payload, dtype="<f4", count=count, offset=offset)
            offset += 4 * count
            return arr

        layer = {
            "kind": kind,
            "weight": take(out_ch * in_ch * kernel).reshape(out_ch, in_ch, kernel),
            "bias": take(out_ch),
        }
        if kind == KIND_GATED:
            layer["gate_weight"] = take(out_ch * in_ch * kernel).reshape(out_ch, in_ch, kernel)
            layer["gate_bias"] = take(out_ch)
        layers.append(layer)
    if offset != len(payload):
        raise ValueError(f"{path}: trailing bytes in container")
    return head, layers
