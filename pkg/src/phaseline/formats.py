"""Binary container formats (PSPC, PPDF, PPDH) and mono WAV handling.

All multi-byte fields are little-endian.  Grids are stored frame after frame
with the frequency axis contiguous inside each frame, matching the in-memory
``(bins, frames)`` layout transposed.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile

PSPC_MAGIC = b"PSPC"
PPDF_MAGIC = b"PPDF"
PPDH_MAGIC = b"PPDH"
FORMAT_VERSION = 1


class FormatError(Exception):
    """Base class for container-format failures."""


class BadMagicError(FormatError):
    pass


class UnsupportedVersionError(FormatError):
    pass


class TruncatedFileError(FormatError):
    pass


class ChecksumError(FormatError):
    pass


class DimensionMismatchError(FormatError):
    pass


class _Reader:
    def __init__(self, data):
        self.data = data
        self.pos = 0

    def take(self, count):
        if self.pos + count > len(self.data):
            raise TruncatedFileError(
                f"need {count} bytes at offset {self.pos}, file has {len(self.data)}"
            )
        chunk = self.data[self.pos : self.pos + count]
        self.pos += count
        return chunk

    def unpack(self, fmt):
        return struct.unpack("<" + fmt, self.take(struct.calcsize("<" + fmt)))

    def array(self, dtype, count):
        dtype = np.dtype(dtype)
        raw = self.take(dtype.itemsize * count)
        return np.frombuffer(raw, dtype=dtype)

    def expect_end(self):
        if self.pos != len(self.data):
            raise FormatError(f"{len(self.data) - self.pos} unexpected trailing bytes")


def _check_magic(reader, magic):
    got = reader.take(len(magic))
    if got != magic:
        raise BadMagicError(f"bad magic {got!r}, expected {magic!r}")


def _check_version(reader):
    (version,) = reader.unpack("H")
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"unsupported version {version}")


# ---------------------------------------------------------------------------
# WAV

def read_wav(path, expected_rate=None):
    """Read a mono PCM-16 or float-32 WAV as float64 samples in [-1, 1).

    Raises ValueError on multi-channel input or when ``expected_rate`` is given
    and differs from the file; resampling is never performed.
    """
    rate, data = wavfile.read(path)
    if data.ndim != 1:
        raise ValueError(f"{path}: expected mono audio, got {data.ndim} channels")
    if data.size == 0:
        raise ValueError(f"{path}: empty WAV")
    if expected_rate is not None and rate != expected_rate:
        raise ValueError(
            f"{path}: sample rate {rate} Hz does not match expected {expected_rate} Hz"
        )
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    else:
        raise ValueError(f"{path}: unsupported WAV sample format {data.dtype}")
    return int(rate), samples


def write_wav(path, rate, samples, encoding="float32"):
    """Write mono samples as IEEE float-32 (default) or PCM 16-bit."""
    samples = np.asarray(samples, dtype=np.float64)
    if encoding == "float32":
        wavfile.write(path, rate, samples.astype(np.float32))
    elif encoding == "pcm16":
        clipped = np.clip(samples, -1.0, 32767.0 / 32768.0)
        wavfile.write(path, rate, np.round(clipped * 32768.0).astype(np.int16))
    else:
        raise ValueError(f"unknown WAV encoding {encoding!r}")


# ---------------------------------------------------------------------------
# PSPC: spectrogram grids (magnitude-only or complex)

MAGNITUDE_KIND = 0
COMPLEX_KIND = 1


@dataclass(frozen=True)
class PspcData:
    """Decoded PSPC payload; ``data`` is float64 magnitude or complex128."""

    data: np.ndarray
    sample_rate: int
    hop: int
    window_length: int
    kind: int


def write_pspc(path, grid, sample_rate, hop, window_length):
    """Write an (bins, frames) grid; complex input stores interleaved re/im."""
    grid = np.asarray(grid)
    if grid.ndim != 2:
        raise ValueError("grid must be 2-D (bins, frames)")
    kind = COMPLEX_KIND if np.iscomplexobj(grid) else MAGNITUDE_KIND
    m, n = grid.shape
    header = PSPC_MAGIC + struct.pack(
        "<HIIIIIB", FORMAT_VERSION, m, n, sample_rate, hop, window_length, kind
    )
    per_frame = grid.T  # frames consecutive, frequency-major inside each frame
    if kind == COMPLEX_KIND:
        payload = np.empty((n, m, 2), dtype="<f4")
        payload[:, :, 0] = per_frame.real
        payload[:, :, 1] = per_frame.imag
    else:
        payload = per_frame.astype("<f4")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload.tobytes())


def read_pspc(path):
    with open(path, "rb") as fh:
        reader = _Reader(fh.read())
    _check_magic(reader, PSPC_MAGIC)
    _check_version(reader)
    m, n, sample_rate, hop, window_length = reader.unpack("IIIII")
    (kind,) = reader.unpack("B")
    if kind not in (MAGNITUDE_KIND, COMPLEX_KIND):
        raise FormatError(f"unknown PSPC payload kind {kind}")
    if kind == COMPLEX_KIND:
        flat = reader.array("<f4", 2 * m * n).astype(np.float64)
        per_frame = flat[0::2].reshape(n, m) + 1j * flat[1::2].reshape(n, m)
    else:
        per_frame = reader.array("<f4", m * n).astype(np.float64).reshape(n, m)
    reader.expect_end()
    return PspcData(per_frame.T, sample_rate, hop, window_length, kind)


# ---------------------------------------------------------------------------
# PPDF: per-frame phase differences (BPD rows then FPD rows, frame by frame)

@dataclass(frozen=True)
class PpdfData:
    """Phase-difference grids: ``bpd`` is (M, N) with column 0 zeroed by
    convention (the time difference at frame 0 does not exist); ``fpd`` is
    (M-1, N)."""

    bpd: np.ndarray
    fpd: np.ndarray


def write_ppdf(path, bpd, fpd):
    bpd = np.asarray(bpd, dtype=np.float64)
    fpd = np.asarray(fpd, dtype=np.float64)
    if bpd.ndim != 2 or fpd.ndim != 2:
        raise ValueError("bpd and fpd must be 2-D grids")
    m, n = bpd.shape
    if fpd.shape != (m - 1, n):
        raise DimensionMismatchError(
            f"fpd shape {fpd.shape} inconsistent with bpd shape {bpd.shape}"
        )
    with open(path, "wb") as fh:
        fh.write(PPDF_MAGIC + struct.pack("<HII", FORMAT_VERSION, m, n))
        frames = np.empty((n, 2 * m - 1), dtype="<f4")
        frames[:, :m] = bpd.T
        frames[:, m:] = fpd.T
        fh.write(frames.tobytes())


def read_ppdf(path):
    with open(path, "rb") as fh:
        reader = _Reader(fh.read())
    _check_magic(reader, PPDF_MAGIC)
    _check_version(reader)
    m, n = reader.unpack("II")
    frames = reader.array("<f4", (2 * m - 1) * n).astype(np.float64).reshape(n, 2 * m - 1)
    reader.expect_end()
    return PpdfData(frames[:, :m].T.copy(), frames[:, m:].T.copy())


# ---------------------------------------------------------------------------
# PPDH: raw error histograms

def write_ppdh(path, counts):
    counts = np.asarray(counts, dtype="<u8")
    if counts.ndim != 1:
        raise ValueError("histogram counts must be a 1-D vector")
    with open(path, "wb") as fh:
        fh.write(PPDH_MAGIC + struct.pack("<I", counts.size))
        fh.write(counts.tobytes())


def read_ppdh(path):
    with open(path, "rb") as fh:
        reader = _Reader(fh.read())
    _check_magic(reader, PPDH_MAGIC)
    (bins,) = reader.unpack("I")
    counts = reader.array("<u8", bins).copy()
    reader.expect_end()
    return counts
