"""Phase-difference algebra: wrapping, oracle extraction, BPD conversion,
complex-ratio conversion, and periodic error functions.

Conventions: the time difference (TPD) at frame ``n`` compares frames
``n-1`` and ``n`` and is undefined at frame 0; the frequency difference (FPD)
at row ``r`` compares bins ``r`` and ``r+1`` of one frame, so FPD vectors have
``n_bins - 1`` entries.  Wrapped values live in ``(-pi, pi]`` with ties at the
boundary resolved to ``+pi``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Relative magnitude floor shared by ratio conversion, WLS weighting, and
# log-magnitude features.  Offline pipelines floor against the utterance
# maximum; streaming pipelines floor against the running maximum.
MAGNITUDE_FLOOR_REL = 1e-10

_TWO_PI = 2.0 * np.pi


def wrap(phi):
    """Wrap angles to the principal range ``(-pi, pi]``."""
    phi = np.asarray(phi, dtype=np.float64)
    if not np.all(np.isfinite(phi)):
        raise ValueError("wrap requires finite input")
    wrapped = phi - _TWO_PI * np.ceil((phi - np.pi) / _TWO_PI)
    return wrapped if wrapped.ndim else float(wrapped)


def awe(phi, phi_hat):
    """Absolute wrapped error ``|wrap(phi - phi_hat)|`` in ``[0, pi]``."""
    phi = np.asarray(phi, dtype=np.float64)
    phi_hat = np.asarray(phi_hat, dtype=np.float64)
    return np.abs(wrap(phi - phi_hat))


def cosine_loss(phi, phi_hat):
    """Periodic loss ``-cos(phi - phi_hat)``, minimized (-1) at equality."""
    return -np.cos(np.asarray(phi) - np.asarray(phi_hat))


def floor_magnitude(magnitude, reference_max=None):
    """Clamp magnitudes from below at ``MAGNITUDE_FLOOR_REL * reference_max``.

    ``reference_max`` defaults to the maximum of ``magnitude`` itself; pass the
    running maximum in streaming contexts.
    """
    magnitude = np.asarray(magnitude, dtype=np.float64)
    if reference_max is None:
        reference_max = magnitude.max() if magnitude.size else 0.0
    floor = MAGNITUDE_FLOOR_REL * reference_max
    if floor <= 0.0:  # all-silent input: keep logs and ratios finite
        floor = np.finfo(np.float64).tiny
    return np.maximum(magnitude, floor)


def log_magnitude(magnitude, reference_max=None):
    """Natural log of the floored magnitude."""
    return np.log(floor_magnitude(magnitude, reference_max))


@dataclass(frozen=True)
class PhaseDifferenceFrame:
    """Per-frame phase differences; ``tpd`` is None at frame 0."""

    frame_index: int
    tpd: np.ndarray | None
    fpd: np.ndarray
    wrapped: bool = True

    def __post_init__(self):
        if self.tpd is not None and self.tpd.size != self.fpd.size + 1:
            raise ValueError("tpd must have one more entry than fpd")


@dataclass(frozen=True)
class ComplexRatioFrame:
    """Ratios of adjacent STFT coefficients: ``v`` across time (length M),
    ``u`` across frequency (length M-1, row r pairing bins r and r+1)."""

    v: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        if self.v.size != self.u.size + 1:
            raise ValueError("v must have one more entry than u")


def oracle_differences(spec):
    """True wrapped TPD/FPD grids from a complex spectrogram.

    Returns ``(tpd, fpd)`` where ``tpd`` has shape (M, N-1) covering frames
    ``1 .. N-1`` and ``fpd`` has shape (M-1, N).
    """
    if spec.n_frames < 2:
        raise ValueError("need at least two frames to form time differences")
    phase = spec.phase
    tpd = wrap(phase[:, 1:] - phase[:, :-1])
    fpd = wrap(phase[1:, :] - phase[:-1, :])
    return tpd, fpd


def oracle_difference_frames(spec):
    """Frame-wise view of :func:`oracle_differences`."""
    tpd, fpd = oracle_differences(spec)
    frames = [PhaseDifferenceFrame(0, None, fpd[:, 0])]
    for n in range(1, spec.n_frames):
        frames.append(PhaseDifferenceFrame(n, tpd[:, n - 1], fpd[:, n]))
    return frames


def bin_phase_advance(n_bins, hop, fft_size):
    """Deterministic per-bin phase advance per hop, ``2*pi*hop*m/fft_size``."""
    return _TWO_PI * hop * np.arange(n_bins) / fft_size


def tpd_to_bpd(tpd, hop, fft_size):
    """Remove the per-bin advance from a TPD vector or grid and wrap."""
    tpd = np.asarray(tpd, dtype=np.float64)
    offs = bin_phase_advance(tpd.shape[0], hop, fft_size)
    return wrap(tpd - (offs[:, None] if tpd.ndim == 2 else offs))


def bpd_to_tpd(bpd, hop, fft_size):
    """Inverse of :func:`tpd_to_bpd`; returns wrapped TPD."""
    bpd = np.asarray(bpd, dtype=np.float64)
    offs = bin_phase_advance(bpd.shape[0], hop, fft_size)
    return wrap(bpd + (offs[:, None] if bpd.ndim == 2 else offs))


def to_complex_ratios(mag_prev, mag_cur, tpd, fpd, floor_reference=None):
    """Convert estimated differences to complex coefficient ratios.

    The magnitudes are floored before division so the ratios stay finite; any
    2*pi shift of ``tpd`` or ``fpd`` leaves the result unchanged.
    """
    mag_prev = np.asarray(mag_prev, dtype=np.float64)
    mag_cur = np.asarray(mag_cur, dtype=np.float64)
    if floor_reference is None:
        floor_reference = max(mag_prev.max(), mag_cur.max())
    prev = floor_magnitude(mag_prev, floor_reference)
    cur = floor_magnitude(mag_cur, floor_reference)
    v = (cur / prev) * np.exp(1j * np.asarray(tpd, dtype=np.float64))
    u = (cur[1:] / cur[:-1]) * np.exp(1j * np.asarray(fpd, dtype=np.float64))
    return ComplexRatioFrame(v, u)
