"""Objective evaluation: log-spectral convergence, wrapped-error summaries,
and phase-difference recomputation from reconstructed phase."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .phasediff import awe, bin_phase_advance, wrap
from .spectral import istft, stft

LSC_FLOOR_DB = -120.0
HISTOGRAM_BINS = 64


def lsc(estimated_spec, reference_magnitude):
    """Log-spectral convergence in dB of an estimated complex spectrogram
    against a reference magnitude, clamped at -120 dB."""
    reference_magnitude = np.asarray(reference_magnitude, dtype=np.float64)
    if estimated_spec.coefficients.shape != reference_magnitude.shape:
        raise ValueError("estimate and reference grids must have the same shape")
    reanalyzed = stft(istft(estimated_spec), estimated_spec.config, estimated_spec.sample_rate)
    if reanalyzed.n_frames != estimated_spec.n_frames:
        raise ValueError("re-analysis changed the frame count")
    err = np.linalg.norm(reference_magnitude - reanalyzed.magnitude)
    ref = np.linalg.norm(reference_magnitude)
    if ref == 0:
        raise ValueError("reference magnitude is identically zero")
    if err == 0:
        return LSC_FLOOR_DB
    return max(20.0 * np.log10(err / ref), LSC_FLOOR_DB)


def recompute_differences_from_phase(phase, hop, fft_size):
    """Wrapped baseband-time and frequency differences of a phase grid.

    Returns ``(bpd, fpd)`` with shapes (M, N-1) and (M-1, N); used to score a
    reconstruction in a way that ignores any global phase constant.
    """
    phase = np.asarray(phase, dtype=np.float64)
    if phase.shape[1] < 2:
        raise ValueError("need at least two frames")
    advance = bin_phase_advance(phase.shape[0], hop, fft_size)
    bpd = wrap(phase[:, 1:] - phase[:, :-1] - advance[:, None])
    fpd = wrap(phase[1:, :] - phase[:-1, :])
    return bpd, fpd


@dataclass(frozen=True)
class AweSummary:
    """Median and histogram (64 bins over [0, pi]) of absolute wrapped error."""

    median: float
    histogram: np.ndarray
    count: int


def awe_summary(reference, estimate, magnitude_mask=None, bins=HISTOGRAM_BINS):
    """Summarize the wrapped error between two difference grids.

    ``magnitude_mask`` optionally restricts scoring to a boolean subset of
    bins (e.g. a top-magnitude quantile).
    """
    reference = np.asarray(reference, dtype=np.float64)
    estimate = np.asarray(estimate, dtype=np.float64)
    if reference.shape != estimate.shape:
        raise ValueError("reference and estimate shapes differ")
    errors = awe(reference, estimate)
    if magnitude_mask is not None:
        errors = errors[np.asarray(magnitude_mask, dtype=bool)]
    if errors.size == 0:
        raise ValueError("no bins left to evaluate")
    counts, _ = np.histogram(errors, bins=bins, range=(0.0, np.pi))
    return AweSummary(float(np.median(errors)), counts.astype(np.uint64), errors.size)


def magnitude_quantile_mask(magnitude, quantile):
    """Boolean mask of bins at or above the given magnitude quantile."""
    magnitude = np.asarray(magnitude)
    return magnitude >= np.quantile(magnitude, quantile)


@dataclass(frozen=True)
class EvaluationReport:
    """Per-utterance evaluation record; perceptual-metric slots stay None so
    external scorers can merge their own columns."""

    path: str
    lsc_db: float
    awe_bpd: AweSummary
    awe_fpd: AweSummary
    extras: dict = field(default_factory=dict)

    def line(self):
        return (
            f"{self.path}\tlsc_db={self.lsc_db:.4f}"
            f"\tawe_bpd_median={self.awe_bpd.median:.6f}"
            f"\tawe_fpd_median={self.awe_fpd.median:.6f}"
        )


def evaluate_pair(reference_spec, estimated_spec, path="", magnitude_mask=None):
    """Full report for an (estimate, reference) spectrogram pair."""
    hop = reference_spec.config.hop
    fft_size = reference_spec.config.fft_size
    ref_bpd, ref_fpd = recompute_differences_from_phase(reference_spec.phase, hop, fft_size)
    est_bpd, est_fpd = recompute_differences_from_phase(estimated_spec.phase, hop, fft_size)
    bpd_mask = fpd_mask = None
    if magnitude_mask is not None:
        bpd_mask = magnitude_mask[:, 1:]
        fpd_mask = magnitude_mask[1:, :]
    return EvaluationReport(
        path=path,
        lsc_db=lsc(estimated_spec, reference_spec.magnitude),
        awe_bpd=awe_summary(ref_bpd, est_bpd, bpd_mask),
        awe_fpd=awe_summary(ref_fpd, est_fpd, fpd_mask),
    )
