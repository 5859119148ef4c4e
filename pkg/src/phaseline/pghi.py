"""Analytic phase-difference estimation from log-magnitude and heap-ordered
phase integration (offline and causal streaming variants).

The estimators sample the phase derivatives on the T-F grid from centered (or,
causally, backward) differences of the log-magnitude, scaled by the window
constant ``beta``; trapezoidal averaging turns them into backward differences.
Integration then assigns phase bin by bin in order of decreasing magnitude,
deferring unreliable low-magnitude bins to random phase.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .phasediff import log_magnitude
from .spectral import FrameStream

CENTERED = "centered"
BACKWARD2 = "backward2"


@dataclass(frozen=True)
class DerivativeEstimates:
    """Phase-derivative samples on the grid.

    ``vc`` holds the time-derivative per hop, ``uc`` the frequency-derivative
    per bin; ``boundary`` marks entries where a one-sided or fallback stencil
    replaced the nominal scheme.
    """

    vc: np.ndarray
    uc: np.ndarray
    scheme: str
    boundary: np.ndarray


def _freq_derivative(log_mag):
    d = np.empty_like(log_mag)
    d[1:-1] = 0.5 * (log_mag[2:] - log_mag[:-2])
    d[0] = log_mag[1] - log_mag[0]
    d[-1] = log_mag[-1] - log_mag[-2]
    return d


def _time_derivative_centered(log_mag):
    d = np.empty_like(log_mag)
    d[:, 1:-1] = 0.5 * (log_mag[:, 2:] - log_mag[:, :-2])
    d[:, 0] = log_mag[:, 1] - log_mag[:, 0]
    d[:, -1] = log_mag[:, -1] - log_mag[:, -2]
    return d


def _vc_from_freq_derivative(dfreq, config):
    m = np.arange(dfreq.shape[0])
    scale = config.hop * config.fft_size / config.beta
    offs = 2.0 * np.pi * config.hop * m / config.fft_size
    return scale * dfreq + offs[:, None]


def estimate_derivatives_centered(log_mag, config):
    """Centered-difference derivative estimates (needs one look-ahead frame)."""
    log_mag = np.asarray(log_mag, dtype=np.float64)
    if log_mag.shape[0] < 3 or log_mag.shape[1] < 3:
        raise ValueError("need at least 3 bins and 3 frames for centered differences")
    vc = _vc_from_freq_derivative(_freq_derivative(log_mag), config)
    uc = -(config.beta / (config.hop * config.fft_size)) * _time_derivative_centered(log_mag)
    boundary = np.zeros(log_mag.shape, dtype=bool)
    boundary[0, :] = boundary[-1, :] = True
    boundary[:, 0] = boundary[:, -1] = True
    return DerivativeEstimates(vc, uc, CENTERED, boundary)


def estimate_derivatives_causal(log_mag, config):
    """Causal estimates: the frequency-direction derivative uses the second
    order backward time stencil, so no future frame is touched.

    Frame 0 has no history and falls back to zero; frame 1 uses the first
    order backward difference.
    """
    log_mag = np.asarray(log_mag, dtype=np.float64)
    if log_mag.shape[0] < 3 or log_mag.shape[1] < 1:
        raise ValueError("need at least 3 bins and 1 frame")
    vc = _vc_from_freq_derivative(_freq_derivative(log_mag), config)
    dtime = np.zeros_like(log_mag)
    if log_mag.shape[1] >= 2:
        dtime[:, 1] = log_mag[:, 1] - log_mag[:, 0]
    if log_mag.shape[1] >= 3:
        dtime[:, 2:] = 0.5 * (
            3.0 * log_mag[:, 2:] - 4.0 * log_mag[:, 1:-1] + log_mag[:, :-2]
        )
    uc = -(config.beta / (config.hop * config.fft_size)) * dtime
    boundary = np.zeros(log_mag.shape, dtype=bool)
    boundary[0, :] = boundary[-1, :] = True
    boundary[:, : min(2, log_mag.shape[1])] = True
    return DerivativeEstimates(vc, uc, BACKWARD2, boundary)


def average_to_backward_differences(estimates):
    """Trapezoidal averaging of derivative samples into backward differences.

    Returns ``(tpd, fpd)`` with shapes (M, N-1) and (M-1, N).
    """
    vc, uc = estimates.vc, estimates.uc
    tpd = 0.5 * (vc[:, 1:] + vc[:, :-1])
    fpd = 0.5 * (uc[1:, :] + uc[:-1, :])
    return tpd, fpd


@dataclass(frozen=True)
class HeapIntegrationParams:
    """Tolerance and seed for heap integration.

    Bins whose magnitude does not exceed ``relative_tolerance`` times the
    reference maximum receive uniform random phase in ``(-pi, pi]``.
    """

    relative_tolerance: float = 1e-6
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.relative_tolerance < 1.0:
            raise ValueError("relative_tolerance must be in [0, 1)")


def _random_phase(rng, size):
    # pi - U[0, 2pi) lies in (-pi, pi].
    return np.pi - rng.uniform(0.0, 2.0 * np.pi, size)


def pghi_reconstruct(magnitude, tpd, fpd, params=HeapIntegrationParams()):
    """Offline heap integration over the full grid.

    Integration starts at the global magnitude maximum (phase 0) and spreads
    to the four neighbors of the loudest assigned bin, moving along time with
    the TPD and along frequency with the FPD; disconnected significant regions
    are re-seeded at their own maximum.
    """
    magnitude = np.asarray(magnitude, dtype=np.float64)
    if magnitude.size == 0:
        raise ValueError("empty magnitude grid")
    n_bins, n_frames = magnitude.shape
    rng = np.random.default_rng(params.rng_seed)
    phase = _random_phase(rng, magnitude.shape)

    remaining = magnitude > params.relative_tolerance * magnitude.max()
    neg = -magnitude  # heap key
    while remaining.any():
        seed = np.unravel_index(
            np.argmax(np.where(remaining, magnitude, -1.0)), magnitude.shape
        )
        phase[seed] = 0.0
        remaining[seed] = False
        heap = [(neg[seed], seed[0], seed[1])]
        while heap:
            key, m, n = heapq.heappop(heap)
            assert not heap or key <= heap[0][0]
            if n + 1 < n_frames and remaining[m, n + 1]:
                phase[m, n + 1] = phase[m, n] + tpd[m, n]
                remaining[m, n + 1] = False
                heapq.heappush(heap, (neg[m, n + 1], m, n + 1))
            if n > 0 and remaining[m, n - 1]:
                phase[m, n - 1] = phase[m, n] - tpd[m, n - 1]
                remaining[m, n - 1] = False
                heapq.heappush(heap, (neg[m, n - 1], m, n - 1))
            if m + 1 < n_bins and remaining[m + 1, n]:
                phase[m + 1, n] = phase[m, n] + fpd[m, n]
                remaining[m + 1, n] = False
                heapq.heappush(heap, (neg[m + 1, n], m + 1, n))
            if m > 0 and remaining[m - 1, n]:
                phase[m - 1, n] = phase[m, n] - fpd[m - 1, n]
                remaining[m - 1, n] = False
                heapq.heappush(heap, (neg[m - 1, n], m - 1, n))
    return phase


_PREV_FRAME = 0
_CUR_FRAME = 1


class RtpghiIntegrator:
    """Streaming heap integration; one instance per stream.

    Significant bins of the previous frame enter the heap as seeds; popping a
    seed carries its phase forward in time, popping a current-frame bin
    propagates along frequency.  Magnitude priority therefore decides, bin by
    bin, whether the time or the frequency route wins, exactly as in the
    offline integration restricted to the causal paths.  Bins at or below
    tolerance get random phase.
    """

    def __init__(self, params=HeapIntegrationParams()):
        self.params = params
        self._rng = np.random.default_rng(params.rng_seed)
        self._prev_phase = None
        self._prev_magnitude = None
        self._prev_significant = None

    def step(self, magnitude, tpd, fpd):
        """Phase for the current frame.

        ``tpd`` may be None on the first frame (no previous frame exists).
        """
        magnitude = np.asarray(magnitude, dtype=np.float64)
        n_bins = magnitude.size
        significant = magnitude > self.params.relative_tolerance * magnitude.max()
        phase = _random_phase(self._rng, n_bins)
        assigned = np.zeros(n_bins, dtype=bool)
        heap = []

        if self._prev_phase is not None and tpd is not None:
            for m in np.nonzero(self._prev_significant)[0]:
                heapq.heappush(heap, (-self._prev_magnitude[m], _PREV_FRAME, m))

        while True:
            while heap:
                key, frame_tag, m = heapq.heappop(heap)
                assert not heap or key <= heap[0][0]
                if frame_tag == _PREV_FRAME:
                    if significant[m] and not assigned[m]:
                        phase[m] = self._prev_phase[m] + tpd[m]
                        assigned[m] = True
                        heapq.heappush(heap, (-magnitude[m], _CUR_FRAME, m))
                    continue
                if m + 1 < n_bins and significant[m + 1] and not assigned[m + 1]:
                    phase[m + 1] = phase[m] + fpd[m]
                    assigned[m + 1] = True
                    heapq.heappush(heap, (-magnitude[m + 1], _CUR_FRAME, m + 1))
                if m > 0 and significant[m - 1] and not assigned[m - 1]:
                    phase[m - 1] = phase[m] - fpd[m - 1]
                    assigned[m - 1] = True
                    heapq.heappush(heap, (-magnitude[m - 1], _CUR_FRAME, m - 1))
            pending = significant & ~assigned
            if not pending.any():
                break
            m0 = int(np.argmax(np.where(pending, magnitude, -1.0)))
            phase[m0] = 0.0
            assigned[m0] = True
            heapq.heappush(heap, (-magnitude[m0], _CUR_FRAME, m0))

        self._prev_phase = phase
        self._prev_magnitude = magnitude
        self._prev_significant = significant
        return phase


class CausalDerivativeStream:
    """Frame-by-frame analytic difference estimation (causal scheme).

    Log-magnitudes are frozen when a frame arrives, floored against the
    running maximum seen so far.  Emits ``(tpd, fpd)`` per frame, with
    ``tpd`` None on the first frame.
    """

    def __init__(self, config):
        self.config = config
        self._log_history = []  # up to 3 most recent frames
        self._vc_prev = None
        self._running_max = 0.0
        self._index = 0

    def step(self, magnitude):
        magnitude = np.asarray(magnitude, dtype=np.float64)
        self._running_max = max(self._running_max, magnitude.max())
        log_cur = log_magnitude(magnitude, self._running_max)
        self._log_history.append(log_cur)
        if len(self._log_history) > 3:
            self._log_history.pop(0)

        cfg = self.config
        vc = _vc_from_freq_derivative(_freq_derivative(log_cur[:, None]), cfg)[:, 0]

        hist = self._log_history
        if self._index == 0:
            dtime = np.zeros_like(log_cur)
        elif self._index == 1:
            dtime = hist[-1] - hist[-2]
        else:
            dtime = 0.5 * (3.0 * hist[-1] - 4.0 * hist[-2] + hist[-3])
        uc = -(cfg.beta / (cfg.hop * cfg.fft_size)) * dtime

        tpd = None if self._vc_prev is None else 0.5 * (vc + self._vc_prev)
        fpd = 0.5 * (uc[1:] + uc[:-1])
        self._vc_prev = vc
        self._index += 1
        return tpd, fpd


def rtpghi_reconstruct(magnitude, config, params=HeapIntegrationParams()):
    """Causal reconstruction driver: analytic causal estimates feeding the
    streaming integrator.  Accepts a grid or a :class:`FrameStream`."""
    stream = magnitude if isinstance(magnitude, FrameStream) else FrameStream(magnitude)
    estimator = CausalDerivativeStream(config)
    integrator = RtpghiIntegrator(params)
    columns = []
    for _, frame in stream:
        tpd, fpd = estimator.step(frame)
        columns.append(integrator.step(frame, tpd, fpd))
    return np.stack(columns, axis=1)
