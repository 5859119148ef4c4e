"""STFT analysis and least-squares synthesis with symmetric, center-referenced windows.

The transform used throughout this package places the analysis window
symmetrically around sample ``hop * n`` and references the DFT phase to the
window center, so a pure tone at a bin-centered frequency advances its phase
by exactly ``2*pi*k*hop/fft_size`` radians per frame.  The signal is
zero-padded by half a window on both ends so that every frame is defined.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Gaussian-equivalent spread of a Hann window, as a multiple of length**2.
HANN_BETA_FACTOR = 0.25645


class CausalityError(RuntimeError):
    """Raised when a streaming consumer reads past its look-ahead allowance."""


def hann_window(length):
    """Periodic (DFT-even) Hann window with its peak at index ``length // 2``.

    The tap at offset ``l`` from the peak is ``0.5 + 0.5*cos(2*pi*l/length)``;
    for even lengths the single unpaired tap at ``-length//2`` is exactly zero.
    """
    if length < 1:
        raise ValueError("window length must be positive")
    offsets = np.arange(length) - length // 2
    return 0.5 + 0.5 * np.cos(2.0 * np.pi * offsets / length)


def gaussian_window(length, sigma):
    """Gaussian window ``(2/sigma^2)^(1/4) * exp(-pi*t^2/sigma^2)`` sampled at
    integer offsets ``t`` from the center index ``length // 2``.

    Parameters
    ----------
    length : int
        Number of taps.
    sigma : float
        Width parameter in samples; must be positive.
    """
    if length < 1:
        raise ValueError("window length must be positive")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    offsets = np.arange(length) - length // 2
    return (2.0 / sigma**2) ** 0.25 * np.exp(-np.pi * offsets**2 / sigma**2)


def _check_symmetric(taps):
    center = len(taps) // 2
    k = min(center, len(taps) - 1 - center)
    left = taps[center - k : center][::-1]
    right = taps[center + 1 : center + 1 + k]
    if not np.allclose(left, right, rtol=0, atol=1e-12 * max(1.0, np.abs(taps).max())):
        raise ValueError("window taps must be symmetric about their center")


@dataclass(frozen=True, eq=False)
class StftConfig:
    """Analysis parameters: window taps, hop, FFT size, and the window constant beta.

    ``beta`` (samples**2) is the Gaussian-equivalent spread used by the
    analytic phase-derivative estimators: ``sigma**2`` for Gaussian windows and
    ``0.25645 * length**2`` for Hann.
    """

    kind: str
    taps: np.ndarray
    hop: int
    fft_size: int
    beta: float
    one_sided: bool = True

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=np.float64)
        if taps.ndim != 1 or taps.size == 0:
            raise ValueError("window taps must be a non-empty 1-D vector")
        if not np.all(np.isfinite(taps)):
            raise ValueError("window taps must be finite")
        if not (0 < self.hop <= taps.size <= self.fft_size):
            raise ValueError(
                "require 0 < hop <= window length <= fft size, got "
                f"hop={self.hop}, length={taps.size}, fft_size={self.fft_size}"
            )
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        _check_symmetric(taps)
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)

    @classmethod
    def hann(cls, length, hop, fft_size, beta=None, one_sided=True):
        if beta is None:
            beta = HANN_BETA_FACTOR * length**2
        return cls("hann", hann_window(length), hop, fft_size, beta, one_sided)

    @classmethod
    def gaussian(cls, length, hop, fft_size, sigma, beta=None, one_sided=True):
        if beta is None:
            beta = float(sigma) ** 2
        return cls("gaussian", gaussian_window(length, sigma), hop, fft_size, beta, one_sided)

    @classmethod
    def custom(cls, taps, hop, fft_size, beta, one_sided=True):
        return cls("custom", np.array(taps, dtype=np.float64), hop, fft_size, beta, one_sided)

    @property
    def length(self):
        return self.taps.size

    @property
    def n_bins(self):
        return self.fft_size // 2 + 1 if self.one_sided else self.fft_size


@dataclass(frozen=True, eq=False)
class Spectrogram:
    """Complex STFT coefficients on an (n_bins, n_frames) grid.

    ``signal_length`` records the analyzed signal's sample count so that
    synthesis can trim its output exactly; it is None for grids loaded from
    magnitude-only files, in which case ``hop * (n_frames - 1)`` is assumed.
    """

    coefficients: np.ndarray
    config: StftConfig
    sample_rate: int
    signal_length: int | None = None

    def __post_init__(self):
        coeffs = np.asarray(self.coefficients)
        if coeffs.ndim != 2:
            raise ValueError("coefficients must be a 2-D (bins, frames) array")
        if coeffs.shape[0] != self.config.n_bins:
            raise ValueError(
                f"coefficient grid has {coeffs.shape[0]} bins, "
                f"config expects {self.config.n_bins}"
            )
        coeffs = coeffs.astype(np.complex128, copy=not np.iscomplexobj(coeffs))
        coeffs.setflags(write=False)
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def n_bins(self):
        return self.coefficients.shape[0]

    @property
    def n_frames(self):
        return self.coefficients.shape[1]

    @property
    def magnitude(self):
        return np.abs(self.coefficients)

    @property
    def phase(self):
        return np.angle(self.coefficients)

    def with_phase(self, phase):
        """New spectrogram with this grid's magnitude and the given phase."""
        phase = np.asarray(phase, dtype=np.float64)
        if phase.shape != self.coefficients.shape:
            raise ValueError("phase grid shape must match the coefficient grid")
        return Spectrogram(
            self.magnitude * np.exp(1j * phase),
            self.config,
            self.sample_rate,
            self.signal_length,
        )

    @classmethod
    def from_magnitude(cls, magnitude, config, sample_rate, phase=None, signal_length=None):
        magnitude = np.asarray(magnitude, dtype=np.float64)
        if phase is None:
            coeffs = magnitude.astype(np.complex128)
        else:
            coeffs = magnitude * np.exp(1j * np.asarray(phase))
        return cls(coeffs, config, sample_rate, signal_length)


class FrameStream:
    """Frame-by-frame delivery of per-frame vectors with a causality guard.

    Consumers may read frame ``i`` only when ``i <= cursor + look_ahead``;
    anything later raises :class:`CausalityError`.  Iteration yields
    ``(index, frame)`` pairs and advances the cursor.
    """

    def __init__(self, frames, look_ahead=0):
        frames = np.asarray(frames)
        if frames.ndim != 2:
            raise ValueError("frames must be a 2-D (bins, frames) array")
        if look_ahead < 0:
            raise ValueError("look_ahead must be >= 0")
        self._frames = frames
        self.look_ahead = look_ahead
        self._cursor = 0

    def __len__(self):
        return self._frames.shape[1]

    @property
    def cursor(self):
        return self._cursor

    def frame(self, index):
        if index > self._cursor + self.look_ahead:
            raise CausalityError(
                f"frame {index} requested at cursor {self._cursor} "
                f"with look-ahead {self.look_ahead}"
            )
        if index < 0 or index >= len(self):
            raise IndexError(f"frame index {index} out of range")
        return self._frames[:, index]

    def __iter__(self):
        while self._cursor < len(self):
            index = self._cursor
            yield index, self._frames[:, index]
            self._cursor += 1


def _frame_index_map(config):
    # Window tap i sits at offset i - length//2 from the frame center; map the
    # offsets into the FFT buffer modulo fft_size so the DFT phase reference
    # stays at the window center.
    half = config.length // 2
    return (np.arange(config.length) - half) % config.fft_size


def n_frames_for(signal_length, hop):
    """Frame count used by :func:`stft`: one frame per hop plus the final partial."""
    if signal_length < 1:
        raise ValueError("signal must be non-empty")
    return 1 + signal_length // hop


def stft(signal, config, sample_rate):
    """Analyze a real signal into a :class:`Spectrogram`.

    Frames are centered at ``hop * n`` for ``n = 0 .. len(signal)//hop``; the
    signal is zero-padded so the first and last frames are fully defined.
    """
    signal = np.asarray(signal, dtype=np.float64)
    if signal.ndim != 1 or signal.size == 0:
        raise ValueError("signal must be a non-empty 1-D vector")
    L = config.length
    half = L // 2
    hop = config.hop
    n = n_frames_for(signal.size, hop)

    pad_left = half
    pad_right = half + hop  # last center can be up to hop-1 past the final sample
    padded = np.concatenate([np.zeros(pad_left), signal, np.zeros(pad_right)])

    starts = hop * np.arange(n)[:, None] + np.arange(L)[None, :]
    windowed = padded[starts] * config.taps

    buffers = np.zeros((n, config.fft_size))
    buffers[:, _frame_index_map(config)] = windowed
    if config.one_sided:
        coeffs = np.fft.rfft(buffers, axis=1)
    else:
        coeffs = np.fft.fft(buffers, axis=1)
    return Spectrogram(coeffs.T, config, sample_rate, signal_length=signal.size)


def istft(spec):
    """Least-squares synthesis using the canonical dual window.

    For a spectrogram produced by :func:`stft` this inverts it exactly (up to
    rounding).  For an inconsistent grid it returns the real signal whose
    analysis is closest in the Frobenius norm.
    """
    config = spec.config
    L = config.length
    half = L // 2
    hop = config.hop
    n = spec.n_frames
    length = spec.signal_length
    if length is None:
        length = max(1, hop * (n - 1))

    if config.one_sided:
        frames_time = np.fft.irfft(spec.coefficients.T, n=config.fft_size, axis=1)
    else:
        frames_time = np.fft.ifft(spec.coefficients.T, axis=1).real
    ordered = frames_time[:, _frame_index_map(config)]

    span = hop * (n - 1) + L
    numer = np.zeros(span)
    denom = np.zeros(span)
    taps = config.taps
    taps_sq = taps * taps
    for i in range(n):
        start = hop * i
        numer[start : start + L] += ordered[i] * taps
        denom[start : start + L] += taps_sq

    # Sample j of the signal lives at padded position j + half.
    numer = numer[half : half + length]
    denom = denom[half : half + length]
    if denom.size < length:  # spectrogram too short for the declared length
        raise ValueError("spectrogram has too few frames for its signal length")
    if denom.min() <= 1e-12 * denom.max():
        raise ValueError("window/hop combination leaves uncovered samples (no COLA)")
    return numer / denom
