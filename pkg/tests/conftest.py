import numpy as np
import pytest
from scipy.signal import butter, chirp, sosfilt

from phaseline import StftConfig

SR = 22050
DUR_SAMPLES = SR  # one second


def fade(x, ms=50, sr=SR):
    """Raised-cosine fade-in/out to keep fixture energy off the band edges."""
    n = int(sr * ms / 1000)
    env = np.ones_like(x)
    ramp = 0.5 - 0.5 * np.cos(np.pi * np.arange(n) / n)
    env[:n] = ramp
    env[-n:] = ramp[::-1]
    return x * env


def sinusoid_signal():
    t = np.arange(DUR_SAMPLES) / SR
    return fade(0.5 * np.sin(2 * np.pi * 697.0 * t))


def chirp_signal():
    t = np.arange(DUR_SAMPLES) / SR
    return fade(0.5 * chirp(t, 500.0, 1.0, 3500.0))


def bandpass_noise_signal(seed=42):
    rng = np.random.default_rng(seed)
    sos = butter(4, [800.0, 3000.0], btype="bandpass", fs=SR, output="sos")
    return fade(0.3 * sosfilt(sos, rng.standard_normal(DUR_SAMPLES)))


def harmonic_signal(seed=11, partials=16, dur_samples=DUR_SAMPLES):
    """Gliding harmonic stack with gentle vibrato; fills a broad band with
    slowly-moving ridges, the workhorse for estimator and ordering tests."""
    rng = np.random.default_rng(seed)
    t = np.arange(dur_samples) / SR
    f0 = 440.0 + 30.0 * t + 6.0 * np.sin(2 * np.pi * 5.0 * t)
    base_phase = 2 * np.pi * np.cumsum(f0) / SR
    x = np.zeros(dur_samples)
    for k in range(1, partials + 1):
        x += k**-0.5 * np.cos(k * base_phase + rng.uniform(0, 2 * np.pi))
    return fade(x / np.abs(x).max())


@pytest.fixture(scope="session")
def hann_config():
    return StftConfig.hann(1024, 256, 1024)


@pytest.fixture(scope="session")
def gaussian_config():
    sigma = np.sqrt(256 * 1024 / (2 * np.pi))
    return StftConfig.gaussian(1024, 256, 1024, sigma=sigma)
