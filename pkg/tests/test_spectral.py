import numpy as np
import pytest

from phaseline import (
    CausalityError,
    FrameStream,
    Spectrogram,
    StftConfig,
    gaussian_window,
    hann_window,
    istft,
    stft,
)
from phaseline.spectral import HANN_BETA_FACTOR

from conftest import SR


class TestWindows:
    def test_hann_peak_and_symmetry(self):
        w = hann_window(1024)
        assert w[512] == 1.0
        assert np.allclose(w[512 + np.arange(1, 512)], w[512 - np.arange(1, 512)])
        assert w[0] == pytest.approx(0.0, abs=1e-15)

    def test_gaussian_center_tap(self):
        sigma = 77.0
        w = gaussian_window(257, sigma)
        assert w[128] == pytest.approx((2.0 / sigma**2) ** 0.25)

    @pytest.mark.parametrize("length", [255, 256])
    def test_gaussian_symmetry(self, length):
        w = gaussian_window(length, 31.0)
        c = length // 2
        k = np.arange(1, min(c, length - 1 - c) + 1)
        assert np.array_equal(w[c + k], w[c - k])

    def test_gaussian_edge_decay(self):
        # h(L/2)/h(0) for sigma = L/8 evaluates to exp(-16*pi), far below 1e-10
        w = gaussian_window(1024, 1024 / 8)
        assert w[0] / w[512] < 1e-10

    def test_gaussian_rejects_bad_sigma(self):
        with pytest.raises(ValueError):
            gaussian_window(64, 0.0)
        with pytest.raises(ValueError):
            gaussian_window(64, -1.0)


class TestConfig:
    def test_default_betas(self):
        cfg = StftConfig.hann(1024, 256, 1024)
        assert cfg.beta == pytest.approx(HANN_BETA_FACTOR * 1024**2)
        gcfg = StftConfig.gaussian(1024, 256, 1024, sigma=100.0)
        assert gcfg.beta == pytest.approx(100.0**2)

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(length=1024, hop=2048, fft_size=2048),  # hop > length
            dict(length=1024, hop=0, fft_size=1024),
            dict(length=2048, hop=256, fft_size=1024),  # length > fft
        ],
    )
    def test_rejects_bad_geometry(self, kwargs):
        with pytest.raises(ValueError):
            StftConfig.hann(kwargs["length"], kwargs["hop"], kwargs["fft_size"])

    def test_rejects_bad_beta(self):
        with pytest.raises(ValueError):
            StftConfig.hann(1024, 256, 1024, beta=0.0)

    def test_rejects_asymmetric_custom_taps(self):
        taps = np.arange(16, dtype=float)
        with pytest.raises(ValueError):
            StftConfig.custom(taps, 4, 16, beta=1.0)

    def test_rejects_empty_window(self):
        with pytest.raises(ValueError):
            StftConfig.custom(np.array([]), 1, 16, beta=1.0)


class TestStft:
    def test_impulse_frame0_flat(self, hann_config):
        x = np.zeros(2048)
        x[0] = 1.0
        spec = stft(x, hann_config, SR)
        center_tap = hann_config.taps[512]
        assert np.allclose(np.abs(spec.coefficients[:, 0]), center_tap)

    def test_bin_centered_cosine_peaks(self, hann_config):
        k = 40
        t = np.arange(SR)
        x = np.cos(2 * np.pi * k / 1024 * t)
        spec = stft(x, hann_config, SR)
        mags = spec.magnitude
        interior = mags[:, 3:-3]
        assert np.all(np.argmax(interior, axis=0) == k)

    def test_frame_count_convention(self, hann_config):
        spec = stft(np.ones(24064), hann_config, SR)
        assert spec.n_frames == 95
        assert spec.n_bins == 513

    def test_rejects_empty_signal(self, hann_config):
        with pytest.raises(ValueError):
            stft(np.array([]), hann_config, SR)

    def test_linearity(self, hann_config):
        rng = np.random.default_rng(0)
        x = rng.standard_normal(5000)
        y = rng.standard_normal(5000)
        a, b = 1.7, -0.3
        combined = stft(a * x + b * y, hann_config, SR).coefficients
        separate = a * stft(x, hann_config, SR).coefficients + b * stft(
            y, hann_config, SR
        ).coefficients
        assert np.linalg.norm(combined - separate) <= 1e-9 * np.linalg.norm(separate)

    def test_shift_covariance_by_one_hop(self, hann_config):
        rng = np.random.default_rng(1)
        x = rng.standard_normal(SR)
        shifted = np.concatenate([np.zeros(256), x])
        a = stft(x, hann_config, SR).coefficients
        b = stft(shifted, hann_config, SR).coefficients
        # interior frames of the shifted signal are the original, one index later
        interior = slice(3, a.shape[1] - 3)
        ref = a[:, interior]
        assert np.linalg.norm(b[:, 4 : a.shape[1] - 2] - ref) <= 1e-9 * np.linalg.norm(ref)

    def test_parseval_frame_bounds_on_white_noise(self, hann_config):
        rng = np.random.default_rng(2)
        x = rng.standard_normal(4 * SR)
        spec = stft(x, hann_config, SR)
        coeffs = spec.coefficients
        # fold the one-sided grid back to full-spectrum energy
        energy = np.sum(np.abs(coeffs) ** 2) + np.sum(np.abs(coeffs[1:-1]) ** 2)
        # interior overlap of the squared periodic Hann at hop L/4 is exactly 1.5
        expected = hann_config.fft_size * 1.5 * np.sum(x**2)
        assert energy == pytest.approx(expected, rel=0.01)


class TestIstft:
    @pytest.mark.parametrize("length", [1024, 5000, 24064, 24001])
    def test_round_trip(self, hann_config, length):
        rng = np.random.default_rng(length)
        x = rng.standard_normal(length)
        y = istft(stft(x, hann_config, SR))
        assert y.size == x.size
        assert np.linalg.norm(y - x) <= 1e-6 * np.linalg.norm(x)

    @pytest.mark.parametrize("hop", [128, 256])
    def test_hann_cola_round_trip(self, hop):
        cfg = StftConfig.hann(1024, hop, 1024)
        rng = np.random.default_rng(hop)
        x = rng.standard_normal(10240)
        y = istft(stft(x, cfg, SR))
        assert np.linalg.norm(y - x) <= 1e-10 * np.linalg.norm(x)

    def test_two_sided_round_trip(self):
        cfg = StftConfig.hann(1024, 256, 1024, one_sided=False)
        rng = np.random.default_rng(9)
        x = rng.standard_normal(8000)
        spec = stft(x, cfg, SR)
        assert spec.n_bins == 1024
        y = istft(spec)
        assert np.linalg.norm(y - x) <= 1e-10 * np.linalg.norm(x)

    def test_zero_spectrogram_gives_zero_signal(self, hann_config):
        spec = Spectrogram(np.zeros((513, 20), dtype=complex), hann_config, SR)
        assert np.all(istft(spec) == 0.0)

    def test_random_phase_is_inconsistent(self, hann_config):
        rng = np.random.default_rng(3)
        x = rng.standard_normal(SR)
        spec = stft(x, hann_config, SR)
        scrambled = spec.with_phase(rng.uniform(-np.pi, np.pi, spec.coefficients.shape))
        reanalyzed = stft(istft(scrambled), hann_config, SR)
        diff = np.linalg.norm(reanalyzed.magnitude - spec.magnitude)
        assert diff > 1e-3 * np.linalg.norm(spec.magnitude)

    def test_non_cola_configuration_raises(self):
        # Hann at hop == length leaves gaps at the window zeros
        cfg = StftConfig.hann(64, 64, 64)
        x = np.random.default_rng(4).standard_normal(1024)
        spec = stft(x, cfg, SR)
        with pytest.raises(ValueError, match="COLA"):
            istft(spec)


class TestSpectrogram:
    def test_phase_in_principal_range(self, hann_config):
        rng = np.random.default_rng(5)
        spec = stft(rng.standard_normal(5000), hann_config, SR)
        phase = spec.phase
        assert np.all(phase > -np.pi - 1e-15) and np.all(phase <= np.pi + 1e-15)

    def test_shape_validation(self, hann_config):
        with pytest.raises(ValueError):
            Spectrogram(np.zeros((10, 4), dtype=complex), hann_config, SR)


class TestFrameStream:
    def test_iteration_and_causality(self):
        frames = np.arange(12, dtype=float).reshape(3, 4)
        stream = FrameStream(frames)
        seen = []
        for index, frame in stream:
            seen.append(index)
            with pytest.raises(CausalityError):
                stream.frame(index + 1)
        assert seen == [0, 1, 2, 3]

    def test_look_ahead_allows_peek(self):
        frames = np.arange(12, dtype=float).reshape(3, 4)
        stream = FrameStream(frames, look_ahead=1)
        assert np.array_equal(stream.frame(1), frames[:, 1])
        with pytest.raises(CausalityError):
            stream.frame(2)
