"""Acceptance suite: one test per release criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
report lines.
"""

import time

import numpy as np
import pytest

import phaseline as pl
from phaseline import formats
from phaseline.cli import main
from phaseline.metrics import lsc, magnitude_quantile_mask, awe_summary

from conftest import (
    SR,
    bandpass_noise_signal,
    chirp_signal,
    harmonic_signal,
    sinusoid_signal,
)


def _report(name):
    print(f"ACCEPTANCE PASS: {name}")


def _recon_error(spec, phase):
    hop = spec.config.hop
    fft = spec.config.fft_size
    est_bpd, est_fpd = pl.recompute_differences_from_phase(phase, hop, fft)
    ref_bpd, ref_fpd = pl.recompute_differences_from_phase(spec.phase, hop, fft)
    return max(np.max(pl.awe(ref_bpd, est_bpd)), np.max(pl.awe(ref_fpd, est_fpd)))


def test_oracle_exactness(hann_config):
    """Oracle differences reconstruct each fixture to LSC <= -40 dB and
    recomputed-difference error <= 1e-6 via all three second stages."""
    started = time.perf_counter()
    fixtures = {
        "sinusoid": sinusoid_signal(),
        "chirp": chirp_signal(),
        "noise": bandpass_noise_signal(),
    }
    for name, signal in fixtures.items():
        spec = pl.stft(signal, hann_config, SR)
        mags = spec.magnitude
        assert mags.min() > 0.0, f"{name}: zero-magnitude bin breaks the oracle check"
        tpd, fpd = pl.oracle_differences(spec)

        phase_wls = pl.reconstruct_wls(mags, tpd, fpd)
        assert lsc(spec.with_phase(phase_wls), mags) <= -40.0, name
        assert _recon_error(spec, phase_wls) <= 1e-6, name

        phase_ti = pl.reconstruct_time_integration(mags, tpd, fpd)
        assert lsc(spec.with_phase(phase_ti), mags) <= -40.0, name
        assert _recon_error(spec, phase_ti) <= 1e-6, name

        phase_heap = pl.pghi_reconstruct(mags, tpd, fpd, pl.HeapIntegrationParams(0.0, 7))
        assert lsc(spec.with_phase(phase_heap), mags) <= -40.0, name
        assert _recon_error(spec, phase_heap) <= 1e-6, name

    elapsed = time.perf_counter() - started
    assert elapsed < 5.0, f"oracle exactness took {elapsed:.2f}s"
    _report(f"oracle exactness (3 fixtures x 3 stages, {elapsed:.2f}s)")


def test_gamma0_reduction():
    """With the frequency weight disabled, the closed-form solve equals plain
    time integration on random sequences."""
    started = time.perf_counter()
    rng = np.random.default_rng(99)
    m = 513
    for _ in range(10):
        n_frames = 8
        mags = rng.uniform(0.02, 1.0, (m, n_frames))
        tpd = rng.uniform(-8.0, 8.0, (m, n_frames - 1))
        fpd = rng.uniform(-8.0, 8.0, (m - 1, n_frames))
        phase_wls = pl.reconstruct_wls(mags, tpd, fpd, gamma0=0.0)
        phase_ti = pl.reconstruct_time_integration(mags, tpd, fpd)
        assert np.max(pl.awe(phase_wls, phase_ti)) <= 1e-9
    elapsed = time.perf_counter() - started
    assert elapsed < 1.0, f"gamma0 reduction took {elapsed:.2f}s"
    _report(f"gamma0=0 reduction (10 sequences, {elapsed:.2f}s)")


def test_tridiagonal_solver_oracle():
    """1000 random Hermitian positive-definite systems against a dense solve,
    plus the hand-expanded two-bin assembly."""
    rng = np.random.default_rng(7)
    sizes = [2, 3, 16, 513]
    for i in range(1000):
        m = sizes[i % len(sizes)]
        upper = rng.standard_normal(m - 1) + 1j * rng.standard_normal(m - 1)
        diag = np.zeros(m)
        diag[:-1] += np.abs(upper)
        diag[1:] += np.abs(upper)
        diag += rng.uniform(0.1, 1.0, m)
        rhs = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        system = pl.TridiagonalHermitianSystem(diag, upper, rhs)
        x = pl.solve_tridiagonal(system)
        dense = np.diag(diag.astype(complex)) + np.diag(upper, 1) + np.diag(np.conj(upper), -1)
        x_ref = np.linalg.solve(dense, rhs)
        assert np.linalg.norm(x - x_ref) <= 1e-10 * np.linalg.norm(x_ref)

    from phaseline.phasediff import ComplexRatioFrame
    from phaseline.wls import WlsWeights

    weights = WlsWeights(np.array([1.0, 1.0]), np.array([1.0]), 1.0, 1.0)
    ratios = ComplexRatioFrame(np.ones(2, complex), np.array([1j]))
    system = pl.assemble_system(ratios, weights, np.ones(2, complex))
    assert np.allclose(system.diag, [2.0, 2.0])
    assert np.allclose(system.upper, [1j])
    _report("tridiagonal solver vs dense oracle (1000 systems, M in {2,3,16,513})")


def test_optimality_certificate(hann_config):
    """The closed-form solution satisfies the normal equations at every frame
    of a 100-frame run and beats random perturbations of itself."""
    t = np.arange(99 * 256) / SR  # exactly 100 frames
    from scipy.signal import chirp as _chirp

    signal = 0.5 * _chirp(t, 400.0, t[-1], 3000.0)
    spec = pl.stft(signal, hann_config, SR)
    mags = spec.magnitude
    tpd, fpd = pl.oracle_differences(spec)
    assert mags.shape[1] == 100

    rng = np.random.default_rng(17)
    state = pl.initialize_first_frame(mags[:, 0], fpd[:, 0])
    sampled = {1, 33, 66, 99}
    for n in range(1, 100):
        mag_prev = np.abs(state.coefficients)
        mag_cur = mags[:, n]
        floor_ref = max(state.floor_reference, mag_cur.max())
        ratios = pl.to_complex_ratios(mag_prev, mag_cur, tpd[:, n - 1], fpd[:, n],
                                      floor_reference=floor_ref)
        weights = pl.build_weights(mag_prev, mag_cur, floor_reference=floor_ref)
        system = pl.assemble_system(ratios, weights, state.coefficients)
        x = pl.solve_tridiagonal(system)

        dense = (np.diag(system.diag.astype(complex))
                 + np.diag(system.upper, 1) + np.diag(np.conj(system.upper), -1))
        residual = np.linalg.norm(dense @ x - system.rhs)
        assert residual <= 1e-10 * np.linalg.norm(system.rhs), f"frame {n}"

        if n in sampled:
            base = pl.wls_objective(x, ratios, weights, state.coefficients)
            scale = np.abs(x).mean()
            for _ in range(1000):
                delta = 1e-4 * scale * (
                    rng.standard_normal(x.size) + 1j * rng.standard_normal(x.size)
                )
                perturbed = pl.wls_objective(x + delta, ratios, weights, state.coefficients)
                assert perturbed >= base

        phase, state = pl.reconstruct_frame(state, mag_cur, tpd[:, n - 1], fpd[:, n])
    _report("optimality certificate (100 frames, 4x1000 perturbations)")


def test_stft_round_trip(hann_config):
    """Analysis/synthesis round trip within 1e-6 over 100 random signals."""
    rng = np.random.default_rng(555)
    for _ in range(100):
        length = int(rng.integers(1500, 30000))
        x = rng.standard_normal(length)
        y = pl.istft(pl.stft(x, hann_config, SR))
        assert np.linalg.norm(y - x) <= 1e-6 * np.linalg.norm(x)
    _report("stft round trip (100 random signals)")


def test_analytic_estimator_sanity(gaussian_config):
    """With a Gaussian window and its exact beta, the centered scheme tracks
    the oracle differences on strong bins; the causal frequency-difference
    scheme is strictly worse."""
    spec = pl.stft(harmonic_signal(), gaussian_config, SR)
    mags = spec.magnitude
    tpd_o, fpd_o = pl.oracle_differences(spec)
    logm = pl.log_magnitude(mags)
    mask = magnitude_quantile_mask(mags, 0.8)

    centered = pl.estimate_derivatives_centered(logm, gaussian_config)
    tpd_c, fpd_c = pl.average_to_backward_differences(centered)
    causal = pl.estimate_derivatives_causal(logm, gaussian_config)
    _, fpd_b = pl.average_to_backward_differences(causal)

    tpd_median = awe_summary(tpd_o, tpd_c, mask[:, 1:]).median
    fpd_median = awe_summary(fpd_o, fpd_c, mask[1:, :]).median
    causal_median = awe_summary(fpd_o, fpd_b, mask[1:, :]).median
    assert tpd_median < 0.1, tpd_median
    assert fpd_median < 0.1, fpd_median
    assert causal_median > fpd_median
    _report(
        "analytic estimator sanity "
        f"(tpd={tpd_median:.4f}, fpd={fpd_median:.4f}, causal fpd={causal_median:.4f})"
    )


def test_rtpghi_beats_random_phase(hann_config):
    """Causal analytic reconstruction clears uniform random phase by >=10 dB."""
    spec = pl.stft(chirp_signal(), hann_config, SR)
    mags = spec.magnitude
    phase_rt = pl.rtpghi_reconstruct(mags, hann_config, pl.HeapIntegrationParams(1e-6, 3))
    lsc_rt = lsc(spec.with_phase(phase_rt), mags)
    rng = np.random.default_rng(3)
    lsc_rand = lsc(spec.with_phase(np.pi - rng.uniform(0, 2 * np.pi, mags.shape)), mags)
    assert lsc_rt <= lsc_rand - 10.0
    _report(f"rtpghi beats random phase ({lsc_rt:.1f} dB vs {lsc_rand:.1f} dB)")


def test_cli_determinism(tmp_path):
    """A fixed seed makes CLI reconstruction bit-identical across runs."""
    wav = tmp_path / "in.wav"
    formats.write_wav(wav, SR, chirp_signal())
    outputs = []
    for tag in ("a", "b"):
        out = tmp_path / f"{tag}.wav"
        diffs = tmp_path / f"{tag}.ppdf"
        code = main(
            ["reconstruct", str(wav), str(out), "--method", "rtpghi", "--seed", "7",
             "--emit-diffs", str(diffs)]
        )
        assert code == 0
        outputs.append((out.read_bytes(), diffs.read_bytes()))
    assert outputs[0] == outputs[1]
    _report("cli determinism (bit-identical with fixed seed)")


def test_format_round_trips(tmp_path):
    """PSPC, PPDF, and PDNW survive save/load bit-identically; corruption and
    truncation are rejected."""
    rng = np.random.default_rng(31)

    pspc = tmp_path / "grid.pspc"
    grid = (rng.standard_normal((65, 9)) + 1j * rng.standard_normal((65, 9)))
    formats.write_pspc(pspc, grid, SR, 256, 1024)
    blob = pspc.read_bytes()
    loaded = formats.read_pspc(pspc)
    formats.write_pspc(pspc, loaded.data, loaded.sample_rate, loaded.hop, loaded.window_length)
    assert pspc.read_bytes() == blob
    pspc.write_bytes(blob[:-3])
    with pytest.raises(formats.TruncatedFileError):
        formats.read_pspc(pspc)

    ppdf = tmp_path / "diffs.ppdf"
    bpd = rng.uniform(-np.pi, np.pi, (65, 9)).astype(np.float32).astype(np.float64)
    fpd = rng.uniform(-np.pi, np.pi, (64, 9)).astype(np.float32).astype(np.float64)
    formats.write_ppdf(ppdf, bpd, fpd)
    blob = ppdf.read_bytes()
    loaded = formats.read_ppdf(ppdf)
    formats.write_ppdf(ppdf, loaded.bpd, loaded.fpd)
    assert ppdf.read_bytes() == blob
    ppdf.write_bytes(blob[:-3])
    with pytest.raises(formats.TruncatedFileError):
        formats.read_ppdf(ppdf)

    model = pl.build_model("bpd", channels=8, gated_layers=2, gated_kernel=3,
                           rng=np.random.default_rng(5))
    blob = pl.save_model(model)
    assert pl.save_model(pl.load_model(blob)) == blob
    corrupted = bytearray(blob)
    corrupted[len(corrupted) // 2] ^= 0x1
    with pytest.raises(formats.ChecksumError):
        pl.load_model(bytes(corrupted))
    with pytest.raises((formats.TruncatedFileError, formats.ChecksumError)):
        pl.load_model(blob[:30])
    _report("format round trips (PSPC, PPDF, PDNW)")
