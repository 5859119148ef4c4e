import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from phaseline_training import formats, prepare_dataset

SR = 22050
SEGMENT = 24064


def vibrato_harmonic(n_samples=SEGMENT, seed=23, vibrato_hz=5.5, vibrato_depth=12.0):
    """Dense gliding harmonic stack with AM; the overfit training fixture."""
    rng = np.random.default_rng(seed)
    t = np.arange(n_samples) / SR
    f0 = 225.0 + vibrato_depth * np.sin(2 * np.pi * vibrato_hz * t)
    base = 2 * np.pi * np.cumsum(f0) / SR
    am = 1.0 + 0.3 * np.sin(2 * np.pi * 3.1 * t + 0.7)
    x = np.zeros(n_samples)
    for k in range(1, 43):
        x += k**-0.4 * np.cos(k * base + rng.uniform(0, 2 * np.pi))
    x = am * x / np.abs(x).max()
    fade = int(0.03 * SR)
    ramp = 0.5 - 0.5 * np.cos(np.pi * np.arange(fade) / fade)
    x[:fade] *= ramp
    x[-fade:] *= ramp[::-1]
    return x


def run_phaseline(*args):
    """Invoke the inference CLI; returns (exit code, stdout, stderr)."""
    result = subprocess.run(
        [sys.executable, "-m", "phaseline.cli", *map(str, args)],
        capture_output=True,
        text=True,
        check=False,
    )
    return result.returncode, result.stdout, result.stderr


@pytest.fixture(scope="session")
def fixture_wav(tmp_path_factory):
    path = tmp_path_factory.mktemp("audio") / "fixture.wav"
    formats.write_wav(path, SR, vibrato_harmonic())
    return path


@pytest.fixture(scope="session")
def prepared_pair(fixture_wav, tmp_path_factory):
    """One (PSPC, PPDF) pair extracted through the inference CLI."""
    wav_dir = tmp_path_factory.mktemp("wavs")
    shutil.copy(fixture_wav, wav_dir / "fixture.wav")
    out_dir = tmp_path_factory.mktemp("dataset")
    pairs = prepare_dataset(wav_dir, out_dir)
    assert len(pairs) == 1
    return pairs[0]
