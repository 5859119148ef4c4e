"""Dataset preparation: segment WAVs and extract targets via the phaseline CLI.

Each input file is cut into fixed 24064-sample segments (the trailing
remainder is dropped); for every segment the phaseline ``oracle`` command
dumps the magnitude grid (PSPC) and the true wrapped phase differences
(PPDF).  Those files are the on-disk dataset; features are derived from the
magnitudes at load time.
"""

from __future__ import annotations

import subprocess
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .features import causal_log_magnitude, feature_blocks
from .formats import read_ppdf, read_pspc, read_wav, write_wav

SEGMENT_SAMPLES = 24064

_PHASELINE = [sys.executable, "-m", "phaseline.cli"]


def _run_phaseline(args):
    result = subprocess.run(
        _PHASELINE + args, capture_output=True, text=True, check=False
    )
    if result.returncode != 0:
        raise RuntimeError(
            f"phaseline {' '.join(args)} failed ({result.returncode}): {result.stderr.strip()}"
        )


@dataclass(frozen=True)
class Segment:
    """One training item: magnitude grid plus wrapped difference targets."""

    magnitude: np.ndarray  # (bins, frames)
    bpd: np.ndarray        # (bins, frames); column 0 is a zeroed placeholder
    fpd: np.ndarray        # (bins-1, frames)

    def features(self, look_back=3):
        return feature_blocks(causal_log_magnitude(self.magnitude), look_back)


def prepare_dataset(wav_dir, out_dir, sample_rate=22050, segment_samples=SEGMENT_SAMPLES):
    """Cut WAVs into segments and dump (PSPC, PPDF) pairs through the CLI.

    Returns the list of (pspc_path, ppdf_path) pairs written.
    """
    wav_dir = Path(wav_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    pairs = []
    for wav_path in sorted(wav_dir.glob("*.wav")):
        rate, samples = read_wav(wav_path, expected_rate=sample_rate)
        n_segments = samples.size // segment_samples
        for k in range(n_segments):
            chunk = samples[k * segment_samples : (k + 1) * segment_samples]
            stem = f"{wav_path.stem}_{k:04d}"
            seg_wav = out_dir / f"{stem}.wav"
            pspc = out_dir / f"{stem}.pspc"
            ppdf = out_dir / f"{stem}.ppdf"
            write_wav(seg_wav, rate, chunk)
            _run_phaseline(
                ["oracle", str(seg_wav), "--out-spec", str(pspc), "--out-diffs", str(ppdf)]
            )
            pairs.append((pspc, ppdf))
    return pairs


def load_segment(pspc_path, ppdf_path):
    spec = read_pspc(pspc_path)
    diffs = read_ppdf(ppdf_path)
    magnitude = np.abs(spec.data)
    if diffs.bpd.shape != magnitude.shape:
        raise ValueError(
            f"{ppdf_path}: target grid {diffs.bpd.shape} does not match "
            f"magnitude grid {magnitude.shape}"
        )
    return Segment(magnitude, diffs.bpd, diffs.fpd)


def load_dataset(pairs):
    return [load_segment(pspc, ppdf) for pspc, ppdf in pairs]
