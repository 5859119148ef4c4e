"""Parity fixtures: the exact forward outputs the inference side must match.

Given trained models and a fixture WAV, this module reproduces the streaming
feature pipeline, runs the torch forward pass frame by frame, and dumps the
raw per-frame outputs as a PPDF grid.  The inference engine, asked to
reconstruct the same WAV with the same weights, must emit the same grid to
within 1e-5 per element.
"""

from __future__ import annotations

import subprocess
import sys
from pathlib import Path

import numpy as np
import torch

from .dataset import _run_phaseline
from .features import causal_log_magnitude, feature_blocks
from .formats import read_ppdf, read_pspc, write_ppdf


@torch.no_grad()
def forward_grid(model, magnitude):
    """Per-frame forward outputs over a magnitude grid: (outputs, frames)."""
    blocks = feature_blocks(causal_log_magnitude(magnitude), model.look_back)
    out = model(torch.from_numpy(blocks).float()).numpy()
    return out.T.astype(np.float64)


def export_parity_fixture(bpd_model, fpd_model, fixture_wav, out_dir):
    """Dump magnitude (PSPC via the CLI) and forward outputs (PPDF).

    Returns ``(pspc_path, ppdf_path)``.  The PPDF carries the raw network
    outputs for every frame, including frame 0.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    pspc_path = out_dir / "parity_magnitude.pspc"
    _run_phaseline(["oracle", str(fixture_wav), "--out-spec", str(pspc_path)])
    magnitude = np.abs(read_pspc(pspc_path).data)

    bpd = forward_grid(bpd_model, magnitude)
    fpd = forward_grid(fpd_model, magnitude)
    ppdf_path = out_dir / "parity_outputs.ppdf"
    write_ppdf(ppdf_path, bpd, fpd)
    return pspc_path, ppdf_path


def inference_side_outputs(fixture_wav, bpd_container, fpd_container, out_dir):
    """Ask the inference CLI for the differences it actually used."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    wav_out = out_dir / "parity_reconstruction.wav"
    ppdf_out = out_dir / "parity_inference.ppdf"
    _run_phaseline(
        [
            "reconstruct", str(fixture_wav), str(wav_out),
            "--method", "dnn",
            "--model-bpd", str(bpd_container),
            "--model-fpd", str(fpd_container),
            "--emit-diffs", str(ppdf_out),
        ]
    )
    return read_ppdf(ppdf_out)
