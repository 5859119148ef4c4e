"""Feature pipeline mirroring the inference side exactly.

The estimators floor each frame's magnitude at 1e-10 times the running
maximum seen so far (causal), take the natural log once per frame, and stack
the current frame with its three predecessors as channels (oldest first,
frame 0 replicated into missing history) before subtracting the scalar mean
of the block.  Training must reproduce this bit for bit up to float32, or the
exported weights see a shifted input distribution at deployment.
"""

from __future__ import annotations

import numpy as np

MAGNITUDE_FLOOR_REL = 1e-10


def causal_log_magnitude(magnitude):
    """Per-frame floored log-magnitude with a running-max reference.

    ``magnitude`` is (bins, frames); each column is floored against the
    maximum over columns 0..n, matching streaming arrival order.
    """
    magnitude = np.asarray(magnitude, dtype=np.float64)
    running_max = np.maximum.accumulate(magnitude.max(axis=0))
    floor = np.maximum(MAGNITUDE_FLOOR_REL * running_max, np.finfo(np.float64).tiny)
    floored = np.maximum(magnitude, floor[None, :])
    return np.log(floored)


def feature_blocks(log_mag, look_back=3):
    """Mean-subtracted look-back blocks, one per frame: (frames, channels, bins)."""
    log_mag = np.asarray(log_mag, dtype=np.float64)
    n_bins, n_frames = log_mag.shape
    blocks = np.empty((n_frames, look_back + 1, n_bins))
    for n in range(n_frames):
        for c in range(look_back + 1):
            src = max(0, n - look_back + c)
            blocks[n, c] = log_mag[:, src]
        blocks[n] -= blocks[n].mean()
    return blocks
