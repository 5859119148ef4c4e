"""Network inference and the weight container.

Builds the default convolutional estimator pair (one head per difference
kind), saves and reloads them through the binary container, and runs the
frame-by-frame estimator.  Untrained weights produce poor differences, so the
point here is the machinery: causality, the parameter budget, and the exact
save/load round trip.  Train real weights with the separate training package.
"""

import numpy as np

import phaseline as pl

SR = 22050

bpd_model = pl.build_model("bpd", rng=np.random.default_rng(1))
fpd_model = pl.build_model("fpd", rng=np.random.default_rng(2))
print(f"default architecture: {len(bpd_model.layers)} layers, "
      f"{bpd_model.param_count} parameters per head")
for i, layer in enumerate(bpd_model.layers):
    print(f"  layer {i}: {layer.kind:10s} {layer.in_channels:3d} -> "
          f"{layer.out_channels:3d} channels, kernel {layer.kernel_size}")

blob = pl.save_model(bpd_model)
print(f"\ncontainer size: {len(blob)} bytes; "
      f"round trip bit-identical: {pl.save_model(pl.load_model(blob)) == blob}")

# streaming inference over a short harmonic fragment
rng = np.random.default_rng(3)
t = np.arange(8192) / SR
x = sum(np.cos(2 * np.pi * 440 * k * t + rng.uniform(0, 2 * np.pi)) / k for k in (1, 2, 3))
cfg = pl.StftConfig.hann(1024, 256, 1024)
spec = pl.stft(x, cfg, SR)

estimator = pl.DnnDifferenceEstimator(bpd_model, fpd_model, cfg.hop, cfg.fft_size)
for n in range(3):
    tpd, fpd, bpd = estimator.step(spec.magnitude[:, n])
    print(f"frame {n}: tpd[:3] = {np.round(tpd[:3], 3)}, fpd[:3] = {np.round(fpd[:3], 3)}")

print("\ncausality check: feeding extra frames later cannot change these outputs;")
print("the estimator only ever sees the current frame and its look-back buffer.")
print("\nend-to-end use via the command line:")
print("  phaseline reconstruct in.wav out.wav --method dnn \\")
print("      --model-bpd g.pdnw --model-fpd h.pdnw")
print("  phaseline inspect-model g.pdnw")
