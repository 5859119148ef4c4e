"""Training loop: RAdam with linear warmup into a half-period cosine schedule,
weight decay, and gradient-norm clipping.

The objective is the summed negative cosine of the wrapped difference between
target and prediction over valid bins; time-difference targets do not exist
at frame 0, so that column is masked out.  The optimizer steps on the mean
over valid bins (the same objective up to a positive constant, which keeps
step sizes independent of segment length); reported loss curves carry the sum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from .model import (
    DEFAULT_CHANNELS,
    DEFAULT_GATED_KERNEL,
    DEFAULT_GATED_LAYERS,
    DEFAULT_LOOK_BACK,
    DifferenceEstimator,
    export_model,
)


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite; carries the epoch for diagnosis."""


@dataclass(frozen=True)
class TrainConfig:
    base_learning_rate: float = 4e-4
    batch_size: int = 32
    epochs: int = 100
    warmup_epochs: int = 5
    weight_decay: float = 1e-6
    grad_clip_norm: float = 10.0
    look_back: int = DEFAULT_LOOK_BACK
    channels: int = DEFAULT_CHANNELS
    gated_layers: int = DEFAULT_GATED_LAYERS
    gated_kernel: int = DEFAULT_GATED_KERNEL
    seed: int = 0


def _schedule(config):
    warm = max(config.warmup_epochs, 0)

    def factor(epoch):
        if epoch < warm:
            return (epoch + 1) / warm
        span = max(config.epochs - warm, 1)
        progress = (epoch - warm) / span
        return 0.5 * (1.0 + np.cos(np.pi * progress))

    return factor


def _targets_and_mask(segment, head):
    if head == "bpd":
        target = segment.bpd
        mask = np.ones_like(target, dtype=bool)
        mask[:, 0] = False  # no previous frame to difference against
    else:
        target = segment.fpd
        mask = np.ones_like(target, dtype=bool)
    return target, mask


def cosine_loss_sum(prediction, target, mask):
    """Summed negative-cosine loss over valid bins (torch tensors)."""
    per_bin = -torch.cos(target - prediction)
    return per_bin[mask].sum()


def train_model(head, segments, config=TrainConfig(), log_every=0):
    """Train one estimation head on a list of segments.

    Returns ``(model, loss_curve)`` where the curve holds the summed loss per
    epoch.  Raises :class:`TrainingDivergedError` on a non-finite loss.
    """
    torch.manual_seed(config.seed)
    model = DifferenceEstimator(
        head,
        channels=config.channels,
        look_back=config.look_back,
        gated_layers=config.gated_layers,
        gated_kernel=config.gated_kernel,
    )
    optimizer = torch.optim.RAdam(
        model.parameters(),
        lr=config.base_learning_rate,
        weight_decay=config.weight_decay,
    )
    scheduler = torch.optim.lr_scheduler.LambdaLR(optimizer, _schedule(config))

    # The estimator is per-frame, so frames are the sampling unit: every frame
    # of every segment becomes one item, and an epoch visits all of them once.
    feature_list, target_list, mask_list = [], [], []
    for segment in segments:
        feature_list.append(torch.from_numpy(segment.features(config.look_back)).float())
        target, mask = _targets_and_mask(segment, head)
        target_list.append(torch.from_numpy(target.T.copy()).float())
        mask_list.append(torch.from_numpy(mask.T.copy()))
    all_features = torch.cat(feature_list)
    all_targets = torch.cat(target_list)
    all_masks = torch.cat(mask_list)

    rng = np.random.default_rng(config.seed)
    curve = []
    for epoch in range(config.epochs):
        order = rng.permutation(all_features.shape[0])
        epoch_sum = 0.0
        for start in range(0, len(order), config.batch_size):
            index = torch.from_numpy(order[start : start + config.batch_size])
            features = all_features[index]
            targets = all_targets[index]
            masks = all_masks[index]

            prediction = model(features)
            loss_sum = cosine_loss_sum(prediction, targets, masks)
            if not torch.isfinite(loss_sum):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch} "
                    f"(lr {scheduler.get_last_lr()[0]:.2e})"
                )
            optimizer.zero_grad()
            (loss_sum / masks.sum()).backward()
            torch.nn.utils.clip_grad_norm_(model.parameters(), config.grad_clip_norm)
            optimizer.step()
            epoch_sum += float(loss_sum.detach())
        scheduler.step()
        curve.append(epoch_sum)
        if log_every and (epoch + 1) % log_every == 0:
            print(f"epoch {epoch + 1}/{config.epochs}: summed loss {epoch_sum:.1f}")
    return model, curve


def train_and_export(head, segments, path, config=TrainConfig(), log_every=0):
    model, curve = train_model(head, segments, config, log_every)
    export_model(model, path)
    return model, curve


@torch.no_grad()
def training_awe(model, segments):
    """Median absolute wrapped error of the model on its training segments."""
    errors = []
    for segment in segments:
        features = torch.from_numpy(segment.features(model.look_back)).float()
        prediction = model(features).numpy().T
        target, mask = _targets_and_mask(segment, model.head)
        wrapped = np.angle(np.exp(1j * (target - prediction)))
        errors.append(np.abs(wrapped)[mask])
    return float(np.median(np.concatenate(errors)))
