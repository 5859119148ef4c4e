"""Torch definition of the phase-difference estimators and container export.

The stack is one 1x1 channel-mixing convolution over the look-back channels,
a run of gated frequency convolutions, and a 1x1 projection to one output
channel.  The frequency-difference head drops the lowest bin after the final
convolution.  Convolutions are zero-padded to preserve the bin count, which
matches the inference engine's layout exactly.
"""

from __future__ import annotations

import torch
from torch import nn

from .formats import KIND_CONV, KIND_GATED, read_pdnw, write_pdnw

DEFAULT_CHANNELS = 64
DEFAULT_LOOK_BACK = 3
DEFAULT_GATED_LAYERS = 5
DEFAULT_GATED_KERNEL = 5


class FreqGatedConv(nn.Module):
    """Sigmoid-gated 1-D convolution along frequency."""

    def __init__(self, channels, kernel):
        super().__init__()
        self.main = nn.Conv1d(channels, channels, kernel, padding=kernel // 2)
        self.gate = nn.Conv1d(channels, channels, kernel, padding=kernel // 2)

    def forward(self, x):
        return torch.sigmoid(self.gate(x)) * self.main(x)


class DifferenceEstimator(nn.Module):
    """Per-frame estimator; input (batch, look_back+1, bins)."""

    def __init__(
        self,
        head,
        channels=DEFAULT_CHANNELS,
        look_back=DEFAULT_LOOK_BACK,
        gated_layers=DEFAULT_GATED_LAYERS,
        gated_kernel=DEFAULT_GATED_KERNEL,
    ):
        super().__init__()
        if head not in ("bpd", "fpd"):
            raise ValueError(f"unknown head {head!r}")
        self.head = head
        self.look_back = look_back
        self.entry = nn.Conv1d(look_back + 1, channels, 1)
        self.blocks = nn.ModuleList(
            FreqGatedConv(channels, gated_kernel) for _ in range(gated_layers)
        )
        self.exit = nn.Conv1d(channels, 1, 1)

    def forward(self, x):
        x = self.entry(x)
        for block in self.blocks:
            x = block(x)
        out = self.exit(x)[:, 0, :]
        return out[:, 1:] if self.head == "fpd" else out

    @property
    def param_count(self):
        return sum(p.numel() for p in self.parameters())


def _conv_arrays(conv):
    return (
        conv.weight.detach().cpu().numpy(),
        conv.bias.detach().cpu().numpy(),
    )


def export_model(model, path):
    """Write the model to the shared weight container."""
    layers = []
    weight, bias = _conv_arrays(model.entry)
    layers.append({"kind": KIND_CONV, "weight": weight, "bias": bias})
    for block in model.blocks:
        weight, bias = _conv_arrays(block.main)
        gate_weight, gate_bias = _conv_arrays(block.gate)
        layers.append(
            {
                "kind": KIND_GATED,
                "weight": weight,
                "bias": bias,
                "gate_weight": gate_weight,
                "gate_bias": gate_bias,
            }
        )
    weight, bias = _conv_arrays(model.exit)
    layers.append({"kind": KIND_CONV, "weight": weight, "bias": bias})
    return write_pdnw(path, model.head, layers)


def import_model(path):
    """Rebuild a :class:`DifferenceEstimator` from a weight container."""
    head, layers = read_pdnw(path)
    entry, gated, exit_ = layers[0], layers[1:-1], layers[-1]
    if entry["kind"] != KIND_CONV or exit_["kind"] != KIND_CONV:
        raise ValueError("container does not match the expected stack shape")
    channels = entry["weight"].shape[0]
    model = DifferenceEstimator(
        head,
        channels=channels,
        look_back=entry["weight"].shape[1] - 1,
        gated_layers=len(gated),
        gated_kernel=gated[0]["weight"].shape[2] if gated else DEFAULT_GATED_KERNEL,
    )
    with torch.no_grad():
        model.entry.weight.copy_(torch.from_numpy(entry["weight"].copy()))
        model.entry.bias.copy_(torch.from_numpy(entry["bias"].copy()))
        for block, layer in zip(model.blocks, gated):
            if layer["kind"] != KIND_GATED:
                raise ValueError("expected a gated layer in the container")
            block.main.weight.copy_(torch.from_numpy(layer["weight"].copy()))
            block.main.bias.copy_(torch.from_numpy(layer["bias"].copy()))
            block.gate.weight.copy_(torch.from_numpy(layer["gate_weight"].copy()))
            block.gate.bias.copy_(torch.from_numpy(layer["gate_bias"].copy()))
        model.exit.weight.copy_(torch.from_numpy(exit_["weight"].copy()))
        model.exit.bias.copy_(torch.from_numpy(exit_["bias"].copy()))
    return model
