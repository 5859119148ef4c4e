import numpy as np
import pytest
import torch

from phaseline_training import (
    DifferenceEstimator,
    Segment,
    TrainConfig,
    TrainingDivergedError,
    cosine_loss_sum,
    export_model,
    import_model,
    train_model,
)


class TestArchitecture:
    def test_default_parameter_budget(self):
        model = DifferenceEstimator("bpd")
        assert 205000 <= model.param_count <= 207000
        assert model.param_count == 205825

    def test_head_shapes(self):
        x = torch.randn(3, 4, 129)
        assert DifferenceEstimator("bpd")(x).shape == (3, 129)
        assert DifferenceEstimator("fpd")(x).shape == (3, 128)

    def test_unknown_head_rejected(self):
        with pytest.raises(ValueError):
            DifferenceEstimator("phase")


class TestExportImport:
    def test_forward_preserved_exactly(self, tmp_path):
        torch.manual_seed(4)
        model = DifferenceEstimator("fpd", channels=12, gated_layers=2, gated_kernel=3)
        path = tmp_path / "m.pdnw"
        export_model(model, path)
        clone = import_model(path)
        x = torch.randn(5, 4, 65)
        with torch.no_grad():
            assert torch.equal(model(x), clone(x))

    def test_head_and_shape_restored(self, tmp_path):
        torch.manual_seed(5)
        model = DifferenceEstimator("bpd", channels=10, gated_layers=3, gated_kernel=5)
        path = tmp_path / "m.pdnw"
        export_model(model, path)
        clone = import_model(path)
        assert clone.head == "bpd"
        assert clone.param_count == model.param_count
        assert len(clone.blocks) == 3


class TestLoss:
    def test_lower_bound_at_exact_targets(self):
        target = torch.rand(4, 33) * 6 - 3
        mask = torch.ones(4, 33, dtype=torch.bool)
        loss = cosine_loss_sum(target.clone(), target, mask)
        assert loss.item() == pytest.approx(-mask.sum().item())
        nudged = cosine_loss_sum(target + 0.2, target, mask)
        assert nudged.item() > loss.item()

    def test_periodicity_in_targets(self):
        pred = torch.rand(4, 33)
        target = torch.rand(4, 33)
        mask = torch.ones(4, 33, dtype=torch.bool)
        a = cosine_loss_sum(pred, target, mask)
        b = cosine_loss_sum(pred, target + 2 * np.pi, mask)
        assert a.item() == pytest.approx(b.item(), abs=1e-4)

    def test_mask_excludes_bins(self):
        pred = torch.zeros(2, 8)
        target = torch.full((2, 8), np.pi)
        mask = torch.zeros(2, 8, dtype=torch.bool)
        mask[0, :4] = True
        assert cosine_loss_sum(pred, target, mask).item() == pytest.approx(4.0)


def _toy_segment(rng, frames=12, bins=33):
    mags = rng.uniform(0.1, 1.0, (bins, frames))
    bpd = rng.uniform(-np.pi, np.pi, (bins, frames))
    bpd[:, 0] = 0.0
    fpd = rng.uniform(-np.pi, np.pi, (bins - 1, frames))
    return Segment(mags, bpd, fpd)


class TestTraining:
    def test_smoke_run_improves_loss(self):
        rng = np.random.default_rng(6)
        segment = _toy_segment(rng)
        config = TrainConfig(
            epochs=10, batch_size=8, channels=8, gated_layers=1, gated_kernel=3,
            base_learning_rate=2e-3, warmup_epochs=2, seed=1,
        )
        _, curve = train_model("bpd", [segment], config)
        assert len(curve) == 10
        assert curve[-1] < curve[0]

    def test_divergence_detected(self):
        rng = np.random.default_rng(7)
        segment = _toy_segment(rng)
        bad = Segment(segment.magnitude, np.full_like(segment.bpd, np.nan), segment.fpd)
        config = TrainConfig(epochs=2, channels=4, gated_layers=1, gated_kernel=3)
        with pytest.raises(TrainingDivergedError, match="epoch"):
            train_model("bpd", [bad], config)

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(8)
        segment = _toy_segment(rng)
        config = TrainConfig(
            epochs=3, batch_size=8, channels=6, gated_layers=1, gated_kernel=3, seed=11
        )
        _, curve_a = train_model("fpd", [segment], config)
        _, curve_b = train_model("fpd", [segment], config)
        assert curve_a == curve_b
