import copy

import pytest
import torch

from changediff import (
    ChangeDetector,
    ImagePool,
    SyntheticChangePairs,
    TrainingConfig,
    build_diffusion,
    diffusion_val_loss,
    evaluate_detector,
    pretrain_diffusion,
    train_change_head,
)


@pytest.fixture
def pairs():
    return SyntheticChangePairs(6, size=8, channels=1, seed=0)


@pytest.fixture
def quick_cfg():
    return TrainingConfig(steps=3, batch_size=4, lr=1e-3, warmup_steps=1, log_every=10)


class TestImagePool:
    def test_interleaves_both_epochs(self, pairs):
        pool = ImagePool(pairs)
        assert len(pool) == 12
        assert torch.equal(pool[0], pairs[0]["a"])
        assert torch.equal(pool[1], pairs[0]["b"])
        assert torch.equal(pool[10], pairs[5]["a"])
        assert torch.equal(pool[11], pairs[5]["b"])


class TestPretrainDiffusion:
    def test_records_one_loss_per_step_and_updates_weights(
        self, tiny_schedule_cfg, tiny_unet_cfg, pairs, quick_cfg
    ):
        torch.manual_seed(0)
        diffusion = build_diffusion(tiny_schedule_cfg, tiny_unet_cfg)
        before = copy.deepcopy(diffusion.model.state_dict())
        out = pretrain_diffusion(diffusion, ImagePool(pairs), quick_cfg)
        assert len(out["losses"]) == quick_cfg.steps
        assert all(v > 0 for v in out["losses"])
        changed = any(
            not torch.equal(before[k], v)
            for k, v in diffusion.model.state_dict().items()
        )
        assert changed
        assert not diffusion.training  # left in eval mode

    def test_ema_lags_behind_the_live_weights(
        self, tiny_schedule_cfg, tiny_unet_cfg, pairs, quick_cfg
    ):
        torch.manual_seed(0)
        diffusion = build_diffusion(tiny_schedule_cfg, tiny_unet_cfg)
        out = pretrain_diffusion(diffusion, ImagePool(pairs), quick_cfg)
        ema = out["ema"]
        live = dict(diffusion.model.named_parameters())
        assert any(
            not torch.allclose(ema.shadow[name], live[name]) for name in ema.shadow
        )

    def test_is_reproducible_under_torch_seed(
        self, tiny_schedule_cfg, tiny_unet_cfg, pairs, quick_cfg
    ):
        losses = []
        for _ in range(2):
            torch.manual_seed(123)
            diffusion = build_diffusion(tiny_schedule_cfg, tiny_unet_cfg)
            losses.append(pretrain_diffusion(diffusion, ImagePool(pairs), quick_cfg)["losses"])
        assert losses[0] == losses[1]


class TestDiffusionValLoss:
    def test_is_deterministic(self, tiny_diffusion, pairs):
        a = diffusion_val_loss(tiny_diffusion, ImagePool(pairs), batch_size=4, seed=9)
        b = diffusion_val_loss(tiny_diffusion, ImagePool(pairs), batch_size=4, seed=9)
        assert a == b

    def test_seed_changes_the_draw(self, tiny_diffusion, pairs):
        a = diffusion_val_loss(tiny_diffusion, ImagePool(pairs), batch_size=4, seed=0)
        b = diffusion_val_loss(tiny_diffusion, ImagePool(pairs), batch_size=4, seed=1)
        assert a != b

    def test_max_batches_caps_the_work(self, tiny_diffusion, pairs):
        full = diffusion_val_loss(tiny_diffusion, ImagePool(pairs), batch_size=4)
        capped = diffusion_val_loss(
            tiny_diffusion, ImagePool(pairs), batch_size=4, max_batches=1
        )
        assert isinstance(capped, float)
        assert capped != full  # fewer batches, different mean

    def test_empty_dataset_raises(self, tiny_diffusion):
        with pytest.raises(ValueError, match="batches"):
            diffusion_val_loss(tiny_diffusion, [], batch_size=4)


class TestTrainChangeHead:
    def test_trains_only_the_head(self, tiny_diffusion, tiny_head_cfg, pairs, quick_cfg):
        torch.manual_seed(0)
        detector = ChangeDetector(tiny_diffusion, tiny_head_cfg)
        backbone_before = copy.deepcopy(detector.diffusion.model.state_dict())
        head_before = copy.deepcopy(detector.head.state_dict())
        out = train_change_head(detector, pairs, quick_cfg)
        assert len(out["losses"]) == quick_cfg.steps
        for k, v in detector.diffusion.model.state_dict().items():
            assert torch.equal(backbone_before[k], v)
        assert any(
            not torch.equal(head_before[k], v)
            for k, v in detector.head.state_dict().items()
        )

    def test_validation_scores_are_attached_when_requested(
        self, tiny_diffusion, tiny_head_cfg, pairs, quick_cfg
    ):
        torch.manual_seed(0)
        detector = ChangeDetector(tiny_diffusion, tiny_head_cfg)
        out = train_change_head(detector, pairs, quick_cfg, val_pairs=pairs)
        assert "val" in out
        assert set(out["val"]) >= {"precision", "recall", "f1", "iou", "overall_accuracy"}


class TestEvaluateDetector:
    def test_returns_scores_and_is_repeatable(self, tiny_diffusion, tiny_head_cfg, pairs):
        torch.manual_seed(0)
        detector = ChangeDetector(tiny_diffusion, tiny_head_cfg)
        a = evaluate_detector(detector, pairs, batch_size=4, seed=5)
        b = evaluate_detector(detector, pairs, batch_size=4, seed=5)
        assert a["f1"].shape == (2,)
        assert a["overall_accuracy"] == b["overall_accuracy"]
        assert (a["f1"] == b["f1"]).all()
