import math

import pytest
import torch
from torch import nn

from changediff import EMA, WarmupCosineLR, warmup_cosine_scale


class TestWarmupCosineScale:
    def test_linear_ramp_values(self):
        got = [warmup_cosine_scale(s, 100, 4) for s in range(4)]
        assert got == pytest.approx([0.25, 0.5, 0.75, 1.0])

    def test_hand_computed_cosine_values(self):
        # total 12, warmup 4: progress = (step - 4) / 8.
        assert warmup_cosine_scale(4, 12, 4) == pytest.approx(1.0)
        assert warmup_cosine_scale(8, 12, 4) == pytest.approx(0.5)
        assert warmup_cosine_scale(6, 12, 4) == pytest.approx(
            0.5 * (1.0 + math.cos(math.pi * 0.25))
        )
        assert warmup_cosine_scale(12, 12, 4) == pytest.approx(0.0, abs=1e-15)

    def test_floor_is_respected(self):
        assert warmup_cosine_scale(50, 50, 10, min_scale=0.1) == pytest.approx(0.1)
        assert warmup_cosine_scale(10_000, 50, 10, min_scale=0.1) == pytest.approx(0.1)
        mid = warmup_cosine_scale(30, 50, 10, min_scale=0.1)
        assert mid == pytest.approx(0.1 + 0.9 * 0.5)

    def test_no_warmup_starts_at_full_scale(self):
        assert warmup_cosine_scale(0, 10, 0) == pytest.approx(1.0)

    def test_all_warmup_ends_at_min_scale(self):
        assert warmup_cosine_scale(5, 5, 5, min_scale=0.2) == pytest.approx(0.2)

    def test_monotone_decay_after_warmup(self):
        vals = [warmup_cosine_scale(s, 200, 20) for s in range(20, 200)]
        assert all(a >= b for a, b in zip(vals, vals[1:]))
        assert all(0.0 <= v <= 1.0 for v in vals)

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            warmup_cosine_scale(0, 0, 0)
        with pytest.raises(ValueError):
            warmup_cosine_scale(0, 10, 11)
        with pytest.raises(ValueError):
            warmup_cosine_scale(0, 10, -1)


def test_scheduler_tracks_the_pure_function():
    param = nn.Parameter(torch.zeros(1))
    base_lr = 0.5
    opt = torch.optim.SGD([param], lr=base_lr)
    sched = WarmupCosineLR(opt, total_steps=30, warmup_steps=5, min_scale=0.05)
    for step in range(35):
        want = base_lr * warmup_cosine_scale(step, 30, 5, 0.05)
        assert opt.param_groups[0]["lr"] == pytest.approx(want, rel=1e-12)
        opt.step()
        sched.step()


class TwoParam(nn.Module):
    def __init__(self):
        super().__init__()
        self.w = nn.Parameter(torch.tensor([1.0, 2.0]))
        self.b = nn.Parameter(torch.tensor([0.5]))
        self.frozen = nn.Parameter(torch.tensor([9.0]), requires_grad=False)


class TestEMA:
    def test_rejects_bad_decay(self):
        with pytest.raises(ValueError):
            EMA(TwoParam(), decay=1.0)
        with pytest.raises(ValueError):
            EMA(TwoParam(), decay=-0.1)

    def test_tracks_only_trainable_parameters(self):
        ema = EMA(TwoParam(), decay=0.9)
        assert set(ema.shadow) == {"w", "b"}

    def test_matches_closed_form_geometric_blend(self):
        # After k updates against a fixed parameter value q, the shadow is
        # d^k p0 + (1 - d^k) q.
        model = TwoParam()
        p0 = model.w.detach().clone()
        ema = EMA(model, decay=0.8)
        q = torch.tensor([5.0, -3.0])
        with torch.no_grad():
            model.w.copy_(q)
        for _ in range(7):
            ema.update(model)
        want = 0.8**7 * p0 + (1.0 - 0.8**7) * q
        assert torch.allclose(ema.shadow["w"], want, atol=1e-6)

    def test_matches_stepwise_oracle_for_moving_parameters(self):
        model = TwoParam()
        ema = EMA(model, decay=0.7)
        oracle = model.w.detach().double().clone()
        torch.manual_seed(0)
        for _ in range(10):
            with torch.no_grad():
                model.w.add_(torch.randn(2))
            ema.update(model)
            oracle = 0.7 * oracle + 0.3 * model.w.detach().double()
        assert torch.allclose(ema.shadow["w"].double(), oracle, atol=1e-5)

    def test_copy_to_overwrites_tracked_parameters_only(self):
        model = TwoParam()
        ema = EMA(model, decay=0.5)
        with torch.no_grad():
            model.w.fill_(100.0)
            model.frozen.fill_(-1.0)
        ema.copy_to(model)
        assert torch.allclose(model.w, torch.tensor([1.0, 2.0]))
        assert float(model.frozen) == -1.0  # untouched

    def test_state_dict_round_trip_is_independent(self):
        model = TwoParam()
        ema = EMA(model, decay=0.9)
        state = ema.state_dict()
        restored = EMA(model, decay=0.1)
        restored.load_state_dict(state)
        assert restored.decay == 0.9
        ema.shadow["w"].fill_(77.0)
        assert not torch.allclose(restored.shadow["w"], ema.shadow["w"])

    def test_initial_shadow_equals_current_parameters(self):
        model = TwoParam()
        ema = EMA(model, decay=0.99)
        assert torch.equal(ema.shadow["w"], model.w.detach())
        assert ema.shadow["w"].data_ptr() != model.w.data_ptr()
