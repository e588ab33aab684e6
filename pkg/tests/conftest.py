import pytest
import torch

from changediff import HeadConfig, ScheduleConfig, UNetConfig, build_diffusion


@pytest.fixture
def tiny_unet_cfg():
    return UNetConfig(
        in_channels=1,
        base_channels=8,
        channel_mults=(1, 2),
        num_res_blocks=1,
        attention_levels=(1,),
        norm_groups=4,
    )


@pytest.fixture
def tiny_schedule_cfg():
    return ScheduleConfig(timesteps=20)


@pytest.fixture
def tiny_head_cfg():
    return HeadConfig(
        feature_timesteps=(3, 9), attention_reduction=2, classifier_channels=8
    )


@pytest.fixture
def tiny_diffusion(tiny_schedule_cfg, tiny_unet_cfg):
    torch.manual_seed(0)
    return build_diffusion(tiny_schedule_cfg, tiny_unet_cfg)
