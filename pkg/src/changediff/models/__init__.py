from .attention import (
    ChannelAttention,
    ChannelSpatialAttention,
    SelfAttention2d,
    SpatialAttention,
)
from .head import ChangeHead
from .unet import DenoisingUNet, timestep_embedding

__all__ = [
    "ChannelAttention",
    "ChannelSpatialAttention",
    "SelfAttention2d",
    "SpatialAttention",
    "ChangeHead",
    "DenoisingUNet",
    "timestep_embedding",
]
