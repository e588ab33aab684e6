import dataclasses

import pytest
import yaml

from changediff import (
    DataConfig,
    ExperimentConfig,
    HeadConfig,
    ScheduleConfig,
    TrainingConfig,
    UNetConfig,
)
from changediff.config import config_from_dict, config_to_dict


def test_defaults_round_trip_through_dict():
    cfg = ExperimentConfig()
    clone = ExperimentConfig.from_dict(cfg.to_dict())
    assert clone == cfg


def test_yaml_round_trip(tmp_path):
    cfg = ExperimentConfig()
    cfg.seed = 42
    cfg.unet.channel_mults = (1, 2, 2)
    cfg.head.scales = (0, 1)
    cfg.data.root = "/data/pairs"
    path = tmp_path / "cfg.yaml"
    cfg.save(path)
    loaded = ExperimentConfig.load(path)
    assert loaded == cfg
    assert isinstance(loaded.unet.channel_mults, tuple)
    assert isinstance(loaded.head.scales, tuple)


def test_yaml_file_contains_plain_types(tmp_path):
    path = tmp_path / "cfg.yaml"
    ExperimentConfig().save(path)
    data = yaml.safe_load(path.read_text())
    assert data["unet"]["channel_mults"] == [1, 2, 4, 8, 8]
    assert data["data"]["root"] is None


def test_empty_yaml_gives_defaults(tmp_path):
    path = tmp_path / "empty.yaml"
    path.write_text("")
    assert ExperimentConfig.load(path) == ExperimentConfig()


def test_partial_dict_overrides_only_named_fields():
    cfg = ExperimentConfig.from_dict(
        {"seed": 9, "schedule": {"timesteps": 50}, "unet": {"base_channels": 32}}
    )
    assert cfg.seed == 9
    assert cfg.schedule.timesteps == 50
    assert cfg.schedule.name == "linear"
    assert cfg.unet.base_channels == 32
    assert cfg.unet.channel_mults == (1, 2, 4, 8, 8)


def test_unknown_keys_are_rejected():
    with pytest.raises(ValueError, match="unknown"):
        ExperimentConfig.from_dict({"sede": 1})
    with pytest.raises(ValueError, match="unknown"):
        ExperimentConfig.from_dict({"unet": {"base_channel": 8}})


def test_lists_coerce_to_tuples():
    cfg = config_from_dict(UNetConfig, {"channel_mults": [1, 2], "attention_levels": []})
    assert cfg.channel_mults == (1, 2)
    assert cfg.attention_levels == ()


def test_optional_fields_accept_none_and_values():
    assert config_from_dict(DataConfig, {"root": None}).root is None
    assert config_from_dict(DataConfig, {"root": "/x"}).root == "/x"
    assert config_from_dict(HeadConfig, {"scales": None}).scales is None
    assert config_from_dict(HeadConfig, {"scales": [0, 2]}).scales == (0, 2)


def test_config_to_dict_is_yaml_safe():
    out = config_to_dict(ExperimentConfig())
    assert yaml.safe_load(yaml.safe_dump(out)) == out


def test_schedule_config_builds_both_families():
    lin = ScheduleConfig(name="linear", timesteps=10).make()
    cos = ScheduleConfig(name="cosine", timesteps=10).make()
    assert lin.num_timesteps == 10
    assert cos.num_timesteps == 10
    assert not (lin.betas == cos.betas).all()
    with pytest.raises(ValueError, match="unknown"):
        ScheduleConfig(name="step", timesteps=10).make()


def test_training_and_data_defaults_are_sane():
    t = TrainingConfig()
    assert t.steps > 0 and t.batch_size > 0 and 0 <= t.ema_decay < 1
    d = DataConfig()
    assert d.image_size % 2 == 0 and d.channels in (1, 3)


def test_all_config_classes_are_dataclasses():
    for cls in (ScheduleConfig, UNetConfig, HeadConfig, TrainingConfig,
                DataConfig, ExperimentConfig):
        assert dataclasses.is_dataclass(cls)
