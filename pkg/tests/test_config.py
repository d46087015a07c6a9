"""Tests for RunConfig layering, validation and typed views."""

from pathlib import Path

import pytest
import yaml
from gawno.config import RunConfig, get_config
from gawno.errors import ConfigurationError


class TestDefaults:
    def test_base_dir_from_env(self, fresh_config, tmp_path):
        assert fresh_config.base_dir == tmp_path
        assert fresh_config.get("paths.base_dir") == str(tmp_path)

    def test_singleton(self, fresh_config):
        assert get_config() is fresh_config
        assert RunConfig() is fresh_config

    def test_defaults_match(self, fresh_config):
        assert fresh_config.get("detect.k") == 3.0
        assert fresh_config.get("train.epochs") == 200
        assert fresh_config.get("generator.wavelet") == "db6"
        assert fresh_config.get("fault.onset") == 160

    def test_defaults_not_shared(self, fresh_config):
        fresh_config.override("train.epochs", 5)
        assert RunConfig.DEFAULTS["train"]["epochs"] == 200


class TestGet:
    def test_section(self, fresh_config):
        assert fresh_config.get("synth")["steps"] == 480

    def test_dot_notation_nested_key(self, fresh_config):
        assert fresh_config.get("detect.smoothing_window") == 5

    def test_missing_key_returns_default(self, fresh_config):
        assert fresh_config.get("nonexistent.key", "fallback") == "fallback"

    def test_path(self, fresh_config):
        assert fresh_config.path("checkpoint") == Path("runs/gawno.ckpt")
        assert fresh_config.path("data") is None


class TestMergeConfig:
    def test_merge_keeps_other_keys(self, fresh_config):
        fresh_config._merge_config({"train": {"epochs": 3}})
        assert fresh_config.get("train.epochs") == 3
        assert fresh_config.get("train.batch_size") == 16

    def test_unknown_section(self, fresh_config):
        with pytest.raises(ConfigurationError, match="Unknown config section: search"):
            fresh_config._merge_config({"search": {"default_limit": 10}})

    def test_unknown_key(self, fresh_config):
        with pytest.raises(ConfigurationError, match="train.epoch"):
            fresh_config._merge_config({"train": {"epoch": 3}})

    def test_section_must_be_mapping(self, fresh_config):
        with pytest.raises(ConfigurationError, match="mapping"):
            fresh_config._merge_config({"train": 3})


class TestCoercion:
    def test_int_for_float(self, fresh_config):
        fresh_config.override("detect.k", 2)
        assert fresh_config.get("detect.k") == 2.0
        assert isinstance(fresh_config.get("detect.k"), float)

    @pytest.mark.parametrize(
        "key,value",
        [
            ("train.epochs", "ten"),
            ("train.epochs", 2.5),
            ("train.epochs", True),
            ("detect.k", "3"),
            ("logging.file_enabled", 1),
            ("synth.latent_periods", 48),
            ("generator.wavelet", 6),
        ],
    )
    def test_type_errors(self, fresh_config, key, value):
        with pytest.raises(ConfigurationError, match=key):
            fresh_config.override(key, value)

    def test_none_override_is_ignored(self, fresh_config):
        fresh_config.override("train.epochs", None)
        assert fresh_config.get("train.epochs") == 200

    def test_nullable_keys_accept_values(self, fresh_config):
        fresh_config.override("train.grad_clip", 1.0)
        fresh_config.override("paths.data", "data/plant.csv")
        assert fresh_config.get("train.grad_clip") == 1.0
        assert fresh_config.path("data") == Path("data/plant.csv")
        fresh_config.override("generator.features", 3)
        fresh_config.override("train.grad_clip", 2)
        assert fresh_config.get("generator.features") == 3
        assert fresh_config.get("train.grad_clip") == 2.0

    @pytest.mark.parametrize(
        "key,value",
        [
            ("train.grad_clip", "x"),
            ("train.grad_clip", True),
            ("generator.features", "five"),
            ("generator.features", 2.5),
            ("paths.data", 3),
            ("paths.checkpoint", ["a"]),
        ],
    )
    def test_nullable_keys_are_typed(self, fresh_config, key, value):
        with pytest.raises(ConfigurationError, match=key):
            fresh_config.override(key, value)

    def test_nullable_keys_reset_to_null(self, fresh_config, tmp_path):
        user = tmp_path / "user.yaml"
        user.write_text("train:\n  grad_clip: null\npaths:\n  checkpoint: null\n")
        fresh_config.load(user)
        assert fresh_config.get("train.grad_clip") is None
        assert fresh_config.path("checkpoint") is None


class TestLoad:
    def test_base_file_is_merged(self, fresh_config, tmp_path):
        (tmp_path / "config").mkdir()
        (tmp_path / "config" / "config.yaml").write_text("train:\n  epochs: 7\n")
        fresh_config.reload()
        assert fresh_config.get("train.epochs") == 7

    def test_user_file_on_top(self, fresh_config, tmp_path):
        (tmp_path / "config").mkdir()
        (tmp_path / "config" / "config.yaml").write_text("train:\n  epochs: 7\n  seed: 4\n")
        user = tmp_path / "run.yaml"
        user.write_text("train:\n  epochs: 9\n")
        fresh_config.override("detect.k", 5.0)
        fresh_config.load(user)
        assert fresh_config.get("train.epochs") == 9
        assert fresh_config.get("train.seed") == 4
        assert fresh_config.get("detect.k") == 3.0

    def test_missing_file(self, fresh_config, tmp_path):
        with pytest.raises(ConfigurationError, match="not found"):
            fresh_config.load(tmp_path / "absent.yaml")

    def test_invalid_yaml(self, fresh_config, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("train: [unclosed\n")
        with pytest.raises(ConfigurationError, match="not valid YAML"):
            fresh_config.load(path)

    def test_not_a_mapping(self, fresh_config, tmp_path):
        path = tmp_path / "list.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigurationError, match="mapping"):
            fresh_config.load(path)

    def test_to_yaml_round_trip(self, fresh_config, tmp_path):
        fresh_config.override("generator.wavelet", "db3")
        dumped = fresh_config.to_yaml()
        assert "base_dir" not in yaml.safe_load(dumped)["paths"]
        path = tmp_path / "dump.yaml"
        path.write_text(dumped)
        fresh_config.reload()
        fresh_config.load(path)
        assert fresh_config.get("generator.wavelet") == "db3"
        assert fresh_config.to_yaml() == dumped

    def test_shipped_config_matches_defaults(self, fresh_config):
        shipped = Path(__file__).resolve().parent.parent / "config" / "config.yaml"
        fresh_config.load(shipped)
        expected = dict(RunConfig.DEFAULTS)
        for section in expected:
            if section == "paths":
                continue
            assert fresh_config.get(section) == expected[section], section


class TestTypedViews:
    def test_generator_needs_features(self, fresh_config):
        with pytest.raises(ConfigurationError, match="features"):
            fresh_config.generator_spec()

    def test_specs(self, fresh_config):
        gen = fresh_config.generator_spec(features=5)
        disc = fresh_config.discriminator_spec(features=5)
        assert (gen.features, gen.length, gen.wavelet) == (5, 64, "db6")
        assert disc.head_width == 32
        assert disc.lifted_width == gen.lifted_width

    def test_train_config(self, fresh_config):
        fresh_config.override("train.epochs", 3)
        cfg = fresh_config.train_config(features=2)
        assert cfg.epochs == 3
        assert cfg.generator.features == cfg.discriminator.features == 2

    def test_invalid_spec_surfaces(self, fresh_config):
        fresh_config.override("generator.length", 48)
        with pytest.raises(ConfigurationError):
            fresh_config.generator_spec(features=2)

    def test_detect_and_synth(self, fresh_config):
        assert fresh_config.detect_config().draws == 64
        assert fresh_config.synth_config().latent_periods == (48, 96, 32)

    def test_fault_spec(self, fresh_config):
        assert fresh_config.fault_spec().kind == "step"
        fresh_config.override("fault.kind", "none")
        assert fresh_config.fault_spec() is None

    def test_bad_fault_kind(self, fresh_config):
        fresh_config.override("fault.kind", "explosion")
        with pytest.raises(ConfigurationError, match="explosion"):
            fresh_config.fault_spec()
