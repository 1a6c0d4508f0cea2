import json

import pytest

from segtrainer import ConfigError, TrainSpec


class TestDefaults:
    def test_protocol_defaults(self):
        spec = TrainSpec()
        assert spec.model == "unet"
        assert spec.backbone == "resnet34"
        assert spec.epochs == 15
        assert spec.lr == 0.001
        assert spec.test_fraction == 0.2
        assert spec.val_fraction == 0.25
        assert spec.norm_mean == 0.485
        assert spec.norm_std == 0.229

    @pytest.mark.parametrize("family", ["unet", "fpn", "pspnet", "deeplabv3",
                                        "deeplabv3plus"])
    def test_all_families_accepted(self, family):
        assert TrainSpec(model=family).model == family


class TestValidation:
    @pytest.mark.parametrize("kwargs", [
        {"model": "segformer"},
        {"backbone": "vgg16"},
        {"epochs": 0},
        {"lr": 0.0},
        {"lr": -0.1},
        {"lr": float("inf")},
        {"test_fraction": 0.0},
        {"test_fraction": 1.0},
        {"test_fraction": 1.2},
        {"val_fraction": 0.0},
        {"norm_std": 0.0},
        {"batch_size": 0},
    ])
    def test_rejects(self, kwargs):
        with pytest.raises(ConfigError):
            TrainSpec(**kwargs)


class TestSerialization:
    def test_round_trip(self):
        spec = TrainSpec(model="fpn", epochs=3, lr=0.01, seed=9)
        assert TrainSpec.from_dict(spec.to_dict()) == spec

    def test_unknown_key_rejected(self):
        doc = TrainSpec().to_dict()
        doc["leraning_rate"] = 0.01       # typo must not pass silently
        with pytest.raises(ConfigError, match="leraning_rate"):
            TrainSpec.from_dict(doc)

    def test_from_file(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"model": "pspnet", "epochs": 2}))
        spec = TrainSpec.from_file(path)
        assert spec.model == "pspnet"
        assert spec.epochs == 2
        assert spec.lr == 0.001           # unset fields keep defaults

    def test_from_file_must_be_object(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text("[1, 2]")
        with pytest.raises(ConfigError, match="JSON object"):
            TrainSpec.from_file(path)

    def test_from_file_missing(self, tmp_path):
        with pytest.raises(ConfigError):
            TrainSpec.from_file(tmp_path / "nope.json")
