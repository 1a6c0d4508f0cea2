"""Training-loop mechanics on a deliberately tiny run (one epoch, 20 images)."""

import numpy as np
import pytest
import torch

from segtrainer import (
    DataError,
    SplitManifests,
    TrainingDiverged,
    TrainSpec,
    load_checkpoint,
    predict_array,
    read_curves,
    read_manifest,
    split,
    train,
)
from segtrainer.data import read_frame

TINY = dict(epochs=1, batch_size=8, seed=4)


@pytest.fixture(scope="module")
def tiny_run(small_catalog, tmp_path_factory):
    spec = TrainSpec(**TINY)
    manifests = split(read_manifest(small_catalog), spec)
    out = tmp_path_factory.mktemp("run")
    result = train(spec, small_catalog, manifests, out, pretrained=False)
    return spec, manifests, result


class TestArtifacts:
    def test_layout_under_model_subtree(self, tiny_run):
        _, _, result = tiny_run
        assert result.model_dir.name == "unet"
        assert result.checkpoint == result.model_dir / "checkpoint.pt"
        assert result.curves == result.model_dir / "curves.csv"
        assert result.checkpoint.is_file()

    def test_no_temp_residue(self, tiny_run):
        # checkpoints are written via temp-then-rename; nothing may linger
        _, _, result = tiny_run
        assert not list(result.model_dir.rglob("*.tmp"))

    def test_curves_round_trip(self, tiny_run):
        _, _, result = tiny_run
        rows = read_curves(result.curves)
        assert rows == list(result.history)
        assert len(rows) == 1
        epoch, loss, miou = rows[0]
        assert epoch == 1 and np.isfinite(loss) and 0.0 <= miou <= 1.0

    def test_final_miou_matches_history(self, tiny_run):
        _, _, result = tiny_run
        assert result.final_val_miou == result.history[-1][2]

    def test_val_masks_exported(self, tiny_run, small_catalog):
        spec, manifests, result = tiny_run
        written = sorted((result.model_dir / "val-masks").rglob("*.png"))
        assert len(written) == len(manifests.val)


class TestCheckpoint:
    def test_load_and_predict(self, tiny_run, small_catalog):
        spec, manifests, result = tiny_run
        model, loaded_spec = load_checkpoint(result.checkpoint)
        assert loaded_spec == spec
        frame = read_frame(small_catalog / manifests.test[0].frame)
        classes = predict_array(model, frame, loaded_spec)
        assert classes.shape == frame.shape
        assert classes.dtype == np.uint8
        assert int(classes.max()) < 6

    def test_loaded_model_reproduces_training_output(self, tiny_run,
                                                     small_catalog):
        spec, manifests, result = tiny_run
        model, _ = load_checkpoint(result.checkpoint)
        item = manifests.val[0]
        exported = (result.model_dir / "val-masks" / str(item.view)
                    / f"{item.frame.split('/')[-1].removesuffix('.pgm')}.png")
        from segtrainer.data import read_mask_png

        frame = read_frame(small_catalog / item.frame)
        assert np.array_equal(predict_array(model, frame, spec),
                              read_mask_png(exported))

    def test_bad_checkpoint_path(self, tmp_path):
        with pytest.raises(DataError):
            load_checkpoint(tmp_path / "missing.pt")


class TestGuards:
    def test_empty_train_manifest(self, small_catalog):
        manifests = split(read_manifest(small_catalog), TrainSpec())
        empty = SplitManifests((), manifests.val, manifests.test)
        with pytest.raises(DataError, match="training manifest"):
            train(TrainSpec(**TINY), small_catalog, empty, "/tmp/unused")

    def test_empty_val_manifest(self, small_catalog):
        manifests = split(read_manifest(small_catalog), TrainSpec())
        empty = SplitManifests(manifests.train, (), manifests.test)
        with pytest.raises(DataError, match="validation manifest"):
            train(TrainSpec(**TINY), small_catalog, empty, "/tmp/unused")

    def test_nan_loss_aborts_with_diagnostics(self, small_catalog, tmp_path):
        # an absurd learning rate overflows float32 within a step or two
        spec = TrainSpec(epochs=3, batch_size=8, lr=1e15)
        manifests = split(read_manifest(small_catalog), spec)
        with pytest.raises(TrainingDiverged, match="non-finite") as exc_info:
            train(spec, small_catalog, manifests, tmp_path, pretrained=False)
        err = exc_info.value
        assert err.epoch is not None and err.step is not None
        assert f"lr={spec.lr}" in str(err)
        assert "recent losses" in str(err)
