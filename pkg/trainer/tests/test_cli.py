import json

import pytest
from PIL import Image

from segtrainer import cli, read_manifest
from segtrainer.train import read_curves


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestUsage:
    def test_no_subcommand(self, capsys):
        assert run(capsys)[0] == cli.EXIT_USAGE

    def test_unknown_flag(self, capsys):
        assert run(capsys, "split", "--frobnicate")[0] == cli.EXIT_USAGE

    def test_train_requires_out(self, capsys, small_catalog):
        assert run(capsys, "train", small_catalog)[0] == cli.EXIT_USAGE


class TestSplit:
    def test_writes_manifest(self, small_catalog, tmp_path, capsys):
        out = tmp_path / "split.json"
        code, stdout, _ = run(capsys, "split", small_catalog, "--out", out)
        assert code == cli.EXIT_OK
        assert "12 train, 4 val, 4 test" in stdout
        doc = json.loads(out.read_text())
        assert {len(doc[k]) for k in ("train", "val", "test")} == {12, 4}

    def test_config_file_fractions(self, small_catalog, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"test_fraction": 0.5, "val_fraction": 0.5}))
        out = tmp_path / "split.json"
        code, stdout, _ = run(capsys, "split", small_catalog, "--out", out,
                              "--config", cfg)
        assert code == cli.EXIT_OK
        # per view of 10: 5 test, round(0.5*5)=2 val, 3 train
        assert "6 train, 4 val, 10 test" in stdout

    def test_unknown_config_key(self, small_catalog, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"epochz": 3}))
        code, _, stderr = run(capsys, "split", small_catalog,
                              "--out", tmp_path / "s.json", "--config", cfg)
        assert code == cli.EXIT_ERROR
        assert "epochz" in stderr

    def test_missing_catalog(self, tmp_path, capsys):
        code, _, stderr = run(capsys, "split", tmp_path, "--out",
                              tmp_path / "s.json")
        assert code == cli.EXIT_ERROR
        assert "catalog.json" in stderr


@pytest.fixture(scope="module")
def trained(small_catalog, tmp_path_factory):
    out = tmp_path_factory.mktemp("cli-run")
    cfg = out / "cfg.json"
    cfg.write_text(json.dumps({"epochs": 5, "seed": 2}))
    # the --epochs flag must beat the config file
    code = cli.main(["train", str(small_catalog), "--out", str(out),
                     "--config", str(cfg), "--epochs", "1",
                     "--no-pretrained"])
    return code, out


class TestTrainAndPredict:
    def test_exit_and_artifacts(self, trained, capsys):
        capsys.readouterr()
        code, out = trained
        assert code == cli.EXIT_OK
        assert (out / "split.json").is_file()     # cut on the fly, persisted
        assert (out / "unet" / "checkpoint.pt").is_file()
        assert len(read_curves(out / "unet" / "curves.csv")) == 1

    def test_predict_writes_masks(self, trained, small_catalog, tmp_path,
                                  capsys):
        _, out = trained
        frames = [small_catalog / i.frame
                  for i in read_manifest(small_catalog)[:2]]
        masks = tmp_path / "masks"
        code, stdout, _ = run(capsys, "predict", *frames,
                              "--checkpoint", out / "unet" / "checkpoint.pt",
                              "--out", masks)
        assert code == cli.EXIT_OK
        written = sorted(masks.glob("*.png"))
        assert len(written) == 2
        with Image.open(written[0]) as im:
            assert im.mode == "P"
            assert im.size == (64, 48)

    def test_predict_bad_checkpoint(self, tmp_path, capsys):
        code, _, stderr = run(capsys, "predict", "x.pgm",
                              "--checkpoint", tmp_path / "none.pt",
                              "--out", tmp_path)
        assert code == cli.EXIT_ERROR
        assert "checkpoint" in stderr
