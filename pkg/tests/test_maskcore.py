import logging

import numpy as np
import pytest
from PIL import Image

from urbantherm import (
    ALL_CLASSES,
    CLASS_NAMES,
    NUM_CLASSES,
    PALETTE,
    LabelMask,
    TemperatureField,
    class_name,
    class_pixel_sets,
    read_mask,
    render_overlay,
    validate_mask_file,
    write_mask,
)
from urbantherm.errors import EmptyInputError, FormatError


def test_taxonomy_is_the_documented_six():
    assert NUM_CLASSES == 6
    assert CLASS_NAMES == ("background", "building", "vegetation", "road", "sky", "offshore")
    assert PALETTE[0] == (0, 0, 0)
    assert PALETTE[1] == (0, 255, 0)
    assert PALETTE[2] == (0, 255, 255)
    assert PALETTE[3] == (0, 0, 255)
    assert PALETTE[4] == (255, 0, 0)
    assert PALETTE[5] == (255, 192, 203)


def test_class_name_lookup():
    assert class_name(3) == "road"


class TestLabelMask:
    def test_rejects_out_of_range_value_naming_pixel(self):
        bad = np.zeros((3, 4), dtype=np.uint8)
        bad[1, 2] = 6
        with pytest.raises(FormatError, match=r"class index 6 at \(y=1, x=2\)"):
            LabelMask(bad)

    def test_rejects_empty(self):
        with pytest.raises(EmptyInputError):
            LabelMask(np.zeros((0, 3), dtype=np.uint8))

    def test_accepts_non_uint8_integers(self):
        mask = LabelMask(np.array([[0, 5], [2, 3]], dtype=np.int64))
        assert mask.classes.dtype == np.uint8

    def test_immutable(self):
        mask = LabelMask(np.zeros((2, 2), dtype=np.uint8))
        with pytest.raises(ValueError):
            mask.classes[0, 0] = 1


class TestMaskFiles:
    def test_round_trip_preserves_classes(self, tmp_path, rng):
        classes = rng.integers(0, 6, size=(40, 56)).astype(np.uint8)
        path = tmp_path / "m.png"
        write_mask(LabelMask(classes), path)
        assert (read_mask(path).classes == classes).all()

    def test_written_file_is_indexed_with_taxonomy_palette(self, tmp_path):
        path = tmp_path / "m.png"
        write_mask(LabelMask(np.arange(6, dtype=np.uint8).reshape(2, 3)), path)
        with Image.open(path) as im:
            assert im.mode == "P"
            palette = im.getpalette()[: 6 * 3]
        expected = [v for color in PALETTE for v in color]
        assert palette == expected

    def test_validate_flags_foreign_palette_as_warning(self, tmp_path):
        im = Image.fromarray(np.zeros((4, 4), dtype=np.uint8), mode="P")
        im.putpalette([10, 20, 30] * 256)
        path = tmp_path / "foreign.png"
        im.save(path)
        mask, warnings = validate_mask_file(path)
        assert (mask.classes == 0).all()
        assert any("palette" in w for w in warnings)

    def test_validate_accepts_plain_grayscale_with_warning(self, tmp_path):
        Image.fromarray(np.full((4, 4), 2, dtype=np.uint8), mode="L").save(tmp_path / "l.png")
        mask, warnings = validate_mask_file(tmp_path / "l.png")
        assert (mask.classes == 2).all()
        assert warnings

    def test_validate_rejects_out_of_range_values(self, tmp_path):
        Image.fromarray(np.full((4, 4), 9, dtype=np.uint8), mode="L").save(tmp_path / "bad.png")
        with pytest.raises(FormatError):
            validate_mask_file(tmp_path / "bad.png")

    def test_validate_rejects_rgb(self, tmp_path):
        Image.fromarray(np.zeros((4, 4, 3), dtype=np.uint8)).save(tmp_path / "rgb.png")
        with pytest.raises(FormatError):
            validate_mask_file(tmp_path / "rgb.png")

    def test_validate_rejects_missing_file(self, tmp_path):
        with pytest.raises(FormatError):
            validate_mask_file(tmp_path / "nope.png")


class TestClassPixelSets:
    def test_indices_partition_the_image(self, quad_mask):
        sets = class_pixel_sets(quad_mask)
        assert sorted(sets) == list(ALL_CLASSES)
        total = np.concatenate([sets[c] for c in ALL_CLASSES])
        assert len(total) == quad_mask.classes.size
        assert len(np.unique(total)) == len(total)

    def test_counts_match_mask(self, quad_mask):
        sets = class_pixel_sets(quad_mask)
        for c in ALL_CLASSES:
            assert len(sets[c]) == int((quad_mask.classes == c).sum())

    def test_against_flat_scan(self, rng):
        classes = rng.integers(0, 6, size=(17, 23)).astype(np.uint8)
        sets = class_pixel_sets(LabelMask(classes))
        flat = classes.ravel()
        for c in ALL_CLASSES:
            expected = [i for i, v in enumerate(flat) if v == c]
            assert sets[c].tolist() == expected


class TestOverlay:
    def test_shape_and_dtype(self, quad_mask, rng):
        counts = rng.integers(7000, 30000, size=(32, 32)).astype(np.uint16)
        out = render_overlay(counts, quad_mask, alpha=0.5)
        assert out.shape == (32, 32, 3)
        assert out.dtype == np.uint8

    def test_alpha_zero_is_pure_grayscale(self, quad_mask):
        counts = np.linspace(7000, 30000, 32 * 32).reshape(32, 32).astype(np.uint16)
        out = render_overlay(counts, quad_mask, alpha=0.0)
        assert (out[..., 0] == out[..., 1]).all()
        assert (out[..., 1] == out[..., 2]).all()

    def test_background_is_never_tinted(self, quad_mask):
        counts = np.full((32, 32), 20000, dtype=np.uint16)
        opaque = render_overlay(counts, quad_mask, alpha=1.0)
        bg = quad_mask.classes == 0
        assert (opaque[bg][:, 0] == opaque[bg][:, 1]).all()
        # class 1 (green) at alpha 1 shows the palette color exactly
        fg = quad_mask.classes == 1
        assert (opaque[fg] == (0, 255, 0)).all()

    def test_accepts_temperature_field(self, quad_mask):
        kelvin = np.linspace(280, 320, 32 * 32).reshape(32, 32)
        field = TemperatureField.from_kelvin(kelvin)
        out = render_overlay(field, quad_mask, alpha=0.3)
        assert out.shape == (32, 32, 3)
