import csv
import json
from datetime import datetime, timezone

import numpy as np
import pytest
from PIL import Image

from urbantherm import PlanckConstants, TemperatureField
from urbantherm.errors import FormatError
from urbantherm.rasters import (
    probe_raster,
    read_counts,
    read_pgm,
    read_sidecar,
    write_counts,
    write_pgm,
    write_sidecar,
    write_temperature_csv,
    write_temperature_tiff,
)


class TestPgm:
    def test_round_trip(self, tmp_path, rng):
        counts = rng.integers(0, 65536, size=(24, 31)).astype(np.uint16)
        path = tmp_path / "f.pgm"
        write_pgm(counts, path)
        assert (read_pgm(path) == counts).all()

    def test_bytes_are_big_endian_p5(self, tmp_path):
        counts = np.array([[0x0102, 0xFFFE]], dtype=np.uint16)
        path = tmp_path / "f.pgm"
        write_pgm(counts, path)
        data = path.read_bytes()
        assert data.startswith(b"P5")
        # header: magic, width, height, maxval, single whitespace, then samples
        assert data.endswith(b"\x01\x02\xff\xfe")
        header = data[: -4].split()
        assert header[1:4] == [b"2", b"1", b"65535"]

    def test_reads_handwritten_file_with_comments(self, tmp_path):
        path = tmp_path / "hand.pgm"
        path.write_bytes(b"P5\n# shot at dawn\n2 2\n# maxval next\n65535\n"
                         + bytes([0, 1, 0, 2, 0, 3, 0, 4]))
        assert read_pgm(path).tolist() == [[1, 2], [3, 4]]

    def test_eight_bit_maxval_reads_single_bytes(self, tmp_path):
        path = tmp_path / "small.pgm"
        path.write_bytes(b"P5\n3 1\n255\n" + bytes([7, 8, 9]))
        assert read_pgm(path).tolist() == [[7, 8, 9]]

    def test_rejects_ascii_p2(self, tmp_path):
        path = tmp_path / "ascii.pgm"
        path.write_bytes(b"P2\n1 1\n255\n7\n")
        with pytest.raises(FormatError):
            read_pgm(path)

    def test_rejects_truncated_data(self, tmp_path):
        path = tmp_path / "short.pgm"
        path.write_bytes(b"P5\n2 2\n65535\n\x00\x01")
        with pytest.raises(FormatError, match="sample bytes"):
            read_pgm(path)


class TestPngCounts:
    def test_round_trip_16bit(self, tmp_path, rng):
        counts = rng.integers(0, 65536, size=(12, 9)).astype(np.uint16)
        path = tmp_path / "f.png"
        write_counts(counts, path)
        back = read_counts(path)
        assert back.dtype == np.uint16
        assert (back == counts).all()

    def test_dispatch_by_suffix(self, tmp_path):
        counts = np.full((4, 4), 30000, dtype=np.uint16)
        write_counts(counts, tmp_path / "a.pgm")
        write_counts(counts, tmp_path / "a.png")
        assert (read_counts(tmp_path / "a.pgm") == read_counts(tmp_path / "a.png")).all()


class TestProbe:
    def test_pgm_dimensions(self, tmp_path):
        write_pgm(np.zeros((7, 13), dtype=np.uint16), tmp_path / "f.pgm")
        assert probe_raster(tmp_path / "f.pgm") == (13, 7)

    def test_png_dimensions(self, tmp_path):
        write_counts(np.zeros((5, 8), dtype=np.uint16), tmp_path / "f.png")
        assert probe_raster(tmp_path / "f.png") == (8, 5)

    def test_flags_truncation_that_pillow_would_miss(self, tmp_path):
        path = tmp_path / "cut.pgm"
        write_pgm(np.zeros((7, 13), dtype=np.uint16), path)
        path.write_bytes(path.read_bytes()[:-10])
        with pytest.raises(FormatError):
            probe_raster(path)

    def test_corrupt_png(self, tmp_path):
        (tmp_path / "junk.png").write_bytes(b"\x89PNG\r\n\x1a\nnot really")
        with pytest.raises(FormatError):
            probe_raster(tmp_path / "junk.png")


class TestSidecar:
    def test_round_trip_with_constants(self, tmp_path):
        ts = datetime(2021, 6, 21, 15, 0, tzinfo=timezone.utc)
        constants = PlanckConstants(r1=15000.0)
        path = tmp_path / "s.meta.json"
        write_sidecar(path, timestamp=ts, view_id=3, constants=constants)
        meta = read_sidecar(path)
        assert meta["timestamp"] == ts
        assert meta["view_id"] == 3
        assert meta["constants"] == constants

    def test_constants_optional(self, tmp_path):
        path = tmp_path / "s.meta.json"
        write_sidecar(path, timestamp=datetime(2021, 1, 1, tzinfo=timezone.utc), view_id=0)
        assert "constants" not in read_sidecar(path)

    def test_offset_timestamps_normalize_to_utc(self, tmp_path):
        path = tmp_path / "s.meta.json"
        path.write_text(json.dumps({"timestamp": "2021-06-21T23:00:00+08:00"}))
        assert read_sidecar(path)["timestamp"] == datetime(2021, 6, 21, 15, 0, tzinfo=timezone.utc)

    @pytest.mark.parametrize("payload", ["{not json", '["list"]', '{"timestamp": "yesterday"}'])
    def test_malformed_raises_format_error(self, tmp_path, payload):
        path = tmp_path / "bad.meta.json"
        path.write_text(payload)
        with pytest.raises(FormatError):
            read_sidecar(path)


class TestTemperatureExport:
    def field(self):
        kelvin = np.array([[300.0, np.nan], [310.5, 280.25]])
        valid = np.array([[True, False], [True, True]])
        return TemperatureField(kelvin=kelvin, valid=valid, emissivity_corrected=True)

    def test_tiff_is_float32_with_unit_tag(self, tmp_path):
        path = tmp_path / "t.tiff"
        write_temperature_tiff(self.field(), path, unit="kelvin")
        with Image.open(path) as im:
            assert im.mode == "F"
            assert "kelvin" in im.tag_v2[270]
            data = np.asarray(im)
        assert data[0, 0] == np.float32(300.0)
        assert np.isnan(data[0, 1])

    def test_csv_blanks_invalid_and_carries_unit(self, tmp_path):
        path = tmp_path / "t.csv"
        write_temperature_csv(self.field(), path, unit="celsius")
        text = path.read_text()
        assert text.startswith("# unit: celsius")
        rows = list(csv.reader(l for l in text.splitlines() if not l.startswith("#")))
        assert rows[0][1] == ""
        assert float(rows[0][0]) == pytest.approx(300.0 - 273.15)
        assert float(rows[1][1]) == pytest.approx(280.25 - 273.15)
