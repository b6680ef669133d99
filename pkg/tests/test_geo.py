from datetime import date

import numpy as np
import pytest

from conftest import make_raster
from fieldseg.geo import (
    GeoTransform,
    ProbabilityRaster,
    RasterError,
    SiteRecord,
    chip_raster,
    mosaic_chips,
    pixel_area_ha,
    read_manifest,
    write_manifest,
)
from fieldseg.geotiff import read_raster, write_raster


class TestGeoTransform:
    def test_affine_invertible(self, transform):
        x, y = transform.pixel_to_map(12.5, 7.25)
        assert transform.map_to_pixel(x, y) == pytest.approx((12.5, 7.25))

    def test_positive_pixel_size_required(self):
        with pytest.raises(RasterError):
            GeoTransform(0, 0, -0.6, 0.6)

    def test_offset(self, transform):
        sub = transform.offset(0, 256)
        assert sub.origin_x == pytest.approx(600000 + 256 * 0.6)
        assert sub.origin_y == transform.origin_y


class TestPixelArea:
    def test_500_pixels_at_0p6m_is_180m2(self, transform):
        assert pixel_area_ha(500, transform) == pytest.approx(0.018)

    def test_zero(self, transform):
        assert pixel_area_ha(0, transform) == 0.0

    def test_10000_at_1m_is_one_ha(self, unit_transform):
        assert pixel_area_ha(10000, unit_transform) == pytest.approx(1.0)

    def test_negative_rejected(self, transform):
        with pytest.raises(ValueError):
            pixel_area_ha(-1, transform)


class TestProbabilityRaster:
    def test_out_of_range_rejected(self, unit_transform):
        with pytest.raises(RasterError):
            make_raster([[0.1, 1.5]], [[0.0, 0.0]], unit_transform)

    def test_nan_rejected(self, unit_transform):
        with pytest.raises(RasterError):
            make_raster([[0.1, np.nan]], [[0.0, 0.0]], unit_transform)

    def test_shape_mismatch_rejected(self, unit_transform):
        with pytest.raises(RasterError):
            ProbabilityRaster(
                unit_transform,
                np.zeros((2, 2), np.float32),
                np.zeros((3, 3), np.float32),
            )


class TestGeoTiffRoundTrip:
    def test_2x2_round_trip(self, transform, tmp_path):
        r = make_raster([[0.1, 0.2], [0.3, 0.4]], [[0.5, 0.6], [0.7, 0.8]], transform)
        path = tmp_path / "r.tif"
        write_raster(path, r)
        back = read_raster(path)
        assert np.array_equal(back.p_ext, r.p_ext)
        assert np.array_equal(back.p_bnd, r.p_bnd)
        assert back.transform == r.transform

    def test_out_of_range_file_rejected(self, transform, tmp_path):
        import tifffile

        from fieldseg.geotiff import _geo_tags

        path = tmp_path / "bad.tif"
        data = np.full((2, 2, 2), 1.5, dtype=np.float32)
        tifffile.imwrite(path, data, planarconfig="separate", extratags=_geo_tags(transform))
        with pytest.raises(RasterError):
            read_raster(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_raster(tmp_path / "nope.tif")

    def test_wrong_band_count(self, transform, tmp_path):
        import tifffile

        from fieldseg.geotiff import _geo_tags

        path = tmp_path / "three.tif"
        tifffile.imwrite(
            path,
            np.zeros((3, 2, 2), np.float32),
            planarconfig="separate",
            extratags=_geo_tags(transform),
        )
        with pytest.raises(RasterError):
            read_raster(path)

    def test_missing_georeferencing(self, tmp_path):
        import tifffile

        path = tmp_path / "plain.tif"
        tifffile.imwrite(path, np.zeros((2, 2, 2), np.float32), planarconfig="separate")
        with pytest.raises(RasterError):
            read_raster(path)

    def test_synthetic_1024_metadata(self, transform, tmp_path):
        rng = np.random.default_rng(0)
        r = make_raster(
            rng.random((1024, 1024)), rng.random((1024, 1024)), transform
        )
        path = tmp_path / "big.tif"
        write_raster(path, r)
        back = read_raster(path)
        assert back.width == 1024 and back.height == 1024
        assert back.transform.pixel_size_x == pytest.approx(0.6)


class TestChipping:
    def test_1024_gives_16_chips(self, transform):
        rng = np.random.default_rng(1)
        r = make_raster(rng.random((1024, 1024)), rng.random((1024, 1024)), transform)
        chips = chip_raster(r)
        assert len(chips) == 16

    def test_single_chip_identity(self, transform):
        rng = np.random.default_rng(2)
        r = make_raster(rng.random((256, 256)), rng.random((256, 256)), transform)
        (chip,) = chip_raster(r)
        assert np.array_equal(chip.raster.p_ext, r.p_ext)
        assert chip.raster.transform == r.transform

    def test_chip_origin_affine(self, transform):
        rng = np.random.default_rng(3)
        r = make_raster(rng.random((512, 512)), rng.random((512, 512)), transform)
        chips = chip_raster(r)
        chip01 = next(c for c in chips if c.row_index == 0 and c.col_index == 1)
        assert chip01.raster.transform.origin_x == pytest.approx(600153.6)

    def test_mosaic_bit_exact(self, transform):
        rng = np.random.default_rng(4)
        r = make_raster(rng.random((1024, 1024)), rng.random((1024, 1024)), transform)
        back = mosaic_chips(chip_raster(r))
        assert np.array_equal(back.p_ext, r.p_ext)
        assert np.array_equal(back.p_bnd, r.p_bnd)
        assert back.transform == r.transform

    def test_chip_transform_consistency(self, transform):
        rng = np.random.default_rng(5)
        r = make_raster(rng.random((512, 512)), rng.random((512, 512)), transform)
        for chip in chip_raster(r):
            assert chip.raster.transform.pixel_to_map(0, 0) == r.transform.pixel_to_map(
                chip.row_index * 256, chip.col_index * 256
            )

    def test_non_divisible_rejected(self, transform):
        r = make_raster(np.zeros((300, 300)), np.zeros((300, 300)), transform)
        with pytest.raises(RasterError):
            chip_raster(r)


class TestManifest:
    def test_round_trip(self, tmp_path):
        records = [
            SiteRecord("s1", date(2019, 7, 15), "Nampula", "train", "a.tif", "a.geojson"),
            SiteRecord("s2", date(2020, 1, 3), "Niassa", "test", "b.tif"),
        ]
        path = tmp_path / "manifest.jsonl"
        write_manifest(records, path)
        assert read_manifest(path) == records

    def test_duplicate_site_rejected(self, tmp_path):
        records = [
            SiteRecord("s1", date(2019, 7, 15), "Nampula", "train", "a.tif"),
            SiteRecord("s1", date(2019, 8, 15), "Nampula", "train", "b.tif"),
        ]
        path = tmp_path / "manifest.jsonl"
        write_manifest(records, path)
        with pytest.raises(ValueError):
            read_manifest(path)

    def test_bad_split_rejected(self):
        with pytest.raises(ValueError):
            SiteRecord("s1", date(2019, 7, 15), "Nampula", "holdout", "a.tif")
