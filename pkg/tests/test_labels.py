import numpy as np
import pytest

from fieldseg.labels import (
    LabelOverlapError,
    MultiTaskLabel,
    chip_labels,
    distance_grid,
    filter_chips,
    label_grid_from_features,
    rasterize_labels,
    split_sites,
)
from fieldseg.segment import instances_from_map
from fieldseg.vector import pixels_to_polygon


def square_feature(r0, c0, size, transform, cls="field"):
    rows, cols = np.meshgrid(
        np.arange(r0, r0 + size), np.arange(c0, c0 + size), indexing="ij"
    )
    return {
        "geometry": pixels_to_polygon(rows.ravel(), cols.ravel(), transform),
        "properties": {"class": cls},
    }


class TestRasterize:
    def test_empty_label_set(self, unit_transform):
        label = rasterize_labels([], (8, 8), unit_transform)
        for grid in (label.extent, label.boundary, label.distance, label.valid):
            assert not grid.any()

    def test_3x3_field(self, unit_transform):
        label = rasterize_labels(
            [square_feature(1, 1, 3, unit_transform)], (5, 5), unit_transform
        )
        assert label.extent.sum() == 9
        assert label.boundary.sum() == 8
        assert label.distance[2, 2] == pytest.approx(1.0)
        assert label.distance.sum() == pytest.approx(1.0)  # only the center is interior

    def test_5x5_field_distance_rings(self, unit_transform):
        label = rasterize_labels(
            [square_feature(1, 1, 5, unit_transform)], (7, 7), unit_transform
        )
        assert label.extent.sum() == 25
        assert label.boundary.sum() == 16
        interior = label.distance[2:5, 2:5]
        assert interior[1, 1] == pytest.approx(1.0)
        ring1 = [interior[0, 0], interior[0, 2], interior[2, 0], interior[2, 2],
                 interior[0, 1], interior[1, 0], interior[1, 2], interior[2, 1]]
        assert all(v == pytest.approx(0.5) for v in ring1)
        # perimeter ring is boundary, distance 0
        assert (label.distance[1, 1:6] == 0).all()

    def test_boundary_subset_of_extent(self, unit_transform):
        rng = np.random.default_rng(0)
        for _ in range(20):
            feats = [
                square_feature(
                    int(rng.integers(0, 10)) * 2, int(rng.integers(0, 10)) * 2, 1, unit_transform
                )
            ]
            label = rasterize_labels(feats, (24, 24), unit_transform)
            assert not (label.boundary.astype(bool) & ~label.extent.astype(bool)).any()
            assert (label.distance[label.extent == 0] == 0).all()
            assert label.distance.min() >= 0 and label.distance.max() <= 1

    def test_overlap_rejected(self, unit_transform):
        feats = [
            square_feature(1, 1, 4, unit_transform),
            square_feature(2, 2, 4, unit_transform),
        ]
        with pytest.raises(LabelOverlapError):
            rasterize_labels(feats, (8, 8), unit_transform)

    def test_noncrop_enters_valid_not_extent(self, unit_transform):
        feats = [
            square_feature(1, 1, 3, unit_transform),
            square_feature(5, 5, 2, unit_transform, cls="non_cropland"),
        ]
        label = rasterize_labels(feats, (8, 8), unit_transform)
        assert label.extent.sum() == 9
        assert label.valid.sum() == 9 + 4

    def test_rasterize_polygonize_round_trip(self, unit_transform):
        rng = np.random.default_rng(3)
        for _ in range(30):
            labels = np.zeros((20, 20), dtype=np.int32)
            placed = 0
            for k in range(1, 4):
                r0, c0 = rng.integers(0, 14, 2)
                hh, ww = rng.integers(1, 6, 2)
                if labels[r0 : r0 + hh, c0 : c0 + ww].any():
                    continue
                labels[r0 : r0 + hh, c0 : c0 + ww] = k
                placed += 1
            insts = instances_from_map(_dense(labels), unit_transform)
            feats = [
                {"geometry": inst.polygon(unit_transform), "properties": {"class": "field"}}
                for inst in insts
            ]
            grid = label_grid_from_features(feats, labels.shape, unit_transform)
            want = _dense(labels)
            assert np.array_equal(grid > 0, want > 0)


def _dense(labels):
    """Renumber nonzero labels to 1..K in first-occurrence order."""
    out = np.zeros_like(labels)
    next_id = 1
    for k in np.unique(labels[labels > 0]):
        out[labels == k] = next_id
        next_id += 1
    return out


class TestChips:
    def _label(self, unit_transform, n=512):
        feats = [square_feature(10, 10, 20, unit_transform)]
        return rasterize_labels(feats, (n, n), unit_transform)

    def test_chip_filtering(self, unit_transform):
        label = self._label(unit_transform)
        chips = chip_labels(label, "site1")
        assert len(chips) == 4
        kept = filter_chips(chips)
        assert len(kept) == 1
        assert kept[0].row_index == 0 and kept[0].col_index == 0

    def test_full_cover_kept(self, unit_transform):
        feats = [square_feature(0, 0, 256, unit_transform)]
        label = rasterize_labels(feats, (256, 256), unit_transform)
        assert len(filter_chips(chip_labels(label, "s"))) == 1

    def test_touched_chip_count(self, unit_transform):
        feats = [
            square_feature(10, 10, 30, unit_transform),          # chip (0,0)
            square_feature(300, 300, 30, unit_transform),        # chip (1,1)
            square_feature(250, 250, 20, unit_transform),        # spans 4 chips
        ]
        label = rasterize_labels(feats, (512, 512), unit_transform)
        kept = filter_chips(chip_labels(label, "s"))
        assert len(kept) == 4  # (0,0), (1,1) and the two half-covered ones


class TestSplit:
    def test_200_sites_70_30(self):
        sites = [f"s{i:03d}" for i in range(200)]
        train, val = split_sites(sites, 0.7, rng_seed=13)
        assert len(train) == 140 and len(val) == 60
        assert set(train) | set(val) == set(sites)
        assert not set(train) & set(val)

    def test_single_site(self):
        train, val = split_sites(["only"], 0.7, rng_seed=0)
        assert train == ["only"] and val == []

    def test_deterministic(self):
        sites = [f"s{i}" for i in range(57)]
        assert split_sites(sites, 0.7, 99) == split_sites(sites, 0.7, 99)

    def test_bad_fraction(self):
        with pytest.raises(ValueError):
            split_sites(["a"], 1.5)
