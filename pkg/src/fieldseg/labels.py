"""Multi-task training label rasters and chip/split preparation.

Each label set rasterizes to four aligned grids: field extent, field
boundaries, normalized within-field distance to the nearest boundary, and a
validity mask marking annotated regions (fields plus non-cropland patches)
for sparse supervision.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .geo import GeoTransform
from .segment.core import boundary_mask
from .vector import rasterize_polygon


@dataclass(frozen=True)
class MultiTaskLabel:
    transform: GeoTransform
    extent: np.ndarray  # uint8, 1 = field pixel
    boundary: np.ndarray  # uint8, 1 = boundary pixel of a field instance
    distance: np.ndarray  # float32 in [0, 1], 0 outside fields and on boundaries
    valid: np.ndarray  # uint8, 1 = annotated (field or non-cropland)

    def bands(self) -> np.ndarray:
        return np.stack(
            [
                self.extent.astype(np.float32),
                self.boundary.astype(np.float32),
                self.distance.astype(np.float32),
                self.valid.astype(np.float32),
            ]
        )


class LabelOverlapError(ValueError):
    """Two field geometries claimed the same pixel."""


def label_grid_from_features(
    features: list[dict], shape_hw: tuple[int, int], transform: GeoTransform
) -> np.ndarray:
    """Rasterize field polygons into an instance-id grid (pixel-center test)."""
    labels = np.zeros(shape_hw, dtype=np.int32)
    for k, feat in enumerate(features, start=1):
        mask = rasterize_polygon(feat["geometry"], shape_hw, transform)
        clash = mask & (labels > 0)
        if clash.any():
            raise LabelOverlapError(
                f"field geometry {k} overlaps an earlier field on "
                f"{int(clash.sum())} pixels"
            )
        labels[mask] = k
    return labels


def distance_grid(labels: np.ndarray) -> np.ndarray:
    """Per-instance normalized Euclidean distance to the nearest boundary pixel.

    Boundary pixels and background are 0; each instance with interior pixels
    has its distances divided by the instance maximum, so max = 1.
    """
    out = np.zeros(labels.shape, dtype=np.float32)
    n = int(labels.max()) if labels.size else 0
    if n == 0:
        return out
    on_boundary = boundary_mask(labels)
    objects = ndimage.find_objects(labels)
    for k in range(1, n + 1):
        sl = objects[k - 1]
        if sl is None:
            continue
        # Pad by one pixel so the EDT is not clipped by the bounding box.
        rs = slice(max(sl[0].start - 1, 0), min(sl[0].stop + 1, labels.shape[0]))
        cs = slice(max(sl[1].start - 1, 0), min(sl[1].stop + 1, labels.shape[1]))
        inst = labels[rs, cs] == k
        bnd = on_boundary[rs, cs] & inst
        if not bnd.any():
            continue
        dist = ndimage.distance_transform_edt(~bnd)
        dist = np.where(inst, dist, 0.0)
        peak = dist.max()
        if peak > 0:
            out[rs, cs] = np.where(inst, dist / peak, out[rs, cs])
    return out


def rasterize_labels(
    features: list[dict], shape_hw: tuple[int, int], transform: GeoTransform
) -> MultiTaskLabel:
    """Rasterize a label set (field + non-cropland features) to training grids.

    Features carry a "class" property of "field" or "non_cropland".
    Overlapping field geometries are an error.
    """
    field_feats = [f for f in features if f["properties"].get("class", "field") == "field"]
    noncrop_feats = [f for f in features if f["properties"].get("class") == "non_cropland"]
    labels = label_grid_from_features(field_feats, shape_hw, transform)
    extent = (labels > 0).astype(np.uint8)
    boundary = boundary_mask(labels).astype(np.uint8)
    distance = distance_grid(labels)
    valid = extent.copy()
    for feat in noncrop_feats:
        valid |= rasterize_polygon(feat["geometry"], shape_hw, transform).astype(np.uint8)
    return MultiTaskLabel(
        transform=transform,
        extent=extent,
        boundary=boundary,
        distance=distance,
        valid=valid,
    )


@dataclass(frozen=True)
class LabelChip:
    site_id: str
    row_index: int
    col_index: int
    label: MultiTaskLabel

    @property
    def has_fields(self) -> bool:
        return bool(self.label.extent.any())


def chip_labels(
    label: MultiTaskLabel, site_id: str, chip_size: int = 256
) -> list[LabelChip]:
    """Tile a multi-task label raster into chips, row-major order."""
    h, w = label.extent.shape
    if h % chip_size or w % chip_size:
        raise ValueError(f"label grid {w}x{h} not divisible by {chip_size}")
    chips = []
    for ri in range(h // chip_size):
        for ci in range(w // chip_size):
            r0, c0 = ri * chip_size, ci * chip_size
            win = (slice(r0, r0 + chip_size), slice(c0, c0 + chip_size))
            chips.append(
                LabelChip(
                    site_id,
                    ri,
                    ci,
                    MultiTaskLabel(
                        transform=label.transform.offset(r0, c0),
                        extent=label.extent[win],
                        boundary=label.boundary[win],
                        distance=label.distance[win],
                        valid=label.valid[win],
                    ),
                )
            )
    return chips


def filter_chips(chips: list[LabelChip]) -> list[LabelChip]:
    """Keep only chips containing at least one field pixel."""
    return [c for c in chips if c.has_fields]


def split_sites(
    site_ids: list[str], train_fraction: float = 0.7, rng_seed: int = 0
) -> tuple[list[str], list[str]]:
    """Deterministic site-level train/validation split.

    Shuffles under the seed and sends the first round(fraction * n) sites to
    the training set.
    """
    if not site_ids:
        raise ValueError("no sites to split")
    if not (0.0 < train_fraction < 1.0):
        raise ValueError("train_fraction must lie in (0, 1)")
    order = list(site_ids)
    random.Random(rng_seed).shuffle(order)
    n_train = round(train_fraction * len(order))
    return order[:n_train], order[n_train:]
