"""Field instance generation from probability rasters.

Pipeline: threshold the extent probabilities into a cropland mask, take
low-boundary connected components inside the mask as seeds, then flood the
boundary-probability landscape upward from the seeds (min-max path
criterion). Mask regions containing no seed stay background.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from ..geo import GeoTransform, ProbabilityRaster, pixel_area_ha
from ..vector import pixels_to_polygon
from . import kernel

_STRUCT_4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
_STRUCT_8 = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class SegmentationParams:
    """Watershed hyperparameters; defaults follow the reference configuration."""

    t_bnd: float = 0.2
    t_ext: float = 0.4
    connectivity: int = 4

    def __post_init__(self):
        if not (0.0 <= self.t_bnd <= 1.0 and 0.0 <= self.t_ext <= 1.0):
            raise ValueError("thresholds must lie in [0, 1]")
        if self.connectivity not in (4, 8):
            raise ValueError("connectivity must be 4 or 8")


@dataclass(frozen=True)
class Instance:
    """One candidate field: a 4-connected pixel region."""

    instance_id: int
    rows: np.ndarray
    cols: np.ndarray
    boundary: np.ndarray  # bool per pixel, True where on the instance boundary
    centroid: tuple[float, float]
    area_ha: float

    @property
    def size_px(self) -> int:
        return len(self.rows)

    @property
    def boundary_rows(self) -> np.ndarray:
        return self.rows[self.boundary]

    @property
    def boundary_cols(self) -> np.ndarray:
        return self.cols[self.boundary]

    def polygon(self, transform: GeoTransform):
        return pixels_to_polygon(self.rows, self.cols, transform)


@dataclass(frozen=True)
class InstanceMap:
    """Per-pixel instance ids (0 = background) plus per-instance records."""

    transform: GeoTransform
    labels: np.ndarray
    instances: list[Instance] = field(default_factory=list)

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]


def extent_mask(raster: ProbabilityRaster, t_ext: float) -> np.ndarray:
    """Cropland mask: pixels with extent probability >= t_ext."""
    return raster.p_ext >= t_ext


def extract_seeds(
    raster: ProbabilityRaster,
    mask: np.ndarray,
    t_bnd: float,
    connectivity: int = 4,
) -> np.ndarray:
    """Label connected low-boundary components inside the mask.

    Components are numbered 1..K by the row-major position of their first
    pixel. Pixels with boundary probability exactly t_bnd do not seed.
    """
    seed_mask = mask & (raster.p_bnd < t_bnd)
    structure = _STRUCT_4 if connectivity == 4 else _STRUCT_8
    labeled, n = ndimage.label(seed_mask, structure=structure)
    if n == 0:
        return labeled.astype(np.int32)
    # Renumber components by first occurrence in scan order.
    flat = labeled.ravel()
    order = np.unique(flat[flat > 0], return_index=True)
    rank = np.argsort(np.argsort(order[1]))
    lut = np.zeros(n + 1, dtype=np.int32)
    lut[order[0]] = rank.astype(np.int32) + 1
    return lut[labeled]


def boundary_mask(labels: np.ndarray) -> np.ndarray:
    """Pixels with an 8-neighbor of a different label (grid edge is exterior)."""
    padded = np.full(
        (labels.shape[0] + 2, labels.shape[1] + 2), -1, dtype=labels.dtype
    )
    padded[1:-1, 1:-1] = labels
    out = np.zeros(labels.shape, dtype=bool)
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            if dr == 0 and dc == 0:
                continue
            shifted = padded[1 + dr : 1 + dr + labels.shape[0], 1 + dc : 1 + dc + labels.shape[1]]
            out |= shifted != labels
    out &= labels > 0
    return out


def instances_from_map(
    labels: np.ndarray, transform: GeoTransform
) -> list[Instance]:
    """Build per-instance records from a label grid."""
    n = int(labels.max()) if labels.size else 0
    if n == 0:
        return []
    on_boundary = boundary_mask(labels)
    flat = labels.ravel()
    order = np.argsort(flat, kind="stable")
    sorted_labels = flat[order]
    starts = np.searchsorted(sorted_labels, np.arange(1, n + 2))
    h, w = labels.shape
    instances = []
    for k in range(1, n + 1):
        idx = order[starts[k - 1] : starts[k]]
        if idx.size == 0:
            raise ValueError(f"instance ids are not dense: id {k} missing")
        rows, cols = np.divmod(idx, w)
        centroid = transform.pixel_to_map(
            float(rows.mean()) + 0.5, float(cols.mean()) + 0.5
        )
        instances.append(
            Instance(
                instance_id=k,
                rows=rows.astype(np.int32),
                cols=cols.astype(np.int32),
                boundary=on_boundary[rows, cols],
                centroid=centroid,
                area_ha=pixel_area_ha(idx.size, transform),
            )
        )
    return instances


def watershed_segment(
    raster: ProbabilityRaster, params: SegmentationParams = SegmentationParams()
) -> InstanceMap:
    """Segment a probability raster into field instances."""
    mask = extent_mask(raster, params.t_ext)
    seeds = extract_seeds(raster, mask, params.t_bnd, params.connectivity)
    labels = np.ascontiguousarray(seeds, dtype=np.int32)
    if labels.max() > 0:
        kernel.flood(
            np.ascontiguousarray(raster.p_bnd, dtype=np.float32),
            np.ascontiguousarray(mask),
            labels,
        )
    return InstanceMap(
        transform=raster.transform,
        labels=labels,
        instances=instances_from_map(labels, raster.transform),
    )


def instance_features(imap: InstanceMap) -> list[dict]:
    """GeoJSON-ready features (instance_id, size_px, area_ha) for an instance map."""
    return [
        {
            "geometry": inst.polygon(imap.transform),
            "properties": {
                "instance_id": inst.instance_id,
                "size_px": inst.size_px,
                "area_ha": inst.area_ha,
            },
        }
        for inst in imap.instances
    ]
