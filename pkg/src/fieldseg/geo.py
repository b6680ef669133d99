"""Georeferenced grid types, chipping, and site manifests."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from datetime import date
from pathlib import Path

import numpy as np

VALID_SPLITS = ("train", "validation", "test", "unlabeled")


class RasterError(ValueError):
    """Raised for malformed raster data or georeferencing."""


@dataclass(frozen=True)
class GeoTransform:
    """Affine pixel-to-map mapping for a north-up grid.

    ``pixel_size_y`` is a positive magnitude; rows increase southward.
    """

    origin_x: float
    origin_y: float
    pixel_size_x: float
    pixel_size_y: float
    crs_id: str = ""

    def __post_init__(self):
        if self.pixel_size_x <= 0 or self.pixel_size_y <= 0:
            raise RasterError("pixel sizes must be positive")

    def pixel_to_map(self, row: float, col: float) -> tuple[float, float]:
        """Map coordinates of a (row, col) pixel position (pixel centers at +0.5)."""
        x = self.origin_x + col * self.pixel_size_x
        y = self.origin_y - row * self.pixel_size_y
        return x, y

    def map_to_pixel(self, x: float, y: float) -> tuple[float, float]:
        row = (self.origin_y - y) / self.pixel_size_y
        col = (x - self.origin_x) / self.pixel_size_x
        return row, col

    def offset(self, row_off: int, col_off: int) -> "GeoTransform":
        """Transform of a window whose pixel (0, 0) is parent pixel (row_off, col_off)."""
        x, y = self.pixel_to_map(row_off, col_off)
        return replace(self, origin_x=x, origin_y=y)


def pixel_area_ha(n_pixels: int, transform: GeoTransform) -> float:
    """Area in hectares covered by ``n_pixels`` grid cells."""
    if n_pixels < 0:
        raise ValueError("n_pixels must be >= 0")
    return n_pixels * transform.pixel_size_x * transform.pixel_size_y / 10_000.0


@dataclass(frozen=True)
class ProbabilityRaster:
    """Per-pixel field-extent and boundary probabilities on a shared grid."""

    transform: GeoTransform
    p_ext: np.ndarray
    p_bnd: np.ndarray

    def __post_init__(self):
        p_ext = np.asarray(self.p_ext, dtype=np.float32)
        p_bnd = np.asarray(self.p_bnd, dtype=np.float32)
        if p_ext.ndim != 2 or p_ext.shape != p_bnd.shape:
            raise RasterError("p_ext and p_bnd must be 2-D arrays of equal shape")
        for name, band in (("p_ext", p_ext), ("p_bnd", p_bnd)):
            if not np.all(np.isfinite(band)):
                raise RasterError(f"{name} contains non-finite values")
            if band.size and (band.min() < 0.0 or band.max() > 1.0):
                raise RasterError(f"{name} has values outside [0, 1]")
        object.__setattr__(self, "p_ext", p_ext)
        object.__setattr__(self, "p_bnd", p_bnd)
        self.p_ext.setflags(write=False)
        self.p_bnd.setflags(write=False)

    @property
    def height(self) -> int:
        return self.p_ext.shape[0]

    @property
    def width(self) -> int:
        return self.p_ext.shape[1]


@dataclass(frozen=True)
class Chip:
    """A square window of a parent raster, aligned to the chip grid."""

    parent_site_id: str
    row_index: int
    col_index: int
    raster: ProbabilityRaster


def chip_raster(
    raster: ProbabilityRaster, chip_size: int = 256, site_id: str = ""
) -> list[Chip]:
    """Tile a raster into chip_size x chip_size windows, row-major order.

    Raster dimensions must be integer multiples of ``chip_size``.
    """
    h, w = raster.height, raster.width
    if h % chip_size or w % chip_size:
        raise RasterError(
            f"raster {w}x{h} is not divisible into {chip_size}px chips"
        )
    chips = []
    for ri in range(h // chip_size):
        for ci in range(w // chip_size):
            r0, c0 = ri * chip_size, ci * chip_size
            window = ProbabilityRaster(
                transform=raster.transform.offset(r0, c0),
                p_ext=raster.p_ext[r0 : r0 + chip_size, c0 : c0 + chip_size],
                p_bnd=raster.p_bnd[r0 : r0 + chip_size, c0 : c0 + chip_size],
            )
            chips.append(Chip(site_id, ri, ci, window))
    return chips


def mosaic_chips(chips: list[Chip], chip_size: int = 256) -> ProbabilityRaster:
    """Reassemble row-major chips into the parent raster (inverse of chip_raster)."""
    if not chips:
        raise RasterError("no chips to mosaic")
    n_rows = max(c.row_index for c in chips) + 1
    n_cols = max(c.col_index for c in chips) + 1
    p_ext = np.zeros((n_rows * chip_size, n_cols * chip_size), dtype=np.float32)
    p_bnd = np.zeros_like(p_ext)
    origin = None
    for c in chips:
        r0, c0 = c.row_index * chip_size, c.col_index * chip_size
        p_ext[r0 : r0 + chip_size, c0 : c0 + chip_size] = c.raster.p_ext
        p_bnd[r0 : r0 + chip_size, c0 : c0 + chip_size] = c.raster.p_bnd
        if c.row_index == 0 and c.col_index == 0:
            origin = c.raster.transform
    if origin is None:
        raise RasterError("missing chip (0, 0)")
    return ProbabilityRaster(transform=origin, p_ext=p_ext, p_bnd=p_bnd)


@dataclass(frozen=True)
class SiteRecord:
    """One manifest entry: a site raster plus optional reference polygons."""

    site_id: str
    acquisition_date: date
    province: str
    split: str
    raster_path: str
    reference_path: str | None = None

    def __post_init__(self):
        if self.split not in VALID_SPLITS:
            raise ValueError(f"split must be one of {VALID_SPLITS}, got {self.split!r}")

    def to_json(self) -> str:
        rec = {
            "site_id": self.site_id,
            "acquisition_date": self.acquisition_date.isoformat(),
            "province": self.province,
            "split": self.split,
            "raster_path": self.raster_path,
        }
        if self.reference_path is not None:
            rec["reference_path"] = self.reference_path
        return json.dumps(rec, sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "SiteRecord":
        rec = json.loads(line)
        return cls(
            site_id=rec["site_id"],
            acquisition_date=date.fromisoformat(rec["acquisition_date"]),
            province=rec["province"],
            split=rec["split"],
            raster_path=rec["raster_path"],
            reference_path=rec.get("reference_path"),
        )


def read_manifest(path: str | Path) -> list[SiteRecord]:
    """Read a line-delimited site manifest; site_ids must be unique."""
    records = []
    seen = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        rec = SiteRecord.from_json(line)
        if rec.site_id in seen:
            raise ValueError(f"duplicate site_id {rec.site_id!r} in manifest")
        seen.add(rec.site_id)
        records.append(rec)
    return records


def write_manifest(records: list[SiteRecord], path: str | Path) -> None:
    Path(path).write_text(
        "".join(r.to_json() + "\n" for r in records), encoding="utf-8"
    )
