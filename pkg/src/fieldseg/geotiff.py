"""GeoTIFF read/write built on tifffile.

Probability rasters are two-band float32 (extent, boundary); instance maps
single-band int32; multi-task labels four-band float32. Georeferencing is
carried with the standard ModelPixelScale/ModelTiepoint tags, and the CRS
identifier as the GeoTIFF ASCII citation.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import tifffile

from .geo import GeoTransform, ProbabilityRaster, RasterError

_MODEL_PIXEL_SCALE = 33550
_MODEL_TIEPOINT = 33922
_GEO_KEY_DIRECTORY = 34735
_GEO_ASCII_PARAMS = 34737


def _geo_tags(transform: GeoTransform) -> list[tuple]:
    ascii_params = (transform.crs_id or "") + "|"
    # Minimal key directory: version 1.1.0, one key (GTCitationGeoKey -> ascii params).
    key_dir = (1, 1, 0, 1, 1026, _GEO_ASCII_PARAMS, len(ascii_params), 0)
    return [
        (_MODEL_PIXEL_SCALE, "d", 3, (transform.pixel_size_x, transform.pixel_size_y, 0.0)),
        (_MODEL_TIEPOINT, "d", 6, (0.0, 0.0, 0.0, transform.origin_x, transform.origin_y, 0.0)),
        (_GEO_KEY_DIRECTORY, "H", len(key_dir), key_dir),
        (_GEO_ASCII_PARAMS, "s", len(ascii_params), ascii_params),
    ]


def _read_transform(page: tifffile.TiffPage) -> GeoTransform:
    tags = page.tags
    if _MODEL_PIXEL_SCALE not in tags or _MODEL_TIEPOINT not in tags:
        raise RasterError("file has no georeferencing tags")
    sx, sy, _ = tags[_MODEL_PIXEL_SCALE].value
    tp = tags[_MODEL_TIEPOINT].value
    crs_id = ""
    if _GEO_ASCII_PARAMS in tags:
        crs_id = str(tags[_GEO_ASCII_PARAMS].value).rstrip("|").rstrip("\x00")
    return GeoTransform(
        origin_x=float(tp[3]),
        origin_y=float(tp[4]),
        pixel_size_x=float(sx),
        pixel_size_y=float(sy),
        crs_id=crs_id,
    )


def write_bands(path: str | Path, bands: np.ndarray, transform: GeoTransform) -> None:
    """Write a (n_bands, H, W) array as a planar GeoTIFF."""
    bands = np.ascontiguousarray(bands)
    kwargs = {}
    if bands.ndim == 3 and bands.shape[0] == 1:
        bands = bands[0]
    if bands.ndim == 3:
        kwargs["planarconfig"] = "separate"
    tifffile.imwrite(
        str(path),
        bands,
        photometric="minisblack",
        extratags=_geo_tags(transform),
        **kwargs,
    )


def read_bands(path: str | Path) -> tuple[np.ndarray, GeoTransform]:
    """Read a planar GeoTIFF back as ((n_bands, H, W), transform)."""
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(str(p))
    with tifffile.TiffFile(str(p)) as tif:
        data = tif.asarray()
        transform = _read_transform(tif.pages[0])
    if data.ndim == 2:
        data = data[None]
    return data, transform


def write_raster(path: str | Path, raster: ProbabilityRaster) -> None:
    """Persist a probability raster as a 2-band float32 GeoTIFF (extent, boundary)."""
    write_bands(
        path,
        np.stack([raster.p_ext, raster.p_bnd]).astype(np.float32),
        raster.transform,
    )


def read_raster(path: str | Path) -> ProbabilityRaster:
    """Read a 2-band probability GeoTIFF; out-of-range values are an error."""
    data, transform = read_bands(path)
    if data.shape[0] != 2:
        raise RasterError(f"expected 2 bands (extent, boundary), got {data.shape[0]}")
    return ProbabilityRaster(
        transform=transform,
        p_ext=data[0].astype(np.float32),
        p_bnd=data[1].astype(np.float32),
    )


def write_label_grid(path: str | Path, labels: np.ndarray, transform: GeoTransform) -> None:
    """Write an integer instance-id grid as a single-band int32 GeoTIFF."""
    write_bands(path, labels.astype(np.int32), transform)


def read_label_grid(path: str | Path) -> tuple[np.ndarray, GeoTransform]:
    data, transform = read_bands(path)
    return data[0].astype(np.int32), transform
