"""GeoJSON I/O, pixel-set polygonization, and polygon rasterization.

Pixel geometry convention: pixel (row, col) occupies the map-space square
spanned by grid corners (row, col) and (row+1, col+1); its center sits at
(row + 0.5, col + 0.5). Rasterization uses a pixel-center-in-polygon test,
which makes polygonize -> rasterize an exact round trip.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import shapely
from shapely.geometry import mapping, shape

from .geo import GeoTransform


def read_feature_collection(path: str | Path) -> list[dict]:
    """Read GeoJSON features as [{geometry: shapely geom, properties: dict}]."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("type") != "FeatureCollection":
        raise ValueError(f"{path}: not a GeoJSON FeatureCollection")
    return [
        {"geometry": shape(f["geometry"]), "properties": dict(f.get("properties") or {})}
        for f in doc["features"]
    ]


def write_feature_collection(features: list[dict], path: str | Path) -> None:
    """Write [{geometry, properties}] as a GeoJSON FeatureCollection.

    Output is deterministic (sorted keys, fixed separators) so repeated runs
    are byte-identical.
    """
    doc = {
        "type": "FeatureCollection",
        "features": [
            {
                "type": "Feature",
                "geometry": mapping(f["geometry"]),
                "properties": f["properties"],
            }
            for f in features
        ],
    }
    Path(path).write_text(
        json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n",
        encoding="utf-8",
    )


def pixels_to_polygon(rows: np.ndarray, cols: np.ndarray, transform: GeoTransform):
    """Union of pixel squares in map coordinates for one instance."""
    rows = np.asarray(rows)
    cols = np.asarray(cols)
    x0 = transform.origin_x + cols * transform.pixel_size_x
    x1 = x0 + transform.pixel_size_x
    y1 = transform.origin_y - rows * transform.pixel_size_y
    y0 = y1 - transform.pixel_size_y
    boxes = shapely.box(x0, y0, x1, y1)
    return shapely.union_all(boxes)


def rasterize_polygon(
    geom, shape_hw: tuple[int, int], transform: GeoTransform
) -> np.ndarray:
    """Boolean mask of pixels whose centers fall inside ``geom``."""
    h, w = shape_hw
    minx, miny, maxx, maxy = geom.bounds
    r0f, c0f = transform.map_to_pixel(minx, maxy)
    r1f, c1f = transform.map_to_pixel(maxx, miny)
    r0 = max(int(np.floor(r0f)), 0)
    c0 = max(int(np.floor(c0f)), 0)
    r1 = min(int(np.ceil(r1f)), h)
    c1 = min(int(np.ceil(c1f)), w)
    mask = np.zeros((h, w), dtype=bool)
    if r1 <= r0 or c1 <= c0:
        return mask
    rr, cc = np.meshgrid(
        np.arange(r0, r1) + 0.5, np.arange(c0, c1) + 0.5, indexing="ij"
    )
    xs = transform.origin_x + cc * transform.pixel_size_x
    ys = transform.origin_y - rr * transform.pixel_size_y
    shapely.prepare(geom)
    inside = shapely.contains_xy(geom, xs.ravel(), ys.ravel()).reshape(rr.shape)
    mask[r0:r1, c0:c1] = inside
    return mask


def polygon_centroid(geom) -> tuple[float, float]:
    """True area centroid in map coordinates."""
    c = geom.centroid
    return c.x, c.y
