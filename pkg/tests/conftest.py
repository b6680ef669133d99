import numpy as np
import pytest

from fieldseg.geo import GeoTransform, ProbabilityRaster


@pytest.fixture
def transform():
    return GeoTransform(600000.0, 8500000.0, 0.6, 0.6, "EPSG:32737")


@pytest.fixture
def unit_transform():
    return GeoTransform(0.0, 0.0, 1.0, 1.0, "local")


def make_raster(p_ext, p_bnd, transform):
    return ProbabilityRaster(
        transform=transform,
        p_ext=np.asarray(p_ext, dtype=np.float32),
        p_bnd=np.asarray(p_bnd, dtype=np.float32),
    )


def synthetic_site(layout, shape, transform, p_in=0.95, p_out=0.05, ridge=0.9, low=0.05):
    """Render rectangles (r0, c0, r1, c1) into extent/boundary probabilities.

    The boundary ridge sits on each rectangle's one-pixel border ring.
    """
    h, w = shape
    p_ext = np.full((h, w), p_out, dtype=np.float32)
    p_bnd = np.full((h, w), low, dtype=np.float32)
    for r0, c0, r1, c1 in layout:
        p_ext[r0:r1, c0:c1] = p_in
        p_bnd[r0:r1, c0] = ridge
        p_bnd[r0:r1, c1 - 1] = ridge
        p_bnd[r0, c0:c1] = ridge
        p_bnd[r1 - 1, c0:c1] = ridge
    return make_raster(p_ext, p_bnd, transform)


def build_dataset(root, n_sites=3, size=256, seed=0):
    """Write a synthetic manifest + rasters + reference polygons under root."""
    import json
    from datetime import date

    import numpy as np

    from fieldseg.geo import GeoTransform, SiteRecord, write_manifest
    from fieldseg.geotiff import write_raster
    from fieldseg.vector import pixels_to_polygon, write_feature_collection

    rng = np.random.default_rng(seed)
    root.mkdir(parents=True, exist_ok=True)
    records = []
    layouts = {}
    for i in range(n_sites):
        site_id = f"site{i:03d}"
        gt = GeoTransform(600000.0 + i * 1000, 8500000.0, 0.6, 0.6, "EPSG:32737")
        n_fields = int(rng.integers(2, 5))
        layout = []
        grid = size // n_fields
        for k in range(n_fields):
            side = int(rng.integers(grid // 3, grid - 8))
            r0 = int(rng.integers(2, size - side - 2))
            c0 = k * grid + 4
            layout.append((r0, c0, r0 + side, c0 + side))
        raster = synthetic_site(layout, (size, size), gt)
        raster_path = root / f"{site_id}.tif"
        write_raster(raster_path, raster)
        feats = []
        for j, (r0, c0, r1, c1) in enumerate(layout):
            rows, cols = np.meshgrid(np.arange(r0, r1), np.arange(c0, c1), indexing="ij")
            feats.append({
                "geometry": pixels_to_polygon(rows.ravel(), cols.ravel(), gt),
                "properties": {"ref_id": f"{site_id}_f{j}"},
            })
        ref_path = root / f"{site_id}_ref.geojson"
        write_feature_collection(feats, ref_path)
        records.append(SiteRecord(
            site_id=site_id,
            acquisition_date=date(2019, 1 + i % 12, 15),
            province=["Nampula", "Niassa", "Zambezia", "Cabo Delgado"][i % 4],
            split="train",
            raster_path=str(raster_path),
            reference_path=str(ref_path),
        ))
        layouts[site_id] = layout
    manifest = root / "manifest.jsonl"
    write_manifest(records, manifest)
    return manifest, records, layouts
