"""fieldseg: field instance generation, pseudo-label selection, and
delineation evaluation for probability rasters."""

from .geo import (
    Chip,
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
from .geotiff import read_raster, write_raster
from .segment import (
    Instance,
    InstanceMap,
    SegmentationParams,
    watershed_segment,
)

__version__ = "0.1.0"
