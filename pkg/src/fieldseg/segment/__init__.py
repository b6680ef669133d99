from .core import (
    Instance,
    InstanceMap,
    SegmentationParams,
    boundary_mask,
    extent_mask,
    extract_seeds,
    instance_features,
    instances_from_map,
    watershed_segment,
)
from .kernel import IMPLEMENTATION as KERNEL_IMPLEMENTATION

__all__ = [
    "Instance",
    "InstanceMap",
    "SegmentationParams",
    "boundary_mask",
    "extent_mask",
    "extract_seeds",
    "instance_features",
    "instances_from_map",
    "watershed_segment",
    "KERNEL_IMPLEMENTATION",
]
