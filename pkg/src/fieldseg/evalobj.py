"""Object-level agreement between predicted instances and reference fields.

References are matched to the predicted instance containing their area
centroid; each reference is scored independently, and unmatched references
keep zero scores so they depress the aggregates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geo import pixel_area_ha
from .segment import InstanceMap
from .vector import polygon_centroid, rasterize_polygon

SIZE_BIN_EDGES_HA = (0.001, 0.01, 0.1, 1.0, 1.4)


@dataclass(frozen=True)
class FieldMatch:
    ref_id: str
    pred_id: int | None
    iou: float
    precision: float
    recall: float
    dice: float
    ref_area_ha: float
    pred_area_ha: float = 0.0
    season: str = ""
    province: str = ""


@dataclass(frozen=True)
class AggregateScores:
    mean_iou: float
    median_iou: float
    iou50: float  # share of matches with IoU strictly above 0.5
    iou80: float
    mean_dice: float
    mean_precision: float
    mean_recall: float
    n: int


def pair_scores(
    pred_pixels: set | np.ndarray, ref_pixels: set | np.ndarray
) -> tuple[float, float, float, float]:
    """(iou, precision, recall, dice) between two nonempty pixel sets."""
    pred = set(map(tuple, pred_pixels)) if not isinstance(pred_pixels, set) else pred_pixels
    ref = set(map(tuple, ref_pixels)) if not isinstance(ref_pixels, set) else ref_pixels
    if not pred or not ref:
        raise ValueError("pixel sets must be nonempty")
    inter = len(pred & ref)
    union = len(pred) + len(ref) - inter
    iou = inter / union
    precision = inter / len(pred)
    recall = inter / len(ref)
    dice = 2 * inter / (len(pred) + len(ref))
    return iou, precision, recall, dice


def match_by_centroid(
    pred: InstanceMap,
    refs: list[dict],
    season: str = "",
    province: str = "",
) -> list[FieldMatch]:
    """Match each reference polygon to the instance owning its centroid pixel."""
    transform = pred.transform
    pred_sizes = np.bincount(pred.labels.ravel(), minlength=int(pred.labels.max()) + 1)
    matches = []
    for idx, feat in enumerate(refs):
        geom = feat["geometry"]
        props = feat["properties"]
        ref_id = str(props.get("ref_id", idx))
        cx, cy = polygon_centroid(geom)
        rowf, colf = transform.map_to_pixel(cx, cy)
        row, col = int(math.floor(rowf)), int(math.floor(colf))
        if not (0 <= row < pred.height and 0 <= col < pred.width):
            raise ValueError(f"reference {ref_id}: centroid outside raster bounds")
        ref_mask = rasterize_polygon(geom, pred.labels.shape, transform)
        ref_area = pixel_area_ha(int(ref_mask.sum()), transform)
        pred_id = int(pred.labels[row, col])
        if pred_id == 0:
            matches.append(
                FieldMatch(ref_id, None, 0.0, 0.0, 0.0, 0.0, ref_area, 0.0, season, province)
            )
            continue
        pred_mask = pred.labels == pred_id
        inter = int((pred_mask & ref_mask).sum())
        n_pred = int(pred_sizes[pred_id])
        n_ref = int(ref_mask.sum())
        union = n_pred + n_ref - inter
        matches.append(
            FieldMatch(
                ref_id=ref_id,
                pred_id=pred_id,
                iou=inter / union if union else 0.0,
                precision=inter / n_pred if n_pred else 0.0,
                recall=inter / n_ref if n_ref else 0.0,
                dice=2 * inter / (n_pred + n_ref) if n_pred + n_ref else 0.0,
                ref_area_ha=ref_area,
                pred_area_ha=pixel_area_ha(n_pred, transform),
                season=season,
                province=province,
            )
        )
    return matches


def aggregate(matches: list[FieldMatch]) -> AggregateScores:
    if not matches:
        raise ValueError("no matches to aggregate")
    ious = np.array([m.iou for m in matches], dtype=np.float64)
    return AggregateScores(
        mean_iou=float(ious.mean()),
        median_iou=float(np.median(ious)),
        iou50=float((ious > 0.5).mean()),
        iou80=float((ious > 0.8).mean()),
        mean_dice=float(np.mean([m.dice for m in matches])),
        mean_precision=float(np.mean([m.precision for m in matches])),
        mean_recall=float(np.mean([m.recall for m in matches])),
        n=len(matches),
    )


def _size_bin(area_ha: float) -> str:
    edges = SIZE_BIN_EDGES_HA
    for lo, hi in zip(edges, edges[1:]):
        if area_ha <= hi:
            return f"({lo}, {hi}] ha"
    return f"> {edges[-1]} ha"


def breakdown(matches: list[FieldMatch], by: str) -> dict[str, AggregateScores]:
    """Aggregate scores grouped by size_bins, season, or province."""
    keyers = {
        "size_bins": lambda m: _size_bin(m.ref_area_ha),
        "season": lambda m: m.season,
        "province": lambda m: m.province,
    }
    if by not in keyers:
        raise ValueError(f"unknown grouping key {by!r}; use one of {sorted(keyers)}")
    groups: dict[str, list[FieldMatch]] = {}
    for m in matches:
        groups.setdefault(keyers[by](m), []).append(m)
    return {k: aggregate(v) for k, v in sorted(groups.items())}


def relative_gain(score_pseudo: float, score_baseline: float, score_human: float) -> float:
    """Gain of a pseudo-label score relative to the human-label gain, in percent."""
    denom = score_human - score_baseline
    if denom == 0:
        raise ZeroDivisionError("human and baseline scores are equal")
    return (score_pseudo - score_baseline) / denom * 100.0
