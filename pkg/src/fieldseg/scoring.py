"""Instance confidence scoring and pseudo-label selection strategies.

Positive (field) selection uses strict > against absolute or per-site
percentile thresholds; negative (non-cropland) selection uses strict <.
Percentiles interpolate linearly between order statistics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geo import ProbabilityRaster
from .segment import Instance

ABSOLUTE_FIELD_THRESHOLDS = (0.925, 0.950, 0.975, 0.990)
NONCROP_ABSOLUTE_THRESHOLD = 0.75
MIN_FIELD_SIZE_PX = 500  # ~180 m^2 at 0.6 m pixels

#: The eight field strategies in the standard experiment order.
FIELD_STRATEGIES = (
    "abs_0.925",
    "abs_0.950",
    "abs_0.975",
    "abs_0.990",
    "p99_sem",
    "p99_sem_size",
    "p98_sem",
    "p95_sem_ins",
)
NEGATIVE_RULES = ("abs_075", "p10_sem", "p25_sem_ins")


@dataclass(frozen=True)
class InstanceScore:
    instance_id: int
    sem_c: float  # median extent probability over all instance pixels
    ins_c: float  # median boundary probability over boundary pixels
    size_px: int


@dataclass(frozen=True)
class SelectionStrategy:
    """Declarative positive/negative selection rule.

    kind: absolute | adaptive_sem | adaptive_sem_size | adaptive_sem_ins.
    """

    kind: str
    t_sem_c: float | None = None
    j: float | None = None
    t_size_px: int | None = None
    negative_rule: str = "p10_sem"

    def __post_init__(self):
        if self.kind == "absolute":
            if self.t_sem_c is None or not (0.0 <= self.t_sem_c <= 1.0):
                raise ValueError("absolute strategy needs t_sem_c in [0, 1]")
        elif self.kind in ("adaptive_sem", "adaptive_sem_size"):
            if self.j is None or not (0.0 < self.j < 100.0):
                raise ValueError("adaptive strategy needs percentile j in (0, 100)")
            if self.kind == "adaptive_sem_size" and self.t_size_px is None:
                raise ValueError("adaptive_sem_size needs t_size_px")
        elif self.kind != "adaptive_sem_ins":
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        if self.negative_rule not in NEGATIVE_RULES:
            raise ValueError(f"negative_rule must be one of {NEGATIVE_RULES}")

    @property
    def strategy_id(self) -> str:
        if self.kind == "absolute":
            return f"abs_{self.t_sem_c:.3f}"
        if self.kind == "adaptive_sem":
            return f"p{self.j:g}_sem"
        if self.kind == "adaptive_sem_size":
            return f"p{self.j:g}_sem_size"
        return "p95_sem_ins"


def strategy_from_id(strategy_id: str) -> SelectionStrategy:
    """Resolve a stable strategy identifier like abs_0.990 or p99_sem."""
    neg = {
        "absolute": "abs_075",
        "adaptive_sem": "p10_sem",
        "adaptive_sem_size": "p10_sem",
        "adaptive_sem_ins": "p25_sem_ins",
    }
    if strategy_id.startswith("abs_"):
        return SelectionStrategy(
            kind="absolute", t_sem_c=float(strategy_id[4:]), negative_rule=neg["absolute"]
        )
    if strategy_id == "p95_sem_ins":
        return SelectionStrategy(kind="adaptive_sem_ins", negative_rule=neg["adaptive_sem_ins"])
    if strategy_id.endswith("_sem_size") and strategy_id.startswith("p"):
        j = float(strategy_id[1 : -len("_sem_size")])
        return SelectionStrategy(
            kind="adaptive_sem_size", j=j, t_size_px=MIN_FIELD_SIZE_PX,
            negative_rule=neg["adaptive_sem_size"],
        )
    if strategy_id.endswith("_sem") and strategy_id.startswith("p"):
        j = float(strategy_id[1 : -len("_sem")])
        return SelectionStrategy(kind="adaptive_sem", j=j, negative_rule=neg["adaptive_sem"])
    raise ValueError(
        f"unknown strategy id {strategy_id!r}; valid ids: {', '.join(FIELD_STRATEGIES)}"
    )


def score_instance(instance: Instance, raster: ProbabilityRaster) -> InstanceScore:
    """Median extent probability over pixels, median boundary probability over
    boundary pixels. Even counts take the midpoint of the two central values."""
    if instance.size_px == 0:
        raise ValueError("cannot score an empty instance")
    ext_vals = raster.p_ext[instance.rows, instance.cols]
    bnd_vals = raster.p_bnd[instance.boundary_rows, instance.boundary_cols]
    return InstanceScore(
        instance_id=instance.instance_id,
        sem_c=float(np.median(ext_vals.astype(np.float64))),
        ins_c=float(np.median(bnd_vals.astype(np.float64))),
        size_px=instance.size_px,
    )


def site_percentile(values, j: float) -> float:
    """Linear-interpolation percentile of a nonempty score set."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("empty score set")
    if not (0.0 < j < 100.0):
        raise ValueError("percentile must lie in (0, 100)")
    return float(np.percentile(arr, j, method="linear"))


def select_absolute_fields(scores: list[InstanceScore], t_sem_c: float) -> list[int]:
    if not (0.0 <= t_sem_c <= 1.0):
        raise ValueError("t_sem_c must lie in [0, 1]")
    return [s.instance_id for s in scores if s.sem_c > t_sem_c]


def select_adaptive_fields(
    scores: list[InstanceScore], strategy: SelectionStrategy
) -> list[int]:
    """Per-site adaptive selection; percentiles computed over this score list."""
    if not scores:
        return []
    sem = [s.sem_c for s in scores]
    if strategy.kind == "adaptive_sem":
        cut = site_percentile(sem, strategy.j)
        return [s.instance_id for s in scores if s.sem_c > cut]
    if strategy.kind == "adaptive_sem_size":
        cut = site_percentile(sem, strategy.j)
        return [
            s.instance_id
            for s in scores
            if s.sem_c > cut and s.size_px > strategy.t_size_px
        ]
    if strategy.kind == "adaptive_sem_ins":
        sem_cut = site_percentile(sem, 95)
        ins_cut = site_percentile([s.ins_c for s in scores], 95)
        return [
            s.instance_id for s in scores if s.sem_c > sem_cut and s.ins_c > ins_cut
        ]
    raise ValueError(f"not an adaptive strategy: {strategy.kind}")


def select_fields(scores: list[InstanceScore], strategy: SelectionStrategy) -> list[int]:
    if strategy.kind == "absolute":
        return select_absolute_fields(scores, strategy.t_sem_c)
    return select_adaptive_fields(scores, strategy)


def select_noncrop(scores: list[InstanceScore], strategy: SelectionStrategy) -> list[int]:
    """Negative (non-cropland) selection; no minimum-size filter."""
    if not scores:
        return []
    rule = strategy.negative_rule
    if rule == "abs_075":
        return [s.instance_id for s in scores if s.sem_c < NONCROP_ABSOLUTE_THRESHOLD]
    sem = [s.sem_c for s in scores]
    if rule == "p10_sem":
        cut = site_percentile(sem, 10)
        return [s.instance_id for s in scores if s.sem_c < cut]
    if rule == "p25_sem_ins":
        sem_cut = site_percentile(sem, 25)
        ins_cut = site_percentile([s.ins_c for s in scores], 25)
        return [
            s.instance_id for s in scores if s.sem_c < sem_cut and s.ins_c < ins_cut
        ]
    raise ValueError(f"unknown negative rule {rule!r}")


@dataclass(frozen=True)
class LabelSetSummary:
    """Descriptive statistics of the field-class labels across sites."""

    total_n_fields: int
    mean_n_per_site: float
    max_n_per_site: int
    n_sites_ge5: int
    n_sites_0: int
    mean_ha: float
    median_ha: float
    sd_ha: float


def summarize_label_set(per_site_areas: dict[str, list[float]]) -> LabelSetSummary:
    """Summarize field labels given {site_id: [field areas in ha]}.

    Sites with zero labels count toward the mean denominator and n_sites_0.
    """
    if not per_site_areas:
        raise ValueError("site set is empty")
    counts = [len(a) for a in per_site_areas.values()]
    # Sorted so the statistics are invariant to site iteration order.
    areas = np.sort(
        np.array([ha for a in per_site_areas.values() for ha in a], dtype=np.float64)
    )
    return LabelSetSummary(
        total_n_fields=int(sum(counts)),
        mean_n_per_site=float(np.mean(counts)),
        max_n_per_site=int(max(counts)),
        n_sites_ge5=int(sum(c >= 5 for c in counts)),
        n_sites_0=int(sum(c == 0 for c in counts)),
        mean_ha=float(areas.mean()) if areas.size else 0.0,
        median_ha=float(np.median(areas)) if areas.size else 0.0,
        sd_ha=float(areas.std(ddof=0)) if areas.size else 0.0,
    )
