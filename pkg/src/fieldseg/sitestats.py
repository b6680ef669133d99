"""Site-level statistics: field-size errors, regression diagnostics, global
Moran's I with permutation significance, seasonal tests, and non-cropland
pixel metrics."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date

import numpy as np
from scipy import stats
from scipy.spatial import cKDTree

from .evalobj import FieldMatch


@dataclass(frozen=True)
class SiteSizeErrors:
    site_id: str
    rmse_ha: float
    mae_ha: float
    me_ha: float
    n_pairs: int


@dataclass(frozen=True)
class FleetStats:
    mean_rmse: float
    median_rmse: float
    mean_mae: float
    mean_me: float
    n_sites: int


@dataclass(frozen=True)
class RegressionFit:
    r2: float
    slope: float
    intercept: float
    n: int


@dataclass(frozen=True)
class MoranResult:
    i: float
    expected: float
    p_value: float
    n: int
    k: int


@dataclass(frozen=True)
class NonCropMetrics:
    overall_accuracy: float
    precision: float
    recall: float
    f1: float
    no_positive_predictions: bool = False


def size_errors(site_id: str, matches: list[FieldMatch]) -> SiteSizeErrors:
    """Field-size errors at one site over (predicted - reference) areas.

    Unmatched references count as predicted area 0.
    """
    if not matches:
        raise ValueError(f"site {site_id}: no reference fields")
    errors = np.array(
        [m.pred_area_ha - m.ref_area_ha for m in matches], dtype=np.float64
    )
    return SiteSizeErrors(
        site_id=site_id,
        rmse_ha=float(np.sqrt(np.mean(errors**2))),
        mae_ha=float(np.mean(np.abs(errors))),
        me_ha=float(np.mean(errors)),
        n_pairs=len(errors),
    )


def fleet_stats(per_site: list[SiteSizeErrors]) -> FleetStats:
    """Unweighted means and median across sites."""
    if not per_site:
        raise ValueError("no site-level error records")
    rmse = np.array([s.rmse_ha for s in per_site])
    return FleetStats(
        mean_rmse=float(rmse.mean()),
        median_rmse=float(np.median(rmse)),
        mean_mae=float(np.mean([s.mae_ha for s in per_site])),
        mean_me=float(np.mean([s.me_ha for s in per_site])),
        n_sites=len(per_site),
    )


def fit_regression(observed, predicted) -> RegressionFit:
    """OLS of predicted on observed; r2 is the squared Pearson correlation."""
    obs = np.asarray(observed, dtype=np.float64)
    pred = np.asarray(predicted, dtype=np.float64)
    if obs.shape != pred.shape or obs.size < 3:
        raise ValueError("need >= 3 paired observations")
    if np.var(obs) == 0:
        raise ValueError("observed values have zero variance")
    slope = float(np.cov(obs, pred, ddof=0)[0, 1] / np.var(obs))
    intercept = float(pred.mean() - slope * obs.mean())
    if np.var(pred) == 0:
        r2 = 0.0
    else:
        r2 = float(np.corrcoef(obs, pred)[0, 1] ** 2)
    return RegressionFit(r2=r2, slope=slope, intercept=intercept, n=obs.size)


def _knn_weights(coords: np.ndarray, k: int) -> np.ndarray:
    """Row-standardized k-nearest-neighbor weight matrix."""
    n = len(coords)
    tree = cKDTree(coords)
    _, idx = tree.query(coords, k=k + 1)
    w = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        neighbors = [j for j in idx[i] if j != i][:k]
        w[i, neighbors] = 1.0 / len(neighbors)
    return w


def _moran_stat(z: np.ndarray, w: np.ndarray) -> float:
    n = len(z)
    s0 = w.sum()
    return float((n / s0) * (z @ w @ z) / (z @ z))


def morans_i(
    values,
    coords,
    k: int = 8,
    n_permutations: int = 999,
    rng_seed: int = 0,
) -> MoranResult:
    """Global Moran's I with row-standardized kNN weights and permutation p.

    Two-sided p-value: (1 + #{permuted |I| >= |I_obs|}) / (1 + n_permutations).
    """
    vals = np.asarray(values, dtype=np.float64)
    pts = np.asarray(coords, dtype=np.float64)
    n = len(vals)
    if n < 4:
        raise ValueError("Moran's I needs at least 4 sites")
    if np.var(vals) == 0:
        raise ValueError("values are constant; Moran's I undefined")
    k = min(k, n - 1)
    w = _knn_weights(pts, k)
    z = vals - vals.mean()
    i_obs = _moran_stat(z, w)
    rng = np.random.default_rng(rng_seed)
    hits = 0
    for _ in range(n_permutations):
        zp = rng.permutation(z)
        if abs(_moran_stat(zp, w)) >= abs(i_obs):
            hits += 1
    return MoranResult(
        i=i_obs,
        expected=-1.0 / (n - 1),
        p_value=(1 + hits) / (1 + n_permutations),
        n=n,
        k=k,
    )


def season_of(d: date) -> str:
    """dry = June through November, wet = December through May."""
    return "dry" if 6 <= d.month <= 11 else "wet"


def two_tailed_t_test(sample_a, sample_b) -> float:
    """Welch's unequal-variance two-tailed t-test p-value."""
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if len(a) < 2 or len(b) < 2:
        raise ValueError("each sample needs at least 2 values")
    if np.var(a) == 0 and np.var(b) == 0:
        if a.mean() == b.mean():
            return 1.0
        raise ValueError("both samples constant with different means")
    t, p = stats.ttest_ind(a, b, equal_var=False)
    if np.isnan(p):  # identical samples -> zero t
        return 1.0
    return float(p)


def noncrop_pixel_metrics(
    predicted_noncrop: np.ndarray,
    reference_noncrop: np.ndarray,
    reference_valid: np.ndarray,
) -> NonCropMetrics:
    """Pixel metrics for one image, non-cropland as positive class.

    Evaluation is restricted to annotated reference pixels (``reference_valid``).
    Precision is 0 (flagged) when no non-cropland is predicted.
    """
    valid = reference_valid.astype(bool)
    if not valid.any():
        raise ValueError("empty reference: no annotated pixels")
    pred = predicted_noncrop.astype(bool)[valid]
    ref = reference_noncrop.astype(bool)[valid]
    tp = int((pred & ref).sum())
    fp = int((pred & ~ref).sum())
    fn = int((~pred & ref).sum())
    tn = int((~pred & ~ref).sum())
    no_pos = (tp + fp) == 0
    precision = 0.0 if no_pos else tp / (tp + fp)
    recall = tp / (tp + fn) if (tp + fn) else 0.0
    f1 = 2 * precision * recall / (precision + recall) if (precision + recall) else 0.0
    return NonCropMetrics(
        overall_accuracy=(tp + tn) / (tp + tn + fp + fn),
        precision=precision,
        recall=recall,
        f1=f1,
        no_positive_predictions=no_pos,
    )


def mean_noncrop_metrics(per_image: list[NonCropMetrics]) -> NonCropMetrics:
    """Unweighted across-image means of the pixel metrics."""
    if not per_image:
        raise ValueError("no per-image metrics")
    return NonCropMetrics(
        overall_accuracy=float(np.mean([m.overall_accuracy for m in per_image])),
        precision=float(np.mean([m.precision for m in per_image])),
        recall=float(np.mean([m.recall for m in per_image])),
        f1=float(np.mean([m.f1 for m in per_image])),
        no_positive_predictions=any(m.no_positive_predictions for m in per_image),
    )
