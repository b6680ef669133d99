"""Manifest-driven batch orchestration of the pipeline stages.

Every stage writes per-site artifacts under ``<out>/<stage>/<site_id>/`` and
is resumable: a sidecar marker stores the hash of the stage configuration and
inputs, and matching work is skipped on re-runs. Artifacts are written
atomically (temp file + rename) and deterministically, so outputs are
byte-identical across runs and worker counts.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import geotiff, scoring, sitestats
from .evalobj import aggregate, match_by_centroid
from .geo import SiteRecord, read_manifest
from .labels import chip_labels, filter_chips, rasterize_labels, split_sites
from .scoring import (
    FIELD_STRATEGIES,
    InstanceScore,
    select_fields,
    select_noncrop,
    strategy_from_id,
    summarize_label_set,
)
from .segment import (
    SegmentationParams,
    instance_features,
    instances_from_map,
    watershed_segment,
)
from .segment.core import InstanceMap
from .sitestats import fleet_stats, season_of, size_errors
from .vector import read_feature_collection, write_feature_collection

STAGES = ("segment", "score", "select", "labels", "eval-object", "eval-site", "summarize")


class PipelineError(RuntimeError):
    """Data or prerequisite error during a stage run."""


@dataclass
class PipelineConfig:
    manifest_path: str
    output_dir: str
    t_bnd: float = 0.2
    t_ext: float = 0.4
    connectivity: int = 4
    strategies: tuple[str, ...] = FIELD_STRATEGIES
    split_fraction: float = 0.7
    seed: int = 0
    workers: int = 1
    strict: bool = False

    def segmentation_params(self) -> SegmentationParams:
        return SegmentationParams(
            t_bnd=self.t_bnd, t_ext=self.t_ext, connectivity=self.connectivity
        )

    def config_hash(self) -> str:
        payload = json.dumps(
            {k: v for k, v in dataclasses.asdict(self).items() if k != "workers"},
            sort_keys=True,
            default=str,
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _file_hash(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()[:16]


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _marker_path(site_dir: Path) -> Path:
    return site_dir / ".done"


def _up_to_date(site_dir: Path, key: str) -> bool:
    marker = _marker_path(site_dir)
    return marker.exists() and marker.read_text().strip() == key


def _mark_done(site_dir: Path, key: str) -> None:
    _atomic_write_text(_marker_path(site_dir), key + "\n")


def _float(x: float) -> str:
    return format(float(x), ".10g")


# ---------------------------------------------------------------------------
# per-site stage workers (module-level so they pickle for process pools)


def _segment_site(args) -> str:
    rec_json, cfg = args
    rec = SiteRecord.from_json(rec_json)
    site_dir = Path(cfg.output_dir) / "segment" / rec.site_id
    key = cfg.config_hash() + ":" + _file_hash(Path(rec.raster_path))
    if _up_to_date(site_dir, key):
        return rec.site_id
    site_dir.mkdir(parents=True, exist_ok=True)
    raster = geotiff.read_raster(rec.raster_path)
    imap = watershed_segment(raster, cfg.segmentation_params())
    tmp = site_dir / "instances.tif.tmp"
    geotiff.write_label_grid(tmp, imap.labels, imap.transform)
    os.replace(tmp, site_dir / "instances.tif")
    write_feature_collection(instance_features(imap), site_dir / "instances.geojson")
    _mark_done(site_dir, key)
    return rec.site_id


def _load_instance_map(cfg: PipelineConfig, site_id: str) -> InstanceMap:
    path = Path(cfg.output_dir) / "segment" / site_id / "instances.tif"
    if not path.exists():
        raise PipelineError(f"missing segment output for site {site_id}; run segment first")
    labels, transform = geotiff.read_label_grid(path)
    return InstanceMap(
        transform=transform,
        labels=labels,
        instances=instances_from_map(labels, transform),
    )


def _score_site(args) -> str:
    rec_json, cfg = args
    rec = SiteRecord.from_json(rec_json)
    site_dir = Path(cfg.output_dir) / "score" / rec.site_id
    key = cfg.config_hash() + ":" + _file_hash(Path(rec.raster_path))
    if _up_to_date(site_dir, key):
        return rec.site_id
    site_dir.mkdir(parents=True, exist_ok=True)
    raster = geotiff.read_raster(rec.raster_path)
    imap = _load_instance_map(cfg, rec.site_id)
    lines = ["site_id,instance_id,sem_c,ins_c,size_px"]
    for inst in imap.instances:
        s = scoring.score_instance(inst, raster)
        lines.append(
            f"{rec.site_id},{s.instance_id},{_float(s.sem_c)},{_float(s.ins_c)},{s.size_px}"
        )
    _atomic_write_text(site_dir / "scores.csv", "\n".join(lines) + "\n")
    _mark_done(site_dir, key)
    return rec.site_id


def read_score_table(path: Path) -> list[InstanceScore]:
    scores = []
    for line in path.read_text().splitlines()[1:]:
        _, iid, sem, ins, size = line.split(",")
        scores.append(InstanceScore(int(iid), float(sem), float(ins), int(size)))
    return scores


def _select_site(args) -> str:
    rec_json, cfg = args
    rec = SiteRecord.from_json(rec_json)
    site_dir = Path(cfg.output_dir) / "select" / rec.site_id
    score_path = Path(cfg.output_dir) / "score" / rec.site_id / "scores.csv"
    if not score_path.exists():
        raise PipelineError(f"missing score output for site {rec.site_id}; run score first")
    key = cfg.config_hash() + ":" + _file_hash(score_path)
    if _up_to_date(site_dir, key):
        return rec.site_id
    site_dir.mkdir(parents=True, exist_ok=True)
    scores = read_score_table(score_path)
    imap = _load_instance_map(cfg, rec.site_id)
    by_id = {inst.instance_id: inst for inst in imap.instances}
    table = ["site_id,instance_id,sem_c,ins_c,size_px,selected_as"]
    for strategy_id in cfg.strategies:
        strategy = strategy_from_id(strategy_id)
        field_ids = set(select_fields(scores, strategy))
        noncrop_ids = set(select_noncrop(scores, strategy))
        features = []
        for s in scores:
            cls = (
                "field"
                if s.instance_id in field_ids
                else "non_cropland"
                if s.instance_id in noncrop_ids
                else None
            )
            if cls is None:
                continue
            inst = by_id[s.instance_id]
            features.append(
                {
                    "geometry": inst.polygon(imap.transform),
                    "properties": {
                        "instance_id": s.instance_id,
                        "class": cls,
                        "provenance": f"pseudo({strategy_id})",
                        "sem_c": round(s.sem_c, 10),
                        "ins_c": round(s.ins_c, 10),
                        "size_px": s.size_px,
                        "area_ha": round(inst.area_ha, 10),
                    },
                }
            )
        write_feature_collection(features, site_dir / f"{strategy_id}.geojson")
        for s in scores:
            selected_as = (
                "field"
                if s.instance_id in field_ids
                else "non_cropland"
                if s.instance_id in noncrop_ids
                else "discard"
            )
            table.append(
                f"{rec.site_id},{s.instance_id},{_float(s.sem_c)},{_float(s.ins_c)},"
                f"{s.size_px},{strategy_id}:{selected_as}"
            )
    _atomic_write_text(site_dir / "selection.csv", "\n".join(table) + "\n")
    _mark_done(site_dir, key)
    return rec.site_id


def _labels_site(args) -> str:
    rec_json, cfg, split_of = args
    rec = SiteRecord.from_json(rec_json)
    site_dir = Path(cfg.output_dir) / "labels" / rec.site_id
    select_dir = Path(cfg.output_dir) / "select" / rec.site_id
    if not select_dir.exists():
        raise PipelineError(f"missing select output for site {rec.site_id}; run select first")
    raster = geotiff.read_raster(rec.raster_path)
    key = cfg.config_hash() + ":" + _file_hash(Path(rec.raster_path))
    if _up_to_date(site_dir, key):
        return rec.site_id
    site_dir.mkdir(parents=True, exist_ok=True)
    manifest_lines = []
    for strategy_id in cfg.strategies:
        features = read_feature_collection(select_dir / f"{strategy_id}.geojson")
        label = rasterize_labels(
            features, (raster.height, raster.width), raster.transform
        )
        chips = chip_labels(label, rec.site_id)
        kept = {(c.row_index, c.col_index) for c in filter_chips(chips)}
        strat_dir = site_dir / strategy_id
        strat_dir.mkdir(exist_ok=True)
        for chip in chips:
            if (chip.row_index, chip.col_index) not in kept:
                continue
            out = strat_dir / f"chip_{chip.row_index}_{chip.col_index}.tif"
            tmp = out.with_suffix(".tif.tmp")
            geotiff.write_bands(tmp, chip.label.bands(), chip.label.transform)
            os.replace(tmp, out)
        for chip in chips:
            manifest_lines.append(
                json.dumps(
                    {
                        "site_id": rec.site_id,
                        "strategy": strategy_id,
                        "row_index": chip.row_index,
                        "col_index": chip.col_index,
                        "kept": (chip.row_index, chip.col_index) in kept,
                        "split": split_of[rec.site_id],
                    },
                    sort_keys=True,
                )
            )
    _atomic_write_text(site_dir / "chips.jsonl", "\n".join(manifest_lines) + "\n")
    _mark_done(site_dir, key)
    return rec.site_id


def _eval_object_site(args) -> str:
    rec_json, cfg = args
    rec = SiteRecord.from_json(rec_json)
    site_dir = Path(cfg.output_dir) / "eval-object" / rec.site_id
    if rec.reference_path is None:
        raise PipelineError(f"site {rec.site_id} has no reference polygons")
    key = cfg.config_hash() + ":" + _file_hash(Path(rec.reference_path))
    if _up_to_date(site_dir, key):
        return rec.site_id
    site_dir.mkdir(parents=True, exist_ok=True)
    imap = _load_instance_map(cfg, rec.site_id)
    refs = read_feature_collection(rec.reference_path)
    matches = match_by_centroid(
        imap, refs, season=season_of(rec.acquisition_date), province=rec.province
    )
    lines = ["ref_id,pred_id,iou,precision,recall,dice,ref_area_ha,pred_area_ha,season,province"]
    for m in matches:
        lines.append(
            f"{m.ref_id},{m.pred_id if m.pred_id is not None else ''},"
            f"{_float(m.iou)},{_float(m.precision)},{_float(m.recall)},{_float(m.dice)},"
            f"{_float(m.ref_area_ha)},{_float(m.pred_area_ha)},{m.season},{m.province}"
        )
    _atomic_write_text(site_dir / "matches.csv", "\n".join(lines) + "\n")
    _mark_done(site_dir, key)
    return rec.site_id


# ---------------------------------------------------------------------------
# stage drivers


def _run_sites(cfg: PipelineConfig, worker, tasks) -> tuple[list[str], list[str]]:
    """Run per-site tasks, honoring worker count and strict mode."""
    done, failed = [], []
    if cfg.workers <= 1:
        for task in tasks:
            try:
                done.append(worker(task))
            except Exception as exc:
                if cfg.strict:
                    raise
                failed.append(f"{task[0]}: {exc}")
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [(t, pool.submit(worker, t)) for t in tasks]
            for task, fut in futures:
                try:
                    done.append(fut.result())
                except Exception as exc:
                    if cfg.strict:
                        raise
                    failed.append(f"{task[0]}: {exc}")
    return done, failed


def _ledger_entry(cfg: PipelineConfig, stage: str, done, failed, elapsed: float) -> None:
    path = Path(cfg.output_dir) / "run_ledger.jsonl"
    entry = {
        "stage": stage,
        "config_hash": cfg.config_hash(),
        "n_done": len(done),
        "n_failed": len(failed),
        "elapsed_s": round(elapsed, 3),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    with open(path, "a", encoding="utf-8") as f:
        f.write(json.dumps(entry, sort_keys=True) + "\n")


def read_eval_matches(cfg: PipelineConfig, site_id: str):
    from .evalobj import FieldMatch

    path = Path(cfg.output_dir) / "eval-object" / site_id / "matches.csv"
    matches = []
    for line in path.read_text().splitlines()[1:]:
        parts = line.split(",")
        matches.append(
            FieldMatch(
                ref_id=parts[0],
                pred_id=int(parts[1]) if parts[1] else None,
                iou=float(parts[2]),
                precision=float(parts[3]),
                recall=float(parts[4]),
                dice=float(parts[5]),
                ref_area_ha=float(parts[6]),
                pred_area_ha=float(parts[7]),
                season=parts[8],
                province=parts[9],
            )
        )
    return matches


def _eval_site_report(cfg: PipelineConfig, sites: list[SiteRecord]) -> str:
    per_site = []
    all_obs, all_pred = [], []
    coords, rmse_values = [], []
    rows = ["site_id,rmse,mae,me,province,season"]
    for rec in sites:
        matches = read_eval_matches(cfg, rec.site_id)
        if not matches:
            continue
        errs = size_errors(rec.site_id, matches)
        per_site.append(errs)
        all_obs.extend(m.ref_area_ha for m in matches)
        all_pred.extend(m.pred_area_ha for m in matches)
        labels_path = Path(cfg.output_dir) / "segment" / rec.site_id / "instances.tif"
        _, transform = geotiff.read_label_grid(labels_path)
        coords.append((transform.origin_x, transform.origin_y))
        rmse_values.append(errs.rmse_ha)
        rows.append(
            f"{rec.site_id},{_float(errs.rmse_ha)},{_float(errs.mae_ha)},"
            f"{_float(errs.me_ha)},{rec.province},{season_of(rec.acquisition_date)}"
        )
    if not per_site:
        raise PipelineError("no evaluated sites; run eval-object first")
    fleet = fleet_stats(per_site)
    report = [
        f"mRMSE: {_float(fleet.mean_rmse)}",
        f"P50RMSE: {_float(fleet.median_rmse)}",
        f"mMAE: {_float(fleet.mean_mae)}",
        f"mME: {_float(fleet.mean_me)}",
        f"n_sites: {fleet.n_sites}",
    ]
    if len(all_obs) >= 3 and np.var(all_obs) > 0:
        fit = sitestats.fit_regression(all_obs, all_pred)
        report += [
            f"r2: {_float(fit.r2)}",
            f"slope: {_float(fit.slope)}",
            f"intercept: {_float(fit.intercept)}",
        ]
    if len(rmse_values) >= 4 and np.var(rmse_values) > 0:
        moran = sitestats.morans_i(rmse_values, coords, rng_seed=cfg.seed)
        report += [
            f"moran_I: {_float(moran.i)}",
            f"moran_p: {_float(moran.p_value)}",
        ]
    return "\n".join(report) + "\n\n" + "\n".join(rows) + "\n"


def _summarize_report(cfg: PipelineConfig, sites: list[SiteRecord]) -> str:
    out = []
    for strategy_id in cfg.strategies:
        per_site = {}
        for rec in sites:
            path = Path(cfg.output_dir) / "select" / rec.site_id / f"{strategy_id}.geojson"
            if not path.exists():
                raise PipelineError(
                    f"missing selection for site {rec.site_id}; run select first"
                )
            feats = read_feature_collection(path)
            per_site[rec.site_id] = [
                f["properties"]["area_ha"]
                for f in feats
                if f["properties"]["class"] == "field"
            ]
        s = summarize_label_set(per_site)
        out += [
            f"[{strategy_id}]",
            f"total_n_fields: {s.total_n_fields}",
            f"mean_n_per_site: {_float(s.mean_n_per_site)}",
            f"max_n_per_site: {s.max_n_per_site}",
            f"n_sites_ge5: {s.n_sites_ge5}",
            f"n_sites_0: {s.n_sites_0}",
            f"mean_ha: {_float(s.mean_ha)}",
            f"median_ha: {_float(s.median_ha)}",
            f"sd_ha: {_float(s.sd_ha)}",
            "",
        ]
    return "\n".join(out)


def run_stage(stage: str, cfg: PipelineConfig) -> tuple[int, list[str]]:
    """Run one pipeline stage. Returns (exit_code, failure messages)."""
    if stage not in STAGES:
        raise ValueError(f"unknown stage {stage!r}; valid stages: {', '.join(STAGES)}")
    for strategy_id in cfg.strategies:
        strategy_from_id(strategy_id)  # validate early
    sites = read_manifest(cfg.manifest_path)
    Path(cfg.output_dir).mkdir(parents=True, exist_ok=True)
    start = time.monotonic()

    failed: list[str] = []
    if stage in ("segment", "score", "select"):
        worker = {"segment": _segment_site, "score": _score_site, "select": _select_site}[stage]
        tasks = [(rec.to_json(), cfg) for rec in sites]
        done, failed = _run_sites(cfg, worker, tasks)
    elif stage == "labels":
        train, validation = split_sites(
            [r.site_id for r in sites], cfg.split_fraction, cfg.seed
        )
        split_of = {s: "train" for s in train} | {s: "validation" for s in validation}
        tasks = [(rec.to_json(), cfg, split_of) for rec in sites]
        done, failed = _run_sites(cfg, _labels_site, tasks)
    elif stage == "eval-object":
        refs = [r for r in sites if r.reference_path]
        tasks = [(rec.to_json(), cfg) for rec in refs]
        done, failed = _run_sites(cfg, _eval_object_site, tasks)
        if done:
            matches = [
                m
                for rec in sites
                if rec.reference_path
                and (Path(cfg.output_dir) / "eval-object" / rec.site_id / "matches.csv").exists()
                for m in read_eval_matches(cfg, rec.site_id)
            ]
            agg = aggregate(matches)
            report = "\n".join(
                [
                    f"mIoU: {_float(agg.mean_iou)}",
                    f"medIoU: {_float(agg.median_iou)}",
                    f"IoU50: {_float(agg.iou50)}",
                    f"IoU80: {_float(agg.iou80)}",
                    f"mean_dice: {_float(agg.mean_dice)}",
                    f"mean_precision: {_float(agg.mean_precision)}",
                    f"mean_recall: {_float(agg.mean_recall)}",
                    f"n: {agg.n}",
                ]
            )
            _atomic_write_text(
                Path(cfg.output_dir) / "eval-object" / "aggregate.txt", report + "\n"
            )
    elif stage == "eval-site":
        refs = [r for r in sites if r.reference_path]
        report = _eval_site_report(cfg, refs)
        _atomic_write_text(Path(cfg.output_dir) / "eval-site-report.txt", report)
        done = [r.site_id for r in refs]
    elif stage == "summarize":
        report = _summarize_report(cfg, sites)
        _atomic_write_text(Path(cfg.output_dir) / "label-summary.txt", report)
        done = [r.site_id for r in sites]

    _ledger_entry(cfg, stage, done, failed, time.monotonic() - start)
    return (3 if failed else 0), failed
