"""Human screening service for candidate pseudo labels.

Candidates come from a ``select`` stage output directory. Reviewer decisions
are persisted to an append-only line-delimited log (last write wins per
site/instance) so the store state can always be reconstructed by replay.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import asdict, dataclass
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse, JSONResponse
from pydantic import BaseModel

from .geo import read_manifest
from .sitestats import season_of
from .vector import read_feature_collection, write_feature_collection

VERDICTS = ("accepted", "rejected", "pending")


@dataclass(frozen=True)
class ReviewDecision:
    site_id: str
    instance_id: int
    verdict: str
    reviewer: str
    timestamp: float


class ReviewStore:
    """Candidate catalog plus a replayable decision log."""

    def __init__(self, select_dir: str | Path, manifest_path: str | Path, store_dir: str | Path):
        self.select_dir = Path(select_dir)
        self.store_dir = Path(store_dir)
        self.store_dir.mkdir(parents=True, exist_ok=True)
        self.log_path = self.store_dir / "decisions.jsonl"
        self._lock = threading.Lock()
        self.sites = {rec.site_id: rec for rec in read_manifest(manifest_path)}
        if not self.select_dir.exists():
            raise FileNotFoundError(f"selection directory {self.select_dir} not found")
        # candidates[site_id][strategy_id] -> list of feature dicts
        self.candidates: dict[str, dict[str, list[dict]]] = {}
        for site_id in sorted(self.sites):
            site_dir = self.select_dir / site_id
            if not site_dir.exists():
                continue
            per_strategy = {}
            for path in sorted(site_dir.glob("*.geojson")):
                per_strategy[path.stem] = read_feature_collection(path)
            self.candidates[site_id] = per_strategy
        self.decisions: dict[tuple[str, int], ReviewDecision] = {}
        self._replay_log()

    def _replay_log(self) -> None:
        if not self.log_path.exists():
            return
        for line in self.log_path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                rec = json.loads(line)
                d = ReviewDecision(**rec)
                self.decisions[(d.site_id, d.instance_id)] = d

    def strategies(self) -> list[str]:
        ids = {s for per in self.candidates.values() for s in per}
        return sorted(ids)

    def _site_instances(self, site_id: str) -> set[int]:
        return {
            f["properties"]["instance_id"]
            for per in self.candidates.get(site_id, {}).values()
            for f in per
        }

    def verdict_of(self, site_id: str, instance_id: int) -> str:
        d = self.decisions.get((site_id, instance_id))
        return d.verdict if d else "pending"

    def record(self, site_id: str, instance_id: int, verdict: str, reviewer: str) -> ReviewDecision:
        if verdict not in VERDICTS:
            raise ValueError(f"verdict must be one of {VERDICTS}")
        if site_id not in self.candidates:
            raise KeyError(f"unknown site {site_id!r}")
        if instance_id not in self._site_instances(site_id):
            raise KeyError(f"site {site_id!r} has no candidate instance {instance_id}")
        decision = ReviewDecision(site_id, instance_id, verdict, reviewer, time.time())
        with self._lock:
            with open(self.log_path, "a", encoding="utf-8") as f:
                f.write(json.dumps(asdict(decision), sort_keys=True) + "\n")
            self.decisions[(site_id, instance_id)] = decision
        return decision

    def site_summaries(
        self,
        split: str | None = None,
        strategy: str | None = None,
        review_status: str | None = None,
    ) -> list[dict]:
        out = []
        for site_id in sorted(self.candidates):
            rec = self.sites.get(site_id)
            if split and rec and rec.split != split:
                continue
            per = self.candidates[site_id]
            if strategy is not None:
                if strategy not in per or not per[strategy]:
                    continue
                instance_ids = {f["properties"]["instance_id"] for f in per[strategy]}
            else:
                instance_ids = self._site_instances(site_id)
            n_reviewed = sum(
                1 for i in instance_ids if self.verdict_of(site_id, i) != "pending"
            )
            if review_status == "pending" and n_reviewed == len(instance_ids):
                continue
            if review_status == "reviewed" and n_reviewed < len(instance_ids):
                continue
            out.append(
                {
                    "site_id": site_id,
                    "n_candidates": len(instance_ids),
                    "n_reviewed": n_reviewed,
                    "province": rec.province if rec else "",
                    "season": season_of(rec.acquisition_date) if rec else "",
                }
            )
        return out

    def site_payload(self, site_id: str) -> dict:
        if site_id not in self.candidates:
            raise KeyError(f"unknown site {site_id!r}")
        from shapely.geometry import mapping

        strategies = {}
        for strategy_id, feats in sorted(self.candidates[site_id].items()):
            strategies[strategy_id] = [
                {
                    "type": "Feature",
                    "geometry": mapping(f["geometry"]),
                    "properties": {
                        **f["properties"],
                        "verdict": self.verdict_of(
                            site_id, f["properties"]["instance_id"]
                        ),
                    },
                }
                for f in feats
            ]
        return {
            "site_id": site_id,
            "image_url": f"/sites/{site_id}/image.png",
            "strategies": strategies,
        }

    def image_path(self, site_id: str) -> Path:
        return self.store_dir / "images" / f"{site_id}.png"

    def export_curated(
        self, strategy_id: str, policy: str, export_dir: str | Path
    ) -> dict[str, int]:
        """Write screened per-site GeoJSON; returns {site_id: n_exported}."""
        if policy not in ("accepted_only", "accepted_plus_pending"):
            raise ValueError("policy must be accepted_only or accepted_plus_pending")
        if strategy_id not in self.strategies():
            raise KeyError(f"no candidates for strategy {strategy_id!r}")
        allowed = (
            {"accepted"} if policy == "accepted_only" else {"accepted", "pending"}
        )
        export_dir = Path(export_dir)
        export_dir.mkdir(parents=True, exist_ok=True)
        counts = {}
        for site_id, per in sorted(self.candidates.items()):
            feats = per.get(strategy_id, [])
            kept = []
            for f in feats:
                if self.verdict_of(site_id, f["properties"]["instance_id"]) in allowed:
                    props = dict(f["properties"])
                    props["provenance"] = "pseudo+screened"
                    kept.append({"geometry": f["geometry"], "properties": props})
            write_feature_collection(kept, export_dir / f"{site_id}.geojson")
            counts[site_id] = len(kept)
        return counts


class DecisionIn(BaseModel):
    site_id: str
    instance_id: int
    verdict: str
    reviewer: str = "anonymous"


def create_app(store: ReviewStore) -> FastAPI:
    app = FastAPI(title="fieldseg review service")

    @app.get("/sites")
    def list_sites(
        split: str | None = None,
        strategy: str | None = None,
        review_status: str | None = None,
    ):
        return store.site_summaries(split, strategy, review_status)

    @app.get("/sites/{site_id}")
    def get_site(site_id: str):
        try:
            return store.site_payload(site_id)
        except KeyError:
            raise HTTPException(404, f"unknown site {site_id!r}")

    @app.get("/sites/{site_id}/image.png")
    def get_image(site_id: str):
        path = store.image_path(site_id)
        if not path.exists():
            raise HTTPException(404, f"no image for site {site_id!r}")
        return FileResponse(path, media_type="image/png")

    @app.post("/decisions")
    def post_decision(decision: DecisionIn):
        try:
            stored = store.record(
                decision.site_id, decision.instance_id, decision.verdict, decision.reviewer
            )
        except KeyError as exc:
            raise HTTPException(404, str(exc))
        except ValueError as exc:
            raise HTTPException(422, str(exc))
        return asdict(stored)

    @app.get("/export")
    def export(strategy: str, policy: str = "accepted_only"):
        export_dir = store.store_dir / "export" / f"{strategy}_{policy}"
        try:
            counts = store.export_curated(strategy, policy, export_dir)
        except KeyError as exc:
            raise HTTPException(404, str(exc))
        except ValueError as exc:
            raise HTTPException(422, str(exc))
        return JSONResponse(
            {"export_dir": str(export_dir), "counts": counts, "total": sum(counts.values())}
        )

    return app
