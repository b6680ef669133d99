export type Verdict = "accepted" | "rejected" | "pending";

export type ExportPolicy = "accepted_only" | "accepted_plus_pending";

export interface CandidateProperties {
  instance_id: number;
  class: "field" | "non_cropland";
  provenance: string;
  sem_c: number;
  ins_c: number;
  size_px: number;
  area_ha: number;
  verdict: Verdict;
}

export interface PolygonGeometry {
  type: "Polygon" | "MultiPolygon";
  coordinates: number[][][] | number[][][][];
}

export interface CandidateFeature {
  type: "Feature";
  geometry: PolygonGeometry;
  properties: CandidateProperties;
}

export interface SiteSummary {
  site_id: string;
  n_candidates: number;
  n_reviewed: number;
  province: string;
  season: string;
}

export interface SitePayload {
  site_id: string;
  image_url: string;
  strategies: Record<string, CandidateFeature[]>;
}

export interface Decision {
  site_id: string;
  instance_id: number;
  verdict: Verdict;
  reviewer: string;
}

export interface ExportResult {
  export_dir: string;
  counts: Record<string, number>;
  total: number;
}
