import type {
  Decision,
  ExportPolicy,
  ExportResult,
  SitePayload,
  SiteSummary,
} from "./types";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** Thin typed client over the review service HTTP API. */
export class ReviewApi {
  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchFn(this.baseUrl + path, init);
    if (!res.ok) {
      let detail = res.statusText;
      try {
        const body = await res.json();
        if (body && typeof body.detail === "string") detail = body.detail;
      } catch {
        // non-JSON error body; keep statusText
      }
      throw new ApiError(res.status, detail);
    }
    return (await res.json()) as T;
  }

  listSites(filters?: {
    split?: string;
    strategy?: string;
    review_status?: string;
  }): Promise<SiteSummary[]> {
    const params = new URLSearchParams();
    for (const [k, v] of Object.entries(filters ?? {})) {
      if (v) params.set(k, v);
    }
    const qs = params.toString();
    return this.request<SiteSummary[]>(`/sites${qs ? "?" + qs : ""}`);
  }

  getSite(siteId: string): Promise<SitePayload> {
    return this.request<SitePayload>(`/sites/${encodeURIComponent(siteId)}`);
  }

  postDecision(decision: Decision): Promise<Decision> {
    return this.request<Decision>("/decisions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(decision),
    });
  }

  exportCurated(
    strategy: string,
    policy: ExportPolicy = "accepted_only",
  ): Promise<ExportResult> {
    const params = new URLSearchParams({ strategy, policy });
    return this.request<ExportResult>(`/export?${params}`);
  }
}
