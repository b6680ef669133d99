import { ApiError, ReviewApi } from "./api";
import { OfflineQueue, StorageLike } from "./queue";
import type {
  CandidateFeature,
  Decision,
  SitePayload,
  SiteSummary,
  Verdict,
} from "./types";

export interface SessionOptions {
  reviewer?: string;
  /** When true, site navigation skips sites whose candidates are all reviewed. */
  pendingOnly?: boolean;
  storage?: StorageLike;
}

/**
 * Keyboard-driven screening state for one reviewer.
 *
 * Verdicts are applied optimistically and posted immediately. A server
 * rejection (HTTP error) reverts the optimistic verdict and surfaces the
 * message; a network failure keeps it and parks the decision on a persistent
 * retry queue that `sync()` flushes in order before reconciling with the
 * server payload.
 */
export class ScreeningSession {
  sites: SiteSummary[] = [];
  siteIndex = -1;
  payload: SitePayload | null = null;
  strategy = "";
  focusIndex = 0;
  lastError: string | null = null;
  readonly queue: OfflineQueue;

  private reviewer: string;
  private pendingOnly: boolean;
  private verdicts = new Map<number, Verdict>();

  constructor(
    private api: ReviewApi,
    options: SessionOptions = {},
  ) {
    this.reviewer = options.reviewer ?? "anonymous";
    this.pendingOnly = options.pendingOnly ?? false;
    this.queue = new OfflineQueue((d) => this.api.postDecision(d), options.storage);
  }

  async start(): Promise<void> {
    this.sites = await this.api.listSites();
    if (this.sites.length > 0) await this.openSite(0);
  }

  async openSite(index: number): Promise<void> {
    if (index < 0 || index >= this.sites.length) return;
    this.siteIndex = index;
    this.payload = await this.api.getSite(this.sites[index].site_id);
    const ids = Object.keys(this.payload.strategies).sort();
    if (!this.strategy || !(this.strategy in this.payload.strategies)) {
      this.strategy = ids[0] ?? "";
    }
    this.focusIndex = 0;
    this.rebuildVerdicts();
  }

  /** Server verdicts overlaid with decisions still waiting on the queue. */
  private rebuildVerdicts(): void {
    this.verdicts.clear();
    if (!this.payload) return;
    for (const feats of Object.values(this.payload.strategies)) {
      for (const f of feats) {
        this.verdicts.set(f.properties.instance_id, f.properties.verdict);
      }
    }
    for (const queued of this.queue.peek()) {
      if (queued.site_id === this.payload.site_id) {
        this.verdicts.set(queued.instance_id, queued.verdict);
      }
    }
  }

  setStrategy(strategy: string): void {
    if (this.payload && strategy in this.payload.strategies) {
      this.strategy = strategy;
      this.focusIndex = 0;
    }
  }

  get siteId(): string {
    return this.payload?.site_id ?? "";
  }

  get candidates(): CandidateFeature[] {
    return this.payload?.strategies[this.strategy] ?? [];
  }

  get focused(): CandidateFeature | null {
    return this.candidates[this.focusIndex] ?? null;
  }

  verdictOf(instanceId: number): Verdict {
    return this.verdicts.get(instanceId) ?? "pending";
  }

  get pendingSync(): number {
    return this.queue.size;
  }

  progress(): { reviewed: number; total: number } {
    let reviewed = 0;
    for (const v of this.verdicts.values()) if (v !== "pending") reviewed += 1;
    return { reviewed, total: this.verdicts.size };
  }

  private siteFullyReviewed(): boolean {
    const { reviewed, total } = this.progress();
    return total > 0 && reviewed === total;
  }

  nextCandidate(): void {
    if (this.candidates.length > 0) {
      this.focusIndex = (this.focusIndex + 1) % this.candidates.length;
    }
  }

  prevCandidate(): void {
    const n = this.candidates.length;
    if (n > 0) this.focusIndex = (this.focusIndex - 1 + n) % n;
  }

  async decide(instanceId: number, verdict: Verdict): Promise<void> {
    if (!this.payload) return;
    const previous = this.verdictOf(instanceId);
    this.verdicts.set(instanceId, verdict);
    const decision: Decision = {
      site_id: this.payload.site_id,
      instance_id: instanceId,
      verdict,
      reviewer: this.reviewer,
    };
    try {
      await this.api.postDecision(decision);
      this.lastError = null;
      this.updateSummary();
    } catch (err) {
      if (err instanceof ApiError) {
        // server refused the decision: roll back and surface the reason
        this.verdicts.set(instanceId, previous);
        this.lastError = err.message;
      } else {
        // unreachable service: keep optimistic state, retry later in order
        this.queue.enqueue(decision);
        this.updateSummary();
      }
    }
  }

  /** Decide the focused candidate and advance focus. */
  async decideFocused(verdict: Verdict): Promise<void> {
    const target = this.focused;
    if (!target) return;
    await this.decide(target.properties.instance_id, verdict);
    this.nextCandidate();
  }

  /** Expand a site-level verdict into one decision per visible candidate. */
  async decideAll(verdict: Verdict): Promise<void> {
    for (const f of this.candidates) {
      await this.decide(f.properties.instance_id, verdict);
    }
  }

  private updateSummary(): void {
    const summary = this.sites[this.siteIndex];
    if (summary) summary.n_reviewed = this.progress().reviewed;
  }

  private async advanceSite(step: 1 | -1): Promise<void> {
    let index = this.siteIndex + step;
    while (index >= 0 && index < this.sites.length) {
      if (!this.pendingOnly || this.sites[index].n_reviewed < this.sites[index].n_candidates) {
        await this.openSite(index);
        return;
      }
      index += step;
    }
  }

  nextSite(): Promise<void> {
    return this.advanceSite(1);
  }

  prevSite(): Promise<void> {
    return this.advanceSite(-1);
  }

  setPendingOnly(on: boolean): void {
    this.pendingOnly = on;
  }

  /** Flush the retry queue, then reconcile local verdicts with the server. */
  async sync(): Promise<number> {
    const sent = await this.queue.flush();
    if (this.payload) {
      this.payload = await this.api.getSite(this.payload.site_id);
      this.rebuildVerdicts();
      this.updateSummary();
    }
    return sent;
  }

  async handleKey(key: string): Promise<void> {
    switch (key) {
      case "j":
        this.nextCandidate();
        break;
      case "k":
        this.prevCandidate();
        break;
      case "a":
        await this.decideFocused("accepted");
        break;
      case "x":
        await this.decideFocused("rejected");
        break;
      case "u":
        await this.decideFocused("pending");
        break;
      case "A":
        await this.decideAll("accepted");
        break;
      case "X":
        await this.decideAll("rejected");
        break;
      case "n":
        await this.nextSite();
        break;
      case "p":
        await this.prevSite();
        break;
    }
  }

  /** True when this site should be skipped under the pending-only filter. */
  get skippable(): boolean {
    return this.pendingOnly && this.siteFullyReviewed();
  }
}
