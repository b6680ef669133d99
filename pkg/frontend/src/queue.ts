import type { Decision } from "./types";

/** Minimal synchronous storage contract (localStorage-compatible). */
export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
}

export class MemoryStorage implements StorageLike {
  private data = new Map<string, string>();
  getItem(key: string): string | null {
    return this.data.get(key) ?? null;
  }
  setItem(key: string, value: string): void {
    this.data.set(key, value);
  }
}

const QUEUE_KEY = "fieldseg_review_pending_decisions";

/**
 * Persistent FIFO of decisions that could not reach the service.
 *
 * Flushing posts strictly in enqueue order and stops at the first failure so
 * that later decisions (which may overwrite earlier ones under the service's
 * last-write-wins semantics) are never applied out of order.
 */
export class OfflineQueue {
  constructor(
    private post: (d: Decision) => Promise<unknown>,
    private storage: StorageLike = new MemoryStorage(),
  ) {}

  private read(): Decision[] {
    try {
      return JSON.parse(this.storage.getItem(QUEUE_KEY) ?? "[]");
    } catch {
      return [];
    }
  }

  private write(pending: Decision[]): void {
    this.storage.setItem(QUEUE_KEY, JSON.stringify(pending));
  }

  get size(): number {
    return this.read().length;
  }

  peek(): Decision[] {
    return this.read();
  }

  enqueue(decision: Decision): void {
    const pending = this.read();
    pending.push(decision);
    this.write(pending);
  }

  /** Returns the number of decisions successfully posted. */
  async flush(): Promise<number> {
    const pending = this.read();
    let sent = 0;
    for (const decision of pending) {
      try {
        await this.post(decision);
        sent += 1;
        this.write(pending.slice(sent));
      } catch {
        break;
      }
    }
    return sent;
  }
}
