import type { ApiClient, RiskSummary } from "./api.js";

export const WHATIF_DEBOUNCE_MS = 300;

export interface HistoryEntry {
  mitigations: Record<string, number>;
  summary: RiskSummary;
}

/** Debounced what-if dispatcher with a stale-response guard: each request is
 * numbered and only the response to the most recent request may render, so a
 * slow early reply can never overwrite a newer one (last-write-wins). */
export class WhatIfRunner {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private sequence = 0;
  readonly history: HistoryEntry[] = [];

  constructor(
    private readonly api: ApiClient,
    private readonly projectId: string,
    private readonly onResult: (summary: RiskSummary) => void,
    private readonly onError: (err: unknown) => void = () => {},
    private readonly debounceMs: number = WHATIF_DEBOUNCE_MS,
  ) {}

  /** Schedule a what-if for the given portfolio, replacing any pending one. */
  request(mitigations: Record<string, number>): void {
    if (this.timer !== null) clearTimeout(this.timer);
    const snapshot = { ...mitigations };
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.dispatch(snapshot);
    }, this.debounceMs);
  }

  /** Fire immediately (used for the initial baseline render). */
  async dispatch(mitigations: Record<string, number>): Promise<void> {
    const seq = ++this.sequence;
    try {
      const summary = await this.api.whatIf(this.projectId, mitigations);
      if (seq !== this.sequence) return; // stale: a newer request is in flight
      this.history.push({ mitigations, summary });
      this.onResult(summary);
    } catch (err) {
      if (seq === this.sequence) this.onError(err);
    }
  }
}
