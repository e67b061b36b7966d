/**
 * Typed client for the synthesis service.
 *
 * At most one synthesize call is considered live per client: every request
 * takes a token, and a response whose token has been superseded resolves to
 * null so the caller can drop it on the floor (the stale-response guard).
 */

import type { ApiError, ParseOk, StrategyDoc } from "./session.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private latest = 0;

  constructor(
    readonly base: string,
    private readonly fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  async health(): Promise<boolean> {
    try {
      const resp = await this.fetchImpl(`${this.base}/health`);
      return resp.ok;
    } catch {
      return false;
    }
  }

  async parse(text: string): Promise<ParseOk | ApiError> {
    return this.post("/parse", { text }) as Promise<ParseOk | ApiError>;
  }

  /** Resolves to null when a newer synthesize call was issued meanwhile. */
  async synthesize(
    text: string,
    bound: string[],
  ): Promise<StrategyDoc | ApiError | null> {
    const token = ++this.latest;
    const doc = await this.post("/synthesize", { text, bound });
    if (token !== this.latest) return null;
    return doc as StrategyDoc | ApiError;
  }

  private async post(path: string, payload: unknown): Promise<unknown> {
    try {
      const resp = await this.fetchImpl(`${this.base}${path}`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(payload),
      });
      return await resp.json();
    } catch (exc) {
      return { error: `backend unreachable: ${String(exc)}` };
    }
  }
}
