import { describe, expect, it } from "vitest";

import { ApiClient, type FetchLike } from "../src/api.js";
import type { StrategyDoc } from "../src/session.js";

function jsonResponse(doc: unknown): Response {
  return new Response(JSON.stringify(doc), {
    status: 200,
    headers: { "Content-Type": "application/json" },
  });
}

describe("stale response guard", () => {
  it("discards a synthesize response once a newer request exists", async () => {
    const resolvers: Array<(r: Response) => void> = [];
    const fetchImpl: FetchLike = () =>
      new Promise<Response>((resolve) => resolvers.push(resolve));
    const client = new ApiClient("http://backend", fetchImpl);

    const first = client.synthesize("T[1]{1}", ["5"]);
    const second = client.synthesize("T[1]{1}", ["9"]);
    expect(resolvers).toHaveLength(2);

    const docFor = (bound: string[]): StrategyDoc => ({
      schema: 1,
      exists: true,
      bound,
      expected_impact: ["1"],
      decisions: [],
      finals: [],
    });
    // the slow first response arrives after the second was issued
    resolvers[1]!(jsonResponse(docFor(["9"])));
    resolvers[0]!(jsonResponse(docFor(["5"])));

    expect(await first).toBeNull();
    const kept = await second;
    expect(kept).not.toBeNull();
    expect((kept as StrategyDoc).bound).toEqual(["9"]);
  });

  it("network failures surface as error payloads, not exceptions", async () => {
    const failing: FetchLike = () => Promise.reject(new Error("offline"));
    const client = new ApiClient("http://backend", failing);
    const doc = await client.parse("T[1]{1}");
    expect("error" in doc && doc.error).toContain("offline");
  });
});
