/** ApiClient: request shapes and error unwrapping over a stubbed fetch. */

import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { sampleModel } from "./fake-server.js";

interface Call {
  url: string;
  init?: RequestInit;
}

function stubFetch(status: number, body: unknown, calls: Call[]): typeof fetch {
  return (async (url: RequestInfo | URL, init?: RequestInit) => {
    calls.push({ url: String(url), init });
    return {
      ok: status >= 200 && status < 300,
      status,
      json: async () => body,
    } as Response;
  }) as typeof fetch;
}

describe("ApiClient", () => {
  it("GET /models/{id} parses the document", async () => {
    const calls: Call[] = [];
    const client = new ApiClient("http://x", stubFetch(200, sampleModel(), calls));
    const doc = await client.getModel("kudzu-invasion");
    expect(doc.id).toBe("kudzu-invasion");
    expect(calls[0]!.url).toBe("http://x/models/kudzu-invasion");
  });

  it("PUT sends the document as JSON", async () => {
    const calls: Call[] = [];
    const client = new ApiClient("http://x", stubFetch(200, { id: "kudzu-invasion" }, calls));
    await client.putModel(sampleModel());
    expect(calls[0]!.init?.method).toBe("PUT");
    expect(JSON.parse(calls[0]!.init?.body as string).id).toBe("kudzu-invasion");
  });

  it("non-success responses raise ApiError with the payload", async () => {
    const payload = { code: "validation_failed", message: "model failed validation", details: [] };
    const client = new ApiClient("http://x", stubFetch(422, payload, []));
    await expect(client.putModel(sampleModel())).rejects.toSatisfy(
      (error: unknown) =>
        error instanceof ApiError &&
        error.status === 422 &&
        error.payload.code === "validation_failed",
    );
  });

  it("malformed success payloads fail loudly at the boundary", async () => {
    const client = new ApiClient("http://x", stubFetch(200, { nope: 1 }, []));
    await expect(client.getModel("m")).rejects.toThrow();
  });

  it("simulate posts the run settings verbatim", async () => {
    const calls: Call[] = [];
    const body = {
      times: [0],
      series: { n: [1] },
      meta: { seed: 5, engine: "stochastic", dt: 0.1 },
    };
    const client = new ApiClient("http://x", stubFetch(200, body, calls));
    const settings = {
      engine: "stochastic" as const,
      duration: 3,
      dt: 0.1,
      seed: 5,
      record_every: 2,
      runs: 1,
    };
    await client.simulate("m", settings);
    expect(JSON.parse(calls[0]!.init?.body as string)).toEqual(settings);
  });
});
