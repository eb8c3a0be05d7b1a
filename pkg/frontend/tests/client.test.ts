/** ApiClient: parsing, request shapes, and error mapping. */

import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api/client.js";
import { sequenceFetch } from "./helpers.js";

describe("ApiClient", () => {
  it("lists knowledge bases", async () => {
    const { fetch, calls } = sequenceFetch("kbs");
    const catalog = await new ApiClient("", fetch).listKbs();
    expect(calls[0]).toMatchObject({ url: "/kbs", method: "GET" });
    expect(catalog.kbs[0]?.name).toBe("weather");
    expect(catalog.kbs[0]?.built).toBe(true);
  });

  it("posts evidence as a name-to-boolean map", async () => {
    const { fetch, calls } = sequenceFetch("assert-folk");
    const client = new ApiClient("http://api.test", fetch);
    const response = await client.assertEvidence("s1", {
      "bunions-ache": true,
      "moon-haze": false,
    });
    expect(calls[0]?.url).toBe("http://api.test/sessions/s1/assert-evidence");
    expect(calls[0]?.payload).toEqual({
      evidence: { "bunions-ache": true, "moon-haze": false },
    });
    expect(response.steps).toHaveLength(4);
  });

  it("maps 422 bodies to ApiError with the feasible interval", async () => {
    const { fetch } = sequenceFetch("wizard-out-of-range");
    const client = new ApiClient("", fetch);
    const failure = client.acceptConstraint("wizard", "other-predictions", {
      value: 0.5,
    });
    await expect(failure).rejects.toMatchObject({
      name: "ApiError",
      status: 422,
      error: "ConstraintOutOfRange",
      interval: [0.0, 0.45],
    });
  });

  it("maps 409 conflicts to ApiError", async () => {
    const { fetch } = sequenceFetch("conflict");
    const client = new ApiClient("", fetch);
    try {
      await client.assertEvidence("s1", { "moon-haze": true });
      expect.unreachable("conflict must throw");
    } catch (err) {
      expect(err).toBeInstanceOf(ApiError);
      expect((err as ApiError).status).toBe(409);
      expect((err as ApiError).error).toBe("ConflictingEvidence");
    }
  });

  it("requests rankings with the direction query", async () => {
    const { fetch, calls } = sequenceFetch("rank-least");
    const ranking = await new ApiClient("", fetch).rankEvidence(
      "s1",
      "least-likely",
    );
    expect(calls[0]?.url).toBe(
      "/sessions/s1/rank-evidence?direction=least-likely",
    );
    expect(ranking.direction).toBe("least-likely");
  });
});
