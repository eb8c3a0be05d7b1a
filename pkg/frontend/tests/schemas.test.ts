/**
 * Every recorded payload parses against its schema, so each number the
 * workbench displays is traceable to a validated API response field.
 */

import { describe, expect, it } from "vitest";

import {
  AcceptResponse,
  AssertResponse,
  BuildResponse,
  ErrorBody,
  KbCatalog,
  NetPayload,
  NextConstraint,
  RankResponse,
  SessionOpened,
  TraceResponse,
} from "../src/api/types.js";
import { fixture } from "./helpers.js";

const CASES: [string, { parse: (body: unknown) => unknown }][] = [
  ["kbs", KbCatalog],
  ["net-weather", NetPayload],
  ["net-wizard", NetPayload],
  ["wizard-step", NextConstraint],
  ["wizard-done", NextConstraint],
  ["exclusive-step", NextConstraint],
  ["wizard-accept", AcceptResponse],
  ["wizard-accept-p", AcceptResponse],
  ["wizard-build", BuildResponse],
  ["session-open", SessionOpened],
  ["session-open-2", SessionOpened],
  ["assert-folk", AssertResponse],
  ["rank-most", RankResponse],
  ["rank-least", RankResponse],
  ["rank-after-folk", RankResponse],
  ["trace-folk", TraceResponse],
  ["wizard-out-of-range", ErrorBody],
  ["conflict", ErrorBody],
  ["impossible", ErrorBody],
];

describe("recorded payloads", () => {
  for (const [name, schema] of CASES) {
    it(`${name} parses`, () => {
      expect(() => schema.parse(fixture(name).body)).not.toThrow();
    });
  }

  it("error recordings carry error statuses", () => {
    expect(fixture("wizard-out-of-range").status).toBe(422);
    expect(fixture("conflict").status).toBe(409);
    expect(fixture("impossible").status).toBe(422);
  });
});
