/** Fixture loading and stub fetches for the contract tests. */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { FetchLike } from "../src/api/client.js";

const here = dirname(fileURLToPath(import.meta.url));

export interface Recorded {
  status: number;
  body: unknown;
}

export function fixture(name: string): Recorded {
  const raw = readFileSync(join(here, "fixtures", `${name}.json`), "utf8");
  return JSON.parse(raw) as Recorded;
}

export function fixtureBody<T>(name: string): T {
  return fixture(name).body as T;
}

export interface FetchCall {
  url: string;
  method: string;
  payload: unknown;
}

export function toResponse(recorded: Recorded | string): Response {
  const r = typeof recorded === "string" ? fixture(recorded) : recorded;
  return new Response(JSON.stringify(r.body), {
    status: r.status,
    headers: { "content-type": "application/json" },
  });
}

/** A fetch that serves the given recordings in order and logs every call. */
export function sequenceFetch(...responses: (Recorded | string)[]): {
  fetch: FetchLike;
  calls: FetchCall[];
} {
  const queue = responses.map((r) => (typeof r === "string" ? fixture(r) : r));
  const calls: FetchCall[] = [];
  const fetch: FetchLike = (url, init) => {
    calls.push({
      url,
      method: init?.method ?? "GET",
      payload: init?.body === undefined ? undefined : JSON.parse(String(init.body)),
    });
    const next = queue.shift();
    if (!next) return Promise.reject(new Error(`unexpected fetch: ${url}`));
    return Promise.resolve(toResponse(next));
  };
  return { fetch, calls };
}
