/**
 * Typed client for the knowledge-base service.
 *
 * Responses are validated against the payload schemas before they reach any
 * view code; failures surface as ApiError carrying the server's own error
 * taxonomy (status, error name, message, optional interval or violations).
 */

import type { z } from "zod";
import {
  AcceptRequest,
  AcceptResponse,
  AssertResponse,
  BuildResponse,
  ConsistencyResponse,
  Direction,
  ErrorBody,
  KbCatalog,
  MarginalsPayload,
  NetPayload,
  NextConstraint,
  RankResponse,
  SessionOpened,
  TraceResponse,
} from "./types.js";

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

export class ApiError extends Error {
  readonly status: number;
  readonly error: string;
  readonly interval?: [number, number];
  readonly violations?: { code: string; where: string; detail: string }[];

  constructor(status: number, body: ErrorBody) {
    super(body.message);
    this.name = "ApiError";
    this.status = status;
    this.error = body.error;
    if (body.interval) this.interval = body.interval;
    if (body.violations) this.violations = body.violations;
  }
}

export class ApiClient {
  private readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl = "", fetchFn?: FetchLike) {
    this.base = baseUrl.replace(/\/$/, "");
    this.fetchFn = fetchFn ?? ((input, init) => globalThis.fetch(input, init));
  }

  private async request<S extends z.ZodTypeAny>(
    schema: S,
    path: string,
    init?: RequestInit,
  ): Promise<z.infer<S>> {
    const response = await this.fetchFn(this.base + path, init);
    const body: unknown = await response.json();
    if (!response.ok) {
      const parsed = ErrorBody.safeParse(body);
      throw new ApiError(
        response.status,
        parsed.success
          ? parsed.data
          : { error: "UnknownError", message: `HTTP ${response.status}` },
      );
    }
    return schema.parse(body);
  }

  private post<S extends z.ZodTypeAny>(
    schema: S,
    path: string,
    payload: unknown,
  ): Promise<z.infer<S>> {
    return this.request(schema, path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  listKbs(): Promise<KbCatalog> {
    return this.request(KbCatalog, "/kbs");
  }

  getNet(kb: string): Promise<NetPayload> {
    return this.request(NetPayload, `/kbs/${encodeURIComponent(kb)}/net`);
  }

  nextConstraint(kb: string, leg: string): Promise<NextConstraint> {
    return this.request(
      NextConstraint,
      `/kbs/${encodeURIComponent(kb)}/legs/${encodeURIComponent(leg)}/next-constraint`,
    );
  }

  acceptConstraint(
    kb: string,
    leg: string,
    body: AcceptRequest,
  ): Promise<AcceptResponse> {
    return this.post(
      AcceptResponse,
      `/kbs/${encodeURIComponent(kb)}/legs/${encodeURIComponent(leg)}/accept-constraint`,
      body,
    );
  }

  build(kb: string, maxOrder?: number | "all"): Promise<BuildResponse> {
    return this.post(
      BuildResponse,
      `/kbs/${encodeURIComponent(kb)}/build`,
      maxOrder === undefined ? {} : { max_order: maxOrder },
    );
  }

  openSession(kb: string): Promise<SessionOpened> {
    return this.post(SessionOpened, "/sessions", { kb });
  }

  getMarginals(sessionId: string): Promise<MarginalsPayload> {
    return this.request(
      MarginalsPayload,
      `/sessions/${encodeURIComponent(sessionId)}/marginals`,
    );
  }

  assertEvidence(
    sessionId: string,
    evidence: Record<string, boolean>,
  ): Promise<AssertResponse> {
    return this.post(
      AssertResponse,
      `/sessions/${encodeURIComponent(sessionId)}/assert-evidence`,
      { evidence },
    );
  }

  rankEvidence(sessionId: string, direction: Direction): Promise<RankResponse> {
    return this.request(
      RankResponse,
      `/sessions/${encodeURIComponent(sessionId)}/rank-evidence?direction=${direction}`,
    );
  }

  getTrace(sessionId: string): Promise<TraceResponse> {
    return this.request(
      TraceResponse,
      `/sessions/${encodeURIComponent(sessionId)}/trace`,
    );
  }

  getConsistency(sessionId: string): Promise<ConsistencyResponse> {
    return this.request(
      ConsistencyResponse,
      `/sessions/${encodeURIComponent(sessionId)}/consistency`,
    );
  }
}
