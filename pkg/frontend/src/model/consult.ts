/**
 * Consultation session state.
 *
 * Holds the last completed server snapshot of every marginal; toggling
 * evidence swaps the whole snapshot on confirmation and never touches it on
 * failure, so a 409/422 leaves the bars exactly as they were.  Probability
 * values pass through untouched.  One mutation may be in flight at a time.
 */

import { ApiClient, ApiError } from "../api/client.js";
import type {
  Direction,
  MarginalRow,
  RankEntry,
  UpdateStep,
} from "../api/types.js";
import { describeError } from "./wizard.js";

export interface ConsultError {
  kind: "conflict" | "impossible" | "other";
  message: string;
}

export class ConsultModel {
  readonly kb: string;
  private readonly client: ApiClient;

  sessionId: string;
  rows: MarginalRow[];
  ranking: RankEntry[] = [];
  direction: Direction = "most-likely";
  trace: UpdateStep[] = [];
  error: ConsultError | null = null;
  busy = false;

  private constructor(
    client: ApiClient,
    kb: string,
    sessionId: string,
    rows: MarginalRow[],
  ) {
    this.client = client;
    this.kb = kb;
    this.sessionId = sessionId;
    this.rows = rows;
  }

  static async open(client: ApiClient, kb: string): Promise<ConsultModel> {
    const opened = await client.openSession(kb);
    const model = new ConsultModel(client, kb, opened.session_id, opened.marginals);
    await model.refreshRanking();
    return model;
  }

  /** Goal variables: the final advice, highlighted by the view. */
  get goals(): MarginalRow[] {
    return this.rows.filter((row) => row.kind === "goal");
  }

  get hypotheses(): MarginalRow[] {
    return this.rows.filter((row) => row.kind === "hypothesis");
  }

  /** Unasserted evidence toggles, in the server's ranking order. */
  get openToggles(): MarginalRow[] {
    const byId = new Map(this.rows.map((row) => [row.variable, row]));
    return this.ranking
      .map((entry) => byId.get(entry.variable))
      .filter((row): row is MarginalRow => row !== undefined);
  }

  /** Already-asserted evidence, in declaration order. */
  get assertedToggles(): MarginalRow[] {
    return this.rows.filter((row) => row.is_bev && row.asserted !== null);
  }

  get needsReset(): boolean {
    return this.error?.kind === "conflict";
  }

  async toggle(variable: string, observed: boolean): Promise<boolean> {
    if (this.busy) return false;
    this.busy = true;
    try {
      const response = await this.client.assertEvidence(this.sessionId, {
        [variable]: observed,
      });
      this.rows = response.marginals;
      this.trace = [...this.trace, ...response.steps];
      this.error = null;
    } catch (err) {
      this.error = classify(err);
      return false;
    } finally {
      this.busy = false;
    }
    await this.refreshRanking();
    return true;
  }

  async setDirection(direction: Direction): Promise<void> {
    this.direction = direction;
    await this.refreshRanking();
  }

  /** Drop the failed session and start a fresh one on the same KB. */
  async reset(): Promise<void> {
    const opened = await this.client.openSession(this.kb);
    this.sessionId = opened.session_id;
    this.rows = opened.marginals;
    this.trace = [];
    this.error = null;
    await this.refreshRanking();
  }

  private async refreshRanking(): Promise<void> {
    const response = await this.client.rankEvidence(
      this.sessionId,
      this.direction,
    );
    this.ranking = response.ranking;
  }
}

function classify(err: unknown): ConsultError {
  if (err instanceof ApiError) {
    if (err.status === 409) return { kind: "conflict", message: err.message };
    if (err.error === "ImpossibleEvidence") {
      return { kind: "impossible", message: err.message };
    }
  }
  return { kind: "other", message: describeError(err) };
}
