/**
 * Elicitation wizard state.
 *
 * A thin controller over the next-constraint/accept-constraint endpoints.
 * The server owns all probability arithmetic: the wizard only holds the last
 * snapshot it was given, clamps slider values into the served feasible
 * interval (so a range-rejected submission is impossible by construction),
 * and swaps in the next snapshot on confirmation.  One mutation may be in
 * flight at a time; concurrent calls are refused, not queued.
 */

import { ApiClient, ApiError } from "../api/client.js";
import type {
  AcceptedRecord,
  AcceptRequest,
  BuildResponse,
  NetLeg,
  NextConstraint,
} from "../api/types.js";

export interface WizardQuestion {
  /** Variable ids of the asked conjunction, in the group's declared order. */
  subset: string[];
  /** "Pr(A & B)" over display names. */
  jointPhrase: string;
  /** "Pr(B | A)" with the newest variable conditioned on the rest; null for order-1 keys. */
  conditionalPhrase: string | null;
  interval: [number, number];
  defaultValue: number;
}

export interface CmdTableRow {
  label: string;
  value: number;
}

export class WizardModel {
  readonly kb: string;
  readonly leg: NetLeg;
  private readonly client: ApiClient;
  private readonly names: Map<string, string>;

  snapshot: NextConstraint | null = null;
  lastAccepted: AcceptedRecord | null = null;
  built: BuildResponse | null = null;
  errorMessage: string | null = null;
  busy = false;

  constructor(client: ApiClient, kb: string, leg: NetLeg) {
    this.client = client;
    this.kb = kb;
    this.leg = leg;
    this.names = new Map(leg.variables.map((v) => [v.id, v.name]));
  }

  async load(): Promise<void> {
    this.snapshot = await this.client.nextConstraint(this.kb, this.leg.id);
  }

  get progress(): { accepted: number; total: number; remaining: number } | null {
    if (!this.snapshot) return null;
    const { accepted, total, remaining } = this.snapshot;
    return { accepted, total, remaining };
  }

  get done(): boolean {
    return this.snapshot?.done ?? false;
  }

  get question(): WizardQuestion | null {
    const s = this.snapshot;
    if (!s || !s.key || !s.interval || s.default === null) return null;
    const subset = s.key.subset;
    const display = subset.map((id) => this.names.get(id) ?? id);
    const newest = this.newestOf(subset);
    const rest = subset.filter((id) => id !== newest);
    return {
      subset,
      jointPhrase: `Pr(${display.join(" & ")})`,
      conditionalPhrase:
        rest.length === 0
          ? null
          : `Pr(${this.names.get(newest) ?? newest} | ${rest
              .map((id) => this.names.get(id) ?? id)
              .join(" & ")})`,
      interval: [s.interval[0], s.interval[1]],
      defaultValue: s.default,
    };
  }

  /** Clip a slider value into the served feasible interval. */
  clamp(value: number): number {
    const q = this.question;
    if (!q) return value;
    return Math.min(Math.max(value, q.interval[0]), q.interval[1]);
  }

  async acceptValue(value: number): Promise<boolean> {
    const q = this.question;
    if (!q) return false;
    return this.submit({ subset: q.subset, value: this.clamp(value) });
  }

  /** Answer in conditional form; the given set is the rest of the subset. */
  async acceptConditional(value: number): Promise<boolean> {
    const q = this.question;
    if (!q || q.conditionalPhrase === null) return false;
    const newest = this.newestOf(q.subset);
    return this.submit({
      subset: q.subset,
      conditional: { given: q.subset.filter((id) => id !== newest), value },
    });
  }

  async acceptDefault(): Promise<boolean> {
    const q = this.question;
    if (!q) return false;
    return this.submit({ subset: q.subset, default: true });
  }

  get canBuild(): boolean {
    return this.done && this.built === null;
  }

  async build(maxOrder?: number | "all"): Promise<boolean> {
    if (this.busy || !this.done) return false;
    this.busy = true;
    try {
      this.built = await this.client.build(this.kb, maxOrder);
      this.errorMessage = null;
      return true;
    } catch (err) {
      this.errorMessage = describeError(err);
      return false;
    } finally {
      this.busy = false;
    }
  }

  /** Atom table of a built group, labeled exactly like the server's atom labels. */
  cmdTable(legId: string): CmdTableRow[] {
    const atoms = this.built?.cmds[legId];
    if (!atoms) return [];
    const bits = Math.log2(atoms.length);
    return atoms.map((value, index) => ({
      label: index.toString(2).padStart(bits, "0"),
      value,
    }));
  }

  private newestOf(subset: string[]): string {
    let newest = subset[0]!;
    for (const id of subset) {
      if (this.leg.variables.findIndex((v) => v.id === id) >
          this.leg.variables.findIndex((v) => v.id === newest)) {
        newest = id;
      }
    }
    return newest;
  }

  private async submit(body: AcceptRequest): Promise<boolean> {
    if (this.busy || !this.snapshot) return false;
    this.busy = true;
    try {
      const response = await this.client.acceptConstraint(
        this.kb,
        this.leg.id,
        body,
      );
      this.lastAccepted = response.accepted;
      this.snapshot = response.next;
      this.errorMessage = null;
      return true;
    } catch (err) {
      this.errorMessage = describeError(err);
      return false;
    } finally {
      this.busy = false;
    }
  }
}

export function describeError(err: unknown): string {
  if (err instanceof ApiError) {
    if (err.interval) {
      const [lo, hi] = err.interval;
      return `${err.message} (feasible: ${lo} to ${hi})`;
    }
    return `${err.error}: ${err.message}`;
  }
  return err instanceof Error ? err.message : String(err);
}
