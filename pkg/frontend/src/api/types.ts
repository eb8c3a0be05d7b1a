/**
 * Payload schemas for the knowledge-base service.
 *
 * Every value the workbench renders is parsed through one of these schemas
 * first, so a display is always traceable to a validated response field.
 */

import { z } from "zod";

export const KbSummary = z.object({
  name: z.string(),
  kb_name: z.string(),
  description: z.string(),
  variables: z.number().int().nonnegative(),
  legs: z.number().int().nonnegative(),
  built: z.boolean(),
});
export type KbSummary = z.infer<typeof KbSummary>;

export const KbCatalog = z.object({ kbs: z.array(KbSummary) });
export type KbCatalog = z.infer<typeof KbCatalog>;

export const NetVariable = z.object({
  id: z.string(),
  name: z.string(),
  kind: z.enum(["evidence", "hypothesis", "goal"]),
  is_bev: z.boolean(),
});
export type NetVariable = z.infer<typeof NetVariable>;

export const NetLeg = z.object({
  id: z.string(),
  name: z.string(),
  variables: z.array(NetVariable),
});
export type NetLeg = z.infer<typeof NetLeg>;

export const NetEdge = z.object({
  a: z.string(),
  b: z.string(),
  shared: z.array(z.string()).nonempty(),
});
export type NetEdge = z.infer<typeof NetEdge>;

export const NetPayload = z.object({
  legs: z.array(NetLeg),
  edges: z.array(NetEdge),
  storage: z.object({
    cmd_entries: z.number().int().nonnegative(),
    full_joint_entries: z.number().int().nonnegative(),
  }),
});
export type NetPayload = z.infer<typeof NetPayload>;

const unitInterval = z.number().min(0).max(1);

export const NextConstraint = z.object({
  leg: z.string(),
  accepted: z.number().int().nonnegative(),
  total: z.number().int().nonnegative(),
  remaining: z.number().int().nonnegative(),
  done: z.boolean(),
  key: z.object({ subset: z.array(z.string()).nonempty() }).nullable(),
  interval: z.tuple([unitInterval, unitInterval]).nullable(),
  default: unitInterval.nullable(),
});
export type NextConstraint = z.infer<typeof NextConstraint>;

export const AcceptedRecord = z.object({
  leg: z.string(),
  subset: z.array(z.string()).nonempty(),
  value: unitInterval,
  source: z.enum([
    "user-specified",
    "defaulted",
    "forced-zero",
    "derived-from-cutoff",
  ]),
  entry_form: z.enum(["joint", "conditional"]),
  given: z.array(z.string()).nullable(),
  given_value: unitInterval.nullable(),
});
export type AcceptedRecord = z.infer<typeof AcceptedRecord>;

export const AcceptResponse = z.object({
  accepted: AcceptedRecord,
  next: NextConstraint,
});
export type AcceptResponse = z.infer<typeof AcceptResponse>;

export const BuildResponse = z.object({
  name: z.string(),
  storage: z.object({
    cmd_entries: z.number().int().nonnegative(),
    full_joint_entries: z.number().int().nonnegative(),
  }),
  cmds: z.record(z.string(), z.array(unitInterval)),
});
export type BuildResponse = z.infer<typeof BuildResponse>;

export const MarginalRow = z.object({
  variable: z.string(),
  name: z.string(),
  kind: z.enum(["evidence", "hypothesis", "goal"]),
  is_bev: z.boolean(),
  value: unitInterval,
  asserted: z.boolean().nullable(),
});
export type MarginalRow = z.infer<typeof MarginalRow>;

export const SessionOpened = z.object({
  session_id: z.string(),
  kb: z.string(),
  marginals: z.array(MarginalRow),
});
export type SessionOpened = z.infer<typeof SessionOpened>;

export const MarginalsPayload = z.object({
  session_id: z.string(),
  kb: z.string(),
  marginals: z.array(MarginalRow),
});
export type MarginalsPayload = z.infer<typeof MarginalsPayload>;

export const EvidenceItem = z.object({
  variable: z.string(),
  observed: z.boolean(),
});
export type EvidenceItem = z.infer<typeof EvidenceItem>;

export const UpdateStep = z.object({
  seq: z.number().int().positive(),
  kind: z.enum(["evidence", "propagation"]),
  source_leg: z.string(),
  target_leg: z.string(),
  shared: z.array(z.string()),
  prior_marginal: z.array(unitInterval),
  posterior_marginal: z.array(unitInterval),
  multipliers: z.array(z.number().nonnegative()),
  drift: z.number().nonnegative(),
});
export type UpdateStep = z.infer<typeof UpdateStep>;

export const AssertResponse = z.object({
  session_id: z.string(),
  evidence: z.array(EvidenceItem),
  steps: z.array(UpdateStep),
  marginals: z.array(MarginalRow),
});
export type AssertResponse = z.infer<typeof AssertResponse>;

export const RankEntry = z.object({
  variable: z.string(),
  name: z.string(),
  value: unitInterval,
});
export type RankEntry = z.infer<typeof RankEntry>;

export const RankResponse = z.object({
  session_id: z.string(),
  direction: z.enum(["most-likely", "least-likely"]),
  ranking: z.array(RankEntry),
});
export type RankResponse = z.infer<typeof RankResponse>;

export const TraceResponse = z.object({
  session_id: z.string(),
  steps: z.array(UpdateStep),
});
export type TraceResponse = z.infer<typeof TraceResponse>;

export const ConsistencyEdge = z.object({
  a: z.string(),
  b: z.string(),
  shared: z.array(z.string()),
  max_discrepancy: z.number().nonnegative(),
});
export type ConsistencyEdge = z.infer<typeof ConsistencyEdge>;

export const ConsistencyResponse = z.object({
  session_id: z.string(),
  tol: z.number().positive(),
  ok: z.boolean(),
  max_discrepancy: z.number().nonnegative(),
  edges: z.array(ConsistencyEdge),
});
export type ConsistencyResponse = z.infer<typeof ConsistencyResponse>;

export const ErrorBody = z.object({
  error: z.string(),
  message: z.string(),
  interval: z.tuple([z.number(), z.number()]).optional(),
  violations: z
    .array(z.object({ code: z.string(), where: z.string(), detail: z.string() }))
    .optional(),
});
export type ErrorBody = z.infer<typeof ErrorBody>;

export type Direction = "most-likely" | "least-likely";

/** Accept-constraint request bodies; exactly one entry form per request. */
export type AcceptRequest =
  | { subset?: string[]; value: number }
  | { subset?: string[]; conditional: { given: string[]; value: number } }
  | { subset?: string[]; default: true };
