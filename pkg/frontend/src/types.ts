/** Payload shapes served by the pipeline chat service. */

export type EventKind = "thought" | "action" | "observation" | "final_answer";

export interface EventPayload {
  text?: string;
  tool?: string;
  args?: Record<string, unknown>;
  rendered?: string | null;
}

export interface ChatEvent {
  seq: number;
  kind: EventKind;
  payload: EventPayload;
}

export interface ResultRecord {
  id: string;
  schema: string;
  values: Record<string, unknown>;
  parents: string[];
  source: string | null;
  source_error: string | null;
}

export interface ResultsPage {
  total: number;
  offset: number;
  limit: number;
  records: ResultRecord[];
}

/** Stats keep the server's number tokens verbatim; no client rounding. */
export interface OpStatsRow {
  descriptor: string;
  recordsIn: string;
  recordsOut: string;
  timeS: string;
  costUsd: string;
  modelCalls: string;
  failures: string;
}

export interface StatsView {
  totalCostUsd: string;
  totalTimeS: string;
  perOp: OpStatsRow[];
}

/** Export ready to save: canonical pipeline bytes plus the script listing. */
export interface ExportView {
  pipelineText: string;
  script: string;
}

export interface PipelinePayload {
  plan: unknown;
  diagnostics: string[];
}

export interface UploadResult {
  dataset_id: string;
  record_count: number;
  schema: string;
}

export type SendOutcome =
  | { status: "accepted" }
  | { status: "busy"; detail: string };
