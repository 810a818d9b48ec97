/** Pure session state; every value here comes from a service payload. */

import { canonicalJson, parseRawNumbers, RawNumber, RawValue } from "./json.js";
import {
  ChatEvent,
  ExportView,
  OpStatsRow,
  ResultsPage,
  StatsView,
  UploadResult,
} from "./types.js";

/** Transcript that admits each event exactly once, in sequence order. */
export class TranscriptModel {
  readonly events: ChatEvent[] = [];
  // Events past a gap wait here until the stream delivers the gap.
  private pending = new Map<number, ChatEvent>();

  get lastSeq(): number {
    const last = this.events[this.events.length - 1];
    return last === undefined ? 0 : last.seq;
  }

  /** Admit a batch; returns the events newly appended, in order. */
  ingest(batch: ChatEvent[]): ChatEvent[] {
    for (const event of batch) {
      if (event.seq > this.lastSeq && !this.pending.has(event.seq)) {
        this.pending.set(event.seq, event);
      }
    }
    const appended: ChatEvent[] = [];
    for (;;) {
      const next = this.pending.get(this.lastSeq + 1);
      if (next === undefined) {
        return appended;
      }
      this.pending.delete(next.seq);
      this.events.push(next);
      appended.push(next);
    }
  }
}

export function hasFinalAnswer(events: ChatEvent[]): boolean {
  return events.some((event) => event.kind === "final_answer");
}

/** One line of display text per event chip. */
export function eventLabel(event: ChatEvent): string {
  if (event.kind === "action") {
    const rendered = event.payload.rendered;
    const tool = event.payload.tool ?? "?";
    return rendered == null ? tool : rendered;
  }
  return event.payload.text ?? "";
}

export function canSend(text: string, busy: boolean): boolean {
  return !busy && text.trim() !== "";
}

export function canUpload(datasetId: string, fileCount: number): boolean {
  return datasetId.trim() !== "" && fileCount > 0;
}

export function uploadSummary(result: UploadResult): string {
  return `Registered dataset '${result.dataset_id}' with ${result.record_count} records (schema ${result.schema}).`;
}

export interface ResultsTable {
  total: number;
  columns: string[];
  rows: { id: string; source: string; cells: string[] }[];
}

/** Table model for one results page; row count always equals the page. */
export function resultsTable(page: ResultsPage): ResultsTable {
  const first = page.records[0];
  const columns = first === undefined ? [] : Object.keys(first.values);
  const rows = page.records.map((record) => ({
    id: record.id,
    source: record.source ?? "",
    cells: columns.map((column) => cellText(record.values[column])),
  }));
  return { total: page.total, columns, rows };
}

function cellText(value: unknown): string {
  if (value === undefined || value === null) {
    return "";
  }
  return typeof value === "string" ? value : JSON.stringify(value);
}

/** Build the stats view from response text, keeping number tokens verbatim. */
export function statsViewFromText(text: string): StatsView {
  const doc = asObject(parseRawNumbers(text), "stats");
  const perOp = asArray(doc["per_op"], "per_op").map((row, index) => {
    const op = asObject(row, `per_op[${index}]`);
    const field = (name: string): string => asToken(op[name], name);
    const view: OpStatsRow = {
      descriptor: field("descriptor"),
      recordsIn: field("records_in"),
      recordsOut: field("records_out"),
      timeS: field("time_s"),
      costUsd: field("cost_usd"),
      modelCalls: field("model_calls"),
      failures: field("failures"),
    };
    return view;
  });
  return {
    totalCostUsd: asToken(doc["total_cost_usd"], "total_cost_usd"),
    totalTimeS: asToken(doc["total_time_s"], "total_time_s"),
    perOp,
  };
}

/** One display line per pipeline element for the plan panel. */
export function pipelineSummary(plan: unknown): string[] {
  if (plan === null || plan === undefined) {
    return ["no pipeline yet"];
  }
  const doc = plan as { source?: unknown; ops?: unknown };
  const lines = [`source: ${String(doc.source ?? "?")}`];
  const ops = Array.isArray(doc.ops) ? doc.ops : [];
  for (const op of ops) {
    lines.push(opSummary(op as Record<string, unknown>));
  }
  return lines;
}

function opSummary(op: Record<string, unknown>): string {
  const type = String(op["type"] ?? "?");
  if (type === "filter") {
    return op["udf"] === undefined
      ? `filter predicate="${String(op["predicate"])}"`
      : `filter udf=${String(op["udf"])}`;
  }
  if (type === "convert") {
    const schema = op["schema"] as { name?: unknown } | undefined;
    const target = String(schema?.name ?? "?");
    return `convert target=${target} cardinality=${String(op["cardinality"])}`;
  }
  if (type === "aggregate") {
    const field = op["field"];
    const suffix = field === undefined ? "" : ` field=${String(field)}`;
    return `aggregate fn=${String(op["fn"])}${suffix}`;
  }
  if (type === "limit") {
    return `limit n=${String(op["n"])}`;
  }
  return type;
}

/** Build the export view from response text; pipeline bytes stay canonical. */
export function exportViewFromText(text: string): ExportView {
  const doc = asObject(parseRawNumbers(text), "export");
  const script = doc["script"];
  if (typeof script !== "string") {
    throw new Error("script is missing");
  }
  if (doc["pipeline"] === undefined) {
    throw new Error("pipeline is missing");
  }
  return { pipelineText: canonicalJson(doc["pipeline"]), script };
}

function asObject(
  value: RawValue | undefined,
  name: string,
): { [key: string]: RawValue } {
  if (
    value === null ||
    value === undefined ||
    typeof value !== "object" ||
    Array.isArray(value) ||
    value instanceof RawNumber
  ) {
    throw new Error(`${name} is not an object`);
  }
  return value;
}

function asArray(value: RawValue | undefined, name: string): RawValue[] {
  if (!Array.isArray(value)) {
    throw new Error(`${name} is not an array`);
  }
  return value;
}

function asToken(value: RawValue | undefined, name: string): string {
  if (value instanceof RawNumber) {
    return value.token;
  }
  if (typeof value !== "string") {
    throw new Error(`${name} is missing`);
  }
  return value;
}
