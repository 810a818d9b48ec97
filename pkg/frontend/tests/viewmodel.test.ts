/** Session view logic against payloads captured from the live service. */

import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";
import { parseEventLines } from "../src/api.js";
import {
  canSend,
  canUpload,
  eventLabel,
  exportViewFromText,
  hasFinalAnswer,
  pipelineSummary,
  resultsTable,
  statsViewFromText,
  TranscriptModel,
  uploadSummary,
} from "../src/viewmodel.js";
import { ChatEvent, ResultsPage, UploadResult } from "../src/types.js";

function fixture(name: string): string {
  return readFileSync(new URL(`./fixtures/${name}`, import.meta.url), "utf-8");
}

const EVENTS: ChatEvent[] = parseEventLines(
  fixture("events.ndjson").split("\n").filter((line) => line !== ""),
);
const RESULTS = JSON.parse(fixture("results.json")) as ResultsPage;
const STATS_TEXT = fixture("stats.json");
const EXPORT_TEXT = fixture("export.json");
const GOLDEN_PIPELINE = fixture("pipeline.golden.json");
const GOLDEN_SCRIPT = fixture("script.golden.txt");

function seqs(model: TranscriptModel): number[] {
  return model.events.map((event) => event.seq);
}

describe("transcript ingestion", () => {
  const ordered = EVENTS.map((event) => event.seq);

  it("replays the captured session exactly once, in order", () => {
    const model = new TranscriptModel();
    const appended = model.ingest(EVENTS);
    expect(appended).toEqual(EVENTS);
    expect(seqs(model)).toEqual(ordered);
    expect(ordered).toEqual(EVENTS.map((_, i) => i + 1));
  });

  it("drops duplicates on a second delivery", () => {
    const model = new TranscriptModel();
    model.ingest(EVENTS);
    expect(model.ingest(EVENTS)).toEqual([]);
    expect(seqs(model)).toEqual(ordered);
  });

  it("handles overlapping resume batches", () => {
    const model = new TranscriptModel();
    model.ingest(EVENTS.slice(0, 10));
    const appended = model.ingest(EVENTS.slice(4));
    expect(appended).toEqual(EVENTS.slice(10));
    expect(seqs(model)).toEqual(ordered);
  });

  it("orders a shuffled batch by sequence number", () => {
    const model = new TranscriptModel();
    const shuffled = [...EVENTS].reverse();
    model.ingest(shuffled);
    expect(seqs(model)).toEqual(ordered);
  });

  it("holds events past a gap until the gap fills", () => {
    const model = new TranscriptModel();
    expect(model.ingest([EVENTS[2] as ChatEvent])).toEqual([]);
    expect(model.events).toEqual([]);
    const appended = model.ingest(EVENTS.slice(0, 2));
    expect(appended).toEqual(EVENTS.slice(0, 3));
    expect(model.lastSeq).toBe(3);
  });

  it("tracks the resume cursor", () => {
    const model = new TranscriptModel();
    expect(model.lastSeq).toBe(0);
    model.ingest(EVENTS);
    expect(model.lastSeq).toBe(19);
  });

  it("spots the final answer", () => {
    expect(hasFinalAnswer(EVENTS)).toBe(true);
    expect(hasFinalAnswer(EVENTS.slice(0, 18))).toBe(false);
    const last = EVENTS[EVENTS.length - 1] as ChatEvent;
    expect(last.kind).toBe("final_answer");
    expect(last.payload.text).toBe(
      "Extracted 6 clinical data datasets from 11 papers.",
    );
  });
});

describe("event chips", () => {
  it("labels thoughts and observations with their text", () => {
    const thought = EVENTS[0] as ChatEvent;
    expect(thought.kind).toBe("thought");
    expect(eventLabel(thought)).toBe(thought.payload.text);
  });

  it("labels actions with the rendered call", () => {
    const action = EVENTS.find((event) => event.kind === "action") as ChatEvent;
    expect(eventLabel(action)).toContain("register_dataset(");
  });

  it("falls back to the tool name when rendering failed", () => {
    const bare: ChatEvent = {
      seq: 1,
      kind: "action",
      payload: { tool: "run_pipeline", args: {}, rendered: null },
    };
    expect(eventLabel(bare)).toBe("run_pipeline");
  });
});

describe("results table", () => {
  it("shows one row per record and the API total", () => {
    const table = resultsTable(RESULTS);
    expect(table.total).toBe(6);
    expect(table.rows.length).toBe(6);
    expect(table.rows.length).toBe(RESULTS.total);
  });

  it("derives columns from the record values", () => {
    const table = resultsTable(RESULTS);
    expect(table.columns).toEqual(["name", "description", "url"]);
    const first = table.rows[0];
    expect(first?.id).toBe("rec-0001/0");
    expect(first?.cells[0]).toBe("CRC Screening Cohort");
    expect(first?.source).toBe("paper02.pdf");
  });

  it("renders an empty page as an empty table", () => {
    const table = resultsTable({ total: 0, offset: 0, limit: 50, records: [] });
    expect(table.columns).toEqual([]);
    expect(table.rows).toEqual([]);
  });
});

describe("stats view", () => {
  it("keeps every displayed value string-identical to the payload", () => {
    const stats = statsViewFromText(STATS_TEXT);
    expect(stats.totalCostUsd).toBe("0.15");
    expect(stats.totalTimeS).toBe("7.75");
    expect(STATS_TEXT).toContain(`"total_cost_usd":${stats.totalCostUsd}`);
    expect(STATS_TEXT).toContain(`"total_time_s":${stats.totalTimeS}`);
  });

  it("keeps per-op tokens the client would otherwise reformat", () => {
    const stats = statsViewFromText(STATS_TEXT);
    expect(stats.perOp.map((op) => op.descriptor)).toEqual([
      "scan",
      "filter:llm:strong",
      "convert:llm:strong",
    ]);
    const scan = stats.perOp[0];
    // JSON.parse followed by String() would display these as "0".
    expect(scan?.timeS).toBe("0.0");
    expect(scan?.costUsd).toBe("0.0");
    expect(stats.perOp[1]?.costUsd).toBe("0.11");
    expect(stats.perOp[2]?.recordsOut).toBe("6");
  });

  it("rejects payloads missing fields", () => {
    expect(() => statsViewFromText('{"per_op":[]}')).toThrow(/total_cost_usd/);
    expect(() => statsViewFromText("[]")).toThrow(/not an object/);
  });
});

describe("export view", () => {
  it("reproduces the canonical pipeline file byte for byte", () => {
    const view = exportViewFromText(EXPORT_TEXT);
    expect(view.pipelineText).toBe(GOLDEN_PIPELINE);
  });

  it("passes the script listing through unchanged", () => {
    const view = exportViewFromText(EXPORT_TEXT);
    expect(view.script).toBe(GOLDEN_SCRIPT);
  });

  it("rejects payloads without a pipeline", () => {
    expect(() => exportViewFromText('{"script":"x"}')).toThrow(/pipeline/);
    expect(() => exportViewFromText('{"pipeline":{}}')).toThrow(/script/);
  });
});

describe("pipeline panel", () => {
  it("summarizes the exported plan ops", () => {
    const plan = JSON.parse(GOLDEN_PIPELINE) as unknown;
    expect(pipelineSummary(plan)).toEqual([
      "source: sigmod-demo",
      'filter predicate="The papers are about colorectal cancer"',
      "convert target=ClinicalData cardinality=one_to_many",
    ]);
  });

  it("summarizes every operator type", () => {
    const plan = {
      source: "s",
      ops: [
        { type: "filter", udf: "has_title" },
        { type: "aggregate", fn: "count" },
        { type: "aggregate", fn: "sum", field: "score" },
        { type: "limit", n: 5 },
      ],
    };
    expect(pipelineSummary(plan)).toEqual([
      "source: s",
      "filter udf=has_title",
      "aggregate fn=count",
      "aggregate fn=sum field=score",
      "limit n=5",
    ]);
  });

  it("shows a placeholder with no plan", () => {
    expect(pipelineSummary(null)).toEqual(["no pipeline yet"]);
  });
});

describe("input gating", () => {
  it("disables send for empty or whitespace text", () => {
    expect(canSend("", false)).toBe(false);
    expect(canSend("   ", false)).toBe(false);
    expect(canSend("hello", false)).toBe(true);
  });

  it("disables send while the agent is busy", () => {
    expect(canSend("hello", true)).toBe(false);
  });

  it("disables upload without files or a dataset id", () => {
    expect(canUpload("papers", 0)).toBe(false);
    expect(canUpload("  ", 3)).toBe(false);
    expect(canUpload("papers", 11)).toBe(true);
  });
});

describe("upload confirmation", () => {
  it("reports the record count from the captured upload", () => {
    const result = JSON.parse(fixture("upload.json")) as UploadResult;
    expect(result.record_count).toBe(11);
    expect(uploadSummary(result)).toBe(
      "Registered dataset 'paper-corpus' with 11 records (schema PDFFile).",
    );
  });
});
