/** Typed fetch client for the pipeline chat service. */

import { exportViewFromText, statsViewFromText } from "./viewmodel.js";
import {
  ChatEvent,
  ExportView,
  PipelinePayload,
  ResultsPage,
  SendOutcome,
  StatsView,
  UploadResult,
} from "./types.js";

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

/** Accumulates stream chunks and emits complete non-empty lines. */
export class NdjsonSplitter {
  private buffer = "";

  feed(chunk: string): string[] {
    this.buffer += chunk;
    const lines = this.buffer.split("\n");
    this.buffer = lines.pop() ?? "";
    return lines.filter((line) => line.trim() !== "");
  }

  flush(): string[] {
    const rest = this.buffer.trim();
    this.buffer = "";
    return rest === "" ? [] : [rest];
  }
}

export function parseEventLines(lines: string[]): ChatEvent[] {
  return lines.map((line) => JSON.parse(line) as ChatEvent);
}

export class ServiceClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  async createSession(): Promise<string> {
    const response = await this.fetchImpl(`${this.baseUrl}/sessions`, {
      method: "POST",
    });
    const body = (await this.ok(response).json()) as { session_id: string };
    return body.session_id;
  }

  async sendMessage(sessionId: string, text: string): Promise<SendOutcome> {
    const response = await this.fetchImpl(
      `${this.baseUrl}/sessions/${sessionId}/messages`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ text }),
      },
    );
    if (response.status === 409) {
      const body = (await response.json()) as { detail: string };
      return { status: "busy", detail: body.detail };
    }
    this.ok(response);
    return { status: "accepted" };
  }

  /**
   * Read the event stream, calling onEvent per line until the server closes
   * it (after a final answer, or immediately when the session is idle).
   */
  async streamEvents(
    sessionId: string,
    after: number,
    onEvent: (event: ChatEvent) => void,
  ): Promise<void> {
    const response = await this.fetchImpl(
      `${this.baseUrl}/sessions/${sessionId}/events?after=${after}`,
    );
    const body = this.ok(response).body;
    if (body === null) {
      return;
    }
    const reader = body.getReader();
    const decoder = new TextDecoder();
    const splitter = new NdjsonSplitter();
    const emit = (lines: string[]): void => {
      for (const event of parseEventLines(lines)) {
        onEvent(event);
      }
    };
    for (;;) {
      const { value, done } = await reader.read();
      if (done) {
        emit(splitter.flush());
        return;
      }
      emit(splitter.feed(decoder.decode(value, { stream: true })));
    }
  }

  async fetchResults(
    sessionId: string,
    offset = 0,
    limit = 50,
  ): Promise<ResultsPage> {
    const response = await this.fetchImpl(
      `${this.baseUrl}/sessions/${sessionId}/results?offset=${offset}&limit=${limit}`,
    );
    return (await this.ok(response).json()) as ResultsPage;
  }

  async fetchStats(sessionId: string): Promise<StatsView | null> {
    const response = await this.fetchImpl(
      `${this.baseUrl}/sessions/${sessionId}/stats`,
    );
    if (response.status === 404) {
      return null;
    }
    // Text, not json(): display must keep the server's number tokens.
    return statsViewFromText(await this.ok(response).text());
  }

  async fetchPipeline(sessionId: string): Promise<PipelinePayload> {
    const response = await this.fetchImpl(
      `${this.baseUrl}/sessions/${sessionId}/pipeline`,
    );
    return (await this.ok(response).json()) as PipelinePayload;
  }

  async fetchExport(sessionId: string): Promise<ExportView> {
    const response = await this.fetchImpl(
      `${this.baseUrl}/sessions/${sessionId}/export`,
    );
    // Text, not json(): the saved pipeline must be byte-canonical.
    return exportViewFromText(await this.ok(response).text());
  }

  async uploadDataset(
    datasetId: string,
    files: { name: string; blob: Blob }[],
  ): Promise<UploadResult> {
    const form = new FormData();
    form.append("dataset_id", datasetId);
    for (const file of files) {
      form.append("files", file.blob, file.name);
    }
    const response = await this.fetchImpl(`${this.baseUrl}/datasets`, {
      method: "POST",
      body: form,
    });
    return (await this.ok(response).json()) as UploadResult;
  }

  private ok(response: Response): Response {
    if (!response.ok) {
      throw new Error(`service error ${response.status}`);
    }
    return response;
  }
}
