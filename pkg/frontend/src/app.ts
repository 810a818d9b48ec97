/** Browser wiring: one chat session against the pipeline service. */

import { ServiceClient } from "./api.js";
import {
  canSend,
  canUpload,
  eventLabel,
  hasFinalAnswer,
  pipelineSummary,
  resultsTable,
  TranscriptModel,
  uploadSummary,
} from "./viewmodel.js";
import { ChatEvent, OpStatsRow } from "./types.js";

const PAGE_SIZE = 50;

function element<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (found === null) {
    throw new Error(`missing element #${id}`);
  }
  return found as T;
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

class App {
  private client: ServiceClient;
  private transcript = new TranscriptModel();
  private sessionId = "";
  private busy = false;
  private resultsOffset = 0;

  private log = element<HTMLDivElement>("transcript");
  private input = element<HTMLInputElement>("message-input");
  private sendButton = element<HTMLButtonElement>("send-button");
  private notice = element<HTMLSpanElement>("notice");
  private reconnect = element<HTMLSpanElement>("reconnect");
  private sessionLabel = element<HTMLSpanElement>("session-label");

  constructor() {
    const api = new URLSearchParams(location.search).get("api") ?? "";
    this.client = new ServiceClient(api);
  }

  async start(): Promise<void> {
    this.sessionId = await this.client.createSession();
    this.sessionLabel.textContent = this.sessionId;
    this.wireChat();
    this.wireUpload();
    this.wireResultsPaging();
    this.wireExport();
    this.syncControls();
    // A restored session may already hold a transcript and results.
    await this.pumpEvents();
    await this.refreshPanels();
  }

  private wireChat(): void {
    this.input.addEventListener("input", () => this.syncControls());
    const submit = (): void => {
      void this.sendMessage(this.input.value);
    };
    this.sendButton.addEventListener("click", submit);
    this.input.addEventListener("keydown", (event) => {
      if (event.key === "Enter" && canSend(this.input.value, this.busy)) {
        submit();
      }
    });
  }

  private async sendMessage(text: string): Promise<void> {
    if (!canSend(text, this.busy)) {
      return;
    }
    this.setBusy(true, "");
    try {
      const outcome = await this.client.sendMessage(this.sessionId, text);
      if (outcome.status === "busy") {
        // Another run is active; stay locked and follow it to its end.
        this.setBusy(true, `Agent is busy: ${outcome.detail}`);
      } else {
        this.appendUserBubble(text);
        this.input.value = "";
      }
      await this.pumpEvents();
      await this.refreshPanels();
      this.setBusy(false, "");
    } catch (error) {
      this.setBusy(false, `Send failed: ${String(error)}`);
    }
  }

  /** Follow the event stream until a final answer lands; resume on drops. */
  private async pumpEvents(): Promise<void> {
    for (;;) {
      let finished = false;
      try {
        await this.client.streamEvents(
          this.sessionId,
          this.transcript.lastSeq,
          (event) => {
            const appended = this.transcript.ingest([event]);
            appended.forEach((fresh) => this.appendEventChip(fresh));
            if (hasFinalAnswer(appended)) {
              finished = true;
            }
          },
        );
        this.reconnect.hidden = true;
      } catch {
        this.reconnect.hidden = false;
        await sleep(800);
        continue;
      }
      if (finished || !this.busy) {
        return;
      }
      // Stream closed early while a run is active; resume after last seq.
      await sleep(200);
    }
  }

  private appendUserBubble(text: string): void {
    const bubble = document.createElement("div");
    bubble.className = "bubble user";
    bubble.textContent = text;
    this.log.appendChild(bubble);
    this.log.scrollTop = this.log.scrollHeight;
  }

  private appendEventChip(event: ChatEvent): void {
    const chip = document.createElement("div");
    chip.className = `bubble event ${event.kind}`;
    const kind = document.createElement("span");
    kind.className = "kind";
    kind.textContent = event.kind.replace("_", " ");
    const body = document.createElement("span");
    body.textContent = eventLabel(event);
    chip.append(kind, body);
    this.log.appendChild(chip);
    this.log.scrollTop = this.log.scrollHeight;
  }

  private setBusy(busy: boolean, noticeText: string): void {
    this.busy = busy;
    this.notice.textContent = noticeText;
    this.syncControls();
  }

  private syncControls(): void {
    this.sendButton.disabled = !canSend(this.input.value, this.busy);
    this.input.disabled = this.busy;
  }

  private async refreshPanels(): Promise<void> {
    await Promise.all([
      this.refreshPipeline(),
      this.refreshResults(),
      this.refreshStats(),
    ]);
  }

  private async refreshPipeline(): Promise<void> {
    const payload = await this.client.fetchPipeline(this.sessionId);
    const list = element<HTMLUListElement>("pipeline-list");
    list.replaceChildren(
      ...pipelineSummary(payload.plan).map((line) => {
        const item = document.createElement("li");
        item.textContent = line;
        return item;
      }),
    );
    const diagnostics = element<HTMLDivElement>("pipeline-diagnostics");
    diagnostics.textContent = payload.diagnostics.join("; ");
  }

  private async refreshResults(): Promise<void> {
    const page = await this.client.fetchResults(
      this.sessionId,
      this.resultsOffset,
      PAGE_SIZE,
    );
    const table = resultsTable(page);
    const head = element<HTMLTableRowElement>("results-head");
    head.replaceChildren(
      ...["id", ...table.columns, "source"].map((name) => {
        const cell = document.createElement("th");
        cell.textContent = name;
        return cell;
      }),
    );
    const body = element<HTMLTableSectionElement>("results-body");
    body.replaceChildren(
      ...table.rows.map((row) => {
        const tr = document.createElement("tr");
        [row.id, ...row.cells, row.source].forEach((text) => {
          const cell = document.createElement("td");
          cell.textContent = text;
          tr.appendChild(cell);
        });
        return tr;
      }),
    );
    const caption = element<HTMLSpanElement>("results-caption");
    caption.textContent =
      table.total === 0
        ? "no results yet"
        : `${table.rows.length} of ${table.total} records`;
    element<HTMLButtonElement>("results-prev").disabled =
      this.resultsOffset === 0;
    element<HTMLButtonElement>("results-next").disabled =
      this.resultsOffset + PAGE_SIZE >= table.total;
  }

  private async refreshStats(): Promise<void> {
    const stats = await this.client.fetchStats(this.sessionId);
    const totals = element<HTMLSpanElement>("stats-totals");
    const body = element<HTMLTableSectionElement>("stats-body");
    if (stats === null) {
      totals.textContent = "not run yet";
      body.replaceChildren();
      return;
    }
    totals.textContent = `total cost ${stats.totalCostUsd} USD, total time ${stats.totalTimeS} s`;
    body.replaceChildren(...stats.perOp.map((op) => statsRow(op)));
  }

  private wireResultsPaging(): void {
    element<HTMLButtonElement>("results-prev").addEventListener("click", () => {
      this.resultsOffset = Math.max(0, this.resultsOffset - PAGE_SIZE);
      void this.refreshResults();
    });
    element<HTMLButtonElement>("results-next").addEventListener("click", () => {
      this.resultsOffset += PAGE_SIZE;
      void this.refreshResults();
    });
  }

  private wireUpload(): void {
    const datasetId = element<HTMLInputElement>("dataset-id");
    const files = element<HTMLInputElement>("dataset-files");
    const button = element<HTMLButtonElement>("upload-button");
    const status = element<HTMLSpanElement>("upload-status");
    const sync = (): void => {
      button.disabled = !canUpload(datasetId.value, files.files?.length ?? 0);
    };
    datasetId.addEventListener("input", sync);
    files.addEventListener("change", sync);
    button.addEventListener("click", () => {
      void (async () => {
        const picked = Array.from(files.files ?? []).map((file) => ({
          name: file.name,
          blob: file as Blob,
        }));
        button.disabled = true;
        try {
          const result = await this.client.uploadDataset(
            datasetId.value.trim(),
            picked,
          );
          status.textContent = uploadSummary(result);
        } catch (error) {
          status.textContent = `Upload failed: ${String(error)}`;
        }
        sync();
      })();
    });
    sync();
  }

  private wireExport(): void {
    element<HTMLButtonElement>("export-pipeline").addEventListener(
      "click",
      () => {
        void (async () => {
          const view = await this.client.fetchExport(this.sessionId);
          downloadFile("pipeline.json", view.pipelineText, "application/json");
        })();
      },
    );
    element<HTMLButtonElement>("export-script").addEventListener(
      "click",
      () => {
        void (async () => {
          const view = await this.client.fetchExport(this.sessionId);
          downloadFile("script.txt", view.script, "text/plain");
        })();
      },
    );
  }
}

function statsRow(op: OpStatsRow): HTMLTableRowElement {
  const tr = document.createElement("tr");
  const cells = [
    op.descriptor,
    op.recordsIn,
    op.recordsOut,
    op.timeS,
    op.costUsd,
    op.modelCalls,
    op.failures,
  ];
  cells.forEach((text) => {
    const cell = document.createElement("td");
    cell.textContent = text;
    tr.appendChild(cell);
  });
  return tr;
}

function downloadFile(name: string, text: string, mime: string): void {
  const url = URL.createObjectURL(new Blob([text], { type: mime }));
  const anchor = document.createElement("a");
  anchor.href = url;
  anchor.download = name;
  anchor.click();
  URL.revokeObjectURL(url);
}

document.addEventListener("DOMContentLoaded", () => {
  new App().start().catch((error) => {
    element<HTMLSpanElement>("notice").textContent =
      `Could not reach the service: ${String(error)}`;
  });
});
