/**
 * Worker surface: structure-aware outline editor in suggestion mode, a
 * comment sidebar, and the current-task banner. Every change is staged
 * locally and flushed as suggested edits; the rendered outline always shows
 * the server's canonical snapshot, updated only via events.
 */

import { ApiClient, ApiError } from "./api";
import { WorkerEditor } from "./editor";
import type { BlockRecord } from "./types";

const PUMP_INTERVAL_MS = 3000;

export class WorkerView {
  editor: WorkerEditor;
  selectedBlock: string | null = null;
  running = false;
  statusLine = "";

  constructor(
    private root: HTMLElement,
    api: ApiClient,
    docId: string,
    actorId: string,
  ) {
    this.editor = new WorkerEditor(api, docId, actorId);
  }

  async start(): Promise<void> {
    await this.editor.refresh();
    this.render();
    this.running = true;
    this.pumpLoop();
  }

  stop(): void {
    this.running = false;
  }

  private async pumpLoop(): Promise<void> {
    while (this.running) {
      try {
        const events = await this.editor.pump(PUMP_INTERVAL_MS);
        if (events.length > 0) {
          for (const event of events) {
            if (event.kind === "edit_reviewed") {
              this.statusLine = `your ${event.payload.kind} was ${event.payload.decision}ed`;
            }
          }
          this.render();
        }
      } catch (err) {
        this.statusLine = err instanceof ApiError ? `error: ${err.code}` : String(err);
        this.render();
        await new Promise((r) => setTimeout(r, PUMP_INTERVAL_MS));
      }
    }
  }

  render(): void {
    const doc = this.editor.docSnapshot;
    this.root.innerHTML = "";
    this.root.classList.add("worker-desk");

    const banner = document.createElement("div");
    banner.className = "task-banner";
    const task = this.editor.currentTask;
    banner.innerHTML = task
      ? `<span class="task-desc">${task.description}</span>`
      : `<span class="task-desc none">no task assigned</span>`;
    const taskActions = document.createElement("span");
    if (task) {
      this.button(taskActions, "done", async () => {
        await this.editor.completeCurrentTask();
        this.render();
      });
      this.button(taskActions, "skip", async () => {
        await this.editor.skipCurrentTask();
        this.render();
      });
    } else {
      this.button(taskActions, "get task", async () => {
        await this.editor.pullTask();
        this.render();
      });
    }
    banner.appendChild(taskActions);
    this.root.appendChild(banner);

    const main = document.createElement("div");
    main.className = "desk-main";
    this.root.appendChild(main);

    const outline = document.createElement("div");
    outline.className = "outline";
    main.appendChild(outline);
    if (doc) {
      const byParent = new Map<string, BlockRecord[]>();
      for (const block of doc.blocks) {
        const list = byParent.get(block.parent_id) ?? [];
        list.push(block);
        byParent.set(block.parent_id, list);
      }
      for (const list of byParent.values()) {
        list.sort((a, b) => (a.order_key < b.order_key ? -1 : 1));
      }
      for (const section of byParent.get("") ?? []) {
        outline.appendChild(this.blockRow(section, 0));
        for (const child of byParent.get(section.id) ?? []) {
          outline.appendChild(this.blockRow(child, 1));
        }
      }
    }

    const side = document.createElement("div");
    side.className = "sidebar";
    main.appendChild(side);

    const staged = document.createElement("div");
    staged.className = "staged";
    staged.innerHTML = `<h3>staged changes (${this.editor.localChanges.length})</h3>`;
    for (const change of this.editor.localChanges) {
      const row = document.createElement("div");
      row.className = `change ${change.status}`;
      row.textContent = change.label + (change.error ? ` [${change.error}]` : "");
      this.button(row, "x", () => {
        this.editor.discard(change);
        this.render();
      });
      staged.appendChild(row);
    }
    const flush = document.createElement("button");
    flush.className = "flush";
    flush.textContent = "suggest all";
    flush.disabled = !this.editor.canFlush;
    flush.addEventListener("click", async () => {
      const result = await this.editor.flush();
      this.statusLine = `sent ${result.posted} suggestion(s)` + (result.failed ? `, ${result.failed} failed` : "");
      this.render();
    });
    staged.appendChild(flush);
    side.appendChild(staged);

    const comments = document.createElement("div");
    comments.className = "comments";
    comments.innerHTML = `<h3>comment</h3>`;
    const box = document.createElement("textarea");
    box.placeholder = this.selectedBlock ? `comment on ${this.selectedBlock}` : "select a block first";
    comments.appendChild(box);
    this.button(comments, "post", async () => {
      const text = box.value.trim();
      if (!text || !this.selectedBlock) return;
      try {
        await this.editor.openThread(this.selectedBlock, text);
        this.statusLine = "comment posted";
      } catch (err) {
        this.statusLine = err instanceof ApiError ? `error: ${err.code}` : String(err);
      }
      this.render();
    });
    side.appendChild(comments);

    const status = document.createElement("div");
    status.className = "status";
    status.textContent = this.statusLine || (doc ? `revision ${doc.revision}` : "loading");
    this.root.appendChild(status);
  }

  private blockRow(block: BlockRecord, depth: number): HTMLElement {
    const row = document.createElement("div");
    row.className = `block kind-${block.kind} depth-${depth}` + (this.selectedBlock === block.id ? " selected" : "");
    const text = document.createElement("span");
    text.className = "block-text";
    text.textContent = block.kind === "bullet" && block.done ? `~~${block.text}~~` : block.text;
    text.addEventListener("click", () => {
      this.selectedBlock = block.id;
      this.render();
    });
    row.appendChild(text);
    const tools = document.createElement("span");
    tools.className = "tools";
    this.button(tools, "edit", () => {
      const replacement = window.prompt("suggest replacement text", block.text);
      if (replacement !== null && replacement !== block.text) {
        this.editor.stage(
          { kind: "replace", block_id: block.id, new_text: replacement },
          `replace ${block.kind} "${block.text.slice(0, 24)}"`,
        );
        this.render();
      }
    });
    if (block.kind !== "section") {
      this.button(tools, "del", () => {
        this.editor.stage({ kind: "delete", block_id: block.id }, `delete "${block.text.slice(0, 24)}"`);
        this.render();
      });
    }
    if (block.kind === "bullet") {
      this.button(tools, block.done ? "undone" : "done", () => {
        this.editor.stage(
          { kind: "format", block_id: block.id, done: !block.done },
          `mark "${block.text.slice(0, 24)}" ${block.done ? "not done" : "done"}`,
        );
        this.render();
      });
    }
    if (block.kind === "section") {
      this.button(tools, "+bullet", () => {
        const content = window.prompt("new bullet text", "");
        if (content) {
          this.editor.stage(
            { kind: "insert", parent_id: block.id, after_id: null, block_kind: "bullet", new_text: content },
            `insert bullet under "${block.text.slice(0, 24)}"`,
          );
          this.render();
        }
      });
      this.button(tools, "+para", () => {
        const content = window.prompt("new paragraph text", "");
        if (content) {
          this.editor.stage(
            { kind: "insert", parent_id: block.id, after_id: null, block_kind: "paragraph", new_text: content },
            `insert paragraph under "${block.text.slice(0, 24)}"`,
          );
          this.render();
        }
      });
    }
    row.appendChild(tools);
    return row;
  }

  private button(parent: HTMLElement, label: string, handler: () => void): void {
    const b = document.createElement("button");
    b.textContent = label;
    b.addEventListener("click", handler);
    parent.appendChild(b);
  }
}
