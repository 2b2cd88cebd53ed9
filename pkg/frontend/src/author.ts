/**
 * Watch-style author surface: a fixed small viewport showing one thing at a
 * time. Cards arrive oldest-first from the event queue; every edit card
 * offers both accept and reject; replies and dictation go through a single
 * text box with an optional raw-input token attached.
 */

import { ApiClient, ApiError } from "./api";
import { CardQueue, type CardViewModel } from "./cards";
import { ThumbnailBrowser } from "./thumbs";

export const DEFAULT_VIEWPORT_PX = 320;
const POLL_WAIT_MS = 4000;

type Mode = "card" | "reply" | "dictate" | "thumbs" | "page";

export class AuthorView {
  queue: CardQueue;
  thumbs: ThumbnailBrowser;
  card: CardViewModel | null = null;
  mode: Mode = "card";
  polling = false;

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
    private docId: string,
    private viewportPx = DEFAULT_VIEWPORT_PX,
  ) {
    this.queue = new CardQueue(api, docId);
    this.thumbs = new ThumbnailBrowser(api, docId);
  }

  async start(): Promise<void> {
    this.renderShell();
    await this.advance(0);
    this.loop();
  }

  private async loop(): Promise<void> {
    this.polling = true;
    while (this.polling) {
      if (this.card === null && this.mode === "card") {
        await this.advance(POLL_WAIT_MS);
      }
      // Macrotask yield even when the poll returns immediately, so a fast
      // (or failing) server cannot starve the UI timer queue.
      await new Promise((r) => setTimeout(r, 250));
    }
  }

  stop(): void {
    this.polling = false;
  }

  private async advance(waitMs: number): Promise<void> {
    try {
      this.card = await this.queue.loadNextCard(waitMs);
    } catch (err) {
      this.showError(err);
      return;
    }
    this.renderCard();
  }

  private renderShell(): void {
    this.root.innerHTML = "";
    this.root.classList.add("watch-face");
    this.root.style.width = `${this.viewportPx}px`;
    this.root.style.height = `${this.viewportPx}px`;
  }

  private clear(): HTMLElement {
    this.root.innerHTML = "";
    const face = document.createElement("div");
    face.className = "face";
    this.root.appendChild(face);
    return face;
  }

  private renderCard(): void {
    this.mode = "card";
    const face = this.clear();
    if (this.card === null) {
      face.innerHTML = `<div class="card empty"><p>nothing waiting</p></div>`;
      const row = this.buttonRow(face);
      this.addButton(row, "dictate", () => this.renderDictate());
      this.addButton(row, "pages", () => this.renderThumbs());
      return;
    }
    const card = this.card;
    const el = document.createElement("div");
    el.className = `card kind-${card.card_kind}`;
    const head = document.createElement("h2");
    head.textContent = card.headline;
    el.appendChild(head);
    const ctx = document.createElement("pre");
    ctx.className = "context";
    ctx.textContent = card.context_lines.join("\n");
    el.appendChild(ctx);
    face.appendChild(el);
    const row = this.buttonRow(face);
    for (const action of card.actions) {
      if (action === "reply") {
        this.addButton(row, "reply", () => this.renderReply());
        continue;
      }
      this.addButton(row, action.replace("_", " "), async () => {
        try {
          const result = await this.queue.submitCardAction(card, action);
          if (result.status === "info" && result.infoCard) {
            this.card = result.infoCard;
            this.renderCard();
          } else {
            await this.advance(0);
          }
        } catch (err) {
          this.showError(err);
        }
      });
    }
  }

  private renderReply(): void {
    this.mode = "reply";
    const card = this.card;
    if (!card) return;
    const face = this.clear();
    face.innerHTML = `<div class="card"><h2>reply</h2></div>`;
    const box = document.createElement("textarea");
    box.className = "dictation";
    box.placeholder = "speak or type your reply";
    face.querySelector(".card")!.appendChild(box);
    const row = this.buttonRow(face);
    this.addButton(row, "send", async () => {
      const text = box.value.trim();
      if (!text) {
        return; // blocked client-side: a reply needs text
      }
      try {
        await this.queue.submitCardAction(card, "reply", text);
        await this.advance(0);
      } catch (err) {
        this.showError(err);
      }
    });
    this.addButton(row, "back", () => this.renderCard());
  }

  private renderDictate(): void {
    this.mode = "dictate";
    const face = this.clear();
    face.innerHTML = `
      <div class="card"><h2>dictate</h2>
        <select class="kind">
          <option value="section">section</option>
          <option value="bullet">bullet</option>
          <option value="paragraph">paragraph</option>
        </select>
        <input class="parent" placeholder="parent section id (blank = top level)">
        <textarea class="dictation" placeholder="content"></textarea>
        <input class="rawtok" placeholder="raw input token (optional)">
      </div>`;
    const row = this.buttonRow(face);
    this.addButton(row, "add", async () => {
      const kind = (face.querySelector(".kind") as HTMLSelectElement).value;
      const parent = (face.querySelector(".parent") as HTMLInputElement).value.trim();
      const text = (face.querySelector(".dictation") as HTMLTextAreaElement).value.trim();
      const rawTok = (face.querySelector(".rawtok") as HTMLInputElement).value.trim();
      if (!text) return;
      try {
        await this.api.dictateBlock(this.docId, {
          parent_id: kind === "section" ? "" : parent,
          kind,
          text,
          raw_token: rawTok || undefined,
        });
        this.renderCard();
      } catch (err) {
        this.showError(err);
      }
    });
    this.addButton(row, "back", () => this.renderCard());
  }

  private async renderThumbs(): Promise<void> {
    this.mode = "thumbs";
    const face = this.clear();
    try {
      const model = await this.thumbs.load();
      if (model.tiles.length === 0) {
        face.innerHTML = `<div class="card empty"><p>no pages yet</p></div>`;
      } else {
        const grid = document.createElement("div");
        grid.className = "thumb-grid";
        for (const tile of model.tiles) {
          const cell = document.createElement("button");
          cell.className = "tile";
          cell.textContent = tile.first_line;
          cell.title = `page ${tile.page_index}`;
          cell.addEventListener("click", () => this.renderPage(tile.page_index));
          grid.appendChild(cell);
        }
        face.appendChild(grid);
      }
    } catch (err) {
      this.showError(err);
      return;
    }
    const row = this.buttonRow(face);
    this.addButton(row, "back", () => this.renderCard());
  }

  private async renderPage(pageIndex: number): Promise<void> {
    this.mode = "page";
    const face = this.clear();
    try {
      const model = await this.thumbs.select(pageIndex);
      const pre = document.createElement("pre");
      pre.className = "context page-detail";
      pre.textContent = model.detail.join("\n");
      face.appendChild(pre);
    } catch (err) {
      this.showError(err);
      return;
    }
    const row = this.buttonRow(face);
    this.addButton(row, "back", () => this.renderThumbs());
  }

  private showError(err: unknown): void {
    const face = this.clear();
    const code = err instanceof ApiError ? err.code : "client_error";
    face.innerHTML = `<div class="card error"><h2>error</h2><p>${code}</p></div>`;
    const row = this.buttonRow(face);
    this.addButton(row, "back", () => this.renderCard());
  }

  private buttonRow(face: HTMLElement): HTMLElement {
    const row = document.createElement("div");
    row.className = "actions";
    face.appendChild(row);
    return row;
  }

  private addButton(row: HTMLElement, label: string, handler: () => void): void {
    const button = document.createElement("button");
    button.textContent = label;
    button.addEventListener("click", handler);
    row.appendChild(button);
  }
}
