/**
 * Thumbnail page browser: a grid of tiles from GET /thumbnails, with a
 * read-only page detail view rendered client-side (mirrors the server's
 * rendering rules: underlined section titles, "- " bullets, ~~done~~
 * markers, 80-column paragraph wrap, 40-line pages by default).
 */

import { ApiClient } from "./api";
import type { BlockRecord, DocumentView, ThumbnailTile } from "./types";

export const PAGE_HEIGHT = 40;
export const WRAP_WIDTH = 80;

export function renderLines(doc: DocumentView): string[] {
  const byParent = new Map<string, BlockRecord[]>();
  for (const block of doc.blocks) {
    const list = byParent.get(block.parent_id) ?? [];
    list.push(block);
    byParent.set(block.parent_id, list);
  }
  for (const list of byParent.values()) {
    list.sort((a, b) => (a.order_key < b.order_key ? -1 : a.order_key > b.order_key ? 1 : 0));
  }
  const out: string[] = [];
  for (const section of byParent.get("") ?? []) {
    out.push(section.text);
    out.push("-".repeat(Math.max(1, section.text.length)));
    for (const child of byParent.get(section.id) ?? []) {
      if (child.kind === "bullet") {
        out.push(child.done ? `- ~~${child.text}~~` : `- ${child.text}`);
      } else {
        const words = child.text.split(/\s+/).filter((w) => w.length > 0);
        if (words.length === 0) {
          out.push("");
          continue;
        }
        let line = "";
        for (const word of words) {
          if (line === "") {
            line = word;
          } else if (line.length + 1 + word.length <= WRAP_WIDTH) {
            line += " " + word;
          } else {
            out.push(line);
            line = word;
          }
        }
        out.push(line);
      }
    }
  }
  return out;
}

export function pageLines(doc: DocumentView, pageIndex: number, pageHeight = PAGE_HEIGHT): string[] {
  const lines = renderLines(doc);
  return lines.slice(pageIndex * pageHeight, (pageIndex + 1) * pageHeight);
}

export interface ThumbnailBrowserModel {
  tiles: ThumbnailTile[];
  selected: number | null;
  detail: string[];
}

export class ThumbnailBrowser {
  model: ThumbnailBrowserModel = { tiles: [], selected: null, detail: [] };

  constructor(
    private api: ApiClient,
    private docId: string,
    private pageHeight = PAGE_HEIGHT,
  ) {}

  async load(): Promise<ThumbnailBrowserModel> {
    this.model = { tiles: await this.api.getThumbnails(this.docId), selected: null, detail: [] };
    return this.model;
  }

  async select(pageIndex: number): Promise<ThumbnailBrowserModel> {
    const doc = await this.api.getDocument(this.docId);
    this.model = {
      ...this.model,
      selected: pageIndex,
      detail: pageLines(doc, pageIndex, this.pageHeight),
    };
    return this.model;
  }
}
