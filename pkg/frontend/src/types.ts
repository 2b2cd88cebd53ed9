/** Wire types for the crowdscribe HTTP API. */

export type Role = "author" | "worker";

export interface SessionInfo {
  token: string;
  actor_id: string;
  role: Role;
  doc_id: string | null;
}

export interface BlockRecord {
  id: string;
  kind: "section" | "paragraph" | "bullet";
  parent_id: string;
  order_key: string;
  text: string;
  done: boolean;
  raw_token?: string;
}

export interface DocumentView {
  doc_id: string;
  revision: number;
  blocks: BlockRecord[];
}

export type EditSpec =
  | { kind: "insert"; parent_id: string; after_id: string | null; block_kind: "section" | "paragraph" | "bullet"; new_text: string }
  | { kind: "replace"; block_id: string; new_text: string }
  | { kind: "delete"; block_id: string }
  | { kind: "format"; block_id: string; done: boolean };

export interface ContextSnapshot {
  edit_id: string;
  revision: number;
  page_index: number;
  lines: string[];
  excerpt: string[];
}

export interface EventRecord {
  seq: number;
  doc_id: string;
  kind: string;
  payload: Record<string, any>;
  wall_time: number;
}

export interface TaskRecord {
  id: string;
  description: string;
  target_section: string | null;
  state: string;
  assignee: string | null;
  skip_set: string[];
  created_seq: number;
}

export interface ThumbnailTile {
  page_index: number;
  first_line: string;
  block_ids: string[];
}

export interface ReviewOutcome {
  applied_revision: number | null;
  newly_stale: string[];
}

export interface MetricsRecord {
  submissions: number;
  insertions: number;
  replacements: number;
  deletions: number;
  formatting: number;
  author_comments: number;
}
