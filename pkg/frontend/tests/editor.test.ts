import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api";
import { WorkerEditor } from "../src/editor";
import { sampleDoc, StubServer } from "./stub";

function setup() {
  const stub = new StubServer();
  stub.doc = sampleDoc();
  const api = new ApiClient({ baseUrl: "http://stub", token: "tok", fetchFn: stub.fetch });
  const editor = new WorkerEditor(api, "doc-1", "w1");
  return { stub, editor };
}

describe("worker editor", () => {
  it("staging never mutates the canonical snapshot", async () => {
    const { editor } = setup();
    await editor.refresh();
    const before = JSON.stringify(editor.docSnapshot);
    editor.stage({ kind: "replace", block_id: "blk-2", new_text: "changed" }, "replace");
    editor.stage({ kind: "delete", block_id: "blk-5" }, "delete");
    expect(JSON.stringify(editor.docSnapshot)).toBe(before);
    expect(editor.localChanges).toHaveLength(2);
  });

  it("flush posts every local change under one submission id and clears them", async () => {
    const { stub, editor } = setup();
    await editor.refresh();
    editor.stage({ kind: "replace", block_id: "blk-2", new_text: "one" }, "a");
    editor.stage({ kind: "format", block_id: "blk-3", done: false }, "b");
    editor.stage({ kind: "insert", parent_id: "blk-1", after_id: null, block_kind: "bullet", new_text: "three" }, "c");
    stub.requests.length = 0;

    const result = await editor.flush();
    expect(result).toEqual({ posted: 3, failed: 0 });
    const posts = stub.requests.filter((r) => r.path === "/documents/doc-1/edits");
    expect(posts).toHaveLength(3);
    const submissionIds = new Set(posts.map((r) => r.body.submission_id));
    expect(submissionIds.size).toBe(1);
    expect(editor.localChanges).toHaveLength(0);
  });

  it("a failing edit stays local and flagged while the rest succeed", async () => {
    const { stub, editor } = setup();
    await editor.refresh();
    stub.proposeFailures.set("blk-9", { error: "unknown_target", status: 404 });
    editor.stage({ kind: "replace", block_id: "blk-2", new_text: "fine" }, "ok");
    editor.stage({ kind: "replace", block_id: "blk-9", new_text: "gone" }, "doomed");

    const result = await editor.flush();
    expect(result).toEqual({ posted: 1, failed: 1 });
    expect(editor.localChanges).toHaveLength(1);
    expect(editor.localChanges[0].status).toBe("failed");
    expect(editor.localChanges[0].error).toBe("unknown_target");
  });

  it("submission id rotates only after the list fully drains", async () => {
    const { stub, editor } = setup();
    await editor.refresh();
    stub.proposeFailures.set("blk-9", { error: "unknown_target", status: 404 });
    editor.stage({ kind: "replace", block_id: "blk-9", new_text: "x" }, "doomed");
    const first = editor.currentSubmission;
    await editor.flush();
    expect(editor.currentSubmission).toBe(first); // retry stays in the same save
    stub.proposeFailures.clear();
    await editor.flush();
    expect(editor.localChanges).toHaveLength(0);
    expect(editor.currentSubmission).not.toBe(first);
  });

  it("flush with zero staged changes issues no requests", async () => {
    const { stub, editor } = setup();
    await editor.refresh();
    stub.requests.length = 0;
    expect(editor.canFlush).toBe(false);
    const result = await editor.flush();
    expect(result).toEqual({ posted: 0, failed: 0 });
    expect(stub.requests).toHaveLength(0);
  });

  it("pump refreshes the snapshot only when a review event arrives", async () => {
    const { stub, editor } = setup();
    await editor.refresh();
    stub.requests.length = 0;

    stub.pushEvent("task_assigned", { task_id: "tsk-1", worker_id: "w1", method: "random" });
    await editor.pump();
    expect(stub.requests.filter((r) => r.path === "/documents/doc-1").length).toBe(0);

    stub.doc = { ...stub.doc, revision: 4 };
    stub.pushEvent("edit_reviewed", { edit_id: "edt-1", decision: "accept", kind: "replace", worker_id: "w1" });
    const events = await editor.pump();
    expect(events.some((e) => e.kind === "edit_reviewed")).toBe(true);
    expect(editor.docSnapshot!.revision).toBe(4);
  });

  it("task pull, skip, and complete go through the task endpoints", async () => {
    const { stub, editor } = setup();
    stub.taskQueue.push({
      id: "tsk-1", description: "expand", target_section: "blk-1",
      state: "assigned", assignee: "w1", skip_set: [], created_seq: 1,
    });
    const task = await editor.pullTask();
    expect(task!.id).toBe("tsk-1");
    await editor.completeCurrentTask();
    expect(editor.currentTask).toBeNull();
    const paths = stub.requests.map((r) => r.path);
    expect(paths).toContain("/documents/doc-1/tasks/next");
    expect(paths).toContain("/tasks/tsk-1/done");
  });
});
