/** Shared assertions for worker-view network discipline. */

import { expect } from "vitest";

export const ALLOWED: Array<{ method: string; pattern: RegExp }> = [
  { method: "GET", pattern: /^\/documents\/[^/]+$/ },
  { method: "GET", pattern: /^\/documents\/[^/]+\/events$/ },
  { method: "POST", pattern: /^\/documents\/[^/]+\/edits$/ },
  { method: "POST", pattern: /^\/documents\/[^/]+\/threads$/ },
  { method: "POST", pattern: /^\/threads\/[^/]+\/replies$/ },
  { method: "GET", pattern: /^\/documents\/[^/]+\/tasks\/next$/ },
  { method: "POST", pattern: /^\/tasks\/[^/]+\/skip$/ },
  { method: "POST", pattern: /^\/tasks\/[^/]+\/done$/ },
];

export function assertDiscipline(requests: Array<{ method: string; path: string }>): void {
  expect(requests.length).toBeGreaterThan(0);
  for (const req of requests) {
    const allowed = ALLOWED.some((rule) => rule.method === req.method && rule.pattern.test(req.path));
    expect(allowed, `${req.method} ${req.path} is outside the worker's permitted set`).toBe(true);
    expect(req.path.includes("/review"), `worker issued a review call: ${req.path}`).toBe(false);
  }
}
