/**
 * Crawl plan: what to search for and how patiently.
 *
 * Dwell defaults to 15 seconds on the ad's destination page; the
 * revisit delay defaults to one day but both compress to fractions of
 * a second for tests. Only dwell has a hard floor: zero would mean the
 * destination page gets no time to fire its scripts at all.
 */

import { readFileSync } from "node:fs";

export interface CrawlPlan {
  queries: string[];
  iterations: number;
  dwellSeconds: number;
  revisitDelaySeconds: number;
}

export const DEFAULT_DWELL_SECONDS = 15;
export const DEFAULT_REVISIT_DELAY_SECONDS = 86_400;

export interface PlanInput {
  queries: string[];
  iterations?: number;
  dwellSeconds?: number;
  revisitDelaySeconds?: number;
}

export function makePlan(input: PlanInput): CrawlPlan {
  const queries = input.queries.map((q) => q.trim()).filter(Boolean);
  if (queries.length === 0) {
    throw new Error("crawl plan needs at least one query");
  }
  const iterations = input.iterations ?? queries.length;
  if (!Number.isInteger(iterations) || iterations < 1) {
    throw new Error(`iterations must be a positive integer, got ${input.iterations}`);
  }
  const dwellSeconds = input.dwellSeconds ?? DEFAULT_DWELL_SECONDS;
  if (!(dwellSeconds > 0)) {
    throw new Error(`dwell must be > 0 seconds, got ${input.dwellSeconds}`);
  }
  const revisitDelaySeconds = input.revisitDelaySeconds ?? DEFAULT_REVISIT_DELAY_SECONDS;
  if (revisitDelaySeconds < 0) {
    throw new Error(`revisit delay must be >= 0 seconds, got ${input.revisitDelaySeconds}`);
  }
  return { queries, iterations, dwellSeconds, revisitDelaySeconds };
}

/** Read a query list: one query per line, blanks and #-comments skipped. */
export function loadQueries(path: string): string[] {
  const lines = readFileSync(path, "utf-8").split("\n");
  return lines.map((l) => l.trim()).filter((l) => l && !l.startsWith("#"));
}
