/**
 * Engine profiles describe how to drive one search engine: where its
 * home page lives, which input takes the query, how sponsored results
 * are recognized, and what marks a loaded results page.
 *
 * Ad detection supports exactly two strategies and a profile must pick
 * one: a container whose `title` attribute labels the sponsored block
 * (e.g. "Sponsored Links"), or an href prefix all ad anchors share
 * (e.g. "www.googleadservices.com/", compared with the scheme removed).
 *
 * Profiles are plain JSON files so selectors can be edited when a live
 * engine changes its markup without touching code.
 */

import { readFileSync } from "node:fs";
import { z } from "zod";

const adDetectionSchema = z
  .object({
    container_title: z.string().min(1).optional(),
    href_prefix: z.string().min(1).optional(),
  })
  .strict()
  .refine(
    (d) => (d.container_title !== undefined) !== (d.href_prefix !== undefined),
    { message: "exactly one ad-detection strategy (container_title or href_prefix) required" },
  );

export const profileSchema = z
  .object({
    engine_id: z.string().min(1),
    home_url: z.string().url(),
    query_input: z.string().min(1),
    ad_detection: adDetectionSchema,
    results_ready: z.string().min(1),
    consent_click: z.string().min(1).optional(),
  })
  .strict();

export type EngineProfile = z.infer<typeof profileSchema>;

export function parseProfile(doc: unknown): EngineProfile {
  return profileSchema.parse(doc);
}

export function loadProfile(path: string): EngineProfile {
  let doc: unknown;
  try {
    doc = JSON.parse(readFileSync(path, "utf-8"));
  } catch (err) {
    throw new Error(`cannot read profile ${path}: ${(err as Error).message}`);
  }
  return parseProfile(doc);
}
