/**
 * Fixture site bundles.
 *
 * A bundle directory holds `bundle.json` plus the page and asset files
 * it references. The manifest maps origin hostnames to routes; each
 * route is a templated page, a redirect, a static asset, or a `hang`
 * that never answers (for timeout tests). Cookie plants live on routes
 * so redirectors can mint identifiers; `ifMissing` makes a plant
 * idempotent across revisits, which is what separates a persistent
 * identifier from a per-session one.
 */

import { existsSync, readFileSync } from "node:fs";
import { join } from "node:path";
import { z } from "zod";
import { InvalidBundle } from "./errors.js";

const setCookieSchema = z
  .object({
    name: z.string().min(1),
    value: z.string().min(1),
    ifMissing: z.boolean().default(false),
  })
  .strict();

const routeSchema = z.discriminatedUnion("kind", [
  z
    .object({
      kind: z.literal("page"),
      file: z.string().min(1),
      setCookie: setCookieSchema.optional(),
    })
    .strict(),
  z
    .object({
      kind: z.literal("redirect"),
      status: z.number().int().min(300).max(399),
      location: z.string().min(1),
      setCookie: setCookieSchema.optional(),
    })
    .strict(),
  z
    .object({
      kind: z.literal("asset"),
      contentType: z.string().min(1),
      file: z.string().min(1).optional(),
      body: z.string().optional(),
    })
    .strict(),
  z.object({ kind: z.literal("hang") }).strict(),
]);

const bundleSchema = z
  .object({
    origins: z.record(z.object({ routes: z.record(routeSchema) }).strict()),
  })
  .strict();

export type SetCookiePlant = z.infer<typeof setCookieSchema>;
export type Route = z.infer<typeof routeSchema>;

export interface Bundle {
  dir: string;
  origins: Record<string, { routes: Record<string, Route> }>;
}

export function loadBundle(dir: string): Bundle {
  const manifestPath = join(dir, "bundle.json");
  if (!existsSync(manifestPath)) {
    throw new InvalidBundle(`bundle ${dir} has no bundle.json`);
  }
  let raw: unknown;
  try {
    raw = JSON.parse(readFileSync(manifestPath, "utf-8"));
  } catch (err) {
    throw new InvalidBundle(`bundle.json in ${dir} is not valid JSON: ${(err as Error).message}`);
  }
  const parsed = bundleSchema.safeParse(raw);
  if (!parsed.success) {
    throw new InvalidBundle(`bundle.json in ${dir}: ${parsed.error.issues[0]?.message}`);
  }
  const origins = parsed.data.origins;
  if (Object.keys(origins).length === 0) {
    throw new InvalidBundle(`bundle ${dir} defines no origins`);
  }
  for (const [host, origin] of Object.entries(origins)) {
    for (const [path, route] of Object.entries(origin.routes)) {
      if (!path.startsWith("/")) {
        throw new InvalidBundle(`${host}: route path ${path} must start with /`);
      }
      if (route.kind === "asset" && (route.file === undefined) === (route.body === undefined)) {
        throw new InvalidBundle(`${host}${path}: asset needs exactly one of file or body`);
      }
      const file = route.kind === "page" || route.kind === "asset" ? route.file : undefined;
      if (file !== undefined && !existsSync(join(dir, file))) {
        throw new InvalidBundle(`${host}${path}: referenced file ${file} missing from bundle`);
      }
    }
  }
  return { dir, origins };
}
