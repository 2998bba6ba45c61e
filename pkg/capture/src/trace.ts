/**
 * Trace document model.
 *
 * Mirrors the analyzer's strict on-disk format (docs/trace-schema.md in
 * the audit package): one JSON document per ad-click iteration with an
 * ordered event stream and per-phase storage snapshots. The builder
 * enforces the parts the writer can get wrong silently: strictly
 * increasing timestamps, exactly one ad_click, and a capture window
 * that brackets every event.
 */

import { writeFileSync } from "node:fs";
import { join } from "node:path";
import { Clock } from "./clock.js";

export type ResourceType =
  | "document"
  | "script"
  | "image"
  | "stylesheet"
  | "font"
  | "media"
  | "xhr"
  | "fetch"
  | "websocket"
  | "other";

export type NavCause = "server_redirect" | "client_redirect" | "link_click" | "script";

export const PHASES = [
  "pre_query",
  "results_page",
  "post_click",
  "destination_dwell_end",
] as const;
export type Phase = (typeof PHASES)[number];

export interface RequestEvent {
  type: "request";
  request_id: string;
  url: string;
  method: string;
  resource_type: ResourceType;
  frame_id: string;
  initiator_origin: string;
  headers: Record<string, string>;
  timestamp: number;
}

export interface ResponseEvent {
  type: "response";
  request_ref: string;
  status: number;
  headers: Record<string, string>;
  timestamp: number;
}

export interface NavigationEvent {
  type: "navigation";
  frame_id: string;
  from_url: string;
  to_url: string;
  cause: NavCause;
  timestamp: number;
}

export interface DisplayedAd {
  href: string;
  landing_domain: string;
}

export interface AdClickEvent {
  type: "ad_click";
  ad_element_descriptor: string;
  declared_landing_domain: string;
  href_at_click: string;
  displayed_ads: DisplayedAd[];
  timestamp: number;
}

export type TraceEvent = RequestEvent | ResponseEvent | NavigationEvent | AdClickEvent;

export interface Cookie {
  name: string;
  value: string;
  domain: string;
  path: string;
  expiry: number | null;
  first_party_origin: string;
}

export interface StorageEntry {
  origin: string;
  key: string;
  value: string;
}

export interface Checkpoint {
  phase: Phase;
  cookies: Cookie[];
  local_storage: StorageEntry[];
}

export interface TraceDoc {
  schema_version: 1;
  engine_id: string;
  query: string;
  instance_id: string;
  capture_start: number;
  capture_end: number;
  revisit_of: string | null;
  events: TraceEvent[];
  checkpoints: Checkpoint[];
}

/** Accumulates one iteration's events in order and emits the document. */
export class TraceBuilder {
  readonly clock: Clock;
  private readonly events: TraceEvent[] = [];
  private readonly checkpoints: Checkpoint[] = [];
  private readonly captureStart: number;
  private requestSeq = 0;
  private frameSeq = 0;

  constructor(
    readonly engineId: string,
    readonly query: string,
    readonly instanceId: string,
    readonly revisitOf: string | null = null,
    clock?: Clock,
  ) {
    this.clock = clock ?? new Clock();
    this.captureStart = this.clock.now();
  }

  nextRequestId(): string {
    this.requestSeq += 1;
    return `r${this.requestSeq}`;
  }

  newFrameId(): string {
    const id = `f${this.frameSeq}`;
    this.frameSeq += 1;
    return id;
  }

  request(fields: Omit<RequestEvent, "type" | "timestamp">): RequestEvent {
    const ev: RequestEvent = { type: "request", ...fields, timestamp: this.clock.now() };
    this.events.push(ev);
    return ev;
  }

  response(fields: Omit<ResponseEvent, "type" | "timestamp">): ResponseEvent {
    const ev: ResponseEvent = { type: "response", ...fields, timestamp: this.clock.now() };
    this.events.push(ev);
    return ev;
  }

  navigation(fields: Omit<NavigationEvent, "type" | "timestamp">): NavigationEvent {
    const ev: NavigationEvent = { type: "navigation", ...fields, timestamp: this.clock.now() };
    this.events.push(ev);
    return ev;
  }

  adClick(fields: Omit<AdClickEvent, "type" | "timestamp">): AdClickEvent {
    const ev: AdClickEvent = { type: "ad_click", ...fields, timestamp: this.clock.now() };
    this.events.push(ev);
    return ev;
  }

  checkpoint(phase: Phase, cookies: Cookie[], localStorage: StorageEntry[]): void {
    this.checkpoints.push({ phase, cookies, local_storage: localStorage });
  }

  allEvents(): readonly TraceEvent[] {
    return this.events;
  }

  finalize(): TraceDoc {
    const clicks = this.events.filter((e) => e.type === "ad_click");
    if (clicks.length !== 1) {
      throw new Error(`trace must contain exactly one ad_click, got ${clicks.length}`);
    }
    const after = this.events.some(
      (e) => e.type === "navigation" && e.timestamp > clicks[0].timestamp,
    );
    if (!after) {
      throw new Error("no navigation committed after the ad click");
    }
    return {
      schema_version: 1,
      engine_id: this.engineId,
      query: this.query,
      instance_id: this.instanceId,
      capture_start: this.captureStart,
      capture_end: this.clock.now(),
      revisit_of: this.revisitOf,
      events: this.events,
      checkpoints: this.checkpoints,
    };
  }
}

/** Write a trace document into `dir` as `<instance_id>[.r].trace.json`. */
export function writeTrace(doc: TraceDoc, dir: string): string {
  const suffix = doc.revisit_of === null ? "" : ".r";
  const path = join(dir, `${doc.instance_id}${suffix}.trace.json`);
  writeFileSync(path, JSON.stringify(doc, null, 2) + "\n");
  return path;
}
