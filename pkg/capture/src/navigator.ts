/**
 * Miniature navigator: enough browser to click through fixture sites.
 *
 * It speaks plain HTTP with a per-instance cookie jar and localStorage,
 * follows server redirects manually so every hop lands in the trace,
 * fetches DOM-declared subresources, and executes the declarative
 * action scripts fixture pages use in place of JavaScript. In fixture
 * mode every hostname resolves to the loopback fixture server while
 * recorded URLs stay portless.
 */

import http from "node:http";
import https from "node:https";
import { NavigationTimeout } from "./errors.js";
import { actionOps, subresources } from "./html.js";
import type { DualRecorder } from "./recorder.js";
import type { Cookie as TraceCookie, NavCause, StorageEntry, TraceBuilder } from "./trace.js";

const REDIRECT_STATUSES = new Set([301, 302, 303, 307, 308]);
const MAX_REDIRECTS = 20;

// --------------------------------------------------------------------------
// transport

export interface FetchResult {
  status: number;
  headers: Record<string, string>;
  body: string;
}

export interface TransportOptions {
  /** Route every hostname to 127.0.0.1:port (fixture mode). */
  fixturePort?: number;
  timeoutMs?: number;
  extraHeaders?: Record<string, string>;
}

export class Transport {
  constructor(private readonly opts: TransportOptions = {}) {}

  fetch(url: string, cookieHeader: string | null): Promise<FetchResult> {
    const target = new URL(url);
    if (target.protocol !== "http:" && target.protocol !== "https:") {
      return Promise.reject(new Error(`cannot fetch non-http url ${url}`));
    }
    const fixture = this.opts.fixturePort !== undefined;
    const mod = target.protocol === "https:" ? https : http;
    const port =
      this.opts.fixturePort ??
      (target.port ? Number(target.port) : target.protocol === "https:" ? 443 : 80);
    const timeoutMs = this.opts.timeoutMs ?? 10_000;

    return new Promise((resolve, reject) => {
      const request = mod.request(
        {
          host: fixture ? "127.0.0.1" : target.hostname,
          port,
          path: target.pathname + target.search,
          method: "GET",
          agent: false,
          headers: {
            host: target.hostname,
            ...(cookieHeader ? { cookie: cookieHeader } : {}),
            ...this.opts.extraHeaders,
          },
        },
        (response) => {
          const chunks: Buffer[] = [];
          response.on("data", (chunk) => chunks.push(chunk));
          response.on("end", () => {
            clearTimeout(timer);
            const headers: Record<string, string> = {};
            for (const [name, value] of Object.entries(response.headers)) {
              if (typeof value === "string") headers[name.toLowerCase()] = value;
              else if (Array.isArray(value)) headers[name.toLowerCase()] = value.join("\n");
            }
            resolve({
              status: response.statusCode ?? 0,
              headers,
              body: Buffer.concat(chunks).toString("utf-8"),
            });
          });
        },
      );
      const timer = setTimeout(() => {
        request.destroy(new NavigationTimeout(`no response from ${url} within ${timeoutMs}ms`));
      }, timeoutMs);
      request.on("error", (err) => {
        clearTimeout(timer);
        reject(err);
      });
      request.end();
    });
  }
}

// --------------------------------------------------------------------------
// cookie jar

interface JarCookie {
  name: string;
  value: string;
  domain: string; // without leading dot
  path: string;
  hostOnly: boolean;
  expiry: number | null; // epoch seconds
  setOrigin: string; // origin whose response planted the cookie
}

export class CookieJar {
  private readonly cookies = new Map<string, JarCookie>();

  private static key(c: JarCookie): string {
    return `${c.domain}|${c.path}|${c.name}`;
  }

  setFromHeader(line: string, requestUrl: string): void {
    const url = new URL(requestUrl);
    const [pair, ...attrParts] = line.split(";");
    const eq = pair.indexOf("=");
    if (eq <= 0) return;
    const name = pair.slice(0, eq).trim();
    const value = pair.slice(eq + 1).trim();
    if (!name) return;

    let domain: string | null = null;
    let path = "/";
    let expiry: number | null = null;
    for (const part of attrParts) {
      const [attrName, ...rest] = part.split("=");
      const attr = attrName.trim().toLowerCase();
      const attrValue = rest.join("=").trim();
      if (attr === "domain" && attrValue) domain = attrValue.replace(/^\./, "").toLowerCase();
      else if (attr === "path" && attrValue.startsWith("/")) path = attrValue;
      else if (attr === "max-age" && /^-?\d+$/.test(attrValue)) {
        expiry = Math.floor(Date.now() / 1000) + Number(attrValue);
      } else if (attr === "expires" && expiry === null) {
        const parsed = Date.parse(attrValue);
        if (!Number.isNaN(parsed)) expiry = Math.floor(parsed / 1000);
      }
    }

    const host = url.hostname.toLowerCase();
    if (domain !== null && host !== domain && !host.endsWith("." + domain)) {
      return; // a response may not set cookies for unrelated domains
    }
    const cookie: JarCookie = {
      name,
      value,
      domain: domain ?? host,
      path,
      hostOnly: domain === null,
      expiry,
      setOrigin: `${url.protocol}//${host}`,
    };
    this.cookies.set(CookieJar.key(cookie), cookie);
  }

  /** Cookie request header for a URL, or null when nothing matches. */
  headerFor(requestUrl: string): string | null {
    const url = new URL(requestUrl);
    const host = url.hostname.toLowerCase();
    const path = url.pathname || "/";
    const sent: JarCookie[] = [];
    for (const c of this.cookies.values()) {
      const domainOk = c.hostOnly
        ? host === c.domain
        : host === c.domain || host.endsWith("." + c.domain);
      if (!domainOk) continue;
      const pathOk =
        c.path === "/" ||
        path === c.path ||
        path.startsWith(c.path.endsWith("/") ? c.path : c.path + "/");
      if (!pathOk) continue;
      sent.push(c);
    }
    if (sent.length === 0) return null;
    sent.sort((a, b) => b.path.length - a.path.length || a.name.localeCompare(b.name));
    return sent.map((c) => `${c.name}=${c.value}`).join("; ");
  }

  /** Whole-jar snapshot in trace cookie form, deterministic order. */
  toSnapshot(): TraceCookie[] {
    const out = [...this.cookies.values()].map((c) => ({
      name: c.name,
      value: c.value,
      domain: c.hostOnly ? c.domain : "." + c.domain,
      path: c.path,
      expiry: c.expiry,
      first_party_origin: c.setOrigin,
    }));
    out.sort((a, b) =>
      a.domain.localeCompare(b.domain) || a.name.localeCompare(b.name) || a.path.localeCompare(b.path),
    );
    return out;
  }

  static fromSnapshot(cookies: TraceCookie[]): CookieJar {
    const jar = new CookieJar();
    for (const c of cookies) {
      const hostOnly = !c.domain.startsWith(".");
      const cookie: JarCookie = {
        name: c.name,
        value: c.value,
        domain: c.domain.replace(/^\./, ""),
        path: c.path,
        hostOnly,
        expiry: c.expiry,
        setOrigin: c.first_party_origin,
      };
      jar.cookies.set(CookieJar.key(cookie), cookie);
    }
    return jar;
  }
}

// --------------------------------------------------------------------------
// localStorage

export class PageStorage {
  private readonly byOrigin = new Map<string, Map<string, string>>();

  set(origin: string, key: string, value: string): void {
    let bucket = this.byOrigin.get(origin);
    if (!bucket) {
      bucket = new Map();
      this.byOrigin.set(origin, bucket);
    }
    bucket.set(key, value);
  }

  toSnapshot(): StorageEntry[] {
    const out: StorageEntry[] = [];
    for (const [origin, bucket] of this.byOrigin) {
      for (const [key, value] of bucket) out.push({ origin, key, value });
    }
    out.sort((a, b) => a.origin.localeCompare(b.origin) || a.key.localeCompare(b.key));
    return out;
  }

  static fromSnapshot(entries: StorageEntry[]): PageStorage {
    const storage = new PageStorage();
    for (const e of entries) storage.set(e.origin, e.key, e.value);
    return storage;
  }
}

// --------------------------------------------------------------------------
// browser

export function originOf(url: string): string {
  const u = new URL(url);
  return `${u.protocol}//${u.hostname}`;
}

function traceHeaders(headers: Record<string, string>): Record<string, string> {
  const keep: Record<string, string> = {};
  for (const name of ["content-type", "location", "set-cookie"]) {
    if (headers[name] !== undefined) keep[name] = headers[name];
  }
  return keep;
}

export interface BrowserState {
  jar?: CookieJar;
  storage?: PageStorage;
}

export class Browser {
  readonly jar: CookieJar;
  readonly storage: PageStorage;
  currentUrl = "about:blank";
  currentHtml = "";

  constructor(
    private readonly transport: Transport,
    private readonly builder: TraceBuilder,
    private readonly recorder: DualRecorder,
    state: BrowserState = {},
  ) {
    this.jar = state.jar ?? new CookieJar();
    this.storage = state.storage ?? new PageStorage();
  }

  private applySetCookies(result: FetchResult, url: string): void {
    const header = result.headers["set-cookie"];
    if (!header) return;
    for (const line of header.split("\n")) {
      if (line.trim()) this.jar.setFromHeader(line, url);
    }
  }

  /** One logged non-document request: subresource or beacon. */
  private async fetchResource(
    url: string,
    resourceType: "script" | "image" | "stylesheet" | "xhr",
    initiatorOrigin: string,
  ): Promise<FetchResult> {
    this.recorder.network(url);
    const id = this.builder.nextRequestId();
    this.builder.request({
      request_id: id,
      url,
      method: "GET",
      resource_type: resourceType,
      frame_id: "main",
      initiator_origin: initiatorOrigin,
      headers: {},
    });
    const result = await this.transport.fetch(url, this.jar.headerFor(url));
    this.builder.response({
      request_ref: id,
      status: result.status,
      headers: traceHeaders(result.headers),
    });
    this.applySetCookies(result, url);
    return result;
  }

  /**
   * Navigate the main frame, following server redirects to commit.
   * Each hop emits navigation, request, and response events in order.
   */
  async navigate(url: string, cause: NavCause, initiatorOrigin: string): Promise<void> {
    let nextUrl = url;
    let nextCause = cause;
    let nextInitiator = initiatorOrigin;
    for (let hop = 0; ; hop++) {
      if (hop > MAX_REDIRECTS) {
        throw new NavigationTimeout(`redirect chain exceeded ${MAX_REDIRECTS} hops at ${nextUrl}`);
      }
      this.builder.navigation({
        frame_id: "main",
        from_url: this.currentUrl,
        to_url: nextUrl,
        cause: nextCause,
      });
      this.currentUrl = nextUrl;
      this.recorder.network(nextUrl);
      const id = this.builder.nextRequestId();
      this.builder.request({
        request_id: id,
        url: nextUrl,
        method: "GET",
        resource_type: "document",
        frame_id: "main",
        initiator_origin: nextInitiator,
        headers: {},
      });
      const result = await this.transport.fetch(nextUrl, this.jar.headerFor(nextUrl));
      this.builder.response({
        request_ref: id,
        status: result.status,
        headers: traceHeaders(result.headers),
      });
      this.applySetCookies(result, nextUrl);

      if (REDIRECT_STATUSES.has(result.status) && result.headers["location"]) {
        nextUrl = new URL(result.headers["location"], nextUrl).toString();
        nextCause = "server_redirect";
        nextInitiator = "";
        continue;
      }

      this.currentHtml = result.body;
      this.recorder.page(this.currentUrl); // in-page recorder sees the committed document
      await this.loadSubresources();
      await this.runActions();
      return;
    }
  }

  private async loadSubresources(): Promise<void> {
    const origin = originOf(this.currentUrl);
    for (const sub of subresources(this.currentHtml, this.currentUrl)) {
      this.recorder.page(sub.url); // declared in markup, visible to the page recorder
      await this.fetchResource(sub.url, sub.type, origin);
    }
  }

  private async runActions(): Promise<void> {
    const origin = originOf(this.currentUrl);
    for (const op of actionOps(this.currentHtml)) {
      if (op.op === "localStorage.set") {
        this.storage.set(origin, op.key, op.value);
      } else if (op.op === "cookie.set") {
        // document.cookie writes are host-only on the current host
        this.jar.setFromHeader(`${op.name}=${op.value}; Path=/`, this.currentUrl);
      } else if (op.op === "beacon") {
        this.recorder.page(op.url); // page script fired it
        await this.fetchResource(op.url, "xhr", origin);
      } else {
        throw new Error(`unknown action op ${JSON.stringify(op)}`);
      }
    }
  }
}
