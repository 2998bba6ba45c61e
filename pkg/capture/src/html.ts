/**
 * Minimal HTML scanning for the fixture navigator.
 *
 * This is not a DOM: tags are matched with regular expressions and the
 * few lookups the crawler needs (subresources, the search form, the
 * sponsored block, readiness markers) are answered from that flat tag
 * list. Constraints on fixture markup, enforced by convention: attribute
 * values contain no `>`, and an ad container element does not nest
 * another element of its own tag name.
 */

const TAG = /<([a-zA-Z][a-zA-Z0-9-]*)([^>]*)>/g;
const ATTR = /([a-zA-Z_:][-\w:.]*)\s*(?:=\s*(?:"([^"]*)"|'([^']*)'|([^\s>]+)))?/g;

export interface Tag {
  name: string;
  attrs: Record<string, string>;
  start: number;
  end: number;
}

const ENTITIES: Record<string, string> = {
  amp: "&",
  lt: "<",
  gt: ">",
  quot: '"',
  apos: "'",
  "#39": "'",
};

export function decodeEntities(text: string): string {
  return text.replace(/&(amp|lt|gt|quot|apos|#39);/g, (_m, name: string) => ENTITIES[name]);
}

export function scanTags(html: string): Tag[] {
  const tags: Tag[] = [];
  for (const m of html.matchAll(TAG)) {
    const attrs: Record<string, string> = {};
    const raw = m[2].replace(/\/\s*$/, "");
    for (const a of raw.matchAll(ATTR)) {
      attrs[a[1].toLowerCase()] = decodeEntities(a[2] ?? a[3] ?? a[4] ?? "");
    }
    tags.push({
      name: m[1].toLowerCase(),
      attrs,
      start: m.index ?? 0,
      end: (m.index ?? 0) + m[0].length,
    });
  }
  return tags;
}

// --------------------------------------------------------------------------
// selectors: the tiny subset profiles actually use

interface SelectorParts {
  tag: string | null;
  id: string | null;
  className: string | null;
  attr: { name: string; value: string | null } | null;
}

const SELECTOR = /^([a-zA-Z][a-zA-Z0-9-]*)?(?:#([-\w]+))?(?:\.([-\w]+))?(?:\[([-\w]+)(?:=(?:"([^"]*)"|'([^']*)'|([^\]]+)))?\])?$/;

export function parseSelector(selector: string): SelectorParts {
  const m = SELECTOR.exec(selector.trim());
  if (!m || m[0] === "") {
    throw new Error(`unsupported selector "${selector}"`);
  }
  const [, tag, id, className, attrName, dq, sq, bare] = m;
  return {
    tag: tag?.toLowerCase() ?? null,
    id: id ?? null,
    className: className ?? null,
    attr: attrName ? { name: attrName.toLowerCase(), value: dq ?? sq ?? bare ?? null } : null,
  };
}

function tagMatches(tag: Tag, sel: SelectorParts): boolean {
  if (sel.tag && tag.name !== sel.tag) return false;
  if (sel.id && tag.attrs["id"] !== sel.id) return false;
  if (sel.className) {
    const classes = (tag.attrs["class"] ?? "").split(/\s+/);
    if (!classes.includes(sel.className)) return false;
  }
  if (sel.attr) {
    const got = tag.attrs[sel.attr.name];
    if (got === undefined) return false;
    if (sel.attr.value !== null && got !== sel.attr.value) return false;
  }
  return true;
}

export function hasSelector(html: string, selector: string): boolean {
  const sel = parseSelector(selector);
  return scanTags(html).some((t) => tagMatches(t, sel));
}

/**
 * Name of the query input a selector points at, e.g. `input[name=q]`
 * directly, or `#searchbox` via that element's `name` attribute.
 */
export function queryInputName(html: string, selector: string): string | null {
  const sel = parseSelector(selector);
  if (sel.attr?.name === "name" && sel.attr.value) return sel.attr.value;
  const hit = scanTags(html).find((t) => tagMatches(t, sel));
  return hit?.attrs["name"] ?? null;
}

// --------------------------------------------------------------------------
// page structure

export interface SubResource {
  url: string;
  type: "script" | "image" | "stylesheet";
}

export function subresources(html: string, baseUrl: string): SubResource[] {
  const out: SubResource[] = [];
  for (const tag of scanTags(html)) {
    let url: string | undefined;
    let type: SubResource["type"] | undefined;
    if (tag.name === "img" && tag.attrs["src"]) {
      url = tag.attrs["src"];
      type = "image";
    } else if (tag.name === "script" && tag.attrs["src"]) {
      url = tag.attrs["src"];
      type = "script";
    } else if (
      tag.name === "link" &&
      (tag.attrs["rel"] ?? "").toLowerCase() === "stylesheet" &&
      tag.attrs["href"]
    ) {
      url = tag.attrs["href"];
      type = "stylesheet";
    }
    if (url && type) out.push({ url: new URL(url, baseUrl).toString(), type });
  }
  return out;
}

export interface FormTarget {
  action: string;
  inputName: string;
}

/** First form on the page plus the input the profile selector names. */
export function searchForm(html: string, inputSelector: string, baseUrl: string): FormTarget | null {
  const form = scanTags(html).find((t) => t.name === "form");
  if (!form) return null;
  const inputName = queryInputName(html, inputSelector);
  if (!inputName) return null;
  return { action: new URL(form.attrs["action"] ?? "", baseUrl).toString(), inputName };
}

// --------------------------------------------------------------------------
// sponsored results

export interface PageAd {
  href: string;
  landingDomain: string;
  descriptor: string;
}

function toAd(tag: Tag, index: number, baseUrl: string, how: string): PageAd | null {
  const rawHref = tag.attrs["href"];
  if (!rawHref) return null;
  const href = new URL(rawHref, baseUrl).toString();
  const landing = tag.attrs["data-landing"] ?? new URL(href).hostname;
  return { href, landingDomain: landing, descriptor: `${how} a:nth-of-type(${index + 1})` };
}

/** Anchors inside the element whose title attribute labels the ad block. */
export function adsByContainerTitle(html: string, title: string, baseUrl: string): PageAd[] {
  const tags = scanTags(html);
  const container = tags.find((t) => t.attrs["title"] === title);
  if (!container) return [];
  const close = html.indexOf(`</${container.name}`, container.end);
  const from = container.end;
  const to = close === -1 ? html.length : close;
  const anchors = tags.filter((t) => t.name === "a" && t.start >= from && t.end <= to);
  const how = `${container.name}[title="${title}"]`;
  return anchors
    .map((a, i) => toAd(a, i, baseUrl, how))
    .filter((a): a is PageAd => a !== null);
}

/** Anchors whose scheme-stripped href starts with the configured prefix. */
export function adsByHrefPrefix(html: string, prefix: string, baseUrl: string): PageAd[] {
  const anchors = scanTags(html).filter((t) => t.name === "a" && t.attrs["href"]);
  const hits: Tag[] = [];
  for (const a of anchors) {
    const href = new URL(a.attrs["href"], baseUrl).toString();
    const schemeless = href.replace(/^[a-z][a-z0-9+.-]*:\/\//i, "");
    if (schemeless.startsWith(prefix)) hits.push(a);
  }
  const how = `a[href^="${prefix}"]`;
  return hits
    .map((a, i) => toAd(a, i, baseUrl, how))
    .filter((a): a is PageAd => a !== null);
}

// --------------------------------------------------------------------------
// page behavior scripts

export type ActionOp =
  | { op: "localStorage.set"; key: string; value: string }
  | { op: "beacon"; url: string }
  | { op: "cookie.set"; name: string; value: string };

const ACTION_SCRIPT = /<script[^>]*type="application\/x-actions"[^>]*>([\s\S]*?)<\/script>/g;

/**
 * Declarative stand-in for destination-page JavaScript: a JSON list of
 * storage writes and beacons the navigator executes after load.
 */
export function actionOps(html: string): ActionOp[] {
  const ops: ActionOp[] = [];
  for (const m of html.matchAll(ACTION_SCRIPT)) {
    const parsed = JSON.parse(m[1]);
    if (!Array.isArray(parsed)) throw new Error("x-actions script must hold a JSON array");
    for (const op of parsed) ops.push(op as ActionOp);
  }
  return ops;
}
