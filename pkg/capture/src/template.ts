/**
 * Placeholder expansion for fixture pages and redirect targets.
 *
 * Supported forms:
 *   {{query}}           alias for {{param:q}}
 *   {{param:name}}      decoded value of a request query parameter
 *   {{param.enc:name}}  the same value percent-encoded, for embedding a
 *                       URL inside another URL's query string
 *   {{uid16}}           fresh random identifier per occurrence
 *   {{uid16:label}}     random identifier memoized per render, so one
 *                       value can appear in several places on a page
 */

import { uid16 } from "./token.js";

export interface TemplateContext {
  params: URLSearchParams;
  memo: Map<string, string>;
}

export function newContext(params: URLSearchParams): TemplateContext {
  return { params, memo: new Map() };
}

const PLACEHOLDER = /\{\{\s*(query|uid16(?::[\w-]+)?|param(?:\.enc)?:[\w.-]+)\s*\}\}/g;

export function renderTemplate(text: string, ctx: TemplateContext): string {
  return text.replace(PLACEHOLDER, (_whole, inner: string) => {
    if (inner === "query") return ctx.params.get("q") ?? "";
    if (inner === "uid16") return uid16();
    if (inner.startsWith("uid16:")) {
      const label = inner.slice("uid16:".length);
      let value = ctx.memo.get(label);
      if (value === undefined) {
        value = uid16();
        ctx.memo.set(label, value);
      }
      return value;
    }
    if (inner.startsWith("param.enc:")) {
      return encodeURIComponent(ctx.params.get(inner.slice("param.enc:".length)) ?? "");
    }
    return ctx.params.get(inner.slice("param:".length)) ?? "";
  });
}
