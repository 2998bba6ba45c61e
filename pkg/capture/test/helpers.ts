import { mkdirSync, mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

export const packageRoot = join(dirname(fileURLToPath(import.meta.url)), "..");
export const twoHopBundleDir = join(packageRoot, "bundles", "two-hop-smuggle");

export function tmpDir(prefix = "capture-test-"): string {
  return mkdtempSync(join(tmpdir(), prefix));
}

/** Materialize a bundle directory from a manifest and page map. */
export function writeBundle(
  dir: string,
  manifest: object,
  pages: Record<string, string> = {},
): string {
  mkdirSync(join(dir, "pages"), { recursive: true });
  for (const [name, html] of Object.entries(pages)) {
    writeFileSync(join(dir, "pages", name), html);
  }
  writeFileSync(join(dir, "bundle.json"), JSON.stringify(manifest, null, 2));
  return dir;
}

export const UNIT_PROFILE = {
  engine_id: "unit",
  home_url: "http://engine.fix/",
  query_input: "input[name=q]",
  ad_detection: { container_title: "Sponsored Links" },
  results_ready: "#ads",
};

const HOME_HTML = `<!doctype html>
<html><body>
<form action="/search" method="get"><input type="text" name="q" id="searchbox"></form>
</body></html>
`;

function resultsHtml(adsMarkup: string): string {
  return `<!doctype html>
<html><body>
<section title="Sponsored Links" id="ads"><ul>${adsMarkup}</ul></section>
</body></html>
`;
}

const DEST_HTML = `<!doctype html><html><body><h1>landed</h1></body></html>\n`;

/** Engine with two ads that land on different domains, plus both destinations. */
export function twoAdsBundle(dir: string): string {
  const ads =
    `<li><a href="http://alpha.fix/" data-landing="alpha.fix">Alpha</a></li>` +
    `<li><a href="http://beta.fix/" data-landing="beta.fix">Beta</a></li>`;
  return writeBundle(
    dir,
    {
      origins: {
        "engine.fix": {
          routes: {
            "/": { kind: "page", file: "pages/home.html" },
            "/search": { kind: "page", file: "pages/results.html" },
          },
        },
        "alpha.fix": { routes: { "/": { kind: "page", file: "pages/dest.html" } } },
        "beta.fix": { routes: { "/": { kind: "page", file: "pages/dest.html" } } },
      },
    },
    { "home.html": HOME_HTML, "results.html": resultsHtml(ads), "dest.html": DEST_HTML },
  );
}

/** Engine whose results page renders an empty sponsored block. */
export function noAdsBundle(dir: string): string {
  return writeBundle(
    dir,
    {
      origins: {
        "engine.fix": {
          routes: {
            "/": { kind: "page", file: "pages/home.html" },
            "/search": { kind: "page", file: "pages/results.html" },
          },
        },
      },
    },
    { "home.html": HOME_HTML, "results.html": resultsHtml("") },
  );
}
