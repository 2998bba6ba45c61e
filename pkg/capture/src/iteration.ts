/**
 * One crawl iteration: search, click an ad, dwell, write the trace.
 *
 * The flow mirrors a manual session. A fresh browser instance loads the
 * engine's home page, a storage snapshot marks the pre-query state, the
 * query is typed and submitted, the results page snapshot is taken, the
 * displayed ads are read and one is clicked (preferring a landing
 * domain the ledger has not seen), the post-click snapshot follows, and
 * after the dwell the final snapshot closes the capture window. Ads a
 * page shows but cannot be clicked leave NoAdsFound behind and no trace
 * file is written.
 */

import { randomBytes } from "node:crypto";
import { readFileSync } from "node:fs";
import { NoAdsFound, NavigationTimeout, QueryMismatch } from "./errors.js";
import { adsByContainerTitle, adsByHrefPrefix, hasSelector, searchForm, type PageAd } from "./html.js";
import { MemoryLedger, type Ledger } from "./ledger.js";
import { Browser, CookieJar, PageStorage, Transport, originOf } from "./navigator.js";
import type { EngineProfile } from "./profile.js";
import { DualRecorder, type RecorderStats } from "./recorder.js";
import { TraceBuilder, writeTrace, type TraceDoc } from "./trace.js";

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

let instanceSeq = 0;

export function freshInstanceId(): string {
  instanceSeq += 1;
  return `i${Date.now().toString(36)}-${randomBytes(3).toString("hex")}-${instanceSeq}`;
}

export interface IterationOptions {
  profile: EngineProfile;
  query: string;
  ledger: Ledger;
  outDir: string;
  transport: Transport;
  dwellSeconds: number;
  instanceId?: string;
  log?: (message: string) => void;
}

export interface IterationResult {
  tracePath: string;
  doc: TraceDoc;
  stats: RecorderStats;
  clicked: PageAd;
}

function detectAds(profile: EngineProfile, html: string, baseUrl: string): PageAd[] {
  const strategy = profile.ad_detection;
  if (strategy.container_title !== undefined) {
    return adsByContainerTitle(html, strategy.container_title, baseUrl);
  }
  return adsByHrefPrefix(html, strategy.href_prefix as string, baseUrl);
}

async function driveIteration(
  opts: IterationOptions,
  builder: TraceBuilder,
  browser: Browser,
  recorder: DualRecorder,
): Promise<IterationResult> {
  const { profile, query, ledger, log } = opts;
  const snapshot = (phase: Parameters<TraceBuilder["checkpoint"]>[0]) =>
    builder.checkpoint(phase, browser.jar.toSnapshot(), browser.storage.toSnapshot());

  await browser.navigate(profile.home_url, "link_click", "");
  if (profile.consent_click && hasSelector(browser.currentHtml, profile.consent_click)) {
    log?.(`consent: clicked ${profile.consent_click}`);
  }
  snapshot("pre_query");

  const form = searchForm(browser.currentHtml, profile.query_input, browser.currentUrl);
  if (!form) {
    throw new Error(
      `no search form matching ${profile.query_input} on ${browser.currentUrl}`,
    );
  }
  const homeOrigin = originOf(browser.currentUrl);
  const searchUrl = new URL(form.action);
  searchUrl.searchParams.set(form.inputName, query);
  recorder.page(searchUrl.toString()); // submit target, visible in-page
  await browser.navigate(searchUrl.toString(), "link_click", homeOrigin);

  if (!hasSelector(browser.currentHtml, profile.results_ready)) {
    throw new NavigationTimeout(
      `results page never became ready (no ${profile.results_ready} on ${browser.currentUrl})`,
    );
  }
  snapshot("results_page");

  const ads = detectAds(profile, browser.currentHtml, browser.currentUrl);
  if (ads.length === 0) {
    throw new NoAdsFound(`no ads detected on ${browser.currentUrl}`);
  }
  const visited = await ledger.read();
  const clicked = ads.find((ad) => !visited.has(ad.landingDomain)) ?? ads[0];

  const resultsOrigin = originOf(browser.currentUrl);
  builder.adClick({
    ad_element_descriptor: clicked.descriptor,
    declared_landing_domain: clicked.landingDomain,
    href_at_click: clicked.href,
    displayed_ads: ads.map((ad) => ({ href: ad.href, landing_domain: ad.landingDomain })),
  });
  recorder.page(clicked.href); // the recorder sees the anchor href at click time
  await browser.navigate(clicked.href, "link_click", resultsOrigin);
  snapshot("post_click");

  await sleep(opts.dwellSeconds * 1000);
  snapshot("destination_dwell_end");

  const doc = builder.finalize();
  const tracePath = writeTrace(doc, opts.outDir);
  await ledger.append(clicked.landingDomain);
  return { tracePath, doc, stats: recorder.stats(), clicked };
}

/** Run one fresh-instance iteration and write its trace. */
export async function runIteration(opts: IterationOptions): Promise<IterationResult> {
  const instanceId = opts.instanceId ?? freshInstanceId();
  const builder = new TraceBuilder(opts.profile.engine_id, opts.query, instanceId, null);
  const recorder = new DualRecorder();
  const browser = new Browser(opts.transport, builder, recorder); // fresh: empty jar and storage
  return driveIteration(opts, builder, browser, recorder);
}

export interface RevisitOptions {
  profile: EngineProfile;
  outDir: string;
  transport: Transport;
  dwellSeconds: number;
  revisitDelaySeconds: number;
  query?: string;
  log?: (message: string) => void;
}

/**
 * Re-run an iteration as the original browser instance, a delay later.
 *
 * The browser starts from the storage state the original trace ended
 * with, so identifiers planted on day one are observable on day two.
 * The landing-domain ledger is not consulted or updated; the revisit
 * should retrace the original click, not explore.
 */
export async function runRevisit(
  originalTracePath: string,
  opts: RevisitOptions,
): Promise<IterationResult> {
  const original = JSON.parse(readFileSync(originalTracePath, "utf-8")) as TraceDoc;
  if (opts.profile.engine_id !== original.engine_id) {
    throw new Error(
      `revisit profile is for engine ${opts.profile.engine_id}, trace is from ${original.engine_id}`,
    );
  }
  if (opts.query !== undefined && opts.query !== original.query) {
    throw new QueryMismatch(
      `revisit query ${JSON.stringify(opts.query)} does not match original ${JSON.stringify(original.query)}`,
    );
  }
  const finalState = original.checkpoints.find((c) => c.phase === "destination_dwell_end");
  if (!finalState) {
    throw new Error(`original trace ${originalTracePath} has no destination_dwell_end snapshot`);
  }
  if (opts.revisitDelaySeconds === 0) {
    opts.log?.("warning: revisit delay is 0s; production revisits should wait about a day");
  }
  await sleep(opts.revisitDelaySeconds * 1000);

  const builder = new TraceBuilder(
    original.engine_id,
    original.query,
    original.instance_id,
    original.instance_id,
  );
  const recorder = new DualRecorder();
  const browser = new Browser(opts.transport, builder, recorder, {
    jar: CookieJar.fromSnapshot(finalState.cookies),
    storage: PageStorage.fromSnapshot(finalState.local_storage),
  });
  return driveIteration(
    {
      profile: opts.profile,
      query: original.query,
      ledger: new MemoryLedger(),
      outDir: opts.outDir,
      transport: opts.transport,
      dwellSeconds: opts.dwellSeconds,
      log: opts.log,
    },
    builder,
    browser,
    recorder,
  );
}
