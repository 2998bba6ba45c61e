import { readdirSync } from "node:fs";
import { join } from "node:path";
import { afterAll, assert, beforeAll, describe, it } from "vitest";

import { loadBundle } from "../src/bundle.js";
import { NoAdsFound, QueryMismatch } from "../src/errors.js";
import { runIteration, runRevisit } from "../src/iteration.js";
import { MemoryLedger } from "../src/ledger.js";
import { Transport } from "../src/navigator.js";
import { loadProfile, parseProfile } from "../src/profile.js";
import { serveFixtures, type FixtureServer } from "../src/server.js";
import type { AdClickEvent, TraceDoc } from "../src/trace.js";
import {
  noAdsBundle,
  packageRoot,
  tmpDir,
  twoAdsBundle,
  twoHopBundleDir,
  UNIT_PROFILE,
} from "./helpers.js";

const unitProfile = parseProfile(UNIT_PROFILE);

function adClickOf(doc: TraceDoc): AdClickEvent {
  return doc.events.find((e): e is AdClickEvent => e.type === "ad_click") as AdClickEvent;
}

function cookieValue(doc: TraceDoc, name: string): string | undefined {
  const final = doc.checkpoints.find((c) => c.phase === "destination_dwell_end");
  return final?.cookies.find((c) => c.name === name)?.value;
}

describe("ad choice and the landing ledger", () => {
  let server: FixtureServer;
  let transport: Transport;

  beforeAll(async () => {
    server = await serveFixtures(loadBundle(twoAdsBundle(tmpDir())));
    transport = new Transport({ fixturePort: server.port, timeoutMs: 5_000 });
  });

  afterAll(async () => {
    await server.close();
  });

  const run = (ledger: MemoryLedger, outDir = tmpDir()) =>
    runIteration({
      profile: unitProfile,
      query: "desk lamp",
      ledger,
      outDir,
      transport,
      dwellSeconds: 0.01,
    });

  it("clicks the first ad on an empty ledger and records the visit", async () => {
    const ledger = new MemoryLedger();
    const result = await run(ledger);
    assert.equal(result.clicked.landingDomain, "alpha.fix");
    assert.deepEqual([...(await ledger.read())], ["alpha.fix"]);
  });

  it("prefers a landing domain the ledger has not seen", async () => {
    const ledger = new MemoryLedger();
    await ledger.append("alpha.fix");
    const result = await run(ledger);
    assert.equal(result.clicked.landingDomain, "beta.fix");
  });

  it("falls back to the first ad once every landing is known", async () => {
    const ledger = new MemoryLedger();
    await ledger.append("alpha.fix");
    await ledger.append("beta.fix");
    const result = await run(ledger);
    assert.equal(result.clicked.landingDomain, "alpha.fix");
  });

  it("emits a well-formed trace document", async () => {
    const outDir = tmpDir();
    const result = await run(new MemoryLedger(), outDir);
    const doc = result.doc;

    assert.equal(doc.schema_version, 1);
    assert.equal(doc.engine_id, "unit");
    assert.equal(doc.query, "desk lamp");
    assert.isNull(doc.revisit_of);
    assert.match(doc.instance_id, /^i[0-9a-z]+-[0-9a-f]{6}-\d+$/);
    assert.deepEqual(
      doc.checkpoints.map((c) => c.phase),
      ["pre_query", "results_page", "post_click", "destination_dwell_end"],
    );

    const click = adClickOf(doc);
    assert.lengthOf(click.displayed_ads, 2);
    assert.equal(click.declared_landing_domain, "alpha.fix");
    assert.match(click.ad_element_descriptor, /a:nth-of-type\(1\)$/);

    const first = doc.events[0];
    assert.equal(first.type, "navigation");
    assert.isBelow(doc.capture_start, first.timestamp);
    assert.isAbove(doc.capture_end, doc.events[doc.events.length - 1].timestamp);

    assert.deepEqual(readdirSync(outDir), [`${doc.instance_id}.trace.json`]);
    assert.equal(result.tracePath, join(outDir, `${doc.instance_id}.trace.json`));
  });

  it("raises NoAdsFound and writes no trace when the block is empty", async () => {
    const bare = await serveFixtures(loadBundle(noAdsBundle(tmpDir())));
    try {
      const outDir = tmpDir();
      let err: unknown = null;
      try {
        await runIteration({
          profile: unitProfile,
          query: "desk lamp",
          ledger: new MemoryLedger(),
          outDir,
          transport: new Transport({ fixturePort: bare.port, timeoutMs: 5_000 }),
          dwellSeconds: 0.01,
        });
      } catch (e) {
        err = e;
      }
      assert.instanceOf(err, NoAdsFound);
      assert.lengthOf(readdirSync(outDir), 0);
    } finally {
      await bare.close();
    }
  });
});

describe("revisits", () => {
  let server: FixtureServer;
  let transport: Transport;
  const fixtureProfile = loadProfile(join(packageRoot, "profiles", "fixture-engine.json"));

  beforeAll(async () => {
    server = await serveFixtures(loadBundle(twoHopBundleDir));
    transport = new Transport({ fixturePort: server.port, timeoutMs: 5_000 });
  });

  afterAll(async () => {
    await server.close();
  });

  it("replays the instance later and keeps planted identifiers stable", async () => {
    const outDir = tmpDir();
    const original = await runIteration({
      profile: fixtureProfile,
      query: "desk lamp",
      ledger: new MemoryLedger(),
      outDir,
      transport,
      dwellSeconds: 0.01,
    });

    const logged: string[] = [];
    const revisit = await runRevisit(original.tracePath, {
      profile: fixtureProfile,
      outDir,
      transport,
      dwellSeconds: 0.01,
      revisitDelaySeconds: 0,
      log: (m) => logged.push(m),
    });

    assert.equal(revisit.doc.instance_id, original.doc.instance_id);
    assert.equal(revisit.doc.revisit_of, original.doc.instance_id);
    assert.isTrue(revisit.tracePath.endsWith(".r.trace.json"));
    assert.include(logged.join("\n"), "revisit delay is 0s");

    // idempotent cookie plants survive, per-render click ids rotate
    assert.equal(cookieValue(revisit.doc, "seng_uid"), cookieValue(original.doc, "seng_uid"));
    assert.equal(cookieValue(revisit.doc, "ta_uid"), cookieValue(original.doc, "ta_uid"));
    const clickId = (doc: TraceDoc) =>
      new URL(adClickOf(doc).href_at_click).searchParams.get("msclkid");
    assert.match(clickId(original.doc) ?? "", /^[0-9a-f]{16}$/);
    assert.notEqual(clickId(revisit.doc), clickId(original.doc));
  });

  it("rejects a revisit under a different query", async () => {
    const outDir = tmpDir();
    const original = await runIteration({
      profile: fixtureProfile,
      query: "desk lamp",
      ledger: new MemoryLedger(),
      outDir,
      transport,
      dwellSeconds: 0.01,
    });
    let err: unknown = null;
    try {
      await runRevisit(original.tracePath, {
        profile: fixtureProfile,
        outDir,
        transport,
        dwellSeconds: 0.01,
        revisitDelaySeconds: 0,
        query: "standing desk",
      });
    } catch (e) {
      err = e;
    }
    assert.instanceOf(err, QueryMismatch);
  });

  it("rejects a revisit with a profile for another engine", async () => {
    const outDir = tmpDir();
    const original = await runIteration({
      profile: fixtureProfile,
      query: "desk lamp",
      ledger: new MemoryLedger(),
      outDir,
      transport,
      dwellSeconds: 0.01,
    });
    let err: unknown = null;
    try {
      await runRevisit(original.tracePath, {
        profile: unitProfile,
        outDir,
        transport,
        dwellSeconds: 0.01,
        revisitDelaySeconds: 0,
      });
    } catch (e) {
      err = e;
    }
    assert.instanceOf(err, Error);
    assert.include((err as Error).message, "engine");
  });

  it("supports href-prefix ad detection on the same results page", async () => {
    const prefixProfile = loadProfile(
      join(packageRoot, "profiles", "fixture-engine-prefix.json"),
    );
    const result = await runIteration({
      profile: prefixProfile,
      query: "wireless headphones",
      ledger: new MemoryLedger(),
      outDir: tmpDir(),
      transport,
      dwellSeconds: 0.01,
    });
    assert.isTrue(result.clicked.href.startsWith("http://track-a.fix/click?"));
    assert.equal(result.clicked.landingDomain, "shop.fix");
    assert.lengthOf(adClickOf(result.doc).displayed_ads, 1); // only one anchor matches the prefix
  });
});
