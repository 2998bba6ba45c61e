import { writeFileSync } from "node:fs";
import { join } from "node:path";
import { afterAll, assert, beforeAll, describe, it } from "vitest";

import { loadBundle } from "../src/bundle.js";
import { InvalidBundle, PortInUse } from "../src/errors.js";
import { Transport } from "../src/navigator.js";
import { serveFixtures, type FixtureServer } from "../src/server.js";
import { tmpDir, twoHopBundleDir, writeBundle } from "./helpers.js";

describe("fixture server", () => {
  let server: FixtureServer;
  let transport: Transport;

  beforeAll(async () => {
    server = await serveFixtures(loadBundle(twoHopBundleDir));
    transport = new Transport({ fixturePort: server.port, timeoutMs: 5_000 });
  });

  afterAll(async () => {
    await server.close();
  });

  it("plays every origin in the bundle on one port", async () => {
    assert.sameMembers(server.origins, ["engine.fix", "track-a.fix", "track-b.fix", "shop.fix"]);
    const home = await transport.fetch("http://engine.fix/", null);
    assert.equal(home.status, 200);
    assert.include(home.headers["content-type"], "text/html");
    const pixel = await transport.fetch("http://track-b.fix/px/1.gif", null);
    assert.equal(pixel.status, 200);
    assert.include(pixel.headers["content-type"], "image/gif");
    assert.isTrue(pixel.body.startsWith("GIF89a"));
    const landing = await transport.fetch("http://shop.fix/land?msclkid=feedfacefeedface", null);
    assert.equal(landing.status, 200);
  });

  it("plants the engine cookie only when absent", async () => {
    const first = await transport.fetch("http://engine.fix/", null);
    assert.match(
      first.headers["set-cookie"] ?? "",
      /^seng_uid=[0-9a-f]{16}; Domain=\.engine\.fix; Path=\/$/,
    );
    const again = await transport.fetch("http://engine.fix/", "seng_uid=feedfacefeedface");
    assert.isUndefined(again.headers["set-cookie"]);
  });

  it("renders the query and a fresh click id into results", async () => {
    const results = await transport.fetch("http://engine.fix/search?q=desk+lamp", null);
    assert.equal(results.status, 200);
    assert.include(results.body, "desk lamp");
    assert.match(results.body, /msclkid=[0-9a-f]{16}/);
  });

  it("redirects clicks through the second tracker with params re-threaded", async () => {
    const click = await transport.fetch(
      "http://track-a.fix/click?dest=http%3A%2F%2Fshop.fix%2Fland&msclkid=feedfacefeedface",
      null,
    );
    assert.equal(click.status, 302);
    assert.equal(
      click.headers["location"],
      "http://track-b.fix/hop?dest=http%3A%2F%2Fshop.fix%2Fland&msclkid=feedfacefeedface",
    );
    assert.match(click.headers["set-cookie"] ?? "", /^ta_uid=[0-9a-f]{16}; Domain=\.track-a\.fix/);

    const hop = await transport.fetch(click.headers["location"], null);
    assert.equal(hop.status, 302);
    assert.equal(hop.headers["location"], "http://shop.fix/land?msclkid=feedfacefeedface");
  });

  it("404s unknown origins and unrouted paths", async () => {
    const origin = await transport.fetch("http://nowhere.fix/", null);
    assert.equal(origin.status, 404);
    assert.include(origin.body, "no such fixture origin");
    const path = await transport.fetch("http://engine.fix/missing", null);
    assert.equal(path.status, 404);
    assert.include(path.body, "no route for");
  });

  it("refuses a port that is already bound", async () => {
    let err: unknown = null;
    try {
      await serveFixtures(loadBundle(twoHopBundleDir), server.port);
    } catch (e) {
      err = e;
    }
    assert.instanceOf(err, PortInUse);
    assert.include((err as Error).message, String(server.port));
  });

  it("releases its port on close", async () => {
    const bundle = loadBundle(twoHopBundleDir);
    const a = await serveFixtures(bundle);
    const port = a.port;
    await a.close();
    const b = await serveFixtures(bundle, port);
    assert.equal(b.port, port);
    await b.close();
  });
});

describe("bundle validation", () => {
  it("loads the shipped bundle", () => {
    const bundle = loadBundle(twoHopBundleDir);
    assert.lengthOf(Object.keys(bundle.origins), 4);
  });

  it("rejects a directory without a manifest", () => {
    assert.throws(() => loadBundle(tmpDir()), InvalidBundle, /no bundle.json/);
  });

  it("rejects malformed manifest JSON", () => {
    const dir = tmpDir();
    writeFileSync(join(dir, "bundle.json"), "{ not json");
    assert.throws(() => loadBundle(dir), InvalidBundle, /not valid JSON/);
  });

  it("rejects a manifest with no origins", () => {
    const dir = writeBundle(tmpDir(), { origins: {} });
    assert.throws(() => loadBundle(dir), InvalidBundle, /defines no origins/);
  });

  it("rejects route paths that are not absolute", () => {
    const dir = writeBundle(tmpDir(), {
      origins: { "a.fix": { routes: { "nope": { kind: "hang" } } } },
    });
    assert.throws(() => loadBundle(dir), InvalidBundle, /must start with \//);
  });

  it("rejects assets with both file and body, or neither", () => {
    const both = writeBundle(
      tmpDir(),
      {
        origins: {
          "a.fix": {
            routes: {
              "/x": { kind: "asset", contentType: "text/plain", file: "pages/x", body: "x" },
            },
          },
        },
      },
      { x: "x" },
    );
    assert.throws(() => loadBundle(both), InvalidBundle, /exactly one of file or body/);
    const neither = writeBundle(tmpDir(), {
      origins: { "a.fix": { routes: { "/x": { kind: "asset", contentType: "text/plain" } } } },
    });
    assert.throws(() => loadBundle(neither), InvalidBundle, /exactly one of file or body/);
  });

  it("rejects manifests that reference missing files", () => {
    const dir = writeBundle(tmpDir(), {
      origins: { "a.fix": { routes: { "/": { kind: "page", file: "pages/gone.html" } } } },
    });
    assert.throws(() => loadBundle(dir), InvalidBundle, /missing from bundle/);
  });
});
