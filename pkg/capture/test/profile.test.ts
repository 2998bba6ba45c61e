import { join } from "node:path";
import { assert, describe, it } from "vitest";

import { loadProfile, parseProfile } from "../src/profile.js";
import { packageRoot } from "./helpers.js";

const base = {
  engine_id: "t",
  home_url: "http://engine.fix/",
  query_input: "input[name=q]",
  results_ready: "#ads",
};

describe("engine profiles", () => {
  it("accepts a container-title strategy", () => {
    const p = parseProfile({ ...base, ad_detection: { container_title: "Sponsored Links" } });
    assert.equal(p.ad_detection.container_title, "Sponsored Links");
    assert.isUndefined(p.ad_detection.href_prefix);
  });

  it("accepts an href-prefix strategy", () => {
    const p = parseProfile({ ...base, ad_detection: { href_prefix: "www.googleadservices.com/" } });
    assert.equal(p.ad_detection.href_prefix, "www.googleadservices.com/");
  });

  it("rejects a profile with no ad-detection strategy", () => {
    assert.throws(() => parseProfile({ ...base, ad_detection: {} }), /exactly one/);
  });

  it("rejects a profile with both strategies", () => {
    assert.throws(
      () =>
        parseProfile({
          ...base,
          ad_detection: { container_title: "Ads", href_prefix: "x.example/" },
        }),
      /exactly one/,
    );
  });

  it("rejects unknown fields", () => {
    assert.throws(() =>
      parseProfile({ ...base, ad_detection: { container_title: "Ads" }, extra: 1 }),
    );
  });

  it("loads the bundled fixture profiles", () => {
    const container = loadProfile(join(packageRoot, "profiles", "fixture-engine.json"));
    assert.equal(container.engine_id, "fixture");
    assert.equal(container.ad_detection.container_title, "Sponsored Links");

    const prefix = loadProfile(join(packageRoot, "profiles", "fixture-engine-prefix.json"));
    assert.equal(prefix.ad_detection.href_prefix, "track-a.fix/click");

    const live = loadProfile(join(packageRoot, "profiles", "live-bing.json"));
    assert.equal(live.consent_click, "#bnp_btn_accept");
  });

  it("reports unreadable profile files by path", () => {
    assert.throws(() => loadProfile("/nonexistent/profile.json"), /profile.*nonexistent/);
  });
});
