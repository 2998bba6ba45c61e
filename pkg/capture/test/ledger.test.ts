import { readFileSync, existsSync } from "node:fs";
import { join } from "node:path";
import { assert, describe, it } from "vitest";

import { FileLedger, MemoryLedger } from "../src/ledger.js";
import { tmpDir } from "./helpers.js";

describe("visited-domain ledger", () => {
  it("reads a missing file as an empty set", async () => {
    const ledger = new FileLedger(join(tmpDir(), "ledger.txt"));
    assert.deepEqual(await ledger.read(), new Set());
  });

  it("appends one domain per line and reads them back", async () => {
    const path = join(tmpDir(), "ledger.txt");
    const ledger = new FileLedger(path);
    await ledger.append("shop.fix");
    await ledger.append("alpha.fix");
    assert.deepEqual(await ledger.read(), new Set(["shop.fix", "alpha.fix"]));
    assert.equal(readFileSync(path, "utf-8"), "shop.fix\nalpha.fix\n");
  });

  it("collapses duplicate lines on read", async () => {
    const ledger = new FileLedger(join(tmpDir(), "ledger.txt"));
    await ledger.append("shop.fix");
    await ledger.append("shop.fix");
    assert.deepEqual(await ledger.read(), new Set(["shop.fix"]));
  });

  it("serializes concurrent appends without corrupting lines", async () => {
    const path = join(tmpDir(), "ledger.txt");
    const ledger = new FileLedger(path);
    const domains = Array.from({ length: 25 }, (_, i) => `site-${i}.fix`);
    await Promise.all(domains.map((d) => ledger.append(d)));
    const lines = readFileSync(path, "utf-8").split("\n").filter(Boolean);
    assert.lengthOf(lines, 25);
    assert.deepEqual(new Set(lines), new Set(domains));
  });

  it("leaves no lock file behind", async () => {
    const path = join(tmpDir(), "ledger.txt");
    await new FileLedger(path).append("shop.fix");
    assert.notOk(existsSync(path + ".lock"));
  });

  it("keeps memory ledgers isolated from disk", async () => {
    const ledger = new MemoryLedger();
    await ledger.append("shop.fix");
    assert.deepEqual(await ledger.read(), new Set(["shop.fix"]));
    assert.deepEqual(await new MemoryLedger().read(), new Set());
  });
});
