/**
 * Visited-domain ledger shared by concurrent crawl processes.
 *
 * A plain append-only text file, one landing domain per line, guarded
 * by an advisory lock (exclusive creation of a sibling `.lock` file).
 * Readers tolerate duplicate lines; the set semantics live in read().
 */

import { appendFile, open, readFile, rm } from "node:fs/promises";

export interface Ledger {
  read(): Promise<Set<string>>;
  append(domain: string): Promise<void>;
}

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

const LOCK_TIMEOUT_MS = 5_000;

async function withLock<T>(path: string, fn: () => Promise<T>): Promise<T> {
  const lockPath = path + ".lock";
  const deadline = Date.now() + LOCK_TIMEOUT_MS;
  for (;;) {
    try {
      const handle = await open(lockPath, "wx");
      await handle.close();
      break;
    } catch (err) {
      if ((err as NodeJS.ErrnoException).code !== "EEXIST") throw err;
      if (Date.now() > deadline) {
        throw new Error(`ledger lock ${lockPath} held for more than ${LOCK_TIMEOUT_MS}ms`);
      }
      await sleep(4 + Math.random() * 8);
    }
  }
  try {
    return await fn();
  } finally {
    await rm(lockPath, { force: true });
  }
}

export class FileLedger implements Ledger {
  constructor(readonly path: string) {}

  async read(): Promise<Set<string>> {
    let text: string;
    try {
      text = await readFile(this.path, "utf-8");
    } catch (err) {
      if ((err as NodeJS.ErrnoException).code === "ENOENT") return new Set();
      throw err;
    }
    return new Set(text.split("\n").map((l) => l.trim()).filter(Boolean));
  }

  async append(domain: string): Promise<void> {
    await withLock(this.path, async () => {
      await appendFile(this.path, domain + "\n", "utf-8");
    });
  }
}

/** In-memory stand-in; revisit passes use it so they never taint the shared file. */
export class MemoryLedger implements Ledger {
  private readonly visited = new Set<string>();

  async read(): Promise<Set<string>> {
    return new Set(this.visited);
  }

  async append(domain: string): Promise<void> {
    this.visited.add(domain);
  }
}
