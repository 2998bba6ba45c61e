#!/usr/bin/env node
/**
 * capture: crawl search-ad clicks into trace files, and serve the local
 * fixture sites those crawls can run against.
 *
 *   capture run --profile <file> --queries <file> --out <dir>
 *   capture fixtures serve --bundle <dir>
 *
 * `run` performs one fresh-browser iteration per query (cycling when
 * --iterations exceeds the list), optionally revisits the first N
 * successful iterations, and writes `capture-stats.json` with the
 * dual-recorder agreement next to the traces.
 */

import { mkdirSync, writeFileSync } from "node:fs";
import { basename, join } from "node:path";
import { pathToFileURL } from "node:url";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { loadBundle } from "./bundle.js";
import { CaptureError } from "./errors.js";
import { runIteration, runRevisit, type IterationResult } from "./iteration.js";
import { FileLedger } from "./ledger.js";
import { Transport } from "./navigator.js";
import { loadProfile } from "./profile.js";
import { loadQueries, makePlan } from "./plan.js";
import { serveFixtures } from "./server.js";

// Realistic browser headers, used only when --stealth is on. Fixture
// runs keep it off so recorded traces stay free of evasion artifacts.
const STEALTH_HEADERS: Record<string, string> = {
  "user-agent":
    "Mozilla/5.0 (Windows NT 10.0; Win64; x64) AppleWebKit/537.36 " +
    "(KHTML, like Gecko) Chrome/106.0.0.0 Safari/537.36",
  "accept-language": "en-US,en;q=0.9",
  accept: "text/html,application/xhtml+xml,application/xml;q=0.9,*/*;q=0.8",
};

interface RunArgs {
  profile: string;
  queries: string;
  out: string;
  iterations?: number;
  dwell: number;
  revisit: number;
  revisitDelay: number;
  fixturePort?: number;
  ledger?: string;
  timeoutMs: number;
  stealth: boolean;
}

interface TraceStat {
  file: string;
  query: string;
  instance_id: string;
  revisit: boolean;
  network_requests: number;
  page_requests: number;
  matched: number;
  agreement: number;
}

function statFor(result: IterationResult, revisit: boolean): TraceStat {
  return {
    file: basename(result.tracePath),
    query: result.doc.query,
    instance_id: result.doc.instance_id,
    revisit,
    ...result.stats,
  };
}

async function cmdRun(argv: RunArgs): Promise<number> {
  const profile = loadProfile(argv.profile);
  const plan = makePlan({
    queries: loadQueries(argv.queries),
    iterations: argv.iterations,
    dwellSeconds: argv.dwell,
    revisitDelaySeconds: argv.revisitDelay,
  });
  mkdirSync(argv.out, { recursive: true });
  const ledger = new FileLedger(argv.ledger ?? join(argv.out, "visited-domains.txt"));
  const transport = new Transport({
    fixturePort: argv.fixturePort,
    timeoutMs: argv.timeoutMs,
    extraHeaders: argv.stealth ? STEALTH_HEADERS : undefined,
  });
  const log = (message: string) => console.error(message);

  const originals: IterationResult[] = [];
  const stats: TraceStat[] = [];
  for (let i = 0; i < plan.iterations; i++) {
    const query = plan.queries[i % plan.queries.length];
    try {
      const result = await runIteration({
        profile,
        query,
        ledger,
        outDir: argv.out,
        transport,
        dwellSeconds: plan.dwellSeconds,
        log,
      });
      originals.push(result);
      stats.push(statFor(result, false));
      log(`trace written: ${result.tracePath} (agreement ${result.stats.agreement.toFixed(4)})`);
    } catch (err) {
      log(`error: iteration ${i + 1} (${query}): ${(err as Error).message}`);
    }
  }

  for (const original of originals.slice(0, argv.revisit)) {
    try {
      const result = await runRevisit(original.tracePath, {
        profile,
        outDir: argv.out,
        transport,
        dwellSeconds: plan.dwellSeconds,
        revisitDelaySeconds: plan.revisitDelaySeconds,
        log,
      });
      stats.push(statFor(result, true));
      log(`revisit written: ${result.tracePath} (agreement ${result.stats.agreement.toFixed(4)})`);
    } catch (err) {
      log(`error: revisit of ${original.doc.instance_id}: ${(err as Error).message}`);
    }
  }

  const network = stats.reduce((n, s) => n + s.network_requests, 0);
  const matched = stats.reduce((n, s) => n + s.matched, 0);
  const total = {
    network_requests: network,
    page_requests: stats.reduce((n, s) => n + s.page_requests, 0),
    matched,
    agreement: network === 0 ? 1 : matched / network,
  };
  writeFileSync(
    join(argv.out, "capture-stats.json"),
    JSON.stringify({ traces: stats, total }, null, 2) + "\n",
  );
  console.log(
    `${stats.length} traces written to ${argv.out}; ` +
      `dual-recorder agreement ${total.agreement.toFixed(4)}`,
  );
  return stats.length > 0 ? 0 : 1;
}

interface ServeArgs {
  bundle: string;
  port: number;
}

async function cmdServe(argv: ServeArgs): Promise<void> {
  const bundle = loadBundle(argv.bundle);
  const server = await serveFixtures(bundle, argv.port);
  console.log(`serving ${server.origins.length} fixture origins on http://127.0.0.1:${server.port}`);
  for (const origin of server.origins) {
    console.log(`  http://${origin}/ (Host-header alias of 127.0.0.1:${server.port})`);
  }
  console.log(`crawl against it with: capture run ... --fixture-port ${server.port}`);
  const stop = async () => {
    await server.close();
    process.exit(0);
  };
  process.on("SIGINT", stop);
  process.on("SIGTERM", stop);
  await new Promise(() => undefined); // serve until signalled
}

export async function main(argvRaw: string[]): Promise<number> {
  let code = 0;
  const parser = yargs(argvRaw)
    .scriptName("capture")
    .command(
      "run",
      "run ad-click crawl iterations and write trace files",
      (y) =>
        y.options({
          profile: { type: "string", demandOption: true, describe: "engine profile JSON" },
          queries: { type: "string", demandOption: true, describe: "query list, one per line" },
          out: { type: "string", demandOption: true, describe: "output directory for traces" },
          iterations: { type: "number", describe: "iteration count (default: one per query)" },
          dwell: { type: "number", default: 15, describe: "destination dwell seconds" },
          revisit: {
            type: "number",
            default: 0,
            describe: "revisit the first N successful iterations",
          },
          "revisit-delay": {
            type: "number",
            default: 86_400,
            describe: "seconds between visit and revisit",
          },
          "fixture-port": {
            type: "number",
            describe: "route every hostname to a fixture server on this loopback port",
          },
          ledger: {
            type: "string",
            describe: "visited-domain ledger file (default: <out>/visited-domains.txt)",
          },
          "timeout-ms": { type: "number", default: 10_000, describe: "per-request timeout" },
          stealth: { type: "boolean", default: false, describe: "send realistic browser headers" },
        }),
      async (argv) => {
        code = await cmdRun(argv as unknown as RunArgs);
      },
    )
    .command("fixtures", "local fixture-site utilities", (y) =>
      y
        .command(
          "serve",
          "serve a fixture bundle as multiple loopback origins",
          (y2) =>
            y2.options({
              bundle: { type: "string", demandOption: true, describe: "bundle directory" },
              port: { type: "number", default: 8080, describe: "listen port (0 = ephemeral)" },
            }),
          async (argv) => {
            await cmdServe(argv as unknown as ServeArgs);
          },
        )
        .demandCommand(1, "fixtures needs a subcommand"),
    )
    .demandCommand(1, "a command is required")
    .strict()
    .fail((msg, err) => {
      if (err) throw err;
      console.error(`error: ${msg}`);
      process.exit(2);
    })
    .help();
  await parser.parseAsync();
  return code;
}

const isMain =
  process.argv[1] !== undefined && import.meta.url === pathToFileURL(process.argv[1]).href;

if (isMain) {
  main(hideBin(process.argv))
    .then((code) => {
      process.exitCode = code;
    })
    .catch((err) => {
      const prefix = err instanceof CaptureError ? "" : "unexpected ";
      console.error(`${prefix}error: ${(err as Error).message}`);
      process.exitCode = 1;
    });
}
