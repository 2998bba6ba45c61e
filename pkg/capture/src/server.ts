/**
 * Multi-origin fixture server.
 *
 * One HTTP listener plays every origin in the bundle; requests are
 * dispatched on the Host header, the local equivalent of pointing
 * several loopback hostname aliases at one address. The crawler side
 * routes all fixture hostnames to this port while keeping recorded
 * URLs portless, so hostnames in traces look like real sites.
 */

import express from "express";
import type { Request, Response } from "express";
import { readFileSync } from "node:fs";
import type { Server } from "node:http";
import type { Socket } from "node:net";
import { join } from "node:path";
import type { Bundle, Route, SetCookiePlant } from "./bundle.js";
import { PortInUse } from "./errors.js";
import { newContext, renderTemplate, type TemplateContext } from "./template.js";

export interface FixtureServer {
  port: number;
  origins: string[];
  close(): Promise<void>;
}

function hasCookie(req: Request, name: string): boolean {
  const header = req.headers.cookie ?? "";
  return header.split(";").some((part) => part.trim().startsWith(name + "="));
}

function applyPlant(
  plant: SetCookiePlant | undefined,
  host: string,
  req: Request,
  res: Response,
  ctx: TemplateContext,
): void {
  if (!plant) return;
  if (plant.ifMissing && hasCookie(req, plant.name)) return;
  const value = renderTemplate(plant.value, ctx);
  res.setHeader("Set-Cookie", `${plant.name}=${value}; Domain=.${host}; Path=/`);
}

function serveRoute(bundle: Bundle, host: string, route: Route, req: Request, res: Response): void {
  const url = new URL(req.url, `http://${host}`);
  const ctx = newContext(url.searchParams);
  switch (route.kind) {
    case "hang":
      return; // hold the socket open; the client's timeout is the test subject
    case "asset": {
      const body = route.body ?? readFileSync(join(bundle.dir, route.file as string));
      res.status(200).type(route.contentType).send(body);
      return;
    }
    case "redirect": {
      applyPlant(route.setCookie, host, req, res, ctx);
      res.redirect(route.status, renderTemplate(route.location, ctx));
      return;
    }
    case "page": {
      applyPlant(route.setCookie, host, req, res, ctx);
      const html = readFileSync(join(bundle.dir, route.file), "utf-8");
      res.status(200).type("text/html").send(renderTemplate(html, ctx));
      return;
    }
  }
}

export function buildApp(bundle: Bundle): express.Express {
  const app = express();
  app.disable("x-powered-by");
  app.use((req, res) => {
    const host = (req.headers.host ?? "").split(":")[0];
    const origin = bundle.origins[host];
    if (!origin) {
      res.status(404).type("text/plain").send(`no such fixture origin: ${host}`);
      return;
    }
    const path = new URL(req.url, `http://${host}`).pathname;
    const route = origin.routes[path];
    if (!route) {
      res.status(404).type("text/plain").send(`no route for ${host}${path}`);
      return;
    }
    serveRoute(bundle, host, route, req, res);
  });
  return app;
}

/** Bind the bundle on 127.0.0.1; port 0 picks a free one. */
export function serveFixtures(bundle: Bundle, port = 0): Promise<FixtureServer> {
  const app = buildApp(bundle);
  return new Promise((resolve, reject) => {
    const server: Server = app.listen(port, "127.0.0.1");
    const sockets = new Set<Socket>();
    server.on("connection", (socket) => {
      sockets.add(socket);
      socket.on("close", () => sockets.delete(socket));
    });
    server.once("error", (err) => {
      if ((err as NodeJS.ErrnoException).code === "EADDRINUSE") {
        reject(new PortInUse(`port ${port} is already in use`));
      } else {
        reject(err);
      }
    });
    server.once("listening", () => {
      const address = server.address();
      const boundPort = typeof address === "object" && address ? address.port : port;
      resolve({
        port: boundPort,
        origins: Object.keys(bundle.origins),
        close: () =>
          new Promise<void>((done, fail) => {
            for (const socket of sockets) socket.destroy();
            server.close((err) => (err ? fail(err) : done()));
          }),
      });
    });
  });
}
