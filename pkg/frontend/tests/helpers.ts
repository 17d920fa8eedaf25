import { readFileSync } from "node:fs";
import type { FetchLike, ResponseLike } from "../src/api.js";

/** Parse one captured service response from fixtures/. These files are
 * regenerated by scripts/capture_fixtures.py against the real service, so
 * comparing rendered output to them compares against the service itself. */
export function fixture<T>(name: string): T {
  const url = new URL(`../fixtures/${name}.json`, import.meta.url);
  return JSON.parse(readFileSync(url, "utf-8")) as T;
}

export interface Route {
  status?: number;
  body: unknown;
  manifest?: string;
}

export type RouteTable = Record<string, Route | ((init?: { method?: string; body?: string }) => Route)>;

/** fetch stand-in serving canned routes keyed by "METHOD path". */
export function makeFetch(routes: RouteTable, log: string[] = []): FetchLike {
  return async (url, init): Promise<ResponseLike> => {
    const key = `${init?.method ?? "GET"} ${url}`;
    log.push(key);
    const hit = routes[key];
    if (hit === undefined) {
      throw new Error(`no route for ${key}`);
    }
    const route = typeof hit === "function" ? hit(init) : hit;
    return {
      status: route.status ?? 200,
      json: async () => route.body,
      headers: {
        get: (name: string) =>
          name.toLowerCase() === "x-workspace-manifest"
            ? route.manifest ?? null
            : null,
      },
    };
  };
}
