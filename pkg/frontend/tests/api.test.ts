import { describe, expect, it } from "vitest";
import { ApiClient, ApiError } from "../src/api.js";
import type { GroupsResponse, Health, OverridesResponse } from "../src/types.js";
import { fixture, makeFetch } from "./helpers.js";

const health = fixture<Health>("health");
const groups = fixture<GroupsResponse>("groups");
const mergeResponse = fixture<OverridesResponse>("merge_response");
const mergeRejected = fixture<{ detail: string }>("merge_rejected");
const mergeAction = fixture<{ actions: unknown[] }>("merge_action");

describe("ApiClient", () => {
  it("returns typed payloads straight from the wire", async () => {
    const api = new ApiClient(makeFetch({
      "GET /api/health": { body: health },
      "GET /api/groups": { body: groups },
    }));
    expect(await api.health()).toEqual(health);
    const got = await api.groups();
    expect(got.count).toBe(groups.count);
    expect(got.groups).toEqual(groups.groups);
  });

  it("tracks the workspace manifest header across responses", async () => {
    const api = new ApiClient(makeFetch({
      "GET /api/health": { body: health, manifest: "aaa" },
      "GET /api/groups": { body: groups, manifest: "bbb" },
    }));
    expect(api.lastManifest()).toBeNull();
    await api.health();
    expect(api.lastManifest()).toBe("aaa");
    await api.groups();
    expect(api.lastManifest()).toBe("bbb");
  });

  it("POSTs override actions as the service expects them", async () => {
    const log: string[] = [];
    let sent: string | undefined;
    const api = new ApiClient(makeFetch({
      "POST /api/overrides": (init) => {
        sent = init?.body;
        return { body: mergeResponse };
      },
    }, log));
    const resp = await api.submitOverrides(mergeAction.actions as never);
    expect(resp).toEqual(mergeResponse);
    expect(log).toEqual(["POST /api/overrides"]);
    expect(JSON.parse(sent!)).toEqual(mergeAction);
  });

  it("surfaces the service's rejection reason on 400", async () => {
    const api = new ApiClient(makeFetch({
      "POST /api/overrides": { status: 400, body: mergeRejected },
    }));
    const err = await api.submitOverrides([{ action: "merge" }]).catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(400);
    expect((err as ApiError).detail).toBe(mergeRejected.detail);
    expect((err as ApiError).detail).toContain("override rejected");
  });

  it("maps a 404 to an ApiError with its detail", async () => {
    const api = new ApiClient(makeFetch({
      "GET /api/projection3d": { status: 404, body: { detail: "workspace has no coords3d.csv" } },
    }));
    const err = await api.projection3d().catch((e) => e);
    expect((err as ApiError).status).toBe(404);
    expect((err as ApiError).detail).toContain("coords3d");
  });

  it("wraps transport failures as status-0 errors for the retry banner", async () => {
    const api = new ApiClient(async () => {
      throw new Error("connection refused");
    });
    const err = await api.health().catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(0);
    expect((err as ApiError).message).toContain("connection refused");
  });

  it("prefixes an optional base URL", async () => {
    const log: string[] = [];
    const api = new ApiClient(makeFetch({
      "GET http://host:9/api/health": { body: health },
    }, log), "http://host:9");
    await api.health();
    expect(log).toEqual(["GET http://host:9/api/health"]);
  });
});
