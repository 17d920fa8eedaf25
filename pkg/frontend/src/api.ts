import type {
  CultureResponse,
  DimensionDetail,
  DimensionsResponse,
  GroupsResponse,
  Health,
  IngredientsResponse,
  JobStarted,
  JobStatus,
  OverrideAction,
  OverridesResponse,
  Projection3d,
} from "./types.js";

/** Minimal slice of fetch the client needs; tests inject a stub. */
export interface FetchLike {
  (url: string, init?: {
    method?: string;
    headers?: Record<string, string>;
    body?: string;
  }): Promise<ResponseLike>;
}

export interface ResponseLike {
  status: number;
  json(): Promise<unknown>;
  headers: { get(name: string): string | null };
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
    readonly path: string,
  ) {
    super(`${status} on ${path}: ${detail}`);
    this.name = "ApiError";
  }
}

const MANIFEST_HEADER = "x-workspace-manifest";

/** Thin typed wrapper over the service API.
 *
 * Every response's workspace-manifest header is remembered so the UI can
 * tell when another writer changed the workspace under it.
 */
export class ApiClient {
  private manifest: string | null = null;

  constructor(
    private readonly fetchFn: FetchLike,
    private readonly base: string = "",
  ) {}

  /** Manifest hash from the most recent response, if any. */
  lastManifest(): string | null {
    return this.manifest;
  }

  private async request<T>(path: string, init?: {
    method?: string;
    body?: unknown;
  }): Promise<T> {
    let resp: ResponseLike;
    try {
      resp = await this.fetchFn(this.base + path, {
        method: init?.method ?? "GET",
        headers: init?.body === undefined
          ? undefined
          : { "Content-Type": "application/json" },
        body: init?.body === undefined ? undefined : JSON.stringify(init.body),
      });
    } catch (err) {
      throw new ApiError(0, err instanceof Error ? err.message : String(err), path);
    }
    const manifest = resp.headers.get(MANIFEST_HEADER);
    if (manifest !== null) this.manifest = manifest;
    if (resp.status >= 400) {
      let detail = `HTTP ${resp.status}`;
      try {
        const body = (await resp.json()) as { detail?: unknown };
        if (typeof body.detail === "string") detail = body.detail;
      } catch {
        // non-JSON error body; keep the generic detail
      }
      throw new ApiError(resp.status, detail, path);
    }
    return (await resp.json()) as T;
  }

  health(): Promise<Health> {
    return this.request("/api/health");
  }

  groups(): Promise<GroupsResponse> {
    return this.request("/api/groups");
  }

  ingredients(): Promise<IngredientsResponse> {
    return this.request("/api/ingredients");
  }

  dimensions(): Promise<DimensionsResponse> {
    return this.request("/api/dimensions");
  }

  dimension(name: string): Promise<DimensionDetail> {
    return this.request(`/api/dimensions/${encodeURIComponent(name)}`);
  }

  culture(): Promise<CultureResponse> {
    return this.request("/api/culture");
  }

  projection3d(): Promise<Projection3d> {
    return this.request("/api/projection3d");
  }

  submitOverrides(actions: OverrideAction[]): Promise<OverridesResponse> {
    return this.request("/api/overrides", { method: "POST", body: { actions } });
  }

  startRecompute(): Promise<JobStarted> {
    return this.request("/api/recompute", { method: "POST" });
  }

  job(jobId: string): Promise<JobStatus> {
    return this.request(`/api/jobs/${encodeURIComponent(jobId)}`);
  }
}
