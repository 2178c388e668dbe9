// Thin typed client for the retrieval service. The UI performs no ranking
// or similarity math of its own; it renders server results verbatim.
import type {
  EncTag,
  HealthResponse,
  QueryResponse,
  RepTag,
  VignetteListResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function getJson<T>(url: string): Promise<T> {
  const resp = await fetch(url);
  if (!resp.ok) {
    throw new ApiError(resp.status, await safeDetail(resp));
  }
  return (await resp.json()) as T;
}

async function safeDetail(resp: Response): Promise<string> {
  try {
    const body = await resp.json();
    return typeof body?.detail === "string" ? body.detail : resp.statusText;
  } catch {
    return resp.statusText;
  }
}

export class ApiClient {
  constructor(private base: string = "") {}

  health(): Promise<HealthResponse> {
    return getJson(`${this.base}/api/health`);
  }

  listVignettes(opts: { classLabel?: number; limit?: number; offset?: number } = {}):
      Promise<VignetteListResponse> {
    const params = new URLSearchParams();
    if (opts.classLabel !== undefined) params.set("class", String(opts.classLabel));
    if (opts.limit !== undefined) params.set("limit", String(opts.limit));
    if (opts.offset !== undefined) params.set("offset", String(opts.offset));
    const qs = params.toString();
    return getJson(`${this.base}/api/vignettes${qs ? "?" + qs : ""}`);
  }

  thumbnailUrl(id: string, rep: RepTag): string {
    return `${this.base}/api/vignettes/${encodeURIComponent(id)}/thumbnail?rep=${rep}`;
  }

  async queryById(id: string, k: number, rep: RepTag, enc: EncTag): Promise<QueryResponse> {
    const resp = await fetch(`${this.base}/api/query`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ id, k, rep, enc }),
    });
    if (!resp.ok) {
      throw new ApiError(resp.status, await safeDetail(resp));
    }
    return (await resp.json()) as QueryResponse;
  }
}
