import type {
  ApiErrorBody,
  ComparePayload,
  HealthPayload,
  MatchupQuery,
  MatchupPayload,
  OptimizeQuery,
  OptimizePayload,
  RatingsPayload,
} from "./types.js";

/** Non-2xx response, with the server's JSON error body when it sent one. */
export class ApiError extends Error {
  status: number;
  body: ApiErrorBody | null;

  constructor(status: number, body: ApiErrorBody | null) {
    super(body ? `${body.error}: ${body.detail}` : `HTTP ${status}`);
    this.status = status;
    this.body = body;
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(url, init);
  if (!resp.ok) {
    let body: ApiErrorBody | null = null;
    try {
      body = (await resp.json()) as ApiErrorBody;
    } catch {
      body = null;
    }
    throw new ApiError(resp.status, body);
  }
  return (await resp.json()) as T;
}

function post(payload: unknown): RequestInit {
  return {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(payload),
  };
}

/** Thin client for the model-serving API; all inference stays server-side. */
export class Client {
  constructor(readonly baseUrl: string) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  health(): Promise<HealthPayload> {
    return request(this.url("/healthz"));
  }

  ratings(model: string): Promise<RatingsPayload> {
    return request(this.url(`/models/${encodeURIComponent(model)}/ratings`));
  }

  compare(model: string, ids: string[]): Promise<ComparePayload> {
    const query = encodeURIComponent(ids.join(","));
    return request(
      this.url(`/models/${encodeURIComponent(model)}/compare?ids=${query}`),
    );
  }

  matchup(model: string, query: MatchupQuery): Promise<MatchupPayload> {
    return request(
      this.url(`/models/${encodeURIComponent(model)}/matchup`),
      post(query),
    );
  }

  optimize(model: string, query: OptimizeQuery): Promise<OptimizePayload> {
    return request(
      this.url(`/models/${encodeURIComponent(model)}/optimize`),
      post(query),
    );
  }
}
