// Client for the retrieval service. The UI ships raw strokes only; parts,
// features and ranking all happen server-side.

import type { SessionState, Stroke } from "./session.js";

export interface QueryPayload {
  strokes: Stroke[];
  zones?: Stroke[];
  mode?: "full" | "incomplete";
  bbox?: [number, number, number, number];
  k?: number;
}

export interface RankedModel {
  model_id: string;
  best_view_id: number;
  distance: number;
}

export interface EchoedPart {
  id: number;
  strokes: Stroke[];
}

export interface QueryResponse {
  mode: string;
  parts: EchoedPart[];
  results: RankedModel[];
}

export interface ViewDocument {
  model_id: string;
  view_id: number;
  canvas: number;
  parts: EchoedPart[];
  all_view_ids: number[];
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export function buildQueryPayload(
  state: SessionState,
  incomplete: boolean,
  k = 12,
): QueryPayload {
  const payload: QueryPayload = { strokes: state.sketch, k };
  if (state.zones.length > 0) payload.zones = state.zones;
  if (incomplete) {
    payload.mode = "incomplete";
    if (state.bbox) payload.bbox = state.bbox;
  }
  return payload;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function errorOf(res: Response): Promise<ApiError> {
  let detail = res.statusText;
  try {
    const body = await res.json();
    if (body && typeof body.error === "string") detail = body.error;
  } catch {
    /* non-JSON error body: keep the status text */
  }
  return new ApiError(res.status, detail);
}

export class QueryClient {
  private seq = 0;

  constructor(
    private base = "",
    private fetchFn: FetchLike = (u, i) => fetch(u, i),
  ) {}

  /**
   * Submit a query; at most one submission "wins" at a time. If another
   * submission started while this one was in flight, its response is
   * discarded and null is returned (latest wins).
   */
  async submit(payload: QueryPayload): Promise<QueryResponse | null> {
    const ticket = ++this.seq;
    const res = await this.fetchFn(`${this.base}/api/query`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
    if (ticket !== this.seq) return null; // superseded while in flight
    if (!res.ok) throw await errorOf(res);
    const body = (await res.json()) as QueryResponse;
    if (ticket !== this.seq) return null;
    return body;
  }

  async modelView(modelId: string, viewId: number): Promise<ViewDocument> {
    const res = await this.fetchFn(
      `${this.base}/api/models/${encodeURIComponent(modelId)}/views/${viewId}`,
    );
    if (!res.ok) throw await errorOf(res);
    return (await res.json()) as ViewDocument;
  }

  async health(): Promise<{ status: string; records: number; scheme: string }> {
    const res = await this.fetchFn(`${this.base}/api/health`);
    if (!res.ok) throw await errorOf(res);
    return await res.json();
  }
}
