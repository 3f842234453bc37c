// Thin typed client over the access API. Everything the UI shows comes
// through here; the role header is a stand-in for real authentication.

import type {
  CalendarDayData,
  DocumentData,
  EventData,
  LookupHit,
  Snapshot,
  StrokeData,
  ThumbnailPagesData,
} from "./types.js";

export type Role = "PUPIL" | "TEACHER";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    readonly baseUrl: string = "",
    readonly role: Role = "PUPIL",
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async get<T>(path: string, params?: Record<string, string | number>): Promise<T> {
    const pairs = Object.entries(params ?? {}).map(([k, v]) => [k, String(v)] as [string, string]);
    const query = pairs.length ? "?" + new URLSearchParams(pairs).toString() : "";
    const response = await this.fetchFn(this.baseUrl + path + query, {
      headers: { "X-Role": this.role },
    });
    if (!response.ok) {
      throw new ApiError(response.status, `${path} -> ${response.status}`);
    }
    return (await response.json()) as T;
  }

  calendar(from: string, to: string): Promise<{ days: CalendarDayData[] }> {
    return this.get("/calendar", { from, to });
  }

  documents(sessionId: string): Promise<{ documents: DocumentData[] }> {
    return this.get(`/sessions/${sessionId}/documents`);
  }

  stateAt(sessionId: string, at: number): Promise<Snapshot> {
    return this.get(`/sessions/${sessionId}/state`, { at });
  }

  events(
    sessionId: string,
    window: { from?: number; to?: number; limit?: number; offset?: number },
  ): Promise<{ events: EventData[]; total: number; offset: number }> {
    const params: Record<string, number> = {};
    if (window.from !== undefined) params.from = window.from;
    if (window.to !== undefined) params.to = window.to;
    if (window.limit !== undefined) params.limit = window.limit;
    if (window.offset !== undefined) params.offset = window.offset;
    return this.get(`/sessions/${sessionId}/events`, params);
  }

  pageStrokes(notebookId: string, page: number): Promise<{ strokes: StrokeData[] }> {
    return this.get(`/notebooks/${notebookId}/pages/${page}/strokes`);
  }

  pageSegments(notebookId: string, page: number): Promise<ThumbnailPagesData> {
    return this.get(`/notebooks/${notebookId}/pages/${page}/segments`);
  }

  lookup(
    notebookId: string,
    page: number,
    x: number,
    y: number,
    radius: number,
  ): Promise<{ hit: LookupHit | null }> {
    return this.get(`/notebooks/${notebookId}/pages/${page}/lookup`, { x, y, radius });
  }
}
