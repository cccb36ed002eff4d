/**
 * Thin client for the documented read endpoints. Everything the
 * console fetches goes through here, so tests can substitute the
 * fetch implementation and the rest of the code never sees a URL.
 */

export interface SearchResponse {
  total: number;
  page: number;
  size: number;
  sort: string;
  order: string;
  filter: Record<string, unknown>;
  items: Array<Record<string, unknown>>;
}

export interface ErrorResponse {
  errors: Record<string, string>;
}

export type FetchLike = (
  url: string,
  init?: { signal?: AbortSignal },
) => Promise<{ ok: boolean; status: number; json(): Promise<unknown> }>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly errors: Record<string, string>,
  ) {
    super(`request failed with ${status}`);
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  searchUrl(query: string): string {
    return query ? `${this.baseUrl}/api/repos?${query}` : `${this.baseUrl}/api/repos`;
  }

  exportUrl(query: string): string {
    return `${this.baseUrl}/api/repos/export?${query}`;
  }

  async search(query: string, signal?: AbortSignal): Promise<SearchResponse> {
    const response = await this.fetchImpl(this.searchUrl(query), { signal });
    const body = (await response.json()) as SearchResponse & Partial<ErrorResponse>;
    if (!response.ok) {
      throw new ApiError(response.status, body.errors ?? {});
    }
    return body;
  }
}
