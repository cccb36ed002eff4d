/**
 * The console controller: validates form submissions, issues search
 * requests, renders outcomes, and hands the export buttons the exact
 * parameters of the last search that was actually submitted.
 *
 * Only one search is ever live: submitting again aborts the in-flight
 * request and a response from a superseded request is discarded even
 * if it arrives after the newer one (latest wins).
 */

import { ApiClient, ApiError, FetchLike, SearchResponse } from "./apiClient";
import { FieldErrors, FormState, hasErrors, validateForm } from "./filters";
import { renderFilterForm } from "./filterForm";
import { buildExportQuery, buildSearchQuery } from "./queryString";
import { renderResultsTable } from "./resultsTable";
import { formToLocationSearch } from "./urlState";

export type SubmitOutcome =
  | { kind: "results"; response: SearchResponse; query: string }
  | { kind: "invalid"; errors: FieldErrors }
  | { kind: "superseded" }
  | { kind: "failed"; status: number; errors: Record<string, string> };

export interface ConsoleHooks {
  /** Receives rendered HTML for the results region. */
  renderResults?: (html: string) => void;
  /** Receives rendered HTML for the form region (used for inline errors). */
  renderForm?: (html: string) => void;
  /** Receives the address-bar search string to mirror criteria into the URL. */
  updateLocation?: (search: string) => void;
  /** Receives the URL a triggered export should download. */
  download?: (url: string) => void;
}

function isAbort(error: unknown): boolean {
  return error instanceof Error && error.name === "AbortError";
}

export class Console {
  private readonly api: ApiClient;
  private lastSubmitted: { form: FormState; query: string } | null = null;
  private inflight: AbortController | null = null;
  private sequence = 0;

  constructor(
    baseUrl: string,
    private readonly hooks: ConsoleHooks = {},
    fetchImpl: FetchLike = fetch,
  ) {
    this.api = new ApiClient(baseUrl, fetchImpl);
  }

  /** The query string of the last search that went out, or null. */
  get lastSubmittedQuery(): string | null {
    return this.lastSubmitted?.query ?? null;
  }

  async submit(form: FormState): Promise<SubmitOutcome> {
    const errors = validateForm(form);
    if (hasErrors(errors)) {
      this.hooks.renderForm?.(renderFilterForm(form, errors));
      return { kind: "invalid", errors };
    }
    const query = buildSearchQuery(form);
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    const ticket = ++this.sequence;
    this.lastSubmitted = { form: { ...form }, query };
    this.hooks.renderForm?.(renderFilterForm(form));
    this.hooks.updateLocation?.(formToLocationSearch(form));
    try {
      const response = await this.api.search(query, controller.signal);
      if (ticket !== this.sequence) return { kind: "superseded" };
      this.hooks.renderResults?.(renderResultsTable(response));
      return { kind: "results", response, query };
    } catch (error) {
      if (ticket !== this.sequence || isAbort(error)) return { kind: "superseded" };
      if (error instanceof ApiError) {
        return { kind: "failed", status: error.status, errors: error.errors };
      }
      throw error;
    }
  }

  /** Re-submit the last search sorted by a column, toggling direction
   * when the column is already the sort key. */
  async sortBy(column: string): Promise<SubmitOutcome> {
    const base = this.lastSubmitted?.form ?? {};
    const order: "asc" | "desc" =
      base.sort === column && base.order !== "asc" ? "asc" : "desc";
    return this.submit({ ...base, sort: column, order });
  }

  /** The export URL for the last-submitted search, never the draft. */
  exportUrl(format: "csv" | "json"): string | null {
    if (this.lastSubmitted === null) return null;
    return this.api.exportUrl(buildExportQuery(this.lastSubmitted.query, format));
  }

  triggerExport(format: "csv" | "json"): boolean {
    const url = this.exportUrl(format);
    if (url === null) return false;
    this.hooks.download?.(url);
    return true;
  }
}
