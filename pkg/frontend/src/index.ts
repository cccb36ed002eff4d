export { ApiClient, ApiError } from "./apiClient";
export type { FetchLike, SearchResponse } from "./apiClient";
export { Console } from "./console";
export type { ConsoleHooks, SubmitOutcome } from "./console";
export {
  COUNT_PREFIXES,
  FLAG_FIELDS,
  INSTANT_PREFIXES,
  MAX_PAGE_SIZE,
  SORTABLE_COLUMNS,
  TEXT_FIELDS,
  hasErrors,
  parseInstant,
  validateForm,
} from "./filters";
export type { FieldErrors, FormState } from "./filters";
export { renderFilterForm } from "./filterForm";
export { buildExportQuery, buildSearchQuery } from "./queryString";
export { ABSENT, RESULT_COLUMNS, pageCount, renderResultsTable } from "./resultsTable";
export { formToLocationSearch, locationSearchToForm, parseForm } from "./urlState";
