/**
 * Mirror the filter form into the page URL and back, so a set of
 * sampling criteria is shareable as a plain link.
 *
 * The page URL carries exactly the search query string, which keeps
 * one grammar for the API, the form, and the address bar.
 */

import {
  COUNT_PREFIXES,
  FLAG_FIELDS,
  FormState,
  INSTANT_PREFIXES,
  MAX_PAGE_SIZE,
  SORTABLE_COLUMNS,
  TEXT_FIELDS,
} from "./filters";
import { buildSearchQuery } from "./queryString";

/** Parse a query string back into a form state, dropping anything malformed. */
export function parseForm(query: string): FormState {
  const params = new URLSearchParams(query);
  const form: FormState = {};
  for (const field of TEXT_FIELDS) {
    const value = params.get(field);
    if (value) form[field] = value;
  }
  for (const prefix of COUNT_PREFIXES) {
    for (const suffix of ["Min", "Max"] as const) {
      const raw = params.get(`${prefix}${suffix}`);
      if (raw === null || raw === "") continue;
      const value = Number(raw);
      if (Number.isInteger(value) && value >= 0) form[`${prefix}${suffix}`] = value;
    }
  }
  for (const prefix of INSTANT_PREFIXES) {
    for (const suffix of ["Min", "Max"] as const) {
      const value = params.get(`${prefix}${suffix}`);
      if (value) form[`${prefix}${suffix}`] = value;
    }
  }
  for (const field of FLAG_FIELDS) {
    if (params.get(field) === "true") form[field] = true;
  }
  const sort = params.get("sort");
  if (sort && (SORTABLE_COLUMNS as readonly string[]).includes(sort)) form.sort = sort;
  const order = params.get("order");
  if (order === "asc" || order === "desc") form.order = order;
  const page = Number(params.get("page"));
  if (Number.isInteger(page) && page >= 1) form.page = page;
  const size = Number(params.get("size"));
  if (Number.isInteger(size) && size >= 1 && size <= MAX_PAGE_SIZE) form.size = size;
  return form;
}

/** The address-bar representation of a form state ("?..." or ""). */
export function formToLocationSearch(form: FormState): string {
  const query = buildSearchQuery(form);
  return query ? `?${query}` : "";
}

export function locationSearchToForm(search: string): FormState {
  return parseForm(search.startsWith("?") ? search.slice(1) : search);
}
