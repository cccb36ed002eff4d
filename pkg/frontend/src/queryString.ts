/**
 * Serialize a form state into the /api/repos query grammar.
 *
 * Unset fields are omitted, so an untouched form produces an empty
 * string. Parameter order is fixed (text, counts, instants, flags,
 * then view state) to keep built strings stable and comparable.
 */

import {
  COUNT_PREFIXES,
  FLAG_FIELDS,
  FormState,
  INSTANT_PREFIXES,
  TEXT_FIELDS,
} from "./filters";

export function buildSearchQuery(form: FormState): string {
  const params = new URLSearchParams();
  for (const field of TEXT_FIELDS) {
    const value = form[field];
    if (value !== undefined && value !== "") params.set(field, value);
  }
  for (const prefix of COUNT_PREFIXES) {
    for (const suffix of ["Min", "Max"] as const) {
      const value = form[`${prefix}${suffix}`];
      if (value !== undefined) params.set(`${prefix}${suffix}`, String(value));
    }
  }
  for (const prefix of INSTANT_PREFIXES) {
    for (const suffix of ["Min", "Max"] as const) {
      const value = form[`${prefix}${suffix}`];
      if (value !== undefined && value !== "") params.set(`${prefix}${suffix}`, value);
    }
  }
  for (const field of FLAG_FIELDS) {
    if (form[field] === true) params.set(field, "true");
  }
  if (form.sort !== undefined) params.set("sort", form.sort);
  if (form.order !== undefined) params.set("order", form.order);
  if (form.page !== undefined) params.set("page", String(form.page));
  if (form.size !== undefined) params.set("size", String(form.size));
  return params.toString();
}

/** Query string for /api/repos/export: the search params plus a format. */
export function buildExportQuery(searchQuery: string, format: "csv" | "json"): string {
  const params = new URLSearchParams(searchQuery);
  params.set("format", format);
  return params.toString();
}
