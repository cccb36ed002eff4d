/**
 * Render a search response as an HTML results table.
 *
 * Pure string rendering: no DOM dependency, so the exact markup is
 * unit-testable. Header cells carry data-sort attributes the page
 * script wires to re-sorting; absent metric values render as an em
 * dash rather than zero, because zero is a measured value.
 */

import { SearchResponse } from "./apiClient";

export const ABSENT = "—";

export const RESULT_COLUMNS: ReadonlyArray<{ key: string; label: string }> = [
  { key: "name", label: "Repository" },
  { key: "main_language", label: "Language" },
  { key: "stars", label: "Stars" },
  { key: "commits", label: "Commits" },
  { key: "contributors", label: "Contributors" },
  { key: "total_issues", label: "Issues" },
  { key: "total_pull_requests", label: "Pull requests" },
  { key: "last_commits", label: "Last commit" },
  { key: "license", label: "License" },
  { key: "forks", label: "Forks" },
];

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function cell(value: unknown): string {
  if (value === null || value === undefined || value === "") return ABSENT;
  if (typeof value === "boolean") return value ? "yes" : "no";
  return escapeHtml(String(value));
}

export function pageCount(total: number, size: number): number {
  return Math.max(1, Math.ceil(total / size));
}

export function renderResultsTable(response: SearchResponse): string {
  if (response.total === 0) {
    return `<div class="results-empty">No repositories match the current filters.</div>`;
  }
  const pages = pageCount(response.total, response.size);
  const headers = RESULT_COLUMNS.map((column) => {
    const active = column.key === response.sort ? ` data-order="${response.order}"` : "";
    return `<th data-sort="${column.key}"${active}>${escapeHtml(column.label)}</th>`;
  }).join("");
  const rows = response.items
    .map((item) => {
      const cells = RESULT_COLUMNS.map((column) => `<td>${cell(item[column.key])}</td>`).join("");
      return `<tr>${cells}</tr>`;
    })
    .join("");
  return [
    `<div class="results-summary">${response.total} repositories, page ${response.page} of ${pages}</div>`,
    `<table class="results"><thead><tr>${headers}</tr></thead><tbody>${rows}</tbody></table>`,
  ].join("\n");
}
