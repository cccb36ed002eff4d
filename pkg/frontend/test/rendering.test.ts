import { describe, expect, it } from "vitest";

import { SearchResponse } from "../src/apiClient";
import { renderFilterForm } from "../src/filterForm";
import { ABSENT, pageCount, RESULT_COLUMNS, renderResultsTable } from "../src/resultsTable";

function response(overrides: Partial<SearchResponse> = {}): SearchResponse {
  return {
    total: 1,
    page: 1,
    size: 50,
    sort: "stars",
    order: "desc",
    filter: {},
    items: [{ name: "octo/widgets", main_language: "Java", stars: 42 }],
    ...overrides,
  };
}

describe("renderResultsTable", () => {
  it("shows the empty state when nothing matches", () => {
    const html = renderResultsTable(response({ total: 0, items: [] }));
    expect(html).toContain("No repositories match the current filters.");
    expect(html).not.toContain("<table");
  });

  it("summarizes total and page count from the page size", () => {
    const html = renderResultsTable(response({ total: 250, size: 100, items: [] }));
    expect(html).toContain("250 repositories, page 1 of 3");
  });

  it("renders absent metrics as a dash, never as zero", () => {
    const html = renderResultsTable(
      response({
        items: [{ name: "octo/bare", main_language: null, stars: 0, commits: null }],
      }),
    );
    expect(html).toContain(`<td>0</td>`);
    expect(html).toContain(`<td>${ABSENT}</td>`);
  });

  it("marks every header sortable and the active column with its direction", () => {
    const html = renderResultsTable(response({ sort: "commits", order: "asc" }));
    for (const column of RESULT_COLUMNS) {
      expect(html).toContain(`data-sort="${column.key}"`);
    }
    expect(html).toContain(`<th data-sort="commits" data-order="asc">`);
    expect(html).not.toContain(`data-sort="stars" data-order`);
  });

  it("escapes repository-supplied text", () => {
    const html = renderResultsTable(
      response({ items: [{ name: `evil/<script>"x"` }] }),
    );
    expect(html).toContain("evil/&lt;script&gt;&quot;x&quot;");
    expect(html).not.toContain("<script>");
  });

  it("never rounds a page count up from zero rows per page", () => {
    expect(pageCount(1, 50)).toBe(1);
    expect(pageCount(250, 100)).toBe(3);
    expect(pageCount(500, 100)).toBe(5);
  });
});

describe("renderFilterForm", () => {
  it("keeps the issue-label input visible but disabled with an explanation", () => {
    const html = renderFilterForm({});
    expect(html).toContain(`name="issueLabel"`);
    expect(html).toMatch(/name="issueLabel"[^>]*disabled/);
    expect(html).toContain(`title="backend crawling not finalized"`);
  });

  it("round-trips entered values into the inputs", () => {
    const html = renderFilterForm({ language: "C++", starsMin: 10, excludeForks: true });
    expect(html).toContain(`name="language" type="text" value="C++"`);
    expect(html).toContain(`name="starsMin" type="number" value="10"`);
    expect(html).toMatch(/name="excludeForks"[^>]*checked/);
    expect(html).not.toMatch(/name="excludeArchived"[^>]*checked/);
  });

  it("places inline errors next to the fields they concern", () => {
    const html = renderFilterForm(
      { starsMin: 100, starsMax: 5 },
      { stars: "minimum exceeds maximum" },
    );
    expect(html).toContain(`<span class="field-error" data-for="stars">minimum exceeds maximum</span>`);
  });

  it("renders a range fieldset per count and instant axis", () => {
    const html = renderFilterForm({});
    for (const prefix of ["commits", "stars", "forks", "created", "lastCommit"]) {
      expect(html).toContain(`data-range="${prefix}"`);
    }
  });
});
