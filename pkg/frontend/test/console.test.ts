import { describe, expect, it } from "vitest";

import { FetchLike, SearchResponse } from "../src/apiClient";
import { Console } from "../src/console";
import { loadStates } from "./fixture";

const BASE = "http://console.test:9000";

function okBody(overrides: Partial<SearchResponse> = {}): SearchResponse {
  return {
    total: 0,
    page: 1,
    size: 50,
    sort: "stars",
    order: "desc",
    filter: {},
    items: [],
    ...overrides,
  };
}

/** A fetch stub that answers immediately and records every URL. */
function respondingFetch(body: (url: string) => SearchResponse) {
  const urls: string[] = [];
  const impl: FetchLike = async (url) => {
    urls.push(url);
    return { ok: true, status: 200, json: async () => body(url) };
  };
  return { impl, urls };
}

interface PendingCall {
  url: string;
  signal?: AbortSignal;
  resolve: (body: SearchResponse) => void;
}

/** A fetch stub whose responses are released by hand, so request
 * ordering can be controlled. Aborting rejects with an AbortError
 * unless ignoreAbort is set, which models a response that is already
 * on the wire when a newer search goes out. */
function manualFetch(options: { ignoreAbort?: boolean } = {}) {
  const calls: PendingCall[] = [];
  const impl: FetchLike = (url, init) =>
    new Promise((resolve, reject) => {
      if (!options.ignoreAbort) {
        init?.signal?.addEventListener("abort", () => {
          const error = new Error("aborted");
          error.name = "AbortError";
          reject(error);
        });
      }
      calls.push({
        url,
        signal: init?.signal,
        resolve: (body) => resolve({ ok: true, status: 200, json: async () => body }),
      });
    });
  return { impl, calls };
}

function queryParams(url: string): Array<[string, string]> {
  return [...new URLSearchParams(new URL(url).search).entries()];
}

describe("Console.submit", () => {
  it("renders the worked example's response", async () => {
    const workedExample = loadStates().find((state) => state.name === "worked_example")!;
    const { impl, urls } = respondingFetch(() =>
      okBody({
        total: 2,
        items: [
          { name: "apache/kafka", main_language: "Java", stars: 27000, commits: 11000 },
          { name: "apache/flink", main_language: "Java", stars: 22000, commits: 33000 },
        ],
      }),
    );
    const renders: string[] = [];
    const console_ = new Console(BASE, { renderResults: (html) => renders.push(html) }, impl);

    const outcome = await console_.submit(workedExample.form);

    expect(outcome.kind).toBe("results");
    expect(urls).toEqual([`${BASE}/api/repos?${workedExample.query}`]);
    expect(renders).toHaveLength(1);
    expect(renders[0]).toContain("2 repositories, page 1 of 1");
    expect(renders[0]).toContain("apache/kafka");
    expect(renders[0]).toContain("apache/flink");
  });

  it("requests the bare listing for an untouched form", async () => {
    const { impl, urls } = respondingFetch(() => okBody());
    const console_ = new Console(BASE, {}, impl);
    await console_.submit({});
    expect(urls).toEqual([`${BASE}/api/repos`]);
  });

  it("makes no request and renders inline errors for an invalid form", async () => {
    const { impl, urls } = respondingFetch(() => okBody());
    const forms: string[] = [];
    const console_ = new Console(BASE, { renderForm: (html) => forms.push(html) }, impl);

    const outcome = await console_.submit({ starsMin: 100, starsMax: 5 });

    expect(outcome).toEqual({ kind: "invalid", errors: { stars: "minimum exceeds maximum" } });
    expect(urls).toEqual([]);
    expect(forms).toHaveLength(1);
    expect(forms[0]).toContain(`data-for="stars"`);
    expect(forms[0]).toContain("minimum exceeds maximum");
  });

  it("mirrors submitted criteria into the page URL", async () => {
    const { impl } = respondingFetch(() => okBody());
    const locations: string[] = [];
    const console_ = new Console(BASE, { updateLocation: (search) => locations.push(search) }, impl);

    await console_.submit({ language: "C++", starsMin: 10 });
    await console_.submit({});
    await console_.submit({ starsMin: 9, starsMax: 1 });

    expect(locations).toEqual(["?language=C%2B%2B&starsMin=10", ""]);
  });

  it("surfaces server-side rejections with their field messages", async () => {
    const impl: FetchLike = async () => ({
      ok: false,
      status: 400,
      json: async () => ({ errors: { createdMin: "unparseable instant" } }),
    });
    const console_ = new Console(BASE, {}, impl);
    const outcome = await console_.submit({ language: "Java" });
    expect(outcome).toEqual({
      kind: "failed",
      status: 400,
      errors: { createdMin: "unparseable instant" },
    });
  });
});

describe("latest wins", () => {
  it("aborts the in-flight search when a newer one is submitted", async () => {
    const { impl, calls } = manualFetch();
    const renders: string[] = [];
    const console_ = new Console(BASE, { renderResults: (html) => renders.push(html) }, impl);

    const first = console_.submit({ language: "Java" });
    const second = console_.submit({ language: "Go" });
    expect(calls[0]!.signal?.aborted).toBe(true);

    calls[1]!.resolve(okBody({ total: 7, items: [{ name: "go/away" }] }));
    expect((await second).kind).toBe("results");
    expect((await first).kind).toBe("superseded");
    expect(renders).toHaveLength(1);
    expect(renders[0]).toContain("go/away");
  });

  it("discards a stale response even when it arrives after the newer one", async () => {
    const { impl, calls } = manualFetch({ ignoreAbort: true });
    const renders: string[] = [];
    const console_ = new Console(BASE, { renderResults: (html) => renders.push(html) }, impl);

    const stale = console_.submit({ language: "Java" });
    const fresh = console_.submit({ language: "Go" });
    calls[1]!.resolve(okBody({ total: 1, items: [{ name: "fresh/result" }] }));
    expect((await fresh).kind).toBe("results");

    calls[0]!.resolve(okBody({ total: 99, items: [{ name: "stale/result" }] }));
    expect((await stale).kind).toBe("superseded");
    expect(renders).toHaveLength(1);
    expect(renders[0]).toContain("fresh/result");
    expect(renders[0]).not.toContain("stale/result");
  });
});

describe("sortBy", () => {
  it("re-submits the last search with the column, toggling direction", async () => {
    const { impl, urls } = respondingFetch(() => okBody());
    const console_ = new Console(BASE, {}, impl);

    await console_.submit({ language: "Java" });
    await console_.sortBy("stars");
    await console_.sortBy("stars");
    await console_.sortBy("stars");
    await console_.sortBy("commits");

    expect(urls.map(queryParams)).toEqual([
      [["language", "Java"]],
      [["language", "Java"], ["sort", "stars"], ["order", "desc"]],
      [["language", "Java"], ["sort", "stars"], ["order", "asc"]],
      [["language", "Java"], ["sort", "stars"], ["order", "desc"]],
      [["language", "Java"], ["sort", "commits"], ["order", "desc"]],
    ]);
  });
});

describe("export", () => {
  it("has no export target before any search was submitted", () => {
    const { impl } = respondingFetch(() => okBody());
    const downloads: string[] = [];
    const console_ = new Console(BASE, { download: (url) => downloads.push(url) }, impl);
    expect(console_.exportUrl("csv")).toBeNull();
    expect(console_.triggerExport("csv")).toBe(false);
    expect(downloads).toEqual([]);
  });

  for (const state of loadStates()) {
    it(`uses parameters identical to the ${state.name} search`, async () => {
      const { impl, urls } = respondingFetch(() => okBody());
      const console_ = new Console(BASE, {}, impl);
      await console_.submit(state.form);

      const requested = queryParams(urls[0]!);
      for (const format of ["csv", "json"] as const) {
        const url = console_.exportUrl(format)!;
        expect(url.startsWith(`${BASE}/api/repos/export?`)).toBe(true);
        const params = new URLSearchParams(new URL(url).search);
        expect(params.get("format")).toBe(format);
        params.delete("format");
        expect([...params.entries()]).toEqual(requested);
      }
    });
  }

  it("exports the last-submitted search, not an unsubmitted draft", async () => {
    const { impl, urls } = respondingFetch(() => okBody());
    const console_ = new Console(BASE, {}, impl);
    await console_.submit({ language: "Java", starsMin: 10 });

    const draftOutcome = await console_.submit({ language: "Go", starsMin: 9, starsMax: 1 });
    expect(draftOutcome.kind).toBe("invalid");
    expect(urls).toHaveLength(1);

    const params = new URLSearchParams(new URL(console_.exportUrl("csv")!).search);
    params.delete("format");
    expect(params.toString()).toBe("language=Java&starsMin=10");
    expect(console_.lastSubmittedQuery).toBe("language=Java&starsMin=10");
  });

  it("hands the download hook the export URL", async () => {
    const { impl } = respondingFetch(() => okBody());
    const downloads: string[] = [];
    const console_ = new Console(BASE, { download: (url) => downloads.push(url) }, impl);
    await console_.submit({ language: "Java" });
    expect(console_.triggerExport("json")).toBe(true);
    expect(downloads).toEqual([`${BASE}/api/repos/export?language=Java&format=json`]);
  });

  it("is reachable under any configured API base", async () => {
    const { impl } = respondingFetch(() => okBody());
    const other = new Console("https://forge.internal/harvest", {}, impl);
    await other.submit({});
    expect(other.exportUrl("csv")).toBe("https://forge.internal/harvest/api/repos/export?format=csv");
  });
});
