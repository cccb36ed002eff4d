import { describe, expect, it } from "vitest";

import { hasErrors, parseInstant, validateForm } from "../src/filters";
import { loadStates } from "./fixture";

describe("validateForm", () => {
  it("accepts every scripted state", () => {
    for (const state of loadStates()) {
      expect(validateForm(state.form), state.name).toEqual({});
    }
  });

  it("reports an inverted count range under the bare prefix", () => {
    const errors = validateForm({ starsMin: 100, starsMax: 5 });
    expect(errors.stars).toBe("minimum exceeds maximum");
    expect(hasErrors(errors)).toBe(true);
  });

  it("rejects negative and fractional counts per field", () => {
    const errors = validateForm({ commitsMin: -1, forksMax: 2.5 });
    expect(errors.commitsMin).toBe("must be a whole number of at least 0");
    expect(errors.forksMax).toBe("must be a whole number of at least 0");
    expect(errors.commits).toBeUndefined();
  });

  it("allows an equal count range", () => {
    expect(validateForm({ releasesMin: 0, releasesMax: 0 })).toEqual({});
    expect(validateForm({ releasesMin: 3, releasesMax: 3 })).toEqual({});
  });

  it("rejects malformed instants with a format hint", () => {
    const errors = validateForm({ createdMin: "yesterday", lastCommitMax: "2023-13-45" });
    expect(errors.createdMin).toBe("expected YYYY-MM-DD or YYYY-MM-DDTHH:MM:SSZ");
    expect(errors.lastCommitMax).toBe("expected YYYY-MM-DD or YYYY-MM-DDTHH:MM:SSZ");
  });

  it("reports an inverted instant range under the bare prefix", () => {
    const errors = validateForm({ createdMin: "2021-01-01", createdMax: "2019-12-31" });
    expect(errors.created).toBe("minimum exceeds maximum");
  });

  it("compares date-only and full-instant bounds on the same axis", () => {
    const errors = validateForm({
      lastCommitMin: "2020-01-01T00:00:01Z",
      lastCommitMax: "2020-01-01",
    });
    expect(errors.lastCommit).toBe("minimum exceeds maximum");
    expect(
      validateForm({ lastCommitMin: "2020-01-01", lastCommitMax: "2020-01-01T00:00:01Z" }),
    ).toEqual({});
  });

  it("validates the view parameters", () => {
    expect(validateForm({ page: 0 }).page).toBe("expected a positive integer");
    expect(validateForm({ size: 0 }).size).toBe("expected an integer between 1 and 500");
    expect(validateForm({ size: 501 }).size).toBe("expected an integer between 1 and 500");
    expect(validateForm({ size: 500 })).toEqual({});
    expect(validateForm({ sort: "velocity" }).sort).toBe("not a sortable column");
    expect(validateForm({ order: "sideways" as never }).order).toBe("expected asc or desc");
  });
});

describe("parseInstant", () => {
  it("treats a bare date as midnight UTC", () => {
    expect(parseInstant("2020-06-01")).toBe(Date.parse("2020-06-01T00:00:00Z"));
  });

  it("accepts full instants with or without the zone suffix", () => {
    expect(parseInstant("2020-06-01T12:30:00Z")).toBe(parseInstant("2020-06-01T12:30:00"));
  });

  it("is NaN for anything else", () => {
    expect(parseInstant("June 1st")).toBeNaN();
    expect(parseInstant("2020/06/01")).toBeNaN();
    expect(parseInstant("")).toBeNaN();
  });
});
