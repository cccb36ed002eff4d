/**
 * The filter form's state and local validation.
 *
 * Field names mirror the API's query parameter vocabulary one to one,
 * so a form state serializes to a query string without any renaming
 * and the server's echoed filter can be compared straight back.
 */

export const COUNT_PREFIXES = [
  "commits",
  "contributors",
  "issues",
  "pulls",
  "branches",
  "releases",
  "stars",
  "watchers",
  "forks",
] as const;

export const INSTANT_PREFIXES = ["created", "lastCommit"] as const;

export const FLAG_FIELDS = [
  "excludeForks",
  "onlyWithLicense",
  "onlyWithOpenIssues",
  "excludeArchived",
] as const;

export const TEXT_FIELDS = ["nameContains", "language", "license"] as const;

export type CountPrefix = (typeof COUNT_PREFIXES)[number];
export type InstantPrefix = (typeof INSTANT_PREFIXES)[number];
export type FlagField = (typeof FLAG_FIELDS)[number];
export type TextField = (typeof TEXT_FIELDS)[number];

export const SORTABLE_COLUMNS = [
  "name",
  "commits",
  "last_commits_sha",
  "last_commits",
  "license",
  "branches",
  "default_branch",
  "contributors",
  "releases",
  "watchers",
  "stars",
  "forks",
  "is_fork_project",
  "size",
  "created_at",
  "pushed_at",
  "updated_at",
  "homepage",
  "main_language",
  "total_issues",
  "open_issues",
  "total_pull_requests",
  "open_pull_requests",
  "has_wiki",
  "archived",
] as const;

export const MAX_PAGE_SIZE = 500;

export interface FormState {
  nameContains?: string;
  language?: string;
  license?: string;
  /** Shown for layout fidelity but inert; never serialized. */
  issueLabel?: string;
  commitsMin?: number;
  commitsMax?: number;
  contributorsMin?: number;
  contributorsMax?: number;
  issuesMin?: number;
  issuesMax?: number;
  pullsMin?: number;
  pullsMax?: number;
  branchesMin?: number;
  branchesMax?: number;
  releasesMin?: number;
  releasesMax?: number;
  starsMin?: number;
  starsMax?: number;
  watchersMin?: number;
  watchersMax?: number;
  forksMin?: number;
  forksMax?: number;
  createdMin?: string;
  createdMax?: string;
  lastCommitMin?: string;
  lastCommitMax?: string;
  excludeForks?: boolean;
  onlyWithLicense?: boolean;
  onlyWithOpenIssues?: boolean;
  excludeArchived?: boolean;
  sort?: string;
  order?: "asc" | "desc";
  page?: number;
  size?: number;
}

export type FieldErrors = Partial<Record<string, string>>;

const INSTANT_PATTERN = /^\d{4}-\d{2}-\d{2}(T\d{2}:\d{2}:\d{2}Z?)?$/;

/** Epoch millis of an instant field value, or NaN when malformed. */
export function parseInstant(text: string): number {
  if (!INSTANT_PATTERN.test(text)) return NaN;
  const normalized = text.length === 10 ? `${text}T00:00:00Z` : text.endsWith("Z") ? text : `${text}Z`;
  return Date.parse(normalized);
}

function checkCount(errors: FieldErrors, field: string, value: number | undefined): boolean {
  if (value === undefined) return false;
  if (!Number.isInteger(value) || value < 0) {
    errors[field] = "must be a whole number of at least 0";
    return false;
  }
  return true;
}

/**
 * Validate a form before any request is made. Returns one message per
 * offending field; an inverted range is reported under the bare prefix
 * the way the server reports it.
 */
export function validateForm(form: FormState): FieldErrors {
  const errors: FieldErrors = {};
  for (const prefix of COUNT_PREFIXES) {
    const lo = form[`${prefix}Min`];
    const hi = form[`${prefix}Max`];
    const loOk = checkCount(errors, `${prefix}Min`, lo);
    const hiOk = checkCount(errors, `${prefix}Max`, hi);
    if (loOk && hiOk && lo! > hi!) {
      errors[prefix] = "minimum exceeds maximum";
    }
  }
  for (const prefix of INSTANT_PREFIXES) {
    const bounds: number[] = [];
    for (const suffix of ["Min", "Max"] as const) {
      const raw = form[`${prefix}${suffix}`];
      if (raw === undefined || raw === "") {
        bounds.push(NaN);
        continue;
      }
      const millis = parseInstant(raw);
      if (Number.isNaN(millis)) {
        errors[`${prefix}${suffix}`] = "expected YYYY-MM-DD or YYYY-MM-DDTHH:MM:SSZ";
      }
      bounds.push(millis);
    }
    const [lo, hi] = bounds;
    if (!Number.isNaN(lo) && !Number.isNaN(hi) && lo! > hi!) {
      errors[prefix] = "minimum exceeds maximum";
    }
  }
  if (form.page !== undefined && (!Number.isInteger(form.page) || form.page < 1)) {
    errors.page = "expected a positive integer";
  }
  if (form.size !== undefined && (!Number.isInteger(form.size) || form.size < 1 || form.size > MAX_PAGE_SIZE)) {
    errors.size = `expected an integer between 1 and ${MAX_PAGE_SIZE}`;
  }
  if (form.sort !== undefined && !(SORTABLE_COLUMNS as readonly string[]).includes(form.sort)) {
    errors.sort = "not a sortable column";
  }
  if (form.order !== undefined && form.order !== "asc" && form.order !== "desc") {
    errors.order = "expected asc or desc";
  }
  return errors;
}

export function hasErrors(errors: FieldErrors): boolean {
  return Object.keys(errors).length > 0;
}
