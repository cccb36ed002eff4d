/**
 * Render the filter form as an HTML string: general criteria, the
 * popularity and activity ranges, date ranges, and the flag switches,
 * with inline errors next to the fields they concern.
 */

import { COUNT_PREFIXES, FieldErrors, FormState } from "./filters";
import { escapeHtml } from "./resultsTable";

const COUNT_LABELS: Record<(typeof COUNT_PREFIXES)[number], string> = {
  commits: "Commits",
  contributors: "Contributors",
  issues: "Issues",
  pulls: "Pull requests",
  branches: "Branches",
  releases: "Releases",
  stars: "Stars",
  watchers: "Watchers",
  forks: "Forks",
};

const FLAG_LABELS: Record<string, string> = {
  excludeForks: "Exclude forks",
  onlyWithLicense: "Only with a license",
  onlyWithOpenIssues: "Only with open issues",
  excludeArchived: "Exclude archived",
};

function attr(value: string | number | undefined): string {
  return value === undefined ? "" : ` value="${escapeHtml(String(value))}"`;
}

function errorNote(errors: FieldErrors, key: string): string {
  const message = errors[key];
  return message ? `<span class="field-error" data-for="${key}">${escapeHtml(message)}</span>` : "";
}

function textInput(form: FormState, errors: FieldErrors, name: "nameContains" | "language" | "license", label: string): string {
  return [
    `<label>${label}<input name="${name}" type="text"${attr(form[name])}></label>`,
    errorNote(errors, name),
  ].join("");
}

function rangePair(form: FormState, errors: FieldErrors, prefix: string, label: string, type: string): string {
  const min = `${prefix}Min` as keyof FormState;
  const max = `${prefix}Max` as keyof FormState;
  return [
    `<fieldset class="range" data-range="${prefix}"><legend>${label}</legend>`,
    `<input name="${prefix}Min" type="${type}"${attr(form[min] as string | number | undefined)}>`,
    `<input name="${prefix}Max" type="${type}"${attr(form[max] as string | number | undefined)}>`,
    errorNote(errors, `${prefix}Min`),
    errorNote(errors, `${prefix}Max`),
    errorNote(errors, prefix),
    `</fieldset>`,
  ].join("");
}

export function renderFilterForm(form: FormState, errors: FieldErrors = {}): string {
  const parts: string[] = [`<form class="filters">`];
  parts.push(`<section class="general">`);
  parts.push(textInput(form, errors, "nameContains", "Name contains"));
  parts.push(textInput(form, errors, "language", "Language"));
  parts.push(textInput(form, errors, "license", "License"));
  // Kept visible for parity with the planned layout; the backend side
  // of label filtering is not finalized, so the input stays inert.
  parts.push(
    `<label>Issue label<input name="issueLabel" type="text" disabled ` +
      `title="backend crawling not finalized"${attr(form.issueLabel)}></label>`,
  );
  parts.push(`</section>`);
  parts.push(`<section class="ranges">`);
  for (const prefix of COUNT_PREFIXES) {
    parts.push(rangePair(form, errors, prefix, COUNT_LABELS[prefix], "number"));
  }
  parts.push(rangePair(form, errors, "created", "Created between", "date"));
  parts.push(rangePair(form, errors, "lastCommit", "Last commit between", "date"));
  parts.push(`</section>`);
  parts.push(`<section class="flags">`);
  for (const [name, label] of Object.entries(FLAG_LABELS)) {
    const checked = form[name as keyof FormState] === true ? " checked" : "";
    parts.push(`<label><input name="${name}" type="checkbox"${checked}>${label}</label>`);
  }
  parts.push(`</section>`);
  parts.push(`<button type="submit">Search</button>`);
  parts.push(`</form>`);
  return parts.join("\n");
}
