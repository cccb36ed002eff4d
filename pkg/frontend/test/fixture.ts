import { readFileSync } from "node:fs";

import { FormState } from "../src/filters";

export interface ScriptedState {
  name: string;
  form: FormState;
  query: string;
}

/** The scripted form states shared with the server-side contract tests. */
export function loadStates(): ScriptedState[] {
  const raw = readFileSync(new URL("../testdata/form_states.json", import.meta.url), "utf8");
  const fixture = JSON.parse(raw) as { states: ScriptedState[] };
  return fixture.states;
}
