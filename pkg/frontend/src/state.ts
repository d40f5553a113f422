/** Client-side mirror of the annotation session state machine.
 *
 * The server stays authoritative; these guards only keep the UI from ever
 * sending an event that would be illegal in the current state.
 */

export type UiState =
  | "started"
  | "concept_chosen"
  | "triple_chosen"
  | "completed"
  | "abandoned";

export type UiEvent =
  | "choose_concept"
  | "choose_triple"
  | "submit_qa"
  | "step_back"
  | "abandon";

const LEGAL: Record<UiState, readonly UiEvent[]> = {
  started: ["choose_concept", "abandon"],
  concept_chosen: ["choose_triple", "step_back", "abandon"],
  triple_chosen: ["submit_qa", "step_back", "abandon"],
  completed: [],
  abandoned: [],
};

export function canSend(state: UiState, event: UiEvent): boolean {
  return LEGAL[state].includes(event);
}

export class IllegalUiEvent extends Error {
  constructor(state: UiState, event: UiEvent) {
    super(`UI bug: event ${event} is illegal in state ${state}`);
  }
}

/** Throws instead of letting an illegal event reach the server. */
export function guard(state: UiState, event: UiEvent): void {
  if (!canSend(state, event)) {
    throw new IllegalUiEvent(state, event);
  }
}

export function displayLabel(conceptKey: string): string {
  return conceptKey.replace(/_/g, " ");
}

function onWordBoundary(needle: string, haystack: string): boolean {
  const escaped = needle.replace(/[.*+?^${}()|[\]\\]/g, "\\$&");
  return new RegExp(`\\b${escaped}\\b`, "i").test(haystack);
}

/** Mirror of the server's hard QA rule: one triple endpoint must appear
 * (word-bounded, case-insensitive) in the question or the answer. */
export function conceptIncluded(
  question: string,
  answer: string,
  sourceDisplay: string,
  targetDisplay: string,
): boolean {
  return [sourceDisplay, targetDisplay].some(
    (display) =>
      display.length > 0 &&
      (onWordBoundary(display, question) || onWordBoundary(display, answer)),
  );
}

/** Local pre-validation mirroring the server's rules: hard violations
 * block submission, the question-mark rule is only a warning. */
export function validateQaLocally(
  question: string,
  answer: string,
  sourceDisplay: string,
  targetDisplay: string,
): { violations: string[]; warnings: string[] } {
  const violations: string[] = [];
  const warnings: string[] = [];
  if (!question.trim()) violations.push("question is empty");
  if (!answer.trim()) violations.push("answer is empty");
  if (
    question.trim() &&
    !conceptIncluded(question, answer, sourceDisplay, targetDisplay)
  ) {
    violations.push(
      `neither "${sourceDisplay}" nor "${targetDisplay}" appears in the question or answer`,
    );
  }
  if (question.trim() && !question.trimEnd().endsWith("?")) {
    warnings.push("question does not end with '?'");
  }
  return { violations, warnings };
}
