/** Candidate-span highlighting.
 *
 * Spans are the server's character offsets, used verbatim — the UI never
 * re-tokenizes section text, so highlights always agree with the
 * extractor's candidates.
 */

import type { Candidate } from "./api.js";

export interface SpanRef {
  lemma: string;
  start: number;
  end: number;
}

export function flattenSpans(candidates: Candidate[]): SpanRef[] {
  const spans: SpanRef[] = [];
  for (const candidate of candidates) {
    for (const [start, end] of candidate.spans) {
      spans.push({ lemma: candidate.lemma, start, end });
    }
  }
  spans.sort((a, b) => a.start - b.start);
  return spans;
}

/** Build the section body: plain text nodes with one clickable
 * <span class="candidate"> per candidate occurrence. */
export function renderSection(
  doc: Document,
  text: string,
  candidates: Candidate[],
  onSelect: (lemma: string, element: HTMLElement) => void,
): DocumentFragment {
  const fragment = doc.createDocumentFragment();
  let cursor = 0;
  for (const span of flattenSpans(candidates)) {
    if (span.start < cursor) continue; // defensive: skip overlaps
    if (span.start > cursor) {
      fragment.appendChild(doc.createTextNode(text.slice(cursor, span.start)));
    }
    const el = doc.createElement("span");
    el.className = "candidate";
    el.dataset.lemma = span.lemma;
    el.textContent = text.slice(span.start, span.end);
    el.addEventListener("click", () => onSelect(span.lemma, el));
    fragment.appendChild(el);
    cursor = span.end;
  }
  if (cursor < text.length) {
    fragment.appendChild(doc.createTextNode(text.slice(cursor)));
  }
  return fragment;
}

export function markSelected(root: ParentNode, lemma: string): void {
  root.querySelectorAll<HTMLElement>("span.candidate").forEach((el) => {
    el.classList.toggle("selected", el.dataset.lemma === lemma);
  });
}
