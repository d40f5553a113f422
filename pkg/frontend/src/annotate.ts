/** The three-step annotation screen.
 *
 * One view instance drives one section at a time: pick a highlighted
 * word, pick one of the recommended triples, then write the QA pair.
 * Every button/click is gated by the state-machine guards so the view
 * can never send an event the server would reject as illegal.
 */

import { ApiError, Client } from "./api.js";
import type { RankedTriple, SectionDetail, SessionPayload } from "./api.js";
import { markSelected, renderSection } from "./highlight.js";
import { canSend, displayLabel, guard, validateQaLocally } from "./state.js";
import type { UiState } from "./state.js";

export class AnnotationView {
  private readonly client: Client;
  private readonly root: HTMLElement;
  private readonly annotatorId: string;

  section: SectionDetail | null = null;
  session: SessionPayload | null = null;

  private sectionEl!: HTMLElement;
  private glossEl!: HTMLElement;
  private triplesEl!: HTMLElement;
  private formEl!: HTMLElement;
  private recordEl!: HTMLElement;
  private statusEl!: HTMLElement;
  private backBtn!: HTMLButtonElement;
  private abandonBtn!: HTMLButtonElement;

  constructor(root: HTMLElement, client: Client, annotatorId: string) {
    this.root = root;
    this.client = client;
    this.annotatorId = annotatorId;
    this.buildSkeleton();
  }

  get state(): UiState {
    return this.session?.state ?? "started";
  }

  private get doc(): Document {
    return this.root.ownerDocument;
  }

  private buildSkeleton(): void {
    this.root.innerHTML = "";
    const make = (tag: string, className: string): HTMLElement => {
      const el = this.doc.createElement(tag);
      el.className = className;
      this.root.appendChild(el);
      return el;
    };
    this.sectionEl = make("div", "section-text");
    this.glossEl = make("div", "gloss-block");
    this.triplesEl = make("div", "triples-block");
    this.formEl = make("div", "qa-form");
    this.recordEl = make("div", "record-block");
    const controls = make("div", "controls");
    this.backBtn = this.doc.createElement("button");
    this.backBtn.textContent = "Back";
    this.backBtn.className = "back";
    this.backBtn.addEventListener("click", () => void this.onBack());
    this.abandonBtn = this.doc.createElement("button");
    this.abandonBtn.textContent = "Abandon";
    this.abandonBtn.className = "abandon";
    this.abandonBtn.addEventListener("click", () => void this.onAbandon());
    controls.append(this.backBtn, this.abandonBtn);
    this.statusEl = make("div", "status");
  }

  async open(sectionId: string): Promise<void> {
    this.section = await this.client.getSection(sectionId);
    this.session = await this.client.createSession(sectionId, this.annotatorId);
    this.renderAll();
  }

  private renderAll(): void {
    this.renderSectionText();
    this.renderGloss(null);
    this.renderTriples();
    this.renderForm();
    this.renderControls();
  }

  private renderSectionText(): void {
    const section = this.section;
    if (!section) return;
    this.sectionEl.innerHTML = "";
    if (section.candidates.length === 0) {
      const note = this.doc.createElement("p");
      note.className = "empty-note";
      note.textContent =
        "No candidate words in this section; skip to another section.";
      this.sectionEl.appendChild(note);
      this.sectionEl.appendChild(this.doc.createTextNode(section.text));
      return;
    }
    this.sectionEl.appendChild(
      renderSection(this.doc, section.text, section.candidates, (lemma) => {
        void this.onSelectWord(lemma);
      }),
    );
  }

  private renderGloss(definitions: string[] | null): void {
    this.glossEl.innerHTML = "";
    if (!definitions) return;
    const title = this.doc.createElement("h3");
    title.textContent = `Explanation: ${displayLabel(this.session?.concept ?? "")}`;
    this.glossEl.appendChild(title);
    const list = this.doc.createElement("ol");
    if (definitions.length === 0) {
      const li = this.doc.createElement("li");
      li.textContent = "(no dictionary entry found)";
      list.appendChild(li);
    }
    for (const definition of definitions) {
      const li = this.doc.createElement("li");
      li.textContent = definition;
      list.appendChild(li);
    }
    this.glossEl.appendChild(list);
  }

  private renderTriples(): void {
    this.triplesEl.innerHTML = "";
    const recommended = this.session?.recommended;
    if (!recommended) return;
    const title = this.doc.createElement("h3");
    title.textContent = "Recommended knowledge";
    this.triplesEl.appendChild(title);
    const list = this.doc.createElement("ul");
    // rendered verbatim in API order: the server already ranked them
    for (const ranked of recommended) {
      const li = this.doc.createElement("li");
      li.className = "triple";
      li.dataset.key = tripleKey(ranked);
      li.textContent = tripleText(ranked);
      if (this.session?.triple && tripleKey(ranked) === chosenKey(this.session)) {
        li.classList.add("chosen");
      }
      li.addEventListener("click", () => void this.onSelectTriple(ranked));
      list.appendChild(li);
    }
    this.triplesEl.appendChild(list);
  }

  private renderForm(): void {
    this.formEl.innerHTML = "";
    if (this.state !== "triple_chosen") return;
    const triple = this.session?.triple;
    if (!triple) return;
    const question = this.doc.createElement("input");
    question.className = "question";
    question.placeholder = "Question";
    const answer = this.doc.createElement("input");
    answer.className = "answer";
    answer.placeholder = "Answer";
    const feedback = this.doc.createElement("div");
    feedback.className = "qa-feedback";
    const submit = this.doc.createElement("button");
    submit.className = "submit";
    submit.textContent = "Submit QA pair";
    submit.disabled = true;

    const revalidate = () => {
      const { violations, warnings } = validateQaLocally(
        question.value,
        answer.value,
        displayLabel(triple.source),
        displayLabel(triple.target),
      );
      feedback.textContent = [...violations, ...warnings].join("; ");
      feedback.classList.toggle("has-violations", violations.length > 0);
      submit.disabled = violations.length > 0;
    };
    question.addEventListener("input", revalidate);
    answer.addEventListener("input", revalidate);
    submit.addEventListener("click", () =>
      void this.onSubmitQA(question.value, answer.value),
    );
    revalidate();
    this.formEl.append(question, answer, feedback, submit);
  }

  private renderControls(): void {
    this.backBtn.disabled = !canSend(this.state, "step_back");
    this.abandonBtn.disabled = !canSend(this.state, "abandon");
  }

  private setStatus(text: string): void {
    this.statusEl.textContent = text;
  }

  private async onSelectWord(lemma: string): Promise<void> {
    if (!this.session || !canSend(this.state, "choose_concept")) return;
    guard(this.state, "choose_concept");
    try {
      this.session = await this.client.chooseConcept(this.session.session_id, lemma);
    } catch (error) {
      this.setStatus(errorText(error));
      return;
    }
    markSelected(this.sectionEl, lemma);
    const gloss = await this.client.conceptGloss(lemma);
    this.renderGloss(gloss.definitions);
    this.renderTriples();
    this.renderForm();
    this.renderControls();
    this.setStatus(`Selected "${displayLabel(lemma)}"`);
  }

  private async onSelectTriple(ranked: RankedTriple): Promise<void> {
    if (!this.session || !canSend(this.state, "choose_triple")) return;
    guard(this.state, "choose_triple");
    try {
      this.session = await this.client.chooseTriple(
        this.session.session_id,
        ranked.triple,
      );
    } catch (error) {
      this.setStatus(errorText(error));
      return;
    }
    this.renderTriples();
    this.renderForm();
    this.renderControls();
    this.setStatus(`Chose: ${tripleText(ranked)}`);
  }

  private async onSubmitQA(question: string, answer: string): Promise<void> {
    if (!this.session || !canSend(this.state, "submit_qa")) return;
    guard(this.state, "submit_qa");
    try {
      const payload = await this.client.submitQA(
        this.session.session_id,
        question,
        answer,
      );
      this.session = payload;
      this.recordEl.innerHTML = "";
      const note = this.doc.createElement("p");
      note.className = "saved";
      note.textContent =
        `Saved record ${payload.record.record_id}: ` +
        `${payload.record.question} — ${payload.record.answer}`;
      this.recordEl.appendChild(note);
      this.renderForm();
      this.renderControls();
      this.setStatus("Annotation complete.");
    } catch (error) {
      // server-side rule disagreements land in the form as field messages
      const feedback = this.formEl.querySelector<HTMLElement>(".qa-feedback");
      if (feedback) {
        feedback.textContent = errorText(error);
        feedback.classList.add("has-violations");
      }
    }
  }

  private async onBack(): Promise<void> {
    if (!this.session || !canSend(this.state, "step_back")) return;
    guard(this.state, "step_back");
    this.session = await this.client.stepBack(this.session.session_id);
    if (this.state === "started") {
      markSelected(this.sectionEl, "");
      this.renderGloss(null);
    }
    this.renderTriples();
    this.renderForm();
    this.renderControls();
    this.setStatus("Went back one step.");
  }

  private async onAbandon(): Promise<void> {
    if (!this.session || !canSend(this.state, "abandon")) return;
    guard(this.state, "abandon");
    this.session = await this.client.abandon(this.session.session_id);
    this.renderForm();
    this.renderControls();
    this.setStatus("Session abandoned.");
  }
}

function tripleText(ranked: RankedTriple): string {
  const t = ranked.triple;
  return `${displayLabel(t.source)} ${ranked.relation_phrase} ${displayLabel(t.target)}`;
}

function tripleKey(ranked: RankedTriple): string {
  const t = ranked.triple;
  return `${t.source}|${t.relation}|${t.target}`;
}

function chosenKey(session: SessionPayload): string {
  const t = session.triple;
  return t ? `${t.source}|${t.relation}|${t.target}` : "";
}

function errorText(error: unknown): string {
  if (error instanceof ApiError) {
    const detail = error.detail.violations;
    if (Array.isArray(detail) && detail.length > 0) {
      return detail.join("; ");
    }
    return `${error.code}: ${error.message}`;
  }
  return String(error);
}
