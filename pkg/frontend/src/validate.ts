/** The cross-validation screens.
 *
 * One task flows through three sequential steps: rank the top 3 triples
 * from the original annotator's recommendation list, write a QA pair for
 * the originally chosen triple, then answer the original question. The
 * combined result is posted once at the end; incomplete steps keep the
 * submit button disabled.
 */

import { ApiError, Client } from "./api.js";
import type { TriplePayload, ValidationTaskPayload } from "./api.js";
import { displayLabel } from "./state.js";

export type ValidationStep = "rank" | "write_qa" | "answer_original" | "submitted";

export class ValidationView {
  private readonly client: Client;
  private readonly root: HTMLElement;
  private readonly validatorId: string;

  tasks: ValidationTaskPayload[] = [];
  current: ValidationTaskPayload | null = null;
  step: ValidationStep = "rank";
  picked: TriplePayload[] = [];
  question = "";
  answer = "";
  answerToOriginal = "";

  private queueEl!: HTMLElement;
  private stageEl!: HTMLElement;
  private statusEl!: HTMLElement;

  constructor(root: HTMLElement, client: Client, validatorId: string) {
    this.root = root;
    this.client = client;
    this.validatorId = validatorId;
    this.root.innerHTML = "";
    this.queueEl = this.make("div", "task-queue");
    this.stageEl = this.make("div", "task-stage");
    this.statusEl = this.make("div", "status");
  }

  private get doc(): Document {
    return this.root.ownerDocument;
  }

  private make(tag: string, className: string): HTMLElement {
    const el = this.doc.createElement(tag);
    el.className = className;
    this.root.appendChild(el);
    return el;
  }

  async refresh(): Promise<void> {
    this.tasks = await this.client.validationTasks(this.validatorId);
    this.renderQueue();
  }

  private renderQueue(): void {
    this.queueEl.innerHTML = "";
    const title = this.doc.createElement("h3");
    title.textContent = `Validation queue (${this.tasks.length})`;
    this.queueEl.appendChild(title);
    const list = this.doc.createElement("ul");
    for (const task of this.tasks) {
      const li = this.doc.createElement("li");
      li.className = "task";
      li.dataset.taskId = task.task_id;
      li.textContent = `${task.record.story_id} #${task.record.section_index} — ${displayLabel(task.record.concept)}`;
      li.addEventListener("click", () => this.openTask(task));
      list.appendChild(li);
    }
    this.queueEl.appendChild(list);
  }

  openTask(task: ValidationTaskPayload): void {
    this.current = task;
    this.step = "rank";
    this.picked = [];
    this.question = "";
    this.answer = "";
    this.answerToOriginal = "";
    this.renderStage();
  }

  private renderStage(): void {
    this.stageEl.innerHTML = "";
    if (!this.current) return;
    const task = this.current;

    const context = this.doc.createElement("div");
    context.className = "task-context";
    const sectionText = this.doc.createElement("p");
    sectionText.className = "section-text";
    sectionText.textContent = task.record.section_text;
    const conceptLine = this.doc.createElement("p");
    conceptLine.className = "concept-line";
    conceptLine.textContent = `Concept selected by the other annotator: ${displayLabel(task.record.concept)}`;
    context.append(sectionText, conceptLine);
    this.stageEl.appendChild(context);

    if (this.step === "rank") this.renderRankStep(task);
    else if (this.step === "write_qa") this.renderWriteQaStep(task);
    else if (this.step === "answer_original") this.renderAnswerStep(task);
    else this.renderSubmitted();
  }

  /** Step 1: pick and order the top 3 from the same recommended list. */
  private renderRankStep(task: ValidationTaskPayload): void {
    const step = this.doc.createElement("div");
    step.className = "step step-rank";
    const title = this.doc.createElement("h3");
    title.textContent = "Step 1 of 3: rank the top 3 triples";
    step.appendChild(title);
    const list = this.doc.createElement("ul");
    const want = Math.min(3, task.recommended.length);
    for (const triple of task.recommended) {
      const li = this.doc.createElement("li");
      li.className = "triple";
      const rank = this.picked.findIndex((p) => sameTriple(p, triple));
      li.textContent =
        (rank >= 0 ? `[${rank + 1}] ` : "") +
        `${displayLabel(triple.source)} … ${displayLabel(triple.target)} (${triple.relation})`;
      li.classList.toggle("picked", rank >= 0);
      li.addEventListener("click", () => {
        const at = this.picked.findIndex((p) => sameTriple(p, triple));
        if (at >= 0) this.picked.splice(at, 1);
        else if (this.picked.length < want) this.picked.push(triple);
        this.renderStage();
      });
      list.appendChild(li);
    }
    step.appendChild(list);
    const next = this.doc.createElement("button");
    next.className = "next";
    next.textContent = "Continue";
    next.disabled = this.picked.length !== want;
    next.addEventListener("click", () => {
      this.step = "write_qa";
      this.renderStage();
    });
    step.appendChild(next);
    this.stageEl.appendChild(step);
  }

  /** Step 2: write a QA pair for the originally selected triple. */
  private renderWriteQaStep(task: ValidationTaskPayload): void {
    const step = this.doc.createElement("div");
    step.className = "step step-qa";
    const title = this.doc.createElement("h3");
    title.textContent = "Step 2 of 3: write a QA pair for the original triple";
    const original = this.doc.createElement("p");
    original.className = "original-triple";
    const t = task.record.triple;
    original.textContent = `(${displayLabel(t.source)}, ${t.relation}, ${displayLabel(t.target)})`;
    const question = this.doc.createElement("input");
    question.className = "question";
    question.value = this.question;
    question.addEventListener("input", () => {
      this.question = question.value;
      next.disabled = !this.question.trim() || !this.answer.trim();
    });
    const answer = this.doc.createElement("input");
    answer.className = "answer";
    answer.value = this.answer;
    answer.addEventListener("input", () => {
      this.answer = answer.value;
      next.disabled = !this.question.trim() || !this.answer.trim();
    });
    const next = this.doc.createElement("button");
    next.className = "next";
    next.textContent = "Continue";
    next.disabled = !this.question.trim() || !this.answer.trim();
    next.addEventListener("click", () => {
      this.step = "answer_original";
      this.renderStage();
    });
    step.append(title, original, question, answer, next);
    this.stageEl.appendChild(step);
  }

  /** Step 3: answer the original annotator's question, then submit. */
  private renderAnswerStep(task: ValidationTaskPayload): void {
    const step = this.doc.createElement("div");
    step.className = "step step-answer";
    const title = this.doc.createElement("h3");
    title.textContent = "Step 3 of 3: answer the original question";
    const originalQ = this.doc.createElement("p");
    originalQ.className = "original-question";
    originalQ.textContent = task.record.question;
    const answer = this.doc.createElement("input");
    answer.className = "answer-to-original";
    answer.value = this.answerToOriginal;
    answer.addEventListener("input", () => {
      this.answerToOriginal = answer.value;
      submit.disabled = !this.complete();
    });
    const submit = this.doc.createElement("button");
    submit.className = "submit";
    submit.textContent = "Submit validation";
    submit.disabled = !this.complete();
    submit.addEventListener("click", () => void this.submit(task));
    step.append(title, originalQ, answer, submit);
    this.stageEl.appendChild(step);
  }

  private renderSubmitted(): void {
    const note = this.doc.createElement("p");
    note.className = "submitted";
    note.textContent = "Validation submitted. Pick the next task from the queue.";
    this.stageEl.appendChild(note);
  }

  /** All three steps must be complete before anything is posted. */
  complete(): boolean {
    const want = Math.min(3, this.current?.recommended.length ?? 3);
    return (
      this.picked.length === want &&
      this.question.trim().length > 0 &&
      this.answer.trim().length > 0 &&
      this.answerToOriginal.trim().length > 0
    );
  }

  private async submit(task: ValidationTaskPayload): Promise<void> {
    if (!this.complete()) return;
    try {
      await this.client.submitValidationResult(
        task.task_id,
        this.picked,
        this.question,
        this.answer,
        this.answerToOriginal,
      );
    } catch (error) {
      this.statusEl.textContent =
        error instanceof ApiError ? `${error.code}: ${error.message}` : String(error);
      return;
    }
    this.step = "submitted";
    this.current = null;
    this.statusEl.textContent = `Task ${task.task_id} submitted.`;
    await this.refresh();
    this.renderStage();
  }
}

function sameTriple(a: TriplePayload, b: TriplePayload): boolean {
  return a.source === b.source && a.relation === b.relation && a.target === b.target;
}
