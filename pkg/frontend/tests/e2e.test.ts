/** End-to-end: the real views against a live annotation service.
 *
 * The service is started by the global setup; its base URL arrives via
 * STORYKG_BASE_URL. The happy paths below must never produce a
 * state_error — the client collects every API error so we can assert it.
 */

import { readFileSync } from "node:fs";
import { join } from "node:path";
import { beforeAll, describe, expect, it } from "vitest";

import { AnnotationView } from "../src/annotate.js";
import { Client } from "../src/api.js";
import { displayLabel } from "../src/state.js";
import { ValidationView } from "../src/validate.js";

let baseUrl: string;

beforeAll(() => {
  baseUrl = process.env.STORYKG_BASE_URL ?? "";
  if (!baseUrl) throw new Error("global setup did not provide STORYKG_BASE_URL");
});

async function waitFor(
  condition: () => boolean,
  what: string,
  timeoutMs = 8000,
): Promise<void> {
  const start = Date.now();
  while (!condition()) {
    if (Date.now() - start > timeoutMs) {
      throw new Error(`timed out waiting for ${what}`);
    }
    await new Promise((resolve) => setTimeout(resolve, 25));
  }
}

function setInput(input: HTMLInputElement, value: string): void {
  input.value = value;
  input.dispatchEvent(new Event("input", { bubbles: true }));
}

describe("annotation flow", () => {
  it("section view -> word select -> triple select -> QA submit -> visible in export", async () => {
    const client = new Client(baseUrl);
    const root = document.createElement("div");
    document.body.appendChild(root);
    const view = new AnnotationView(root, client, "ui-expert");

    await view.open("swordsmen:1");
    expect(view.state).toBe("started");

    // candidate words are highlighted; "dagger" is clickable
    const spans = [...root.querySelectorAll<HTMLElement>("span.candidate")];
    expect(spans.length).toBeGreaterThan(0);
    const daggerSpan = spans.find((el) => el.dataset.lemma === "dagger");
    expect(daggerSpan).toBeDefined();

    daggerSpan!.click();
    await waitFor(() => view.state === "concept_chosen", "concept selection");
    expect(daggerSpan!.classList.contains("selected")).toBe(true);

    // gloss block plus at most 6 recommended triples render
    await waitFor(
      () => root.querySelectorAll("li.triple").length > 0,
      "triple list",
    );
    expect(root.querySelector(".gloss-block h3")?.textContent).toContain("dagger");
    const triples = root.querySelectorAll<HTMLElement>("li.triple");
    expect(triples.length).toBeGreaterThan(0);
    expect(triples.length).toBeLessThanOrEqual(6);

    triples[0]!.click();
    await waitFor(() => view.state === "triple_chosen", "triple selection");

    const question = root.querySelector<HTMLInputElement>("input.question")!;
    const answer = root.querySelector<HTMLInputElement>("input.answer")!;
    const submit = root.querySelector<HTMLButtonElement>("button.submit")!;

    // a QA naming neither triple endpoint keeps submit disabled
    setInput(question, "What is snow?");
    setInput(answer, "Cold.");
    expect(submit.disabled).toBe(true);
    expect(root.querySelector(".qa-feedback")!.classList.contains("has-violations")).toBe(true);

    const chosen = view.session!.triple!;
    const uiQuestion = `What truly is a ${displayLabel(chosen.source)}?`;
    const uiAnswer = `A ${displayLabel(chosen.source)} goes with ${displayLabel(chosen.target)}.`;
    setInput(question, uiQuestion);
    setInput(answer, uiAnswer);
    expect(submit.disabled).toBe(false);

    submit.click();
    await waitFor(() => view.state === "completed", "QA submission");
    expect(root.querySelector(".record-block .saved")?.textContent).toContain(uiQuestion);

    // the persisted record is observable through the export route
    const exported = await client.exportRecords();
    const mine = exported.filter((r) => r.question === uiQuestion);
    expect(mine).toHaveLength(1);
    expect(mine[0]!.split).toBe("test");

    // scripted happy path never triggered a state error
    expect(client.errors.filter((e) => e.code === "state_error")).toHaveLength(0);
  });

  it("back navigation steps one state at a time", async () => {
    const client = new Client(baseUrl);
    const root = document.createElement("div");
    document.body.appendChild(root);
    const view = new AnnotationView(root, client, "ui-expert-2");

    await view.open("swordsmen:1");
    const dagger = [...root.querySelectorAll<HTMLElement>("span.candidate")].find(
      (el) => el.dataset.lemma === "dagger",
    )!;
    dagger.click();
    await waitFor(() => view.state === "concept_chosen", "concept selection");

    const back = root.querySelector<HTMLButtonElement>("button.back")!;
    expect(back.disabled).toBe(false);
    back.click();
    await waitFor(() => view.state === "started", "step back");
    expect(back.disabled).toBe(true); // guard mirrors the machine
    expect(client.errors).toHaveLength(0);
  });

  it("empty-candidate guard: clicking words in a completed session does nothing", async () => {
    const client = new Client(baseUrl);
    const root = document.createElement("div");
    document.body.appendChild(root);
    const view = new AnnotationView(root, client, "ui-expert-3");

    await view.open("swordsmen:2");
    const white = [...root.querySelectorAll<HTMLElement>("span.candidate")].find(
      (el) => el.dataset.lemma === "white",
    )!;
    white.click();
    await waitFor(() => view.state === "concept_chosen", "concept selection");
    await waitFor(() => root.querySelectorAll("li.triple").length > 0, "triples");
    root.querySelectorAll<HTMLElement>("li.triple")[0]!.click();
    await waitFor(() => view.state === "triple_chosen", "triple selection");
    const chosen = view.session!.triple!;
    setInput(
      root.querySelector<HTMLInputElement>("input.question")!,
      `What is ${displayLabel(chosen.source)}?`,
    );
    setInput(
      root.querySelector<HTMLInputElement>("input.answer")!,
      `It goes with ${displayLabel(chosen.target)}.`,
    );
    root.querySelector<HTMLButtonElement>("button.submit")!.click();
    await waitFor(() => view.state === "completed", "completion");

    // further word clicks are ignored by the client-side guard
    white.click();
    await new Promise((resolve) => setTimeout(resolve, 150));
    expect(view.state).toBe("completed");
    expect(client.errors.filter((e) => e.code === "state_error")).toHaveLength(0);
  });
});

describe("validation flow", () => {
  it("three screens produce exactly one stored result and empty the queue entry", async () => {
    const client = new Client(baseUrl);
    const root = document.createElement("div");
    document.body.appendChild(root);
    const view = new ValidationView(root, client, "validator-1");

    await view.refresh();
    const initialCount = view.tasks.length;
    expect(initialCount).toBeGreaterThan(0);

    const firstTask = root.querySelector<HTMLElement>("li.task")!;
    const taskId = firstTask.dataset.taskId!;
    firstTask.click();

    // screen 1: rank three triples from the recommended list
    await waitFor(() => root.querySelectorAll(".step-rank li.triple").length > 0, "rank list");
    const rankItems = root.querySelectorAll<HTMLElement>(".step-rank li.triple");
    rankItems[0]!.click();
    root.querySelectorAll<HTMLElement>(".step-rank li.triple")[1]!.click();
    root.querySelectorAll<HTMLElement>(".step-rank li.triple")[2]!.click();
    const next1 = root.querySelector<HTMLButtonElement>(".step-rank button.next")!;
    expect(next1.disabled).toBe(false);
    next1.click();

    // screen 2: write a QA pair for the original triple
    await waitFor(() => root.querySelector(".step-qa") !== null, "QA screen");
    setInput(root.querySelector<HTMLInputElement>(".step-qa input.question")!, "What is it like?");
    setInput(root.querySelector<HTMLInputElement>(".step-qa input.answer")!, "It is like its target.");
    root.querySelector<HTMLButtonElement>(".step-qa button.next")!.click();

    // screen 3: answer the original annotator's question; submit unlocks
    await waitFor(() => root.querySelector(".step-answer") !== null, "answer screen");
    const submit = root.querySelector<HTMLButtonElement>(".step-answer button.submit")!;
    expect(submit.disabled).toBe(true); // incomplete until the answer is typed
    setInput(
      root.querySelector<HTMLInputElement>(".step-answer input.answer-to-original")!,
      "My own answer to the original question.",
    );
    expect(submit.disabled).toBe(false);
    submit.click();

    await waitFor(() => view.tasks.length === initialCount - 1, "queue shrink");
    expect(view.tasks.some((t) => t.task_id === taskId)).toBe(false);

    // exactly one result landed in the validation store
    const storePath = join(process.env.STORYKG_DATA_DIR!, "validation.jsonl");
    const lines = readFileSync(storePath, "utf-8").trim().split("\n").filter(Boolean);
    expect(lines).toHaveLength(1);
    const entry = JSON.parse(lines[0]!);
    expect(entry.result.task_id).toBe(taskId);
    expect(entry.result.top3).toHaveLength(3);

    expect(client.errors.filter((e) => e.code === "state_error")).toHaveLength(0);
  });
});
