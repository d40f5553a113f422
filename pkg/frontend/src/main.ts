/** Entry point: wires the section picker and the two workflows. */

import { Client } from "./api.js";
import { AnnotationView } from "./annotate.js";
import { ValidationView } from "./validate.js";

interface AppConfig {
  baseUrl: string;
  annotatorId: string;
}

function readConfig(): AppConfig {
  const params = new URLSearchParams(window.location.search);
  return {
    baseUrl: params.get("api") ?? window.location.origin,
    annotatorId: params.get("annotator") ?? "anonymous",
  };
}

export async function boot(root: HTMLElement, config?: AppConfig): Promise<void> {
  const { baseUrl, annotatorId } = config ?? readConfig();
  const client = new Client(baseUrl);
  const doc = root.ownerDocument;

  root.innerHTML = "";
  const nav = doc.createElement("nav");
  const annotateTab = doc.createElement("button");
  annotateTab.textContent = "Annotate";
  const validateTab = doc.createElement("button");
  validateTab.textContent = "Validate";
  nav.append(annotateTab, validateTab);

  const picker = doc.createElement("select");
  picker.className = "section-picker";
  const openBtn = doc.createElement("button");
  openBtn.textContent = "Open section";

  const annotatePane = doc.createElement("div");
  annotatePane.className = "pane annotate-pane";
  const validatePane = doc.createElement("div");
  validatePane.className = "pane validate-pane";
  validatePane.style.display = "none";

  root.append(nav, picker, openBtn, annotatePane, validatePane);

  const annotation = new AnnotationView(annotatePane, client, annotatorId);
  const validation = new ValidationView(validatePane, client, annotatorId);

  for (const section of await client.listSections()) {
    const option = doc.createElement("option");
    option.value = section.section_id;
    option.textContent = `${section.story_id} #${section.section_index} (${section.token_count} tokens)`;
    picker.appendChild(option);
  }

  openBtn.addEventListener("click", () => {
    if (picker.value) void annotation.open(picker.value);
  });
  annotateTab.addEventListener("click", () => {
    annotatePane.style.display = "";
    validatePane.style.display = "none";
  });
  validateTab.addEventListener("click", () => {
    annotatePane.style.display = "none";
    validatePane.style.display = "";
    void validation.refresh();
  });
}

declare global {
  interface Window {
    storykgBoot?: typeof boot;
  }
}

if (typeof window !== "undefined" && typeof document !== "undefined") {
  window.storykgBoot = boot;
  const root = document.getElementById("app");
  if (root) {
    void boot(root);
  }
}
