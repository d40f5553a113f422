/** Typed client for the annotation service HTTP API (schema v1). */

export interface TriplePayload {
  source: string;
  relation: string;
  target: string;
  weight?: number;
}

export interface RankedTriple {
  triple: TriplePayload;
  relation_phrase: string;
  mean_similarity: number;
  score: number;
}

export interface Candidate {
  lemma: string;
  pos: string;
  spans: [number, number][];
  roles: string[];
}

export interface SectionSummary {
  section_id: string;
  story_id: string;
  section_index: number;
  token_count: number;
}

export interface SectionDetail extends SectionSummary {
  text: string;
  candidates: Candidate[];
}

export interface SessionPayload {
  session_id: string;
  annotator_id: string;
  story_id: string;
  section_index: number;
  state: "started" | "concept_chosen" | "triple_chosen" | "completed" | "abandoned";
  concept: string | null;
  recommended: RankedTriple[] | null;
  triple: TriplePayload | null;
  question: string | null;
  answer: string | null;
  qa_warnings: string[];
}

export interface Gloss {
  concept: string;
  definitions: string[];
  source: string;
}

export interface RecordPayload {
  record_id: string;
  question: string;
  answer: string;
  [key: string]: unknown;
}

export interface ValidationTaskPayload {
  task_id: string;
  validator_id: string;
  recommended: TriplePayload[];
  record: {
    story_id: string;
    section_index: number;
    section_text: string;
    concept: string;
    triple: TriplePayload;
    question: string;
    answer: string;
    [key: string]: unknown;
  };
}

export interface ExportRecord {
  story_id: string;
  section_index: number;
  concept: string;
  question: string;
  answer: string;
  split: string;
  triple: { source: string; relation_phrase: string; target: string };
}

export class ApiError extends Error {
  readonly code: string;
  readonly detail: Record<string, unknown>;

  constructor(code: string, message: string, detail: Record<string, unknown> = {}) {
    super(message);
    this.code = code;
    this.detail = detail;
  }
}

/** Thin fetch wrapper. Every ApiError raised is also collected so tests
 * can assert that a scripted flow never produced a given error code. */
export class Client {
  readonly baseUrl: string;
  readonly errors: ApiError[] = [];

  constructor(baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await fetch(this.baseUrl + path, init);
    const body = (await resp.json()) as Record<string, unknown>;
    if (!resp.ok) {
      const raw = (body.error ?? {}) as Record<string, unknown>;
      const error = new ApiError(
        String(raw.code ?? "internal"),
        String(raw.message ?? resp.statusText),
        (raw.detail as Record<string, unknown>) ?? {},
      );
      this.errors.push(error);
      throw error;
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload ?? {}),
    });
  }

  async listSections(): Promise<SectionSummary[]> {
    const body = await this.request<{ sections: SectionSummary[] }>("/sections");
    return body.sections;
  }

  getSection(id: string): Promise<SectionDetail> {
    return this.request<SectionDetail>(`/sections/${encodeURIComponent(id)}`);
  }

  async conceptTriples(word: string): Promise<RankedTriple[]> {
    const body = await this.request<{ triples: RankedTriple[] }>(
      `/concepts/${encodeURIComponent(word)}/triples`,
    );
    return body.triples;
  }

  conceptGloss(word: string): Promise<Gloss> {
    return this.request<Gloss>(`/concepts/${encodeURIComponent(word)}/gloss`);
  }

  createSession(sectionId: string, annotatorId: string): Promise<SessionPayload> {
    return this.post<SessionPayload>("/sessions", {
      section_id: sectionId,
      annotator_id: annotatorId,
    });
  }

  chooseConcept(sessionId: string, concept: string): Promise<SessionPayload> {
    return this.post<SessionPayload>(`/sessions/${sessionId}/concept`, { concept });
  }

  chooseTriple(sessionId: string, triple: TriplePayload): Promise<SessionPayload> {
    return this.post<SessionPayload>(`/sessions/${sessionId}/triple`, triple);
  }

  submitQA(
    sessionId: string,
    question: string,
    answer: string,
  ): Promise<SessionPayload & { record: RecordPayload }> {
    return this.post<SessionPayload & { record: RecordPayload }>(
      `/sessions/${sessionId}/qa`,
      { question, answer },
    );
  }

  stepBack(sessionId: string): Promise<SessionPayload> {
    return this.post<SessionPayload>(`/sessions/${sessionId}/back`, {});
  }

  abandon(sessionId: string): Promise<SessionPayload> {
    return this.post<SessionPayload>(`/sessions/${sessionId}/abandon`, {});
  }

  async validationTasks(validatorId: string): Promise<ValidationTaskPayload[]> {
    const body = await this.request<{ tasks: ValidationTaskPayload[] }>(
      `/validation/tasks?validator=${encodeURIComponent(validatorId)}`,
    );
    return body.tasks;
  }

  submitValidationResult(
    taskId: string,
    top3: TriplePayload[],
    question: string,
    answer: string,
    answerToOriginal: string,
  ): Promise<{ result: Record<string, unknown> }> {
    return this.post<{ result: Record<string, unknown> }>(
      `/validation/tasks/${encodeURIComponent(taskId)}/result`,
      { top3, question, answer, answer_to_original: answerToOriginal },
    );
  }

  async exportRecords(): Promise<ExportRecord[]> {
    const body = await this.request<{ records: ExportRecord[] }>("/export");
    return body.records;
  }
}
