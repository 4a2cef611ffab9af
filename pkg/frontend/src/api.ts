/** Typed client for the explorer service. The fetch implementation is
 * injectable so tests can run against a mock server. */

import type {
  ApiErrorBody,
  EmbeddingPayload,
  FilterClause,
  Histograms,
  InterpolateResponse,
  Modality,
  PerturbResponse,
  Provenance,
  ReconstructResponse,
  SubjectResponse,
  Summary,
  VectorPayload,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  readonly code: string;
  readonly status: number;

  constructor(status: number, body: ApiErrorBody) {
    super(body.message);
    this.code = body.code;
    this.status = status;
  }
}

async function unwrap<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let body: ApiErrorBody;
    try {
      body = (await response.json()) as ApiErrorBody;
    } catch {
      body = { code: "internal", message: `HTTP ${response.status}` };
    }
    throw new ApiError(response.status, body);
  }
  return (await response.json()) as T;
}

export class ExplorerApi {
  constructor(
    private readonly base: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private get(path: string): Promise<Response> {
    return this.fetchImpl(`${this.base}${path}`);
  }

  private post(path: string, body: unknown): Promise<Response> {
    return this.fetchImpl(`${this.base}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  summary(): Promise<Summary> {
    return this.get("/api/summary").then((r) => unwrap<Summary>(r));
  }

  histogram(selection?: number[]): Promise<Histograms> {
    const path =
      selection === undefined
        ? "/api/histogram"
        : `/api/histogram?selection=${selection.join(",")}`;
    return this.get(path).then((r) => unwrap<Histograms>(r));
  }

  embedding(modality: Modality): Promise<EmbeddingPayload> {
    return this.get(`/api/embedding/${modality}`).then((r) =>
      unwrap<EmbeddingPayload>(r),
    );
  }

  filter(clauses: FilterClause[]): Promise<number[]> {
    return this.post("/api/cohort/filter", { clauses })
      .then((r) => unwrap<{ ids: number[] }>(r))
      .then((body) => body.ids);
  }

  lasso(modality: Modality, polygon: [number, number][]): Promise<number[]> {
    return this.post("/api/cohort/lasso", { modality, polygon })
      .then((r) => unwrap<{ ids: number[] }>(r))
      .then((body) => body.ids);
  }

  createGroup(
    name: string,
    source: { ids?: number[]; provenance?: Provenance },
  ): Promise<{ group_id: string; size: number }> {
    return this.post("/api/group", { name, ...source }).then((r) =>
      unwrap<{ group_id: string; size: number }>(r),
    );
  }

  reconstruct(
    groupId: string,
    method: string,
    modalities: string[],
  ): Promise<ReconstructResponse> {
    return this.post("/api/reconstruct", {
      group_id: groupId,
      method,
      modalities,
    }).then((r) => unwrap<ReconstructResponse>(r));
  }

  perturb(
    base: VectorPayload,
    k: number,
    value: number,
    modalities: string[],
  ): Promise<PerturbResponse> {
    return this.post("/api/perturb", { base, k, value, modalities }).then((r) =>
      unwrap<PerturbResponse>(r),
    );
  }

  interpolate(
    groupA: string,
    groupB: string,
    t: number,
    modalities: string[],
  ): Promise<InterpolateResponse> {
    return this.post("/api/interpolate", {
      group_a: groupA,
      group_b: groupB,
      t,
      modalities,
    }).then((r) => unwrap<InterpolateResponse>(r));
  }

  translate(subjectId: number, from: Modality, to: Modality): Promise<SubjectResponse> {
    return this.post("/api/translate", {
      subject_id: subjectId,
      from,
      to,
    }).then((r) => unwrap<SubjectResponse>(r));
  }

  subject(id: number): Promise<SubjectResponse> {
    return this.get(`/api/subject/${id}`).then((r) => unwrap<SubjectResponse>(r));
  }
}
