/** Wire types for the explorer service JSON API. */

export type Modality = "ecg" | "mri";

export interface CovariateSchemaEntry {
  name: string;
  kind: "numeric" | "categorical" | "boolean";
  categories?: string[];
  range?: [number, number];
  bin_width?: number;
}

export interface Summary {
  n: number;
  seed: number;
  split_sizes: Record<string, number>;
  covariate_schema: CovariateSchemaEntry[];
  latent_dim: number;
  modalities: Modality[];
  phenotypes: { name: string; kind: "binary" | "continuous" }[];
  display_range: Record<string, number[]>;
}

export interface HistogramEntry {
  labels: string[];
  all: number[];
  selected: number[];
}

export type Histograms = Record<string, HistogramEntry>;

export interface EmbeddingPayload {
  modality: Modality;
  ids: number[];
  points: [number, number][];
  kl_final: number;
}

export interface FilterClause {
  covariate: string;
  categories?: string[];
  interval?: [number, number];
}

export interface SamplePayload {
  shape: number[];
  dtype: "float32";
  b64: string;
}

export interface VectorPayload {
  values: number[];
  origin: string;
}

export interface PredictionMatrixPayload {
  rows: string[];
  phenotypes: { name: string; kind: "binary" | "continuous" }[];
  cells: (number | null)[][];
  metrics: (number | null)[][];
}

export interface ReconstructResponse {
  group_id: string;
  vector: VectorPayload;
  subject_id: number | null;
  samples: Record<string, SamplePayload>;
  matrix: PredictionMatrixPayload;
}

export interface PerturbResponse {
  vector: VectorPayload;
  original: Record<string, SamplePayload>;
  perturbed: Record<string, SamplePayload>;
  matrix: PredictionMatrixPayload;
}

export interface InterpolateResponse {
  vector: VectorPayload;
  samples: Record<string, SamplePayload>;
  matrix: PredictionMatrixPayload;
}

export interface SubjectResponse {
  id: number;
  split: string;
  covariates: Record<string, number | string | boolean>;
  factors: Record<string, number>;
  mri: SamplePayload;
  ecg: SamplePayload;
}

export type Provenance =
  | { type: "filter"; clauses: FilterClause[] }
  | { type: "lasso"; modality: Modality; polygon: [number, number][] }
  | { type: "intersection"; parts: Provenance[] };

export interface ApiErrorBody {
  code: string;
  message: string;
}
