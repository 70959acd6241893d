/** Input record: responses only, plus optional question context. */
export interface RawRecord {
  query_id: string;
  responses: string[];
  question?: string;
  /** Extra fields (dataset tags, labels, ...) are carried through untouched. */
  extra: Record<string, unknown>;
}

/** Output record in the estimator toolkit's JSONL schema. */
export interface ScoredRecord {
  query_id: string;
  n: number;
  responses: string[];
  /** Flat row-major directed entailment probabilities, diagonal exactly 1. */
  entailment: number[];
  question?: string;
  extra: Record<string, unknown>;
}

/** One directed premise/hypothesis pair to score. */
export interface ScorePair {
  premise: string;
  hypothesis: string;
}

export interface AdapterConfig {
  /** NLI checkpoint identifier, or "lexical" for the offline fallback. */
  model: string;
  batchSize: number;
  /** Prepend the question text to both premise and hypothesis. */
  prependQuestion: boolean;
  /** Device hint forwarded to the model backend ("cpu", "gpu", ...). */
  device?: string;
}

export const DEFAULT_MODEL = "microsoft/deberta-v3-large-mnli";

export const DEFAULT_CONFIG: AdapterConfig = {
  model: DEFAULT_MODEL,
  batchSize: 8,
  prependQuestion: true,
};
