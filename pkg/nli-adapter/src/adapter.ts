import type { EntailmentScorer } from "./backends.js";
import type { AdapterConfig, RawRecord, ScoredRecord, ScorePair } from "./types.js";

function round6(x: number): number {
  const clamped = Math.min(Math.max(x, 0), 1);
  return Math.round(clamped * 1e6) / 1e6;
}

function buildText(question: string | undefined, response: string, prepend: boolean): string {
  if (prepend && question) return `${question} ${response}`;
  return response;
}

/**
 * Scores a batch, halving the batch size on failure (out-of-memory style
 * errors) until single pairs; rethrows once a single pair fails.
 */
async function scoreWithRetry(
  scorer: EntailmentScorer,
  pairs: ScorePair[],
  batchSize: number,
): Promise<number[]> {
  const out: number[] = [];
  let size = Math.max(1, batchSize);
  let start = 0;
  while (start < pairs.length) {
    const batch = pairs.slice(start, start + size);
    try {
      out.push(...(await scorer.scoreBatch(batch)));
      start += batch.length;
    } catch (err) {
      if (size === 1) throw err;
      size = Math.max(1, Math.floor(size / 2));
      console.warn(`batch failed, retrying at batch size ${size}`);
    }
  }
  return out;
}

/** Fills one record's n x n directed entailment matrix (diagonal 1.0). */
export async function scoreRecord(
  record: RawRecord,
  scorer: EntailmentScorer,
  config: AdapterConfig,
): Promise<ScoredRecord> {
  const n = record.responses.length;
  record.responses.forEach((text, i) => {
    if (text.trim().length === 0) {
      console.warn(`${record.query_id}: response ${i} is empty; scoring against the bare template`);
    }
  });
  const prepend = config.prependQuestion && scorer.usesQuestionContext;
  const texts = record.responses.map((r) => buildText(record.question, r, prepend));
  const pairs: ScorePair[] = [];
  for (let i = 0; i < n; i++) {
    for (let j = 0; j < n; j++) {
      if (i !== j) pairs.push({ premise: texts[i], hypothesis: texts[j] });
    }
  }
  const scores = await scoreWithRetry(scorer, pairs, config.batchSize);
  const matrix = new Array<number>(n * n).fill(1.0);
  let cursor = 0;
  for (let i = 0; i < n; i++) {
    for (let j = 0; j < n; j++) {
      if (i !== j) matrix[i * n + j] = round6(scores[cursor++]);
    }
  }
  return {
    query_id: record.query_id,
    n,
    responses: record.responses,
    entailment: matrix,
    question: record.question,
    extra: record.extra,
  };
}

export async function scoreRecords(
  records: RawRecord[],
  scorer: EntailmentScorer,
  config: AdapterConfig,
): Promise<ScoredRecord[]> {
  const scored: ScoredRecord[] = [];
  for (const record of records) {
    scored.push(await scoreRecord(record, scorer, config));
  }
  return scored;
}
