import { readFileSync, writeFileSync } from "node:fs";
import type { AdapterConfig, RawRecord, ScoredRecord } from "./types.js";

const KNOWN_KEYS = new Set(["query_id", "question", "responses", "n", "entailment"]);

export function readRawRecords(path: string): RawRecord[] {
  const records: RawRecord[] = [];
  const lines = readFileSync(path, "utf-8").split("\n");
  lines.forEach((line, index) => {
    if (line.trim().length === 0) return;
    let obj: Record<string, unknown>;
    try {
      obj = JSON.parse(line);
    } catch (err) {
      throw new Error(`${path}: line ${index + 1}: invalid JSON (${err})`);
    }
    const { query_id, question, responses } = obj as {
      query_id?: unknown;
      question?: unknown;
      responses?: unknown;
    };
    if (typeof query_id !== "string" || query_id.length === 0) {
      throw new Error(`${path}: line ${index + 1}: missing query_id`);
    }
    if (!Array.isArray(responses) || responses.length === 0 || !responses.every((r) => typeof r === "string")) {
      throw new Error(`${path}: line ${index + 1}: responses must be a nonempty list of strings`);
    }
    const extra: Record<string, unknown> = {};
    for (const [key, value] of Object.entries(obj)) {
      if (!KNOWN_KEYS.has(key)) extra[key] = value;
    }
    records.push({
      query_id,
      responses: responses as string[],
      question: typeof question === "string" ? question : undefined,
      extra,
    });
  });
  return records;
}

export function writeScoredRecords(path: string, records: ScoredRecord[]): void {
  const lines = records.map((record) => {
    const obj: Record<string, unknown> = {
      query_id: record.query_id,
      n: record.n,
      responses: record.responses,
      entailment: record.entailment,
      ...record.extra,
    };
    if (record.question !== undefined) obj.question = record.question;
    return JSON.stringify(obj);
  });
  writeFileSync(path, lines.join("\n") + (lines.length ? "\n" : ""), "utf-8");
}

/** Sidecar metadata so the scored JSONL itself stays loader-clean. */
export function writeMetadata(
  path: string,
  config: AdapterConfig,
  questionPrepended: boolean,
  recordCount: number,
): void {
  const meta = {
    tool: "nli-score",
    model: config.model,
    batch_size: config.batchSize,
    template: questionPrepended ? "question prepended to premise and hypothesis" : "response text only",
    records: recordCount,
  };
  writeFileSync(path, JSON.stringify(meta, null, 2) + "\n", "utf-8");
}
