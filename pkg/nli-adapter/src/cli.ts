#!/usr/bin/env node
import { parseArgs } from "node:util";
import { pathToFileURL } from "node:url";
import { makeScorer } from "./backends.js";
import { scoreRecords } from "./adapter.js";
import { readRawRecords, writeMetadata, writeScoredRecords } from "./jsonl.js";
import { DEFAULT_CONFIG, type AdapterConfig } from "./types.js";

const USAGE = `nli-score --input raw.jsonl --output scored.jsonl [--model <id|lexical>] [--batch <k>]
          [--no-question] [--device <hint>] [--meta <path>]

Reads response-only query records and writes the same records with an n x n
directed entailment matrix (flat row-major, diagonal 1.0), ready for the
estimator toolkit's strict loader.`;

export async function run(argv: string[]): Promise<number> {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      options: {
        input: { type: "string" },
        output: { type: "string" },
        model: { type: "string", default: DEFAULT_CONFIG.model },
        batch: { type: "string", default: String(DEFAULT_CONFIG.batchSize) },
        "no-question": { type: "boolean", default: false },
        device: { type: "string" },
        meta: { type: "string" },
        help: { type: "boolean", default: false },
      },
    });
  } catch (err) {
    console.error(String(err));
    console.error(USAGE);
    return 2;
  }
  const { values } = parsed;
  if (values.help) {
    console.log(USAGE);
    return 0;
  }
  if (!values.input || !values.output) {
    console.error("error: --input and --output are required");
    console.error(USAGE);
    return 2;
  }
  const batchSize = Number(values.batch);
  if (!Number.isInteger(batchSize) || batchSize < 1) {
    console.error(`error: --batch must be a positive integer, got ${values.batch}`);
    return 2;
  }
  const config: AdapterConfig = {
    model: values.model!,
    batchSize,
    prependQuestion: !values["no-question"],
    device: values.device,
  };
  try {
    const records = readRawRecords(values.input);
    const scorer = makeScorer(config);
    const scored = await scoreRecords(records, scorer, config);
    writeScoredRecords(values.output, scored);
    const prepended = config.prependQuestion && scorer.usesQuestionContext;
    writeMetadata(values.meta ?? `${values.output}.meta.json`, config, prepended, scored.length);
    console.error(`scored ${scored.length} records with ${config.model}`);
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  run(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
