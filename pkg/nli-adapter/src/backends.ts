import type { AdapterConfig, ScorePair } from "./types.js";

/** Scores directed premise -> hypothesis entailment probabilities in [0, 1]. */
export interface EntailmentScorer {
  readonly name: string;
  /** Whether the question-prepended template helps this scorer.  Token
   * overlap must see the answers alone: a shared question would inflate
   * every cross-pair score. */
  readonly usesQuestionContext: boolean;
  scoreBatch(pairs: ScorePair[]): Promise<number[]>;
}

const TOKEN_SPLIT = /[^\p{L}\p{N}]+/u;

export function tokenize(text: string): string[] {
  return text.toLowerCase().split(TOKEN_SPLIT).filter((t) => t.length > 0);
}

/**
 * Deterministic offline fallback: directed token containment.
 *
 * The premise entails the hypothesis to the extent that the hypothesis'
 * tokens are covered by the premise.  A crude proxy, but reproducible with
 * no model weights, which is what the tests and fixtures need.
 */
export class LexicalOverlapScorer implements EntailmentScorer {
  readonly name = "lexical";
  readonly usesQuestionContext = false;

  async scoreBatch(pairs: ScorePair[]): Promise<number[]> {
    return pairs.map(({ premise, hypothesis }) => {
      const hypTokens = tokenize(hypothesis);
      if (hypTokens.length === 0) return 1.0; // nothing to entail
      const premiseTokens = new Set(tokenize(premise));
      const covered = hypTokens.filter((t) => premiseTokens.has(t)).length;
      return covered / hypTokens.length;
    });
  }
}

async function tryImport(specifier: string): Promise<any | undefined> {
  try {
    return await import(specifier);
  } catch {
    return undefined;
  }
}

/**
 * Transformer NLI backend via transformers.js, loaded lazily so the adapter
 * works offline with the lexical scorer.  The entailment probability is the
 * softmax mass of the model's entailment class; neutral and contradiction
 * mass is discarded.
 */
export class TransformersScorer implements EntailmentScorer {
  readonly name: string;
  readonly usesQuestionContext = true;
  private pipelinePromise?: Promise<(input: string[], options: object) => Promise<unknown>>;

  constructor(private readonly model: string, private readonly device?: string) {
    this.name = model;
  }

  private async pipeline() {
    if (!this.pipelinePromise) {
      this.pipelinePromise = (async () => {
        const mod =
          (await tryImport("@huggingface/transformers")) ?? (await tryImport("@xenova/transformers"));
        if (!mod) {
          throw new Error(
            `model backend unavailable: install @huggingface/transformers (or @xenova/transformers) ` +
              `to score with ${this.model}, or pass --model lexical`,
          );
        }
        const options: Record<string, unknown> = {};
        if (this.device) options.device = this.device;
        return mod.pipeline("text-classification", this.model, options);
      })();
    }
    return this.pipelinePromise;
  }

  async scoreBatch(pairs: ScorePair[]): Promise<number[]> {
    const classify = await this.pipeline();
    const inputs = pairs.map((p) => `${p.premise} [SEP] ${p.hypothesis}`);
    const raw = (await classify(inputs, { top_k: null })) as Array<
      Array<{ label: string; score: number }>
    >;
    return raw.map((candidates) => {
      const entail = candidates.find((c) => c.label.toLowerCase().includes("entail"));
      return entail ? entail.score : 0.0;
    });
  }
}

export function makeScorer(config: AdapterConfig): EntailmentScorer {
  if (config.model === "lexical") return new LexicalOverlapScorer();
  return new TransformersScorer(config.model, config.device);
}
