/** Solution sampling: draw M completions per seed question, label each by
 * answer correctness, and emit records the dataset loaders round-trip. */
import { answersEqual, extractAnswer, loadSeedSamples, parseNumeric } from "./corpus";
import { ppl } from "./losses";
import { CausalLm } from "./model";
import { Rng } from "./rand";

export interface DplusOptions {
  samplesPerQuestion: number;
  temperature?: number;
  maxTokens?: number;
  seed?: number;
}

export interface DplusSummary {
  records: object[];
  generated: number;
  skippedAnswerless: number;
}

export function sampleDplus(
  model: CausalLm,
  seedDatasetPath: string,
  options: DplusOptions
): DplusSummary {
  const { samplesPerQuestion } = options;
  if (samplesPerQuestion < 1) throw new Error("samplesPerQuestion must be >= 1");
  const temperature = options.temperature ?? 0.7;
  const maxTokens = options.maxTokens ?? 300;
  const rng = new Rng(options.seed ?? 19_990_303);
  const samples = loadSeedSamples(seedDatasetPath);
  const records: object[] = [];
  let generated = 0;
  let skipped = 0;
  for (const sample of samples) {
    const contextIds = [model.vocab.bosId, ...model.vocab.encode(`${sample.question}\n`)];
    for (let draw = 0; draw < samplesPerQuestion; draw++) {
      const sequence = model.generate(contextIds.slice(1), maxTokens, temperature, rng);
      generated += 1;
      const text = sequence.tokens.join("");
      const answer = sequence.ended ? extractAnswer(text) : null;
      if (answer === null) {
        skipped += 1; // no extractable final answer: unusable for labeling
        continue;
      }
      records.push({
        question: sample.question,
        answer: `${text}\n#### ${answer}`,
        correct: answersEqual(answer, parseNumeric(sample.groundTruth)),
        ppl: sequence.logprobs.length ? ppl(sequence.logprobs) : 1.0,
      });
    }
  }
  return { records, generated, skippedAnswerless: skipped };
}
