import { describe, expect, it } from "vitest";

import { finetuneGenerator } from "../src/train";
import { sampleDplus } from "../src/sample";
import { pythonJson, tempFile, toySeedFile } from "./helpers";

function trainedModel() {
  // a few high-LR epochs make the bigram model reliably close its
  // sequences, so sampled completions carry extractable answers
  const dataset = toySeedFile(6);
  const result = finetuneGenerator({
    role: "generator",
    datasetPath: dataset,
    epochs: 40,
    batchSize: 6,
    learningRate: 0.5,
  });
  return { model: result.model, dataset };
}

describe("solution sampling", () => {
  const { model, dataset } = trainedModel();

  it("draws up to the requested number of labeled samples per question", () => {
    const summary = sampleDplus(model, dataset, { samplesPerQuestion: 5, seed: 3 });
    expect(summary.generated).toBe(6 * 5);
    expect(summary.records.length + summary.skippedAnswerless).toBe(summary.generated);
    for (const record of summary.records as any[]) {
      expect(typeof record.correct).toBe("boolean");
      expect(record.ppl).toBeGreaterThanOrEqual(1);
    }
  });

  it("is deterministic at temperature zero with one sample", () => {
    const a = sampleDplus(model, dataset, { samplesPerQuestion: 1, temperature: 0, seed: 1 });
    const b = sampleDplus(model, dataset, { samplesPerQuestion: 1, temperature: 0, seed: 2 });
    expect(a.records).toEqual(b.records);
  });

  it("emits records the search-side dataset loader accepts", () => {
    const summary = sampleDplus(model, dataset, { samplesPerQuestion: 3, seed: 9 });
    expect(summary.records.length).toBeGreaterThan(0);
    const file = tempFile(
      "dplus.jsonl",
      (summary.records as any[]).map((r) => JSON.stringify(r)).join("\n") + "\n"
    );
    const loaded = pythonJson(
      `
import json, sys
from verisearch.corpus import load_dataset, serialize_samples
path = json.load(sys.stdin)
samples = load_dataset(path)
again = load_dataset(serialize_samples(samples).split("\\n"))
print(json.dumps({"count": len(samples), "round_trip": again == samples}))
`,
      file
    );
    expect(loaded.count).toBe(summary.records.length);
    expect(loaded.round_trip).toBe(true);
  });
});
