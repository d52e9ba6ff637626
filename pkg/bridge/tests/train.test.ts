import * as fs from "fs";
import { describe, expect, it } from "vitest";

import { writeRecords } from "../src/corpus";
import { epochRate, finetuneGenerator, finetuneVerifiers, warmupLinearRate } from "../src/train";
import { tempFile, toySeedFile, toySeedRecords } from "./helpers";

function labeledFile(allCorrect = false): string {
  const rows = toySeedRecords(8).map((record: any, index) => ({
    ...record,
    correct: allCorrect ? true : index % 2 === 0,
  }));
  return tempFile("labeled.jsonl", rows.map((r) => JSON.stringify(r)).join("\n") + "\n");
}

describe("generator fine-tuning", () => {
  it("one optimization step reduces the language-modeling loss", () => {
    const dataset = toySeedFile(2);
    const result = finetuneGenerator({
      role: "generator",
      datasetPath: dataset,
      epochs: 2,
      batchSize: 2,
      learningRate: [1e-2, 1e-3], // scaled up so two steps are measurable
    });
    // with one batch per epoch, each curve entry is the full-data loss
    expect(result.lossCurve.length).toBe(2);
    expect(result.lossCurve[1]).toBeLessThan(result.lossCurve[0]);
  });

  it("uses the second learning rate in the second epoch", () => {
    const dataset = toySeedFile(3);
    const result = finetuneGenerator({ role: "generator", datasetPath: dataset });
    expect(result.rateLog).toEqual([
      { epoch: 0, rate: 1e-5 },
      { epoch: 1, rate: 1e-6 },
    ]);
    expect(epochRate([1e-5, 1e-6], 5)).toBe(1e-6);
  });

  it("rejects a dataset that is not in the record layout", () => {
    const bad = tempFile("bad.jsonl", JSON.stringify({ question: "q", answer: "no marker" }) + "\n");
    expect(() => finetuneGenerator({ role: "generator", datasetPath: bad })).toThrow(/####/);
  });
});

describe("verifier fine-tuning", () => {
  it("reports the combined objective as the exact sum of its parts", () => {
    const dataset = labeledFile();
    const result = finetuneVerifiers(
      { role: "step_verifier", datasetPath: dataset, epochs: 1, batchSize: 4 },
      { role: "path_verifier", datasetPath: dataset, epochs: 1, batchSize: 4 }
    );
    const { report } = result;
    expect(report.total).toBe(report.vsLoss + report.lmLoss + report.vpLoss);
  });

  it("drives the verification loss down on an all-correct dataset", () => {
    const dataset = labeledFile(true);
    const result = finetuneVerifiers(
      {
        role: "step_verifier",
        datasetPath: dataset,
        epochs: 30,
        batchSize: 8,
        learningRate: 0.5, // desk-scale: big steps to show the trend quickly
        warmupRatio: 0.1,
      },
      { role: "path_verifier", datasetPath: dataset, epochs: 1, batchSize: 8 }
    );
    const first = result.stepCurve[0].vs;
    const last = result.stepCurve[result.stepCurve.length - 1].vs;
    expect(last).toBeLessThan(first);
  });

  it("rejects unlabeled samples by name", () => {
    const rows: object[] = toySeedRecords(2);
    const file = tempFile("unlabeled.jsonl", rows.map((r) => JSON.stringify(r)).join("\n") + "\n");
    expect(() =>
      finetuneVerifiers(
        { role: "step_verifier", datasetPath: file },
        { role: "path_verifier", datasetPath: file }
      )
    ).toThrow(/record 1: unlabeled/);
  });
});

describe("learning-rate schedule", () => {
  it("warms up then decays linearly to zero", () => {
    const total = 100;
    const peak = 1e-5;
    const rates = Array.from({ length: total }, (_, step) =>
      warmupLinearRate(peak, step, total, 0.1)
    );
    expect(Math.max(...rates)).toBeCloseTo(peak, 12);
    expect(rates[0]).toBeLessThan(peak / 2);
    expect(rates[total - 1]).toBeLessThan(peak / 50);
    const peakIndex = rates.indexOf(Math.max(...rates));
    for (let i = 1; i <= peakIndex; i++) expect(rates[i]).toBeGreaterThanOrEqual(rates[i - 1]);
    for (let i = peakIndex + 1; i < total; i++) expect(rates[i]).toBeLessThanOrEqual(rates[i - 1]);
  });
});

describe("checkpoints", () => {
  it("writes a loadable generator checkpoint via the training path", () => {
    const dataset = toySeedFile(2);
    const result = finetuneGenerator({ role: "generator", datasetPath: dataset, epochs: 1 });
    const file = tempFile("gen.ckpt.json", JSON.stringify(result.model.toJSON()));
    const payload = JSON.parse(fs.readFileSync(file, "utf-8"));
    expect(payload.kind).toBe("causal_lm");
    expect(payload.vocab.length * payload.vocab.length).toBe(payload.logits.length);
  });

  it("writeRecords emits line-delimited JSON", () => {
    const file = tempFile("rows.jsonl", "");
    writeRecords(file, [{ a: 1 }, { b: 2 }]);
    const lines = fs.readFileSync(file, "utf-8").trim().split("\n");
    expect(lines.map((l) => JSON.parse(l))).toEqual([{ a: 1 }, { b: 2 }]);
  });
});
