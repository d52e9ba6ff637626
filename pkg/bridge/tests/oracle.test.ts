/** Cross-checks against the search-side pure functions: the bridge's loss
 * accounting must agree with them on identical inputs. */
import { describe, expect, it } from "vitest";

import { CausalLm, PathVerifierModel, StepVerifierModel } from "../src/model";
import { Rng } from "../src/rand";
import { pythonJson, tinyModels } from "./helpers";

const LM_VS_SCRIPT = `
import json, sys
from verisearch.scoring import lm_loss, vs_loss
data = json.load(sys.stdin)
out = {
    "lm": [sum(lm_loss(seq) for seq in batch) for batch in data["lm_batches"]],
    "vs": [sum(vs_loss(item["scores"], item["correct"]) for item in batch)
           for batch in data["vs_batches"]],
}
print(json.dumps(out))
`;

describe("loss-oracle agreement", () => {
  it("bridge lm and vs batch losses match the reference functions on 50 batches", () => {
    const { vocab } = tinyModels();
    const rng = new Rng(17);
    const lmBatches: number[][][] = [];
    const vsBatches: { scores: number[]; correct: boolean }[][] = [];
    const bridgeLm: number[] = [];
    const bridgeVs: number[] = [];

    for (let batchIndex = 0; batchIndex < 50; batchIndex++) {
      // fresh tiny random models per batch: the loss is reported before the
      // parameter update, so reported == recomputable from the same logprobs
      const lm = new CausalLm(vocab, 1000 + batchIndex);
      const step = new StepVerifierModel(vocab, 2000 + batchIndex);
      const batch: { ids: number[]; correct: boolean }[] = [];
      const size = 1 + rng.int(4);
      for (let i = 0; i < size; i++) {
        const len = 1 + rng.int(12);
        const ids = Array.from({ length: len }, () => rng.int(vocab.size));
        batch.push({ ids, correct: rng.next() < 0.5 });
      }

      lmBatches.push(batch.map(({ ids }) => lm.scoreTokens([], ids)));
      bridgeLm.push(lm.trainStep(batch.map((b) => b.ids), 1e-5, 1.0));

      vsBatches.push(
        batch.map(({ ids, correct }) => ({
          scores: ids.map((id) => step.tokenScore(id)),
          correct,
        }))
      );
      bridgeVs.push(step.trainStep(batch, 1e-6, 1.0).vs);
    }

    const oracle = pythonJson(LM_VS_SCRIPT, { lm_batches: lmBatches, vs_batches: vsBatches });
    for (let i = 0; i < 50; i++) {
      expect(Math.abs(bridgeLm[i] - oracle.lm[i])).toBeLessThanOrEqual(1e-4);
      expect(Math.abs(bridgeVs[i] - oracle.vs[i])).toBeLessThanOrEqual(1e-4);
    }
  });

  it("path verifier loss matches a direct mse computation", () => {
    const { vocab } = tinyModels();
    const model = new PathVerifierModel(vocab, 5);
    const rng = new Rng(5);
    const batch = Array.from({ length: 6 }, () => ({
      ids: Array.from({ length: 1 + rng.int(8) }, () => rng.int(vocab.size)),
      correct: rng.next() < 0.5,
    }));
    const expected = batch.reduce((total, { ids, correct }) => {
      const score = model.scorePath(ids.map((id) => vocab.token(id)).join(""));
      return total + (score - (correct ? 1 : 0)) ** 2;
    }, 0);
    expect(model.trainStep(batch, 1e-5, 1.0)).toBeCloseTo(expected, 8);
  });
});
