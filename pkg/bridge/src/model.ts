/**
 * Desk-scale models behind the serving endpoints: a bigram causal LM for
 * generation and perplexity, a token-level regression head (plus its own
 * LM) for step scores, and a pooled-embedding regression head for path
 * scores. Everything is hand-differentiated; any causal LM exposing token
 * log-probabilities could stand in behind the same wire protocol.
 */
import { Rng } from "./rand";
import { Vocab } from "./tokenizer";

export interface GeneratedSequence {
  tokens: string[];
  logprobs: number[];
  ended: boolean;
}

export interface FirstTokenAlternative {
  tokenId: number;
  logprob: number;
  isEos: boolean;
}

function logSoftmax(row: Float64Array): Float64Array {
  let max = -Infinity;
  for (const v of row) max = Math.max(max, v);
  let sum = 0;
  for (const v of row) sum += Math.exp(v - max);
  const logZ = max + Math.log(sum);
  const out = new Float64Array(row.length);
  for (let i = 0; i < row.length; i++) out[i] = row[i] - logZ;
  return out;
}

function sigmoid(z: number): number {
  return 1 / (1 + Math.exp(-z));
}

/** Scale a sparse gradient in place so its global L2 norm is at most `clip`. */
export function clipGradients(grads: Map<number, number>, clip: number): void {
  let squared = 0;
  for (const g of grads.values()) squared += g * g;
  const norm = Math.sqrt(squared);
  if (norm > clip && norm > 0) {
    const scale = clip / norm;
    for (const [k, g] of grads) grads.set(k, g * scale);
  }
}

export class CausalLm {
  readonly vocab: Vocab;
  readonly logits: Float64Array; // row-major [prev * V + next]

  constructor(vocab: Vocab, seed = 0, logits?: Float64Array) {
    this.vocab = vocab;
    const size = vocab.size * vocab.size;
    if (logits) {
      this.logits = logits;
    } else {
      const rng = new Rng(seed ^ 0x5eed);
      this.logits = new Float64Array(size);
      for (let i = 0; i < size; i++) this.logits[i] = 0.1 * rng.gaussian();
    }
  }

  private row(prev: number): Float64Array {
    const V = this.vocab.size;
    return this.logits.subarray(prev * V, (prev + 1) * V);
  }

  logProbs(prev: number): Float64Array {
    return logSoftmax(this.row(prev));
  }

  /** Per-token log-probabilities of `ids` conditioned on `contextIds`
   * (with begin-of-sequence prepended). */
  scoreTokens(contextIds: number[], ids: number[]): number[] {
    let prev = contextIds.length ? contextIds[contextIds.length - 1] : this.vocab.bosId;
    const out: number[] = [];
    for (const id of ids) {
      out.push(this.logProbs(prev)[id]);
      prev = id;
    }
    return out;
  }

  firstTokenAlternatives(
    contextIds: number[],
    width: number,
    bannedIds: Set<number>
  ): FirstTokenAlternative[] {
    const prev = contextIds.length ? contextIds[contextIds.length - 1] : this.vocab.bosId;
    const lps = this.logProbs(prev);
    const candidates: FirstTokenAlternative[] = [];
    for (let id = 0; id < lps.length; id++) {
      if (id === this.vocab.bosId || bannedIds.has(id)) continue;
      candidates.push({ tokenId: id, logprob: lps[id], isEos: id === this.vocab.eosId });
    }
    candidates.sort((a, b) => b.logprob - a.logprob);
    return candidates.slice(0, width);
  }

  generate(
    contextIds: number[],
    maxTokens: number,
    temperature: number,
    rng: Rng,
    firstToken?: number
  ): GeneratedSequence {
    const tokens: string[] = [];
    const logprobs: number[] = [];
    let prev = contextIds.length ? contextIds[contextIds.length - 1] : this.vocab.bosId;
    let ended = false;
    for (let step = 0; step < maxTokens; step++) {
      const lps = this.logProbs(prev);
      let next: number;
      if (step === 0 && firstToken !== undefined) {
        next = firstToken;
      } else if (temperature <= 0) {
        next = 0;
        for (let id = 1; id < lps.length; id++) if (lps[id] > lps[next]) next = id;
      } else {
        // sample from the temperature-scaled distribution
        const scaled = new Float64Array(lps.length);
        let max = -Infinity;
        for (let id = 0; id < lps.length; id++) {
          scaled[id] = lps[id] / temperature;
          max = Math.max(max, scaled[id]);
        }
        let total = 0;
        for (let id = 0; id < lps.length; id++) {
          scaled[id] = Math.exp(scaled[id] - max);
          total += scaled[id];
        }
        let draw = rng.next() * total;
        next = lps.length - 1;
        for (let id = 0; id < lps.length; id++) {
          draw -= scaled[id];
          if (draw <= 0) {
            next = id;
            break;
          }
        }
      }
      if (next === this.vocab.eosId) {
        ended = true;
        break;
      }
      tokens.push(this.vocab.token(next));
      logprobs.push(lps[next]);
      prev = next;
    }
    return { tokens, logprobs, ended };
  }

  /** One SGD step on the language-modeling loss over a batch of id
   * sequences. Returns the batch loss before the update. */
  trainStep(batch: number[][], lr: number, clip: number): number {
    const V = this.vocab.size;
    const grads = new Map<number, number>();
    let loss = 0;
    for (const ids of batch) {
      let prev = this.vocab.bosId;
      for (const id of ids) {
        const lps = this.logProbs(prev);
        loss -= lps[id];
        const base = prev * V;
        for (let next = 0; next < V; next++) {
          const p = Math.exp(lps[next]);
          const g = p - (next === id ? 1 : 0);
          const key = base + next;
          grads.set(key, (grads.get(key) ?? 0) + g);
        }
        prev = id;
      }
    }
    clipGradients(grads, clip);
    for (const [key, g] of grads) this.logits[key] -= lr * g;
    return loss;
  }

  toJSON(): object {
    return {
      kind: "causal_lm",
      vocab: this.vocab.tokens,
      logits: Array.from(this.logits),
    };
  }

  static fromJSON(payload: any): CausalLm {
    const vocab = new Vocab(payload.vocab);
    return new CausalLm(vocab, 0, Float64Array.from(payload.logits));
  }
}

export class StepVerifierModel {
  readonly vocab: Vocab;
  readonly lm: CausalLm;
  readonly scoreLogit: Float64Array;
  bias: number;

  constructor(vocab: Vocab, seed = 0, lm?: CausalLm, scoreLogit?: Float64Array, bias = 0) {
    this.vocab = vocab;
    this.lm = lm ?? new CausalLm(vocab, seed ^ 0x51e9);
    if (scoreLogit) {
      this.scoreLogit = scoreLogit;
    } else {
      const rng = new Rng(seed ^ 0x7ea1);
      this.scoreLogit = new Float64Array(vocab.size);
      for (let i = 0; i < vocab.size; i++) this.scoreLogit[i] = 0.1 * rng.gaussian();
    }
    this.bias = bias;
  }

  tokenScore(id: number): number {
    return sigmoid(this.scoreLogit[id] + this.bias);
  }

  /** Inference-time partial-path score: the newest token's head output. */
  scorePartial(partialPath: string): number {
    const ids = this.vocab.encode(partialPath);
    if (ids.length === 0) return 0.5;
    return this.tokenScore(ids[ids.length - 1]);
  }

  /** Joint step on verification MSE plus the language-modeling task.
   * Returns the per-component batch losses before the update. */
  trainStep(
    batch: { ids: number[]; correct: boolean }[],
    lr: number,
    clip: number
  ): { vs: number; lm: number } {
    const headGrads = new Map<number, number>(); // vocab.size entries + bias at index -1
    let vs = 0;
    for (const { ids, correct } of batch) {
      const label = correct ? 1 : 0;
      for (const id of ids) {
        const s = this.tokenScore(id);
        vs += (s - label) ** 2;
        const g = 2 * (s - label) * s * (1 - s);
        headGrads.set(id, (headGrads.get(id) ?? 0) + g);
        headGrads.set(-1, (headGrads.get(-1) ?? 0) + g);
      }
    }
    clipGradients(headGrads, clip);
    for (const [id, g] of headGrads) {
      if (id === -1) this.bias -= lr * g;
      else this.scoreLogit[id] -= lr * g;
    }
    const lm = this.lm.trainStep(batch.map((b) => b.ids), lr, clip);
    return { vs, lm };
  }

  toJSON(): object {
    return {
      kind: "step_verifier",
      vocab: this.vocab.tokens,
      lm_logits: Array.from(this.lm.logits),
      score_logit: Array.from(this.scoreLogit),
      bias: this.bias,
    };
  }

  static fromJSON(payload: any): StepVerifierModel {
    const vocab = new Vocab(payload.vocab);
    const lm = new CausalLm(vocab, 0, Float64Array.from(payload.lm_logits));
    return new StepVerifierModel(
      vocab, 0, lm, Float64Array.from(payload.score_logit), payload.bias
    );
  }
}

export class PathVerifierModel {
  static readonly DIM = 16;
  readonly vocab: Vocab;
  readonly embedSeed: number;
  readonly embed: Float64Array; // frozen random features [id * DIM + j]
  readonly weights: Float64Array;
  bias: number;

  constructor(vocab: Vocab, seed = 0, weights?: Float64Array, bias = 0) {
    this.vocab = vocab;
    this.embedSeed = seed;
    const rng = new Rng(seed ^ 0x9a7b);
    this.embed = new Float64Array(vocab.size * PathVerifierModel.DIM);
    for (let i = 0; i < this.embed.length; i++) this.embed[i] = rng.gaussian();
    this.weights = weights ?? new Float64Array(PathVerifierModel.DIM);
    this.bias = bias;
  }

  private pool(ids: number[]): Float64Array {
    const d = PathVerifierModel.DIM;
    const out = new Float64Array(d);
    if (ids.length === 0) return out;
    for (const id of ids) {
      const base = id * d;
      for (let j = 0; j < d; j++) out[j] += this.embed[base + j];
    }
    for (let j = 0; j < d; j++) out[j] /= ids.length;
    return out;
  }

  scorePath(path: string): number {
    const pooled = this.pool(this.vocab.encode(path));
    let z = this.bias;
    for (let j = 0; j < pooled.length; j++) z += this.weights[j] * pooled[j];
    return sigmoid(z);
  }

  trainStep(batch: { ids: number[]; correct: boolean }[], lr: number, clip: number): number {
    const d = PathVerifierModel.DIM;
    const grads = new Map<number, number>(); // 0..d-1 weights, -1 bias
    let vp = 0;
    for (const { ids, correct } of batch) {
      const label = correct ? 1 : 0;
      const pooled = this.pool(ids);
      let z = this.bias;
      for (let j = 0; j < d; j++) z += this.weights[j] * pooled[j];
      const s = sigmoid(z);
      vp += (s - label) ** 2;
      const g = 2 * (s - label) * s * (1 - s);
      for (let j = 0; j < d; j++) grads.set(j, (grads.get(j) ?? 0) + g * pooled[j]);
      grads.set(-1, (grads.get(-1) ?? 0) + g);
    }
    clipGradients(grads, clip);
    for (const [j, g] of grads) {
      if (j === -1) this.bias -= lr * g;
      else this.weights[j] -= lr * g;
    }
    return vp;
  }

  toJSON(): object {
    return {
      kind: "path_verifier",
      vocab: this.vocab.tokens,
      embed_seed: this.embedSeed,
      weights: Array.from(this.weights),
      bias: this.bias,
    };
  }

  static fromJSON(payload: any): PathVerifierModel {
    const vocab = new Vocab(payload.vocab);
    return new PathVerifierModel(
      vocab, payload.embed_seed ?? 0, Float64Array.from(payload.weights), payload.bias
    );
  }
}
