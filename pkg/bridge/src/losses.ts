/** Training-objective arithmetic, kept in exact agreement with the search
 * side's pure functions (they are cross-checked in the test suite). */

export function lmLoss(tokenLogprobs: number[]): number {
  if (tokenLogprobs.length === 0) throw new Error("tokenLogprobs is empty");
  let total = 0;
  for (const lp of tokenLogprobs) {
    if (lp > 0) throw new Error(`log-probability ${lp} is above 0`);
    total -= lp;
  }
  return total;
}

export function ppl(tokenLogprobs: number[]): number {
  return Math.exp(lmLoss(tokenLogprobs) / tokenLogprobs.length);
}

export function vsLoss(tokenScores: number[], answerCorrect: boolean): number {
  if (tokenScores.length === 0) throw new Error("tokenScores is empty");
  const label = answerCorrect ? 1 : 0;
  let total = 0;
  for (const score of tokenScores) {
    if (score < 0 || score > 1) throw new Error(`token score ${score} outside [0, 1]`);
    total += (score - label) ** 2;
  }
  return total;
}

export interface LossReport {
  lmLoss: number;
  vsLoss: number;
  vpLoss: number;
  total: number;
}

export function verifierTotalLoss(vs: number, lm: number, vp: number): LossReport {
  if (vs < 0 || lm < 0 || vp < 0) throw new Error("losses must be non-negative");
  return { lmLoss: lm, vsLoss: vs, vpLoss: vp, total: vs + lm + vp };
}
