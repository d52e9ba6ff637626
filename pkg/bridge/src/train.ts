/**
 * Fine-tuning jobs. The generator minimizes the language-modeling loss
 * over path-plus-answer tokens; the step verifier trains its MSE token
 * scores jointly with its own language-modeling task; the path verifier
 * trains MSE on a pooled sequence representation. The combined verifier
 * objective is reported as the plain sum of the three parts.
 */
import { loadLabeledSamples, loadSeedSamples } from "./corpus";
import { verifierTotalLoss, LossReport } from "./losses";
import { CausalLm, PathVerifierModel, StepVerifierModel } from "./model";
import { Rng } from "./rand";
import { Vocab } from "./tokenizer";

export type Role = "generator" | "step_verifier" | "path_verifier";

export interface TrainJobSpec {
  role: Role;
  datasetPath: string;
  epochs?: number;
  batchSize?: number;
  /** one learning rate per epoch (generator) or a peak rate (verifiers) */
  learningRate?: number | number[];
  warmupRatio?: number;
  gradClipNorm?: number;
  seed?: number;
}

interface ResolvedJob {
  epochs: number;
  batchSize: number;
  rates: number[];
  warmupRatio: number;
  clip: number;
  seed: number;
}

const DEFAULTS: Record<Role, Omit<ResolvedJob, "seed">> = {
  generator: { epochs: 2, batchSize: 16, rates: [1e-5, 1e-6], warmupRatio: 0, clip: 1.0 },
  step_verifier: { epochs: 2, batchSize: 16, rates: [1e-6], warmupRatio: 0.1, clip: 1.0 },
  path_verifier: { epochs: 3, batchSize: 128, rates: [1e-5], warmupRatio: 0.1, clip: 1.0 },
};

function resolve(spec: TrainJobSpec): ResolvedJob {
  const base = DEFAULTS[spec.role];
  const rates =
    spec.learningRate === undefined
      ? base.rates
      : Array.isArray(spec.learningRate)
        ? spec.learningRate
        : [spec.learningRate];
  return {
    epochs: spec.epochs ?? base.epochs,
    batchSize: spec.batchSize ?? base.batchSize,
    rates,
    warmupRatio: spec.warmupRatio ?? base.warmupRatio,
    clip: spec.gradClipNorm ?? base.clip,
    seed: spec.seed ?? 19_990_303,
  };
}

/** Epoch-indexed schedule: the listed rate for each epoch (last one
 * repeats). Used by the generator per its two-epoch setup. */
export function epochRate(rates: number[], epoch: number): number {
  return rates[Math.min(epoch, rates.length - 1)];
}

/** Warmup-then-linear-decay schedule used by the verifier jobs. */
export function warmupLinearRate(
  peak: number,
  step: number,
  totalSteps: number,
  warmupRatio: number
): number {
  const warmupSteps = Math.max(1, Math.floor(totalSteps * warmupRatio));
  if (step < warmupSteps) return (peak * (step + 1)) / warmupSteps;
  const remaining = Math.max(1, totalSteps - warmupSteps);
  return peak * Math.max(0, 1 - (step - warmupSteps) / remaining);
}

function batches<T>(items: T[], size: number, rng: Rng): T[][] {
  const shuffled = rng.shuffle([...items]);
  const out: T[][] = [];
  for (let i = 0; i < shuffled.length; i += size) out.push(shuffled.slice(i, i + size));
  return out;
}

export interface GeneratorJobResult {
  model: CausalLm;
  lossCurve: number[];
  rateLog: { epoch: number; rate: number }[];
}

export function finetuneGenerator(spec: TrainJobSpec): GeneratorJobResult {
  if (spec.role !== "generator") throw new Error("role must be 'generator'");
  const job = resolve(spec);
  const samples = loadSeedSamples(spec.datasetPath);
  if (samples.length === 0) throw new Error("dataset is empty");
  const vocab = Vocab.build(samples.flatMap((s) => [s.question, s.path, s.groundTruth]));
  const model = new CausalLm(vocab, job.seed);
  // target sequence: path plus answer tokens, closed by EOS; paths ending in
  // an "[ANS]" line already carry their answer tokens
  const sequences = samples.map((s) => {
    const text = s.path.includes("[ANS]") ? s.path : `${s.path}\n#### ${s.groundTruth}`;
    return vocab.encode(text).concat([vocab.eosId]);
  });
  const rng = new Rng(job.seed);
  const lossCurve: number[] = [];
  const rateLog: { epoch: number; rate: number }[] = [];
  for (let epoch = 0; epoch < job.epochs; epoch++) {
    const rate = epochRate(job.rates, epoch);
    rateLog.push({ epoch, rate });
    for (const batch of batches(sequences, job.batchSize, rng)) {
      lossCurve.push(model.trainStep(batch, rate, job.clip));
    }
  }
  return { model, lossCurve, rateLog };
}

export interface VerifierJobResult {
  stepModel: StepVerifierModel;
  pathModel: PathVerifierModel;
  report: LossReport;
  stepCurve: { vs: number; lm: number }[];
  pathCurve: number[];
}

export function finetuneVerifiers(
  stepSpec: TrainJobSpec,
  pathSpec: TrainJobSpec
): VerifierJobResult {
  if (stepSpec.role !== "step_verifier" || pathSpec.role !== "path_verifier") {
    throw new Error("specs must be step_verifier and path_verifier roles");
  }
  const stepJob = resolve(stepSpec);
  const pathJob = resolve(pathSpec);
  const labeled = loadLabeledSamples(stepSpec.datasetPath);
  if (labeled.length === 0) throw new Error("dataset is empty");
  const vocab = Vocab.build(labeled.flatMap((s) => [s.question, s.path]));
  const encoded = labeled.map((s) => ({ ids: vocab.encode(s.path), correct: s.correct }));

  const stepModel = new StepVerifierModel(vocab, stepJob.seed);
  const stepCurve: { vs: number; lm: number }[] = [];
  {
    const rng = new Rng(stepJob.seed);
    const perEpoch = Math.ceil(encoded.length / stepJob.batchSize);
    const total = perEpoch * stepJob.epochs;
    let step = 0;
    for (let epoch = 0; epoch < stepJob.epochs; epoch++) {
      for (const batch of batches(encoded, stepJob.batchSize, rng)) {
        const rate = warmupLinearRate(stepJob.rates[0], step, total, stepJob.warmupRatio);
        stepCurve.push(stepModel.trainStep(batch, rate, stepJob.clip));
        step += 1;
      }
    }
  }

  const pathLabeled = pathSpec.datasetPath === stepSpec.datasetPath
    ? encoded
    : loadLabeledSamples(pathSpec.datasetPath).map((s) => ({
        ids: vocab.encode(s.path),
        correct: s.correct,
      }));
  const pathModel = new PathVerifierModel(vocab, pathJob.seed);
  const pathCurve: number[] = [];
  {
    const rng = new Rng(pathJob.seed);
    const perEpoch = Math.ceil(pathLabeled.length / pathJob.batchSize);
    const total = perEpoch * pathJob.epochs;
    let step = 0;
    for (let epoch = 0; epoch < pathJob.epochs; epoch++) {
      for (const batch of batches(pathLabeled, pathJob.batchSize, rng)) {
        const rate = warmupLinearRate(pathJob.rates[0], step, total, pathJob.warmupRatio);
        pathCurve.push(pathModel.trainStep(batch, rate, pathJob.clip));
        step += 1;
      }
    }
  }

  const lastStep = stepCurve[stepCurve.length - 1];
  const lastPath = pathCurve[pathCurve.length - 1];
  return {
    stepModel,
    pathModel,
    report: verifierTotalLoss(lastStep.vs, lastStep.lm, lastPath),
    stepCurve,
    pathCurve,
  };
}
