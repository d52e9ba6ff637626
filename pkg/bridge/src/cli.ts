/** Entry points: serve, train, sample. Configuration via flags and a JSON
 * job file for training. */
import * as fs from "fs";

import { loadSeedSamples, writeRecords } from "./corpus";
import { CausalLm, PathVerifierModel, StepVerifierModel } from "./model";
import { sampleDplus } from "./sample";
import { buildApp } from "./server";
import { finetuneGenerator, finetuneVerifiers, TrainJobSpec } from "./train";
import { Vocab } from "./tokenizer";

function flag(args: string[], name: string): string | undefined {
  const idx = args.indexOf(`--${name}`);
  return idx >= 0 ? args[idx + 1] : undefined;
}

function loadCheckpoint(path: string): any {
  return JSON.parse(fs.readFileSync(path, "utf-8"));
}

function freshModels(datasetPath: string, seed: number) {
  const samples = loadSeedSamples(datasetPath);
  const vocab = Vocab.build(
    samples.flatMap((s) => [s.question, s.path, s.groundTruth])
  );
  return {
    generator: new CausalLm(vocab, seed),
    stepVerifier: new StepVerifierModel(vocab, seed + 1),
    pathVerifier: new PathVerifierModel(vocab, seed + 2),
  };
}

function cmdServe(args: string[]): number {
  const port = Number(flag(args, "port") ?? "8977");
  const seed = Number(flag(args, "seed") ?? "0");
  const initFrom = flag(args, "init-from");
  let generator: CausalLm;
  let stepVerifier: StepVerifierModel;
  let pathVerifier: PathVerifierModel;
  const generatorPath = flag(args, "generator");
  if (generatorPath) {
    generator = CausalLm.fromJSON(loadCheckpoint(generatorPath));
    const stepPath = flag(args, "step-verifier");
    const pathPath = flag(args, "path-verifier");
    stepVerifier = stepPath
      ? StepVerifierModel.fromJSON(loadCheckpoint(stepPath))
      : new StepVerifierModel(generator.vocab, seed + 1);
    pathVerifier = pathPath
      ? PathVerifierModel.fromJSON(loadCheckpoint(pathPath))
      : new PathVerifierModel(generator.vocab, seed + 2);
  } else if (initFrom) {
    ({ generator, stepVerifier, pathVerifier } = freshModels(initFrom, seed));
  } else {
    console.error("serve needs --generator <ckpt> or --init-from <data.jsonl>");
    return 2;
  }
  const app = buildApp({ generator, stepVerifier, pathVerifier, seed });
  app.listen(port, () => {
    console.log(`serving on port ${port} (vocab ${generator.vocab.size})`);
  });
  return 0;
}

function cmdTrain(args: string[]): number {
  const configPath = flag(args, "config");
  if (!configPath) {
    console.error("train needs --config <job.json>");
    return 2;
  }
  const spec: TrainJobSpec = JSON.parse(fs.readFileSync(configPath, "utf-8"));
  const outPath = flag(args, "out") ?? `${spec.role}.ckpt.json`;
  if (spec.role === "generator") {
    const result = finetuneGenerator(spec);
    fs.writeFileSync(
      outPath,
      JSON.stringify({ ...result.model.toJSON(), loss_curve: result.lossCurve })
    );
    const first = result.lossCurve[0];
    const last = result.lossCurve[result.lossCurve.length - 1];
    console.log(
      `generator: ${result.lossCurve.length} steps, lm loss ${first.toFixed(3)} -> ${last.toFixed(3)}`
    );
    for (const entry of result.rateLog) {
      console.log(`  epoch ${entry.epoch}: lr ${entry.rate}`);
    }
    return 0;
  }
  // verifier jobs train both heads from one labeled dataset
  const pathSpec: TrainJobSpec = { ...spec, role: "path_verifier" };
  const stepSpec: TrainJobSpec = { ...spec, role: "step_verifier" };
  const result = finetuneVerifiers(stepSpec, pathSpec);
  fs.writeFileSync(outPath, JSON.stringify(result.stepModel.toJSON()));
  const pathOut = outPath.replace(/(\.ckpt\.json|\.json)$/, ".path$1");
  fs.writeFileSync(pathOut, JSON.stringify(result.pathModel.toJSON()));
  console.log(
    `verifiers: total ${result.report.total.toFixed(4)} = vs ${result.report.vsLoss.toFixed(4)}` +
      ` + lm ${result.report.lmLoss.toFixed(4)} + vp ${result.report.vpLoss.toFixed(4)}`
  );
  return 0;
}

function cmdSample(args: string[]): number {
  const generatorPath = flag(args, "generator");
  const dataset = flag(args, "dataset");
  const out = flag(args, "out") ?? "dplus.jsonl";
  if (!generatorPath || !dataset) {
    console.error("sample needs --generator <ckpt> and --dataset <seed.jsonl>");
    return 2;
  }
  const model = CausalLm.fromJSON(loadCheckpoint(generatorPath));
  const summary = sampleDplus(model, dataset, {
    samplesPerQuestion: Number(flag(args, "m") ?? "100"),
    temperature: Number(flag(args, "temperature") ?? "0.7"),
    maxTokens: Number(flag(args, "max-tokens") ?? "300"),
    seed: Number(flag(args, "seed") ?? "19990303"),
  });
  writeRecords(out, summary.records as object[]);
  console.log(
    `sampled ${summary.generated} completions, kept ${summary.records.length}, ` +
      `skipped ${summary.skippedAnswerless} answerless -> ${out}`
  );
  return 0;
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  switch (command) {
    case "serve":
      return cmdServe(rest);
    case "train":
      return cmdTrain(rest);
    case "sample":
      return cmdSample(rest);
    default:
      console.error("usage: cli.js <serve|train|sample> [flags]");
      return 2;
  }
}

if (require.main === module) {
  const code = main(process.argv.slice(2));
  if (code !== 0) process.exit(code);
}
