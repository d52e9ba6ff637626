import { execFileSync } from "child_process";
import * as fs from "fs";
import * as os from "os";
import * as path from "path";

import { CausalLm, PathVerifierModel, StepVerifierModel } from "../src/model";
import { Vocab } from "../src/tokenizer";

/** Run a snippet against the search-side package, JSON on stdin/stdout. */
export function pythonJson(script: string, payload: unknown): any {
  const out = execFileSync("python3", ["-c", script], {
    input: JSON.stringify(payload),
    maxBuffer: 256 * 1024 * 1024,
  });
  return JSON.parse(out.toString());
}

export function tempFile(name: string, content: string): string {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), "bridge-test-"));
  const file = path.join(dir, name);
  fs.writeFileSync(file, content, "utf-8");
  return file;
}

/** A small arithmetic-chain seed dataset in the shared record layout. */
export function toySeedRecords(count: number): object[] {
  const records: object[] = [];
  for (let i = 0; i < count; i++) {
    const a = 10 + i;
    const b = 2 + (i % 5);
    const c = a + b;
    const d = c + 3;
    records.push({
      question: `Start with ${a}. Then add ${b}. Then add 3. What is the final value?`,
      answer: `${c} = ${a} + ${b}. ${d} = ${c} + 3. [ANS] ${d}.\n#### ${d}`,
    });
  }
  return records;
}

export function toySeedFile(count: number): string {
  const lines = toySeedRecords(count).map((r) => JSON.stringify(r));
  return tempFile("seed.jsonl", lines.join("\n") + "\n");
}

export function tinyModels(seed = 7) {
  const vocab = Vocab.build(
    toySeedRecords(6).map((r: any) => `${r.question}\n${r.answer}`)
  );
  return {
    vocab,
    generator: new CausalLm(vocab, seed),
    stepVerifier: new StepVerifierModel(vocab, seed + 1),
    pathVerifier: new PathVerifierModel(vocab, seed + 2),
  };
}
