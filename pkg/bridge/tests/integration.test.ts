/** Full-stack check: train a tiny generator, serve it together with fresh
 * verifier heads, and run the search side's remote-actor evaluation and
 * ppl scoring against the live service. */
import { execFileSync, spawn, ChildProcess } from "child_process";
import * as fs from "fs";
import * as path from "path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { finetuneGenerator } from "../src/train";
import { tempFile, toySeedFile } from "./helpers";

const PORT = 18_400 + (process.pid % 1000);
let server: ChildProcess | undefined;
let datasetPath: string;

async function waitForServer(): Promise<void> {
  for (let attempt = 0; attempt < 100; attempt++) {
    try {
      const response = await fetch(`http://127.0.0.1:${PORT}/ppl`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ text: "Start with 10.\n12 = 10 + 2. " }),
      });
      if (response.status === 200) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 100));
  }
  throw new Error("bridge server did not come up");
}

beforeAll(async () => {
  datasetPath = toySeedFile(4);
  const trained = finetuneGenerator({
    role: "generator",
    datasetPath,
    epochs: 40,
    batchSize: 4,
    learningRate: 0.5,
  });
  const checkpoint = tempFile("generator.ckpt.json", JSON.stringify(trained.model.toJSON()));
  const cli = path.join(__dirname, "..", "dist", "cli.js");
  expect(fs.existsSync(cli)).toBe(true);
  server = spawn(
    "node",
    [cli, "serve", "--port", String(PORT), "--generator", checkpoint, "--seed", "5"],
    { stdio: "ignore" }
  );
  await waitForServer();
}, 60_000);

afterAll(() => {
  server?.kill();
});

describe("search side against the live bridge", () => {
  it("remote-actor guided evaluation completes over the wire", () => {
    const out = execFileSync(
      "verisearch",
      [
        "eval",
        "--strategy", "core",
        "--num-paths", "4",
        "--actors", "remote",
        "--endpoint", `http://127.0.0.1:${PORT}`,
        "--dataset", datasetPath,
        "--iterations", "4",
        "--expansion-width", "8",
        "--rollout-max-tokens", "60",
        "--path-max-tokens", "80",
        "--seed", "2",
      ],
      { timeout: 120_000 }
    ).toString();
    expect(out).toContain("strategy=core");
    expect(out).toContain("accuracy=");
  }, 120_000);

  it("remote ppl capability agrees with a local recomputation", () => {
    const script = `
import json, sys
from verisearch.actors.remote import remote_actor_bundle
bundle = remote_actor_bundle(sys.argv[1])
value = bundle.text_ppl("Start with 10. Then add 2.\\n12 = 10 + 2. [ANS] 12.")
print(json.dumps({"ppl": value}))
`;
    const out = execFileSync(
      "python3", ["-c", script, `http://127.0.0.1:${PORT}`], { timeout: 30_000 }
    ).toString();
    const { ppl } = JSON.parse(out);
    expect(ppl).toBeGreaterThanOrEqual(1.0);
    expect(Number.isFinite(ppl)).toBe(true);
  }, 30_000);
});
