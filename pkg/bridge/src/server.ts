/**
 * The inference service: /generate, /score_step, /score_path and /ppl over
 * JSON POST. Malformed requests get 400 with schema diagnostics; model
 * failures get 500. Verifier scores are clamped into [0, 1] before they
 * leave the process.
 *
 * /ppl scores a generation context ("question\npath"): the part before the
 * first newline conditions the chain and the remainder is what gets
 * scored, matching how the generator's own token log-probabilities are
 * accounted during search.
 */
import express, { Express } from "express";

import { CausalLm, PathVerifierModel, StepVerifierModel } from "./model";
import { ppl } from "./losses";
import { Rng } from "./rand";
import * as schema from "./schema";

export interface ServeOptions {
  generator: CausalLm;
  stepVerifier: StepVerifierModel;
  pathVerifier: PathVerifierModel;
  seed?: number;
}

function clamp01(value: number): number {
  return Math.min(1, Math.max(0, value));
}

export function buildApp(options: ServeOptions): Express {
  const { generator, stepVerifier, pathVerifier } = options;
  const rng = new Rng(options.seed ?? 0);
  const app = express();
  app.use(express.json({ limit: "4mb" }));

  const handle = <T>(parser: { safeParse: (b: unknown) => any }, fn: (req: T) => object) =>
    (req: express.Request, res: express.Response) => {
      const parsed = parser.safeParse(req.body);
      if (!parsed.success) {
        res.status(400).json({ error: "schema violation", issues: parsed.error.issues });
        return;
      }
      try {
        res.json(fn(parsed.data as T));
      } catch (err) {
        res.status(500).json({ error: String(err) });
      }
    };

  app.post(
    "/generate",
    handle<schema.GenerateRequest>(schema.generateRequest, (body) => {
      const contextIds = generator.vocab.encode(body.context);
      if (body.width === 1) {
        const sequence = generator.generate(
          contextIds, body.max_tokens, body.temperature, rng
        );
        const response: schema.GenerateResponse = {
          alternatives: [
            {
              tokens: sequence.tokens,
              token_logprobs: sequence.logprobs.map((lp) => Math.min(0, lp)),
              ended: sequence.ended,
            },
          ],
        };
        return schema.generateResponse.parse(response);
      }
      const bannedIds = new Set(body.banned_first_tokens.map((t) => generator.vocab.id(t)));
      const firsts = generator.firstTokenAlternatives(contextIds, body.width, bannedIds);
      const alternatives = firsts.map((alt) =>
        alt.isEos
          ? { tokens: [], token_logprobs: [], ended: true }
          : {
              tokens: [generator.vocab.token(alt.tokenId)],
              token_logprobs: [Math.min(0, alt.logprob)],
              ended: false,
            }
      );
      if (alternatives.length === 0) {
        throw new Error("no unbanned first-token alternatives available");
      }
      const response: schema.GenerateResponse = { alternatives };
      if (alternatives.length < body.width) {
        response.reason = "vocabulary exhausted before reaching the requested width";
      }
      return schema.generateResponse.parse(response);
    })
  );

  app.post(
    "/score_step",
    handle<{ question: string; partial_path: string }>(schema.scoreStepRequest, (body) =>
      schema.scoreResponse.parse({
        score: clamp01(stepVerifier.scorePartial(body.partial_path)),
      })
    )
  );

  app.post(
    "/score_path",
    handle<{ question: string; path: string }>(schema.scorePathRequest, (body) =>
      schema.scoreResponse.parse({ score: clamp01(pathVerifier.scorePath(body.path)) })
    )
  );

  app.post(
    "/ppl",
    handle<{ text: string }>(schema.pplRequest, (body) => {
      const newline = body.text.indexOf("\n");
      const prefix = newline >= 0 ? body.text.slice(0, newline + 1) : "";
      const suffix = newline >= 0 ? body.text.slice(newline + 1) : body.text;
      const contextIds = generator.vocab.encode(prefix);
      const ids = generator.vocab.encode(suffix);
      if (ids.length === 0) throw new Error("nothing to score after the context prefix");
      const logprobs = generator.scoreTokens(contextIds, ids);
      return schema.pplResponse.parse({ ppl: ppl(logprobs) });
    })
  );

  return app;
}
