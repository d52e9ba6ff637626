/** Wire-protocol message shapes. Scores live in [0, 1]; log-probabilities
 * never exceed 0; an alternative's token and log-probability lists always
 * have equal lengths. */
import { z } from "zod";

export const generateRequest = z
  .object({
    context: z.string(),
    width: z.number().int().min(1),
    max_tokens: z.number().int().min(1),
    temperature: z.number().min(0),
    banned_first_tokens: z.array(z.string()).default([]),
  })
  .strict();

export const scoreStepRequest = z
  .object({ question: z.string(), partial_path: z.string() })
  .strict();

export const scorePathRequest = z.object({ question: z.string(), path: z.string() }).strict();

export const pplRequest = z.object({ text: z.string() }).strict();

export const alternative = z
  .object({
    tokens: z.array(z.string()),
    token_logprobs: z.array(z.number().max(0)),
    ended: z.boolean().optional(),
  })
  .refine((alt) => alt.tokens.length === alt.token_logprobs.length, {
    message: "tokens and token_logprobs must have equal lengths",
  });

export const generateResponse = z.object({
  alternatives: z.array(alternative).min(1),
  reason: z.string().optional(),
});

export const scoreResponse = z.object({ score: z.number().min(0).max(1) });

export const pplResponse = z.object({ ppl: z.number().positive() });

export type GenerateRequest = z.infer<typeof generateRequest>;
export type GenerateResponse = z.infer<typeof generateResponse>;
