/**
 * Token conventions shared with the search side: a token is a whitespace-
 * delimited word carrying its trailing whitespace, so concatenating tokens
 * reproduces the text exactly. The vocabulary is closed over the training
 * corpus plus sentinel ids for begin/end-of-sequence and unknown words.
 */

export const BOS = "⟨bos⟩";
export const EOS = "⟨eos⟩";
export const UNK = "⟨unk⟩";

export function tokenize(text: string): string[] {
  return text.match(/\S+\s*/g) ?? [];
}

export class Vocab {
  readonly tokens: string[];
  private readonly ids = new Map<string, number>();

  constructor(tokens: string[]) {
    this.tokens = tokens;
    tokens.forEach((token, id) => this.ids.set(token, id));
  }

  static build(texts: Iterable<string>): Vocab {
    const seen = new Set<string>([BOS, EOS, UNK]);
    const ordered = [BOS, EOS, UNK];
    for (const text of texts) {
      for (const token of tokenize(text)) {
        const key = token.trimEnd() + " "; // normalize trailing whitespace runs
        if (!seen.has(key)) {
          seen.add(key);
          ordered.push(key);
        }
      }
    }
    return new Vocab(ordered);
  }

  get size(): number {
    return this.tokens.length;
  }

  id(token: string): number {
    const direct = this.ids.get(token);
    if (direct !== undefined) return direct;
    const normalized = this.ids.get(token.trimEnd() + " ");
    return normalized ?? this.ids.get(UNK)!;
  }

  token(id: number): string {
    return this.tokens[id];
  }

  encode(text: string): number[] {
    return tokenize(text).map((token) => this.id(token));
  }

  get bosId(): number {
    return this.ids.get(BOS)!;
  }

  get eosId(): number {
    return this.ids.get(EOS)!;
  }

  get unkId(): number {
    return this.ids.get(UNK)!;
  }
}
