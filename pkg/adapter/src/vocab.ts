/** Word-level vocabulary: three reserved ids, then the model's word list. */

export const BOS = "<s>";
export const EOS = "</s>";
export const UNK = "<unk>";

const WORDS = [
  "ash", "birch", "cedar", "elm", "fir", "hazel", "juniper", "larch",
  "maple", "oak", "pine", "rowan", "spruce", "willow", "yew",
  "amber", "basalt", "chalk", "flint", "granite", "jade", "marble",
  "onyx", "quartz", "slate", "fern", "ivy", "moss", "reed", "sage",
];

export interface Vocab {
  tokens: string[];
  bosId: number;
  eosId: number;
  unkId: number;
  idOf: Map<string, number>;
}

export function buildVocab(words: string[] = WORDS): Vocab {
  const tokens = [BOS, EOS, UNK, ...words];
  const idOf = new Map<string, number>();
  tokens.forEach((tok, i) => idOf.set(tok, i));
  return { tokens, bosId: 0, eosId: 1, unkId: 2, idOf };
}

export function encode(vocab: Vocab, text: string): number[] {
  return text
    .split(/\s+/)
    .filter((w) => w.length > 0)
    .map((w) => vocab.idOf.get(w.toLowerCase()) ?? vocab.unkId);
}

export function decode(vocab: Vocab, tokens: number[]): string {
  return tokens.map((t) => vocab.tokens[t]).join(" ");
}

/**
 * Demonstration words to per-word id lists, order preserved. The engine
 * takes the first id of each list as its guidance target; with this
 * word-level tokenizer every list is a singleton.
 */
export function encodeDemoTokens(vocab: Vocab, words: string[]): number[][] {
  return words.map((w) => encode(vocab, w));
}
