/**
 * A deliberately small neural next-token model: the last two token
 * embeddings feed one tanh layer, then a linear head over the vocabulary.
 * Weights are drawn from a seeded PRNG at load, so every process serving
 * the same model identifier computes bit-identical float64 logits.
 */
import { Vocab, buildVocab, decode, encode } from "./vocab";

const EMBED_DIM = 16;
const HIDDEN_DIM = 32;

/** Known model identifiers and their weight seeds. */
const MODEL_SEEDS: Record<string, number> = {
  "toy-mlp": 12,
  "toy-mlp-b": 77,
};

export interface LanguageModel {
  id: string;
  vocab: Vocab;
  logits(tokens: number[]): Float64Array;
}

function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function randomMatrix(next: () => number, rows: number, cols: number): Float64Array {
  const scale = Math.sqrt(6 / (rows + cols));
  const out = new Float64Array(rows * cols);
  for (let i = 0; i < out.length; i++) {
    out[i] = (2 * next() - 1) * scale;
  }
  return out;
}

export function modelIds(): string[] {
  return Object.keys(MODEL_SEEDS);
}

export function loadModel(id: string): LanguageModel {
  const seed = MODEL_SEEDS[id];
  if (seed === undefined) {
    throw new Error(`unknown model ${JSON.stringify(id)}; known: ${modelIds().join(", ")}`);
  }
  const vocab = buildVocab();
  const vocabSize = vocab.tokens.length;
  const next = mulberry32(seed);
  const embed = randomMatrix(next, vocabSize, EMBED_DIM);
  const w1 = randomMatrix(next, HIDDEN_DIM, 2 * EMBED_DIM);
  const b1 = randomMatrix(next, HIDDEN_DIM, 1);
  const w2 = randomMatrix(next, vocabSize, HIDDEN_DIM);
  const b2 = randomMatrix(next, vocabSize, 1);

  const logits = (tokens: number[]): Float64Array => {
    const a = tokens.length >= 2 ? tokens[tokens.length - 2] : vocab.bosId;
    const b = tokens.length >= 1 ? tokens[tokens.length - 1] : vocab.bosId;
    const hidden = new Float64Array(HIDDEN_DIM);
    for (let h = 0; h < HIDDEN_DIM; h++) {
      let sum = b1[h];
      const row = h * 2 * EMBED_DIM;
      for (let d = 0; d < EMBED_DIM; d++) {
        sum += w1[row + d] * embed[a * EMBED_DIM + d];
        sum += w1[row + EMBED_DIM + d] * embed[b * EMBED_DIM + d];
      }
      hidden[h] = Math.tanh(sum);
    }
    const out = new Float64Array(vocabSize);
    for (let v = 0; v < vocabSize; v++) {
      let sum = b2[v];
      const row = v * HIDDEN_DIM;
      for (let h = 0; h < HIDDEN_DIM; h++) {
        sum += w2[row + h] * hidden[h];
      }
      out[v] = sum;
    }
    return out;
  };

  return { id, vocab, logits };
}

export function softmax(logits: Float64Array | number[]): Float64Array {
  let max = -Infinity;
  for (const x of logits) max = Math.max(max, x);
  const out = new Float64Array(logits.length);
  let total = 0;
  for (let i = 0; i < logits.length; i++) {
    out[i] = Math.exp(logits[i] - max);
    total += out[i];
  }
  for (let i = 0; i < out.length; i++) out[i] /= total;
  return out;
}

export { Vocab, buildVocab, decode, encode };
