/**
 * Line-delimited JSON request handling, one reply object per request.
 *
 * Requests:  {"id": n, "method": "hello" | "logits" | "encode" | "decode", ...params}
 * Replies:   {"id": n, ...result}  or  {"id": n, "error": {"code", "message"}}
 *
 * Request handling is pure: nothing is carried between frames except the
 * model weights, so any request order yields the same per-request replies.
 */
import { LanguageModel } from "./model";
import { decode, encode } from "./vocab";

export interface AdapterConfig {
  model: string;
  device: string;
  listen: { mode: "stdio" } | { mode: "tcp"; port: number };
  maxPrefix: number;
}

export const DEFAULT_CONFIG: AdapterConfig = {
  model: "toy-mlp",
  device: "cpu",
  listen: { mode: "stdio" },
  maxPrefix: 64,
};

class BadRequest extends Error {}

function idList(params: Record<string, unknown>, vocabSize: number): number[] {
  const tokens = params.tokens;
  if (!Array.isArray(tokens)) {
    throw new BadRequest("'tokens' must be a list of token ids");
  }
  return tokens.map((t) => {
    if (typeof t !== "number" || !Number.isInteger(t) || t < 0 || t >= vocabSize) {
      throw new BadRequest(`token id ${JSON.stringify(t)} out of range for |V|=${vocabSize}`);
    }
    return t;
  });
}

export function handleFrame(
  model: LanguageModel,
  config: AdapterConfig,
  line: string,
): Record<string, unknown> {
  let id: unknown = -1;
  try {
    let frame: unknown;
    try {
      frame = JSON.parse(line);
    } catch (err) {
      throw new BadRequest(`unparseable frame: ${(err as Error).message}`);
    }
    if (typeof frame !== "object" || frame === null || Array.isArray(frame)) {
      throw new BadRequest("frame must be a JSON object");
    }
    const params = frame as Record<string, unknown>;
    id = params.id ?? -1;
    const vocab = model.vocab;

    switch (params.method) {
      case "hello":
        return {
          id,
          vocab: vocab.tokens,
          bos: vocab.bosId,
          eos: vocab.eosId,
          unk: vocab.unkId,
        };
      case "logits": {
        let tokens = idList(params, vocab.tokens.length);
        let warning: string | undefined;
        if (tokens.length > config.maxPrefix) {
          tokens = tokens.slice(tokens.length - config.maxPrefix);
          warning = `prefix truncated to the last ${config.maxPrefix} tokens`;
        }
        const reply: Record<string, unknown> = {
          id,
          logits: Array.from(model.logits(tokens)),
        };
        if (warning !== undefined) reply.warning = warning;
        return reply;
      }
      case "encode": {
        if (typeof params.text !== "string") {
          throw new BadRequest("encode needs a 'text' string");
        }
        return { id, tokens: encode(vocab, params.text) };
      }
      case "decode":
        return { id, text: decode(vocab, idList(params, vocab.tokens.length)) };
      default:
        throw new BadRequest(`unknown method: ${JSON.stringify(params.method)}`);
    }
  } catch (err) {
    const code = err instanceof BadRequest ? 400 : 500;
    return { id, error: { code, message: (err as Error).message } };
  }
}
