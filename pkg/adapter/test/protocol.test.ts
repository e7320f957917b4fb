import { readFileSync } from "node:fs";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { loadModel } from "../src/model";
import { DEFAULT_CONFIG, handleFrame } from "../src/protocol";

const model = loadModel(DEFAULT_CONFIG.model);

const handle = (frame: unknown): Record<string, unknown> =>
  handleFrame(
    model,
    DEFAULT_CONFIG,
    typeof frame === "string" ? frame : JSON.stringify(frame),
  );

describe("protocol", () => {
  it("replays the recorded golden transcript", () => {
    const golden = JSON.parse(
      readFileSync(join(__dirname, "golden.json"), "utf-8"),
    ) as { request: string; reply: unknown }[];
    expect(golden.length).toBeGreaterThan(5);
    for (const entry of golden) {
      expect(handleFrame(model, DEFAULT_CONFIG, entry.request)).toStrictEqual(
        entry.reply,
      );
    }
  });

  it("hello reports the full vocabulary and reserved ids", () => {
    const reply = handle({ id: 1, method: "hello" });
    expect(reply.vocab).toHaveLength(model.vocab.tokens.length);
    expect(reply).toMatchObject({ id: 1, bos: 0, eos: 1, unk: 2 });
  });

  it("answers the same request identically regardless of order", () => {
    const requests = [
      { id: 1, method: "logits", tokens: [0, 4] },
      { id: 2, method: "encode", text: "pine sage" },
      { id: 3, method: "logits", tokens: [] },
      { id: 4, method: "decode", tokens: [3, 4, 5] },
    ];
    const inOrder = requests.map(handle);
    const reversed = [...requests].reverse().map(handle).reverse();
    expect(reversed).toStrictEqual(inOrder);
  });

  it("keeps logits bit-identical through JSON serialization", () => {
    const reply = handle({ id: 9, method: "logits", tokens: [0, 11] });
    const wire = JSON.parse(JSON.stringify(reply)) as { logits: number[] };
    const direct = Array.from(model.logits([0, 11]));
    expect(wire.logits).toStrictEqual(direct);
  });

  it("truncates an over-limit prefix from the left and says so", () => {
    const limit = DEFAULT_CONFIG.maxPrefix;
    const long = Array.from({ length: limit + 9 }, (_, i) => (i % 30) + 3);
    const reply = handle({ id: 5, method: "logits", tokens: long });
    expect(reply.warning).toMatch(/truncated/);
    expect(reply.logits).toStrictEqual(
      Array.from(model.logits(long.slice(long.length - limit))),
    );
    const short = handle({ id: 6, method: "logits", tokens: long.slice(0, limit) });
    expect(short.warning).toBeUndefined();
  });

  it.each([
    ["malformed JSON", "{oops"],
    ["non-object frame", "[1, 2]"],
    ["unknown method", { id: 7, method: "inspect" }],
    ["missing tokens", { id: 7, method: "logits" }],
    ["out-of-range token", { id: 7, method: "logits", tokens: [999] }],
    ["fractional token", { id: 7, method: "logits", tokens: [1.5] }],
    ["encode without text", { id: 7, method: "encode" }],
  ])("rejects %s with a 400-style error", (_name, frame) => {
    const reply = handle(frame) as { error?: { code: number; message: string } };
    expect(reply.error?.code).toBe(400);
    expect(reply.error?.message.length).toBeGreaterThan(0);
  });

  it("echoes the request id on errors when it can be parsed", () => {
    const reply = handle({ id: 41, method: "inspect" });
    expect(reply.id).toBe(41);
    const unparseable = handle("not json");
    expect(unparseable.id).toBe(-1);
  });
});
