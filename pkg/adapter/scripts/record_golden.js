#!/usr/bin/env node
/** Regenerates test/golden.json from the built adapter (npm run build first). */
const fs = require("node:fs");
const path = require("node:path");

const { loadModel } = require("../dist/model");
const { DEFAULT_CONFIG, handleFrame } = require("../dist/protocol");

const longPrefix = Array.from({ length: 70 }, (_, i) => (i % 30) + 3);
const requests = [
  { id: 1, method: "hello" },
  { id: 2, method: "logits", tokens: [] },
  { id: 3, method: "logits", tokens: [0, 12] },
  { id: 4, method: "logits", tokens: longPrefix },
  { id: 5, method: "encode", text: "oak moss unheard" },
  { id: 6, method: "decode", tokens: [12, 30, 1] },
  { id: 7, method: "inspect" },
  { id: 8, method: "logits", tokens: [99] },
  "not json",
];

const model = loadModel(DEFAULT_CONFIG.model);
const entries = requests.map((req) => {
  const line = typeof req === "string" ? req : JSON.stringify(req);
  return { request: line, reply: handleFrame(model, DEFAULT_CONFIG, line) };
});

const out = path.join(__dirname, "..", "test", "golden.json");
fs.writeFileSync(out, JSON.stringify(entries, null, 2) + "\n");
console.log(`wrote ${entries.length} transcript entries to ${out}`);
