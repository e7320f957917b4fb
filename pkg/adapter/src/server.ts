/**
 * Process entry point. Default mode serves the line protocol on
 * stdin/stdout; --tcp serves one connection at a time on a port.
 *
 * --probs is a diagnostic mode for cross-process checks: it reads
 * {"prefixes": [[ids], ...]} from stdin and prints this process's own
 * softmax for each prefix, so a client can compare the distribution it
 * reconstructed from wire logits against the one computed here.
 */
import { createInterface } from "node:readline";
import { createServer } from "node:net";
import { parseArgs } from "node:util";

import { loadModel, softmax } from "./model";
import { AdapterConfig, DEFAULT_CONFIG, handleFrame } from "./protocol";

function serveStream(
  config: AdapterConfig,
  input: NodeJS.ReadableStream,
  output: NodeJS.WritableStream,
  onEnd?: () => void,
): void {
  const model = loadModel(config.model);
  const lines = createInterface({ input, crlfDelay: Infinity });
  lines.on("line", (line) => {
    if (line.trim().length === 0) return;
    output.write(JSON.stringify(handleFrame(model, config, line)) + "\n");
  });
  if (onEnd) lines.on("close", onEnd);
}

function serveTcp(config: AdapterConfig, port: number): void {
  const server = createServer((socket) => {
    serveStream(config, socket, socket, () => socket.end());
  });
  server.listen(port, () => {
    process.stderr.write(`listening on port ${port}\n`);
  });
}

function dumpProbs(config: AdapterConfig): void {
  const model = loadModel(config.model);
  const chunks: Buffer[] = [];
  process.stdin.on("data", (chunk) => chunks.push(chunk));
  process.stdin.on("end", () => {
    const request = JSON.parse(Buffer.concat(chunks).toString("utf-8"));
    const probs = (request.prefixes as number[][]).map((prefix) =>
      Array.from(softmax(model.logits(prefix))),
    );
    process.stdout.write(JSON.stringify({ model: model.id, probs }) + "\n");
  });
}

function main(): void {
  const { values } = parseArgs({
    options: {
      model: { type: "string", default: DEFAULT_CONFIG.model },
      device: { type: "string", default: DEFAULT_CONFIG.device },
      tcp: { type: "string" },
      "max-prefix": { type: "string" },
      probs: { type: "boolean", default: false },
    },
  });
  const maxPrefix = values["max-prefix"]
    ? Number.parseInt(values["max-prefix"], 10)
    : DEFAULT_CONFIG.maxPrefix;
  if (!Number.isInteger(maxPrefix) || maxPrefix < 1) {
    process.stderr.write(`invalid --max-prefix: ${values["max-prefix"]}\n`);
    process.exit(2);
  }
  const config: AdapterConfig = {
    model: values.model as string,
    device: values.device as string,
    listen: values.tcp
      ? { mode: "tcp", port: Number.parseInt(values.tcp, 10) }
      : { mode: "stdio" },
    maxPrefix,
  };

  try {
    loadModel(config.model);
  } catch (err) {
    process.stderr.write(`${(err as Error).message}\n`);
    process.exit(2);
  }

  if (values.probs) {
    dumpProbs(config);
  } else if (config.listen.mode === "tcp") {
    serveTcp(config, config.listen.port);
  } else {
    serveStream(config, process.stdin, process.stdout, () => process.exit(0));
  }
}

main();
