/** Seeds fixture data and boots a live annotation service for the tests. */

import { spawn, execFileSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

let server: ChildProcess | undefined;
let dataDir: string | undefined;

export default async function setup(): Promise<() => void> {
  dataDir = mkdtempSync(join(tmpdir(), "storykg-ui-"));
  const here = dirname(fileURLToPath(import.meta.url));
  execFileSync("python3", [join(here, "seed.py"), dataDir], { stdio: "inherit" });

  const port = 8900 + Math.floor(Math.random() * 500);
  server = spawn(
    "python3",
    [
      "-m",
      "storykg",
      "serve",
      "--snapshot", join(dataDir, "index.snap"),
      "--corpus", join(dataDir, "corpus.jsonl"),
      "--store", join(dataDir, "records.jsonl"),
      "--splits", join(dataDir, "splits.json"),
      "--tasks", join(dataDir, "tasks.jsonl"),
      "--validation-store", join(dataDir, "validation.jsonl"),
      "--port", String(port),
    ],
    { stdio: "inherit" },
  );

  const base = `http://127.0.0.1:${port}`;
  let healthy = false;
  for (let attempt = 0; attempt < 150; attempt++) {
    try {
      const resp = await fetch(`${base}/healthz`);
      if (resp.ok) {
        healthy = true;
        break;
      }
    } catch {
      // server still starting
    }
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
  if (!healthy) {
    server.kill("SIGTERM");
    throw new Error("annotation service did not become healthy");
  }

  process.env.STORYKG_BASE_URL = base;
  process.env.STORYKG_DATA_DIR = dataDir;

  return () => {
    server?.kill("SIGTERM");
    if (dataDir) rmSync(dataDir, { recursive: true, force: true });
  };
}
