// Spawns the real python annotation service for the UI tests and tears it
// down afterwards. The service address and artifact paths are passed to
// tests through provide/inject.

import { spawn, ChildProcess } from "node:child_process";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import type { TestProject } from "vitest/node";

let child: ChildProcess | null = null;

interface FixtureInfo {
  base_url: string;
  dir: string;
  tasks: string;
  keys: string;
  store: string;
}

export default async function setup(project: TestProject): Promise<() => void> {
  const here = dirname(fileURLToPath(import.meta.url));
  const script = join(here, "fixture_server.py");
  child = spawn("python3", [script], { stdio: ["ignore", "pipe", "inherit"] });

  const info = await new Promise<FixtureInfo>((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error("fixture server did not start")), 15000);
    let buffer = "";
    child!.stdout!.on("data", (chunk: Buffer) => {
      buffer += chunk.toString();
      const line = buffer.split("\n").find((l) => l.trim().startsWith("{"));
      if (line) {
        clearTimeout(timer);
        resolve(JSON.parse(line) as FixtureInfo);
      }
    });
    child!.on("exit", (code) => {
      clearTimeout(timer);
      reject(new Error(`fixture server exited early with code ${code}`));
    });
  });

  project.provide("serviceBaseUrl", info.base_url);
  project.provide("fixtureDir", info.dir);
  project.provide("tasksPath", info.tasks);
  project.provide("keysPath", info.keys);
  project.provide("storePath", info.store);

  return () => {
    child?.kill("SIGTERM");
  };
}

declare module "vitest" {
  export interface ProvidedContext {
    serviceBaseUrl: string;
    fixtureDir: string;
    tasksPath: string;
    keysPath: string;
    storePath: string;
  }
}
