/**
 * Scripted end-to-end session against a live service instance.
 *
 * Drives the UI's own api/controller/view code headlessly: creates a session
 * on a synthetic 4-class task, submits ten oracle labels, checks the step
 * counter and bar normalization after every submission, exercises undo, and
 * finally compares the service's query order with a harness replay fed the
 * same labels. Skips when the Python side is not installed.
 */

import { spawn, spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { SessionApi } from "../src/api.js";
import { SessionController } from "../src/controller.js";
import { buildView } from "../src/view.js";
import type { StatePayload } from "../src/types.js";

const PY = process.env.PYTHON ?? "python3";
const GRID = 257;
const BUDGET = 10;

function pythonReady(): boolean {
  const probe = spawnSync(PY, ["-c", "import amselect"], { encoding: "utf8" });
  return probe.status === 0;
}

const ready = pythonReady();

describe.skipIf(!ready)("labeling session end to end", () => {
  const workDir = mkdtempSync(join(tmpdir(), "amselect-e2e-"));
  const benchDir = join(workDir, "bench");
  const dataDir = join(workDir, "sessions");
  const port = 18000 + Math.floor(Math.random() * 20000);
  const baseUrl = `http://127.0.0.1:${port}`;
  let server: ReturnType<typeof spawn>;
  let labels: Map<string, number>;

  beforeAll(async () => {
    const synth = spawnSync(PY, [
      "-m", "amselect.cli", "synth",
      "--models", "5", "--items", "60", "--classes", "4",
      "--seed", "33", "--out", benchDir,
    ], { encoding: "utf8" });
    expect(synth.status).toBe(0);

    labels = new Map(
      readFileSync(join(benchDir, "synthetic.labels.csv"), "utf8")
        .trim()
        .split("\n")
        .slice(1) // header
        .map((line) => {
          const [item, cls] = line.split(",");
          return [item, Number(cls)] as const;
        }),
    );

    server = spawn(PY, [
      "-m", "amselect.cli", "serve",
      "--addr", `127.0.0.1:${port}`,
      "--data", dataDir,
    ], { stdio: "ignore" });

    const deadline = Date.now() + 60_000;
    for (;;) {
      try {
        const resp = await fetch(`${baseUrl}/health`);
        if (resp.ok) break;
      } catch {
        /* not up yet */
      }
      if (Date.now() > deadline) throw new Error("service did not come up");
      await new Promise((r) => setTimeout(r, 250));
    }
  });

  afterAll(() => {
    server?.kill();
  });

  it("runs a ten-label session with undo and matches the harness replay", async () => {
    const api = new SessionApi(baseUrl);
    const created = await api.createSession({
      manifest_path: join(benchDir, "synthetic.json"),
      config: { method: "eig", grid_size: GRID },
    });
    expect(created.kind).toBe("ok");
    if (created.kind !== "ok") return;

    const controller = new SessionController(api, created.payload.session_id);
    controller.payload = created.payload;

    const queried: string[] = [];
    for (let step = 1; step <= BUDGET; step += 1) {
      const payload = controller.payload as StatePayload;
      const pending = payload.pending_query;
      expect(pending).not.toBeNull();
      if (!pending) return;
      queried.push(pending.item_id);

      // exercise undo mid-session: label, roll back, verify, relabel
      if (step === 4) {
        const before = JSON.stringify(controller.payload);
        expect((await controller.submit(0)).kind).toBe("ok");
        expect((await controller.undo()).kind).toBe("ok");
        expect(JSON.stringify(controller.payload)).toBe(before);
      }

      const truth = labels.get(pending.item_id);
      expect(truth).toBeDefined();
      const status = await controller.submit(truth as number);
      expect(status.kind).toBe("ok");

      const view = buildView(controller.payload);
      expect(view.kind).toBe("state");
      if (view.kind !== "state") return;
      expect(view.stepCount).toBe(step);
      const totalPercent = view.bars.reduce((acc, b) => acc + b.percent, 0);
      expect(Math.abs(totalPercent - 100)).toBeLessThanOrEqual(0.3); // rounding only
    }

    // the simulation harness, given the same labels, must ask in the same order
    const replay = spawnSync(PY, ["-c", `
import json
from amselect.acquisition import AcquisitionMethod
from amselect.benchmark import load_benchmark
from amselect.harness import RunConfig, run_selection

task = load_benchmark(${JSON.stringify(join(benchDir, "synthetic.json"))})
cfg = RunConfig(method=AcquisitionMethod("eig"), selector="pbest",
                budget=${BUDGET}, grid_size=${GRID}, seeds=(0,))
run = run_selection(task, cfg, seed=0)
print(json.dumps([task.item_ids[i] for i in run.queried_items]))
`], { encoding: "utf8" });
    expect(replay.status).toBe(0);
    const harnessOrder = JSON.parse(replay.stdout.trim()) as string[];
    expect(queried).toEqual(harnessOrder);

    // exported history reflects every committed label
    const csv = await api.exportCsv((controller.payload as StatePayload).session_id);
    expect(csv.trim().split("\n")).toHaveLength(1 + BUDGET);
  });
});
