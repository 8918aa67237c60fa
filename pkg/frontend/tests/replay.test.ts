/** Integration: drive a session through the state layer against a real
 * service process, then replay the recorded action log through the raw API
 * and require the same final scene. */

import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api";
import { applyRingDrag, applyTranslationDrag } from "../src/gizmo";
import { identity } from "../src/mat4";
import { replayLog, ViewerSession } from "../src/state";

const PART_OBJ = readFileSync(join(__dirname, "fixtures", "part.obj"), "utf-8");

let proc: ChildProcess | null = null;
let assetsDir = "";
let base = "";

async function sleep(ms: number): Promise<void> {
  await new Promise((r) => setTimeout(r, ms));
}

beforeAll(async () => {
  const port = 9100 + Math.floor(Math.random() * 700);
  base = `http://127.0.0.1:${port}`;
  assetsDir = mkdtempSync(join(tmpdir(), "voxcompose-assets-"));
  proc = spawn(
    "python3",
    [
      "-m", "uvicorn", "--factory", "voxcompose.service:create_app",
      "--host", "127.0.0.1", "--port", String(port), "--log-level", "warning",
    ],
    { env: { ...process.env, VOXCOMPOSE_ASSETS: assetsDir }, stdio: ["ignore", "ignore", "pipe"] },
  );
  let stderr = "";
  proc.stderr?.on("data", (chunk: Buffer) => {
    stderr += chunk.toString();
  });
  const deadline = Date.now() + 90_000;
  for (;;) {
    if (proc.exitCode !== null) throw new Error(`service exited early:\n${stderr}`);
    try {
      await fetch(`${base}/sessions/nonexistent/scene`);
      break;
    } catch {
      if (Date.now() > deadline) throw new Error(`service never came up:\n${stderr}`);
      await sleep(250);
    }
  }
});

afterAll(() => {
  proc?.kill();
  if (assetsDir) rmSync(assetsDir, { recursive: true, force: true });
});

describe("scripted session", () => {
  it("replays its action log to an identical scene", async () => {
    const api = new ApiClient(base);
    const session = new ViewerSession(api);
    await session.start();

    // upload
    const asset = await session.uploadAsset("part.obj", PART_OBJ);
    expect(asset.nVertices).toBe(288);

    // three strokes, each optimistic preview checked against the service
    const strokes = [
      { path: [[0.5, 0.0, 0.0]] as [number, number, number][], radius: 0.2, mode: "drop" as const },
      {
        path: [
          [-0.35, 0.0, 0.15],
          [-0.35, 0.0, -0.15],
        ] as [number, number, number][],
        radius: 0.12,
        mode: "drop" as const,
      },
      { path: [[0.5, 0.0, 0.0]] as [number, number, number][], radius: 0.1, mode: "keep" as const },
    ];
    for (const stroke of strokes) {
      const outcome = await session.paintStroke(asset.id, stroke);
      expect(outcome.reconciled).toBe(true);
      expect(outcome.optimisticKept).toBe(outcome.serviceKept);
    }
    // strokes changed the mask at all
    const maskNow = session.assets.get(asset.id)!.mask;
    expect(maskNow.some((v) => v === 0)).toBe(true);

    // two placements, transforms built by the gizmo math
    const first = await session.addInstance(asset.id);
    const second = await session.duplicateInstance(first.id);
    const rotated = applyRingDrag(identity(), "y", Math.PI / 3, [0, 0, 0]);
    await session.setTransform(first.id, rotated);
    const shifted = applyTranslationDrag(identity(), [0.8, 0.1, 0]);
    await session.setTransform(second.id, shifted);

    // posted transforms round-trip through the scene exactly
    const sceneAfter = await session.fetchScene();
    const byId = new Map(sceneAfter.instances.map((i) => [i.id, i.transform]));
    expect(byId.get(first.id)).toEqual(rotated);
    expect(byId.get(second.id)).toEqual(shifted);

    // compose and export
    const result = await session.composeAndInspect();
    expect(result.nFaces).toBeGreaterThan(0);
    expect(session.mode).toBe("inspect");
    expect(session.stale).toBe(false);
    const exported = await session.exportResult();
    expect(exported.obj.startsWith("#") || exported.obj.startsWith("v ")).toBe(true);

    // the recorded log covers exactly the calls above
    expect(session.log.map((a) => a.op)).toEqual([
      "create_session",
      "add_asset_upload",
      "add_stroke",
      "add_stroke",
      "add_stroke",
      "add_instance",
      "duplicate_instance",
      "set_transform",
      "set_transform",
      "compose",
      "export",
    ]);

    // raw-API replay on a fresh session: identical scene JSON
    const replayedSid = await replayLog(api, session.log);
    expect(replayedSid).not.toBe(session.sessionId);
    const original = await api.getScene(session.sessionId);
    const replayed = await api.getScene(replayedSid);
    expect(replayed.scene).toEqual(original.scene);
    expect(replayed.revision).toBe(original.revision);

    // and the replayed composition serves byte-identical geometry
    const a = await api.getResult(session.sessionId);
    const b = await api.getResult(replayedSid);
    expect(b.obj).toBe(a.obj);
  });

  it("rebuilds identical local state from the service alone", async () => {
    const api = new ApiClient(base);
    const session = new ViewerSession(api);
    await session.start();
    const asset = await session.addGeneratedAsset({ kind: "sphere" });
    await session.paintStroke(asset.id, {
      path: [[0.0, 0.5, 0.0]],
      radius: 0.4,
      mode: "drop",
    });
    const inst = await session.addInstance(asset.id);
    const moved = applyTranslationDrag(identity(), [0.4, 0, 0]);
    await session.setTransform(inst.id, moved);

    // a second viewer attaches to the same session id and refreshes
    const twin = new ViewerSession(api);
    twin.sessionId = session.sessionId;
    await twin.refresh();
    expect([...twin.assets.keys()]).toEqual([...session.assets.keys()]);
    expect(twin.instances.get(inst.id)!.transform).toEqual(moved);
    expect(twin.assets.get(asset.id)!.mask).toEqual(session.assets.get(asset.id)!.mask);
    expect(twin.sceneRevision).toBe(session.sceneRevision);
  });

  it("flags a stale result when the scene moves past it", async () => {
    const api = new ApiClient(base);
    const session = new ViewerSession(api);
    await session.start();
    const asset = await session.addGeneratedAsset({ kind: "box" });
    const inst = await session.addInstance(asset.id);
    await session.composeAndInspect();
    expect(session.stale).toBe(false);

    await session.setTransform(inst.id, applyTranslationDrag(identity(), [0.2, 0, 0]));
    expect(session.stale).toBe(true);
    const status = await api.composeStatus(session.sessionId);
    expect(status.stale).toBe(true);

    await session.composeAndInspect();
    expect(session.stale).toBe(false);
  });

  it("surfaces compose failures with their stage", async () => {
    const api = new ApiClient(base);
    const session = new ViewerSession(api);
    await session.start();
    const asset = await session.addGeneratedAsset({ kind: "sphere" });
    // drop everything: composing has nothing to keep
    await session.paintStroke(asset.id, { path: [[0, 0, 0]], radius: 10, mode: "drop" });
    await session.addInstance(asset.id);
    await expect(session.composeAndInspect()).rejects.toThrow();
    expect(session.lastError).toMatch(/compose/);
    expect(session.composing).toBe(false);
  });
});
