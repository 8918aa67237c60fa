/** Session state machine behind the viewport: holds the mirrored scene,
 * queues mutations in action order, applies optimistic mask previews, and
 * records an action log (one entry per service call) that `replayLog` can
 * feed back through the raw API.
 *
 * The service stays authoritative: every mutation adopts the state the
 * response reports, and `refresh` rebuilds everything from GET endpoints.
 */

import { ApiClient, ApiError, GeneratorSpec, SceneJson } from "./api";
import { applyStrokeLocal, BrushMode, keptCount, StrokeRecord } from "./mask";
import { identity, Mat4 } from "./mat4";
import { parseObj, ParsedMesh } from "./obj";

export type Mode = "segment" | "compose" | "inspect";

export interface BrushState {
  radius: number;
  mode: BrushMode;
}

export interface CameraPose {
  position: [number, number, number];
  target: [number, number, number];
}

export interface AssetView {
  id: string;
  mesh: ParsedMesh;
  mask: Uint8Array;
  nVertices: number;
  nFaces: number;
}

export interface InstanceView {
  id: string;
  assetId: string;
  transform: Mat4;
}

export type Action =
  | { op: "create_session" }
  | { op: "add_asset_generator"; generator: GeneratorSpec }
  | { op: "add_asset_upload"; filename: string; content: string }
  | { op: "add_stroke"; assetId: string; stroke: StrokeRecord }
  | { op: "add_instance"; assetId: string }
  | { op: "duplicate_instance"; instanceId: string }
  | { op: "set_transform"; instanceId: string; transform: number[] }
  | { op: "delete_asset"; assetId: string }
  | { op: "delete_instance"; instanceId: string }
  | { op: "compose" }
  | { op: "export" };

export interface PaintOutcome {
  optimisticKept: number;
  serviceKept: number;
  reconciled: boolean;
}

export class ViewerSession {
  readonly log: Action[] = [];
  sessionId = "";
  sceneRevision = 0;
  resultRevision: number | null = null;
  mode: Mode = "segment";
  brush: BrushState = { radius: 0.15, mode: "drop" };
  selectedAsset: string | null = null;
  selectedInstance: string | null = null;
  camera: CameraPose = { position: [2.2, 1.6, 2.2], target: [0, 0, 0] };
  assets = new Map<string, AssetView>();
  instances = new Map<string, InstanceView>();
  instanceOrder: string[] = [];
  resultMesh: ParsedMesh | null = null;
  composing = false;
  lastError: string | null = null;

  // client-side mutation queue: one writer, action order preserved
  private chain: Promise<unknown> = Promise.resolve();

  constructor(readonly api: ApiClient) {}

  get stale(): boolean {
    return this.resultRevision !== null && this.resultRevision !== this.sceneRevision;
  }

  private enqueue<T>(fn: () => Promise<T>): Promise<T> {
    const next = this.chain.then(fn, fn);
    this.chain = next.catch(() => undefined);
    return next;
  }

  setMode(mode: Mode): void {
    // transitions are free in any direction
    this.mode = mode;
  }

  async start(): Promise<string> {
    return this.enqueue(async () => {
      const info = await this.api.createSession();
      this.sessionId = info.id;
      this.sceneRevision = info.revision;
      this.log.push({ op: "create_session" });
      return info.id;
    });
  }

  private async loadAsset(assetId: string): Promise<AssetView> {
    const [objText, maskRes] = await Promise.all([
      this.api.getAssetMesh(this.sessionId, assetId),
      this.api.getAssetMask(this.sessionId, assetId),
    ]);
    const mesh = parseObj(objText);
    const view: AssetView = {
      id: assetId,
      mesh,
      mask: Uint8Array.from(maskRes.mask),
      nVertices: mesh.nVertices,
      nFaces: mesh.nFaces,
    };
    this.assets.set(assetId, view);
    return view;
  }

  async addGeneratedAsset(generator: GeneratorSpec): Promise<AssetView> {
    return this.enqueue(async () => {
      const res = await this.api.addGeneratedAsset(this.sessionId, generator);
      this.sceneRevision = res.revision;
      this.log.push({ op: "add_asset_generator", generator });
      const view = await this.loadAsset(res.asset_id);
      this.selectedAsset = res.asset_id;
      return view;
    });
  }

  async uploadAsset(filename: string, content: string): Promise<AssetView> {
    return this.enqueue(async () => {
      const res = await this.api.uploadAsset(this.sessionId, filename, content);
      this.sceneRevision = res.revision;
      this.log.push({ op: "add_asset_upload", filename, content });
      const view = await this.loadAsset(res.asset_id);
      this.selectedAsset = res.asset_id;
      return view;
    });
  }

  /** Optimistic paint: recolor locally, post the stroke, adopt the service
   * mask. Returns both kept-counts so the UI can surface disagreement. */
  async paintStroke(assetId: string, stroke: StrokeRecord): Promise<PaintOutcome> {
    const asset = this.assets.get(assetId);
    if (!asset) throw new Error(`unknown asset ${assetId}`);
    const optimistic = applyStrokeLocal(asset.mask, asset.mesh.positions, stroke);
    asset.mask = optimistic; // immediate feedback
    const optimisticKept = keptCount(optimistic);
    return this.enqueue(async () => {
      const res = await this.api.addStroke(this.sessionId, assetId, stroke);
      this.sceneRevision = res.revision;
      this.log.push({ op: "add_stroke", assetId, stroke });
      const authoritative = Uint8Array.from(res.mask);
      asset.mask = authoritative; // service wins
      return {
        optimisticKept,
        serviceKept: res.kept,
        reconciled: optimisticKept === res.kept,
      };
    });
  }

  async addInstance(assetId: string): Promise<InstanceView> {
    return this.enqueue(async () => {
      const res = await this.api.addInstance(this.sessionId, assetId);
      this.sceneRevision = res.revision;
      this.log.push({ op: "add_instance", assetId });
      const view: InstanceView = { id: res.instance_id, assetId, transform: identity() };
      this.instances.set(view.id, view);
      this.instanceOrder.push(view.id);
      this.selectedInstance = view.id;
      return view;
    });
  }

  async duplicateInstance(instanceId: string): Promise<InstanceView> {
    const source = this.instances.get(instanceId);
    if (!source) throw new Error(`unknown instance ${instanceId}`);
    return this.enqueue(async () => {
      const res = await this.api.duplicateInstance(this.sessionId, instanceId);
      this.sceneRevision = res.revision;
      this.log.push({ op: "duplicate_instance", instanceId });
      const view: InstanceView = {
        id: res.instance_id,
        assetId: source.assetId,
        transform: source.transform.slice(),
      };
      this.instances.set(view.id, view);
      this.instanceOrder.push(view.id);
      this.selectedInstance = view.id;
      return view;
    });
  }

  async setTransform(instanceId: string, transform: Mat4): Promise<void> {
    const inst = this.instances.get(instanceId);
    if (!inst) throw new Error(`unknown instance ${instanceId}`);
    inst.transform = transform.slice(); // optimistic; the wire value is authoritative
    return this.enqueue(async () => {
      const res = await this.api.setTransform(this.sessionId, instanceId, transform);
      this.sceneRevision = res.revision;
      this.log.push({ op: "set_transform", instanceId, transform: transform.slice() });
    });
  }

  async deleteAsset(assetId: string): Promise<number> {
    return this.enqueue(async () => {
      const res = await this.api.deleteAsset(this.sessionId, assetId);
      this.sceneRevision = res.revision;
      this.log.push({ op: "delete_asset", assetId });
      this.assets.delete(assetId);
      for (const [iid, inst] of [...this.instances]) {
        if (inst.assetId === assetId) {
          this.instances.delete(iid);
          this.instanceOrder = this.instanceOrder.filter((x) => x !== iid);
          if (this.selectedInstance === iid) this.selectedInstance = null;
        }
      }
      if (this.selectedAsset === assetId) this.selectedAsset = null;
      return res.deleted_instances;
    });
  }

  async deleteInstance(instanceId: string): Promise<void> {
    return this.enqueue(async () => {
      const res = await this.api.deleteInstance(this.sessionId, instanceId);
      this.sceneRevision = res.revision;
      this.log.push({ op: "delete_instance", instanceId });
      this.instances.delete(instanceId);
      this.instanceOrder = this.instanceOrder.filter((x) => x !== instanceId);
      if (this.selectedInstance === instanceId) this.selectedInstance = null;
    });
  }

  /** POST compose, wait until the service reports a terminal state, fetch
   * and parse the result, and switch to inspect mode. */
  async composeAndInspect(): Promise<ParsedMesh> {
    return this.enqueue(async () => {
      this.composing = true;
      this.lastError = null;
      try {
        await this.api.compose(this.sessionId);
      } catch (err) {
        if (err instanceof ApiError) {
          const d = err.detail as { stage?: string; message?: string };
          this.lastError = d && d.stage ? `${d.stage}: ${d.message}` : err.message;
        } else {
          this.lastError = String(err);
        }
        this.composing = false;
        throw err;
      }
      this.log.push({ op: "compose" });
      let status = await this.api.composeStatus(this.sessionId);
      while (status.state === "running") {
        await new Promise((r) => setTimeout(r, 150));
        status = await this.api.composeStatus(this.sessionId);
      }
      if (status.state === "error") {
        this.composing = false;
        this.lastError = `compose: ${status.error}`;
        throw new Error(this.lastError);
      }
      const result = await this.api.getResult(this.sessionId);
      this.resultMesh = parseObj(result.obj);
      this.resultRevision = result.resultRevision;
      this.sceneRevision = result.sceneRevision;
      this.composing = false;
      this.mode = "inspect";
      return this.resultMesh;
    });
  }

  /** Result bytes for the export button; logged as its own action. */
  async exportResult(): Promise<{ filename: string; obj: string }> {
    return this.enqueue(async () => {
      const result = await this.api.getResult(this.sessionId);
      this.log.push({ op: "export" });
      return { filename: `${this.sessionId}-result.obj`, obj: result.obj };
    });
  }

  async fetchScene(): Promise<SceneJson> {
    const { scene, revision } = await this.api.getScene(this.sessionId);
    this.sceneRevision = revision;
    return scene;
  }

  /** Rebuild all local state from the service (page reload path). */
  async refresh(): Promise<void> {
    const scene = await this.fetchScene();
    this.assets.clear();
    this.instances.clear();
    this.instanceOrder = [];
    for (const asset of scene.assets) {
      await this.loadAsset(String(asset.id));
    }
    for (const inst of scene.instances) {
      this.instances.set(inst.id, {
        id: inst.id,
        assetId: inst.asset_id,
        transform: inst.transform.slice(),
      });
      this.instanceOrder.push(inst.id);
    }
    if (this.selectedAsset && !this.assets.has(this.selectedAsset)) this.selectedAsset = null;
    if (this.selectedInstance && !this.instances.has(this.selectedInstance)) {
      this.selectedInstance = null;
    }
  }
}

/** Replay a recorded action log through the raw HTTP API on a fresh session.
 * Asset and instance ids are deterministic per session (a0, a1, ... / i0,
 * i1, ...), so logged ids stay valid verbatim. Returns the new session id. */
export async function replayLog(api: ApiClient, log: Action[]): Promise<string> {
  let sid = "";
  for (const action of log) {
    switch (action.op) {
      case "create_session":
        sid = (await api.createSession()).id;
        break;
      case "add_asset_generator":
        await api.addGeneratedAsset(sid, action.generator);
        break;
      case "add_asset_upload":
        await api.uploadAsset(sid, action.filename, action.content);
        break;
      case "add_stroke":
        await api.addStroke(sid, action.assetId, action.stroke);
        break;
      case "add_instance":
        await api.addInstance(sid, action.assetId);
        break;
      case "duplicate_instance":
        await api.duplicateInstance(sid, action.instanceId);
        break;
      case "set_transform":
        await api.setTransform(sid, action.instanceId, action.transform);
        break;
      case "delete_asset":
        await api.deleteAsset(sid, action.assetId);
        break;
      case "delete_instance":
        await api.deleteInstance(sid, action.instanceId);
        break;
      case "compose":
        await api.compose(sid);
        break;
      case "export":
        await api.getResult(sid);
        break;
    }
  }
  if (!sid) throw new Error("log contains no create_session action");
  return sid;
}
