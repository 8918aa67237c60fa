/** Typed client for the session service; one method per endpoint. */

import type { StrokeRecord } from "./mask";

export interface SessionInfo {
  id: string;
  revision: number;
}

export interface AssetResponse {
  asset_id: string;
  revision: number;
  n_vertices: number;
  n_faces: number;
}

export interface MaskResponse {
  revision: number;
  kept: number;
  dropped: number;
  mask: number[];
}

export interface InstanceResponse {
  instance_id: string;
  revision: number;
}

export interface ComposeResponse {
  revision: number;
  n_vertices: number;
  n_faces: number;
}

export interface ComposeStatus {
  state: "idle" | "running" | "done" | "error";
  scene_revision: number;
  result_revision: number | null;
  stale: boolean;
  error: string | null;
}

export interface ResultPayload {
  obj: string;
  resultRevision: number;
  sceneRevision: number;
  stale: boolean;
}

export type GeneratorSpec = { kind: string } & Record<string, unknown>;

export interface SceneInstanceJson {
  id: string;
  asset_id: string;
  transform: number[];
}

export interface SceneJson {
  version: number;
  assets: Record<string, unknown>[];
  instances: SceneInstanceJson[];
  compose_params: Record<string, unknown>;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: unknown,
  ) {
    super(typeof detail === "string" ? detail : JSON.stringify(detail));
  }
}

async function orThrow(res: Response): Promise<Response> {
  if (res.ok) return res;
  let detail: unknown = res.statusText;
  try {
    const body = (await res.json()) as { detail?: unknown };
    if (body && body.detail !== undefined) detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(res.status, detail);
}

export class ApiClient {
  constructor(readonly base: string = "") {}

  private url(path: string): string {
    return `${this.base}${path}`;
  }

  private async postJson<T>(path: string, body?: unknown): Promise<T> {
    const res = await orThrow(
      await fetch(this.url(path), {
        method: "POST",
        headers: body === undefined ? {} : { "content-type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      }),
    );
    return (await res.json()) as T;
  }

  async createSession(): Promise<SessionInfo> {
    return this.postJson<SessionInfo>("/sessions");
  }

  async deleteSession(sid: string): Promise<void> {
    await orThrow(await fetch(this.url(`/sessions/${sid}`), { method: "DELETE" }));
  }

  async getScene(sid: string): Promise<{ scene: SceneJson; revision: number }> {
    const res = await orThrow(await fetch(this.url(`/sessions/${sid}/scene`)));
    const revision = Number(res.headers.get("X-Scene-Revision") ?? "0");
    return { scene: (await res.json()) as SceneJson, revision };
  }

  async addGeneratedAsset(sid: string, generator: GeneratorSpec): Promise<AssetResponse> {
    return this.postJson<AssetResponse>(`/sessions/${sid}/assets`, { generator });
  }

  async uploadAsset(sid: string, filename: string, objText: string): Promise<AssetResponse> {
    const form = new FormData();
    form.append("file", new Blob([objText], { type: "model/obj" }), filename);
    const res = await orThrow(
      await fetch(this.url(`/sessions/${sid}/assets`), { method: "POST", body: form }),
    );
    return (await res.json()) as AssetResponse;
  }

  async getAssetMesh(sid: string, aid: string): Promise<string> {
    const res = await orThrow(await fetch(this.url(`/sessions/${sid}/assets/${aid}/mesh`)));
    return res.text();
  }

  async getAssetMask(sid: string, aid: string): Promise<MaskResponse> {
    const res = await orThrow(await fetch(this.url(`/sessions/${sid}/assets/${aid}/mask`)));
    return (await res.json()) as MaskResponse;
  }

  async addStroke(sid: string, aid: string, stroke: StrokeRecord): Promise<MaskResponse> {
    return this.postJson<MaskResponse>(`/sessions/${sid}/assets/${aid}/strokes`, stroke);
  }

  async deleteAsset(sid: string, aid: string): Promise<{ revision: number; deleted_instances: number }> {
    const res = await orThrow(
      await fetch(this.url(`/sessions/${sid}/assets/${aid}`), { method: "DELETE" }),
    );
    return (await res.json()) as { revision: number; deleted_instances: number };
  }

  async addInstance(sid: string, assetId: string): Promise<InstanceResponse> {
    return this.postJson<InstanceResponse>(`/sessions/${sid}/instances`, { asset_id: assetId });
  }

  async duplicateInstance(sid: string, instanceId: string): Promise<InstanceResponse> {
    return this.postJson<InstanceResponse>(`/sessions/${sid}/instances`, {
      duplicate_of: instanceId,
    });
  }

  async setTransform(sid: string, iid: string, transform: number[]): Promise<{ revision: number }> {
    const res = await orThrow(
      await fetch(this.url(`/sessions/${sid}/instances/${iid}/transform`), {
        method: "PUT",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ transform }),
      }),
    );
    return (await res.json()) as { revision: number };
  }

  async deleteInstance(sid: string, iid: string): Promise<{ revision: number }> {
    const res = await orThrow(
      await fetch(this.url(`/sessions/${sid}/instances/${iid}`), { method: "DELETE" }),
    );
    return (await res.json()) as { revision: number };
  }

  async compose(sid: string): Promise<ComposeResponse> {
    return this.postJson<ComposeResponse>(`/sessions/${sid}/compose`);
  }

  async composeStatus(sid: string): Promise<ComposeStatus> {
    const res = await orThrow(await fetch(this.url(`/sessions/${sid}/compose/status`)));
    return (await res.json()) as ComposeStatus;
  }

  async getResult(sid: string): Promise<ResultPayload> {
    const res = await orThrow(await fetch(this.url(`/sessions/${sid}/result`)));
    return {
      obj: await res.text(),
      resultRevision: Number(res.headers.get("X-Result-Revision") ?? "-1"),
      sceneRevision: Number(res.headers.get("X-Scene-Revision") ?? "-1"),
      stale: res.headers.get("X-Stale") === "true",
    };
  }

  async saveScene(sid: string): Promise<{ path: string; revision: number }> {
    return this.postJson<{ path: string; revision: number }>(`/sessions/${sid}/save`);
  }
}
