/** three.js viewport: draws the mirrored session and turns pointer gestures
 * into brush strokes and gizmo transforms.
 *
 * The scene graph is rebuilt from `ViewerSession` via `sync`; only in-gesture
 * previews mutate it directly, and every gesture ends by posting through the
 * session so the service stays authoritative. One stroke per paint drag,
 * one transform per gizmo drag, both sent on release.
 */

import * as THREE from "three";
import { OrbitControls } from "three/addons/controls/OrbitControls.js";

import {
  Axis,
  applyRingDrag,
  applyScaleDrag,
  applyTranslationDrag,
  ringAngle,
  scaleFromDistances,
  viewPlaneDelta,
  worldPerPixel,
} from "./gizmo";
import { BrushMode, StrokeRecord } from "./mask";
import { Mat4, Vec3 } from "./mat4";
import { ParsedMesh } from "./obj";
import { ViewerSession } from "./state";

const KEPT_COLOR = new THREE.Color(0.3, 0.72, 0.42);
const DROPPED_COLOR = new THREE.Color(0.83, 0.3, 0.3);
const NEUTRAL_COLOR = new THREE.Color(0.68, 0.7, 0.74);
const AXIS_COLORS: Record<Axis, number> = { x: 0xe05555, y: 0x55c06a, z: 0x5580e0 };
const AXIS_VECTORS: Record<Axis, Vec3> = { x: [1, 0, 0], y: [0, 1, 0], z: [0, 0, 1] };

function toThreeMatrix(m: Mat4): THREE.Matrix4 {
  // Matrix4.set takes row-major arguments, matching the wire format
  const t = new THREE.Matrix4();
  t.set(
    m[0]!, m[1]!, m[2]!, m[3]!,
    m[4]!, m[5]!, m[6]!, m[7]!,
    m[8]!, m[9]!, m[10]!, m[11]!,
    m[12]!, m[13]!, m[14]!, m[15]!,
  );
  return t;
}

function buildGeometry(mesh: ParsedMesh): THREE.BufferGeometry {
  const geo = new THREE.BufferGeometry();
  geo.setAttribute("position", new THREE.BufferAttribute(Float32Array.from(mesh.positions), 3));
  geo.setIndex(new THREE.BufferAttribute(mesh.indices.slice(), 1));
  geo.computeVertexNormals();
  return geo;
}

function addColorAttribute(geo: THREE.BufferGeometry, mesh: ParsedMesh): void {
  const colors = new Float32Array(mesh.nVertices * 3);
  if (mesh.colors) {
    colors.set(mesh.colors);
  } else {
    for (let i = 0; i < mesh.nVertices; i++) NEUTRAL_COLOR.toArray(colors, 3 * i);
  }
  geo.setAttribute("color", new THREE.BufferAttribute(colors, 3));
}

function paintColors(geo: THREE.BufferGeometry, mask: Uint8Array): void {
  const attr = geo.getAttribute("color") as THREE.BufferAttribute;
  for (let i = 0; i < mask.length; i++) {
    (mask[i] ? KEPT_COLOR : DROPPED_COLOR).toArray(attr.array as Float32Array, 3 * i);
  }
  attr.needsUpdate = true;
}

function disposeGroup(group: THREE.Group): void {
  for (const child of [...group.children]) {
    group.remove(child);
    const mesh = child as THREE.Mesh;
    if (mesh.geometry) mesh.geometry.dispose();
    const mat = mesh.material as THREE.Material | undefined;
    if (mat) mat.dispose();
  }
}

/** Running min distance from every vertex to the stroke path, extended one
 * pointer sample at a time so long drags stay cheap. Matches the polyline
 * distance the service computes: once a segment exists, the extra distance
 * to the first point can never win (the point lies on that segment). */
class StrokePreview {
  readonly path: [number, number, number][] = [];
  private readonly dist: Float64Array;

  constructor(private readonly positions: Float64Array) {
    this.dist = new Float64Array(positions.length / 3).fill(Infinity);
  }

  extend(p: Vec3): void {
    const last = this.path[this.path.length - 1];
    if (last) {
      const dx = p[0] - last[0];
      const dy = p[1] - last[1];
      const dz = p[2] - last[2];
      if (dx * dx + dy * dy + dz * dz < 1e-10) return; // duplicate sample
    }
    const n = this.dist.length;
    const pos = this.positions;
    if (!last) {
      for (let i = 0; i < n; i++) {
        const dx = pos[3 * i]! - p[0];
        const dy = pos[3 * i + 1]! - p[1];
        const dz = pos[3 * i + 2]! - p[2];
        const d = Math.sqrt(dx * dx + dy * dy + dz * dz);
        if (d < this.dist[i]!) this.dist[i] = d;
      }
    } else {
      const [ax, ay, az] = last;
      const abx = p[0] - ax;
      const aby = p[1] - ay;
      const abz = p[2] - az;
      const denom = abx * abx + aby * aby + abz * abz;
      for (let i = 0; i < n; i++) {
        const px = pos[3 * i]!;
        const py = pos[3 * i + 1]!;
        const pz = pos[3 * i + 2]!;
        let t = ((px - ax) * abx + (py - ay) * aby + (pz - az) * abz) / denom;
        t = t < 0 ? 0 : t > 1 ? 1 : t;
        const dx = px - (ax + t * abx);
        const dy = py - (ay + t * aby);
        const dz = pz - (az + t * abz);
        const d = Math.sqrt(dx * dx + dy * dy + dz * dz);
        if (d < this.dist[i]!) this.dist[i] = d;
      }
    }
    this.path.push([p[0], p[1], p[2]]);
  }

  previewMask(committed: Uint8Array, radius: number, mode: BrushMode): Uint8Array {
    const next = committed.slice();
    const value = mode === "keep" ? 1 : 0;
    for (let i = 0; i < next.length; i++) {
      if (this.dist[i]! <= radius) next[i] = value;
    }
    return next;
  }
}

interface HandleData {
  handle: "ring" | "translate" | "scale";
  axis: Axis | null;
}

type DragState =
  | { kind: "paint"; assetId: string; preview: StrokePreview; radius: number; mode: BrushMode }
  | {
      kind: "ring";
      instanceId: string;
      axis: Axis;
      center: Vec3;
      start: Mat4;
      plane: THREE.Plane;
      from: Vec3;
      preview: Mat4;
    }
  | {
      kind: "translate";
      instanceId: string;
      center: Vec3;
      start: Mat4;
      startX: number;
      startY: number;
      unitsPerPixel: number;
      right: Vec3;
      up: Vec3;
      preview: Mat4;
    }
  | {
      kind: "scale";
      instanceId: string;
      center: Vec3;
      start: Mat4;
      plane: THREE.Plane;
      startDist: number;
      preview: Mat4;
    };

export interface ViewportCallbacks {
  changed: () => void;
  error: (message: string) => void;
}

export class Viewport {
  readonly renderer: THREE.WebGLRenderer;
  readonly camera: THREE.PerspectiveCamera;
  readonly controls: OrbitControls;
  private readonly scene = new THREE.Scene();
  private readonly raycaster = new THREE.Raycaster();
  private readonly paintGroup = new THREE.Group();
  private readonly instanceGroup = new THREE.Group();
  private readonly resultGroup = new THREE.Group();
  private readonly gizmo = new THREE.Group();
  private readonly instanceMeshes = new Map<string, THREE.Mesh>();
  private paintMesh: THREE.Mesh | null = null;
  private paintAssetId: string | null = null;
  private resultFor: ParsedMesh | null = null;
  private drag: DragState | null = null;

  constructor(
    private readonly container: HTMLElement,
    private readonly session: ViewerSession,
    private readonly callbacks: ViewportCallbacks,
  ) {
    this.renderer = new THREE.WebGLRenderer({ antialias: true });
    this.renderer.setPixelRatio(window.devicePixelRatio);
    this.renderer.setClearColor(0x14161a);
    container.appendChild(this.renderer.domElement);

    this.camera = new THREE.PerspectiveCamera(55, 1, 0.01, 100);
    this.camera.position.set(...session.camera.position);

    this.scene.add(new THREE.HemisphereLight(0xdde4f0, 0x30343c, 1.1));
    const sun = new THREE.DirectionalLight(0xffffff, 1.4);
    sun.position.set(3, 5, 2);
    this.scene.add(sun);
    const grid = new THREE.GridHelper(8, 16, 0x3a4050, 0x262a33);
    this.scene.add(grid);
    this.scene.add(this.paintGroup, this.instanceGroup, this.resultGroup, this.gizmo);

    // register before OrbitControls so a claimed gesture can stop its listener
    const canvas = this.renderer.domElement;
    canvas.addEventListener("pointerdown", (e) => this.onPointerDown(e));
    canvas.addEventListener("pointermove", (e) => this.onPointerMove(e));
    canvas.addEventListener("pointerup", (e) => this.onPointerUp(e));
    canvas.addEventListener("pointercancel", (e) => this.onPointerUp(e));

    this.controls = new OrbitControls(this.camera, canvas);
    this.controls.target.set(...session.camera.target);
    this.controls.enableDamping = true;
    this.controls.addEventListener("change", () => {
      this.session.camera = {
        position: this.camera.position.toArray() as [number, number, number],
        target: this.controls.target.toArray() as [number, number, number],
      };
    });

    const resize = () => {
      const w = container.clientWidth || 1;
      const h = container.clientHeight || 1;
      this.renderer.setSize(w, h);
      this.camera.aspect = w / h;
      this.camera.updateProjectionMatrix();
    };
    new ResizeObserver(resize).observe(container);
    resize();

    const tick = () => {
      this.controls.update();
      this.renderer.render(this.scene, this.camera);
      requestAnimationFrame(tick);
    };
    requestAnimationFrame(tick);
  }

  /** Rebuild the scene graph from session state. Cheap at desk scale. */
  sync(): void {
    const s = this.session;
    this.syncPaintMesh();
    this.syncInstances();
    this.syncResult();
    const showResult = s.mode === "inspect" && this.resultGroup.children.length > 0;
    this.paintGroup.visible = s.mode === "segment";
    this.instanceGroup.visible = s.mode === "compose" || (s.mode === "inspect" && !showResult);
    this.resultGroup.visible = showResult;
    this.syncGizmo();
  }

  private syncPaintMesh(): void {
    const s = this.session;
    const asset = s.selectedAsset ? s.assets.get(s.selectedAsset) : undefined;
    if (!asset) {
      disposeGroup(this.paintGroup);
      this.paintMesh = null;
      this.paintAssetId = null;
      return;
    }
    if (this.paintAssetId !== asset.id || !this.paintMesh) {
      disposeGroup(this.paintGroup);
      const geo = buildGeometry(asset.mesh);
      addColorAttribute(geo, asset.mesh);
      const mat = new THREE.MeshStandardMaterial({
        vertexColors: true,
        roughness: 0.85,
        metalness: 0.05,
      });
      this.paintMesh = new THREE.Mesh(geo, mat);
      this.paintGroup.add(this.paintMesh);
      this.paintAssetId = asset.id;
    }
    paintColors(this.paintMesh.geometry, asset.mask);
  }

  private syncInstances(): void {
    const s = this.session;
    const wanted = new Set(s.instanceOrder);
    for (const [iid, mesh] of [...this.instanceMeshes]) {
      if (!wanted.has(iid)) {
        this.instanceGroup.remove(mesh);
        mesh.geometry.dispose();
        (mesh.material as THREE.Material).dispose();
        this.instanceMeshes.delete(iid);
      }
    }
    for (const iid of s.instanceOrder) {
      const inst = s.instances.get(iid)!;
      const asset = s.assets.get(inst.assetId);
      if (!asset) continue;
      let mesh = this.instanceMeshes.get(iid);
      if (!mesh) {
        const geo = buildGeometry(asset.mesh);
        addColorAttribute(geo, asset.mesh);
        const mat = new THREE.MeshStandardMaterial({
          vertexColors: true,
          roughness: 0.8,
          metalness: 0.05,
        });
        mesh = new THREE.Mesh(geo, mat);
        mesh.matrixAutoUpdate = false;
        mesh.userData = { instanceId: iid };
        this.instanceGroup.add(mesh);
        this.instanceMeshes.set(iid, mesh);
      }
      if (this.drag === null || !("instanceId" in this.drag) || this.drag.instanceId !== iid) {
        mesh.matrix.copy(toThreeMatrix(inst.transform));
      }
      const mat = mesh.material as THREE.MeshStandardMaterial;
      mat.emissive.setHex(iid === s.selectedInstance ? 0x263d63 : 0x000000);
    }
  }

  private syncResult(): void {
    const mesh = this.session.resultMesh;
    if (mesh === this.resultFor) return;
    disposeGroup(this.resultGroup);
    this.resultFor = mesh;
    if (!mesh) return;
    const geo = buildGeometry(mesh);
    addColorAttribute(geo, mesh);
    const mat = new THREE.MeshStandardMaterial({
      vertexColors: true,
      roughness: 0.75,
      metalness: 0.1,
    });
    this.resultGroup.add(new THREE.Mesh(geo, mat));
  }

  private selectedInstanceMesh(): THREE.Mesh | null {
    const iid = this.session.selectedInstance;
    return iid ? (this.instanceMeshes.get(iid) ?? null) : null;
  }

  private gizmoCenter(): Vec3 {
    const mesh = this.selectedInstanceMesh();
    if (!mesh) return [0, 0, 0];
    mesh.updateMatrixWorld(true);
    const box = new THREE.Box3().setFromObject(mesh);
    const c = box.getCenter(new THREE.Vector3());
    return [c.x, c.y, c.z];
  }

  private syncGizmo(): void {
    disposeGroup(this.gizmo);
    const s = this.session;
    const mesh = this.selectedInstanceMesh();
    this.gizmo.visible = s.mode === "compose" && mesh !== null;
    if (!this.gizmo.visible || !mesh) return;

    mesh.updateMatrixWorld(true);
    const box = new THREE.Box3().setFromObject(mesh);
    const size = box.getSize(new THREE.Vector3());
    const center = box.getCenter(new THREE.Vector3());
    const radius = Math.max(0.5 * Math.max(size.x, size.y, size.z) * 1.25, 0.25);

    const handleMat = (color: number) =>
      new THREE.MeshBasicMaterial({ color, depthTest: false, transparent: true, opacity: 0.9 });

    for (const axis of ["x", "y", "z"] as Axis[]) {
      const ring = new THREE.Mesh(
        new THREE.TorusGeometry(radius, Math.max(0.012, radius * 0.035), 10, 72),
        handleMat(AXIS_COLORS[axis]),
      );
      // TorusGeometry lies in the xy plane (axis along z); reorient per axis
      if (axis === "x") ring.rotation.y = Math.PI / 2;
      if (axis === "y") ring.rotation.x = Math.PI / 2;
      ring.renderOrder = 10;
      ring.userData = { handle: "ring", axis } satisfies HandleData;
      this.gizmo.add(ring);
    }
    const sphere = new THREE.Mesh(new THREE.SphereGeometry(radius * 0.16, 24, 16), handleMat(0xe8d44d));
    sphere.renderOrder = 11;
    sphere.userData = { handle: "translate", axis: null } satisfies HandleData;
    this.gizmo.add(sphere);

    const cubeHalf = radius * 0.12;
    const cube = new THREE.Mesh(new THREE.BoxGeometry(2 * cubeHalf, 2 * cubeHalf, 2 * cubeHalf), handleMat(0xcf7fe0));
    cube.position.setScalar(radius * 0.78);
    cube.renderOrder = 11;
    cube.userData = { handle: "scale", axis: null } satisfies HandleData;
    this.gizmo.add(cube);

    this.gizmo.position.copy(center);
  }

  private pointerRay(e: PointerEvent): THREE.Raycaster {
    const rect = this.renderer.domElement.getBoundingClientRect();
    const ndc = new THREE.Vector2(
      ((e.clientX - rect.left) / rect.width) * 2 - 1,
      -((e.clientY - rect.top) / rect.height) * 2 + 1,
    );
    this.raycaster.setFromCamera(ndc, this.camera);
    return this.raycaster;
  }

  private planeHit(ray: THREE.Raycaster, plane: THREE.Plane): Vec3 | null {
    const hit = ray.ray.intersectPlane(plane, new THREE.Vector3());
    return hit ? [hit.x, hit.y, hit.z] : null;
  }

  private claim(e: PointerEvent): void {
    e.stopImmediatePropagation();
    e.preventDefault();
    this.controls.enabled = false;
    this.renderer.domElement.setPointerCapture(e.pointerId);
  }

  private onPointerDown(e: PointerEvent): void {
    if (e.button !== 0 || this.drag) return;
    const s = this.session;
    if (s.mode === "segment") {
      this.startPaint(e);
    } else if (s.mode === "compose") {
      this.startGizmoOrSelect(e);
    }
  }

  private startPaint(e: PointerEvent): void {
    const s = this.session;
    const asset = s.selectedAsset ? s.assets.get(s.selectedAsset) : undefined;
    if (!asset || !this.paintMesh) return;
    const hits = this.pointerRay(e).intersectObject(this.paintMesh, false);
    const hit = hits[0];
    if (!hit) return; // off-surface press orbits instead
    this.claim(e);
    const preview = new StrokePreview(asset.mesh.positions);
    preview.extend([hit.point.x, hit.point.y, hit.point.z]);
    this.drag = {
      kind: "paint",
      assetId: asset.id,
      preview,
      radius: s.brush.radius,
      mode: s.brush.mode,
    };
    this.refreshPaintPreview(asset.mask);
  }

  private refreshPaintPreview(committed: Uint8Array): void {
    if (!this.drag || this.drag.kind !== "paint" || !this.paintMesh) return;
    const mask = this.drag.preview.previewMask(committed, this.drag.radius, this.drag.mode);
    paintColors(this.paintMesh.geometry, mask);
  }

  private startGizmoOrSelect(e: PointerEvent): void {
    const s = this.session;
    const ray = this.pointerRay(e);
    const mesh = this.selectedInstanceMesh();
    if (mesh && this.gizmo.visible) {
      const handleHits = ray.intersectObjects(this.gizmo.children, false);
      const handleHit = handleHits[0];
      if (handleHit) {
        this.claim(e);
        this.startHandleDrag(e, ray, handleHit);
        return;
      }
    }
    const meshHits = ray.intersectObjects(this.instanceGroup.children, false);
    const meshHit = meshHits[0];
    if (meshHit) {
      this.claim(e);
      s.selectedInstance = (meshHit.object.userData as { instanceId: string }).instanceId;
      this.sync();
      this.callbacks.changed();
    }
  }

  private startHandleDrag(e: PointerEvent, ray: THREE.Raycaster, hit: THREE.Intersection): void {
    const s = this.session;
    const iid = s.selectedInstance!;
    const inst = s.instances.get(iid)!;
    const data = hit.object.userData as HandleData;
    const center = this.gizmoCenter();
    const centerV = new THREE.Vector3(...center);
    const start = inst.transform.slice();

    if (data.handle === "ring" && data.axis) {
      const normal = new THREE.Vector3(...AXIS_VECTORS[data.axis]);
      const plane = new THREE.Plane().setFromNormalAndCoplanarPoint(normal, centerV);
      const from = this.planeHit(ray, plane);
      if (!from) return;
      this.drag = { kind: "ring", instanceId: iid, axis: data.axis, center, start, plane, from, preview: start };
    } else if (data.handle === "translate") {
      const depth = this.camera.position.distanceTo(centerV);
      const unitsPerPixel = worldPerPixel(depth, this.camera.fov, this.renderer.domElement.clientHeight);
      const right = new THREE.Vector3().setFromMatrixColumn(this.camera.matrixWorld, 0);
      const up = new THREE.Vector3().setFromMatrixColumn(this.camera.matrixWorld, 1);
      this.drag = {
        kind: "translate",
        instanceId: iid,
        center,
        start,
        startX: e.clientX,
        startY: e.clientY,
        unitsPerPixel,
        right: [right.x, right.y, right.z],
        up: [up.x, up.y, up.z],
        preview: start,
      };
    } else {
      const normal = this.camera.getWorldDirection(new THREE.Vector3());
      const plane = new THREE.Plane().setFromNormalAndCoplanarPoint(normal, centerV);
      const first = this.planeHit(ray, plane);
      if (!first) return;
      const startDist = Math.hypot(first[0] - center[0], first[1] - center[1], first[2] - center[2]);
      this.drag = { kind: "scale", instanceId: iid, center, start, plane, startDist, preview: start };
    }
  }

  private onPointerMove(e: PointerEvent): void {
    const drag = this.drag;
    if (!drag) return;
    if (drag.kind === "paint") {
      const asset = this.session.assets.get(drag.assetId);
      if (!asset || !this.paintMesh) return;
      const hits = this.pointerRay(e).intersectObject(this.paintMesh, false);
      const hit = hits[0];
      if (!hit) return; // off-surface motion adds no path points
      drag.preview.extend([hit.point.x, hit.point.y, hit.point.z]);
      this.refreshPaintPreview(asset.mask);
      return;
    }
    const mesh = this.instanceMeshes.get(drag.instanceId);
    if (!mesh) return;
    if (drag.kind === "ring") {
      const to = this.planeHit(this.pointerRay(e), drag.plane);
      if (!to) return;
      const angle = ringAngle(drag.axis, drag.center, drag.from, to);
      drag.preview = applyRingDrag(drag.start, drag.axis, angle, drag.center);
    } else if (drag.kind === "translate") {
      const delta = viewPlaneDelta(
        e.clientX - drag.startX,
        e.clientY - drag.startY,
        drag.right,
        drag.up,
        drag.unitsPerPixel,
      );
      drag.preview = applyTranslationDrag(drag.start, delta);
      this.gizmo.position.set(
        drag.center[0] + delta[0],
        drag.center[1] + delta[1],
        drag.center[2] + delta[2],
      );
    } else {
      const hit = this.planeHit(this.pointerRay(e), drag.plane);
      if (!hit) return;
      const dist = Math.hypot(hit[0] - drag.center[0], hit[1] - drag.center[1], hit[2] - drag.center[2]);
      const factor = scaleFromDistances(drag.startDist, dist);
      drag.preview = applyScaleDrag(drag.start, factor, drag.center);
    }
    mesh.matrix.copy(toThreeMatrix(drag.preview));
  }

  private onPointerUp(e: PointerEvent): void {
    const drag = this.drag;
    if (!drag) return;
    this.drag = null;
    this.controls.enabled = true;
    if (this.renderer.domElement.hasPointerCapture(e.pointerId)) {
      this.renderer.domElement.releasePointerCapture(e.pointerId);
    }
    if (drag.kind === "paint") {
      if (drag.preview.path.length === 0) return;
      const stroke: StrokeRecord = { path: drag.preview.path, radius: drag.radius, mode: drag.mode };
      void this.session
        .paintStroke(drag.assetId, stroke)
        .then(() => {
          this.sync();
          this.callbacks.changed();
        })
        .catch((err) => this.callbacks.error(String(err)));
      return;
    }
    const inst = this.session.instances.get(drag.instanceId);
    if (!inst || toThreeMatrix(drag.preview).equals(toThreeMatrix(drag.start))) {
      this.sync(); // degenerate drag: snap the preview back, post nothing
      return;
    }
    void this.session
      .setTransform(drag.instanceId, drag.preview)
      .then(() => {
        this.sync();
        this.callbacks.changed();
      })
      .catch((err) => this.callbacks.error(String(err)));
    this.sync();
  }
}
