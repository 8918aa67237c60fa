/** Gizmo math: axis rotation rings, view-plane translation, uniform scale.
 *
 * Everything here is pure so the interaction rules are testable without a
 * renderer; the viewport layer only supplies pointer rays and picks.
 */

import { Mat4, Vec3, mul, rotationAxis, translation, uniformScale } from "./mat4";

export type Axis = "x" | "y" | "z";

const AXIS_VECTORS: Record<Axis, Vec3> = {
  x: [1, 0, 0],
  y: [0, 1, 0],
  z: [0, 0, 1],
};

function sub(a: Vec3, b: Vec3): Vec3 {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}

function dot(a: Vec3, b: Vec3): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

function cross(a: Vec3, b: Vec3): Vec3 {
  return [
    a[1] * b[2] - a[2] * b[1],
    a[2] * b[0] - a[0] * b[2],
    a[0] * b[1] - a[1] * b[0],
  ];
}

/** Signed angle between two pointer positions on a ring's rotation plane.
 * Both points are world positions near the ring; their components along the
 * axis are discarded. Returns 0 for degenerate (centered) picks. */
export function ringAngle(axis: Axis, center: Vec3, from: Vec3, to: Vec3): number {
  const n = AXIS_VECTORS[axis];
  const project = (p: Vec3): Vec3 => {
    const rel = sub(p, center);
    const along = dot(rel, n);
    return [rel[0] - along * n[0], rel[1] - along * n[1], rel[2] - along * n[2]];
  };
  const a = project(from);
  const b = project(to);
  const la = Math.sqrt(dot(a, a));
  const lb = Math.sqrt(dot(b, b));
  if (la === 0 || lb === 0) return 0;
  return Math.atan2(dot(cross(a, b), n), dot(a, b));
}

/** Rotate the instance about a world axis through its own center. */
export function applyRingDrag(current: Mat4, axis: Axis, angle: number, center: Vec3): Mat4 {
  const toOrigin = translation(-center[0], -center[1], -center[2]);
  const back = translation(center[0], center[1], center[2]);
  return mul(back, mul(rotationAxis(axis, angle), mul(toOrigin, current)));
}

/** Translate by a world-space delta (already view-plane mapped). */
export function applyTranslationDrag(current: Mat4, delta: Vec3): Mat4 {
  return mul(translation(delta[0], delta[1], delta[2]), current);
}

/** Scale uniformly about the instance center. */
export function applyScaleDrag(current: Mat4, factor: number, center: Vec3): Mat4 {
  if (!(factor > 0)) throw new Error(`scale factor must be positive, got ${factor}`);
  const toOrigin = translation(-center[0], -center[1], -center[2]);
  const back = translation(center[0], center[1], center[2]);
  return mul(back, mul(uniformScale(factor), mul(toOrigin, current)));
}

/** World units per screen pixel at a given depth in a perspective view;
 * this is what makes pointer translation 1:1 at the object's distance. */
export function worldPerPixel(depth: number, fovYDegrees: number, viewportHeightPx: number): number {
  const halfFov = (fovYDegrees * Math.PI) / 360;
  return (2 * depth * Math.tan(halfFov)) / viewportHeightPx;
}

/** Pixel delta to world delta on the camera's view plane (y grows downward
 * on screen, upward in world). */
export function viewPlaneDelta(
  dxPx: number,
  dyPx: number,
  cameraRight: Vec3,
  cameraUp: Vec3,
  unitsPerPixel: number,
): Vec3 {
  return [
    (dxPx * cameraRight[0] - dyPx * cameraUp[0]) * unitsPerPixel,
    (dxPx * cameraRight[1] - dyPx * cameraUp[1]) * unitsPerPixel,
    (dxPx * cameraRight[2] - dyPx * cameraUp[2]) * unitsPerPixel,
  ];
}

/** Scale factor from the pick distances of a corner-cube drag: the cube
 * tracks the pointer's distance from the instance center. */
export function scaleFromDistances(startDist: number, currentDist: number): number {
  if (startDist <= 0) return 1;
  return Math.max(currentDist / startDist, 1e-3);
}
