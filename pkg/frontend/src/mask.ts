/** Client-side brush selection, mirroring the service's stroke semantics
 * operation for operation so optimistic previews agree with the
 * authoritative masks it returns. */

export type BrushMode = "keep" | "drop";

export interface StrokeRecord {
  path: [number, number, number][];
  radius: number;
  mode: BrushMode;
}

function segmentDistance(
  px: number, py: number, pz: number,
  ax: number, ay: number, az: number,
  bx: number, by: number, bz: number,
): number {
  const abx = bx - ax;
  const aby = by - ay;
  const abz = bz - az;
  const denom = abx * abx + aby * aby + abz * abz;
  let dx: number, dy: number, dz: number;
  if (denom === 0) {
    dx = px - ax;
    dy = py - ay;
    dz = pz - az;
  } else {
    let t = ((px - ax) * abx + (py - ay) * aby + (pz - az) * abz) / denom;
    t = t < 0 ? 0 : t > 1 ? 1 : t;
    dx = px - (ax + t * abx);
    dy = py - (ay + t * aby);
    dz = pz - (az + t * abz);
  }
  return Math.sqrt(dx * dx + dy * dy + dz * dz);
}

/** Min Euclidean distance from every vertex to the stroke polyline. */
export function polylineDistances(positions: Float64Array, path: [number, number, number][]): Float64Array {
  const n = positions.length / 3;
  const out = new Float64Array(n);
  if (path.length === 0) throw new Error("stroke path is empty");
  if (path.length === 1) {
    const [ax, ay, az] = path[0]!;
    for (let i = 0; i < n; i++) {
      const dx = positions[3 * i]! - ax;
      const dy = positions[3 * i + 1]! - ay;
      const dz = positions[3 * i + 2]! - az;
      out[i] = Math.sqrt(dx * dx + dy * dy + dz * dz);
    }
    return out;
  }
  out.fill(Infinity);
  for (let s = 0; s + 1 < path.length; s++) {
    const [ax, ay, az] = path[s]!;
    const [bx, by, bz] = path[s + 1]!;
    for (let i = 0; i < n; i++) {
      const d = segmentDistance(
        positions[3 * i]!, positions[3 * i + 1]!, positions[3 * i + 2]!,
        ax, ay, az, bx, by, bz,
      );
      if (d < out[i]!) out[i] = d;
    }
  }
  return out;
}

/** New mask with the stroke painted on top; vertices outside keep their state. */
export function applyStrokeLocal(mask: Uint8Array, positions: Float64Array, stroke: StrokeRecord): Uint8Array {
  const next = mask.slice();
  const dist = polylineDistances(positions, stroke.path);
  const value = stroke.mode === "keep" ? 1 : 0;
  for (let i = 0; i < next.length; i++) {
    if (dist[i]! <= stroke.radius) next[i] = value;
  }
  return next;
}

export function keptCount(mask: Uint8Array): number {
  let k = 0;
  for (const v of mask) k += v;
  return k;
}
