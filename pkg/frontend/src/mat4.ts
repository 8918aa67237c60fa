/** Row-major 4x4 transforms, matching the service's wire format. */

export type Mat4 = number[];
export type Vec3 = [number, number, number];

export function identity(): Mat4 {
  return [1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1];
}

export function mul(a: Mat4, b: Mat4): Mat4 {
  const out = new Array<number>(16).fill(0);
  for (let r = 0; r < 4; r++) {
    for (let c = 0; c < 4; c++) {
      let s = 0;
      for (let k = 0; k < 4; k++) s += a[r * 4 + k]! * b[k * 4 + c]!;
      out[r * 4 + c] = s;
    }
  }
  return out;
}

export function translation(x: number, y: number, z: number): Mat4 {
  return [1, 0, 0, x, 0, 1, 0, y, 0, 0, 1, z, 0, 0, 0, 1];
}

export function uniformScale(s: number): Mat4 {
  return [s, 0, 0, 0, 0, s, 0, 0, 0, 0, s, 0, 0, 0, 0, 1];
}

export function rotationAxis(axis: "x" | "y" | "z", angle: number): Mat4 {
  const c = Math.cos(angle);
  const s = Math.sin(angle);
  if (axis === "x") return [1, 0, 0, 0, 0, c, -s, 0, 0, s, c, 0, 0, 0, 0, 1];
  if (axis === "y") return [c, 0, s, 0, 0, 1, 0, 0, -s, 0, c, 0, 0, 0, 0, 1];
  return [c, -s, 0, 0, s, c, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1];
}

export function applyPoint(m: Mat4, p: Vec3): Vec3 {
  const [x, y, z] = p;
  return [
    m[0]! * x + m[1]! * y + m[2]! * z + m[3]!,
    m[4]! * x + m[5]! * y + m[6]! * z + m[7]!,
    m[8]! * x + m[9]! * y + m[10]! * z + m[11]!,
  ];
}

export function inverse(m: Mat4): Mat4 {
  // general 4x4 inverse via Gauss-Jordan; transforms here are affine and
  // well-conditioned, so no pivoting heroics are needed
  const a = m.map((v) => v);
  const inv = identity();
  for (let col = 0; col < 4; col++) {
    let pivot = col;
    for (let r = col + 1; r < 4; r++) {
      if (Math.abs(a[r * 4 + col]!) > Math.abs(a[pivot * 4 + col]!)) pivot = r;
    }
    if (a[pivot * 4 + col] === 0) throw new Error("singular transform");
    if (pivot !== col) {
      for (let c = 0; c < 4; c++) {
        [a[col * 4 + c], a[pivot * 4 + c]] = [a[pivot * 4 + c]!, a[col * 4 + c]!];
        [inv[col * 4 + c], inv[pivot * 4 + c]] = [inv[pivot * 4 + c]!, inv[col * 4 + c]!];
      }
    }
    const d = a[col * 4 + col]!;
    for (let c = 0; c < 4; c++) {
      a[col * 4 + c]! /= d;
      inv[col * 4 + c]! /= d;
    }
    for (let r = 0; r < 4; r++) {
      if (r === col) continue;
      const f = a[r * 4 + col]!;
      if (f === 0) continue;
      for (let c = 0; c < 4; c++) {
        a[r * 4 + c]! -= f * a[col * 4 + c]!;
        inv[r * 4 + c]! -= f * inv[col * 4 + c]!;
      }
    }
  }
  return inv;
}

export function approxEqual(a: Mat4, b: Mat4, tol = 1e-9): boolean {
  return a.every((v, i) => Math.abs(v - b[i]!) <= tol);
}
