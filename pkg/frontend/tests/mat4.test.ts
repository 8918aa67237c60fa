import { describe, expect, it } from "vitest";

import {
  applyPoint,
  approxEqual,
  identity,
  inverse,
  mul,
  rotationAxis,
  translation,
  uniformScale,
  Vec3,
} from "../src/mat4";

describe("mat4", () => {
  it("multiplies against hand-computed products", () => {
    const t = translation(1, 2, 3);
    const s = uniformScale(2);
    // scale then translate: p' = 2p + (1,2,3)
    const m = mul(t, s);
    expect(applyPoint(m, [1, 1, 1])).toEqual([3, 4, 5]);
    // translate then scale: p' = 2(p + (1,2,3))
    const m2 = mul(s, t);
    expect(applyPoint(m2, [1, 1, 1])).toEqual([4, 6, 8]);
  });

  it("rotates points around each axis", () => {
    const p: Vec3 = [1, 0, 0];
    const z90 = applyPoint(rotationAxis("z", Math.PI / 2), p);
    expect(z90[0]).toBeCloseTo(0, 12);
    expect(z90[1]).toBeCloseTo(1, 12);
    const y90 = applyPoint(rotationAxis("y", Math.PI / 2), p);
    expect(y90[2]).toBeCloseTo(-1, 12);
    const x90 = applyPoint(rotationAxis("x", Math.PI / 2), [0, 1, 0]);
    expect(x90[2]).toBeCloseTo(1, 12);
  });

  it("inverts affine transforms", () => {
    const m = mul(translation(0.3, -1, 2), mul(rotationAxis("y", 0.7), uniformScale(1.8)));
    expect(approxEqual(mul(m, inverse(m)), identity(), 1e-12)).toBe(true);
    expect(approxEqual(mul(inverse(m), m), identity(), 1e-12)).toBe(true);
  });

  it("rejects singular matrices", () => {
    const degenerate = new Array(16).fill(0);
    expect(() => inverse(degenerate)).toThrow(/singular/);
  });
});
