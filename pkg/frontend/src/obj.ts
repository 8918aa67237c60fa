/** Minimal OBJ reader for the service's mesh payloads. */

export interface ParsedMesh {
  /** xyz triples */
  positions: Float64Array;
  /** triangle vertex indices, 0-based */
  indices: Uint32Array;
  /** rgb triples when the file carries per-vertex colors, else null */
  colors: Float64Array | null;
  nVertices: number;
  nFaces: number;
}

export function parseObj(text: string): ParsedMesh {
  const positions: number[] = [];
  const colors: number[] = [];
  const indices: number[] = [];
  let sawColor = false;

  for (const raw of text.split("\n")) {
    const line = raw.trim();
    if (line === "" || line.startsWith("#")) continue;
    const parts = line.split(/\s+/);
    const tag = parts[0];
    if (tag === "v") {
      if (parts.length < 4) throw new Error(`bad vertex line: ${line}`);
      positions.push(Number(parts[1]), Number(parts[2]), Number(parts[3]));
      if (parts.length >= 7) {
        sawColor = true;
        colors.push(Number(parts[4]), Number(parts[5]), Number(parts[6]));
      } else {
        colors.push(1, 1, 1);
      }
    } else if (tag === "f") {
      if (parts.length < 4) throw new Error(`bad face line: ${line}`);
      // "f 1 2 3 4" fan-triangulates; "1/uv/n" forms keep the vertex index
      const idx = parts.slice(1).map((p) => {
        const v = Number(p.split("/")[0]);
        if (!Number.isInteger(v) || v === 0) throw new Error(`bad face index: ${p}`);
        return v > 0 ? v - 1 : positions.length / 3 + v;
      });
      for (let i = 1; i + 1 < idx.length; i++) {
        indices.push(idx[0]!, idx[i]!, idx[i + 1]!);
      }
    }
    // vn/vt/o/g/usemtl lines carry nothing we render
  }

  const nVertices = positions.length / 3;
  for (const i of indices) {
    if (i < 0 || i >= nVertices) throw new Error(`face index ${i + 1} out of range`);
  }
  return {
    positions: Float64Array.from(positions),
    indices: Uint32Array.from(indices),
    colors: sawColor ? Float64Array.from(colors) : null,
    nVertices,
    nFaces: indices.length / 3,
  };
}
