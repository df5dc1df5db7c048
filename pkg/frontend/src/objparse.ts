/** Tiny OBJ parser for the triangles-only meshes the server serves. */

export interface ParsedMesh {
  positions: Float32Array; // 3 per vertex
  indices: Uint32Array; // 3 per face
}

export function parseObj(text: string): ParsedMesh {
  const positions: number[] = [];
  const indices: number[] = [];
  for (const line of text.split("\n")) {
    const parts = line.trim().split(/\s+/);
    if (parts[0] === "v" && parts.length >= 4) {
      positions.push(Number(parts[1]), Number(parts[2]), Number(parts[3]));
    } else if (parts[0] === "f" && parts.length >= 4) {
      if (parts.length !== 4) {
        throw new Error("only triangle faces are supported");
      }
      for (let i = 1; i <= 3; i++) {
        indices.push(Number(parts[i].split("/")[0]) - 1);
      }
    }
  }
  const n = positions.length / 3;
  for (const idx of indices) {
    if (!(idx >= 0 && idx < n)) throw new Error(`face index ${idx} out of range`);
  }
  return {
    positions: new Float32Array(positions),
    indices: new Uint32Array(indices),
  };
}
