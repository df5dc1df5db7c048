/**
 * Stroke capture onto a binary raster at the server's sketch resolution.
 *
 * The server contract is a binary image where pen pixels are exactly 0 and
 * blank paper is 1 (255 in the exported PNG). Strokes are rasterized here,
 * client side, as disc-stamped line segments; the display canvas only
 * mirrors this grid, so what is exported is exactly what was drawn.
 */

export interface StrokePoint {
  x: number;
  y: number;
}

interface Stroke {
  points: StrokePoint[];
  penSize: number;
}

export class StrokeRaster {
  readonly width: number;
  readonly height: number;
  private strokes: Stroke[] = [];
  private grid: Uint8Array;

  constructor(width: number, height: number) {
    this.width = width;
    this.height = height;
    this.grid = new Uint8Array(width * height).fill(1);
  }

  /** Pixel value at (row, col): 0 = stroke, 1 = blank. */
  at(row: number, col: number): number {
    return this.grid[row * this.width + col];
  }

  get pixels(): Uint8Array {
    return this.grid;
  }

  strokeCount(): number {
    return this.strokes.length;
  }

  isEmpty(): boolean {
    return this.strokes.length === 0;
  }

  beginStroke(penSize: number, p: StrokePoint): void {
    this.strokes.push({ points: [p], penSize });
    this.stampDisc(p, penSize);
  }

  extendStroke(p: StrokePoint): void {
    const stroke = this.strokes[this.strokes.length - 1];
    if (!stroke) return;
    const last = stroke.points[stroke.points.length - 1];
    stroke.points.push(p);
    this.stampSegment(last, p, stroke.penSize);
  }

  /** Remove the last stroke; pixels owned only by it revert to blank. */
  undo(): void {
    if (!this.strokes.length) return;
    this.strokes.pop();
    this.rebuild();
  }

  clear(): void {
    this.strokes = [];
    this.grid.fill(1);
  }

  private rebuild(): void {
    this.grid.fill(1);
    for (const s of this.strokes) {
      let prev = s.points[0];
      this.stampDisc(prev, s.penSize);
      for (let i = 1; i < s.points.length; i++) {
        this.stampSegment(prev, s.points[i], s.penSize);
        prev = s.points[i];
      }
    }
  }

  private stampDisc(p: StrokePoint, penSize: number): void {
    const r = Math.max(0, (penSize - 1) / 2);
    const cx = Math.floor(p.x);
    const cy = Math.floor(p.y);
    const reach = Math.ceil(r);
    for (let dy = -reach; dy <= reach; dy++) {
      for (let dx = -reach; dx <= reach; dx++) {
        if (dx * dx + dy * dy > r * r + 1e-9) continue;
        const x = cx + dx;
        const y = cy + dy;
        if (x >= 0 && x < this.width && y >= 0 && y < this.height) {
          this.grid[y * this.width + x] = 0;
        }
      }
    }
  }

  private stampSegment(a: StrokePoint, b: StrokePoint, penSize: number): void {
    const steps = Math.max(1, Math.ceil(Math.hypot(b.x - a.x, b.y - a.y)));
    for (let i = 0; i <= steps; i++) {
      const t = i / steps;
      this.stampDisc({ x: a.x + (b.x - a.x) * t, y: a.y + (b.y - a.y) * t }, penSize);
    }
  }
}

/** Convenience: a closed polygonal stroke (used by scripted sessions). */
export function drawClosedPolygon(
  raster: StrokeRaster,
  vertices: StrokePoint[],
  penSize = 1
): void {
  if (!vertices.length) return;
  raster.beginStroke(penSize, vertices[0]);
  for (let i = 1; i < vertices.length; i++) raster.extendStroke(vertices[i]);
  raster.extendStroke(vertices[0]);
}
