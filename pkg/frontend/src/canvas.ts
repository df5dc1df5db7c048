/**
 * Sketch canvas widget: mirrors a StrokeRaster onto a display canvas,
 * captures pointer strokes, and exports the raster as base64 PNG via an
 * offscreen canvas (pixels are written 0/255 directly, so the export is
 * pixel-exact with the raster grid).
 */

import { StrokeRaster } from "./stroke.js";

export class SketchCanvas {
  readonly raster: StrokeRaster;
  penSize = 2;
  overlay: Uint8Array | null = null; // optional ghost of the projected contour
  private ctx: CanvasRenderingContext2D;
  private drawing = false;

  constructor(private canvas: HTMLCanvasElement, width: number, height: number) {
    canvas.width = width;
    canvas.height = height;
    this.raster = new StrokeRaster(width, height);
    this.ctx = canvas.getContext("2d")!;
    this.bind();
    this.repaint();
  }

  private toGrid(e: PointerEvent): { x: number; y: number } {
    const rect = this.canvas.getBoundingClientRect();
    return {
      x: ((e.clientX - rect.left) / rect.width) * this.canvas.width,
      y: ((e.clientY - rect.top) / rect.height) * this.canvas.height,
    };
  }

  private bind(): void {
    this.canvas.addEventListener("pointerdown", (e) => {
      this.drawing = true;
      this.canvas.setPointerCapture(e.pointerId);
      this.raster.beginStroke(this.penSize, this.toGrid(e));
      this.repaint();
    });
    this.canvas.addEventListener("pointermove", (e) => {
      if (!this.drawing) return;
      this.raster.extendStroke(this.toGrid(e));
      this.repaint();
    });
    this.canvas.addEventListener("pointerup", () => {
      this.drawing = false;
    });
  }

  undo(): void {
    this.raster.undo();
    this.repaint();
  }

  clear(): void {
    this.raster.clear();
    this.repaint();
  }

  setOverlay(overlay: Uint8Array | null): void {
    this.overlay = overlay;
    this.repaint();
  }

  repaint(): void {
    const { width, height } = this.canvas;
    const image = this.ctx.createImageData(width, height);
    const grid = this.raster.pixels;
    for (let i = 0; i < grid.length; i++) {
      const v = grid[i] ? 255 : 0;
      image.data[i * 4] = v;
      image.data[i * 4 + 1] = v;
      image.data[i * 4 + 2] = v;
      image.data[i * 4 + 3] = 255;
      if (this.overlay && this.overlay[i] === 0 && grid[i]) {
        // ghost the server-side contour in blue under the user's strokes
        image.data[i * 4] = 90;
        image.data[i * 4 + 1] = 140;
        image.data[i * 4 + 2] = 255;
      }
    }
    this.ctx.putImageData(image, 0, 0);
  }

  /** Export the raster (not the display) as base64 PNG. */
  exportPngBase64(): string {
    const { width, height } = this.canvas;
    const off = document.createElement("canvas");
    off.width = width;
    off.height = height;
    const ctx = off.getContext("2d")!;
    const image = ctx.createImageData(width, height);
    const grid = this.raster.pixels;
    for (let i = 0; i < grid.length; i++) {
      const v = grid[i] ? 255 : 0;
      image.data[i * 4] = v;
      image.data[i * 4 + 1] = v;
      image.data[i * 4 + 2] = v;
      image.data[i * 4 + 3] = 255;
    }
    ctx.putImageData(image, 0, 0);
    return off.toDataURL("image/png").split(",")[1];
  }
}
