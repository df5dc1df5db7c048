/**
 * Minimal 8-bit grayscale PNG encoder.
 *
 * The deflate step is injected so the same chunk assembly runs in the
 * browser (via a canvas fallback this module is not needed for) and in
 * node-based tests (zlib.deflateSync). Keeping the encoder dependency-free
 * means the exported sketch bytes are identical wherever they are produced.
 */

export type DeflateFn = (raw: Uint8Array) => Uint8Array;

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  return table;
})();

function crc32(bytes: Uint8Array): number {
  let c = 0xffffffff;
  for (let i = 0; i < bytes.length; i++) {
    c = CRC_TABLE[(c ^ bytes[i]) & 0xff] ^ (c >>> 8);
  }
  return (c ^ 0xffffffff) >>> 0;
}

function chunk(type: string, data: Uint8Array): Uint8Array {
  const out = new Uint8Array(12 + data.length);
  const view = new DataView(out.buffer);
  view.setUint32(0, data.length);
  for (let i = 0; i < 4; i++) out[4 + i] = type.charCodeAt(i);
  out.set(data, 8);
  const crcInput = out.subarray(4, 8 + data.length);
  view.setUint32(8 + data.length, crc32(crcInput));
  return out;
}

/**
 * Encode a grayscale image; `pixels` is row-major with one byte per pixel.
 */
export function encodeGrayPng(
  width: number,
  height: number,
  pixels: Uint8Array,
  deflate: DeflateFn
): Uint8Array {
  if (pixels.length !== width * height) {
    throw new Error(`pixel buffer is ${pixels.length}, expected ${width * height}`);
  }
  const ihdr = new Uint8Array(13);
  const hv = new DataView(ihdr.buffer);
  hv.setUint32(0, width);
  hv.setUint32(4, height);
  ihdr[8] = 8; // bit depth
  ihdr[9] = 0; // grayscale
  // compression, filter, interlace all zero

  // filter byte 0 (None) at the start of every scanline
  const raw = new Uint8Array(height * (width + 1));
  for (let y = 0; y < height; y++) {
    raw[y * (width + 1)] = 0;
    raw.set(pixels.subarray(y * width, (y + 1) * width), y * (width + 1) + 1);
  }

  const signature = new Uint8Array([137, 80, 78, 71, 13, 10, 26, 10]);
  const parts = [
    signature,
    chunk("IHDR", ihdr),
    chunk("IDAT", deflate(raw)),
    chunk("IEND", new Uint8Array(0)),
  ];
  const total = parts.reduce((n, p) => n + p.length, 0);
  const out = new Uint8Array(total);
  let offset = 0;
  for (const p of parts) {
    out.set(p, offset);
    offset += p.length;
  }
  return out;
}

/** Binary sketch grid (0 = stroke) to PNG bytes (strokes black). */
export function sketchToPng(
  width: number,
  height: number,
  grid: Uint8Array,
  deflate: DeflateFn
): Uint8Array {
  const gray = new Uint8Array(grid.length);
  for (let i = 0; i < grid.length; i++) gray[i] = grid[i] ? 255 : 0;
  return encodeGrayPng(width, height, gray, deflate);
}

export function bytesToBase64(bytes: Uint8Array): string {
  if (typeof btoa === "function") {
    let bin = "";
    const step = 0x8000;
    for (let i = 0; i < bytes.length; i += step) {
      bin += String.fromCharCode(...bytes.subarray(i, i + step));
    }
    return btoa(bin);
  }
  // node
  return Buffer.from(bytes).toString("base64");
}
