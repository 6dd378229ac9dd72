/**
 * Region masks drawn in the editor, rasterized at the exact source-image
 * resolution. A mask is a dense byte grid (0 = outside, 255 = inside) so it
 * can be PNG-encoded and uploaded as-is; the server thresholds at 50%.
 */

export interface MaskGrid {
  width: number;
  height: number;
  data: Uint8Array; // row-major, length width * height, values 0 or 255
}

export function createMask(width: number, height: number): MaskGrid {
  if (width <= 0 || height <= 0 || !Number.isInteger(width) || !Number.isInteger(height)) {
    throw new Error(`invalid mask dimensions ${width}x${height}`);
  }
  return { width, height, data: new Uint8Array(width * height) };
}

export function cloneMask(mask: MaskGrid): MaskGrid {
  return { width: mask.width, height: mask.height, data: mask.data.slice() };
}

export type Point = [number, number];

/**
 * Fill a closed polygon into the mask (even-odd rule, pixel-center sampling).
 * Vertices are in image pixel coordinates; the polygon closes itself.
 */
export function fillPolygon(mask: MaskGrid, vertices: Point[]): void {
  if (vertices.length < 3) {
    throw new Error("a polygon needs at least 3 vertices");
  }
  const { width, height, data } = mask;
  const n = vertices.length;
  let yMin = Infinity;
  let yMax = -Infinity;
  for (const [, y] of vertices) {
    yMin = Math.min(yMin, y);
    yMax = Math.max(yMax, y);
  }
  const rowLo = Math.max(0, Math.floor(yMin - 0.5));
  const rowHi = Math.min(height - 1, Math.ceil(yMax));
  const xs: number[] = [];
  for (let row = rowLo; row <= rowHi; row++) {
    const cy = row + 0.5;
    xs.length = 0;
    for (let i = 0; i < n; i++) {
      const [x1, y1] = vertices[i];
      const [x2, y2] = vertices[(i + 1) % n];
      // half-open rule: count the edge while cy is in [min, max)
      if (y1 <= cy !== y2 <= cy) {
        xs.push(x1 + ((cy - y1) * (x2 - x1)) / (y2 - y1));
      }
    }
    xs.sort((a, b) => a - b);
    for (let k = 0; k + 1 < xs.length; k += 2) {
      // pixel center cx = col + 0.5 lies inside [xa, xb)
      const colLo = Math.max(0, Math.ceil(xs[k] - 0.5));
      const colHi = Math.min(width - 1, Math.ceil(xs[k + 1] - 0.5) - 1);
      for (let col = colLo; col <= colHi; col++) {
        data[row * width + col] = 255;
      }
    }
  }
}

/** Stamp a filled disk (brush tip) centered at (x, y). */
export function stampBrush(mask: MaskGrid, x: number, y: number, radius: number): void {
  const { width, height, data } = mask;
  const r2 = radius * radius;
  const rowLo = Math.max(0, Math.floor(y - radius - 1));
  const rowHi = Math.min(height - 1, Math.ceil(y + radius + 1));
  const colLo = Math.max(0, Math.floor(x - radius - 1));
  const colHi = Math.min(width - 1, Math.ceil(x + radius + 1));
  for (let row = rowLo; row <= rowHi; row++) {
    const dy = row + 0.5 - y;
    for (let col = colLo; col <= colHi; col++) {
      const dx = col + 0.5 - x;
      if (dx * dx + dy * dy <= r2) {
        data[row * width + col] = 255;
      }
    }
  }
}

/** Drag stroke: stamp the brush densely along a segment so it stays solid. */
export function strokeBrush(
  mask: MaskGrid,
  x0: number,
  y0: number,
  x1: number,
  y1: number,
  radius: number,
): void {
  const dist = Math.hypot(x1 - x0, y1 - y0);
  const steps = Math.max(1, Math.ceil(dist / Math.max(0.5, radius * 0.5)));
  for (let s = 0; s <= steps; s++) {
    const t = s / steps;
    stampBrush(mask, x0 + t * (x1 - x0), y0 + t * (y1 - y0), radius);
  }
}

export function maskArea(mask: MaskGrid): number {
  let count = 0;
  for (const v of mask.data) {
    if (v >= 128) count++;
  }
  return count;
}

export function masksOverlap(a: MaskGrid, b: MaskGrid): boolean {
  if (a.width !== b.width || a.height !== b.height) {
    throw new Error("masks have different dimensions");
  }
  for (let i = 0; i < a.data.length; i++) {
    if (a.data[i] >= 128 && b.data[i] >= 128) return true;
  }
  return false;
}

/** True if any mask pixel lies within `margin` pixels of the image border. */
export function touchesBorder(mask: MaskGrid, margin: number): boolean {
  const { width, height, data } = mask;
  for (let row = 0; row < height; row++) {
    const edgeRow = row < margin || row >= height - margin;
    for (let col = 0; col < width; col++) {
      if (data[row * width + col] < 128) continue;
      if (edgeRow || col < margin || col >= width - margin) return true;
    }
  }
  return false;
}
