/**
 * Client-side mirror of the server's saliency thresholding, so "auto-detect"
 * can turn the saliency preview into proposed region masks without another
 * round trip. The steps and constants must match the service exactly:
 * top-fraction cut by inverted-CDF quantile with a strict comparison, binary
 * closing with a radius-2 disk (outside treated as empty for both passes),
 * a 2-pixel border clear, 8-connected components, and a 0.1% minimum area.
 */

export const CLOSE_RADIUS = 2;
export const BORDER_CLEAR = 2;
export const MIN_AREA_FRACTION = 0.001;

/**
 * Inverted-CDF quantile: smallest sorted value whose empirical CDF reaches p.
 * For p in (0, 1] this is sorted[ceil(p * n) - 1].
 */
export function quantileInvertedCdf(values: ArrayLike<number>, p: number): number {
  const n = values.length;
  if (n === 0) throw new Error("quantile of empty array");
  const sorted = Float64Array.from(values as ArrayLike<number>);
  sorted.sort();
  if (p <= 0) return sorted[0];
  const k = Math.min(n, Math.ceil(p * n));
  return sorted[k - 1];
}

/** Pixels scoring strictly above the (1 - fraction) quantile. */
export function topFractionMask(scores: ArrayLike<number>, fraction: number): Uint8Array {
  if (!(fraction > 0 && fraction < 1)) {
    throw new Error(`fraction must lie in (0, 1), got ${fraction}`);
  }
  const cut = quantileInvertedCdf(scores, 1 - fraction);
  const out = new Uint8Array(scores.length);
  for (let i = 0; i < scores.length; i++) {
    out[i] = scores[i] > cut ? 1 : 0;
  }
  return out;
}

function diskOffsets(radius: number): Array<[number, number]> {
  const offsets: Array<[number, number]> = [];
  for (let dy = -radius; dy <= radius; dy++) {
    for (let dx = -radius; dx <= radius; dx++) {
      if (dx * dx + dy * dy <= radius * radius) offsets.push([dy, dx]);
    }
  }
  return offsets;
}

function dilate(mask: Uint8Array, width: number, height: number, offsets: Array<[number, number]>): Uint8Array {
  const out = new Uint8Array(mask.length);
  for (let row = 0; row < height; row++) {
    for (let col = 0; col < width; col++) {
      let hit = 0;
      for (const [dy, dx] of offsets) {
        const r = row + dy;
        const c = col + dx;
        if (r >= 0 && r < height && c >= 0 && c < width && mask[r * width + c]) {
          hit = 1;
          break;
        }
      }
      out[row * width + col] = hit;
    }
  }
  return out;
}

function erode(mask: Uint8Array, width: number, height: number, offsets: Array<[number, number]>): Uint8Array {
  const out = new Uint8Array(mask.length);
  for (let row = 0; row < height; row++) {
    for (let col = 0; col < width; col++) {
      let keep = 1;
      for (const [dy, dx] of offsets) {
        const r = row + dy;
        const c = col + dx;
        // outside the image counts as empty, so near-border pixels erode
        if (r < 0 || r >= height || c < 0 || c >= width || !mask[r * width + c]) {
          keep = 0;
          break;
        }
      }
      out[row * width + col] = keep;
    }
  }
  return out;
}

export function binaryClosing(mask: Uint8Array, width: number, height: number, radius: number): Uint8Array {
  const offsets = diskOffsets(radius);
  return erode(dilate(mask, width, height, offsets), width, height, offsets);
}

export function clearBorder(mask: Uint8Array, width: number, height: number, margin: number): void {
  for (let row = 0; row < height; row++) {
    const edgeRow = row < margin || row >= height - margin;
    for (let col = 0; col < width; col++) {
      if (edgeRow || col < margin || col >= width - margin) {
        mask[row * width + col] = 0;
      }
    }
  }
}

/** 8-connected components in raster-scan discovery order. */
export function connectedComponents(mask: Uint8Array, width: number, height: number): Uint8Array[] {
  const seen = new Uint8Array(mask.length);
  const components: Uint8Array[] = [];
  const stack: number[] = [];
  for (let start = 0; start < mask.length; start++) {
    if (!mask[start] || seen[start]) continue;
    const comp = new Uint8Array(mask.length);
    stack.length = 0;
    stack.push(start);
    seen[start] = 1;
    while (stack.length) {
      const idx = stack.pop()!;
      comp[idx] = 1;
      const row = Math.floor(idx / width);
      const col = idx % width;
      for (let dy = -1; dy <= 1; dy++) {
        for (let dx = -1; dx <= 1; dx++) {
          const r = row + dy;
          const c = col + dx;
          if (r < 0 || r >= height || c < 0 || c >= width) continue;
          const j = r * width + c;
          if (mask[j] && !seen[j]) {
            seen[j] = 1;
            stack.push(j);
          }
        }
      }
    }
    components.push(comp);
  }
  return components;
}

/**
 * Full proposal pipeline on a flat score array (row-major, any scale: the
 * quantile rule only uses ordering). Returns one 0/1 mask per surviving
 * component; empty when nothing passes, mirroring the server's "no
 * components" outcome.
 */
export function thresholdRois(
  scores: ArrayLike<number>,
  width: number,
  height: number,
  fraction: number,
): Uint8Array[] {
  if (scores.length !== width * height) {
    throw new Error(`score buffer is ${scores.length}, expected ${width * height}`);
  }
  let mask = topFractionMask(scores, fraction);
  if (mask.some((v) => v !== 0)) {
    mask = binaryClosing(mask, width, height, CLOSE_RADIUS);
  }
  clearBorder(mask, width, height, BORDER_CLEAR);
  const minArea = MIN_AREA_FRACTION * width * height;
  return connectedComponents(mask, width, height).filter((comp) => {
    let area = 0;
    for (const v of comp) area += v;
    return area >= minArea;
  });
}
