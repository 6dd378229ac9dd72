/**
 * Client-side validation mirroring the server's submission rules, so the
 * editor never posts a job the service would reject: a positive ratio inside
 * the slider bounds, pairwise-disjoint region masks that stay off the image
 * border, and polylines with at least two points inside the image.
 */

import type { MaskGrid, Point } from "./mask.js";
import { maskArea, masksOverlap, touchesBorder } from "./mask.js";

export const RATIO_MIN = 0.1; // exclusive
export const RATIO_MAX = 2.0; // inclusive
export const BORDER_MARGIN = 2;

export interface Polyline {
  points: Point[];
}

export function isValidRatio(ratio: number): boolean {
  return Number.isFinite(ratio) && ratio > RATIO_MIN && ratio <= RATIO_MAX;
}

/** Snap an arbitrary slider value into the legal (RATIO_MIN, RATIO_MAX] range. */
export function clampRatio(ratio: number): number {
  if (!Number.isFinite(ratio)) return 1.0;
  const floor = RATIO_MIN + 0.05;
  return Math.min(RATIO_MAX, Math.max(floor, ratio));
}

export interface ValidationResult {
  ok: boolean;
  errors: string[];
}

export function validateAnnotations(
  masks: MaskGrid[],
  polylines: Polyline[],
  imageWidth: number,
  imageHeight: number,
): ValidationResult {
  const errors: string[] = [];
  masks.forEach((mask, i) => {
    if (mask.width !== imageWidth || mask.height !== imageHeight) {
      errors.push(`region ${i + 1} is ${mask.width}x${mask.height}, image is ${imageWidth}x${imageHeight}`);
      return;
    }
    if (maskArea(mask) === 0) {
      errors.push(`region ${i + 1} is empty`);
    } else if (touchesBorder(mask, BORDER_MARGIN)) {
      errors.push(`region ${i + 1} touches the image border (keep ${BORDER_MARGIN} px clear)`);
    }
  });
  for (let i = 0; i < masks.length; i++) {
    for (let j = i + 1; j < masks.length; j++) {
      if (
        masks[i].width === masks[j].width &&
        masks[i].height === masks[j].height &&
        masksOverlap(masks[i], masks[j])
      ) {
        errors.push(`regions ${i + 1} and ${j + 1} overlap`);
      }
    }
  }
  polylines.forEach((line, i) => {
    if (line.points.length < 2) {
      errors.push(`line ${i + 1} needs at least 2 points`);
    }
    for (const [x, y] of line.points) {
      if (x < 0 || y < 0 || x > imageWidth || y > imageHeight) {
        errors.push(`line ${i + 1} leaves the image`);
        break;
      }
    }
  });
  return { ok: errors.length === 0, errors };
}

export interface SpecOptions {
  ratio: number;
  auto: boolean;
  fraction?: number;
  edgeLength?: number;
  seed?: number;
}

/**
 * Build the job spec JSON. Throws rather than producing an invalid spec;
 * callers validate first and treat an exception here as a programming error.
 */
export function buildSpec(opts: SpecOptions): Record<string, unknown> {
  if (!isValidRatio(opts.ratio)) {
    throw new Error(`ratio ${opts.ratio} outside (${RATIO_MIN}, ${RATIO_MAX}]`);
  }
  const spec: Record<string, unknown> = { ratio: opts.ratio, mode: opts.auto ? "auto" : "manual" };
  if (opts.fraction !== undefined) {
    if (!(opts.fraction > 0 && opts.fraction < 1)) {
      throw new Error(`fraction ${opts.fraction} outside (0, 1)`);
    }
    spec.fraction = opts.fraction;
  }
  if (opts.edgeLength !== undefined) {
    if (!(opts.edgeLength >= 2)) {
      throw new Error(`edge length ${opts.edgeLength} below 2 px`);
    }
    spec.edge_length = opts.edgeLength;
  }
  if (opts.seed !== undefined) {
    spec.seed = opts.seed;
  }
  return spec;
}

/** Serialize polylines in the JSON format the service and CLI share. */
export function polylinesDocument(polylines: Polyline[]): string {
  return JSON.stringify({ polylines: polylines.map((l) => ({ points: l.points })) });
}
