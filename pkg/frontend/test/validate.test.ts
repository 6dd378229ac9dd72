import { describe, expect, it } from "vitest";
import { createMask, fillPolygon } from "../src/mask.js";
import {
  RATIO_MAX,
  RATIO_MIN,
  buildSpec,
  clampRatio,
  isValidRatio,
  polylinesDocument,
  validateAnnotations,
} from "../src/validate.js";

describe("ratio bounds", () => {
  it("accepts (0.1, 2.0] and nothing else", () => {
    expect(isValidRatio(0.1)).toBe(false);
    expect(isValidRatio(0.100001)).toBe(true);
    expect(isValidRatio(1.0)).toBe(true);
    expect(isValidRatio(2.0)).toBe(true);
    expect(isValidRatio(2.0001)).toBe(false);
    expect(isValidRatio(0)).toBe(false);
    expect(isValidRatio(-0.5)).toBe(false);
    expect(isValidRatio(NaN)).toBe(false);
  });

  it("clamps arbitrary slider values into the legal range", () => {
    for (const v of [-3, 0, 0.1, 0.5, 1, 1.99, 2, 5, NaN]) {
      expect(isValidRatio(clampRatio(v))).toBe(true);
    }
  });
});

describe("spec builder", () => {
  it("never emits a spec the server would reject", () => {
    // pseudo-random sweep across the slider range and beyond
    let s = 12345;
    for (let i = 0; i < 500; i++) {
      s = (s * 1103515245 + 12345) & 0x7fffffff;
      const ratio = (s / 0x7fffffff) * 3 - 0.5; // [-0.5, 2.5)
      if (isValidRatio(ratio)) {
        const spec = buildSpec({ ratio, auto: false });
        expect(spec.ratio).toBeGreaterThan(RATIO_MIN);
        expect(spec.ratio).toBeLessThanOrEqual(RATIO_MAX);
        expect(spec.mode).toBe("manual");
      } else {
        expect(() => buildSpec({ ratio, auto: false })).toThrow();
      }
    }
  });

  it("includes auto-mode fields only when asked", () => {
    const manual = buildSpec({ ratio: 0.8, auto: false });
    expect(manual).toEqual({ ratio: 0.8, mode: "manual" });
    const auto = buildSpec({ ratio: 0.8, auto: true, fraction: 0.25 });
    expect(auto).toEqual({ ratio: 0.8, mode: "auto", fraction: 0.25 });
    expect(() => buildSpec({ ratio: 0.8, auto: true, fraction: 1.2 })).toThrow();
    expect(() => buildSpec({ ratio: 0.8, auto: false, edgeLength: 1 })).toThrow();
  });
});

describe("annotation validation", () => {
  const box = (x0: number, y0: number, x1: number, y1: number) => {
    const m = createMask(60, 50);
    fillPolygon(m, [
      [x0, y0],
      [x1, y0],
      [x1, y1],
      [x0, y1],
    ]);
    return m;
  };

  it("passes disjoint interior regions", () => {
    const r = validateAnnotations([box(5, 5, 20, 20), box(30, 30, 50, 45)], [], 60, 50);
    expect(r.ok).toBe(true);
    expect(r.errors).toEqual([]);
  });

  it("flags overlapping regions", () => {
    const r = validateAnnotations([box(5, 5, 30, 30), box(20, 20, 45, 40)], [], 60, 50);
    expect(r.ok).toBe(false);
    expect(r.errors.join(" ")).toMatch(/overlap/);
  });

  it("flags regions touching the border", () => {
    const r = validateAnnotations([box(0, 10, 20, 30)], [], 60, 50);
    expect(r.ok).toBe(false);
    expect(r.errors.join(" ")).toMatch(/border/);
  });

  it("flags empty masks, wrong sizes, and bad polylines", () => {
    const empty = createMask(60, 50);
    const wrong = createMask(10, 10);
    const r = validateAnnotations([empty, wrong], [{ points: [[5, 5]] }], 60, 50);
    expect(r.ok).toBe(false);
    expect(r.errors.join(" ")).toMatch(/empty/);
    expect(r.errors.join(" ")).toMatch(/10x10/);
    expect(r.errors.join(" ")).toMatch(/2 points/);
    const off = validateAnnotations([], [{ points: [[5, 5], [70, 5]] }], 60, 50);
    expect(off.ok).toBe(false);
    expect(off.errors.join(" ")).toMatch(/leaves the image/);
  });
});

describe("polyline serialization", () => {
  it("matches the shared CLI document shape", () => {
    const doc = JSON.parse(
      polylinesDocument([{ points: [[1, 2], [3, 4]] }, { points: [[5, 6], [7, 8], [9, 10]] }]),
    );
    expect(doc).toEqual({
      polylines: [{ points: [[1, 2], [3, 4]] }, { points: [[5, 6], [7, 8], [9, 10]] }],
    });
  });
});
