import { describe, expect, it } from "vitest";
import {
  createMask,
  fillPolygon,
  maskArea,
  masksOverlap,
  stampBrush,
  strokeBrush,
  touchesBorder,
  type Point,
} from "../src/mask.js";
import { decodeGrayPng, encodeGrayPng } from "../src/png.js";

describe("polygon rasterization", () => {
  it("fills an axis-aligned rectangle exactly", () => {
    const mask = createMask(20, 16);
    fillPolygon(mask, [
      [3, 2],
      [12, 2],
      [12, 9],
      [3, 9],
    ]);
    // pixel centers strictly inside [3,12] x [2,9]
    expect(maskArea(mask)).toBe(9 * 7);
    expect(mask.data[4 * 20 + 5]).toBe(255);
    expect(mask.data[1 * 20 + 5]).toBe(0);
    expect(mask.data[4 * 20 + 2]).toBe(0);
  });

  it("handles concave polygons with the even-odd rule", () => {
    const mask = createMask(30, 20);
    // U shape: the notch in the middle stays empty
    fillPolygon(mask, [
      [2, 2],
      [28, 2],
      [28, 18],
      [18, 18],
      [18, 8],
      [12, 8],
      [12, 18],
      [2, 18],
    ]);
    expect(mask.data[12 * 30 + 15]).toBe(0); // inside the notch
    expect(mask.data[12 * 30 + 5]).toBe(255); // left arm
    expect(mask.data[12 * 30 + 25]).toBe(255); // right arm
    expect(mask.data[4 * 30 + 15]).toBe(255); // bridge on top
  });

  it("rejects degenerate polygons", () => {
    const mask = createMask(10, 10);
    expect(() => fillPolygon(mask, [[1, 1], [5, 5]] as Point[])).toThrow(/3 vertices/);
  });
});

describe("brush", () => {
  it("stamps a disk of roughly pi r^2 pixels", () => {
    const mask = createMask(60, 60);
    stampBrush(mask, 30, 30, 10);
    const area = maskArea(mask);
    expect(area).toBeGreaterThan(Math.PI * 100 * 0.9);
    expect(area).toBeLessThan(Math.PI * 100 * 1.1);
  });

  it("draws a connected stroke between distant points", () => {
    const mask = createMask(100, 40);
    strokeBrush(mask, 10, 20, 90, 20, 4);
    // every column along the stroke midline is covered
    for (let col = 10; col <= 89; col++) {
      expect(mask.data[20 * 100 + col]).toBe(255);
    }
  });
});

describe("mask predicates", () => {
  it("detects overlap and border contact", () => {
    const a = createMask(40, 40);
    const b = createMask(40, 40);
    fillPolygon(a, [[5, 5], [20, 5], [20, 20], [5, 20]]);
    fillPolygon(b, [[25, 25], [35, 25], [35, 35], [25, 35]]);
    expect(masksOverlap(a, b)).toBe(false);
    const c = createMask(40, 40);
    fillPolygon(c, [[15, 15], [30, 15], [30, 30], [15, 30]]);
    expect(masksOverlap(a, c)).toBe(true);

    expect(touchesBorder(a, 2)).toBe(false);
    const edge = createMask(40, 40);
    stampBrush(edge, 1, 20, 3);
    expect(touchesBorder(edge, 2)).toBe(true);
  });
});

describe("upload round-trip", () => {
  it("a drawn mask survives encode + decode pixel-identically", () => {
    // the editor uploads exactly encodeGrayPng(mask.data); fetching the bytes
    // back and decoding must reproduce every pixel
    const mask = createMask(97, 61);
    fillPolygon(mask, [
      [10.3, 8.7],
      [80.1, 12.4],
      [88.6, 50.2],
      [40.0, 57.9],
      [12.8, 33.3],
    ]);
    strokeBrush(mask, 20, 15, 70, 45, 6);
    const png = encodeGrayPng(mask.width, mask.height, mask.data);
    const back = decodeGrayPng(png);
    expect(back.width).toBe(mask.width);
    expect(back.height).toBe(mask.height);
    expect(back.pixels).toEqual(mask.data);
  });
});
