// Heuristic in-browser emotion estimator. This is deliberately not a face
// model: the contract is only "produce a valid 7-class distribution from
// consecutive frames". Motion energy between grayscale frames modulates an
// arousal mix over a neutral base; sliders remain the reference producer.

import { normalizeDistribution } from "./emotions.js";
import type { Distribution } from "./types.js";

export interface GrayFrame {
  width: number;
  height: number;
  pixels: Uint8ClampedArray; // luminance, length = width * height
}

export function motionEnergy(prev: GrayFrame, cur: GrayFrame): number {
  if (prev.width !== cur.width || prev.height !== cur.height) return 0;
  const n = Math.min(prev.pixels.length, cur.pixels.length);
  if (n === 0) return 0;
  let acc = 0;
  for (let i = 0; i < n; i++) {
    acc += Math.abs(cur.pixels[i] - prev.pixels[i]);
  }
  return Math.min(1, acc / n / 64); // 64 levels of mean change saturates
}

export function estimateFromMotion(energy: number): Distribution {
  const e = Math.min(1, Math.max(0, energy));
  return normalizeDistribution({
    neutral: 1 - 0.8 * e,
    surprise: 0.45 * e,
    happiness: 0.25 * e,
    anger: 0.1 * e,
  });
}

export function estimateFromFrames(prev: GrayFrame, cur: GrayFrame): Distribution {
  return estimateFromMotion(motionEnergy(prev, cur));
}

export function luminanceFromRgba(data: Uint8ClampedArray, width: number, height: number): GrayFrame {
  const pixels = new Uint8ClampedArray(width * height);
  for (let i = 0; i < width * height; i++) {
    const r = data[i * 4];
    const g = data[i * 4 + 1];
    const b = data[i * 4 + 2];
    pixels[i] = 0.299 * r + 0.587 * g + 0.114 * b;
  }
  return { width, height, pixels };
}
