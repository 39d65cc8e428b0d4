/**
 * Experimenter-panel rendering helpers: posterior heat map pixels and
 * the 50% isocontour polyline, as pure data transforms (the DOM layer
 * just blits the result onto a canvas).
 */

import { PosteriorGrid, ThresholdCurve } from './types.js';

/** Diverging blue (p=0) -> white (p=0.5) -> red (p=1). */
export function probabilityColor(p: number): [number, number, number] {
  const x = Math.min(1, Math.max(0, p));
  if (x <= 0.5) {
    const t = x / 0.5;
    return [Math.round(40 + 215 * t), Math.round(80 + 175 * t), 255];
  }
  const t = (x - 0.5) / 0.5;
  return [255, Math.round(255 - 195 * t), Math.round(255 - 215 * t)];
}

export interface HeatmapImage {
  width: number; // L axis
  height: number; // K axis
  data: Uint8ClampedArray<ArrayBuffer>; // RGBA, row-major with K increasing downward
}

export function heatmapImage(grid: PosteriorGrid): HeatmapImage {
  const width = grid.L_axis.length;
  const height = grid.K_axis.length;
  const data = new Uint8ClampedArray(new ArrayBuffer(width * height * 4));
  for (let j = 0; j < height; j++) {
    for (let i = 0; i < width; i++) {
      const [r, g, b] = probabilityColor(grid.p[i]![j]!);
      const o = (j * width + i) * 4;
      data[o] = r;
      data[o + 1] = g;
      data[o + 2] = b;
      data[o + 3] = 255;
    }
  }
  return { width, height, data };
}

export interface PixelPoint {
  x: number;
  y: number;
}

/** Map the curve's present (K, psi) points into heat-map pixel space. */
export function curveToPixels(curve: ThresholdCurve, grid: PosteriorGrid): PixelPoint[] {
  const l0 = grid.L_axis[0]!;
  const l1 = grid.L_axis[grid.L_axis.length - 1]!;
  const k0 = grid.K_axis[0]!;
  const k1 = grid.K_axis[grid.K_axis.length - 1]!;
  const out: PixelPoint[] = [];
  for (const pt of curve.points) {
    if (!pt.present || pt.psi === null) continue;
    out.push({
      x: ((pt.psi - l0) / (l1 - l0)) * (grid.L_axis.length - 1),
      y: ((pt.K - k0) / (k1 - k0)) * (grid.K_axis.length - 1),
    });
  }
  return out;
}
