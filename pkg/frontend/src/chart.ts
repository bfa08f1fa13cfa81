/** Axes, ticks and the four figure types built on the raster canvas. */

import { BLACK, Canvas, Color, GRAY, SERIES_COLORS, WHITE } from "./raster.js";
import { textWidth } from "./font.js";

export interface Series {
  name: string;
  x: number[];
  y: number[];
  /** optional half-width of error bars (3 sigma already applied upstream) */
  err?: number[];
}

const W = 720;
const H = 480;
const MARGIN = { left: 70, right: 20, top: 40, bottom: 58 };

export function niceTicks(lo: number, hi: number, n = 6): number[] {
  if (!(hi > lo)) {
    hi = lo + 1;
  }
  const span = hi - lo;
  const step0 = span / Math.max(n - 1, 1);
  const mag = Math.pow(10, Math.floor(Math.log10(step0)));
  let step = mag;
  for (const m of [1, 2, 5, 10]) {
    if (m * mag >= step0) {
      step = m * mag;
      break;
    }
  }
  const start = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let v = start; v <= hi + 1e-12 * span; v += step) {
    ticks.push(Math.abs(v) < 1e-12 * span ? 0 : v);
  }
  return ticks;
}

export function fmtTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 10000 || a < 0.001) return v.toExponential(1).replace("e+", "e");
  const s = a >= 100 ? v.toFixed(0) : a >= 1 ? v.toFixed(2) : v.toFixed(3);
  return s.replace(/\.?0+$/, "");
}

export interface Frame {
  canvas: Canvas;
  x0: number;
  y0: number;
  x1: number;
  y1: number;
  toX: (v: number) => number;
  toY: (v: number) => number;
}

export function makeFrame(
  title: string,
  xLabel: string,
  yLabel: string,
  xRange: [number, number],
  yRange: [number, number],
  opts: { logY?: boolean; caption?: string } = {},
): Frame {
  const canvas = new Canvas(W, H);
  const x0 = MARGIN.left;
  const y0 = MARGIN.top;
  const x1 = W - MARGIN.right;
  const y1 = H - MARGIN.bottom;
  const logY = opts.logY ?? false;
  let [ylo, yhi] = yRange;
  if (logY) {
    ylo = Math.log10(Math.max(ylo, 1e-12));
    yhi = Math.log10(Math.max(yhi, 1e-12));
  }
  if (yhi <= ylo) yhi = ylo + 1;
  const [xlo, xhiRaw] = xRange;
  const xhi = xhiRaw > xlo ? xhiRaw : xlo + 1;
  const toX = (v: number) => x0 + ((v - xlo) / (xhi - xlo)) * (x1 - x0);
  const toY = (v: number) => {
    const vv = logY ? Math.log10(Math.max(v, 1e-12)) : v;
    return y1 - ((vv - ylo) / (yhi - ylo)) * (y1 - y0);
  };

  canvas.textCentered(W / 2, 12, title, BLACK, 2);
  // axes
  canvas.line(x0, y0, x0, y1, BLACK);
  canvas.line(x0, y1, x1, y1, BLACK);
  // x ticks
  for (const t of niceTicks(xlo, xhi)) {
    const px = toX(t);
    canvas.line(px, y1, px, y1 + 4, BLACK);
    canvas.textCentered(px, y1 + 8, fmtTick(t));
  }
  // y ticks
  if (logY) {
    for (let d = Math.ceil(ylo); d <= Math.floor(yhi); d++) {
      const py = toY(Math.pow(10, d));
      canvas.line(x0 - 4, py, x0, py, BLACK);
      canvas.line(x0, py, x1, py, GRAY);
      const lab = `1E${d}`;
      canvas.text(x0 - 8 - textWidth(lab), py - 3, lab);
    }
  } else {
    for (const t of niceTicks(ylo, yhi)) {
      const py = toY(t);
      canvas.line(x0 - 4, py, x0, py, BLACK);
      canvas.line(x0, py, x1, py, GRAY);
      const lab = fmtTick(t);
      canvas.text(x0 - 8 - textWidth(lab), py - 3, lab);
    }
  }
  canvas.textCentered((x0 + x1) / 2, H - 30, xLabel);
  // y label: horizontal, top-left above the axis
  canvas.text(6, y0 - 14, yLabel);
  if (opts.caption) {
    canvas.textCentered(W / 2, H - 12, opts.caption, [110, 110, 110]);
  }
  return { canvas, x0, y0, x1, y1, toX, toY };
}

export function drawSeries(frame: Frame, series: Series[], opts: { markers?: boolean } = {}): void {
  series.forEach((s, idx) => {
    const color = SERIES_COLORS[idx % SERIES_COLORS.length];
    for (let i = 1; i < s.x.length; i++) {
      frame.canvas.line(
        frame.toX(s.x[i - 1]),
        frame.toY(s.y[i - 1]),
        frame.toX(s.x[i]),
        frame.toY(s.y[i]),
        color,
      );
    }
    if (opts.markers ?? true) {
      for (let i = 0; i < s.x.length; i++) {
        frame.canvas.fillRect(frame.toX(s.x[i]) - 1, frame.toY(s.y[i]) - 1, 3, 3, color);
      }
    }
    if (s.err) {
      for (let i = 0; i < s.x.length; i++) {
        const px = frame.toX(s.x[i]);
        frame.canvas.line(px, frame.toY(s.y[i] - (s.err[i] ?? 0)), px, frame.toY(s.y[i] + (s.err[i] ?? 0)), color);
      }
    }
    // legend, one row per series
    const ly = frame.y0 + 6 + idx * 12;
    frame.canvas.fillRect(frame.x1 - 120, ly, 10, 6, color);
    frame.canvas.text(frame.x1 - 104, ly - 1, s.name);
  });
}

/** Perceptually ordered small colormap (dark blue -> yellow). */
export function heatColor(v: number): Color {
  const t = Math.min(1, Math.max(0, v));
  const stops: Color[] = [
    [68, 1, 84],
    [59, 82, 139],
    [33, 145, 140],
    [94, 201, 98],
    [253, 231, 37],
  ];
  const pos = t * (stops.length - 1);
  const i = Math.min(stops.length - 2, Math.floor(pos));
  const f = pos - i;
  const a = stops[i];
  const b = stops[i + 1];
  return [
    Math.round(a[0] + f * (b[0] - a[0])),
    Math.round(a[1] + f * (b[1] - a[1])),
    Math.round(a[2] + f * (b[2] - a[2])),
  ];
}

export function barsWithErrors(
  title: string,
  labels: string[],
  means: number[],
  sigma3: number[],
  annotation: string,
  caption: string,
): Canvas {
  const hi = Math.max(...means.map((m, i) => m + sigma3[i]), 0) * 1.15 + 1e-9;
  const lo = Math.min(...means.map((m, i) => m - sigma3[i]), 0);
  const frame = makeFrame(title, "estimator", "mean with 3 sigma bars", [0, labels.length], [lo, hi], {
    caption,
  });
  labels.forEach((lab, i) => {
    const color = SERIES_COLORS[i % SERIES_COLORS.length];
    const cx = i + 0.5;
    const w = 0.5;
    const pxLo = frame.toX(cx - w / 2);
    const pxHi = frame.toX(cx + w / 2);
    const base = frame.toY(Math.max(0, lo));
    const top = frame.toY(means[i]);
    frame.canvas.fillRect(pxLo, Math.min(base, top), pxHi - pxLo, Math.abs(base - top), color);
    const px = frame.toX(cx);
    frame.canvas.line(px, frame.toY(means[i] - sigma3[i]), px, frame.toY(means[i] + sigma3[i]), BLACK);
    frame.canvas.line(px - 5, frame.toY(means[i] - sigma3[i]), px + 5, frame.toY(means[i] - sigma3[i]), BLACK);
    frame.canvas.line(px - 5, frame.toY(means[i] + sigma3[i]), px + 5, frame.toY(means[i] + sigma3[i]), BLACK);
    frame.canvas.textCentered(px, frame.y1 + 20, lab);
  });
  frame.canvas.textCentered((frame.x0 + frame.x1) / 2, frame.y0 + 8, annotation);
  return frame.canvas;
}

export { W as FIG_WIDTH, H as FIG_HEIGHT };
