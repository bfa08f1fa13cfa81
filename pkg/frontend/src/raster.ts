/** Software canvas: RGB pixel buffer with line, rect and bitmap text. */

import { GLYPH_H, GLYPH_W, glyph, textWidth } from "./font.js";
import { encodePng } from "./png.js";

export type Color = readonly [number, number, number];

export const BLACK: Color = [20, 20, 20];
export const WHITE: Color = [255, 255, 255];
export const GRAY: Color = [190, 190, 190];
export const SERIES_COLORS: Color[] = [
  [31, 119, 180],
  [255, 127, 14],
  [44, 160, 44],
  [214, 39, 40],
  [148, 103, 189],
  [140, 86, 75],
];

export class Canvas {
  readonly width: number;
  readonly height: number;
  readonly pixels: Uint8Array;

  constructor(width: number, height: number, background: Color = WHITE) {
    this.width = width;
    this.height = height;
    this.pixels = new Uint8Array(width * height * 3);
    this.fillRect(0, 0, width, height, background);
  }

  set(x: number, y: number, c: Color): void {
    x = Math.round(x);
    y = Math.round(y);
    if (x < 0 || y < 0 || x >= this.width || y >= this.height) return;
    const i = (y * this.width + x) * 3;
    this.pixels[i] = c[0];
    this.pixels[i + 1] = c[1];
    this.pixels[i + 2] = c[2];
  }

  fillRect(x: number, y: number, w: number, h: number, c: Color): void {
    const x0 = Math.max(0, Math.round(x));
    const y0 = Math.max(0, Math.round(y));
    const x1 = Math.min(this.width, Math.round(x + w));
    const y1 = Math.min(this.height, Math.round(y + h));
    for (let yy = y0; yy < y1; yy++) {
      for (let xx = x0; xx < x1; xx++) {
        const i = (yy * this.width + xx) * 3;
        this.pixels[i] = c[0];
        this.pixels[i + 1] = c[1];
        this.pixels[i + 2] = c[2];
      }
    }
  }

  line(x0: number, y0: number, x1: number, y1: number, c: Color): void {
    let ix0 = Math.round(x0);
    let iy0 = Math.round(y0);
    const ix1 = Math.round(x1);
    const iy1 = Math.round(y1);
    const dx = Math.abs(ix1 - ix0);
    const dy = -Math.abs(iy1 - iy0);
    const sx = ix0 < ix1 ? 1 : -1;
    const sy = iy0 < iy1 ? 1 : -1;
    let err = dx + dy;
    for (;;) {
      this.set(ix0, iy0, c);
      if (ix0 === ix1 && iy0 === iy1) break;
      const e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        ix0 += sx;
      }
      if (e2 <= dx) {
        err += dx;
        iy0 += sy;
      }
    }
  }

  /** Draw text at (x, y) = top-left corner; scale integer-zooms the font. */
  text(x: number, y: number, s: string, c: Color = BLACK, scale = 1): void {
    let cx = Math.round(x);
    for (const ch of s) {
      const cols = glyph(ch);
      for (let gx = 0; gx < GLYPH_W; gx++) {
        for (let gy = 0; gy < GLYPH_H; gy++) {
          if ((cols[gx] >> gy) & 1) {
            if (scale === 1) {
              this.set(cx + gx, y + gy, c);
            } else {
              this.fillRect(cx + gx * scale, y + gy * scale, scale, scale, c);
            }
          }
        }
      }
      cx += (GLYPH_W + 1) * scale;
    }
  }

  textCentered(cx: number, y: number, s: string, c: Color = BLACK, scale = 1): void {
    this.text(cx - (textWidth(s) * scale) / 2, y, s, c, scale);
  }

  png(): Buffer {
    return encodePng(this.width, this.height, this.pixels);
  }
}
