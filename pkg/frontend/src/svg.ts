/** Minimal SVG renderer for CDF comparison figures. */

import type { Cdf } from "./cdf.js";

export interface CdfSeries {
  name: string;
  cdf: Cdf;
}

export interface CdfFigure {
  title: string;
  xLabel: string;
  xRange: [number, number];
  series: CdfSeries[];
}

const WIDTH = 640;
const HEIGHT = 480;
const MARGIN = { left: 64, right: 24, top: 40, bottom: 56 };
const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b"];

function ticks(lo: number, hi: number, count = 6): number[] {
  const span = hi - lo;
  const rawStep = span / count;
  const mag = 10 ** Math.floor(Math.log10(rawStep));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => span / s <= count)!;
  const out: number[] = [];
  for (let t = Math.ceil(lo / step) * step; t <= hi + 1e-9; t += step) {
    out.push(Math.abs(t) < 1e-9 ? 0 : t);
  }
  return out;
}

export function renderCdfSvg(fig: CdfFigure): string {
  const [xLo, xHi] = fig.xRange;
  const plotW = WIDTH - MARGIN.left - MARGIN.right;
  const plotH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const sx = (v: number) =>
    MARGIN.left + ((Math.min(Math.max(v, xLo), xHi) - xLo) / (xHi - xLo)) * plotW;
  const sy = (p: number) => MARGIN.top + (1 - p) * plotH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
      `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="sans-serif" font-size="13">`,
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
    `<text x="${WIDTH / 2}" y="22" text-anchor="middle" font-size="15">${fig.title}</text>`,
  );

  // axes and grid
  for (const t of ticks(xLo, xHi)) {
    const x = sx(t);
    parts.push(
      `<line x1="${x}" y1="${MARGIN.top}" x2="${x}" y2="${MARGIN.top + plotH}" stroke="#ddd"/>`,
      `<text x="${x}" y="${MARGIN.top + plotH + 18}" text-anchor="middle">${t}</text>`,
    );
  }
  for (let p = 0; p <= 1.001; p += 0.2) {
    const y = sy(p);
    parts.push(
      `<line x1="${MARGIN.left}" y1="${y}" x2="${MARGIN.left + plotW}" y2="${y}" stroke="#ddd"/>`,
      `<text x="${MARGIN.left - 8}" y="${y + 4}" text-anchor="end">${p.toFixed(1)}</text>`,
    );
  }
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" height="${plotH}" ` +
      `fill="none" stroke="black"/>`,
    `<text x="${MARGIN.left + plotW / 2}" y="${HEIGHT - 12}" text-anchor="middle">${fig.xLabel}</text>`,
    `<text transform="translate(16,${MARGIN.top + plotH / 2}) rotate(-90)" ` +
      `text-anchor="middle">CDF</text>`,
  );

  // one step curve per series
  fig.series.forEach((s, k) => {
    const color = COLORS[k % COLORS.length];
    const pts: string[] = [`${sx(s.cdf.x[0])},${sy(0)}`];
    for (let i = 0; i < s.cdf.x.length; i++) {
      const x = sx(s.cdf.x[i]);
      if (i > 0) pts.push(`${x},${sy(s.cdf.y[i - 1])}`);
      pts.push(`${x},${sy(s.cdf.y[i])}`);
    }
    pts.push(`${sx(xHi)},${sy(s.cdf.y[s.cdf.y.length - 1])}`);
    parts.push(
      `<polyline points="${pts.join(" ")}" fill="none" stroke="${color}" stroke-width="1.8"/>`,
    );
    const ly = MARGIN.top + 16 + 18 * k;
    parts.push(
      `<line x1="${MARGIN.left + plotW - 150}" y1="${ly}" x2="${MARGIN.left + plotW - 120}" ` +
        `y2="${ly}" stroke="${color}" stroke-width="1.8"/>`,
      `<text x="${MARGIN.left + plotW - 112}" y="${ly + 4}">${s.name}</text>`,
    );
  });

  parts.push("</svg>");
  return parts.join("\n");
}
