// Small SVG helpers: overlaid signal traces and a convergence sparkline.
// Pure string builders so they are testable without a DOM.

export interface OverlaySeries {
  name: string;
  color: string;
  time: number[];
  values: number[];
}

export interface OverlayOptions {
  series: OverlaySeries[];
  width?: number;
  height?: number;
  yLabel: string; // carries units, e.g. "A_z (m/s^2)"
  xLabel?: string;
}

const FONT = 'font-family="system-ui, sans-serif"';

function extent(arrays: number[][]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const arr of arrays) {
    for (const v of arr) {
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
  }
  if (!(hi > lo)) hi = lo + 1;
  return [lo, hi];
}

export function polylinePoints(
  xs: number[],
  ys: number[],
  toX: (v: number) => number,
  toY: (v: number) => number,
): string {
  const parts: string[] = [];
  for (let i = 0; i < xs.length; i++) {
    parts.push(`${toX(xs[i]).toFixed(1)},${toY(ys[i]).toFixed(1)}`);
  }
  return parts.join(' ');
}

/** Overlay the candidate and incumbent signals on shared axes. */
export function overlayChart(opts: OverlayOptions): string {
  const width = opts.width ?? 360;
  const height = opts.height ?? 150;
  const ml = 44;
  const mb = 24;
  const mt = 8;
  const mr = 6;
  const pw = width - ml - mr;
  const ph = height - mt - mb;
  const [xLo, xHi] = extent(opts.series.map((s) => s.time));
  const [yLo, yHi] = extent(opts.series.map((s) => s.values));
  const pad = 0.06 * (yHi - yLo || 1);
  const toX = (v: number) => ml + ((v - xLo) / (xHi - xLo)) * pw;
  const toY = (v: number) => mt + ((yHi + pad - v) / (yHi - yLo + 2 * pad)) * ph;

  const out: string[] = [];
  out.push(
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" ` +
      `width="${width}" height="${height}" role="img">`,
  );
  out.push(`<rect x="${ml}" y="${mt}" width="${pw}" height="${ph}" fill="none" stroke="#ccc"/>`);
  if (yLo < 0 && yHi > 0) {
    const zy = toY(0).toFixed(1);
    out.push(`<line x1="${ml}" y1="${zy}" x2="${ml + pw}" y2="${zy}" stroke="#eee"/>`);
  }
  for (const s of opts.series) {
    out.push(
      `<polyline fill="none" stroke="${s.color}" stroke-width="1.4" ` +
        `points="${polylinePoints(s.time, s.values, toX, toY)}"/>`,
    );
  }
  // legend
  let lx = ml + 8;
  for (const s of opts.series) {
    out.push(`<line x1="${lx}" y1="${mt + 10}" x2="${lx + 16}" y2="${mt + 10}" stroke="${s.color}" stroke-width="2"/>`);
    out.push(`<text x="${lx + 20}" y="${mt + 14}" ${FONT} font-size="10">${s.name}</text>`);
    lx += 20 + 8 * s.name.length + 16;
  }
  out.push(
    `<text x="12" y="${mt + ph / 2}" ${FONT} font-size="10" text-anchor="middle" ` +
      `transform="rotate(-90 12 ${mt + ph / 2})">${opts.yLabel}</text>`,
  );
  out.push(
    `<text x="${ml + pw / 2}" y="${height - 6}" ${FONT} font-size="10" ` +
      `text-anchor="middle">${opts.xLabel ?? 'time (s)'}</text>`,
  );
  out.push('</svg>');
  return out.join('');
}

/** Tiny line of the incumbent's recorded values across iterations. */
export function sparkline(values: number[], width = 140, height = 28): string {
  if (values.length === 0) return '';
  const [lo, hi] = extent([values]);
  const toX = (i: number) => (values.length < 2 ? width / 2 : (i / (values.length - 1)) * (width - 4) + 2);
  const toY = (v: number) => 2 + ((hi - v) / (hi - lo || 1)) * (height - 4);
  const pts = values.map((v, i) => `${toX(i).toFixed(1)},${toY(v).toFixed(1)}`).join(' ');
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" ` +
    `width="${width}" height="${height}"><polyline fill="none" stroke="#1f77b4" ` +
    `stroke-width="1.2" points="${pts}"/></svg>`
  );
}
