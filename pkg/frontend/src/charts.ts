// Strip charts over the trailing telemetry window.  Series extraction is
// pure (and tested); canvas painting is kept dumb.

import { TelemetryRecord } from "./protocol.js";

export interface Series {
  t: number[];
  v: number[];
}

export function extractSeries(
  records: TelemetryRecord[],
  pick: (record: TelemetryRecord) => number,
): Series {
  const t: number[] = [];
  const v: number[] = [];
  for (const record of records) {
    t.push(record.t_s);
    v.push(pick(record));
  }
  return { t, v };
}

export interface ChartOptions {
  label: string;
  color: string;
  windowS: number;
  min?: number;
  max?: number;
  invert?: boolean; // depth charts read more naturally with down = down
}

export function drawStripChart(
  ctx: CanvasRenderingContext2D,
  series: Series[],
  colors: string[],
  opts: ChartOptions,
): void {
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#10151c";
  ctx.fillRect(0, 0, width, height);
  ctx.strokeStyle = "#2a3340";
  ctx.strokeRect(0.5, 0.5, width - 1, height - 1);

  let lo = opts.min ?? Infinity;
  let hi = opts.max ?? -Infinity;
  if (opts.min === undefined || opts.max === undefined) {
    for (const s of series) {
      for (const value of s.v) {
        if (value < lo) lo = value;
        if (value > hi) hi = value;
      }
    }
    if (!isFinite(lo)) {
      lo = 0;
      hi = 1;
    }
    if (hi - lo < 1e-9) hi = lo + 1e-9;
  }

  const tEnd = Math.max(...series.map((s) => (s.t.length ? s.t[s.t.length - 1] : 0)), 0);
  const tStart = tEnd - opts.windowS;
  series.forEach((s, k) => {
    if (s.t.length < 2) return;
    ctx.strokeStyle = colors[k % colors.length];
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    for (let i = 0; i < s.t.length; i++) {
      const px = ((s.t[i] - tStart) / opts.windowS) * (width - 8) + 4;
      let frac = (s.v[i] - lo) / (hi - lo);
      if (opts.invert) frac = 1 - frac;
      const py = height - 4 - frac * (height - 8);
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    }
    ctx.stroke();
  });

  ctx.fillStyle = "#8fa3b8";
  ctx.font = "11px system-ui, sans-serif";
  ctx.fillText(opts.label, 8, 14);
  ctx.fillText(hi.toFixed(2), width - 44, 14);
  ctx.fillText(lo.toFixed(2), width - 44, height - 6);
}
