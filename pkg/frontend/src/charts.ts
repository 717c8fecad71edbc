/**
 * Lightweight canvas strip charts for streaming telemetry: a sliding time
 * window, one polyline per channel, dashed horizontal threshold lines.
 * No smoothing: chart values are exactly the wire values.
 */

import { Telemetry } from "./protocol.js";

export interface SeriesSpec {
  key: keyof Telemetry;
  label: string;
  color: string;
  dashed?: boolean;
}

export interface ThresholdSpec {
  value: number;
  label: string;
  color: string;
}

export interface ChartSpec {
  title: string;
  unit: string;
  series: SeriesSpec[];
  thresholds: ThresholdSpec[];
  windowSeconds: number;
}

const MARGIN = { left: 44, right: 8, top: 20, bottom: 18 };

export class StripChart {
  private ctx: CanvasRenderingContext2D;

  constructor(private canvas: HTMLCanvasElement, private spec: ChartSpec) {
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("canvas 2d context unavailable");
    this.ctx = ctx;
  }

  setThresholds(thresholds: ThresholdSpec[]): void {
    this.spec.thresholds = thresholds;
  }

  render(samples: Telemetry[]): void {
    const { ctx, canvas, spec } = this;
    const w = canvas.width;
    const h = canvas.height;
    const plotW = w - MARGIN.left - MARGIN.right;
    const plotH = h - MARGIN.top - MARGIN.bottom;

    ctx.clearRect(0, 0, w, h);
    ctx.fillStyle = "#11151c";
    ctx.fillRect(0, 0, w, h);

    const tEnd = samples.length > 0 ? samples[samples.length - 1].t : spec.windowSeconds;
    const tStart = Math.max(0, tEnd - spec.windowSeconds);
    const visible = samples.filter((s) => s.t >= tStart);

    let lo = Infinity;
    let hi = -Infinity;
    for (const th of spec.thresholds) {
      lo = Math.min(lo, th.value);
      hi = Math.max(hi, th.value);
    }
    for (const s of visible) {
      for (const serie of spec.series) {
        const v = s[serie.key] as number;
        lo = Math.min(lo, v);
        hi = Math.max(hi, v);
      }
    }
    if (!isFinite(lo) || !isFinite(hi)) {
      lo = 0;
      hi = 1;
    }
    if (hi - lo < 1e-9) {
      hi += 0.5;
      lo -= 0.5;
    }
    const pad = 0.08 * (hi - lo);
    lo -= pad;
    hi += pad;

    const x = (t: number) => MARGIN.left + ((t - tStart) / spec.windowSeconds) * plotW;
    const y = (v: number) => MARGIN.top + (1 - (v - lo) / (hi - lo)) * plotH;

    // frame + y labels
    ctx.strokeStyle = "#2a313d";
    ctx.strokeRect(MARGIN.left, MARGIN.top, plotW, plotH);
    ctx.fillStyle = "#8b95a5";
    ctx.font = "10px sans-serif";
    ctx.textAlign = "right";
    for (const frac of [0, 0.5, 1]) {
      const v = lo + frac * (hi - lo);
      ctx.fillText(v.toFixed(2), MARGIN.left - 4, y(v) + 3);
    }
    ctx.textAlign = "left";
    ctx.fillStyle = "#c6cdd8";
    ctx.font = "11px sans-serif";
    ctx.fillText(`${this.spec.title} [${this.spec.unit}]`, MARGIN.left, 12);

    // thresholds
    for (const th of spec.thresholds) {
      ctx.strokeStyle = th.color;
      ctx.setLineDash([5, 4]);
      ctx.beginPath();
      ctx.moveTo(MARGIN.left, y(th.value));
      ctx.lineTo(MARGIN.left + plotW, y(th.value));
      ctx.stroke();
      ctx.setLineDash([]);
      ctx.fillStyle = th.color;
      ctx.font = "9px sans-serif";
      ctx.fillText(th.label, MARGIN.left + plotW - 110, y(th.value) - 3);
    }

    // series
    for (const serie of spec.series) {
      ctx.strokeStyle = serie.color;
      ctx.setLineDash(serie.dashed ? [3, 3] : []);
      ctx.beginPath();
      let started = false;
      for (const s of visible) {
        const px = x(s.t);
        const py = y(s[serie.key] as number);
        if (!started) {
          ctx.moveTo(px, py);
          started = true;
        } else {
          ctx.lineTo(px, py);
        }
      }
      ctx.stroke();
      ctx.setLineDash([]);
    }

    // legend
    let lx = MARGIN.left + 6;
    ctx.font = "10px sans-serif";
    for (const serie of spec.series) {
      ctx.fillStyle = serie.color;
      ctx.fillText(serie.label, lx, MARGIN.top + 11);
      lx += ctx.measureText(serie.label).width + 12;
    }

    // time axis
    ctx.fillStyle = "#8b95a5";
    ctx.textAlign = "center";
    for (const frac of [0, 0.5, 1]) {
      const t = tStart + frac * spec.windowSeconds;
      ctx.fillText(`${t.toFixed(0)}s`, x(t), h - 5);
    }
    ctx.textAlign = "left";
  }
}
