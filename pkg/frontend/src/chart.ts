/**
 * Trajectory chart rendered to an SVG string. Pure string building over
 * server payloads: the chart plots exactly the numbers it was given.
 */

import { ObservationsDoc, TimeSeriesDoc } from "./types.js";

export const SERIES_COLORS = [
  "#2563eb",
  "#dc2626",
  "#16a34a",
  "#9333ea",
  "#ea580c",
  "#0891b2",
  "#ca8a04",
];

export interface Scale {
  (value: number): number;
}

export function linearScale(d0: number, d1: number, r0: number, r1: number): Scale {
  const span = d1 - d0;
  if (span === 0) return () => (r0 + r1) / 2;
  return (value: number) => r0 + ((value - d0) / span) * (r1 - r0);
}

/** Round tick positions covering [min, max]: 1/2/5 ladder. */
export function niceTicks(min: number, max: number, count = 5): number[] {
  if (!(max > min)) return [min];
  const rawStep = (max - min) / Math.max(1, count);
  const power = Math.pow(10, Math.floor(Math.log10(rawStep)));
  const candidates = [1, 2, 5, 10].map((m) => m * power);
  const step = candidates.find((c) => c >= rawStep) ?? candidates[3]!;
  const start = Math.ceil(min / step) * step;
  const ticks: number[] = [];
  for (let t = start; t <= max + step * 1e-9; t += step) {
    ticks.push(Number(t.toPrecision(12)));
  }
  return ticks;
}

export interface ChartInput {
  current: TimeSeriesDoc | null;
  ghost?: TimeSeriesDoc | null;
  observations?: ObservationsDoc | null;
  width?: number;
  height?: number;
}

interface Extent {
  tMin: number;
  tMax: number;
  vMin: number;
  vMax: number;
}

export function chartExtent(input: ChartInput): Extent | null {
  let tMin = Infinity;
  let tMax = -Infinity;
  let vMax = -Infinity;
  const absorb = (times: number[], series: Record<string, number[]>) => {
    for (const t of times) {
      tMin = Math.min(tMin, t);
      tMax = Math.max(tMax, t);
    }
    for (const values of Object.values(series)) {
      for (const v of values) vMax = Math.max(vMax, v);
    }
  };
  if (input.current) absorb(input.current.times, input.current.series);
  if (input.ghost) absorb(input.ghost.times, input.ghost.series);
  if (input.observations) absorb(input.observations.times, input.observations.series);
  if (!Number.isFinite(tMin) || !Number.isFinite(vMax)) return null;
  return { tMin, tMax, vMin: 0, vMax: vMax <= 0 ? 1 : vMax };
}

function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function polylinePoints(times: number[], values: number[], x: Scale, y: Scale): string {
  const points: string[] = [];
  for (let i = 0; i < times.length; i++) {
    points.push(`${x(times[i]!).toFixed(1)},${y(values[i]!).toFixed(1)}`);
  }
  return points.join(" ");
}

export function colorForIndex(index: number): string {
  return SERIES_COLORS[index % SERIES_COLORS.length]!;
}

/** Render trajectories (plus ghost run and observation points) as SVG. */
export function renderChart(input: ChartInput): string {
  const width = input.width ?? 640;
  const height = input.height ?? 360;
  const margin = { top: 16, right: 12, bottom: 28, left: 52 };
  const extent = chartExtent(input);
  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" class="chart">`,
  ];
  if (!extent) {
    parts.push(
      `<text x="${width / 2}" y="${height / 2}" text-anchor="middle" class="chart-empty">no run yet</text>`,
      "</svg>",
    );
    return parts.join("");
  }
  const x = linearScale(extent.tMin, extent.tMax, margin.left, width - margin.right);
  const y = linearScale(extent.vMin, extent.vMax, height - margin.bottom, margin.top);

  for (const tick of niceTicks(extent.vMin, extent.vMax)) {
    const py = y(tick).toFixed(1);
    parts.push(
      `<line x1="${margin.left}" y1="${py}" x2="${width - margin.right}" y2="${py}" class="grid"/>`,
      `<text x="${margin.left - 6}" y="${py}" text-anchor="end" dominant-baseline="middle" class="tick">${tick}</text>`,
    );
  }
  for (const tick of niceTicks(extent.tMin, extent.tMax, 6)) {
    const px = x(tick).toFixed(1);
    parts.push(
      `<text x="${px}" y="${height - 8}" text-anchor="middle" class="tick">${tick}</text>`,
    );
  }

  const entityOrder = input.current
    ? Object.keys(input.current.series)
    : input.ghost
      ? Object.keys(input.ghost.series)
      : [];
  const colorOf = new Map(entityOrder.map((id, i) => [id, colorForIndex(i)]));

  if (input.ghost) {
    for (const [entityId, values] of Object.entries(input.ghost.series)) {
      const color = colorOf.get(entityId) ?? "#999";
      parts.push(
        `<polyline fill="none" stroke="${color}" stroke-width="1.5" stroke-dasharray="5 4" opacity="0.45" data-ghost="${escapeXml(entityId)}" points="${polylinePoints(input.ghost.times, values, x, y)}"/>`,
      );
    }
  }
  if (input.current) {
    for (const [entityId, values] of Object.entries(input.current.series)) {
      const color = colorOf.get(entityId) ?? "#999";
      parts.push(
        `<polyline fill="none" stroke="${color}" stroke-width="2" data-series="${escapeXml(entityId)}" points="${polylinePoints(input.current.times, values, x, y)}"/>`,
      );
    }
  }
  if (input.observations) {
    for (const [entityId, values] of Object.entries(input.observations.series)) {
      const color = colorOf.get(entityId) ?? "#444";
      for (let i = 0; i < input.observations.times.length; i++) {
        parts.push(
          `<circle cx="${x(input.observations.times[i]!).toFixed(1)}" cy="${y(values[i]!).toFixed(1)}" r="3" fill="${color}" stroke="white" stroke-width="1" data-obs="${escapeXml(entityId)}"/>`,
        );
      }
    }
  }

  let legendY = margin.top + 4;
  for (const entityId of entityOrder) {
    parts.push(
      `<circle cx="${width - margin.right - 120}" cy="${legendY}" r="4" fill="${colorOf.get(entityId)}"/>`,
      `<text x="${width - margin.right - 110}" y="${legendY}" dominant-baseline="middle" class="legend">${escapeXml(entityId)}</text>`,
    );
    legendY += 16;
  }
  parts.push("</svg>");
  return parts.join("");
}
