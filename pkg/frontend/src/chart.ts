/** Tiny dependency-free SVG line chart for probability trajectories. */

import type { TrajectoryPoint } from "./format.js";

export interface ChartSeries {
  label: string;
  color: string;
  value: (p: TrajectoryPoint) => number | null;
}

export interface ChartMarker {
  minute: number;
  kind: "goal" | "red";
  side: "home" | "away";
}

const W = 640;
const H = 260;
const PAD = { left: 42, right: 10, top: 10, bottom: 24 };

function x(minute: number, maxMinute: number): number {
  return PAD.left + (minute / Math.max(maxMinute, 1)) * (W - PAD.left - PAD.right);
}

function y(prob: number): number {
  return PAD.top + (1 - prob) * (H - PAD.top - PAD.bottom);
}

export function polylinePoints(
  points: TrajectoryPoint[],
  series: (p: TrajectoryPoint) => number | null,
  maxMinute = 90,
): string {
  return points
    .filter((p) => series(p) !== null)
    .map((p) => `${x(p.minute, maxMinute).toFixed(1)},${y(series(p) as number).toFixed(1)}`)
    .join(" ");
}

export function renderChart(
  points: TrajectoryPoint[],
  seriesList: ChartSeries[],
  markers: ChartMarker[] = [],
): string {
  const maxMinute = 90;
  const grid = [0, 0.25, 0.5, 0.75, 1]
    .map(
      (g) =>
        `<line x1="${PAD.left}" y1="${y(g)}" x2="${W - PAD.right}" y2="${y(g)}" ` +
        `stroke="#ddd" stroke-width="1"/>` +
        `<text x="4" y="${y(g) + 4}" font-size="10" fill="#666">${Math.round(g * 100)}%</text>`,
    )
    .join("");
  const axis = [0, 15, 30, 45, 60, 75, 90]
    .map(
      (m) =>
        `<text x="${x(m, maxMinute)}" y="${H - 6}" font-size="10" fill="#666" ` +
        `text-anchor="middle">${m}'</text>`,
    )
    .join("");
  const lines = seriesList
    .map((s) => {
      const pts = polylinePoints(points, s.value, maxMinute);
      return pts
        ? `<polyline fill="none" stroke="${s.color}" stroke-width="2" points="${pts}" ` +
            `data-series="${s.label}"/>`
        : "";
    })
    .join("");
  const marks = markers
    .map((m) => {
      const color = m.side === "home" ? "#222" : "#c0392b";
      const dash = m.kind === "goal" ? "4 3" : "1 3";
      return (
        `<line x1="${x(m.minute, maxMinute)}" y1="${PAD.top}" x2="${x(m.minute, maxMinute)}" ` +
        `y2="${H - PAD.bottom}" stroke="${color}" stroke-dasharray="${dash}" stroke-width="1.2" ` +
        `data-marker="${m.kind}:${m.side}"/>`
      );
    })
    .join("");
  const legend = seriesList
    .map(
      (s, i) =>
        `<rect x="${PAD.left + i * 120}" y="${PAD.top}" width="10" height="10" fill="${s.color}"/>` +
        `<text x="${PAD.left + i * 120 + 14}" y="${PAD.top + 9}" font-size="11">${s.label}</text>`,
    )
    .join("");
  return (
    `<svg viewBox="0 0 ${W} ${H}" role="img" aria-label="probability trajectory">` +
    `${grid}${axis}${lines}${marks}${legend}</svg>`
  );
}
