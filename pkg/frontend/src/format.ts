/** Formatting and chart-series helpers.
 *
 * The only arithmetic performed client-side is display rounding,
 * clock-to-scoreboard conversion and marginal sums over cells the
 * service already returned.
 */

import type { ForecastDoc, HistoryDoc, TopScore } from "./api.js";

/** One-decimal percent, e.g. 0.5236 -> "52.4%". */
export function percent1(p: number): string {
  return `${(100 * p).toFixed(1)}%`;
}

/** Unified match clock -> scoreboard minute (needs u1 past the break). */
export function clockToMinute(clock: number, stoppage1: number | null): number {
  if (clock <= 45) return clock;
  const u1 = stoppage1 ?? 0;
  if (clock <= 45 + u1) return 45; // inside first-half stoppage: "45+x"
  return clock - u1;
}

export function scoreboardLabel(clock: number, stoppage1: number | null): string {
  if (clock <= 45) return `${clock}'`;
  const u1 = stoppage1 ?? 0;
  if (clock <= 45 + u1) return `45+${Math.ceil(clock - 45)}'`;
  const m = clock - u1;
  if (m <= 90) return `${m}'`;
  return `90+${Math.ceil(m - 90)}'`;
}

/** Top scores re-sorted defensively (descending prob, then score). */
export function orderedTopScores(scores: TopScore[]): TopScore[] {
  return [...scores].sort((a, b) => b.prob - a.prob || a.score.localeCompare(b.score));
}

/** Marginal P(home scores g) from the returned exact-score cells. */
export function homeGoalMarginal(exact: Record<string, number>, g: number): number {
  let total = 0;
  for (const [cell, p] of Object.entries(exact)) {
    if (cell === "overflow") continue;
    const h = Number(cell.split("-")[0]);
    if (h === g) total += p;
  }
  return total;
}

/** Scoreboard position of a logged (half, minute, offset) event; clamped
 * to the 0..90 chart domain (stoppage markers sit on 45 / 90). */
export function eventScoreboardMinute(e: {
  half: number;
  minute: number;
  stoppage_offset?: number;
}): number {
  const offset = e.stoppage_offset ?? 0;
  if (e.half === 1) return offset > 0 ? 45 : e.minute - 0.5;
  return offset > 0 ? 90 : 45 + e.minute - 0.5;
}

export interface TrajectoryPoint {
  clock: number;
  minute: number;
  home: number;
  draw: number;
  away: number;
  scoreProb: number | null; // probability of the tracked exact score
  seed: number;
}

/** Chart series straight from recorded history; no re-computation. */
export function buildTrajectory(history: HistoryDoc, trackScore?: string): TrajectoryPoint[] {
  const u1 = history.state.stoppage1;
  return history.forecasts.map(({ clock, forecast }) => ({
    clock,
    minute: clockToMinute(clock, u1),
    home: forecast.result_probs.home_win,
    draw: forecast.result_probs.draw,
    away: forecast.result_probs.away_win,
    scoreProb: trackScore ? (forecast.exact_score_probs[trackScore] ?? 0) : null,
    seed: forecast.seed,
  }));
}

/** Segments where a series jumps by more than the threshold. */
export function discontinuities(
  points: TrajectoryPoint[],
  series: (p: TrajectoryPoint) => number,
  threshold: number,
): Array<{ fromClock: number; toClock: number; jump: number }> {
  const out: Array<{ fromClock: number; toClock: number; jump: number }> = [];
  for (let i = 1; i < points.length; i++) {
    const jump = series(points[i]) - series(points[i - 1]);
    if (Math.abs(jump) > threshold) {
      out.push({ fromClock: points[i - 1].clock, toClock: points[i].clock, jump });
    }
  }
  return out;
}

export function describeForecast(f: ForecastDoc): string {
  const eg = f.expected_goals;
  return (
    `n=${f.n_scenarios} seed=${f.seed} ` +
    `xG ${eg.home.toFixed(2)}-${eg.away.toFixed(2)} at clock ${f.clock.toFixed(1)}`
  );
}
