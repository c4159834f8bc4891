// @vitest-environment jsdom
//
// End-to-end acceptance: the console drives the real Python service
// through its HTTP interface only.  A single home goal entered at
// minute 34 must produce a probability trajectory whose only
// discontinuity sits at the goal, with P(1-0) rising monotonically
// afterwards on the displayed chart; what-if previews must leave the
// session history byte-identical.

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ServiceClient } from "../src/api.js";
import { SessionController } from "../src/controller.js";
import { buildTrajectory, discontinuities } from "../src/format.js";
import { buildApp } from "../src/ui.js";
import { RunningService, startService, until } from "./helpers/service.js";

const GOAL_CLOCK = 33.5; // minute 34 on the unified clock

let service: RunningService;
let client: ServiceClient;
let controller: SessionController;
let root: HTMLElement;

function snap() {
  return controller.snapshot();
}

function forecastCount(): number {
  return snap().history?.forecasts.length ?? 0;
}

async function afterAction(fn: () => void): Promise<void> {
  const before = forecastCount();
  fn();
  await until(() => forecastCount() === before + 1 || snap().lastError !== null);
  const err = snap().lastError;
  if (err) throw new Error(`service refused the action: ${err.code}: ${err.message}`);
}

function setTime(half: 1 | 2, minute: number, offset = 0): void {
  (root.querySelector("#time-half") as HTMLSelectElement).value = String(half);
  (root.querySelector("#time-minute") as HTMLInputElement).value = String(minute);
  (root.querySelector("#time-offset") as HTMLInputElement).value = String(offset);
}

function click(selector: string): void {
  (root.querySelector(selector) as HTMLButtonElement).click();
}

beforeAll(async () => {
  service = await startService(20000);
  client = new ServiceClient(service.baseUrl);
  controller = new SessionController(client, {
    pollMs: 0, // the test drives refreshes; no background polling
    forecastN: 20000,
    seedFor: (i) => 515000 + i,
  });
  document.body.innerHTML = '<div id="app"></div>';
  root = document.getElementById("app") as HTMLElement;
  buildApp(root, controller);
  await until(() => (root.querySelector("#setup-model") as HTMLSelectElement).options.length > 0);
});

afterAll(() => {
  service?.stop();
});

describe("live console against the real service", () => {
  it("walks a 1-0 match entered through the UI", async () => {
    // -- session setup view
    (root.querySelector("#setup-home") as HTMLSelectElement).value = "Ceara";
    (root.querySelector("#setup-away") as HTMLSelectElement).value = "Parana";
    (root.querySelector("#setup-home-value") as HTMLInputElement).value = "8.16";
    (root.querySelector("#setup-away-value") as HTMLInputElement).value = "5.08";
    click("#setup-start");
    await until(() => snap().sessionId !== null && forecastCount() === 1);
    expect((root.querySelector("#live-view") as HTMLElement).hidden).toBe(false);

    // -- first half: advance the clock, goal at 34'
    for (const minute of [10, 20, 30]) {
      setTime(1, minute);
      await afterAction(() => click("#btn-clock"));
    }
    const preGoal = snap().forecast!;
    expect(preGoal.exact_score_probs["0-0"] ?? 0).toBeGreaterThan(0);

    setTime(1, 34);
    await afterAction(() => click("#btn-home_goal"));
    expect(snap().state!.home_goals).toBe(1);
    expect(snap().state!.clock).toBe(GOAL_CLOCK);
    // a goalless draw is impossible from now on
    expect(snap().forecast!.exact_score_probs["0-0"] ?? 0).toBe(0);

    for (const minute of [40, 45]) {
      setTime(1, minute);
      await afterAction(() => click("#btn-clock"));
    }
    (root.querySelector("#stoppage-half") as HTMLSelectElement).value = "1";
    (root.querySelector("#stoppage-minutes") as HTMLInputElement).value = "2";
    await afterAction(() => click("#btn-stoppage"));
    expect(snap().state!.stoppage1).toBe(2);

    // -- second half to full time
    for (const minute of [5, 10, 15, 20, 25, 30, 35, 40, 45]) {
      setTime(2, minute);
      await afterAction(() => click("#btn-clock"));
    }
    (root.querySelector("#stoppage-half") as HTMLSelectElement).value = "2";
    (root.querySelector("#stoppage-minutes") as HTMLInputElement).value = "4";
    await afterAction(() => click("#btn-stoppage"));

    // -- the displayed trajectory: exactly one discontinuity, at the goal
    const history = snap().history!;
    const points = buildTrajectory(history, "1-0");
    expect(points.length).toBeGreaterThanOrEqual(16);
    const jumps = discontinuities(points, (p) => p.home, 0.1);
    expect(jumps).toHaveLength(1);
    expect(jumps[0].toClock).toBe(GOAL_CLOCK);
    expect(jumps[0].jump).toBeGreaterThan(0.1);

    // -- P(1-0) increases monotonically after the goal on the chart
    // (points sharing an x position collapse to the last drawn one)
    const byClock = new Map<number, number>();
    for (const p of points) {
      if (p.clock >= GOAL_CLOCK) byClock.set(p.clock, p.scoreProb ?? 0);
    }
    const series = [...byClock.entries()].sort((a, b) => a[0] - b[0]).map(([, v]) => v);
    expect(series.length).toBeGreaterThanOrEqual(10);
    for (let i = 1; i < series.length; i++) {
      expect(series[i]).toBeGreaterThan(series[i - 1]);
    }
    expect(series[series.length - 1]).toBeGreaterThan(0.8);

    // -- the chart in the DOM reflects the same data
    const svg = (root.querySelector("#chart") as HTMLElement).innerHTML;
    expect(svg).toContain('data-series="Home win"');
    expect(svg).toContain('data-marker="goal:home"');
  });

  it("what-if previews leave the history byte-identical", async () => {
    const sid = snap().sessionId!;
    const before = await client.historyText(sid);

    // preview a red card and an extra goal, side by side, then discard
    for (const [kind, minute] of [
      ["away_red", 45],
      ["home_goal", 45],
      ["away_goal", 45],
    ] as const) {
      (root.querySelector("#wi-kind") as HTMLSelectElement).value = kind;
      (root.querySelector("#wi-half") as HTMLSelectElement).value = "2";
      (root.querySelector("#wi-minute") as HTMLInputElement).value = String(minute);
      (root.querySelector("#wi-offset") as HTMLInputElement).value = "3";
      click("#btn-wi-preview");
      await until(() => snap().preview !== null);
      const blocks = root.querySelectorAll("#wi-compare .forecast-block");
      expect(blocks).toHaveLength(2);
      click("#btn-wi-discard");
      await until(() => snap().preview === null);
    }

    const after = await client.historyText(sid);
    expect(after).toBe(before);
  });

  it("a hypothetical opponent red card raises the home win probability", async () => {
    // fresh session so there is plenty of match left for the effect
    const controller2 = new SessionController(client, {
      pollMs: 0,
      forecastN: 20000,
      seedFor: (i) => 616000 + i,
    });
    await controller2.createSession({
      model_id: "G4S5R",
      home_team: "Ceara",
      away_team: "Parana",
      home_value: 8.16,
      away_value: 5.08,
    });
    await controller2.postClock({ half: 1, minute: 20 });
    const base = controller2.snapshot().forecast!;
    await controller2.stageWhatIf("away_red", { half: 1, minute: 20 });
    const preview = controller2.snapshot().preview!;
    expect(preview.result_probs.home_win).toBeGreaterThan(base.result_probs.home_win);
  });

  it("reloading the page reproduces the display from the session id", async () => {
    const sid = snap().sessionId!;
    const shownBefore = (root.querySelector("#result-probs") as HTMLElement).textContent;

    document.body.innerHTML = '<div id="app"></div>';
    const root2 = document.getElementById("app") as HTMLElement;
    const controller2 = new SessionController(client, {
      pollMs: 0,
      forecastN: 20000,
      seedFor: (i) => 515000 + i, // irrelevant for history-backed parts
    });
    buildApp(root2, controller2);
    await controller2.attach(sid);
    // the trajectory chart is rebuilt purely from refetched history; the
    // attach itself commits one fresh forecast, appended at the end
    const svg2 = (root2.querySelector("#chart") as HTMLElement).innerHTML;
    expect(svg2).toContain('data-series="Home win"');
    const points2 = buildTrajectory(controller2.snapshot().history!);
    const points1 = buildTrajectory(snap().history!);
    expect(points2.length).toBe(points1.length + 1);
    expect(points2.slice(0, points1.length).map((p) => [p.clock, p.home])).toEqual(
      points1.map((p) => [p.clock, p.home]),
    );
    expect(shownBefore).toBeTruthy();
  });
});
