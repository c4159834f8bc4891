import { beforeEach, describe, expect, it, vi } from "vitest";

import { ApiError, ForecastDoc, HistoryDoc, StateDoc } from "../src/api.js";
import { SessionController } from "../src/controller.js";

function state(clock = 0, goals = 0): StateDoc {
  return {
    clock,
    half: 1,
    home_goals: goals,
    away_goals: 0,
    home_reds: 0,
    away_reds: 0,
    stoppage1: null,
    stoppage2: null,
  };
}

function forecast(homeWin = 0.5, seed = 1): ForecastDoc {
  return {
    n_scenarios: 1000,
    seed,
    result_probs: { home_win: homeWin, draw: 0.3, away_win: 0.7 - homeWin + 0.0 },
    expected_goals: { home: 1.2, away: 0.8 },
    top_scores: [{ score: "1-0", prob: 0.2 }],
    exact_score_probs: { "1-0": 0.2 },
    clock: 0,
    what_if: null,
    cutoff: state(),
  };
}

function history(st: StateDoc): HistoryDoc {
  return {
    session_id: "sid",
    model_id: "m",
    home_team: "H",
    away_team: "A",
    state: st,
    events: [],
    forecasts: [],
  };
}

class FakeClient {
  current = state();
  calls: string[] = [];
  models = vi.fn(async () => ({ m: { teams: ["H", "A"], n_params: 3 } }));
  createSession = vi.fn(async () => {
    this.calls.push("create");
    return { session_id: "sid", state: this.current };
  });
  postEvent = vi.fn(async (_sid: string, kind: string) => {
    this.calls.push(`event:${kind}`);
    this.current = state(33.5, 1);
    return { state: this.current };
  });
  postClock = vi.fn(async () => {
    this.calls.push("clock");
    return { state: this.current };
  });
  postStoppage = vi.fn(async () => {
    this.calls.push("stoppage");
    return { state: this.current };
  });
  undo = vi.fn(async () => {
    this.calls.push("undo");
    this.current = state();
    return { undone: {}, state: this.current };
  });
  forecast = vi.fn(async (_sid: string, opts: { whatIf?: unknown; seed?: number } = {}) => {
    this.calls.push(opts.whatIf ? "forecast:whatif" : "forecast");
    return forecast(opts.whatIf ? 0.4 : 0.5, opts.seed ?? 99);
  });
  history = vi.fn(async () => {
    this.calls.push("history");
    return history(this.current);
  });
  historyText = vi.fn(async () => JSON.stringify(history(this.current)));
}

describe("SessionController", () => {
  let client: FakeClient;
  let ctl: SessionController;

  beforeEach(() => {
    client = new FakeClient();
    ctl = new SessionController(client as never, { pollMs: 0, seedFor: (i) => 100 + i });
  });

  it("creates a session and refreshes the forecast", async () => {
    const ok = await ctl.createSession({
      model_id: "m",
      home_team: "H",
      away_team: "A",
      home_value: 10,
      away_value: 8,
    });
    expect(ok).toBe(true);
    const snap = ctl.snapshot();
    expect(snap.sessionId).toBe("sid");
    expect(snap.forecast?.result_probs.home_win).toBe(0.5);
    expect(client.calls).toEqual(["create", "forecast", "history"]);
  });

  it("posting an event triggers a fresh forecast", async () => {
    await ctl.createSession({ model_id: "m", home_team: "H", away_team: "A", home_value: 1, away_value: 1 });
    client.calls.length = 0;
    await ctl.postEvent("home_goal", { half: 1, minute: 34 });
    expect(client.calls).toEqual(["event:home_goal", "forecast", "history"]);
    expect(ctl.snapshot().state?.home_goals).toBe(1);
  });

  it("pins seeds through the configured policy", async () => {
    await ctl.createSession({ model_id: "m", home_team: "H", away_team: "A", home_value: 1, away_value: 1 });
    expect(client.forecast).toHaveBeenCalledWith("sid", expect.objectContaining({ seed: 100 }));
    await ctl.refresh();
    expect(client.forecast).toHaveBeenLastCalledWith("sid", expect.objectContaining({ seed: 101 }));
  });

  it("surfaces service errors without throwing", async () => {
    await ctl.createSession({ model_id: "m", home_team: "H", away_team: "A", home_value: 1, away_value: 1 });
    client.postClock = vi.fn(async () => {
      throw new ApiError(409, "time_regression", "backwards");
    });
    const ok = await ctl.postClock({ half: 1, minute: 1 });
    expect(ok).toBe(false);
    expect(ctl.snapshot().lastError).toEqual({ code: "time_regression", message: "backwards" });
    // next successful call clears the error
    await ctl.refresh();
    expect(ctl.snapshot().lastError).toBeNull();
  });

  it("what-if preview never posts an event and is discardable", async () => {
    await ctl.createSession({ model_id: "m", home_team: "H", away_team: "A", home_value: 1, away_value: 1 });
    client.calls.length = 0;
    await ctl.stageWhatIf("away_red", { half: 1, minute: 20 });
    expect(client.calls).toEqual(["forecast:whatif"]);
    expect(ctl.snapshot().preview?.result_probs.home_win).toBe(0.4);
    ctl.discardWhatIf();
    expect(ctl.snapshot().preview).toBeNull();
    expect(client.postEvent).not.toHaveBeenCalled();
  });

  it("committing the staged what-if posts the same event", async () => {
    await ctl.createSession({ model_id: "m", home_team: "H", away_team: "A", home_value: 1, away_value: 1 });
    await ctl.stageWhatIf("home_goal", { half: 1, minute: 34, stoppage_offset: 0 });
    await ctl.commitWhatIf();
    expect(client.postEvent).toHaveBeenCalledWith("sid", "home_goal", {
      half: 1,
      minute: 34,
      stoppage_offset: 0,
    });
    expect(ctl.snapshot().preview).toBeNull();
  });

  it("attach rebuilds the display from the service alone", async () => {
    client.current = state(40, 1);
    const ok = await ctl.attach("sid");
    expect(ok).toBe(true);
    const snap = ctl.snapshot();
    expect(snap.state?.home_goals).toBe(1);
    expect(snap.history?.state.clock).toBe(40);
  });

  it("notifies listeners on every change", async () => {
    const seen: number[] = [];
    ctl.onChange((snap) => seen.push(snap.forecast?.seed ?? -1));
    await ctl.createSession({ model_id: "m", home_team: "H", away_team: "A", home_value: 1, away_value: 1 });
    await ctl.refresh();
    expect(seen.length).toBeGreaterThanOrEqual(2);
  });
});
