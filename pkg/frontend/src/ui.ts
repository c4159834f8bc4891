/** DOM wiring for the console views.
 *
 * Four panels: session setup, live controls, probability panel with the
 * trajectory chart, and the what-if panel.  All numbers shown come from
 * service responses; the view layer only formats them.
 */

import type { EventKind, EventTime, ForecastDoc } from "./api.js";
import { renderChart, ChartMarker } from "./chart.js";
import {
  buildTrajectory,
  describeForecast,
  eventScoreboardMinute,
  orderedTopScores,
  percent1,
  scoreboardLabel,
} from "./format.js";
import type { SessionController, Snapshot } from "./controller.js";

const EVENT_LABELS: Record<EventKind, string> = {
  home_goal: "Home goal",
  away_goal: "Away goal",
  home_red: "Home red card",
  away_red: "Away red card",
};

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: Array<Node | string> = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  for (const child of children) node.append(child);
  return node;
}

function readTime(root: HTMLElement): EventTime {
  const half = Number((root.querySelector("#time-half") as HTMLSelectElement).value) as 1 | 2;
  const minute = Number((root.querySelector("#time-minute") as HTMLInputElement).value);
  const offset = Number((root.querySelector("#time-offset") as HTMLInputElement).value || "0");
  return { half, minute, stoppage_offset: offset };
}

export function buildApp(root: HTMLElement, controller: SessionController): void {
  root.innerHTML = "";

  // ---- session setup -----------------------------------------------------
  const setup = el("section", { id: "setup-view", class: "panel" }, [
    el("h2", {}, ["New session"]),
  ]);
  const modelSel = el("select", { id: "setup-model" });
  const homeSel = el("select", { id: "setup-home" });
  const awaySel = el("select", { id: "setup-away" });
  const homeVal = el("input", { id: "setup-home-value", type: "number", step: "0.1", min: "0.1" });
  const awayVal = el("input", { id: "setup-away-value", type: "number", step: "0.1", min: "0.1" });
  const startBtn = el("button", { id: "setup-start" }, ["Start session"]);
  const setupErr = el("p", { id: "setup-error", class: "error" });
  setup.append(
    el("label", {}, ["Model ", modelSel]),
    el("label", {}, ["Home team ", homeSel]),
    el("label", {}, ["Away team ", awaySel]),
    el("label", {}, ["Home lineup value (MEUR) ", homeVal]),
    el("label", {}, ["Away lineup value (MEUR) ", awayVal]),
    startBtn,
    setupErr,
  );

  // ---- live controls -----------------------------------------------------
  const live = el("section", { id: "live-view", class: "panel", hidden: "hidden" });
  const scoreboard = el("div", { id: "scoreboard" });
  const timeRow = el("div", { class: "row" }, [
    el("label", {}, [
      "Half ",
      el("select", { id: "time-half" }, [el("option", {}, ["1"]), el("option", {}, ["2"])]),
    ]),
    el("label", {}, ["Minute ", el("input", { id: "time-minute", type: "number", min: "1", max: "45", value: "1" })]),
    el("label", {}, ["Stoppage offset ", el("input", { id: "time-offset", type: "number", min: "0", value: "0" })]),
    el("button", { id: "btn-clock" }, ["Advance clock"]),
  ]);
  const eventRow = el("div", { class: "row" });
  for (const kind of Object.keys(EVENT_LABELS) as EventKind[]) {
    eventRow.append(el("button", { id: `btn-${kind}`, "data-event": kind }, [EVENT_LABELS[kind]]));
  }
  const stoppageRow = el("div", { class: "row" }, [
    el("label", {}, [
      "Stoppage half ",
      el("select", { id: "stoppage-half" }, [el("option", {}, ["1"]), el("option", {}, ["2"])]),
    ]),
    el("label", {}, ["Minutes ", el("input", { id: "stoppage-minutes", type: "number", min: "0", value: "0" })]),
    el("button", { id: "btn-stoppage" }, ["Announce stoppage"]),
    el("button", { id: "btn-undo" }, ["Undo last entry"]),
  ]);
  const liveErr = el("p", { id: "live-error", class: "error" });
  live.append(el("h2", {}, ["Match control"]), scoreboard, timeRow, eventRow, stoppageRow, liveErr);

  // ---- probability panel -------------------------------------------------
  const probs = el("section", { id: "probability-panel", class: "panel", hidden: "hidden" }, [
    el("h2", {}, ["Forecast"]),
    el("div", { id: "result-probs" }),
    el("div", { id: "expected-goals" }),
    el("h3", {}, ["Most likely scores"]),
    el("ol", { id: "top-scores" }),
    el("details", { id: "forecast-details" }, [
      el("summary", {}, ["Forecast details"]),
      el("p", { id: "forecast-meta" }),
    ]),
    el("div", { id: "chart" }),
  ]);

  // ---- what-if panel -----------------------------------------------------
  const whatIf = el("section", { id: "what-if-panel", class: "panel", hidden: "hidden" }, [
    el("h2", {}, ["What if..."]),
  ]);
  const wiKind = el("select", { id: "wi-kind" });
  for (const kind of Object.keys(EVENT_LABELS) as EventKind[]) {
    wiKind.append(el("option", { value: kind }, [EVENT_LABELS[kind]]));
  }
  whatIf.append(
    el("div", { class: "row" }, [
      el("label", {}, ["Event ", wiKind]),
      el("label", {}, [
        "Half ",
        el("select", { id: "wi-half" }, [el("option", {}, ["1"]), el("option", {}, ["2"])]),
      ]),
      el("label", {}, ["Minute ", el("input", { id: "wi-minute", type: "number", min: "1", max: "45", value: "1" })]),
      el("label", {}, ["Offset ", el("input", { id: "wi-offset", type: "number", min: "0", value: "0" })]),
      el("button", { id: "btn-wi-preview" }, ["Preview"]),
    ]),
    el("div", { id: "wi-compare", class: "row" }),
    el("div", { class: "row" }, [
      el("button", { id: "btn-wi-commit", disabled: "disabled" }, ["Commit event"]),
      el("button", { id: "btn-wi-discard", disabled: "disabled" }, ["Discard"]),
    ]),
  );

  root.append(setup, live, probs, whatIf);

  // ---- behaviour -----------------------------------------------------------
  void controller.models().then((models) => {
    for (const name of Object.keys(models)) {
      modelSel.append(el("option", { value: name }, [name]));
    }
    const fill = () => {
      const info = models[modelSel.value];
      homeSel.innerHTML = "";
      awaySel.innerHTML = "";
      for (const team of info?.teams ?? []) {
        homeSel.append(el("option", { value: team }, [team]));
        awaySel.append(el("option", { value: team }, [team]));
      }
      if (awaySel.options.length > 1) awaySel.selectedIndex = 1;
    };
    modelSel.addEventListener("change", fill);
    fill();
  });

  startBtn.addEventListener("click", () => {
    const hv = Number(homeVal.value);
    const av = Number(awayVal.value);
    if (!(hv > 0) || !(av > 0)) {
      setupErr.textContent = "lineup values are required and must be positive";
      return;
    }
    void controller.createSession({
      model_id: modelSel.value,
      home_team: homeSel.value,
      away_team: awaySel.value,
      home_value: hv,
      away_value: av,
    });
  });

  eventRow.addEventListener("click", (ev) => {
    const target = ev.target as HTMLElement;
    const kind = target.getAttribute("data-event") as EventKind | null;
    if (kind) void controller.postEvent(kind, readTime(root));
  });
  (root.querySelector("#btn-clock") as HTMLButtonElement).addEventListener("click", () =>
    void controller.postClock(readTime(root)),
  );
  (root.querySelector("#btn-stoppage") as HTMLButtonElement).addEventListener("click", () => {
    const half = Number((root.querySelector("#stoppage-half") as HTMLSelectElement).value) as 1 | 2;
    const minutes = Number((root.querySelector("#stoppage-minutes") as HTMLInputElement).value);
    void controller.postStoppage(half, minutes);
  });
  (root.querySelector("#btn-undo") as HTMLButtonElement).addEventListener("click", () =>
    void controller.undo(),
  );
  (root.querySelector("#btn-wi-preview") as HTMLButtonElement).addEventListener("click", () => {
    const kind = wiKind.value as EventKind;
    const half = Number((root.querySelector("#wi-half") as HTMLSelectElement).value) as 1 | 2;
    const minute = Number((root.querySelector("#wi-minute") as HTMLInputElement).value);
    const offset = Number((root.querySelector("#wi-offset") as HTMLInputElement).value || "0");
    void controller.stageWhatIf(kind, { half, minute, stoppage_offset: offset });
  });
  (root.querySelector("#btn-wi-commit") as HTMLButtonElement).addEventListener("click", () =>
    void controller.commitWhatIf(),
  );
  (root.querySelector("#btn-wi-discard") as HTMLButtonElement).addEventListener("click", () =>
    controller.discardWhatIf(),
  );

  controller.onChange((snap) => render(root, snap));
}

function resultBlock(f: ForecastDoc, title: string): HTMLElement {
  const block = el("div", { class: "forecast-block" }, [
    el("h4", {}, [title]),
    el("p", {}, [
      `Home ${percent1(f.result_probs.home_win)} | ` +
        `Draw ${percent1(f.result_probs.draw)} | ` +
        `Away ${percent1(f.result_probs.away_win)}`,
    ]),
  ]);
  return block;
}

export function render(root: HTMLElement, snap: Snapshot): void {
  const setup = root.querySelector("#setup-view") as HTMLElement;
  const live = root.querySelector("#live-view") as HTMLElement;
  const probs = root.querySelector("#probability-panel") as HTMLElement;
  const whatIf = root.querySelector("#what-if-panel") as HTMLElement;
  const hasSession = snap.sessionId !== null;
  setup.hidden = hasSession;
  live.hidden = !hasSession;
  probs.hidden = !hasSession;
  whatIf.hidden = !hasSession;

  (root.querySelector("#live-error") as HTMLElement).textContent = snap.lastError
    ? `${snap.lastError.code}: ${snap.lastError.message}`
    : "";

  if (snap.state && snap.history) {
    const s = snap.state;
    (root.querySelector("#scoreboard") as HTMLElement).textContent =
      `${snap.history.home_team} ${s.home_goals} - ${s.away_goals} ${snap.history.away_team}` +
      ` | reds ${s.home_reds}-${s.away_reds}` +
      ` | ${scoreboardLabel(s.clock, s.stoppage1)}` +
      ` | stoppage ${s.stoppage1 ?? "?"}/${s.stoppage2 ?? "?"}`;
  }

  if (snap.forecast) {
    const f = snap.forecast;
    (root.querySelector("#result-probs") as HTMLElement).textContent =
      `Home ${percent1(f.result_probs.home_win)} | Draw ${percent1(f.result_probs.draw)} | ` +
      `Away ${percent1(f.result_probs.away_win)}`;
    (root.querySelector("#expected-goals") as HTMLElement).textContent =
      `Expected goals ${f.expected_goals.home.toFixed(2)} - ${f.expected_goals.away.toFixed(2)}`;
    const list = root.querySelector("#top-scores") as HTMLElement;
    list.innerHTML = "";
    for (const item of orderedTopScores(f.top_scores)) {
      list.append(el("li", {}, [`${item.score.replace("-", " - ")}  ${percent1(item.prob)}`]));
    }
    (root.querySelector("#forecast-meta") as HTMLElement).textContent = describeForecast(f);
  }

  if (snap.history) {
    const points = buildTrajectory(snap.history);
    const markers: ChartMarker[] = snap.history.events
      .filter((e) => e.kind === "event")
      .map((e) => {
        const kind = String(e.type);
        return {
          minute: eventScoreboardMinute({
            half: Number(e.half),
            minute: Number(e.minute),
            stoppage_offset: Number(e.stoppage_offset ?? 0),
          }),
          kind: kind.endsWith("goal") ? "goal" : "red",
          side: kind.startsWith("home") ? "home" : "away",
        } as ChartMarker;
      });
    (root.querySelector("#chart") as HTMLElement).innerHTML = renderChart(
      points,
      [
        { label: "Home win", color: "#1f77b4", value: (p) => p.home },
        { label: "Draw", color: "#7f7f7f", value: (p) => p.draw },
        { label: "Away win", color: "#d62728", value: (p) => p.away },
      ],
      markers,
    );
  }

  const compare = root.querySelector("#wi-compare") as HTMLElement;
  const commitBtn = root.querySelector("#btn-wi-commit") as HTMLButtonElement;
  const discardBtn = root.querySelector("#btn-wi-discard") as HTMLButtonElement;
  compare.innerHTML = "";
  if (snap.preview && snap.forecast) {
    compare.append(resultBlock(snap.forecast, "Current"), resultBlock(snap.preview, "Hypothetical"));
    commitBtn.disabled = false;
    discardBtn.disabled = false;
  } else {
    commitBtn.disabled = true;
    discardBtn.disabled = true;
  }
}
