/** Session controller: the logic layer behind the console views.
 *
 * Holds nothing but the session id plus caches of the latest service
 * responses, so a page reload followed by refresh() reproduces the
 * exact display.  Every committed operator action triggers a forecast
 * refresh; what-if previews never touch the session log.
 */

import {
  ApiError,
  EventKind,
  EventTime,
  ForecastDoc,
  HistoryDoc,
  ServiceClient,
  StateDoc,
} from "./api.js";

export interface ControllerConfig {
  pollMs: number;
  forecastN?: number;
  /** Pin forecast seeds (per refresh index) for reproducible sessions. */
  seedFor?: (refreshIndex: number) => number;
}

export interface Snapshot {
  sessionId: string | null;
  state: StateDoc | null;
  forecast: ForecastDoc | null;
  preview: ForecastDoc | null; // active what-if, side by side with forecast
  history: HistoryDoc | null;
  lastError: { code: string; message: string } | null;
}

type Listener = (snap: Snapshot) => void;

export class SessionController {
  private sessionId: string | null = null;
  private state: StateDoc | null = null;
  private forecast: ForecastDoc | null = null;
  private preview: ForecastDoc | null = null;
  private stagedWhatIf: ({ kind: EventKind } & EventTime) | null = null;
  private history: HistoryDoc | null = null;
  private lastError: { code: string; message: string } | null = null;
  private listeners: Listener[] = [];
  private timer: ReturnType<typeof setInterval> | null = null;
  private refreshIndex = 0;

  constructor(
    private client: ServiceClient,
    private config: ControllerConfig = { pollMs: 5000 },
  ) {}

  snapshot(): Snapshot {
    return {
      sessionId: this.sessionId,
      state: this.state,
      forecast: this.forecast,
      preview: this.preview,
      history: this.history,
      lastError: this.lastError,
    };
  }

  onChange(fn: Listener): void {
    this.listeners.push(fn);
  }

  private emit(): void {
    const snap = this.snapshot();
    for (const fn of this.listeners) fn(snap);
  }

  private async guard<T>(op: () => Promise<T>): Promise<T | null> {
    try {
      const out = await op();
      this.lastError = null;
      return out;
    } catch (err) {
      if (err instanceof ApiError) {
        this.lastError = { code: err.code, message: err.message };
        this.emit();
        return null;
      }
      throw err;
    }
  }

  models() {
    return this.client.models();
  }

  async createSession(req: {
    model_id: string;
    home_team: string;
    away_team: string;
    home_value: number;
    away_value: number;
  }): Promise<boolean> {
    const out = await this.guard(() => this.client.createSession(req));
    if (!out) return false;
    this.sessionId = out.session_id;
    this.state = out.state;
    await this.refresh();
    this.startPolling();
    return true;
  }

  /** Attach to an existing session (e.g. after a page reload). */
  async attach(sessionId: string): Promise<boolean> {
    this.sessionId = sessionId;
    const ok = await this.refresh();
    if (ok) this.startPolling();
    return ok;
  }

  private require(): string {
    if (!this.sessionId) throw new Error("no active session");
    return this.sessionId;
  }

  async postEvent(kind: EventKind, time: EventTime): Promise<boolean> {
    const sid = this.require();
    const out = await this.guard(() => this.client.postEvent(sid, kind, time));
    if (!out) return false;
    this.state = out.state;
    await this.refresh();
    return true;
  }

  async postClock(time: EventTime): Promise<boolean> {
    const sid = this.require();
    const out = await this.guard(() => this.client.postClock(sid, time));
    if (!out) return false;
    this.state = out.state;
    await this.refresh();
    return true;
  }

  async postStoppage(half: 1 | 2, minutes: number): Promise<boolean> {
    const sid = this.require();
    const out = await this.guard(() => this.client.postStoppage(sid, half, minutes));
    if (!out) return false;
    this.state = out.state;
    await this.refresh();
    return true;
  }

  async undo(): Promise<boolean> {
    const sid = this.require();
    const out = await this.guard(() => this.client.undo(sid));
    if (!out) return false;
    this.state = out.state;
    await this.refresh();
    return true;
  }

  /** Refresh the committed-state forecast and the history trajectory. */
  async refresh(): Promise<boolean> {
    const sid = this.require();
    const seed = this.config.seedFor?.(this.refreshIndex);
    this.refreshIndex += 1;
    const out = await this.guard(async () => {
      const forecast = await this.client.forecast(sid, { n: this.config.forecastN, seed });
      const history = await this.client.history(sid);
      return { forecast, history };
    });
    if (!out) return false;
    this.forecast = out.forecast;
    this.history = out.history;
    this.state = out.history.state;
    this.emit();
    return true;
  }

  /** Stage a hypothetical event and fetch its side-by-side preview. */
  async stageWhatIf(kind: EventKind, time: EventTime): Promise<boolean> {
    const sid = this.require();
    const seed = this.config.seedFor?.(this.refreshIndex);
    const out = await this.guard(() =>
      this.client.forecast(sid, {
        n: this.config.forecastN,
        seed,
        whatIf: { kind, ...time },
      }),
    );
    if (!out) return false;
    this.stagedWhatIf = { kind, ...time };
    this.preview = out;
    this.emit();
    return true;
  }

  discardWhatIf(): void {
    this.preview = null;
    this.stagedWhatIf = null;
    this.emit();
  }

  /** Committing the staged event equals posting it directly. */
  async commitWhatIf(): Promise<boolean> {
    if (!this.stagedWhatIf) return false;
    const { kind, ...time } = this.stagedWhatIf;
    this.discardWhatIf();
    return this.postEvent(kind, time as EventTime);
  }

  startPolling(): void {
    this.stopPolling();
    if (this.config.pollMs > 0) {
      this.timer = setInterval(() => void this.refresh(), this.config.pollMs);
    }
  }

  stopPolling(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}
