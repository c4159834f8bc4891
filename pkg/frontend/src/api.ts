/** Typed client for the live-session HTTP service.
 *
 * Times in every request use (half, minute, stoppage_offset); the
 * service owns all clock arithmetic and probability maths.
 */

export type EventKind = "home_goal" | "away_goal" | "home_red" | "away_red";

export interface EventTime {
  half: 1 | 2;
  minute: number;
  stoppage_offset?: number;
}

export interface StateDoc {
  clock: number;
  half: number;
  home_goals: number;
  away_goals: number;
  home_reds: number;
  away_reds: number;
  stoppage1: number | null;
  stoppage2: number | null;
}

export interface ResultProbs {
  home_win: number;
  draw: number;
  away_win: number;
}

export interface TopScore {
  score: string; // "h-a"
  prob: number;
}

export interface ForecastDoc {
  n_scenarios: number;
  seed: number;
  result_probs: ResultProbs;
  expected_goals: { home: number; away: number };
  top_scores: TopScore[];
  exact_score_probs: Record<string, number>;
  clock: number;
  what_if: unknown | null;
  cutoff: StateDoc;
}

export interface HistoryDoc {
  session_id: string;
  model_id: string;
  home_team: string;
  away_team: string;
  state: StateDoc;
  events: Array<Record<string, unknown>>;
  forecasts: Array<{ clock: number; forecast: ForecastDoc }>;
}

export interface ModelInfo {
  teams: string[];
  n_params: number;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

async function parseError(resp: Response): Promise<never> {
  let code = "unknown";
  let message = `HTTP ${resp.status}`;
  try {
    const body = (await resp.json()) as { code?: string; message?: string; detail?: unknown };
    if (body.code) code = body.code;
    if (body.message) message = body.message;
    else if (body.detail) message = JSON.stringify(body.detail);
  } catch {
    /* non-JSON error body */
  }
  throw new ApiError(resp.status, code, message);
}

export class ServiceClient {
  constructor(
    public baseUrl: string,
    private fetchFn: typeof fetch = fetch,
  ) {}

  private async get<T>(path: string): Promise<T> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`);
    if (!resp.ok) await parseError(resp);
    return (await resp.json()) as T;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!resp.ok) await parseError(resp);
    return (await resp.json()) as T;
  }

  models(): Promise<Record<string, ModelInfo>> {
    return this.get("/models");
  }

  createSession(req: {
    model_id: string;
    home_team: string;
    away_team: string;
    home_value: number;
    away_value: number;
  }): Promise<{ session_id: string; state: StateDoc }> {
    return this.post("/sessions", req);
  }

  postEvent(sessionId: string, kind: EventKind, time: EventTime): Promise<{ state: StateDoc }> {
    return this.post(`/sessions/${sessionId}/events`, {
      type: kind,
      half: time.half,
      minute: time.minute,
      stoppage_offset: time.stoppage_offset ?? 0,
    });
  }

  postClock(sessionId: string, time: EventTime): Promise<{ state: StateDoc }> {
    return this.post(`/sessions/${sessionId}/clock`, {
      half: time.half,
      minute: time.minute,
      stoppage_offset: time.stoppage_offset ?? 0,
    });
  }

  postStoppage(sessionId: string, half: 1 | 2, minutes: number): Promise<{ state: StateDoc }> {
    return this.post(`/sessions/${sessionId}/stoppage`, { half, minutes });
  }

  undo(sessionId: string): Promise<{ undone: unknown; state: StateDoc }> {
    return this.post(`/sessions/${sessionId}/undo`, {});
  }

  forecast(
    sessionId: string,
    opts: { n?: number; seed?: number; whatIf?: { kind: EventKind } & EventTime } = {},
  ): Promise<ForecastDoc> {
    const params = new URLSearchParams();
    if (opts.n !== undefined) params.set("n", String(opts.n));
    if (opts.seed !== undefined) params.set("seed", String(opts.seed));
    if (opts.whatIf) {
      params.set("what_if_type", opts.whatIf.kind);
      params.set("what_if_half", String(opts.whatIf.half));
      params.set("what_if_minute", String(opts.whatIf.minute));
      params.set("what_if_offset", String(opts.whatIf.stoppage_offset ?? 0));
    }
    const qs = params.toString();
    return this.get(`/sessions/${sessionId}/forecast${qs ? `?${qs}` : ""}`);
  }

  history(sessionId: string): Promise<HistoryDoc> {
    return this.get(`/sessions/${sessionId}/history`);
  }

  /** Raw history body, for byte-level comparisons. */
  async historyText(sessionId: string): Promise<string> {
    const resp = await this.fetchFn(`${this.baseUrl}/sessions/${sessionId}/history`);
    if (!resp.ok) await parseError(resp);
    return resp.text();
  }
}
