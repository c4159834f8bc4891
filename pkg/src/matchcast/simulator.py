"""Exact Monte Carlo simulation of full matches from a fitted model.

Scenario generation follows the competition scheme: draw candidate next
times for every modelled process from the current state, commit the
earliest, update the state and redraw.  Constant-intensity processes use
exponential gaps; the power-law red-card intensity exp(c) * t^a is
sampled by exact inversion of its integrated intensity.  At each
regular-45 boundary the half's stoppage length is sampled from the
stoppage model (or honoured when already announced), and simulation
continues through the stoppage.

Determinism contract: scenario i consumes random numbers only from a
stream derived from (seed, i), so results for a fixed seed are
bit-identical regardless of how scenarios are partitioned over workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .core import EventType, MatchState
from .regressors import ModelSpec, ParameterVector

SCORE_CAP = 10  # exact-score tables aggregate anything beyond into overflow
OVERFLOW = "overflow"

_CHUNK = 4096  # scenarios per deterministic sub-stream block
_BLOCK = 128  # uniforms pre-drawn per scenario
_MAX_EVENTS = 2000  # runaway-intensity guard per scenario

Seed = Union[int, tuple]


class SimulationError(ValueError):
    pass


def _seed_tuple(seed: Seed) -> tuple:
    return seed if isinstance(seed, tuple) else (int(seed),)


# --------------------------------------------------------------------------
# Elementary samplers (also used directly by tests)


def sample_stoppage(coeffs: np.ndarray, phi: np.ndarray, rng: np.random.Generator) -> int:
    """One Poisson draw of a stoppage length, mean exp(coeffs . phi)."""
    return int(rng.poisson(stoppage_mean(coeffs, phi)))


def stoppage_mean(coeffs: np.ndarray, phi: np.ndarray) -> float:
    theta = float(np.dot(np.asarray(coeffs, float), np.asarray(phi, float)))
    return math.exp(theta)


def next_event_time(
    kind: str,
    params,
    start: float,
    until: float,
    rng: np.random.Generator,
) -> Optional[float]:
    """First event time after ``start`` on (start, until], or None.

    ``kind`` "constant" takes the rate; "power_law" takes (c, a) with
    intensity exp(c) * t^a, sampled by inverting Lambda(start, t) = E
    with E standard exponential.
    """
    if until <= start:
        raise SimulationError("empty sampling interval")
    e = rng.exponential()
    if kind == "constant":
        rate = float(params)
        if rate < 0:
            raise SimulationError("negative rate")
        if rate == 0.0:
            return None
        t = start + e / rate
    elif kind == "power_law":
        c, a = params
        t = _invert_powerlaw(e, c, a, start)
    else:
        raise SimulationError(f"unknown process kind {kind!r}")
    return t if t <= until else None


def _invert_powerlaw(e: float, c: float, a: float, start: float) -> float:
    if a <= -1.0:
        raise SimulationError("power-law exponent must be > -1 for inversion from 0")
    ap1 = a + 1.0
    return (ap1 * e * math.exp(-c) + start**ap1) ** (1.0 / ap1)


# --------------------------------------------------------------------------
# Compiled model


@dataclass
class _GoalProcess:
    base: float  # static log-rate: attack + defence + home advantage + value
    xi_half: float
    xi_goal_diff: float
    xi_red_diff: float


@dataclass
class _StoppagePart:
    const: float
    goals: float
    reds: float
    close: float


@dataclass
class SimulationModel:
    """A model spec and parameter vector bound to one fixture."""

    spec: ModelSpec
    params: ParameterVector
    home_team: str
    away_team: str
    home_value: float
    away_value: float
    goal: dict = field(init=False)
    red: dict = field(init=False)
    stoppage: dict = field(init=False)

    def __post_init__(self) -> None:
        spec, params = self.spec, self.params
        if spec.uses_teams:
            missing = {self.home_team, self.away_team} - set(spec.teams)
            if missing:
                raise SimulationError(f"teams {sorted(missing)} unknown to model {spec.name!r}")
        procs = spec.event_processes
        if EventType.HOME_GOAL not in procs or EventType.AWAY_GOAL not in procs:
            raise SimulationError("simulation needs both goal processes in the model")
        log_ratio = math.log(self.home_value) - math.log(self.away_value)
        self.goal = {}
        for et in (EventType.HOME_GOAL, EventType.AWAY_GOAL):
            is_home = et is EventType.HOME_GOAL
            attacker = self.home_team if is_home else self.away_team
            defender = self.away_team if is_home else self.home_team
            base = 0.0
            xi_half = xi_gd = xi_rd = 0.0
            for s in spec.goal_regressors[et]:
                v = params[s.parameter_id]
                if s.kind == "attack":
                    base += v if s.team == attacker else 0.0
                elif s.kind == "defence":
                    base += v if s.team == defender else 0.0
                elif s.kind in ("home_advantage", "constant"):
                    base += v
                elif s.kind == "log_value_ratio":
                    base += v * (log_ratio if is_home else -log_ratio)
                elif s.kind == "half_indicator":
                    xi_half += v
                elif s.kind == "goal_difference":
                    xi_gd += v
                elif s.kind == "red_card_difference":
                    xi_rd += v
                else:
                    raise SimulationError(f"goal regressor {s.kind!r} not simulatable")
            self.goal[et] = _GoalProcess(base, xi_half, xi_gd, xi_rd)
        self.red = {}
        for et in (EventType.HOME_RED, EventType.AWAY_RED):
            specs = spec.red_card_regressors.get(et)
            if not specs:
                continue
            c = 0.0
            a = 0.0
            for s in specs:
                v = params[s.parameter_id]
                if s.kind == "constant":
                    c += v
                elif s.kind == "log_time":
                    a += v
                else:
                    raise SimulationError(f"red-card regressor {s.kind!r} not simulatable")
            if a <= -1.0:
                raise SimulationError("fitted red-card exponent <= -1 cannot be simulated")
            self.red[et] = (c, a)
        self.stoppage = {}
        for half in spec.stoppage_halves:
            part = _StoppagePart(0.0, 0.0, 0.0, 0.0)
            for s in spec.stoppage_regressors[half]:
                v = params[s.parameter_id]
                if s.kind == "constant":
                    part.const += v
                elif s.kind == "half_goal_count":
                    part.goals += v
                elif s.kind == "half_red_count":
                    part.reds += v
                elif s.kind == "close_score_indicator":
                    part.close += v
                else:
                    raise SimulationError(f"stoppage regressor {s.kind!r} not simulatable")
            self.stoppage[half] = part


# --------------------------------------------------------------------------
# Results


@dataclass
class ScenarioResult:
    home_goals: int
    away_goals: int
    home_reds: int
    away_reds: int
    u1: int
    u2: int
    events: list  # (clock_time, EventType) for events simulated after the initial state


@dataclass
class OutcomeDistribution:
    """Monte Carlo estimate of the match outcome distribution."""

    n_scenarios: int
    seed: Seed
    result_probs: dict
    exact_score_probs: dict  # (h, a) -> prob for h, a <= SCORE_CAP, plus "overflow"
    expected_goals: tuple[float, float]
    score_counts: dict = field(repr=False, default_factory=dict)  # raw (h, a) tallies

    def top_scores(self, k: int = 5) -> list[tuple[tuple[int, int], float]]:
        cells = [(s, p) for s, p in self.exact_score_probs.items() if s != OVERFLOW]
        cells.sort(key=lambda item: (-item[1], item[0]))
        return cells[:k]

    def to_jsonable(self, top_k: int = 5) -> dict:
        """Plain-JSON view; exact scores keyed "h-a", overflow kept."""
        scores = {
            (f"{s[0]}-{s[1]}" if s != OVERFLOW else OVERFLOW): p
            for s, p in self.exact_score_probs.items()
        }
        return {
            "n_scenarios": self.n_scenarios,
            "seed": list(self.seed) if isinstance(self.seed, tuple) else self.seed,
            "result_probs": dict(self.result_probs),
            "expected_goals": {"home": self.expected_goals[0], "away": self.expected_goals[1]},
            "top_scores": [
                {"score": f"{s[0]}-{s[1]}", "prob": p} for s, p in self.top_scores(top_k)
            ],
            "exact_score_probs": scores,
        }

    def prob_score(self, predicate) -> float:
        """Probability of a final-score predicate (h, a) -> bool."""
        n = self.n_scenarios
        return sum(c for (h, a), c in self.score_counts.items() if predicate(h, a)) / n

    def prob_result(self, result: str) -> float:
        return self.result_probs[result]


def result_of(home_goals: int, away_goals: int) -> str:
    if home_goals > away_goals:
        return "home_win"
    if home_goals < away_goals:
        return "away_win"
    return "draw"


# --------------------------------------------------------------------------
# Vectorized engine

_PROC_ORDER = (EventType.HOME_GOAL, EventType.AWAY_GOAL, EventType.HOME_RED, EventType.AWAY_RED)


class _ChunkRng:
    """Per-scenario uniforms: a pre-drawn block plus a keyed spill-over."""

    def __init__(self, base_entropy: tuple, chunk_index: int, lo: int, rows: int):
        self._block = np.random.default_rng(
            np.random.SeedSequence((*base_entropy, 0, chunk_index))
        ).random((rows, _BLOCK))
        self._cursor = np.zeros(rows, dtype=np.intp)
        self._base = base_entropy
        self._lo = lo
        self._ext: dict = {}

    def draw(self, idx: np.ndarray) -> np.ndarray:
        c = self._cursor[idx]
        out = np.empty(len(idx))
        main = c < _BLOCK
        out[main] = self._block[idx[main], c[main]]
        for j in np.where(~main)[0]:
            out[j] = self._ext_draw(int(idx[j]))
        self._cursor[idx] = c + 1
        return out

    def _ext_draw(self, row: int) -> float:
        gen = self._ext.get(row)
        if gen is None:
            gen = np.random.default_rng(np.random.SeedSequence((*self._base, 1, self._lo + row)))
            self._ext[row] = gen
        return float(gen.random())


def _poisson_from_uniform(u: np.ndarray, mean: np.ndarray) -> np.ndarray:
    """Poisson inversion from one uniform per row (deterministic)."""
    if np.any(mean > 1e3):
        raise SimulationError("stoppage mean exploded; refusing to simulate")
    k = np.zeros(mean.shape, dtype=np.int64)
    p = np.exp(-mean)
    cum = p.copy()
    cap = mean + 40.0 * np.sqrt(mean) + 20.0
    todo = u > cum
    while np.any(todo):
        k[todo] += 1
        p[todo] *= mean[todo] / k[todo]
        cum[todo] += p[todo]
        todo = (u > cum) & (k < cap)
    return k


@dataclass
class _ChunkOutcome:
    nh: np.ndarray
    na: np.ndarray
    nhr: np.ndarray
    nar: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    events: Optional[list]  # (row, time, proc_index) tuples when recording


def _simulate_chunk(
    model: SimulationModel,
    init: MatchState,
    rows: int,
    base_entropy: tuple,
    chunk_index: int,
    lo: int,
    record: bool,
) -> _ChunkOutcome:
    rng = _ChunkRng(base_entropy, chunk_index, lo, rows)
    t = np.full(rows, float(init.clock))
    nh = np.full(rows, init.home_goals, dtype=np.int64)
    na = np.full(rows, init.away_goals, dtype=np.int64)
    nhr = np.full(rows, init.home_reds, dtype=np.int64)
    nar = np.full(rows, init.away_reds, dtype=np.int64)
    u1 = np.full(rows, -1 if init.u1 is None else int(init.u1), dtype=np.int64)
    u2 = np.full(rows, -1 if init.u2 is None else int(init.u2), dtype=np.int64)

    if init.u1 is None and 1 not in model.stoppage and init.clock <= 45.0:
        raise SimulationError("model has no first-half stoppage part and u1 is unannounced")
    if init.u2 is None and 2 not in model.stoppage:
        raise SimulationError("model has no second-half stoppage part and u2 is unannounced")
    if init.clock > 45.0 and init.u1 is None:
        raise SimulationError("state beyond minute 45 requires a resolved u1")

    # phase: 0 regular H1, 1 stoppage H1, 2 regular H2, 3 stoppage H2, 4 done
    t0 = float(init.clock)
    if init.u1 is None or t0 < 45.0:
        phase0 = 0  # the 45' boundary samples u1 when still pending
    elif t0 < 45.0 + init.u1:
        phase0 = 1
    elif t0 < 90.0 + init.u1 or init.u2 is None:
        phase0 = 2  # the 90+u1 boundary samples u2 when still pending
    else:
        phase0 = 3
    phase = np.full(rows, phase0, dtype=np.int8)

    h2g = np.zeros(rows, dtype=np.int64)
    h2r = np.zeros(rows, dtype=np.int64)
    if phase0 >= 2:
        if init.h2_start_goals is not None:
            h2g[:] = init.h2_start_goals
            h2r[:] = init.h2_start_reds
        elif t0 <= 45.0 + init.u1:
            h2g[:] = init.home_goals + init.away_goals
            h2r[:] = init.home_reds + init.away_reds
        else:
            raise SimulationError("mid-second-half state needs the half-time count snapshot")

    hg = model.goal[EventType.HOME_GOAL]
    ag = model.goal[EventType.AWAY_GOAL]
    red_h = model.red.get(EventType.HOME_RED)
    red_a = model.red.get(EventType.AWAY_RED)
    events: Optional[list] = [] if record else None
    n_committed = np.zeros(rows, dtype=np.int64)

    def phase_end(ph, u1v, u2v):
        ends = np.empty(len(ph))
        ends[ph == 0] = 45.0
        ends[ph == 1] = 45.0 + u1v[ph == 1]
        ends[ph == 2] = 90.0 + u1v[ph == 2]
        ends[ph == 3] = 90.0 + u1v[ph == 3] + u2v[ph == 3]
        ends[ph == 4] = np.inf
        return ends

    while True:
        active = phase < 4
        if not np.any(active):
            break
        aidx = np.where(active)[0]
        pe = phase_end(phase[aidx], u1[aidx], u2[aidx])
        at_end = t[aidx] >= pe - 1e-12

        # --- boundary transitions
        bidx = aidx[at_end]
        if len(bidx):
            ph = phase[bidx]
            # end of regular first half: sample/settle u1
            m = ph == 0
            if np.any(m):
                ridx = bidx[m]
                pending = u1[ridx] < 0
                if np.any(pending):
                    part = model.stoppage[1]
                    pidx = ridx[pending]
                    theta = (
                        part.const
                        + part.goals * (nh[pidx] + na[pidx])
                        + part.reds * (nhr[pidx] + nar[pidx])
                    )
                    u1[pidx] = _poisson_from_uniform(rng.draw(pidx), np.exp(theta))
                zero = u1[ridx] == 0
                # U1 == 0: second half starts right away; snapshot counts
                z = ridx[zero]
                h2g[z] = nh[z] + na[z]
                h2r[z] = nhr[z] + nar[z]
                phase[z] = 2
                phase[ridx[~zero]] = 1
                t[ridx] = 45.0
            # end of first-half stoppage: snapshot and start second half
            m = ph == 1
            if np.any(m):
                ridx = bidx[m]
                h2g[ridx] = nh[ridx] + na[ridx]
                h2r[ridx] = nhr[ridx] + nar[ridx]
                phase[ridx] = 2
                t[ridx] = 45.0 + u1[ridx]
            # end of regular second half: sample/settle u2
            m = ph == 2
            if np.any(m):
                ridx = bidx[m]
                pending = u2[ridx] < 0
                if np.any(pending):
                    part = model.stoppage[2]
                    pidx = ridx[pending]
                    close = (np.abs(nh[pidx] - na[pidx]) <= 1).astype(float)
                    theta = (
                        part.const
                        + part.goals * (nh[pidx] + na[pidx] - h2g[pidx])
                        + part.reds * (nhr[pidx] + nar[pidx] - h2r[pidx])
                        + part.close * close
                    )
                    u2[pidx] = _poisson_from_uniform(rng.draw(pidx), np.exp(theta))
                zero = u2[ridx] == 0
                phase[ridx[zero]] = 4
                phase[ridx[~zero]] = 3
                t[ridx] = 90.0 + u1[ridx]
            # end of match
            m = ph == 3
            if np.any(m):
                phase[bidx[m]] = 4
            continue

        # --- interior rows: draw candidates for all processes
        ridx = aidx[~at_end]
        pe_in = pe[~at_end]
        second = (phase[ridx] >= 2).astype(float)
        gd = (nh[ridx] - na[ridx]).astype(float)
        rd = (nar[ridx] - nhr[ridx]).astype(float)  # own-perspective for home
        lam_h = np.exp(hg.base + hg.xi_half * second + hg.xi_goal_diff * gd + hg.xi_red_diff * rd)
        lam_a = np.exp(ag.base + ag.xi_half * second - ag.xi_goal_diff * gd - ag.xi_red_diff * rd)

        cands = np.full((4, len(ridx)), np.inf)
        for p_i, et in enumerate(_PROC_ORDER):
            if et is EventType.HOME_GOAL:
                rate = lam_h
            elif et is EventType.AWAY_GOAL:
                rate = lam_a
            else:
                rate = None
                pl = red_h if et is EventType.HOME_RED else red_a
                if pl is None:
                    continue
            e = -np.log1p(-rng.draw(ridx))
            if rate is not None:
                with np.errstate(divide="ignore"):
                    cands[p_i] = t[ridx] + e / rate
            else:
                c, a = pl
                ap1 = a + 1.0
                cands[p_i] = (ap1 * e * math.exp(-c) + t[ridx] ** ap1) ** (1.0 / ap1)

        winner = np.argmin(cands, axis=0)
        tmin = cands[winner, np.arange(len(ridx))]
        commit = tmin <= pe_in
        cidx = ridx[commit]
        if len(cidx):
            w = winner[commit]
            tc = tmin[commit]
            t[cidx] = tc
            nh[cidx] += w == 0
            na[cidx] += w == 1
            nhr[cidx] += w == 2
            nar[cidx] += w == 3
            n_committed[cidx] += 1
            if np.any(n_committed[cidx] > _MAX_EVENTS):
                raise SimulationError("runaway intensity: scenario exceeded event cap")
            if record:
                events.extend(zip(cidx.tolist(), tc.tolist(), w.tolist()))
        stall = ridx[~commit]
        t[stall] = pe_in[~commit]

    return _ChunkOutcome(nh=nh, na=na, nhr=nhr, nar=nar, u1=u1, u2=u2, events=events)


def _chunks(n: int) -> list[tuple[int, int, int]]:
    return [(ci, lo, min(lo + _CHUNK, n)) for ci, lo in enumerate(range(0, n, _CHUNK))]


def simulate_match(model: SimulationModel, initial: MatchState, seed: Seed) -> ScenarioResult:
    """One full scenario with its simulated event list."""
    out = _simulate_chunk(model, initial, 1, _seed_tuple(seed), 0, 0, record=True)
    events = [(tm, _PROC_ORDER[p]) for _, tm, p in sorted(out.events, key=lambda e: e[1])]
    return ScenarioResult(
        home_goals=int(out.nh[0]),
        away_goals=int(out.na[0]),
        home_reds=int(out.nhr[0]),
        away_reds=int(out.nar[0]),
        u1=int(out.u1[0]),
        u2=int(out.u2[0]),
        events=events,
    )


def simulate_many(
    model: SimulationModel,
    initial: MatchState,
    n: int,
    seed: Seed,
    workers: int = 1,
) -> OutcomeDistribution:
    """n independent scenarios; bit-identical for a seed at any worker count."""
    if n < 1:
        raise SimulationError("need at least one scenario")
    base = _seed_tuple(seed)
    plan = _chunks(n)

    def run(args):
        ci, lo, hi = args
        return _simulate_chunk(model, initial, hi - lo, base, ci, lo, record=False)

    if workers > 1 and len(plan) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outs = list(pool.map(run, plan))
    else:
        outs = [run(p) for p in plan]

    nh = np.concatenate([o.nh for o in outs])
    na = np.concatenate([o.na for o in outs])

    score_counts: dict = {}
    enc = nh * 100000 + na
    vals, counts = np.unique(enc, return_counts=True)
    for v, c in zip(vals.tolist(), counts.tolist()):
        score_counts[(v // 100000, v % 100000)] = c

    res_counts = {"home_win": 0, "draw": 0, "away_win": 0}
    for (h, a), c in score_counts.items():
        res_counts[result_of(h, a)] += c

    exact: dict = {}
    overflow = 0
    for (h, a), c in sorted(score_counts.items()):
        if h <= SCORE_CAP and a <= SCORE_CAP:
            exact[(h, a)] = c / n
        else:
            overflow += c
    exact[OVERFLOW] = overflow / n

    return OutcomeDistribution(
        n_scenarios=n,
        seed=seed,
        result_probs={k: v / n for k, v in res_counts.items()},
        exact_score_probs=exact,
        expected_goals=(float(np.sum(nh)) / n, float(np.sum(na)) / n),
        score_counts=score_counts,
    )
