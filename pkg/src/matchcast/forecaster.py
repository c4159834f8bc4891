"""In-game forecasts and out-of-sample forecast evaluation.

Forecasts are Monte Carlo distributions of the final outcome conditional
on the match state at a cutoff minute; evaluation aggregates, over a set
of matches, the log-likelihood assigned to the realized results and
exact scores, plus calibration tables of observed vs expected outcome
proportions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .core import MatchRecord, MatchState, state_at_minute
from .simulator import (
    OutcomeDistribution,
    Seed,
    SimulationModel,
    simulate_many,
    result_of,
    SCORE_CAP,
)

DEFAULT_MINUTES = (0, 15, 30, 45, 60, 75)
DEFAULT_SCENARIOS = 100_000
GOAL_BINS = 6  # calibration columns 0..4 and "5+"


@dataclass
class ForecastPoint:
    match_id: str
    minute: float
    model_name: str
    distribution: OutcomeDistribution
    cutoff: str  # human-readable description of the information used

    @property
    def result_probs(self) -> dict:
        return self.distribution.result_probs


def forecast(
    model: SimulationModel,
    state: MatchState,
    n: int,
    seed: Seed,
    match_id: str = "",
    minute: Optional[float] = None,
    workers: int = 1,
) -> ForecastPoint:
    """Outcome distribution conditional on a match state."""
    dist = simulate_many(model, state, n=n, seed=seed, workers=workers)
    cutoff = (
        f"clock {state.clock:g}: score {state.home_goals}-{state.away_goals}, "
        f"reds {state.home_reds}-{state.away_reds}, "
        f"u1 {'?' if state.u1 is None else state.u1}, "
        f"u2 {'?' if state.u2 is None else state.u2}"
    )
    return ForecastPoint(
        match_id=match_id,
        minute=state.clock if minute is None else minute,
        model_name=model.spec.name,
        distribution=dist,
        cutoff=cutoff,
    )


def forecast_match(
    model: SimulationModel,
    match: MatchRecord,
    minute: float,
    n: int,
    seed: Seed,
    workers: int = 1,
) -> ForecastPoint:
    """Forecast a recorded match using only information up to ``minute``."""
    state = state_at_minute(match, minute)
    return forecast(model, state, n, seed, match_id=match.match_id, minute=minute, workers=workers)


# --------------------------------------------------------------------------
# Outcome likelihood


@dataclass
class OutcomeLikelihood:
    total: float  # sum of ln p over matches
    mean: float  # total / K, the per-match normalization
    n_matches: int
    n_floored: int  # outcomes below the zero floor

    def __float__(self) -> float:
        return self.total


def outcome_likelihood(
    forecasts: Sequence[ForecastPoint],
    outcomes: dict,
    mode: str = "result",
) -> OutcomeLikelihood:
    """Log-likelihood of observed outcomes under the forecasts.

    ``outcomes`` maps match_id to the final (home, away) score.  Mode
    "result" scores the win/draw/win outcome, "exact_score" the full
    score.  Zero estimated probabilities are floored at 1/(10 n) so one
    unseen outcome cannot collapse an aggregate comparison; floored
    matches are counted in the report.
    """
    if mode not in ("result", "exact_score"):
        raise ValueError(f"unknown mode {mode!r}")
    total = 0.0
    floored = 0
    for fp in forecasts:
        if fp.match_id not in outcomes:
            raise KeyError(f"no observed outcome for match {fp.match_id!r}")
        h, a = outcomes[fp.match_id]
        if mode == "result":
            p = fp.distribution.result_probs[result_of(h, a)]
        else:
            p = fp.distribution.score_counts.get((h, a), 0) / fp.distribution.n_scenarios
        floor = 1.0 / (10.0 * fp.distribution.n_scenarios)
        if p < floor:
            p = floor
            floored += 1
        total += math.log(p)
    k = len(list(forecasts))
    return OutcomeLikelihood(total=total, mean=total / k if k else 0.0, n_matches=k, n_floored=floored)


def expected_event_count(forecasts: Sequence[ForecastPoint], predicate: Callable[[int, int], bool]) -> float:
    """Expected number of matches whose final score satisfies the predicate."""
    return float(sum(fp.distribution.prob_score(predicate) for fp in forecasts))


# --------------------------------------------------------------------------
# Rolling-window protocol


def rolling_window(dataset: Sequence[MatchRecord], match: MatchRecord) -> list[MatchRecord]:
    """Training set for one target match: everything strictly before its date.

    Same-day earlier matches are excluded (date granularity, matching the
    protocol of training on information available the day prior).
    """
    ordered = list(dataset)
    for earlier, later in zip(ordered, ordered[1:]):
        if later.date < earlier.date:
            raise ValueError("dataset must be date-ordered")
    return [m for m in ordered if m.date < match.date]


def evaluable_matches(dataset: Sequence[MatchRecord], min_prior: int = 4) -> list[MatchRecord]:
    """Matches eligible for forecast evaluation.

    A match is excluded when it belongs to the first season of the
    dataset or either team has fewer than ``min_prior`` prior matches.
    """
    ordered = sorted(dataset, key=lambda m: m.date)
    if not ordered:
        return []
    first_season = min(m.season for m in ordered)
    played: dict[str, int] = {}
    out = []
    for m in ordered:
        if (
            m.season != first_season
            and played.get(m.home_team, 0) >= min_prior
            and played.get(m.away_team, 0) >= min_prior
        ):
            out.append(m)
        played[m.home_team] = played.get(m.home_team, 0) + 1
        played[m.away_team] = played.get(m.away_team, 0) + 1
    return out


# --------------------------------------------------------------------------
# Calibration report (observed vs expected proportions)


@dataclass
class CalibrationTable:
    """One observed row plus signed model-minus-observed difference rows."""

    columns: tuple
    observed: np.ndarray
    differences: dict  # model name -> np.ndarray

    def expected(self, name: str) -> np.ndarray:
        return self.observed + self.differences[name]


@dataclass
class EvaluationReport:
    n_matches: int
    minutes: tuple
    models: tuple
    n_scenarios: int
    seed: Seed
    # per (model, minute): mean per-match log-likelihoods
    result_loglik: dict
    score_loglik: dict
    # per minute: tables in the results / home-goals / away-goals layout
    result_tables: dict
    home_goal_tables: dict
    away_goal_tables: dict
    floored: dict = field(default_factory=dict)


def _goal_bin(g: int) -> int:
    return min(g, GOAL_BINS - 1)


def calibration_report(
    models: dict[str, "object"],
    dataset: Sequence[MatchRecord],
    minutes: Sequence[float] = DEFAULT_MINUTES,
    n: int = DEFAULT_SCENARIOS,
    seed: Seed = 0,
    workers: int = 1,
    model_factory: Optional[Callable[[object, MatchRecord], SimulationModel]] = None,
) -> EvaluationReport:
    """Forecast every match at every minute under every model and compare.

    ``models`` maps a model name to an artifact understood by
    ``model_factory`` (by default a (spec, params) pair).  Forecast seeds
    are derived from (seed, model, minute, match) so reruns and
    partitioning cannot change any number.
    """
    matches = list(dataset)
    if not matches:
        raise ValueError("empty evaluation set")
    factory = model_factory or (
        lambda art, m: SimulationModel(art[0], art[1], m.home_team, m.away_team, m.home_value, m.away_value)
    )
    base = seed if isinstance(seed, tuple) else (int(seed),)

    observed_results = np.zeros(3)
    observed_home = np.zeros(GOAL_BINS)
    observed_away = np.zeros(GOAL_BINS)
    for m in matches:
        h, a = m.final_score
        observed_results[("home_win", "draw", "away_win").index(result_of(h, a))] += 1
        observed_home[_goal_bin(h)] += 1
        observed_away[_goal_bin(a)] += 1
    k = len(matches)
    observed_results /= k
    observed_home /= k
    observed_away /= k

    result_ll: dict = {}
    score_ll: dict = {}
    floored: dict = {}
    res_diff: dict = {}
    hg_diff: dict = {}
    ag_diff: dict = {}
    names = tuple(models)
    for mi, minute in enumerate(minutes):
        for ni, name in enumerate(names):
            exp_results = np.zeros(3)
            exp_home = np.zeros(GOAL_BINS)
            exp_away = np.zeros(GOAL_BINS)
            fps = []
            for ki, match in enumerate(matches):
                sim = factory(models[name], match)
                fp = forecast_match(
                    sim, match, minute, n=n, seed=(*base, ni, mi, ki), workers=workers
                )
                fps.append(fp)
                d = fp.distribution
                for r, p in d.result_probs.items():
                    exp_results[("home_win", "draw", "away_win").index(r)] += p
                for (h, a), c in d.score_counts.items():
                    exp_home[_goal_bin(h)] += c / d.n_scenarios
                    exp_away[_goal_bin(a)] += c / d.n_scenarios
            outcomes = {m.match_id: m.final_score for m in matches}
            rl = outcome_likelihood(fps, outcomes, "result")
            sl = outcome_likelihood(fps, outcomes, "exact_score")
            result_ll[(name, minute)] = rl.mean
            score_ll[(name, minute)] = sl.mean
            floored[(name, minute)] = rl.n_floored + sl.n_floored
            res_diff.setdefault(minute, {})[name] = exp_results / k - observed_results
            hg_diff.setdefault(minute, {})[name] = exp_home / k - observed_home
            ag_diff.setdefault(minute, {})[name] = exp_away / k - observed_away

    goal_cols = tuple(list(range(GOAL_BINS - 1)) + [f"{GOAL_BINS - 1}+"])
    return EvaluationReport(
        n_matches=k,
        minutes=tuple(minutes),
        models=names,
        n_scenarios=n,
        seed=seed,
        result_loglik=result_ll,
        score_loglik=score_ll,
        result_tables={
            mi: CalibrationTable(("home_win", "draw", "away_win"), observed_results, res_diff[mi])
            for mi in res_diff
        },
        home_goal_tables={
            mi: CalibrationTable(goal_cols, observed_home, hg_diff[mi]) for mi in hg_diff
        },
        away_goal_tables={
            mi: CalibrationTable(goal_cols, observed_away, ag_diff[mi]) for mi in ag_diff
        },
        floored=floored,
    )


# --------------------------------------------------------------------------
# Minute-by-minute replay of one match


@dataclass
class MinuteForecast:
    minute: float
    result_probs: dict
    top_scores: list  # [(score, prob)] descending
    expected_goals: tuple


def minute_by_minute(
    model: SimulationModel,
    match: MatchRecord,
    step: float = 1.0,
    n: int = DEFAULT_SCENARIOS,
    seed: Seed = 0,
    top_k: int = 5,
    workers: int = 1,
) -> list[MinuteForecast]:
    """Forecasts on the scoreboard-minute grid {0, step, ..., 90}."""
    if step <= 0:
        raise ValueError("step must be positive")
    base = seed if isinstance(seed, tuple) else (int(seed),)
    out = []
    minute = 0.0
    gi = 0
    while minute <= 90.0 + 1e-9:
        fp = forecast_match(model, match, min(minute, 90.0), n=n, seed=(*base, gi), workers=workers)
        out.append(
            MinuteForecast(
                minute=min(minute, 90.0),
                result_probs=fp.distribution.result_probs,
                top_scores=fp.distribution.top_scores(top_k),
                expected_goals=fp.distribution.expected_goals,
            )
        )
        minute += step
        gi += 1
    return out
