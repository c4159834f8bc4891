"""Regressor catalog, model specifications and the named model family.

A model is a collection of log-linear intensity parameterizations: for
each modelled event process, ln(rate) = sum_i coeff_i * regressor_i(t),
and for each half's stoppage time, ln(Poisson mean) = sum_i coeff_i *
regressor_i.  Regressors are evaluated from the running match state and
never look ahead of the evaluation time.

Parameter tying is expressed by giving two regressor specs the same
parameter id; e.g. the goal-difference coefficient is shared between the
home and away goal processes, and the "tied" stoppage variants share one
coefficient across both halves.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .core import EventType, MatchDataError, MatchRecord, MatchState

GOAL_KINDS = (
    "attack",
    "defence",
    "home_advantage",
    "log_value_ratio",
    "half_indicator",
    "goal_difference",
    "red_card_difference",
)
RED_KINDS = ("constant", "log_time")
STOPPAGE_KINDS = ("constant", "half_goal_count", "half_red_count", "close_score_indicator")

# applies_to values for stoppage specs
STOPPAGE_H1 = "stoppage1"
STOPPAGE_H2 = "stoppage2"


class ModelSpecError(ValueError):
    """Raised for malformed model specifications."""


@dataclass(frozen=True)
class RegressorSpec:
    kind: str
    parameter_id: str
    applies_to: str  # EventType value or "stoppage1"/"stoppage2"
    team: Optional[str] = None

    def __post_init__(self) -> None:
        if self.kind in ("attack", "defence") and self.team is None:
            raise ModelSpecError(f"{self.kind} regressor needs a team")


@dataclass(frozen=True)
class LinearConstraint:
    """sum_i coefficients[param_id] * xi[param_id] == rhs."""

    coefficients: Mapping[str, float]
    rhs: float = 0.0

    def __post_init__(self) -> None:
        if not any(c != 0.0 for c in self.coefficients.values()):
            raise ModelSpecError("constraint needs at least one nonzero coefficient")


def eval_regressor(spec: RegressorSpec, state: MatchState, match: MatchRecord, t: float) -> float:
    """Value of one regressor at time t given the state just before t.

    The value depends only on information observable by t; for event
    instants the caller passes the state strictly before the event.
    """
    kind = spec.kind
    if spec.applies_to in (STOPPAGE_H1, STOPPAGE_H2):
        return _eval_stoppage(spec, state)
    process = EventType(spec.applies_to)
    is_home_process = process in (EventType.HOME_GOAL, EventType.HOME_RED)
    if kind == "attack":
        attacker = match.home_team if is_home_process else match.away_team
        return 1.0 if spec.team == attacker else 0.0
    if kind == "defence":
        defender = match.away_team if is_home_process else match.home_team
        return 1.0 if spec.team == defender else 0.0
    if kind == "home_advantage":
        return 1.0
    if kind == "log_value_ratio":
        r = math.log(match.home_value) - math.log(match.away_value)
        return r if is_home_process else -r
    if kind == "half_indicator":
        return 1.0 if state.half == 2 else 0.0
    if kind == "goal_difference":
        d = state.home_goals - state.away_goals
        return float(d if is_home_process else -d)
    if kind == "red_card_difference":
        d = state.away_reds - state.home_reds
        return float(d if is_home_process else -d)
    if kind == "constant":
        return 1.0
    if kind == "log_time":
        if t <= 0:
            raise MatchDataError(f"log_time regressor undefined at t={t}")
        return math.log(t)
    raise ModelSpecError(f"unknown regressor kind {kind!r}")


def _eval_stoppage(spec: RegressorSpec, state: MatchState) -> float:
    """Stoppage regressors, evaluated at the end of the half's regular time.

    First-half regressors count events in (0, 45]; second-half ones
    count events in (45+U1, 90+U1], i.e. current totals minus the
    half-time snapshot.
    """
    if spec.kind == "constant":
        return 1.0
    second = spec.applies_to == STOPPAGE_H2
    if second and (state.h2_start_goals is None or state.h2_start_reds is None):
        raise MatchDataError("second-half stoppage regressors need the half-time snapshot")
    if spec.kind == "half_goal_count":
        return float(state.total_goals - (state.h2_start_goals if second else 0))
    if spec.kind == "half_red_count":
        return float(state.total_reds - (state.h2_start_reds if second else 0))
    if spec.kind == "close_score_indicator":
        if not second:
            raise ModelSpecError("close_score_indicator applies to the second half only")
        return 1.0 if abs(state.home_goals - state.away_goals) <= 1 else 0.0
    raise ModelSpecError(f"unknown stoppage regressor kind {spec.kind!r}")


@dataclass(frozen=True)
class ModelSpec:
    """Declarative model description: regressors, tying and constraints."""

    name: str
    teams: tuple[str, ...]
    goal_regressors: Mapping[EventType, tuple[RegressorSpec, ...]]
    red_card_regressors: Mapping[EventType, tuple[RegressorSpec, ...]]
    stoppage_regressors: Mapping[int, tuple[RegressorSpec, ...]]
    constraints: tuple[LinearConstraint, ...] = ()
    parameter_ids: tuple[str, ...] = field(init=False)

    def __post_init__(self) -> None:
        ids: list[str] = []
        kinds: dict[str, str] = {}
        for spec in self.iter_specs():
            if spec.parameter_id not in kinds:
                kinds[spec.parameter_id] = spec.kind
                ids.append(spec.parameter_id)
            elif kinds[spec.parameter_id] != spec.kind:
                raise ModelSpecError(
                    f"parameter {spec.parameter_id!r} tied across incompatible kinds "
                    f"{kinds[spec.parameter_id]!r} and {spec.kind!r}"
                )
        known = set(ids)
        for con in self.constraints:
            missing = set(con.coefficients) - known
            if missing:
                raise ModelSpecError(f"constraint references unknown parameters {sorted(missing)}")
        object.__setattr__(self, "parameter_ids", tuple(ids))

    def iter_specs(self):
        for et in (EventType.HOME_GOAL, EventType.AWAY_GOAL):
            yield from self.goal_regressors.get(et, ())
        for et in (EventType.HOME_RED, EventType.AWAY_RED):
            yield from self.red_card_regressors.get(et, ())
        for half in (1, 2):
            yield from self.stoppage_regressors.get(half, ())

    @property
    def n_params(self) -> int:
        return len(self.parameter_ids)

    @property
    def param_index(self) -> dict[str, int]:
        return {pid: i for i, pid in enumerate(self.parameter_ids)}

    @property
    def event_processes(self) -> tuple[EventType, ...]:
        procs = [et for et in (EventType.HOME_GOAL, EventType.AWAY_GOAL) if self.goal_regressors.get(et)]
        procs += [et for et in (EventType.HOME_RED, EventType.AWAY_RED) if self.red_card_regressors.get(et)]
        return tuple(procs)

    @property
    def stoppage_halves(self) -> tuple[int, ...]:
        return tuple(h for h in (1, 2) if self.stoppage_regressors.get(h))

    @property
    def uses_teams(self) -> bool:
        return any(s.kind in ("attack", "defence") for s in self.iter_specs())

    def process_regressors(self, et: EventType) -> tuple[RegressorSpec, ...]:
        if et in (EventType.HOME_GOAL, EventType.AWAY_GOAL):
            return self.goal_regressors.get(et, ())
        return self.red_card_regressors.get(et, ())

    def component_counts(self) -> dict[str, int]:
        """Distinct parameter counts per component (goal/stoppage/red)."""
        buckets = {"goal": set(), "red_card": set(), "stoppage": set()}
        for et in (EventType.HOME_GOAL, EventType.AWAY_GOAL):
            buckets["goal"].update(s.parameter_id for s in self.goal_regressors.get(et, ()))
        for et in (EventType.HOME_RED, EventType.AWAY_RED):
            buckets["red_card"].update(s.parameter_id for s in self.red_card_regressors.get(et, ()))
        for half in (1, 2):
            buckets["stoppage"].update(s.parameter_id for s in self.stoppage_regressors.get(half, ()))
        return {k: len(v) for k, v in buckets.items()}


@dataclass(frozen=True)
class ParameterVector:
    """Coefficients addressed by the ModelSpec's parameter ids."""

    ids: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (len(self.ids),):
            raise ModelSpecError(
                f"parameter vector length {vals.shape} does not match {len(self.ids)} ids"
            )
        object.__setattr__(self, "values", vals)

    @classmethod
    def zeros(cls, spec: ModelSpec) -> "ParameterVector":
        return cls(spec.parameter_ids, np.zeros(spec.n_params))

    @classmethod
    def from_dict(cls, spec: ModelSpec, mapping: Mapping[str, float], default: float = 0.0) -> "ParameterVector":
        unknown = set(mapping) - set(spec.parameter_ids)
        if unknown:
            raise ModelSpecError(f"unknown parameter ids {sorted(unknown)}")
        vals = np.array([mapping.get(pid, default) for pid in spec.parameter_ids])
        return cls(spec.parameter_ids, vals)

    def __getitem__(self, pid: str) -> float:
        return float(self.values[self.ids.index(pid)])

    def as_dict(self) -> dict[str, float]:
        return {pid: float(v) for pid, v in zip(self.ids, self.values)}


# --------------------------------------------------------------------------
# Named models: G0-G4 goal models, S0-S5 stoppage models, R red cards.

_NAME_RE = re.compile(r"^(?:G([0-4]))?(?:S([0-5]))?(R)?$")

# Ancestor sets of the two nested stoppage chains S0-S1-S2 and S0-S3-S4-S5.
_S_ANCESTORS = {
    0: set(),
    1: {0},
    2: {0, 1},
    3: {0},
    4: {0, 3},
    5: {0, 3, 4},
}


def parse_model_name(name: str) -> tuple[Optional[int], Optional[int], bool]:
    m = _NAME_RE.match(name)
    if not m or name == "":
        raise ModelSpecError(
            f"unknown model name {name!r}; expected e.g. 'G4', 'S5', 'R', 'G4S5R'"
        )
    g = int(m.group(1)) if m.group(1) else None
    s = int(m.group(2)) if m.group(2) else None
    return g, s, m.group(3) is not None


def is_nested(name_small: str, name_big: str) -> bool:
    """True when the first named model is nested in the second."""
    gs, ss, rs = parse_model_name(name_small)
    gb, sb, rb = parse_model_name(name_big)
    # Nesting needs the same observation terms: both-or-neither per component.
    if (gs is None) != (gb is None) or (ss is None) != (sb is None) or rs != rb:
        return False
    if gs is not None and gs > gb:
        return False
    if ss is not None and ss != sb and ss not in _S_ANCESTORS[sb]:
        return False
    return True


def nested_predecessor(name: str) -> Optional[str]:
    """The immediate predecessor in the named chains (for LRT columns)."""
    g, s, r = parse_model_name(name)
    if g is not None and g > 0:
        return _format_name(g - 1, s, r)
    if s is not None and s > 0:
        prev = {1: 0, 2: 1, 3: 0, 4: 3, 5: 4}[s]
        return _format_name(g, prev, r)
    return None


def _format_name(g: Optional[int], s: Optional[int], r: bool) -> str:
    return (f"G{g}" if g is not None else "") + (f"S{s}" if s is not None else "") + ("R" if r else "")


def make_named_model(name: str, teams: Sequence[str]) -> ModelSpec:
    """Build one of the named model specifications over a team registry.

    Goal models share the value/half/goals/red-cards coefficients between
    the home and away processes; home advantage enters the home process
    only.  Whenever attack/defence regressors are present the
    geometric-mean constraint (sum of log attacks == sum of log
    defences) is attached.
    """
    g_level, s_level, with_red = parse_model_name(name)
    team_tuple = tuple(sorted(set(teams)))
    if g_level is not None and len(team_tuple) < 2:
        raise ModelSpecError("goal models need at least two teams")

    goal: dict[EventType, tuple[RegressorSpec, ...]] = {}
    constraints: list[LinearConstraint] = []
    if g_level is not None:
        for et in (EventType.HOME_GOAL, EventType.AWAY_GOAL):
            specs = [
                RegressorSpec("attack", f"attack:{team}", et.value, team=team) for team in team_tuple
            ]
            specs += [
                RegressorSpec("defence", f"defence:{team}", et.value, team=team) for team in team_tuple
            ]
            if et is EventType.HOME_GOAL:
                specs.append(RegressorSpec("home_advantage", "home_advantage", et.value))
            if g_level >= 1:
                specs.append(RegressorSpec("log_value_ratio", "value", et.value))
            if g_level >= 2:
                specs.append(RegressorSpec("half_indicator", "half", et.value))
            if g_level >= 3:
                specs.append(RegressorSpec("goal_difference", "goal_diff", et.value))
            if g_level >= 4:
                specs.append(RegressorSpec("red_card_difference", "red_diff", et.value))
            goal[et] = tuple(specs)
        coeffs = {f"attack:{team}": 1.0 for team in team_tuple}
        coeffs.update({f"defence:{team}": -1.0 for team in team_tuple})
        constraints.append(LinearConstraint(coeffs, 0.0))

    red: dict[EventType, tuple[RegressorSpec, ...]] = {}
    if with_red:
        for et, side in ((EventType.HOME_RED, "home"), (EventType.AWAY_RED, "away")):
            red[et] = (
                RegressorSpec("constant", f"red_const:{side}", et.value),
                RegressorSpec("log_time", f"red_time:{side}", et.value),
            )

    stoppage: dict[int, tuple[RegressorSpec, ...]] = {}
    if s_level is not None:
        for half, tag in ((1, STOPPAGE_H1), (2, STOPPAGE_H2)):
            specs = [RegressorSpec("constant", f"stoppage_const:h{half}", tag)]
            if s_level in (1, 2):
                pid = "stoppage_goals" if s_level == 1 else f"stoppage_goals:h{half}"
                specs.append(RegressorSpec("half_goal_count", pid, tag))
            if s_level in (3, 4, 5):
                pid = "stoppage_reds" if s_level == 3 else f"stoppage_reds:h{half}"
                specs.append(RegressorSpec("half_red_count", pid, tag))
            if s_level == 5 and half == 2:
                specs.append(RegressorSpec("close_score_indicator", "stoppage_close", tag))
            stoppage[half] = tuple(specs)

    return ModelSpec(
        name=name,
        teams=team_tuple,
        goal_regressors=goal,
        red_card_regressors=red,
        stoppage_regressors=stoppage,
        constraints=tuple(constraints),
    )
