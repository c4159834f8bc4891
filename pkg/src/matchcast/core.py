"""Domain types for football match event data.

The whole package works on a single "unified match clock" measured in
minutes: the first half occupies (0, 45 + U1], the second half
(45 + U1, 90 + U1 + U2], where U1/U2 are the stoppage times announced
after the regular 45 minutes of each half.  The half-time break is
excised.  A recorded minute m (1..45) is placed at its midpoint
m - 0.5, a stoppage minute "45+x" at 45 + x - 0.5; second-half times
are offset by 45 + U1.  Midpoints keep event times strictly inside
their minute, away from 0 (where log-time regressors blow up) and away
from segment boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Sequence


class EventType(str, Enum):
    """The four modelled event processes."""

    HOME_GOAL = "home_goal"
    AWAY_GOAL = "away_goal"
    HOME_RED = "home_red"
    AWAY_RED = "away_red"


GOAL_TYPES = (EventType.HOME_GOAL, EventType.AWAY_GOAL)
RED_TYPES = (EventType.HOME_RED, EventType.AWAY_RED)

# Stable order for events recorded in the same minute: goals before red
# cards, home before away.  Duplicate times left after this ordering are
# perturbed by TIE_EPS so event times are strictly increasing.
_TIE_PRIORITY = {
    EventType.HOME_GOAL: 0,
    EventType.AWAY_GOAL: 1,
    EventType.HOME_RED: 2,
    EventType.AWAY_RED: 3,
}
TIE_EPS = 1e-6


class MatchDataError(ValueError):
    """Raised for structurally invalid match data."""


def clock_time(half: int, regular_minute: int, stoppage_offset: int, u1: Optional[int] = None) -> float:
    """Map a recorded (half, minute, stoppage offset) to the unified clock.

    ``stoppage_offset`` 0 means the event happened in regular time;
    offset x > 0 means stoppage minute x ("45+x" on the scoreboard, with
    ``regular_minute`` recorded as 45).  Second-half times need ``u1``.
    """
    if half not in (1, 2):
        raise MatchDataError(f"half must be 1 or 2, got {half!r}")
    if not 1 <= regular_minute <= 45:
        raise MatchDataError(f"regular_minute must be in 1..45, got {regular_minute!r}")
    if stoppage_offset < 0:
        raise MatchDataError(f"stoppage_offset must be >= 0, got {stoppage_offset!r}")
    if stoppage_offset > 0 and regular_minute != 45:
        raise MatchDataError("stoppage events must carry regular_minute=45")
    if half == 2:
        if u1 is None:
            raise MatchDataError("second-half clock time requires the first-half stoppage u1")
        base = 45.0 + u1
    else:
        base = 0.0
    if stoppage_offset > 0:
        return base + 45.0 + stoppage_offset - 0.5
    return base + regular_minute - 0.5


def scoreboard_to_clock(minute: float, u1: Optional[int] = None) -> float:
    """Scoreboard minute (0..90) to unified clock; minutes past 45 need u1."""
    if minute < 0:
        raise MatchDataError(f"scoreboard minute must be >= 0, got {minute}")
    if minute <= 45:
        return float(minute)
    if u1 is None:
        raise MatchDataError("scoreboard minutes past 45 require u1")
    return 45.0 + u1 + (minute - 45.0)


@dataclass(frozen=True)
class MatchEvent:
    event_type: EventType
    half: int
    regular_minute: int
    stoppage_offset: int = 0

    def __post_init__(self) -> None:
        # Delegate range checks to clock_time; u1 irrelevant for validity.
        clock_time(self.half, self.regular_minute, self.stoppage_offset, u1=0)

    def raw_clock(self, u1: int) -> float:
        return clock_time(self.half, self.regular_minute, self.stoppage_offset, u1)

    @property
    def is_goal(self) -> bool:
        return self.event_type in GOAL_TYPES

    @property
    def is_red(self) -> bool:
        return self.event_type in RED_TYPES


@dataclass(frozen=True)
class MatchRecord:
    match_id: str
    season: str
    date: str  # ISO-8601; lexicographic order == chronological order
    home_team: str
    away_team: str
    home_value: float  # starting-11 market value, million EUR
    away_value: float
    stoppage1: int
    stoppage2: int
    events: tuple[MatchEvent, ...] = ()

    def __post_init__(self) -> None:
        if self.home_team == self.away_team:
            raise MatchDataError(f"{self.match_id}: home and away teams must differ")
        if not (self.home_value > 0 and self.away_value > 0):
            raise MatchDataError(f"{self.match_id}: market values must be positive")
        if self.stoppage1 < 0 or self.stoppage2 < 0:
            raise MatchDataError(f"{self.match_id}: stoppage minutes must be >= 0")
        events = tuple(self.events)
        for ev in events:
            limit = self.stoppage1 if ev.half == 1 else self.stoppage2
            if ev.stoppage_offset > limit:
                raise MatchDataError(
                    f"{self.match_id}: event at half {ev.half} stoppage minute "
                    f"{ev.stoppage_offset} exceeds the announced {limit} minutes"
                )
        ordered = tuple(
            sorted(events, key=lambda e: (e.raw_clock(self.stoppage1), _TIE_PRIORITY[e.event_type]))
        )
        object.__setattr__(self, "events", ordered)

    @property
    def total_length(self) -> float:
        return 90.0 + self.stoppage1 + self.stoppage2

    def event_clocks(self) -> list[float]:
        """Tie-broken, strictly increasing clock times for self.events."""
        times: list[float] = []
        for ev in self.events:
            t = ev.raw_clock(self.stoppage1)
            if times and t <= times[-1]:
                t = times[-1] + TIE_EPS
            times.append(t)
        if times and not (times[0] > 0.0 and times[-1] <= self.total_length):
            raise MatchDataError(f"{self.match_id}: event times escape (0, T]")
        return times

    @property
    def final_score(self) -> tuple[int, int]:
        h = sum(1 for e in self.events if e.event_type is EventType.HOME_GOAL)
        a = sum(1 for e in self.events if e.event_type is EventType.AWAY_GOAL)
        return h, a


@dataclass(frozen=True)
class MatchState:
    """Running state of a match at a given clock time.

    ``u1``/``u2`` are None while the referee has not announced them.
    ``h2_start_goals``/``h2_start_reds`` snapshot the combined counts at
    the second-half kickoff (clock 45 + u1); they are required to
    evaluate second-half stoppage regressors when conditioning on a
    state in the middle of the second half.
    """

    clock: float = 0.0
    home_goals: int = 0
    away_goals: int = 0
    home_reds: int = 0
    away_reds: int = 0
    u1: Optional[int] = None
    u2: Optional[int] = None
    half: int = 1
    h2_start_goals: Optional[int] = None
    h2_start_reds: Optional[int] = None

    def __post_init__(self) -> None:
        if min(self.home_goals, self.away_goals, self.home_reds, self.away_reds) < 0:
            raise MatchDataError("event counts must be >= 0")
        if self.half not in (1, 2):
            raise MatchDataError(f"half must be 1 or 2, got {self.half!r}")
        if self.half == 2 and self.u1 is None:
            raise MatchDataError("second-half state requires a resolved u1")
        if self.half == 2 and (self.h2_start_goals is None or self.h2_start_reds is None):
            raise MatchDataError("second-half state requires the half-time count snapshot")

    @property
    def total_goals(self) -> int:
        return self.home_goals + self.away_goals

    @property
    def total_reds(self) -> int:
        return self.home_reds + self.away_reds

    def apply(self, event_type: EventType, clock: float) -> "MatchState":
        """State after one more event at ``clock`` (>= current clock)."""
        if clock < self.clock:
            raise MatchDataError("events cannot move the clock backwards")
        bump = {
            EventType.HOME_GOAL: ("home_goals", self.home_goals + 1),
            EventType.AWAY_GOAL: ("away_goals", self.away_goals + 1),
            EventType.HOME_RED: ("home_reds", self.home_reds + 1),
            EventType.AWAY_RED: ("away_reds", self.away_reds + 1),
        }[event_type]
        return replace(self, clock=clock, **{bump[0]: bump[1]})


def state_at_clock(
    match_events: Sequence[tuple[EventType, float]],
    clock: float,
    u1: Optional[int],
    u2: Optional[int],
) -> MatchState:
    """State at ``clock`` given (type, time) pairs sorted by time.

    Only events with time <= clock inform the state.  ``u1``/``u2``
    should be passed as None when not yet announced at ``clock``.
    """
    counts = {et: 0 for et in EventType}
    h2_goals = h2_reds = None
    half2_from = None if u1 is None else 45.0 + u1
    for et, t in match_events:
        if t > clock:
            break
        if half2_from is not None and t > half2_from and h2_goals is None:
            h2_goals = counts[EventType.HOME_GOAL] + counts[EventType.AWAY_GOAL]
            h2_reds = counts[EventType.HOME_RED] + counts[EventType.AWAY_RED]
        counts[et] += 1
    half = 2 if (half2_from is not None and clock > half2_from) else 1
    if half == 2 and h2_goals is None:
        h2_goals = counts[EventType.HOME_GOAL] + counts[EventType.AWAY_GOAL]
        h2_reds = counts[EventType.HOME_RED] + counts[EventType.AWAY_RED]
    return MatchState(
        clock=clock,
        home_goals=counts[EventType.HOME_GOAL],
        away_goals=counts[EventType.AWAY_GOAL],
        home_reds=counts[EventType.HOME_RED],
        away_reds=counts[EventType.AWAY_RED],
        u1=u1,
        u2=u2,
        half=half,
        h2_start_goals=h2_goals,
        h2_start_reds=h2_reds,
    )


def state_at_minute(match: MatchRecord, minute: float) -> MatchState:
    """Match state as known at a scoreboard minute of a recorded match.

    Stoppage announcements are treated as known from the moment the
    regular 45 minutes of the half are complete: u1 from scoreboard
    minute 45 on, u2 from scoreboard minute 90 on.
    """
    if minute < 0 or minute > 90:
        raise MatchDataError(f"scoreboard minute must be in [0, 90], got {minute}")
    u1 = match.stoppage1 if minute >= 45 else None
    u2 = match.stoppage2 if minute >= 90 else None
    clock = scoreboard_to_clock(minute, u1)
    pairs = list(zip((e.event_type for e in match.events), match.event_clocks()))
    return state_at_clock(pairs, clock, u1, u2)
