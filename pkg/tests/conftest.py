import numpy as np
import pytest

from matchcast.core import EventType, MatchEvent, MatchRecord
from matchcast.synthetic import generate_league


def make_match(
    match_id="m1",
    home="TeamA",
    away="TeamB",
    home_value=50.0,
    away_value=25.0,
    stoppage1=2,
    stoppage2=4,
    events=(),
    season="2020",
    date="2020-05-01",
):
    return MatchRecord(
        match_id=match_id,
        season=season,
        date=date,
        home_team=home,
        away_team=away,
        home_value=home_value,
        away_value=away_value,
        stoppage1=stoppage1,
        stoppage2=stoppage2,
        events=tuple(events),
    )


@pytest.fixture(scope="session")
def busy_match():
    """Two home goals, a home red, three away goals; mirrors a real 2-3."""
    return make_match(
        events=(
            MatchEvent(EventType.HOME_GOAL, 1, 7),
            MatchEvent(EventType.HOME_GOAL, 1, 16),
            MatchEvent(EventType.HOME_RED, 1, 20),
            MatchEvent(EventType.AWAY_GOAL, 2, 13),
            MatchEvent(EventType.AWAY_GOAL, 2, 14),
            MatchEvent(EventType.AWAY_GOAL, 2, 37),
        )
    )


@pytest.fixture(scope="session")
def small_league():
    """400 synthetic matches over 2 seasons (33 demo teams)."""
    return generate_league(400, seed=424242, seasons=2)


def finite_diff_gradient(fn, x, h=1e-5):
    g = np.zeros_like(x)
    for i in range(len(x)):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (fn(xp) - fn(xm)) / (2 * h)
    return g
