import json
import math

import numpy as np
import pytest
from fastapi.testclient import TestClient

from matchcast.data_io import ModelArtifact
from matchcast.regressors import ParameterVector, make_named_model
from matchcast.service import create_app
from matchcast.synthetic import demo_model


@pytest.fixture(scope="module")
def artifact():
    spec, params = demo_model(["Ceara", "Parana", "Flamengo", "Santos"])
    return ModelArtifact(spec, params, metadata={"loglik": -1.0})


@pytest.fixture()
def client(artifact):
    app = create_app({"G4S5R": artifact}, default_n=2000)
    return TestClient(app)


def new_session(client, home="Ceara", away="Parana", hv=8.16, av=5.08):
    resp = client.post(
        "/sessions",
        json={"model_id": "G4S5R", "home_team": home, "away_team": away,
              "home_value": hv, "away_value": av},
    )
    assert resp.status_code == 201, resp.text
    return resp.json()["session_id"]


class TestSessions:
    def test_create_valid(self, client):
        resp = client.post(
            "/sessions",
            json={"model_id": "G4S5R", "home_team": "Ceara", "away_team": "Parana",
                  "home_value": 8.16, "away_value": 5.08},
        )
        assert resp.status_code == 201
        body = resp.json()
        assert body["state"]["clock"] == 0.0
        assert body["state"]["home_goals"] == 0

    def test_unknown_team_422_with_name(self, client):
        resp = client.post(
            "/sessions",
            json={"model_id": "G4S5R", "home_team": "Ceara", "away_team": "Atlantis",
                  "home_value": 8.0, "away_value": 5.0},
        )
        assert resp.status_code == 422
        assert "Atlantis" in resp.json()["message"]

    def test_unknown_model_422(self, client):
        resp = client.post(
            "/sessions",
            json={"model_id": "nope", "home_team": "Ceara", "away_team": "Parana",
                  "home_value": 8.0, "away_value": 5.0},
        )
        assert resp.status_code == 422

    def test_duplicate_creates_are_independent(self, client):
        a = new_session(client)
        b = new_session(client)
        assert a != b
        client.post(f"/sessions/{a}/events", json={"type": "home_goal", "half": 1, "minute": 5})
        sa = client.get(f"/sessions/{a}/history").json()["state"]
        sb = client.get(f"/sessions/{b}/history").json()["state"]
        assert sa["home_goals"] == 1 and sb["home_goals"] == 0

    def test_unknown_session_404(self, client):
        assert client.get("/sessions/ghost/history").status_code == 404
        assert client.post("/sessions/ghost/undo").status_code == 404


class TestEventsAndClock:
    def test_goal_advances_clock_to_midpoint(self, client):
        sid = new_session(client)
        resp = client.post(f"/sessions/{sid}/events", json={"type": "home_goal", "half": 1, "minute": 34})
        assert resp.status_code == 200
        state = resp.json()["state"]
        assert state["clock"] == 33.5
        assert state["home_goals"] == 1

    def test_undo_restores_fresh_state(self, client):
        sid = new_session(client)
        fresh = client.get(f"/sessions/{sid}/history").json()["state"]
        client.post(f"/sessions/{sid}/events", json={"type": "away_red", "half": 1, "minute": 20})
        resp = client.post(f"/sessions/{sid}/undo")
        assert resp.status_code == 200
        assert resp.json()["state"] == fresh

    def test_undo_empty_log_conflict(self, client):
        sid = new_session(client)
        assert client.post(f"/sessions/{sid}/undo").status_code == 409

    def test_clock_regression_409(self, client):
        sid = new_session(client)
        assert client.post(f"/sessions/{sid}/clock", json={"half": 1, "minute": 30}).status_code == 200
        resp = client.post(f"/sessions/{sid}/clock", json={"half": 1, "minute": 10})
        assert resp.status_code == 409
        assert resp.json()["code"] == "time_regression"

    def test_event_before_clock_409(self, client):
        sid = new_session(client)
        client.post(f"/sessions/{sid}/clock", json={"half": 1, "minute": 30})
        resp = client.post(f"/sessions/{sid}/events", json={"type": "home_goal", "half": 1, "minute": 10})
        assert resp.status_code == 409

    def test_second_half_needs_announcement_422(self, client):
        sid = new_session(client)
        resp = client.post(f"/sessions/{sid}/events", json={"type": "home_goal", "half": 2, "minute": 5})
        assert resp.status_code == 422
        assert resp.json()["code"] == "stoppage_not_announced"

    def test_stoppage_flow(self, client):
        sid = new_session(client)
        # too early before minute 45
        resp = client.post(f"/sessions/{sid}/stoppage", json={"half": 1, "minutes": 3})
        assert resp.status_code == 422
        client.post(f"/sessions/{sid}/clock", json={"half": 1, "minute": 45})
        resp = client.post(f"/sessions/{sid}/stoppage", json={"half": 1, "minutes": 3})
        assert resp.status_code == 200
        assert resp.json()["state"]["stoppage1"] == 3
        # event inside announced stoppage, then beyond it
        ok = client.post(f"/sessions/{sid}/events", json={"type": "away_goal", "half": 1, "minute": 45, "stoppage_offset": 2})
        assert ok.status_code == 200
        bad = client.post(f"/sessions/{sid}/events", json={"type": "away_goal", "half": 1, "minute": 45, "stoppage_offset": 5})
        assert bad.status_code == 422
        # re-announcement refused
        again = client.post(f"/sessions/{sid}/stoppage", json={"half": 1, "minutes": 4})
        assert again.status_code == 409
        # second half now usable
        ok2 = client.post(f"/sessions/{sid}/events", json={"type": "home_goal", "half": 2, "minute": 10})
        assert ok2.status_code == 200
        assert ok2.json()["state"]["clock"] == 45 + 3 + 9.5


class TestForecastEndpoint:
    def test_probabilities_sum_to_one(self, client):
        sid = new_session(client)
        resp = client.get(f"/sessions/{sid}/forecast?seed=1&n=2000")
        assert resp.status_code == 200
        body = resp.json()
        assert sum(body["result_probs"].values()) == pytest.approx(1.0, abs=1e-9)
        assert body["seed"] == 1
        assert len(body["top_scores"]) == 5

    def test_server_generates_seed_when_unpinned(self, client):
        sid = new_session(client)
        body = client.get(f"/sessions/{sid}/forecast?n=500").json()
        assert isinstance(body["seed"], int)

    def test_pinned_seed_reproducible(self, client):
        sid = new_session(client)
        a = client.get(f"/sessions/{sid}/forecast?seed=9&n=3000").json()
        b = client.get(f"/sessions/{sid}/forecast?seed=9&n=3000").json()
        assert a["exact_score_probs"] == b["exact_score_probs"]

    def test_what_if_equals_committed_event(self, client):
        sid = new_session(client)
        wi = client.get(
            f"/sessions/{sid}/forecast?seed=4&n=3000"
            "&what_if_type=home_goal&what_if_half=1&what_if_minute=34"
        ).json()
        client.post(f"/sessions/{sid}/events", json={"type": "home_goal", "half": 1, "minute": 34})
        committed = client.get(f"/sessions/{sid}/forecast?seed=4&n=3000").json()
        assert wi["result_probs"] == committed["result_probs"]
        assert wi["exact_score_probs"] == committed["exact_score_probs"]

    def test_what_if_purity_history_unchanged(self, client):
        sid = new_session(client)
        client.post(f"/sessions/{sid}/events", json={"type": "home_goal", "half": 1, "minute": 10})
        client.get(f"/sessions/{sid}/forecast?seed=2&n=1000")
        before = json.dumps(client.get(f"/sessions/{sid}/history").json(), sort_keys=True)
        for minute in (20, 25, 30):
            r = client.get(
                f"/sessions/{sid}/forecast?seed=3&n=1000"
                f"&what_if_type=away_red&what_if_half=1&what_if_minute={minute}"
            )
            assert r.status_code == 200
        after = json.dumps(client.get(f"/sessions/{sid}/history").json(), sort_keys=True)
        assert before == after

    def test_what_if_red_card_hurts_receiver(self, client):
        # a hypothetical home red card lowers P(home win) under a model
        # whose red-card effect boosts the opponent (common seed pairing)
        sid = new_session(client)
        client.post(f"/sessions/{sid}/clock", json={"half": 1, "minute": 30})
        base = client.get(f"/sessions/{sid}/forecast?seed=7&n=20000").json()
        red = client.get(
            f"/sessions/{sid}/forecast?seed=7&n=20000"
            "&what_if_type=home_red&what_if_half=1&what_if_minute=30"
        ).json()
        assert red["result_probs"]["home_win"] < base["result_probs"]["home_win"]

    def test_invalid_what_if_rejected(self, client):
        sid = new_session(client)
        client.post(f"/sessions/{sid}/clock", json={"half": 1, "minute": 30})
        resp = client.get(
            f"/sessions/{sid}/forecast?seed=1&n=500"
            "&what_if_type=home_goal&what_if_half=1&what_if_minute=10"
        )
        assert resp.status_code == 409  # earlier than the current clock


class TestHistoryAndReplay:
    def test_empty_history(self, client):
        sid = new_session(client)
        body = client.get(f"/sessions/{sid}/history").json()
        assert body["events"] == [] and body["forecasts"] == []

    def test_forecast_history_in_order(self, client):
        sid = new_session(client)
        for minute in (5, 15, 25):
            client.post(f"/sessions/{sid}/clock", json={"half": 1, "minute": minute})
            client.get(f"/sessions/{sid}/forecast?seed={minute}&n=500")
        body = client.get(f"/sessions/{sid}/history").json()
        clocks = [f["clock"] for f in body["forecasts"]]
        assert clocks == sorted(clocks) and len(clocks) == 3

    def test_replay_determinism_from_log(self, artifact, tmp_path):
        log_dir = tmp_path / "logs"
        app = create_app({"G4S5R": artifact}, default_n=500, log_dir=log_dir)
        client = TestClient(app)
        sid = new_session(client)
        client.post(f"/sessions/{sid}/events", json={"type": "home_goal", "half": 1, "minute": 12})
        client.post(f"/sessions/{sid}/clock", json={"half": 1, "minute": 45})
        client.post(f"/sessions/{sid}/stoppage", json={"half": 1, "minutes": 2})
        state = client.get(f"/sessions/{sid}/history").json()["state"]

        # a fresh app instance restores the session from the log file
        app2 = create_app({"G4S5R": artifact}, default_n=500, log_dir=log_dir)
        client2 = TestClient(app2)
        state2 = client2.get(f"/sessions/{sid}/history").json()["state"]
        assert state2 == state

    def test_undo_rewrites_log(self, artifact, tmp_path):
        log_dir = tmp_path / "logs"
        app = create_app({"G4S5R": artifact}, default_n=500, log_dir=log_dir)
        client = TestClient(app)
        sid = new_session(client)
        client.post(f"/sessions/{sid}/events", json={"type": "home_goal", "half": 1, "minute": 12})
        client.post(f"/sessions/{sid}/undo")
        app2 = create_app({"G4S5R": artifact}, default_n=500, log_dir=log_dir)
        client2 = TestClient(app2)
        assert client2.get(f"/sessions/{sid}/history").json()["state"]["home_goals"] == 0
