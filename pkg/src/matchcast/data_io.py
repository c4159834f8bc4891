"""Dataset ingestion and model artifact persistence.

Two CSV schemas (comma-delimited, UTF-8, header row, dot decimals):

matches file columns:
    match_id, season, date, home_team, away_team,
    home_value_meur, away_value_meur, stoppage1_min, stoppage2_min

events file columns:
    match_id, event_type, half, minute, stoppage_offset

with event_type in {home_goal, away_goal, home_red, away_red}, half in
{1, 2}, minute in 1..45 (second-half minutes restart at 1) and
stoppage_offset >= 0 (0 = regular time).

Model artifacts are JSON documents with an explicit schema version;
floats survive the round trip bit-exactly via repr-based encoding.
"""

from __future__ import annotations

import csv
import datetime as dt
import hashlib
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .core import EventType, MatchDataError, MatchEvent, MatchRecord
from .regressors import (
    LinearConstraint,
    ModelSpec,
    ParameterVector,
    RegressorSpec,
)

MATCH_COLUMNS = (
    "match_id",
    "season",
    "date",
    "home_team",
    "away_team",
    "home_value_meur",
    "away_value_meur",
    "stoppage1_min",
    "stoppage2_min",
)
EVENT_COLUMNS = ("match_id", "event_type", "half", "minute", "stoppage_offset")

ARTIFACT_SCHEMA_VERSION = 1


class DatasetError(ValueError):
    """Schema violations, with one message per offending line."""

    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        preview = "\n".join(self.problems[:20])
        more = "" if len(self.problems) <= 20 else f"\n... and {len(self.problems) - 20} more"
        super().__init__(f"{len(self.problems)} problem(s) while loading dataset:\n{preview}{more}")


@dataclass
class Dataset:
    matches: list[MatchRecord]
    teams: tuple[str, ...] = field(init=False)

    def __post_init__(self) -> None:
        self.matches = sorted(self.matches, key=lambda m: (m.date, m.match_id))
        names = sorted({t for m in self.matches for t in (m.home_team, m.away_team)})
        self.teams = tuple(names)

    def __len__(self) -> int:
        return len(self.matches)

    def __iter__(self):
        return iter(self.matches)

    def by_id(self, match_id: str) -> MatchRecord:
        for m in self.matches:
            if m.match_id == match_id:
                return m
        raise KeyError(f"unknown match id {match_id!r}")

    def content_hash(self) -> str:
        h = hashlib.sha256()
        for m in self.matches:
            h.update(
                "|".join(
                    [
                        m.match_id,
                        m.season,
                        m.date,
                        m.home_team,
                        m.away_team,
                        repr(m.home_value),
                        repr(m.away_value),
                        str(m.stoppage1),
                        str(m.stoppage2),
                    ]
                ).encode()
            )
            for e in m.events:
                h.update(
                    f"{e.event_type.value}|{e.half}|{e.regular_minute}|{e.stoppage_offset}".encode()
                )
        return h.hexdigest()


def _check_header(row: Sequence[str], expected: Sequence[str], path: str, problems: list):
    if tuple(row) != tuple(expected):
        problems.append(
            f"{path}:1: header must be exactly {','.join(expected)} (got {','.join(row)})"
        )
        return False
    return True


def load_dataset(matches_path: str | Path, events_path: str | Path) -> Dataset:
    """Load and validate the two CSV files into a Dataset."""
    problems: list[str] = []
    raw_matches: dict[str, dict] = {}
    mp, ep = str(matches_path), str(events_path)

    with open(matches_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError([f"{mp}:1: empty file"])
        if _check_header(header, MATCH_COLUMNS, mp, problems):
            for ln, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(MATCH_COLUMNS):
                    problems.append(f"{mp}:{ln}: expected {len(MATCH_COLUMNS)} columns, got {len(row)}")
                    continue
                rec = dict(zip(MATCH_COLUMNS, row))
                if rec["match_id"] in raw_matches:
                    problems.append(f"{mp}:{ln}: duplicate match_id {rec['match_id']!r}")
                    continue
                try:
                    dt.date.fromisoformat(rec["date"])
                except ValueError:
                    problems.append(f"{mp}:{ln}: date {rec['date']!r} is not ISO-8601")
                    continue
                try:
                    parsed = dict(
                        match_id=rec["match_id"],
                        season=rec["season"],
                        date=rec["date"],
                        home_team=rec["home_team"],
                        away_team=rec["away_team"],
                        home_value=float(rec["home_value_meur"]),
                        away_value=float(rec["away_value_meur"]),
                        stoppage1=int(rec["stoppage1_min"]),
                        stoppage2=int(rec["stoppage2_min"]),
                    )
                except ValueError as exc:
                    problems.append(f"{mp}:{ln}: {exc}")
                    continue
                parsed["_line"] = ln
                raw_matches[rec["match_id"]] = parsed

    events: dict[str, list[MatchEvent]] = {mid: [] for mid in raw_matches}
    with open(events_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError([f"{ep}:1: empty file"])
        if _check_header(header, EVENT_COLUMNS, ep, problems):
            for ln, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(EVENT_COLUMNS):
                    problems.append(f"{ep}:{ln}: expected {len(EVENT_COLUMNS)} columns, got {len(row)}")
                    continue
                rec = dict(zip(EVENT_COLUMNS, row))
                if rec["match_id"] not in raw_matches:
                    problems.append(f"{ep}:{ln}: event references unknown match {rec['match_id']!r}")
                    continue
                try:
                    etype = EventType(rec["event_type"])
                except ValueError:
                    problems.append(f"{ep}:{ln}: unknown event_type {rec['event_type']!r}")
                    continue
                try:
                    ev = MatchEvent(
                        event_type=etype,
                        half=int(rec["half"]),
                        regular_minute=int(rec["minute"]),
                        stoppage_offset=int(rec["stoppage_offset"]),
                    )
                except (ValueError, MatchDataError) as exc:
                    problems.append(f"{ep}:{ln}: {exc}")
                    continue
                events[rec["match_id"]].append(ev)

    matches = []
    for mid, rec in raw_matches.items():
        ln = rec.pop("_line")
        try:
            matches.append(MatchRecord(events=tuple(events[mid]), **rec))
        except MatchDataError as exc:
            problems.append(f"{mp}:{ln}: {exc}")

    if problems:
        raise DatasetError(problems)
    return Dataset(matches)


def save_dataset(dataset: Dataset, matches_path: str | Path, events_path: str | Path) -> None:
    with open(matches_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(MATCH_COLUMNS)
        for m in dataset.matches:
            w.writerow(
                [
                    m.match_id,
                    m.season,
                    m.date,
                    m.home_team,
                    m.away_team,
                    repr(m.home_value),
                    repr(m.away_value),
                    m.stoppage1,
                    m.stoppage2,
                ]
            )
    with open(events_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(EVENT_COLUMNS)
        for m in dataset.matches:
            for e in m.events:
                w.writerow([m.match_id, e.event_type.value, e.half, e.regular_minute, e.stoppage_offset])


# --------------------------------------------------------------------------
# Model artifacts


@dataclass
class ModelArtifact:
    spec: ModelSpec
    params: ParameterVector
    metadata: dict = field(default_factory=dict)

    @property
    def name(self) -> str:
        return self.spec.name


class ArtifactError(ValueError):
    pass


def _spec_to_json(spec: ModelSpec) -> dict:
    def enc(specs):
        return [
            {"kind": s.kind, "parameter_id": s.parameter_id, "applies_to": s.applies_to, "team": s.team}
            for s in specs
        ]

    return {
        "name": spec.name,
        "teams": list(spec.teams),
        "goal_regressors": {et.value: enc(v) for et, v in spec.goal_regressors.items()},
        "red_card_regressors": {et.value: enc(v) for et, v in spec.red_card_regressors.items()},
        "stoppage_regressors": {str(h): enc(v) for h, v in spec.stoppage_regressors.items()},
        "constraints": [
            {"coefficients": dict(c.coefficients), "rhs": c.rhs} for c in spec.constraints
        ],
    }


def _spec_from_json(doc: dict) -> ModelSpec:
    def dec(items):
        return tuple(
            RegressorSpec(i["kind"], i["parameter_id"], i["applies_to"], team=i.get("team"))
            for i in items
        )

    return ModelSpec(
        name=doc["name"],
        teams=tuple(doc["teams"]),
        goal_regressors={EventType(k): dec(v) for k, v in doc["goal_regressors"].items()},
        red_card_regressors={EventType(k): dec(v) for k, v in doc["red_card_regressors"].items()},
        stoppage_regressors={int(k): dec(v) for k, v in doc["stoppage_regressors"].items()},
        constraints=tuple(
            LinearConstraint(c["coefficients"], c["rhs"]) for c in doc["constraints"]
        ),
    )


def save_model(artifact: ModelArtifact, path: str | Path) -> None:
    doc = {
        "schema_version": ARTIFACT_SCHEMA_VERSION,
        "tool_version": __version__,
        "spec": _spec_to_json(artifact.spec),
        "parameters": {
            pid: repr(float(v)) for pid, v in zip(artifact.params.ids, artifact.params.values)
        },
        "metadata": artifact.metadata,
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> ModelArtifact:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ArtifactError(f"{path}: not a valid model artifact ({exc})") from exc
    version = doc.get("schema_version")
    if version != ARTIFACT_SCHEMA_VERSION:
        raise ArtifactError(
            f"{path}: artifact schema version {version!r} unsupported (expected {ARTIFACT_SCHEMA_VERSION})"
        )
    spec = _spec_from_json(doc["spec"])
    raw = doc["parameters"]
    missing = set(spec.parameter_ids) ^ set(raw)
    if missing:
        raise ArtifactError(f"{path}: parameter ids inconsistent with the spec: {sorted(missing)}")
    params = ParameterVector(
        spec.parameter_ids, np.array([float(raw[pid]) for pid in spec.parameter_ids])
    )
    return ModelArtifact(spec=spec, params=params, metadata=doc.get("metadata", {}))


def summarize_dataset(dataset: Dataset, top_scores: int = 10) -> dict:
    """Descriptive statistics: per-minute event rates, stoppage and score
    histograms (regular-time rates exclude stoppage-minute events)."""
    n = len(dataset)
    goal_rate = np.zeros(90)
    red_rate = np.zeros(90)
    s1 = [m.stoppage1 for m in dataset.matches]
    s2 = [m.stoppage2 for m in dataset.matches]
    score_counts: dict = {}
    goals_in_stoppage = [0, 0]
    total_goals = 0
    for m in dataset.matches:
        score_counts[m.final_score] = score_counts.get(m.final_score, 0) + 1
        for e in m.events:
            if e.is_goal:
                total_goals += 1
            if e.stoppage_offset > 0:
                if e.is_goal:
                    goals_in_stoppage[e.half - 1] += 1
                continue
            minute = e.regular_minute + (45 if e.half == 2 else 0)
            if e.is_goal:
                goal_rate[minute - 1] += 1
            else:
                red_rate[minute - 1] += 1
    hist1 = np.bincount(s1) if s1 else np.zeros(1, dtype=int)
    hist2 = np.bincount(s2) if s2 else np.zeros(1, dtype=int)
    ranked = sorted(score_counts.items(), key=lambda kv: -kv[1])[:top_scores]
    return {
        "n_matches": n,
        "minutes": list(range(1, 91)),
        "goal_rate": (goal_rate / max(n, 1)).tolist(),
        "red_rate": (red_rate / max(n, 1)).tolist(),
        "stoppage1_hist": hist1.tolist(),
        "stoppage2_hist": hist2.tolist(),
        "score_hist": [(score, c / max(n, 1)) for score, c in ranked],
        "stoppage_goal_share": [
            g / total_goals if total_goals else 0.0 for g in goals_in_stoppage
        ],
    }


def verify_dataset_hash(artifact: ModelArtifact, dataset: Dataset) -> bool:
    """Warn (not fail) when the dataset is not the one the model was fit on."""
    expected = artifact.metadata.get("dataset_hash")
    if expected is None:
        return True
    actual = dataset.content_hash()
    if actual != expected:
        warnings.warn(
            f"dataset hash {actual[:12]}... differs from the artifact's {expected[:12]}...",
            stacklevel=2,
        )
        return False
    return True
