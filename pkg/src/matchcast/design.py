"""Decompose matches into inter-event segments with regressor values.

A match is cut at every event time and at the half boundary 45+U1, so
that within each segment every regressor except log-time is constant.
The likelihood then needs only closed-form integrals per segment.
Regressor values at event instants use the state strictly before the
event: an event never influences its own intensity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import EventType, MatchDataError, MatchRecord, MatchState, state_at_clock
from .regressors import ModelSpec, RegressorSpec, eval_regressor, STOPPAGE_H1, STOPPAGE_H2


@dataclass(frozen=True)
class Segment:
    """One piece of (0, T] for one event process (test-friendly view)."""

    start: float
    end: float
    psi: np.ndarray  # constant regressor values; log-time slot zeroed
    log_time_pos: int = -1  # position of the log-time regressor, -1 if none

    @property
    def length(self) -> float:
        return self.end - self.start


@dataclass
class ProcessDesign:
    """All segments and observed events of one event process in one match."""

    event_type: EventType
    param_idx: np.ndarray  # global parameter index of each active regressor
    log_time_pos: int
    seg_start: np.ndarray
    seg_end: np.ndarray
    seg_psi: np.ndarray  # (n_seg, n_active); log-time column zeroed
    ev_times: np.ndarray
    ev_psi: np.ndarray  # (n_ev, n_active); log-time column holds ln t

    def segments(self) -> list[Segment]:
        return [
            Segment(float(s), float(e), self.seg_psi[i].copy(), self.log_time_pos)
            for i, (s, e) in enumerate(zip(self.seg_start, self.seg_end))
        ]


@dataclass
class StoppageDesign:
    half: int
    param_idx: np.ndarray
    phi: np.ndarray
    u: int
    log_u_factorial: float


@dataclass
class SegmentedDesign:
    match_id: str
    total_length: float
    n_params: int
    processes: list[ProcessDesign]
    stoppage: list[StoppageDesign]


def _active_specs(spec: ModelSpec, et: EventType, match: MatchRecord) -> list[RegressorSpec]:
    """Drop team indicators that are identically zero for this match."""
    out = []
    for s in spec.process_regressors(et):
        if s.kind in ("attack", "defence") and s.team not in (match.home_team, match.away_team):
            continue
        out.append(s)
    return out


def build_design(match: MatchRecord, spec: ModelSpec) -> SegmentedDesign:
    """Segment a match under a model specification."""
    unknown = {match.home_team, match.away_team} - set(spec.teams)
    if spec.uses_teams and unknown:
        raise MatchDataError(
            f"{match.match_id}: teams {sorted(unknown)} are not in the model's registry"
        )
    total = match.total_length
    half2_from = 45.0 + match.stoppage1
    clocks = match.event_clocks()
    if any(not 0.0 < t <= total for t in clocks):
        raise MatchDataError(f"{match.match_id}: event outside (0, T]")

    boundaries = sorted(set(clocks) | {half2_from, total})
    if boundaries and boundaries[0] <= 0.0:
        raise MatchDataError(f"{match.match_id}: non-positive boundary")

    pairs = list(zip((e.event_type for e in match.events), clocks))
    # The state holding throughout segment (b_{i-1}, b_i] is the state at
    # the segment midpoint: events sit only on boundaries, and the
    # midpoint resolves which half the segment is in.
    starts = [0.0] + boundaries[:-1]
    seg_states = [
        state_at_clock(pairs, 0.5 * (s + b), match.stoppage1, match.stoppage2)
        for s, b in zip(starts, boundaries)
    ]
    seg_of_time = {b: i for i, b in enumerate(boundaries)}

    idx = spec.param_index
    processes: list[ProcessDesign] = []
    for et in spec.event_processes:
        active = _active_specs(spec, et, match)
        n_active = len(active)
        p_idx = np.array([idx[s.parameter_id] for s in active], dtype=np.intp)
        lt_pos = next((i for i, s in enumerate(active) if s.kind == "log_time"), -1)

        seg_rows = [
            np.array(
                [
                    0.0 if i == lt_pos else eval_regressor(s, st, match, b)
                    for i, s in enumerate(active)
                ]
            )
            for st, b in zip(seg_states, boundaries)
        ]
        ev_times, ev_rows = [], []
        for e_type, e_time in pairs:
            if e_type is not et:
                continue
            erow = seg_rows[seg_of_time[e_time]].copy()
            if lt_pos >= 0:
                erow[lt_pos] = math.log(e_time)
            ev_times.append(e_time)
            ev_rows.append(erow)

        processes.append(
            ProcessDesign(
                event_type=et,
                param_idx=p_idx,
                log_time_pos=lt_pos,
                seg_start=np.array(starts),
                seg_end=np.array(boundaries),
                seg_psi=np.array(seg_rows).reshape(len(boundaries), n_active),
                ev_times=np.array(ev_times),
                ev_psi=np.array(ev_rows).reshape(len(ev_times), n_active),
            )
        )

    stoppage: list[StoppageDesign] = []
    for half in spec.stoppage_halves:
        end_clock = 45.0 if half == 1 else 90.0 + match.stoppage1
        st = state_at_clock(pairs, end_clock, match.stoppage1, match.stoppage2)
        specs = spec.stoppage_regressors[half]
        phi = np.array([eval_regressor(s, st, match, end_clock) for s in specs])
        u = match.stoppage1 if half == 1 else match.stoppage2
        stoppage.append(
            StoppageDesign(
                half=half,
                param_idx=np.array([idx[s.parameter_id] for s in specs], dtype=np.intp),
                phi=phi,
                u=u,
                log_u_factorial=math.lgamma(u + 1),
            )
        )

    return SegmentedDesign(
        match_id=match.match_id,
        total_length=total,
        n_params=spec.n_params,
        processes=processes,
        stoppage=stoppage,
    )


# --------------------------------------------------------------------------
# Stacked representation over a dataset, used by the likelihood internals.


@dataclass
class StackedDesign:
    """Row-stacked segments/events of many designs against one parameter
    vector; the layout the likelihood and its derivatives operate on."""

    n_params: int
    n_matches: int
    # segment rows
    seg_psi: "object"  # scipy.sparse csr_matrix (n_rows, n_params), lt cols zeroed
    seg_start: np.ndarray
    seg_end: np.ndarray
    seg_lt_col: np.ndarray  # global column of the log-time coefficient, -1 if none
    seg_match: np.ndarray
    # event rows (log-time column holds ln t, so psi @ xi is ln lambda)
    ev_psi: "object"
    ev_match: np.ndarray
    # stoppage rows
    stop_phi: "object"
    stop_u: np.ndarray
    stop_lgu: np.ndarray
    stop_match: np.ndarray


def stack_designs(designs: Sequence[SegmentedDesign]) -> StackedDesign:
    from scipy import sparse

    if not designs:
        raise MatchDataError("empty dataset")
    n_params = designs[0].n_params
    if any(d.n_params != n_params for d in designs):
        raise MatchDataError("designs built from different model specifications")

    def _coo(rows_blocks):
        data, ri, ci = [], [], []
        r0 = 0
        for block_idx, block_vals in rows_blocks:
            n_rows, n_cols = block_vals.shape
            if n_rows:
                rr = np.repeat(np.arange(r0, r0 + n_rows), n_cols)
                cc = np.tile(block_idx, n_rows)
                data.append(block_vals.ravel())
                ri.append(rr)
                ci.append(cc)
            r0 += n_rows
        if data:
            mat = sparse.coo_matrix(
                (np.concatenate(data), (np.concatenate(ri), np.concatenate(ci))),
                shape=(r0, n_params),
            )
        else:
            mat = sparse.coo_matrix((r0, n_params))
        return mat.tocsr()

    seg_blocks, ev_blocks = [], []
    seg_start, seg_end, seg_lt, seg_match, ev_match = [], [], [], [], []
    stop_rows, stop_u, stop_lgu, stop_match = [], [], [], []
    for m, d in enumerate(designs):
        for p in d.processes:
            seg_blocks.append((p.param_idx, p.seg_psi))
            seg_start.append(p.seg_start)
            seg_end.append(p.seg_end)
            lt_col = p.param_idx[p.log_time_pos] if p.log_time_pos >= 0 else -1
            seg_lt.append(np.full(len(p.seg_start), lt_col, dtype=np.intp))
            seg_match.append(np.full(len(p.seg_start), m, dtype=np.intp))
            ev_blocks.append((p.param_idx, p.ev_psi))
            ev_match.append(np.full(len(p.ev_times), m, dtype=np.intp))
        for s in d.stoppage:
            stop_rows.append((s.param_idx, s.phi.reshape(1, -1)))
            stop_u.append(s.u)
            stop_lgu.append(s.log_u_factorial)
            stop_match.append(m)

    def _cat(parts, dtype=float):
        return np.concatenate(parts) if parts else np.zeros(0, dtype=dtype)

    return StackedDesign(
        n_params=n_params,
        n_matches=len(designs),
        seg_psi=_coo(seg_blocks),
        seg_start=_cat(seg_start),
        seg_end=_cat(seg_end),
        seg_lt_col=_cat(seg_lt, np.intp).astype(np.intp),
        seg_match=_cat(seg_match, np.intp).astype(np.intp),
        ev_psi=_coo(ev_blocks),
        ev_match=_cat(ev_match, np.intp).astype(np.intp),
        stop_phi=_coo(stop_rows),
        stop_u=np.array(stop_u, dtype=float),
        stop_lgu=np.array(stop_lgu, dtype=float),
        stop_match=np.array(stop_match, dtype=np.intp),
    )
