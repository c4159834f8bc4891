"""Command-line workflow: synth, fit, compare, simulate, forecast,
evaluate, replay, summarize and serve.

Exit codes: 0 success, 1 numerical failure, 2 usage error.  Every
stochastic command requires --seed; there is no silent nondeterminism.
Report commands write CSV and, unless --no-plots, PNG figures next to it.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import __version__
from .core import EventType, MatchDataError, MatchEvent, MatchRecord, MatchState, state_at_minute
from .data_io import (
    ArtifactError,
    Dataset,
    DatasetError,
    ModelArtifact,
    load_dataset,
    load_model,
    save_dataset,
    save_model,
    summarize_dataset,
)
from .estimator import EstimationError, FitOptions, fit, information_criteria, lrt, NotNestedError
from .forecaster import (
    DEFAULT_MINUTES,
    calibration_report,
    evaluable_matches,
    forecast,
    forecast_match,
    minute_by_minute,
)
from .regressors import ModelSpecError, make_named_model
from .simulator import SimulationModel, SimulationError, simulate_many, simulate_match
from .synthetic import generate_league


class NumericalFailure(click.ClickException):
    exit_code = 1


def _load_artifact(path: str) -> ModelArtifact:
    try:
        return load_model(path)
    except ArtifactError as exc:
        raise click.UsageError(str(exc))


def _parse_minutes(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip() != ""]
    except ValueError:
        raise click.UsageError(f"cannot parse minutes list {text!r}")


def _echo_kv(**kv) -> None:
    click.echo("  ".join(f"{k}={v}" for k, v in kv.items()))


@click.group()
@click.version_option(__version__)
def main() -> None:
    """Football event-intensity models: fit, simulate, forecast, serve."""


# ------------------------------------------------------------------ synth


@main.command()
@click.option("--out-matches", type=click.Path(dir_okay=False), required=True)
@click.option("--out-events", type=click.Path(dir_okay=False), required=True)
@click.option("--n-matches", type=int, default=3000, show_default=True)
@click.option("--seasons", type=int, default=8, show_default=True)
@click.option("--seed", type=int, required=True)
def synth(out_matches, out_events, n_matches, seasons, seed):
    """Generate a synthetic league from the built-in demo model."""
    ds = generate_league(n_matches, seed=seed, seasons=seasons)
    save_dataset(ds, out_matches, out_events)
    _echo_kv(matches=len(ds), teams=len(ds.teams), matches_file=out_matches, events_file=out_events)


# -------------------------------------------------------------------- fit


@main.command(name="fit")
@click.option("--matches", "matches_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--events", "events_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--model", "model_name", required=True, help="e.g. G4S5R, G0, S5, R")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--tol", type=float, default=1e-8, show_default=True)
@click.option("--max-iter", type=int, default=200, show_default=True)
@click.option("--bic-n", type=click.Choice(["matches", "events"]), default="matches", show_default=True)
def cmd_fit(matches_path, events_path, model_name, out, tol, max_iter, bic_n):
    """Fit a named model by constrained maximum likelihood."""
    try:
        ds = load_dataset(matches_path, events_path)
    except DatasetError as exc:
        raise click.UsageError(str(exc))
    try:
        spec = make_named_model(model_name, ds.teams)
    except ModelSpecError as exc:
        raise click.UsageError(str(exc))
    t0 = time.perf_counter()
    try:
        result = fit(ds.matches, spec, FitOptions(tol=tol, max_iter=max_iter))
    except (EstimationError, MatchDataError) as exc:
        raise NumericalFailure(str(exc))
    if not result.converged:
        raise NumericalFailure(
            f"did not converge in {result.iterations} iterations "
            f"(reduced gradient norm {result.gradient_norm:.3e})"
        )
    wall = time.perf_counter() - t0
    n_events = sum(len(m.events) for m in ds.matches)
    n = len(ds) if bic_n == "matches" else n_events
    comp = information_criteria([result], n=n)
    row = comp.rows[0]
    artifact = ModelArtifact(
        spec=spec,
        params=result.params,
        metadata={
            "dataset_hash": ds.content_hash(),
            "n_matches": len(ds),
            "n_events": n_events,
            "loglik": result.loglik,
            "aic": row.aic,
            "bic": row.bic,
            "bic_n": n,
            "iterations": result.iterations,
            "fitted_at": dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds"),
            "tool_version": __version__,
        },
    )
    save_model(artifact, out)
    _echo_kv(
        model=model_name,
        loglik=f"{result.loglik:.3f}",
        n_params=result.n_params,
        n_effective=result.n_effective,
        aic=f"{row.aic:.1f}",
        bic=f"{row.bic:.1f}",
        iterations=result.iterations,
        wall_time=f"{wall:.2f}s",
        out=out,
    )


# ---------------------------------------------------------------- compare


@main.command()
@click.option("--fits", type=click.Path(exists=True, dir_okay=False), multiple=True, required=True)
@click.option("--n-matches", type=int, default=None, help="BIC sample size; defaults to the artifacts' value")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="CSV output (default stdout)")
def compare(fits, n_matches, out):
    """Goodness-of-fit table: loglik, #params, AIC, BIC, LRT p-values."""
    arts = [_load_artifact(p) for p in fits]
    if n_matches is None:
        sizes = {a.metadata.get("n_matches") for a in arts}
        sizes.discard(None)
        if len(sizes) != 1:
            raise click.UsageError("--n-matches required (artifacts disagree or lack it)")
        n_matches = sizes.pop()

    class _Row:
        def __init__(self, art):
            self.name = art.name
            self.loglik = art.metadata["loglik"]
            self.n_params = art.spec.n_params
            from .estimator import null_space_basis

            _, z = null_space_basis(art.spec.constraints, art.spec.parameter_ids)
            self.n_effective = z.shape[1]

    rows = [_Row(a) for a in arts]
    comp = information_criteria(rows, n=n_matches)
    writer_target = open(out, "w", newline="", encoding="utf-8") if out else sys.stdout
    try:
        w = csv.writer(writer_target)
        w.writerow(["model", "loglik", "n_params", "aic", "bic", "lrt_vs", "lrt_statistic", "lrt_df", "lrt_p_value"])
        for r in comp.rows:
            w.writerow(
                [
                    r.name,
                    f"{r.loglik:.3f}",
                    r.n_params,
                    f"{r.aic:.2f}",
                    f"{r.bic:.2f}",
                    r.lrt_vs or "",
                    "" if r.lrt_statistic is None else f"{r.lrt_statistic:.4f}",
                    "" if r.lrt_df is None else r.lrt_df,
                    "" if r.lrt_p_value is None else f"{r.lrt_p_value:.3e}",
                ]
            )
    finally:
        if out:
            writer_target.close()
            click.echo(f"wrote {out}")


# --------------------------------------------------------------- simulate


def _state_from_doc(doc: dict) -> tuple[MatchState, dict]:
    """Build a conditioning MatchState from the --from-state JSON schema.

    Schema: {"minute": scoreboard minute, "events": [{"type", "half",
    "minute", "stoppage_offset"}...], "stoppage1": int|null,
    "stoppage2": int|null}.  Provided stoppage values are treated as
    announced.  Times always use (half, minute, offset), never clocks.
    """
    from .core import clock_time, scoreboard_to_clock, state_at_clock, TIE_EPS, _TIE_PRIORITY

    minute = float(doc.get("minute", 0))
    u1 = doc.get("stoppage1")
    u2 = doc.get("stoppage2")
    raw = []
    for e in doc.get("events", []):
        et = EventType(e["type"])
        t = clock_time(int(e["half"]), int(e["minute"]), int(e.get("stoppage_offset", 0)), u1)
        raw.append((et, t))
    raw.sort(key=lambda p: (p[1], _TIE_PRIORITY[p[0]]))
    pairs = []
    for et, t in raw:
        if pairs and t <= pairs[-1][1]:
            t = pairs[-1][1] + TIE_EPS
        pairs.append((et, t))
    u1_known = u1 if (u1 is not None) else None
    clock = scoreboard_to_clock(minute, u1_known) if minute > 45 else float(minute)
    state = state_at_clock(pairs, clock, u1_known, u2)
    return state, {"minute": minute}


@main.command()
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--home", required=True)
@click.option("--away", required=True)
@click.option("--values", required=True, help="home,away starting-11 values in MEUR, e.g. 42.5,28.0")
@click.option("--n", type=int, default=100_000, show_default=True)
@click.option("--seed", type=int, required=True)
@click.option("--from-state", "from_state", default=None, help="JSON string or @file with a mid-match state")
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="write JSON here instead of stdout")
@click.option("--scenario-log", type=click.Path(dir_okay=False), default=None, help="CSV event log (n <= 1000)")
def simulate(model_path, home, away, values, n, seed, from_state, workers, out, scenario_log):
    """Simulate a fixture and print the outcome distribution as JSON."""
    art = _load_artifact(model_path)
    try:
        hv, av = (float(x) for x in values.split(","))
    except ValueError:
        raise click.UsageError("--values must be 'home,away' numbers")
    state = MatchState()
    if from_state:
        text = Path(from_state[1:]).read_text() if from_state.startswith("@") else from_state
        state, _ = _state_from_doc(json.loads(text))
    try:
        sim = SimulationModel(art.spec, art.params, home, away, hv, av)
        dist = simulate_many(sim, state, n=n, seed=seed, workers=workers)
    except SimulationError as exc:
        raise NumericalFailure(str(exc))
    doc = dist.to_jsonable()
    doc["model"] = art.name
    doc["fixture"] = {"home": home, "away": away, "home_value": hv, "away_value": av}
    text = json.dumps(doc, indent=2)
    if out:
        Path(out).write_text(text + "\n")
        click.echo(f"wrote {out}")
    else:
        click.echo(text)
    if scenario_log:
        if n > 1000:
            raise click.UsageError("--scenario-log is limited to n <= 1000")
        with open(scenario_log, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["scenario", "clock_time", "event_type"])
            for i in range(n):
                scen = simulate_match(sim, state, seed=(seed, i))
                for t, et in scen.events:
                    w.writerow([i, f"{t:.4f}", et.value])
        click.echo(f"wrote {scenario_log}")


# --------------------------------------------------------------- forecast


@main.command(name="forecast")
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--match-state", "match_state", default=None, help="JSON string or @file")
@click.option("--matches", "matches_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--events", "events_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--match-id", default=None)
@click.option("--home", default=None)
@click.option("--away", default=None)
@click.option("--values", default=None)
@click.option("--minutes", default="0,15,30,45,60,75", show_default=True)
@click.option("--n", type=int, default=100_000, show_default=True)
@click.option("--seed", type=int, required=True)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def cmd_forecast(model_path, match_state, matches_path, events_path, match_id, home, away, values, minutes, n, seed, workers, out):
    """Forecast outcome distributions at the given scoreboard minutes.

    Either --match-state with --home/--away/--values, or a recorded
    match via --matches/--events/--match-id.
    """
    art = _load_artifact(model_path)
    minute_list = _parse_minutes(minutes)
    points = []
    try:
        if match_state is not None:
            if not (home and away and values):
                raise click.UsageError("--match-state needs --home, --away and --values")
            hv, av = (float(x) for x in values.split(","))
            doc = json.loads(
                Path(match_state[1:]).read_text() if match_state.startswith("@") else match_state
            )
            sim = SimulationModel(art.spec, art.params, home, away, hv, av)
            for gi, minute in enumerate(minute_list):
                doc2 = dict(doc)
                doc2["minute"] = minute
                state, _ = _state_from_doc(doc2)
                points.append(forecast(sim, state, n=n, seed=(seed, gi), match_id="adhoc", minute=minute, workers=workers))
        else:
            if not (matches_path and events_path and match_id):
                raise click.UsageError("need --match-state or (--matches, --events, --match-id)")
            ds = load_dataset(matches_path, events_path)
            match = ds.by_id(match_id)
            sim = SimulationModel(art.spec, art.params, match.home_team, match.away_team, match.home_value, match.away_value)
            for gi, minute in enumerate(minute_list):
                points.append(forecast_match(sim, match, minute, n=n, seed=(seed, gi), workers=workers))
    except (SimulationError, MatchDataError, DatasetError, KeyError) as exc:
        raise NumericalFailure(str(exc))
    doc = {
        "model": art.name,
        "n": n,
        "seed": seed,
        "forecasts": [
            {
                "minute": p.minute,
                "match_id": p.match_id,
                "cutoff": p.cutoff,
                **p.distribution.to_jsonable(),
            }
            for p in points
        ],
    }
    text = json.dumps(doc, indent=2)
    if out:
        Path(out).write_text(text + "\n")
        click.echo(f"wrote {out}")
    else:
        click.echo(text)


# --------------------------------------------------------------- evaluate


@main.command()
@click.option("--models", "model_paths", type=click.Path(exists=True, dir_okay=False), multiple=True, required=True)
@click.option("--matches", "matches_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--events", "events_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--minutes", default="0,15,30,45,60,75", show_default=True)
@click.option("--n", type=int, default=100_000, show_default=True)
@click.option("--seed", type=int, required=True)
@click.option("--out-dir", type=click.Path(file_okay=False), required=True)
@click.option("--min-prior", type=int, default=4, show_default=True, help="prior matches per team to evaluate")
@click.option("--all-matches", is_flag=True, help="skip the rolling-window eligibility filter")
@click.option("--max-matches", type=int, default=None, help="cap the evaluation set (for quick runs)")
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--plots/--no-plots", default=True, show_default=True)
def evaluate(model_paths, matches_path, events_path, minutes, n, seed, out_dir, min_prior, all_matches, max_matches, workers, plots):
    """Out-of-sample forecast evaluation: loglik curves and calibration tables."""
    arts = [_load_artifact(p) for p in model_paths]
    names = [a.name for a in arts]
    if len(set(names)) != len(names):
        raise click.UsageError("duplicate model names among --models")
    try:
        ds = load_dataset(matches_path, events_path)
    except DatasetError as exc:
        raise click.UsageError(str(exc))
    pool = list(ds.matches) if all_matches else evaluable_matches(ds.matches, min_prior=min_prior)
    if max_matches is not None:
        pool = pool[:max_matches]
    if not pool:
        raise NumericalFailure("no evaluable matches after the rolling-window filter")
    minute_list = _parse_minutes(minutes)
    outp = Path(out_dir)
    outp.mkdir(parents=True, exist_ok=True)

    try:
        report = calibration_report(
            {a.name: (a.spec, a.params) for a in arts},
            pool,
            minutes=minute_list,
            n=n,
            seed=seed,
            workers=workers,
        )
    except (SimulationError, MatchDataError) as exc:
        raise NumericalFailure(str(exc))

    baseline = names[0]
    for mode, ll in (("results", report.result_loglik), ("scores", report.score_loglik)):
        path = outp / f"loglik_{mode}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["minute"] + [f"{nm}" for nm in names] + [f"{nm}_minus_{baseline}" for nm in names])
            for minute in minute_list:
                vals = [ll[(nm, minute)] for nm in names]
                base = ll[(baseline, minute)]
                w.writerow([minute] + [f"{v:.6f}" for v in vals] + [f"{v - base:.6f}" for v in vals])
        if plots:
            from .plots import save_loglik_curves

            series = {nm: [ll[(nm, minute)] for minute in minute_list] for nm in names}
            save_loglik_curves(
                minute_list, series, baseline, outp / f"loglik_{mode}.png",
                f"Mean {mode} log-likelihood differences (K={report.n_matches}, n={n})",
            )

    def _write_table(tag: str, tables: dict):
        for minute, table in tables.items():
            path = outp / f"calibration_{tag}_m{minute:g}.csv"
            with open(path, "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh)
                w.writerow(["row"] + [str(c) for c in table.columns])
                w.writerow(["observed"] + [f"{v:.4f}" for v in table.observed])
                for nm in names:
                    w.writerow([nm] + [f"{v:+.4f}" for v in table.differences[nm]])

    _write_table("results", report.result_tables)
    _write_table("home_goals", report.home_goal_tables)
    _write_table("away_goals", report.away_goal_tables)
    _echo_kv(matches=report.n_matches, models=",".join(names), out_dir=str(outp))


# ----------------------------------------------------------------- replay


@main.command()
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--matches", "matches_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--events", "events_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--match-id", required=True)
@click.option("--step", type=float, default=1.0, show_default=True)
@click.option("--n", type=int, default=100_000, show_default=True)
@click.option("--seed", type=int, required=True)
@click.option("--out-dir", type=click.Path(file_okay=False), required=True)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--plots/--no-plots", default=True, show_default=True)
def replay(model_path, matches_path, events_path, match_id, step, n, seed, out_dir, workers, plots):
    """Minute-by-minute forecast trajectory of one recorded match."""
    art = _load_artifact(model_path)
    try:
        ds = load_dataset(matches_path, events_path)
        match = ds.by_id(match_id)
    except (DatasetError, KeyError) as exc:
        raise click.UsageError(str(exc))
    sim = SimulationModel(art.spec, art.params, match.home_team, match.away_team, match.home_value, match.away_value)
    try:
        points = minute_by_minute(sim, match, step=step, n=n, seed=seed, workers=workers)
    except (SimulationError, MatchDataError) as exc:
        raise NumericalFailure(str(exc))
    outp = Path(out_dir)
    outp.mkdir(parents=True, exist_ok=True)
    path = outp / f"replay_{match_id}.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        header = ["minute", "p_home_win", "p_draw", "p_away_win", "eg_home", "eg_away"]
        for k in range(1, 6):
            header += [f"top{k}_score", f"top{k}_prob"]
        w.writerow(header)
        for p in points:
            row = [
                f"{p.minute:g}",
                f"{p.result_probs['home_win']:.5f}",
                f"{p.result_probs['draw']:.5f}",
                f"{p.result_probs['away_win']:.5f}",
                f"{p.expected_goals[0]:.4f}",
                f"{p.expected_goals[1]:.4f}",
            ]
            for score, prob in p.top_scores[:5]:
                row += [f"{score[0]}-{score[1]}", f"{prob:.5f}"]
            row += [""] * (len(header) - len(row))
            w.writerow(row)
    click.echo(f"wrote {path}")
    if plots:
        from .plots import save_trajectory

        png = outp / f"replay_{match_id}.png"
        save_trajectory(points, match, png)
        click.echo(f"wrote {png}")


# -------------------------------------------------------------- summarize


@main.command()
@click.option("--matches", "matches_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--events", "events_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out-dir", type=click.Path(file_okay=False), required=True)
@click.option("--plots/--no-plots", default=True, show_default=True)
def summarize(matches_path, events_path, out_dir, plots):
    """Descriptive dataset statistics as CSV (+ histogram figures)."""
    try:
        ds = load_dataset(matches_path, events_path)
    except DatasetError as exc:
        raise click.UsageError(str(exc))
    summary = summarize_dataset(ds)
    outp = Path(out_dir)
    outp.mkdir(parents=True, exist_ok=True)
    with open(outp / "summary_rates.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["minute", "goal_rate", "red_rate"])
        for m, g, r in zip(summary["minutes"], summary["goal_rate"], summary["red_rate"]):
            w.writerow([m, f"{g:.6f}", f"{r:.6f}"])
    with open(outp / "summary_stoppage.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["minutes", "half1_matches", "half2_matches"])
        h1, h2 = summary["stoppage1_hist"], summary["stoppage2_hist"]
        for i in range(max(len(h1), len(h2))):
            w.writerow([i, h1[i] if i < len(h1) else 0, h2[i] if i < len(h2) else 0])
    with open(outp / "summary_scores.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["score", "share"])
        for (h, a), share in summary["score_hist"]:
            w.writerow([f"{h}-{a}", f"{share:.5f}"])
    if plots:
        from .plots import save_summary_figures

        for p in save_summary_figures(summary, outp):
            click.echo(f"wrote {p}")
    _echo_kv(matches=summary["n_matches"], out_dir=str(outp))


# ------------------------------------------------------------------ serve


@main.command()
@click.option("--model", "model_paths", type=click.Path(exists=True, dir_okay=False), multiple=True, required=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--default-n", type=int, default=20_000, show_default=True)
@click.option("--session-log-dir", type=click.Path(file_okay=False), default=None)
def serve(model_paths, host, port, default_n, session_log_dir):
    """Serve live match sessions over HTTP."""
    import uvicorn

    from .service import create_app

    arts = [_load_artifact(p) for p in model_paths]
    app = create_app(
        {a.name: a for a in arts},
        default_n=default_n,
        log_dir=Path(session_log_dir) if session_log_dir else None,
    )
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
