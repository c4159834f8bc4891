"""Constrained maximum-likelihood fitting and model comparison.

Linear equality constraints are eliminated by a null-space
parameterization xi = x0 + Z y, and the concave log-likelihood is
maximized over y by Newton's method with Armijo backtracking.  Because
the objective is concave, any stationary point is a global maximum; a
singular reduced Hessian signals linearly dependent regressors
(a non-identifiable model) rather than a numerical accident.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.stats import chi2

from .core import MatchRecord
from .design import SegmentedDesign, stack_designs, build_design
from .likelihood import full_loglik
from .regressors import (
    LinearConstraint,
    ModelSpec,
    ParameterVector,
    is_nested,
    nested_predecessor,
)


class EstimationError(RuntimeError):
    pass


class NonIdentifiableError(EstimationError):
    """Regressors linearly dependent on the data; add constraints."""


class DivergenceError(EstimationError):
    """The likelihood is unbounded above (degenerate data)."""


class InconsistentConstraintsError(EstimationError):
    pass


def null_space_basis(
    constraints: Sequence[LinearConstraint], parameter_ids: Sequence[str]
) -> tuple[np.ndarray, np.ndarray]:
    """Particular solution and orthonormal null-space basis of C xi = d.

    Every xi = x0 + Z y satisfies all constraints; Z has
    dim - rank(C) orthonormal columns.
    """
    dim = len(parameter_ids)
    index = {pid: i for i, pid in enumerate(parameter_ids)}
    if not constraints:
        return np.zeros(dim), np.eye(dim)
    c_mat = np.zeros((len(constraints), dim))
    d = np.zeros(len(constraints))
    for r, con in enumerate(constraints):
        for pid, coeff in con.coefficients.items():
            c_mat[r, index[pid]] = coeff
        d[r] = con.rhs
    u, s, vt = np.linalg.svd(c_mat)
    tol = max(c_mat.shape) * np.finfo(float).eps * (s[0] if len(s) else 0.0)
    rank = int(np.sum(s > tol))
    x0, _, _, _ = np.linalg.lstsq(c_mat, d, rcond=None)
    scale = max(1.0, float(np.abs(d).max()) if len(d) else 1.0)
    if np.max(np.abs(c_mat @ x0 - d)) > 1e-9 * scale:
        raise InconsistentConstraintsError("constraint rows are inconsistent")
    z = vt[rank:].T
    return x0, z


@dataclass
class FitOptions:
    tol: float = 1e-8  # infinity norm of the reduced gradient
    max_iter: int = 200
    armijo_c: float = 1e-4
    divergence_bound: float = 100.0  # |xi|_inf beyond this means unbounded ML
    singular_rtol: float = 1e-14  # relative eigenvalue below this: not identifiable
    max_condition: float = 1e12  # beyond this, fall back to steepest ascent


@dataclass
class FitResult:
    name: str
    params: ParameterVector
    loglik: float
    n_params: int
    n_effective: int
    gradient_norm: float
    iterations: int
    converged: bool
    constraint_residuals: np.ndarray
    wall_time: float = 0.0
    n_matches: int = 0


def fit(
    dataset: Sequence[MatchRecord] | Sequence[SegmentedDesign],
    spec: ModelSpec,
    options: Optional[FitOptions] = None,
) -> FitResult:
    """Maximize the model log-likelihood over a dataset."""
    opts = options or FitOptions()
    items = list(dataset)
    if not items:
        raise EstimationError("cannot fit on an empty dataset")
    if isinstance(items[0], SegmentedDesign):
        designs = items
    else:
        designs = [build_design(m, spec) for m in items]
    stacked = stack_designs(designs)
    if stacked.n_params != spec.n_params:
        raise EstimationError("designs do not match the model specification")
    _check_divergent_support(designs, spec)

    x0, z = null_space_basis(spec.constraints, spec.parameter_ids)
    n_eff = z.shape[1]
    t_start = time.perf_counter()

    y = np.zeros(n_eff)
    xi = x0 + z @ y
    res = full_loglik(stacked, xi, want_hessian=True)
    value = res.value
    iterations = 0
    converged = False
    grad_norm = math.inf

    for iterations in range(1, opts.max_iter + 1):
        g_red = z.T @ res.gradient
        grad_norm = float(np.max(np.abs(g_red))) if n_eff else 0.0
        if grad_norm < opts.tol:
            converged = True
            iterations -= 1
            break
        h_red = z.T @ res.hessian @ z
        h_red = 0.5 * (h_red + h_red.T)
        eigvals, eigvecs = np.linalg.eigh(h_red)
        lam = -eigvals  # concavity: these should all be positive
        lam_max = float(np.max(lam))
        rel = float(np.min(lam)) / lam_max if lam_max > 0 else -1.0
        if rel < opts.singular_rtol:
            # A zero-curvature direction of a concave function is a flat
            # direction: regressors linearly dependent on the data.
            raise NonIdentifiableError(
                f"model {spec.name!r}: reduced Hessian is singular; regressors are "
                "linearly dependent on this data (add constraints or drop regressors)"
            )
        if rel < 1.0 / opts.max_condition:
            step = g_red / lam_max  # ill-conditioned Newton system: steepest ascent
        else:
            step = eigvecs @ ((eigvecs.T @ g_red) / lam)
        slope = float(g_red @ step)  # > 0 for an ascent direction
        t = 1.0
        while True:
            y_new = y + t * step
            xi_new = x0 + z @ y_new
            res_new = full_loglik(stacked, xi_new, want_hessian=True)
            if res_new.value >= value + opts.armijo_c * t * slope:
                break
            t *= 0.5
            if t < 1e-14:
                raise EstimationError("line search failed; likelihood not improvable")
        y, xi, res, value = y_new, xi_new, res_new, res_new.value
        if np.max(np.abs(xi)) > opts.divergence_bound:
            raise DivergenceError(
                "parameters diverging; the likelihood appears unbounded above "
                "(e.g. an event type never observed with a free constant)"
            )
    else:
        iterations = opts.max_iter
        g_red = z.T @ res.gradient
        grad_norm = float(np.max(np.abs(g_red))) if n_eff else 0.0
        converged = grad_norm < opts.tol

    residuals = _constraint_residuals(spec.constraints, spec.parameter_ids, xi)
    return FitResult(
        name=spec.name,
        params=ParameterVector(spec.parameter_ids, xi),
        loglik=value,
        n_params=spec.n_params,
        n_effective=n_eff,
        gradient_norm=grad_norm,
        iterations=iterations,
        converged=converged,
        constraint_residuals=residuals,
        wall_time=time.perf_counter() - t_start,
        n_matches=stacked.n_matches,
    )


def _check_divergent_support(designs: Sequence[SegmentedDesign], spec: ModelSpec) -> None:
    """Refuse fits whose maximizer sits at infinity.

    A modelled event process never observed in the data (or a stoppage
    half with zero total minutes) drives any parameter exclusive to it
    to -inf: the likelihood is maximized in the limit, never attained.
    """
    eventful: set[str] = set()
    empty: dict[str, set[str]] = {}
    proc_params = {
        et: {s.parameter_id for s in spec.process_regressors(et)} for et in spec.event_processes
    }
    ev_counts = {et: 0 for et in spec.event_processes}
    stop_params = {
        h: {s.parameter_id for s in spec.stoppage_regressors[h]} for h in spec.stoppage_halves
    }
    stop_totals = {h: 0 for h in spec.stoppage_halves}
    for d in designs:
        for p in d.processes:
            ev_counts[p.event_type] += len(p.ev_times)
        for s in d.stoppage:
            stop_totals[s.half] += s.u
    for et, count in ev_counts.items():
        if count:
            eventful |= proc_params[et]
        else:
            empty[et.value] = proc_params[et]
    for h, total in stop_totals.items():
        if total:
            eventful |= stop_params[h]
        else:
            empty[f"stoppage half {h}"] = stop_params[h]
    for label, params in empty.items():
        exclusive = params - eventful
        if exclusive:
            raise DivergenceError(
                f"no observations for {label}: parameters {sorted(exclusive)} have their "
                "maximum-likelihood value at -infinity (degenerate data)"
            )


def _constraint_residuals(
    constraints: Sequence[LinearConstraint], ids: Sequence[str], xi: np.ndarray
) -> np.ndarray:
    index = {pid: i for i, pid in enumerate(ids)}
    out = np.zeros(len(constraints))
    for r, con in enumerate(constraints):
        out[r] = sum(coeff * xi[index[pid]] for pid, coeff in con.coefficients.items()) - con.rhs
    return out


# --------------------------------------------------------------------------
# Information criteria and likelihood-ratio tests


@dataclass
class ComparisonRow:
    name: str
    loglik: float
    n_params: int
    aic: float
    bic: float
    lrt_vs: Optional[str] = None
    lrt_statistic: Optional[float] = None
    lrt_df: Optional[int] = None
    lrt_p_value: Optional[float] = None


@dataclass
class ModelComparison:
    rows: list[ComparisonRow]
    n: int  # sample size used by BIC

    def row(self, name: str) -> ComparisonRow:
        return next(r for r in self.rows if r.name == name)


class NotNestedError(ValueError):
    pass


def lrt(small, big) -> tuple[float, int, float]:
    """Likelihood-ratio test statistic, df and p-value for a nested pair."""
    if not is_nested(small.name, big.name):
        raise NotNestedError(
            f"{small.name!r} is not nested in {big.name!r}; the likelihood-ratio "
            "test is undefined for this pair"
        )
    stat = 2.0 * (big.loglik - small.loglik)
    df = big.n_effective - small.n_effective
    if df == 0:
        return max(stat, 0.0), 0, 1.0
    p = float(chi2.sf(max(stat, 0.0), df))
    return stat, df, p


def information_criteria(fits: Sequence, n: int) -> ModelComparison:
    """AIC/BIC table with LRT against each model's declared predecessor.

    ``n`` is the BIC sample size (number of matches by convention here;
    configurable because the convention is not settled).
    """
    by_name = {f.name: f for f in fits}
    rows = []
    for f in fits:
        aic = 2.0 * f.n_params - 2.0 * f.loglik
        bic = math.log(n) * f.n_params - 2.0 * f.loglik
        row = ComparisonRow(name=f.name, loglik=f.loglik, n_params=f.n_params, aic=aic, bic=bic)
        small = _reference_model(f, fits)
        if small is not None:
            stat, df, p = lrt(small, f)
            row.lrt_vs, row.lrt_statistic, row.lrt_df, row.lrt_p_value = small.name, stat, df, p
        rows.append(row)
    return ModelComparison(rows=rows, n=n)


def _reference_model(f, fits):
    """The model to test f against: its declared predecessor when present,
    otherwise the largest strictly-nested model among the fits."""
    if not _parseable(f.name):
        return None
    by_name = {g.name: g for g in fits}
    pred = nested_predecessor(f.name)
    if pred and pred in by_name:
        return by_name[pred]
    nested = [
        g
        for g in fits
        if g.name != f.name
        and _parseable(g.name)
        and is_nested(g.name, f.name)
        and g.n_effective < f.n_effective
    ]
    if not nested:
        return None
    return max(nested, key=lambda g: g.n_effective)


def _parseable(name: str) -> bool:
    from .regressors import parse_model_name, ModelSpecError

    try:
        parse_model_name(name)
        return True
    except ModelSpecError:
        return False
