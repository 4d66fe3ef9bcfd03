"""Scoring recovered maps against closed-form references, and the
parameter sweeps that track accuracy versus chain length and sample size.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .datasets import power_pair, reference_eval
from .local import SolverConfig
from .transport import GlobalConfig, apply_map, solve_transport, transport_cost

__all__ = [
    "MetricsReport",
    "SweepRow",
    "map_error_metrics",
    "feature_mean_gap",
    "evaluation_grid",
    "convergence_suite",
]


@dataclass
class MetricsReport:
    """Error summary of a transport map against a reference."""

    weighted_l2: float          # mean |T(x_i) - T*(x_i)|^2 over the source
    linf: float                 # max |T - T*| over the evaluation grid
    monotone_min_slope: float | None  # 1D: min forward-difference slope of T
    cost: float
    kl_final: float


def evaluation_grid(samples: np.ndarray, points: int = 400,
                    margin_stds: float = 0.5) -> np.ndarray:
    """Uniform 1D grid over [min - margin*std, max + margin*std] of the
    pooled samples; the tails beyond the sampled support carry no data to
    guide the map, so the grid is clipped rather than extended."""
    x = np.asarray(samples, dtype=float).ravel()
    std = float(x.std())
    lo, hi = float(x.min()) - margin_stds * std, float(x.max()) + margin_stds * std
    return np.linspace(lo, hi, points).reshape(-1, 1)


def map_error_metrics(composed, ref, X: np.ndarray, grid: np.ndarray,
                      cost: float | None = None,
                      kl_final: float = float("nan")) -> MetricsReport:
    """Weighted L2 over the source sample, sup-error over the grid, and
    (in 1D) the minimum forward-difference slope of the recovered map."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    TX = apply_map(composed, X)
    refX = np.atleast_2d(reference_eval(ref, X))
    wl2 = float(np.mean(np.sum((TX - refX) ** 2, axis=1)))
    Tg = apply_map(composed, grid)
    refg = np.atleast_2d(reference_eval(ref, grid))
    linf = float(np.max(np.sqrt(np.sum((Tg - refg) ** 2, axis=1))))
    slope = None
    if X.shape[1] == 1:
        order = np.argsort(grid[:, 0])
        gx, gy = grid[order, 0], Tg[order, 0]
        slope = float(np.min(np.diff(gy) / np.diff(gx)))
    if cost is None:
        cost = transport_cost(composed, X)
    return MetricsReport(weighted_l2=wl2, linf=linf, monotone_min_slope=slope,
                         cost=cost, kl_final=kl_final)


def feature_mean_gap(features: list, TX: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Vector of empirical-mean differences (1/n) sum f_k(TX) - (1/m) sum f_k(Y)."""
    TX = np.atleast_2d(np.asarray(TX, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    out = np.empty(len(features))
    for k, f in enumerate(features):
        value = f.value if hasattr(f, "value") else f
        out[k] = float(np.mean(value(TX)) - np.mean(value(Y)))
    return out


@dataclass
class SweepRow:
    param: int
    seed: int
    weighted_l2: float = float("nan")
    linf: float = float("nan")
    cost: float = float("nan")
    runtime_s: float = 0.0
    error: str = ""


def convergence_suite(kind: str, params: list, seeds: list,
                      epsilon: float = 0.25,
                      n_fixed: int = 500, K_fixed: int = 10,
                      base: GlobalConfig | None = None,
                      grid_points: int = 400) -> list:
    """Run the power-map benchmark over a parameter sweep.

    kind "steps": fixes n and varies the chain length over ``params``.
    kind "samples": fixes the chain length and varies n over ``params``.
    Individual cell failures are recorded in the row and the sweep
    continues.  Returns a list of SweepRow.
    """
    if not params or not seeds:
        raise ValueError("params and seeds must be nonempty")
    if kind not in ("steps", "samples"):
        raise ValueError("kind must be 'steps' or 'samples'")
    base = base or GlobalConfig()
    rows = []
    for p in params:
        for seed in seeds:
            n, K = (n_fixed, p) if kind == "steps" else (p, K_fixed)
            t0 = time.time()
            try:
                X, Y, ref = power_pair(n, epsilon, seed)
                cfg = GlobalConfig(
                    N=K, max_sweeps=base.max_sweeps, sweep_tol=base.sweep_tol,
                    pairing=base.pairing, local=base.local, seed=seed,
                    scale_form=base.scale_form,
                    potential_bumps=base.potential_bumps,
                    discriminator_bumps=base.discriminator_bumps,
                )
                result = solve_transport(X, Y, cfg)
                grid = evaluation_grid(np.vstack([X, Y]), points=grid_points)
                rep = map_error_metrics(result.composed, ref, X, grid,
                                        cost=result.cost, kl_final=result.kl_final)
                rows.append(SweepRow(param=p, seed=seed,
                                     weighted_l2=rep.weighted_l2, linf=rep.linf,
                                     cost=rep.cost, runtime_s=time.time() - t0))
            except (ValueError, RuntimeError) as exc:
                rows.append(SweepRow(param=p, seed=seed,
                                     runtime_s=time.time() - t0, error=str(exc)))
    return rows


def aggregate_rows(rows: list) -> list:
    """Mean of the finite metrics per parameter value, ordered by parameter."""
    out = []
    for p in sorted({r.param for r in rows}):
        group = [r for r in rows if r.param == p and not r.error]
        if not group:
            out.append(SweepRow(param=p, seed=-1, error="all cells failed"))
            continue
        out.append(SweepRow(
            param=p, seed=-1,
            weighted_l2=float(np.mean([r.weighted_l2 for r in group])),
            linf=float(np.mean([r.linf for r in group])),
            cost=float(np.mean([r.cost for r in group])),
            runtime_s=float(np.mean([r.runtime_s for r in group])),
        ))
    return out
