"""Semismooth Newton for piecewise-polynomial equations and a subgradient
method driven by generalized-derivative oracles.

The Newton step inverts one deterministic element of the generalized
Jacobian (lexicographically minimal vertex of the Clarke polytope, or the
branch selection); near-singular selections are damped diagonally on a
fixed schedule. Rate estimates quantify the superlinear convergence that
the semismoothness conditions certify.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Polytope
from .oracles import GeneralizedDerivative
from .piecewise import PiecewiseFunction


@dataclass(frozen=True)
class NewtonConfig:
    tol: float = 1e-12
    max_iter: int = 100
    det_tol: float = 1e-12
    damp_init: float = 1e-8
    damp_max: float = 1e-2
    step_max: float = 1e6   # damped steps beyond this are a stall, not progress


@dataclass(frozen=True, eq=False)
class NewtonTrace:
    iterates: tuple[np.ndarray, ...]
    residual_norms: tuple[float, ...]
    jacobians: tuple[np.ndarray, ...]
    status: str   # converged / max_iter / singular_stall
    damping_log: tuple[str, ...] = ()

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def solution(self) -> np.ndarray:
        return self.iterates[-1]


def _jacobian_from_oracle(D: GeneralizedDerivative, x: np.ndarray) -> np.ndarray:
    """Assemble a matrix column-by-column from a singleton oracle."""
    n = D.input_dim
    cols = []
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        img = D(x, e)
        if img.diameter() > 1e-9:
            raise ValueError(
                f"oracle {D.name!r} is set-valued at {x}; cannot assemble a Jacobian")
        cols.append(img.vertices[0])
    return np.column_stack(cols)


def _select_jacobian(F: PiecewiseFunction, source, x: np.ndarray) -> np.ndarray:
    if source == "clarke":
        return F.clarke_jacobian(x).lex_min_vertex()
    if source == "branch":
        sign = F.adjacent_full_signs(x)[0]
        return F.piece_jacobian(sign, x)
    if isinstance(source, GeneralizedDerivative):
        return _jacobian_from_oracle(source, x)
    raise ValueError(f"unknown jacobian source {source!r}")


def semismooth_newton(F: PiecewiseFunction, jacobian_source, x0,
                      cfg: NewtonConfig = NewtonConfig()) -> NewtonTrace:
    """Newton iteration x+ = x - A(x)^{-1} F(x) on a square piecewise map.

    A(x) is the selected generalized Jacobian. When |det A| < det_tol the
    matrix is damped as A + lambda*I with lambda doubling from damp_init up
    to damp_max; if no lambda restores invertibility, or the damped step is
    absurdly long (flat singular pieces), the run stops as singular_stall.
    """
    if F.output_dim != F.ambient_dim:
        raise ValueError("semismooth Newton needs a square system (m = n)")
    x = np.asarray(x0, dtype=float).copy()
    iterates = [x.copy()]
    jacobians: list[np.ndarray] = []
    damping_log: list[str] = []
    residuals = [float(np.linalg.norm(F.value(x)))]
    status = "max_iter"
    for k in range(cfg.max_iter):
        if residuals[-1] <= cfg.tol:
            status = "converged"
            break
        A = _select_jacobian(F, jacobian_source, x)
        damped = False
        if abs(float(np.linalg.det(A))) < cfg.det_tol:
            lam = cfg.damp_init
            ok = False
            while lam <= cfg.damp_max * (1 + 1e-12):
                if abs(float(np.linalg.det(A + lam * np.eye(A.shape[0])))) >= cfg.det_tol:
                    damping_log.append(f"k={k} lambda={lam:g}")
                    A = A + lam * np.eye(A.shape[0])
                    ok = True
                    damped = True
                    break
                lam *= 2.0
            if not ok:
                status = "singular_stall"
                damping_log.append(f"k={k} damping exhausted at lambda={cfg.damp_max:g}")
                jacobians.append(A)
                break
        step = np.linalg.solve(A, F.value(x))
        if damped and float(np.linalg.norm(step)) > cfg.step_max:
            status = "singular_stall"
            damping_log.append(
                f"k={k} damped step length {float(np.linalg.norm(step)):.3g} "
                f"exceeds {cfg.step_max:g}")
            jacobians.append(A)
            break
        x = x - step
        iterates.append(x.copy())
        jacobians.append(A)
        residuals.append(float(np.linalg.norm(F.value(x))))
    else:
        if residuals[-1] <= cfg.tol:
            status = "converged"
    return NewtonTrace(tuple(iterates), tuple(residuals), tuple(jacobians),
                       status, tuple(damping_log))


def newton_rate_estimate(trace: NewtonTrace, root=None,
                         tol: float = 1e-12) -> list[float]:
    """Error contraction ratios e_{k+1}/e_k with e_k = ||x_k - x*||.

    x* defaults to the final iterate (self-referential estimate); pass the
    known root when available. Ratios are reported only where e_k exceeds
    100*tol, below which the estimate is noise.
    """
    xs = trace.iterates
    if len(xs) < 3 and root is None:
        return []
    xstar = np.asarray(root, dtype=float) if root is not None else xs[-1]
    errs = [float(np.linalg.norm(x - xstar)) for x in xs]
    ratios = []
    for k in range(len(errs) - 1):
        if errs[k] > 100.0 * tol:
            ratios.append(errs[k + 1] / errs[k])
    return ratios


# ---------------------------------------------------------------------------
# subgradient descent

@dataclass(frozen=True, eq=False)
class SubgradientTrace:
    iterates: tuple[np.ndarray, ...]
    values: tuple[float, ...]
    subgradients: tuple[np.ndarray, ...]
    step_sizes: tuple[float, ...]

    @property
    def best_value(self) -> float:
        return min(self.values)

    @property
    def best_point(self) -> np.ndarray:
        return self.iterates[int(np.argmin(self.values))]


def step_size(rule: str, c: float, k: int) -> float:
    """k is 1-based. Rules: constant | one_over_k | c_over_sqrt_k."""
    if rule == "constant":
        return c
    if rule == "one_over_k":
        return 1.0 / k
    if rule == "c_over_sqrt_k":
        return c / np.sqrt(k)
    raise ValueError(f"unknown step rule {rule!r}")


def subgradient_descent(f: PiecewiseFunction, grad_source, x0,
                        rule: str = "one_over_k", c: float = 1.0,
                        iters: int = 200) -> SubgradientTrace:
    """x+ = x - alpha_k g_k for a scalar objective.

    g_k is the lexicographically minimal Clarke subgradient when
    grad_source == "clarke", or the singleton value of a generalized
    derivative oracle assembled coordinate-wise.
    """
    if f.output_dim != 1:
        raise ValueError("subgradient descent needs a scalar objective")
    x = np.asarray(x0, dtype=float).copy()
    iterates = [x.copy()]
    values = [float(f.value(x)[0])]
    grads: list[np.ndarray] = []
    steps: list[float] = []
    for k in range(1, iters + 1):
        if grad_source == "clarke":
            sub = f.component_clarke(x, 1)
            g = min((tuple(v) for v in sub.vertices))
            g = np.asarray(g, dtype=float)
        elif isinstance(grad_source, GeneralizedDerivative):
            g = _jacobian_from_oracle(grad_source, x)[0]
        else:
            raise ValueError(f"unknown gradient source {grad_source!r}")
        alpha = step_size(rule, c, k)
        x = x - alpha * g
        iterates.append(x.copy())
        values.append(float(f.value(x)[0]))
        grads.append(g)
        steps.append(alpha)
    return SubgradientTrace(tuple(iterates), tuple(values), tuple(grads),
                            tuple(steps))


def grid_minimize(f: PiecewiseFunction, lo, hi, resolution: float = 1e-3,
                  chunk: int = 200_000) -> tuple[np.ndarray, float]:
    """Brute-force grid search for the minimizer of a scalar objective.

    Independent of the descent path: evaluates every grid node of the box
    at the given resolution (piece selected per node by sign compatibility).
    """
    if f.output_dim != 1:
        raise ValueError("grid search needs a scalar objective")
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    axes = [np.arange(l, h + resolution / 2, resolution) for l, h in zip(lo, hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([m.ravel() for m in mesh])
    best_val, best_pt = np.inf, None
    arr = f.arrangement
    full_signs = [s for s in arr.full_dim_signs() if s in f.pieces]
    for start in range(0, pts.shape[0], chunk):
        block = pts[start:start + chunk]
        vals = np.full(block.shape[0], np.inf)
        if arr.k:
            resid = block @ arr.normals.T - arr.offsets
        else:
            resid = np.zeros((block.shape[0], 0))
        for sign in full_signs:
            mask = np.ones(block.shape[0], dtype=bool)
            for i, ch in enumerate(sign):
                if ch == "+":
                    mask &= resid[:, i] >= -1e-12
                else:
                    mask &= resid[:, i] <= 1e-12
            if not np.any(mask):
                continue
            vals[mask] = f.pieces[sign][0].eval_many(block[mask])
        idx = int(np.argmin(vals))
        if vals[idx] < best_val:
            best_val = float(vals[idx])
            best_pt = block[idx].copy()
    return best_pt, best_val
