"""Sparse recovery: LASSO via accelerated proximal gradient, debiased least
squares on a fixed support, and basis pursuit denoising by bisection on the
regularization path."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .config import RadarConfig, from_linear_index
from .operator import MeasurementOperator
from .signals import SignalSet
from .supports import SupportSet, TargetScene


class SingularSupportError(ValueError):
    """Support columns too ill-conditioned for least squares."""


class StepRule(Enum):
    POWER_ITERATION_LIPSCHITZ = "power_iteration"
    BACKTRACKING = "backtracking"


@dataclass(frozen=True)
class SolverOptions:
    max_iterations: int = 5000
    relative_tolerance: float = 1e-8
    step_rule: StepRule = StepRule.POWER_ITERATION_LIPSCHITZ
    # Multiplies lambda to give the KKT stopping tolerance.
    kkt_tolerance_factor: float = 1e-6
    lam: float = 0.0
    rho: float = 0.0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.relative_tolerance <= 0:
            raise ValueError("relative_tolerance must be positive")
        if self.kkt_tolerance_factor <= 0:
            raise ValueError("kkt_tolerance_factor must be positive")


@dataclass(frozen=True)
class SolverResult:
    x_hat: np.ndarray
    iterations: int
    final_objective: float
    residual_norm: float
    converged: bool
    recovered_support: SupportSet
    # Per-iteration objective values; populated when backtracking tracks them.
    objective_trace: tuple[float, ...] = ()


@dataclass(frozen=True)
class OptimalityReport:
    """KKT certificate for the l1-regularized least squares problem.

    off_support_residual: max over zero coordinates of |g| - lambda.
    on_support_residual: max over nonzeros of |g + lambda*sgn(x)|.
    Both nonpositive / below tolerance certifies optimality.
    """

    off_support_residual: float
    on_support_residual: float
    tolerance: float

    @property
    def verified(self) -> bool:
        return (
            self.off_support_residual <= self.tolerance
            and self.on_support_residual <= self.tolerance
        )


def soft_threshold(z: np.ndarray, t: float) -> np.ndarray:
    """Complex soft-thresholding: z -> sgn(z) * max(|z| - t, 0)."""
    mag = np.abs(z)
    scale = np.maximum(mag - t, 0.0)
    out = np.zeros_like(z)
    nz = mag > 0
    out[nz] = z[nz] * (scale[nz] / mag[nz])
    return out


def paper_lambda(cfg: RadarConfig, sigma: float) -> float:
    """Regularization level 2*sigma*sqrt(2 * N_T*N_R*N_t * ln N)."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    return 2.0 * sigma * math.sqrt(2.0 * cfg.scale * cfg.log_grid_size())


def _support_of(cfg: RadarConfig, x: np.ndarray, threshold: float = 0.0) -> SupportSet:
    idx = np.flatnonzero(np.abs(x) > threshold)
    return SupportSet(tuple(from_linear_index(cfg, int(k)) for k in idx))


def _objective(op: MeasurementOperator, y, x, lam, residual=None) -> float:
    if residual is None:
        residual = op.forward(x) - y
    return float(0.5 * np.vdot(residual, residual).real + lam * np.abs(x).sum())


def check_lasso_optimality(
    cfg: RadarConfig,
    sig: SignalSet,
    y: np.ndarray,
    lam: float,
    x_hat: np.ndarray,
    tolerance: float | None = None,
    operator: MeasurementOperator | None = None,
) -> OptimalityReport:
    op = operator if operator is not None else MeasurementOperator(cfg, sig)
    g = op.adjoint(op.forward(x_hat) - y)
    return _kkt_report(g, x_hat, lam, tolerance if tolerance is not None else 1e-6 * lam)


def _kkt_report(g, x_hat, lam, tolerance) -> OptimalityReport:
    on = np.abs(x_hat) > 0
    off_res = float(np.max(np.abs(g[~on]) - lam)) if np.any(~on) else -lam
    if np.any(on):
        signs = x_hat[on] / np.abs(x_hat[on])
        on_res = float(np.max(np.abs(g[on] + lam * signs)))
    else:
        on_res = 0.0
    return OptimalityReport(off_res, on_res, tolerance)


def lasso(
    cfg: RadarConfig,
    sig: SignalSet,
    y: np.ndarray,
    lam: float,
    opts: SolverOptions | None = None,
    operator: MeasurementOperator | None = None,
    x0: np.ndarray | None = None,
) -> SolverResult:
    """Minimize (1/2)||A z - y||_2^2 + lam*||z||_1 over complex z.

    FISTA with adaptive restart; stops once the KKT certificate holds at
    kkt_tolerance_factor * lam, with objective monotonicity enforced when
    backtracking is selected.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    opts = opts or SolverOptions()
    op = operator if operator is not None else MeasurementOperator(cfg, sig)
    y = np.asarray(y, dtype=np.complex128)
    kkt_tol = opts.kkt_tolerance_factor * lam

    norm_a = op.operator_norm()
    lipschitz = 1.05 * norm_a * norm_a
    if lipschitz == 0.0:
        lipschitz = 1.0
    backtracking = opts.step_rule is StepRule.BACKTRACKING

    x = np.zeros(cfg.grid_size, dtype=np.complex128) if x0 is None else x0.astype(np.complex128)
    z = x.copy()
    t = 1.0
    fx = _objective(op, y, x, lam)
    converged = False
    iterations = 0
    trace: list[float] = []

    for iterations in range(1, opts.max_iterations + 1):
        rz = op.forward(z) - y
        grad = op.adjoint(rz)
        if backtracking:
            fz = float(0.5 * np.vdot(rz, rz).real)
            for _ in range(64):
                cand = soft_threshold(z - grad / lipschitz, lam / lipschitz)
                diff = cand - z
                rc = op.forward(cand) - y
                quad = fz + np.vdot(grad, diff).real + 0.5 * lipschitz * np.vdot(diff, diff).real
                if 0.5 * np.vdot(rc, rc).real <= quad + 1e-12 * max(1.0, abs(quad)):
                    break
                lipschitz *= 2.0
            f_cand = float(0.5 * np.vdot(rc, rc).real + lam * np.abs(cand).sum())
            # Monotone safeguard: never let the objective increase.
            if f_cand > fx:
                x_next, f_next = x, fx
            else:
                x_next, f_next = cand, f_cand
        else:
            cand = soft_threshold(z - grad / lipschitz, lam / lipschitz)
            x_next = cand
            f_next = fx
        restart = np.vdot(z - cand, cand - x).real > 0
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        if backtracking:
            # Monotone-variant extrapolation keeps the accelerated rate even
            # when the safeguarded iterate stays put.
            z = x_next + (t / t_next) * (cand - x_next) + ((t - 1.0) / t_next) * (x_next - x)
        else:
            z = cand + ((t - 1.0) / t_next) * (cand - x)
        if restart:
            z = x_next.copy()
            t_next = 1.0
        step = float(np.linalg.norm(x_next - x))
        x, fx, t = x_next, f_next, t_next
        if backtracking:
            trace.append(fx)

        if iterations % 10 == 0 or step <= opts.relative_tolerance * max(
            1.0, float(np.linalg.norm(x))
        ):
            residual = op.forward(x) - y
            g = op.adjoint(residual)
            if _kkt_report(g, x, lam, kkt_tol).verified:
                converged = True
                break

    residual = op.forward(x) - y
    residual_norm = float(np.linalg.norm(residual))
    objective = float(0.5 * residual_norm**2 + lam * np.abs(x).sum())
    if not converged:
        converged = _kkt_report(op.adjoint(residual), x, lam, kkt_tol).verified
    return SolverResult(
        x_hat=x,
        iterations=iterations,
        final_objective=objective,
        residual_norm=residual_norm,
        converged=converged,
        recovered_support=_support_of(cfg, x),
        objective_trace=tuple(trace),
    )


def debias(
    cfg: RadarConfig,
    sig: SignalSet,
    y: np.ndarray,
    support: SupportSet,
    operator: MeasurementOperator | None = None,
) -> np.ndarray:
    """Least squares restricted to the support: (A_S* A_S)^{-1} A_S* y.

    Coefficients are returned in the order of ``support.indices``.
    """
    from .analysis import gram_closed_form

    if len(support) == 0:
        return np.zeros(0, dtype=np.complex128)
    op = operator if operator is not None else MeasurementOperator(cfg, sig)
    support.validate(cfg)
    # Scaled closed-form Gram; multiply back to the unscaled normal equations.
    gram = gram_closed_form(cfg, sig, support).gram * cfg.scale
    cond = np.linalg.cond(gram)
    if cond > 1e12:
        raise SingularSupportError(
            f"support Gram condition estimate {cond:.3e} exceeds 1e12"
        )
    cols = op.columns(support.indices)
    rhs = cols.conj().T @ y
    z = np.linalg.solve(gram, rhs)
    # One step of iterative refinement keeps the normal-equation residual small.
    z += np.linalg.solve(gram, rhs - gram @ z)
    return z


def basis_pursuit_denoise(
    cfg: RadarConfig,
    sig: SignalSet,
    y: np.ndarray,
    rho: float,
    opts: SolverOptions | None = None,
    operator: MeasurementOperator | None = None,
) -> SolverResult:
    """min ||z||_1 subject to ||A z - y||_2 <= rho, via bisection on lambda.

    The residual of the l1-regularized solution is nondecreasing in lambda,
    so a bracketing search over warm-started inner solves pins the residual to
    rho within max(1e-4*||y||, 1e-8); rho = 0 instead drives lambda down until
    the residual falls below 1e-6*||y||.
    """
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    opts = opts or SolverOptions()
    op = operator if operator is not None else MeasurementOperator(cfg, sig)
    y = np.asarray(y, dtype=np.complex128)
    y_norm = float(np.linalg.norm(y))
    if y_norm <= rho:
        zero = np.zeros(cfg.grid_size, dtype=np.complex128)
        return SolverResult(zero, 0, 0.0, y_norm, True, SupportSet(()))

    lam_max = float(np.max(np.abs(op.adjoint(y))))
    target_tol = max(1e-4 * y_norm, 1e-8)

    def solve_at(lam, warm):
        res = lasso(cfg, sig, y, lam, opts, operator=op, x0=warm)
        return res

    if rho == 0.0:
        lam = lam_max
        result = None
        warm = None
        for _ in range(60):
            lam *= 0.2
            result = solve_at(lam, warm)
            warm = result.x_hat
            if result.residual_norm <= 1e-6 * y_norm:
                break
        converged = result is not None and result.residual_norm <= 1e-6 * y_norm
        return replace(
            result,
            final_objective=float(np.abs(result.x_hat).sum()),
            converged=converged and result.converged,
        )

    hi, hi_res = lam_max, y_norm
    lo = lam_max
    lo_result = None
    for _ in range(60):
        lo *= 0.2
        lo_result = solve_at(lo, None if lo_result is None else lo_result.x_hat)
        if lo_result.residual_norm <= rho:
            break
    if lo_result is None or lo_result.residual_norm > rho:
        return replace(lo_result, converged=False) if lo_result else SolverResult(
            np.zeros(cfg.grid_size, dtype=np.complex128), 0, 0.0, y_norm, False, SupportSet(())
        )

    result = lo_result
    for _ in range(100):
        if abs(result.residual_norm - rho) <= target_tol:
            break
        mid = 0.5 * (lo + hi)
        result = solve_at(mid, result.x_hat)
        if result.residual_norm > rho:
            hi = mid
        else:
            lo = mid
            lo_result = result
    if abs(result.residual_norm - rho) > target_tol:
        # Fall back to the best feasible iterate found by the bracket.
        result = lo_result
    converged = abs(result.residual_norm - rho) <= target_tol and result.converged
    return replace(
        result, final_objective=float(np.abs(result.x_hat).sum()), converged=converged
    )


@dataclass(frozen=True)
class SuccessReport:
    success: bool
    max_error: float
    support_match: bool


def declare_success(
    cfg: RadarConfig, scene: TargetScene, x_hat: np.ndarray, threshold: float
) -> SuccessReport:
    """Success iff ||x - x_hat||_inf <= threshold; also reports whether hard
    thresholding x_hat at the same level recovers the true support exactly."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    x_true = scene.to_dense(cfg)
    max_err = float(np.max(np.abs(x_true - x_hat)))
    hard = np.flatnonzero(np.abs(x_hat) > threshold)
    true_supp = np.sort(scene.support.linear_indices(cfg))
    support_match = hard.size == true_supp.size and np.array_equal(np.sort(hard), true_supp)
    return SuccessReport(success=max_err <= threshold, max_error=max_err, support_match=support_match)
