"""Seeded Monte Carlo harness: success probability of LASSO support recovery
as a function of sparsity and support balancedness."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .config import DopplerMode, RadarConfig
from .operator import MeasurementOperator
from .signals import SignalFamily, complex_gaussian, derived_rng, generate_signals
from .solvers import (
    SolverOptions,
    basis_pursuit_denoise,
    declare_success,
    lasso,
    paper_lambda,
)
from .supports import (
    ParameterError,
    make_scene,
    sample_balanced_support,
    sample_most_balanced_support,
    sample_unconstrained_support,
    threshold_amplitude,
)

FREE = None  # eta entry for unconstrained supports
NEAR = "near"  # eta entry for the most balanced support a sparsity admits


class ThresholdRule(Enum):
    HALF_AMPLITUDE = "half_amplitude"
    FIXED = "fixed"


@dataclass(frozen=True)
class ExperimentSpec:
    cfg: RadarConfig
    family: SignalFamily = SignalFamily.COMPLEX_GAUSSIAN
    sigma: float = 1.0
    sparsity_grid: tuple[int, ...] = ()
    eta_list: tuple[int | str | None, ...] = (1,)
    trials: int = 200
    master_seed: int = 0
    threshold_rule: ThresholdRule = ThresholdRule.HALF_AMPLITUDE
    fixed_threshold: float = 0.0
    solver_options: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if not self.sparsity_grid:
            raise ValueError("sparsity_grid must be nonempty")
        if any(b <= a for a, b in zip(self.sparsity_grid, self.sparsity_grid[1:])):
            raise ValueError("sparsity_grid must be strictly increasing")
        if self.threshold_rule is ThresholdRule.FIXED and self.fixed_threshold <= 0:
            raise ValueError("fixed threshold must be positive")
        for eta in self.eta_list:
            for s in self.sparsity_grid:
                self._check_feasible(s, eta)

    def _check_feasible(self, s: int, eta: int | str | None) -> None:
        if eta is None:
            if s > self.cfg.grid_size:
                raise ParameterError(f"sparsity {s} exceeds grid size")
            return
        if eta == NEAR:
            sample_most_balanced_support(self.cfg, s, seed=0)
            return
        # Dry-run the balanced sampler's divisibility/capacity rules.
        sample_balanced_support(self.cfg, s, eta, seed=0)

    def scene_amplitude(self) -> float:
        """Noise-threshold magnitude; unit magnitude in the noiseless case."""
        if self.sigma == 0.0:
            return 1.0
        return threshold_amplitude(self.cfg, self.sigma)

    def success_threshold(self) -> float:
        if self.threshold_rule is ThresholdRule.FIXED:
            return self.fixed_threshold
        return 0.5 * self.scene_amplitude()


@dataclass(frozen=True)
class TrialRecord:
    s: int
    eta: int | str | None
    trial_index: int
    success: bool
    converged: bool
    iterations: int


@dataclass(frozen=True)
class ResultRow:
    s: int
    eta: int | str | None
    trials: int
    successes: int
    success_rate: float
    mean_iterations: float
    wall_time: float


@dataclass(frozen=True)
class ExperimentResult:
    spec: ExperimentSpec
    rows: tuple[ResultRow, ...]


def _eta_tag(eta: int | str | None) -> str:
    return "free" if eta is None else str(eta)


def run_trial(spec: ExperimentSpec, s: int, eta: int | str | None, trial_index: int) -> TrialRecord:
    """One draw of signals, support, scene, and noise, followed by a LASSO solve.

    All randomness is derived from (master_seed, s, eta, trial_index), so any
    trial can be reproduced in isolation.
    """
    cfg = spec.cfg
    stream = derived_rng(spec.master_seed, "trial", s, _eta_tag(eta), trial_index)
    sub_seeds = stream.integers(0, 2**63, size=3)
    sig = generate_signals(cfg, spec.family, int(sub_seeds[0]))
    if eta is None:
        support = sample_unconstrained_support(cfg, s, int(sub_seeds[1]))
    elif eta == NEAR:
        support = sample_most_balanced_support(cfg, s, int(sub_seeds[1]))
    else:
        support = sample_balanced_support(cfg, s, eta, int(sub_seeds[1]))
    scene = make_scene(cfg, support, spec.scene_amplitude(), int(sub_seeds[2]))
    op = MeasurementOperator(cfg, sig)
    noise = spec.sigma * complex_gaussian(stream, (cfg.n_measurements,))
    y = op.forward(scene) + noise
    if spec.sigma == 0.0:
        # Noiseless run: equality-constrained basis pursuit instead of a
        # LASSO with a vanishing penalty, which converges far too slowly.
        result = basis_pursuit_denoise(cfg, sig, y, 0.0, spec.solver_options, operator=op)
    else:
        lam = paper_lambda(cfg, spec.sigma)
        result = lasso(cfg, sig, y, lam, spec.solver_options, operator=op)
    ok = result.converged and declare_success(
        cfg, scene, result.x_hat, spec.success_threshold()
    ).success
    return TrialRecord(
        s=s,
        eta=eta,
        trial_index=trial_index,
        success=ok,
        converged=result.converged,
        iterations=result.iterations,
    )


def run_experiment(spec: ExperimentSpec, n_threads: int = 1) -> ExperimentResult:
    """Full (eta, s) grid; trials run on a thread pool, aggregation is
    order-independent so the result does not depend on the thread count."""
    rows = []
    for eta in spec.eta_list:
        for s in spec.sparsity_grid:
            start = time.perf_counter()
            tasks = range(spec.trials)
            if n_threads > 1:
                with ThreadPoolExecutor(max_workers=n_threads) as pool:
                    records = list(
                        pool.map(lambda t: run_trial(spec, s, eta, t), tasks)
                    )
            else:
                records = [run_trial(spec, s, eta, t) for t in tasks]
            successes = sum(r.success for r in records)
            rows.append(
                ResultRow(
                    s=s,
                    eta=eta,
                    trials=spec.trials,
                    successes=successes,
                    success_rate=successes / spec.trials,
                    mean_iterations=sum(r.iterations for r in records) / spec.trials,
                    wall_time=time.perf_counter() - start,
                )
            )
    return ExperimentResult(spec=spec, rows=tuple(rows))


def _row_sort_key(row: ResultRow):
    if row.eta is None:
        rank, eta = 2, 0
    elif row.eta == NEAR:
        rank, eta = 1, 0
    else:
        rank, eta = 0, row.eta
    return (rank, eta, row.s)


def emit_csv(result: ExperimentResult, path) -> None:
    """CSV with header s,eta,trials,successes,success_rate, sorted by (eta, s);
    rates carry 6 decimals so reruns are byte-comparable."""
    rows = sorted(result.rows, key=_row_sort_key)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("s,eta,trials,successes,success_rate\n")
        for r in rows:
            fh.write(
                f"{r.s},{_eta_tag(r.eta)},{r.trials},{r.successes},{r.success_rate:.6f}\n"
            )


def parse_csv(path) -> list[dict]:
    import csv

    with open(path, encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


_BOOL = {"true": True, "false": False}


def parse_experiment_config(path, overrides: dict | None = None) -> ExperimentSpec:
    """Flat key-value config file (``key = value``; lists comma-separated).

    Recognized keys: n_transmit, n_receive, n_samples, doppler_mode, family,
    sigma, sparsity_grid, eta_list, trials, master_seed, threshold_rule,
    fixed_threshold, max_iterations, kkt_tolerance_factor.
    """
    values: dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        values[key.strip()] = val.strip()
    if overrides:
        values.update({k: str(v) for k, v in overrides.items() if v is not None})
    return spec_from_mapping(values)


def spec_from_mapping(values: dict[str, str]) -> ExperimentSpec:
    def want(key, default=None):
        if key not in values and default is None:
            raise ValueError(f"missing required config key {key!r}")
        return values.get(key, default)

    cfg = RadarConfig(
        n_transmit=int(want("n_transmit")),
        n_receive=int(want("n_receive")),
        n_samples=int(want("n_samples")),
        doppler_mode=DopplerMode(want("doppler_mode", "doppler_free")),
    )
    def parse_eta(tok: str):
        tok = tok.strip()
        if tok == "free":
            return None
        if tok == NEAR:
            return NEAR
        return int(tok)

    eta_list = tuple(parse_eta(tok) for tok in want("eta_list", "1").split(","))
    opts = SolverOptions(
        max_iterations=int(want("max_iterations", "5000")),
        kkt_tolerance_factor=float(want("kkt_tolerance_factor", "1e-6")),
    )
    return ExperimentSpec(
        cfg=cfg,
        family=SignalFamily(want("family", "complex_gaussian")),
        sigma=float(want("sigma", "1.0")),
        sparsity_grid=tuple(int(tok) for tok in want("sparsity_grid").split(",")),
        eta_list=eta_list,
        trials=int(want("trials", "200")),
        master_seed=int(want("master_seed", "0")),
        threshold_rule=ThresholdRule(want("threshold_rule", "half_amplitude")),
        fixed_threshold=float(want("fixed_threshold", "0.0")),
        solver_options=opts,
    )
