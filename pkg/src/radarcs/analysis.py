"""Gram-matrix oracle, conditioning diagnostics, recovery-condition checks,
exact restricted-isometry constants at tiny scale, and empirical tail probes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .config import GridIndex, RadarConfig, from_linear_index
from .operator import MeasurementOperator, SizeCapError
from .signals import SignalFamily, SignalSet, derived_rng, generate_signals
from .supports import (
    SupportSet,
    TargetScene,
    sample_balanced_support,
    sample_unconstrained_support,
)


@dataclass(frozen=True)
class GramReport:
    """Scaled Gram matrix on a support, ordered like ``support.indices``."""

    support: SupportSet
    gram: np.ndarray
    deviation: float
    block_deviations: dict[int, float]
    coherence_within: float


def _pair_entry(cfg: RadarConfig, sig: SignalSet, t1: GridIndex, t2: GridIndex) -> complex:
    """<A~_t1, A~_t2> from the analytic correlation formula."""
    nr = cfg.n_receive
    if (t2.beta - t1.beta) % nr != 0:
        return 0.0 + 0.0j
    nt, n_tx = cfg.n_samples, cfg.n_transmit
    s = sig.signals
    # Transmit mixing phases, outer over (i, j); d_T*delta_beta = 1/(N_T*N_R).
    i = np.arange(n_tx)
    phase_t = np.exp(
        2j * np.pi * (t2.beta * i[None, :] - t1.beta * i[:, None]) / cfg.n_angles
    )
    a0 = np.arange(nt)
    phase_f = np.exp(2j * np.pi * (t2.f - t1.f) * (t1.tau + a0) / nt)
    shifted = np.roll(s, t2.tau - t1.tau, axis=1)  # s_j[(a + tau - tau') mod N_t]
    inner = (s.conj() * phase_f[None, :]) @ shifted.T  # (i, j)
    return complex((phase_t * inner).sum() / (n_tx * nt))


def gram_closed_form(cfg: RadarConfig, sig: SignalSet, support: SupportSet) -> GramReport:
    """Gram of the scaled columns, entry by entry from the closed form.

    Independent of the operator's FFT path, so it doubles as an oracle.
    """
    if len(support) == 0:
        raise ValueError("support must be nonempty")
    support.validate(cfg)
    thetas = support.indices
    n = len(thetas)
    gram = np.empty((n, n), dtype=np.complex128)
    for p in range(n):
        gram[p, p] = _pair_entry(cfg, sig, thetas[p], thetas[p]).real
        for q in range(p + 1, n):
            gram[p, q] = _pair_entry(cfg, sig, thetas[p], thetas[q])
            gram[q, p] = gram[p, q].conjugate()

    classes = np.array([t.angle_class(cfg) for t in thetas])
    block_deviations = {}
    for c in sorted(set(classes.tolist())):
        sel = np.flatnonzero(classes == c)
        block = gram[np.ix_(sel, sel)]
        block_deviations[int(c)] = spectral_deviation(block)
    deviation = max(block_deviations.values())
    off = gram.copy()
    np.fill_diagonal(off, 0.0)
    return GramReport(
        support=support,
        gram=gram,
        deviation=deviation,
        block_deviations=block_deviations,
        coherence_within=float(np.max(np.abs(off))) if n > 1 else 0.0,
    )


def spectral_deviation(gram: np.ndarray) -> float:
    """Largest |eigenvalue| of (gram - Id) for a Hermitian gram."""
    gram = np.asarray(gram, dtype=np.complex128)
    herm_gap = np.max(np.abs(gram - gram.conj().T)) if gram.size else 0.0
    if herm_gap > 1e-12:
        raise ValueError(f"matrix is not Hermitian (asymmetry {herm_gap:.3e})")
    dev = np.linalg.eigvalsh(gram - np.eye(gram.shape[0]))
    return float(np.max(np.abs(dev)))


@dataclass(frozen=True)
class ConditionCheck:
    value: float
    bound: float
    holds: bool


@dataclass(frozen=True)
class ConditionsReport:
    c1: ConditionCheck
    c2: ConditionCheck
    c3: ConditionCheck
    c4: ConditionCheck
    c5: ConditionCheck
    mu: float

    @property
    def all_hold(self) -> bool:
        return all(c.holds for c in (self.c1, self.c2, self.c3, self.c4, self.c5))


def check_conditions(
    cfg: RadarConfig,
    sig: SignalSet,
    scene: TargetScene,
    noise: np.ndarray,
    sigma: float,
    operator: MeasurementOperator | None = None,
) -> ConditionsReport:
    """Evaluate the five dual-certificate conditions on a concrete instance.

    All quantities use the scaled operator and scaled noise; mu is the
    scaled-noise level sigma_tilde * sqrt(2 ln N).
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    op = operator if operator is not None else MeasurementOperator(cfg, sig)
    support = scene.support
    if len(support) == 0:
        raise ValueError("scene support must be nonempty")
    root_scale = math.sqrt(cfg.scale)
    mu = (sigma / root_scale) * math.sqrt(2.0 * cfg.log_grid_size())

    cols = op.columns(support.indices) / root_scale  # scaled A~_S
    gram = cols.conj().T @ cols
    lin = support.linear_indices(cfg)
    sign = scene.coefficients / np.abs(scene.coefficients)
    n_tilde = np.asarray(noise, dtype=np.complex128) / root_scale

    fail = ConditionCheck(value=math.inf, bound=2.0, holds=False)
    if np.linalg.cond(gram) > 1e14:
        inf_check = ConditionCheck(math.inf, math.inf, False)
        return ConditionsReport(fail, inf_check, inf_check, inf_check, inf_check, mu)
    gram_inv = np.linalg.inv(gram)

    c1_val = float(np.linalg.norm(gram_inv, 2))
    c1 = ConditionCheck(c1_val, 2.0, c1_val <= 2.0)

    h = gram_inv @ sign
    corr = op.adjoint(cols @ h) / root_scale  # A~* A~_S h over the full grid
    off = np.delete(corr, lin)
    c2_val = float(np.max(np.abs(off)))
    c2 = ConditionCheck(c2_val, 0.25, c2_val < 0.25)

    asn = cols.conj().T @ n_tilde
    c3_val = float(np.max(np.abs(gram_inv @ asn)))
    c3 = ConditionCheck(c3_val, 2.0 * mu, c3_val <= 2.0 * mu)

    proj_resid = n_tilde - cols @ (gram_inv @ asn)
    c4_all = op.adjoint(proj_resid) / root_scale
    c4_val = float(np.max(np.abs(np.delete(c4_all, lin))))
    c4 = ConditionCheck(c4_val, math.sqrt(2.0) * mu, c4_val <= math.sqrt(2.0) * mu)

    c5_val = float(np.max(np.abs(h)))
    c5 = ConditionCheck(c5_val, 3.0, c5_val <= 3.0)
    return ConditionsReport(c1, c2, c3, c4, c5, mu)


def exact_rip_constant(
    cfg: RadarConfig, sig: SignalSet, s: int, support_cap: int = 200_000
) -> float:
    """delta_s by enumeration of every size-s support (tiny grids only)."""
    if s < 1:
        raise ValueError("s must be positive")
    n = cfg.grid_size
    if s > n:
        raise ValueError(f"s={s} exceeds grid size {n}")
    total = math.comb(n, s)
    if s > 3 or total > support_cap:
        raise SizeCapError(
            f"enumerating {total} supports of size {s} exceeds the cap"
        )
    op = MeasurementOperator(cfg, sig)
    scaled = op.densify() / math.sqrt(cfg.scale)
    gram_full = scaled.conj().T @ scaled
    best = 0.0
    for combo in combinations(range(n), s):
        idx = np.array(combo)
        best = max(best, spectral_deviation(gram_full[np.ix_(idx, idx)]))
    return best


@dataclass(frozen=True)
class TailProbeResult:
    deltas: np.ndarray
    survival: np.ndarray
    median_deviation: float
    deviations: np.ndarray


def tail_probe_opnorm(
    cfg: RadarConfig,
    family: SignalFamily,
    s: int,
    eta: int | None,
    n_trials: int,
    seed: int,
) -> TailProbeResult:
    """Empirical distribution of ||A~_S* A~_S - Id|| over fresh random draws.

    eta = None samples unconstrained supports. Returns the survival curve on
    a 50-point log grid over [1e-3, 2] plus the median deviation.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be positive")
    seed_rng = derived_rng(seed, "tail-probe-seeds")
    trial_seeds = seed_rng.integers(0, 2**63, size=2 * n_trials)
    root_scale = math.sqrt(cfg.scale)
    deviations = np.empty(n_trials)
    for t in range(n_trials):
        sig = generate_signals(cfg, family, int(trial_seeds[2 * t]))
        sub_seed = int(trial_seeds[2 * t + 1])
        if eta is None:
            support = sample_unconstrained_support(cfg, s, sub_seed)
        else:
            support = sample_balanced_support(cfg, s, eta, sub_seed)
        cols = MeasurementOperator(cfg, sig).columns(support.indices) / root_scale
        deviations[t] = spectral_deviation(cols.conj().T @ cols)
    deltas = np.logspace(-3, math.log10(2.0), 50)
    survival = (deviations[None, :] >= deltas[:, None]).mean(axis=1)
    return TailProbeResult(
        deltas=deltas,
        survival=survival,
        median_deviation=float(np.median(deviations)),
        deviations=deviations,
    )


def build_y_matrix(
    cfg: RadarConfig, class_support: SupportSet, i: int, a: int, j: int, b: int
) -> np.ndarray:
    """The phase block Y^{(i,a),(j,b)} over a single angle class (1-based i,a,j,b).

    Entry (Theta, Theta') is delta_{a-b, tau'-tau mod N_t} * (N_T N_t)^{-1}
    * exp(2 pi i (f'-f)(tau+a-1)/N_t) * exp(2 pi i [beta'(j-1)-beta(i-1)] / (N_T N_R)).
    """
    thetas = class_support.indices
    classes = {t.angle_class(cfg) for t in thetas}
    if len(classes) > 1:
        raise ValueError("all indices must lie in one angle class")
    nt = cfg.n_samples
    n = len(thetas)
    y = np.zeros((n, n), dtype=np.complex128)
    for p, t1 in enumerate(thetas):
        for q, t2 in enumerate(thetas):
            if (a - b - (t2.tau - t1.tau)) % nt != 0:
                continue
            y[p, q] = (
                np.exp(2j * np.pi * (t2.f - t1.f) * (t1.tau + a - 1) / nt)
                * np.exp(
                    2j
                    * np.pi
                    * (t2.beta * (j - 1) - t1.beta * (i - 1))
                    / cfg.n_angles
                )
                / (cfg.n_transmit * nt)
            )
    return y


def report_to_text(report: ConditionsReport) -> str:
    """Flat key-value rendering of a conditions report."""
    lines = [f"mu = {report.mu:.12g}"]
    for name, bound_name in (("c1", "<= 2"), ("c2", "< 1/4"), ("c3", "<= 2 mu"),
                             ("c4", "<= sqrt(2) mu"), ("c5", "<= 3")):
        c: ConditionCheck = getattr(report, name)
        lines.append(f"{name}.value = {c.value:.12g}")
        lines.append(f"{name}.holds = {str(c.holds).lower()}")
    lines.append(f"all_hold = {str(report.all_hold).lower()}")
    return "\n".join(lines) + "\n"


def write_survival_csv(path, result: TailProbeResult) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("delta,survival\n")
        for d, p in zip(result.deltas, result.survival):
            fh.write(f"{d:.6e},{p:.6f}\n")
