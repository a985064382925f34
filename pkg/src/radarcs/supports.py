"""Angle-class structure, balancedness, and random target scenes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .config import GridIndex, RadarConfig, from_linear_index
from .signals import derived_rng


class ParameterError(ValueError):
    """Infeasible sampler parameters (divisibility or capacity)."""


@dataclass(frozen=True)
class SupportSet:
    """A finite set of grid indices with its partition into angle classes."""

    indices: tuple[GridIndex, ...]

    def __post_init__(self):
        if len(set(self.indices)) != len(self.indices):
            raise ValueError("support indices must be distinct")

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def validate(self, cfg: RadarConfig) -> "SupportSet":
        for theta in self.indices:
            theta.validate(cfg)
        return self

    def class_partition(self, cfg: RadarConfig) -> dict[int, tuple[GridIndex, ...]]:
        """Indices grouped by angle class; every one of the N_R classes is a key."""
        parts: dict[int, list[GridIndex]] = {c: [] for c in range(cfg.n_receive)}
        for theta in self.indices:
            parts[theta.angle_class(cfg)].append(theta)
        return {c: tuple(v) for c, v in parts.items()}

    def linear_indices(self, cfg: RadarConfig) -> np.ndarray:
        return np.array([t.linear_index(cfg) for t in self.indices], dtype=int)

    def sorted_by_class(self, cfg: RadarConfig) -> "SupportSet":
        """Reorder so angle classes are contiguous (makes the Gram block diagonal)."""
        order = sorted(self.indices, key=lambda t: (t.angle_class(cfg), t.linear_index(cfg)))
        return SupportSet(tuple(order))


@dataclass(frozen=True)
class BalancednessReport:
    eta: Fraction
    class_sizes: tuple[int, ...]


def balancedness(cfg: RadarConfig, support: SupportSet) -> BalancednessReport:
    """Exact eta = N_R * max_class_size / |S| and the class-size vector."""
    if len(support) == 0:
        raise ParameterError("balancedness is undefined for an empty support")
    parts = support.class_partition(cfg)
    sizes = tuple(len(parts[c]) for c in range(cfg.n_receive))
    eta = Fraction(cfg.n_receive * max(sizes), len(support))
    return BalancednessReport(eta=eta, class_sizes=sizes)


def _class_members(cfg: RadarConfig, class_id: int) -> int:
    """Class size: N_T angle values times the delay(:Doppler) grid."""
    per_beta = cfg.n_samples if cfg.doppler_free else cfg.n_samples * cfg.n_samples
    return cfg.n_transmit * per_beta


def _index_in_class(cfg: RadarConfig, class_id: int, member: int) -> GridIndex:
    """member-th grid point of an angle class, in a fixed enumeration."""
    per_beta = cfg.n_samples if cfg.doppler_free else cfg.n_samples * cfg.n_samples
    which_beta, rest = divmod(member, per_beta)
    # Betas in class c are those with beta % N_R == c, i.e. c + k*N_R (1-based grid).
    beta = class_id + which_beta * cfg.n_receive
    if beta == 0:
        beta = cfg.n_angles
    if cfg.doppler_free:
        return GridIndex(beta, rest + 1, cfg.fixed_doppler)
    tau, f = divmod(rest, cfg.n_samples)
    return GridIndex(beta, tau + 1, f + 1)


def sample_balanced_support(
    cfg: RadarConfig, sparsity: int, eta_target: int, seed: int
) -> SupportSet:
    """Uniformly pick N_R/eta classes and fill each with eta*s/N_R indices.

    Realizes the balancedness parameter exactly; infeasible divisibility or
    class capacity is a hard error rather than silent rounding.
    """
    nr = cfg.n_receive
    if sparsity < 1:
        raise ParameterError(f"sparsity must be positive, got {sparsity}")
    if eta_target < 1 or nr % eta_target != 0:
        raise ParameterError(
            f"eta={eta_target} must be a positive divisor of N_R={nr}"
        )
    n_classes = nr // eta_target
    if sparsity % n_classes != 0:
        raise ParameterError(
            f"sparsity {sparsity} not divisible by N_R/eta = {n_classes}"
        )
    per_class = sparsity // n_classes
    capacity = _class_members(cfg, 0)
    if per_class > capacity:
        raise ParameterError(
            f"eta*s/N_R = {per_class} exceeds class capacity {capacity}"
        )
    rng = derived_rng(seed, "balanced-support")
    classes = rng.choice(nr, size=n_classes, replace=False)
    indices = []
    for c in sorted(int(c) for c in classes):
        members = rng.choice(capacity, size=per_class, replace=False)
        indices.extend(_index_in_class(cfg, c, int(k)) for k in sorted(members))
    return SupportSet(tuple(indices))


def sample_most_balanced_support(cfg: RadarConfig, sparsity: int, seed: int) -> SupportSet:
    """Spread s indices over classes as evenly as possible (sizes differ by <= 1).

    Realizes the minimum achievable balancedness N_R*ceil(s/N_R)/s, which is 1
    exactly when N_R divides s; useful when s and N_R are not commensurate.
    """
    nr = cfg.n_receive
    if sparsity < 1:
        raise ParameterError(f"sparsity must be positive, got {sparsity}")
    capacity = _class_members(cfg, 0)
    base, extra = divmod(sparsity, nr)
    if base + (1 if extra else 0) > capacity:
        raise ParameterError(f"sparsity {sparsity} exceeds grid size")
    rng = derived_rng(seed, "near-balanced-support")
    bumped = set(int(c) for c in rng.choice(nr, size=extra, replace=False)) if extra else set()
    indices = []
    for c in range(nr):
        size = base + (1 if c in bumped else 0)
        if size == 0:
            continue
        members = rng.choice(capacity, size=size, replace=False)
        indices.extend(_index_in_class(cfg, c, int(k)) for k in sorted(members))
    return SupportSet(tuple(indices))


def sample_unconstrained_support(cfg: RadarConfig, sparsity: int, seed: int) -> SupportSet:
    """Uniform s-subset of the grid, no balancedness constraint."""
    if sparsity < 1 or sparsity > cfg.grid_size:
        raise ParameterError(
            f"sparsity {sparsity} outside [1, {cfg.grid_size}]"
        )
    rng = derived_rng(seed, "free-support")
    chosen = rng.choice(cfg.grid_size, size=sparsity, replace=False)
    return SupportSet(tuple(from_linear_index(cfg, int(k)) for k in sorted(chosen)))


@dataclass(frozen=True)
class TargetScene:
    """Sparse complex scene: support plus one nonzero coefficient per index."""

    support: SupportSet
    coefficients: np.ndarray

    def __post_init__(self):
        if len(self.coefficients) != len(self.support):
            raise ValueError("one coefficient per support index required")
        if np.any(self.coefficients == 0):
            raise ValueError("scene coefficients must be nonzero")

    @property
    def sparsity(self) -> int:
        return len(self.support)

    def to_dense(self, cfg: RadarConfig) -> np.ndarray:
        x = np.zeros(cfg.grid_size, dtype=np.complex128)
        x[self.support.linear_indices(cfg)] = self.coefficients
        return x


def make_scene(
    cfg: RadarConfig, support: SupportSet, amplitude: float, seed: int
) -> TargetScene:
    """Constant-magnitude scene with Steinhaus phases."""
    if amplitude <= 0:
        raise ParameterError(f"amplitude must be positive, got {amplitude}")
    rng = derived_rng(seed, "scene-phases")
    phases = np.exp(2j * np.pi * rng.random(len(support)))
    return TargetScene(support=support, coefficients=amplitude * phases)


def threshold_amplitude(cfg: RadarConfig, sigma: float) -> float:
    """Minimum-magnitude level 8*sigma/sqrt(N_T N_R N_t) * sqrt(2 log N)."""
    return 8.0 * sigma / math.sqrt(cfg.scale) * math.sqrt(2.0 * cfg.log_grid_size())
