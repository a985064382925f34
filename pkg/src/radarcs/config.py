"""Model dimensions and the angle-delay-Doppler grid."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum


class DopplerMode(Enum):
    FULL = "full"
    DOPPLER_FREE = "doppler_free"


class GridDomainError(ValueError):
    """Grid index outside the configured parameter grid."""


@dataclass(frozen=True)
class RadarConfig:
    """Dimensions of the co-located MIMO radar model.

    The transmit/receive spacings and the angle stepsize are fixed to the
    virtual-array choice d_T = 1/2, d_R = N_T/2, so the receive phase is
    exactly periodic over the N_R angle classes.
    """

    n_transmit: int
    n_receive: int
    n_samples: int
    doppler_mode: DopplerMode = DopplerMode.FULL

    def __post_init__(self):
        for name in ("n_transmit", "n_receive", "n_samples"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if not isinstance(self.doppler_mode, DopplerMode):
            raise ValueError(f"doppler_mode must be a DopplerMode, got {self.doppler_mode!r}")

    @property
    def d_t(self) -> float:
        return 0.5

    @property
    def d_r(self) -> float:
        return self.n_transmit / 2.0

    @property
    def delta_beta(self) -> float:
        return 2.0 / (self.n_transmit * self.n_receive)

    @property
    def n_angles(self) -> int:
        """Number of angle grid points N_T * N_R."""
        return self.n_transmit * self.n_receive

    @property
    def doppler_free(self) -> bool:
        return self.doppler_mode is DopplerMode.DOPPLER_FREE

    @property
    def fixed_doppler(self) -> int:
        """Doppler index used in Doppler-free mode.

        The index f = N_t carries a modulation phase exp(2*pi*i*N_t*(k-1)/N_t) = 1,
        i.e. it is the zero-Doppler point of the 1-based grid.
        """
        return self.n_samples

    @property
    def grid_size(self) -> int:
        """Dimension N of the target scene vector."""
        n = self.n_angles * self.n_samples
        if not self.doppler_free:
            n *= self.n_samples
        return n

    @property
    def n_measurements(self) -> int:
        """Number of measurements m = N_R * N_t."""
        return self.n_receive * self.n_samples

    @property
    def scale(self) -> float:
        """Normalization N_T * N_R * N_t relating A and its scaled version."""
        return float(self.n_transmit * self.n_receive * self.n_samples)

    def log_grid_size(self) -> float:
        return math.log(self.grid_size)


@dataclass(frozen=True, order=True)
class GridIndex:
    """A point (beta, tau, f) of the grid, 1-based in all three coordinates."""

    beta: int
    tau: int
    f: int

    def validate(self, cfg: RadarConfig) -> "GridIndex":
        if not (1 <= self.beta <= cfg.n_angles):
            raise GridDomainError(f"beta={self.beta} outside [1, {cfg.n_angles}]")
        if not (1 <= self.tau <= cfg.n_samples):
            raise GridDomainError(f"tau={self.tau} outside [1, {cfg.n_samples}]")
        if cfg.doppler_free:
            if self.f != cfg.fixed_doppler:
                raise GridDomainError(
                    f"f={self.f} but Doppler-free mode fixes f={cfg.fixed_doppler}"
                )
        elif not (1 <= self.f <= cfg.n_samples):
            raise GridDomainError(f"f={self.f} outside [1, {cfg.n_samples}]")
        return self

    def linear_index(self, cfg: RadarConfig) -> int:
        """Position in the linearization with contiguous angle blocks."""
        self.validate(cfg)
        if cfg.doppler_free:
            return (self.beta - 1) * cfg.n_samples + (self.tau - 1)
        nt = cfg.n_samples
        return ((self.beta - 1) * nt + (self.tau - 1)) * nt + (self.f - 1)

    def angle_class(self, cfg: RadarConfig) -> int:
        """Residue labelling the angle class: beta' ~ beta iff beta' - beta in N_R*Z."""
        return self.beta % cfg.n_receive


def from_linear_index(cfg: RadarConfig, index: int) -> GridIndex:
    """Inverse of GridIndex.linear_index."""
    if not (0 <= index < cfg.grid_size):
        raise GridDomainError(f"linear index {index} outside [0, {cfg.grid_size})")
    nt = cfg.n_samples
    if cfg.doppler_free:
        beta, tau = divmod(index, nt)
        return GridIndex(beta + 1, tau + 1, cfg.fixed_doppler)
    rest, f = divmod(index, nt)
    beta, tau = divmod(rest, nt)
    return GridIndex(beta + 1, tau + 1, f + 1)


def all_grid_indices(cfg: RadarConfig):
    """All grid points in linearization order."""
    return [from_linear_index(cfg, k) for k in range(cfg.grid_size)]
