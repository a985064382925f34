"""Random probing signals and derived RNG streams."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .config import RadarConfig


class SignalFamily(Enum):
    COMPLEX_GAUSSIAN = "complex_gaussian"
    RADEMACHER = "rademacher"
    STEINHAUS = "steinhaus"


def _tag_to_int(tag) -> int:
    if isinstance(tag, (int, np.integer)):
        return int(tag) & 0xFFFFFFFFFFFFFFFF
    if isinstance(tag, str):
        digest = hashlib.blake2s(tag.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "little")
    raise TypeError(f"unsupported stream tag {tag!r}")


def derived_rng(master_seed: int, *tags) -> np.random.Generator:
    """Deterministic RNG stream for (master seed, purpose tags).

    Every stochastic object gets its own stream so that parallel trial
    execution cannot change the draws.
    """
    entropy = [_tag_to_int(master_seed)] + [_tag_to_int(t) for t in tags]
    return np.random.default_rng(np.random.SeedSequence(entropy))


@dataclass(frozen=True)
class SignalSet:
    """The N_T probing signals, regenerable bit-identically from (family, seed)."""

    signals: np.ndarray  # (N_T, N_t) complex
    family: SignalFamily
    seed: int

    def __post_init__(self):
        if self.signals.ndim != 2:
            raise ValueError("signals must be a (N_T, N_t) array")

    @property
    def n_transmit(self) -> int:
        return self.signals.shape[0]

    @property
    def n_samples(self) -> int:
        return self.signals.shape[1]

    @property
    def stacked(self) -> np.ndarray:
        """Concatenation (s_1^T, ..., s_{N_T}^T)^T of length N_T*N_t."""
        return self.signals.reshape(-1)


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard complex Gaussian samples: E z = 0, E|z|^2 = 1.

    One sample is (g1 + i*g2)/sqrt(2) with g1, g2 standard real normals.
    """
    g = rng.standard_normal((2,) + tuple(shape))
    return (g[0] + 1j * g[1]) / np.sqrt(2.0)


def generate_signals(cfg: RadarConfig, family: SignalFamily, seed: int) -> SignalSet:
    rng = derived_rng(seed, "probing-signals")
    shape = (cfg.n_transmit, cfg.n_samples)
    if family is SignalFamily.COMPLEX_GAUSSIAN:
        s = complex_gaussian(rng, shape)
    elif family is SignalFamily.RADEMACHER:
        s = (2.0 * rng.integers(0, 2, size=shape) - 1.0).astype(np.complex128)
    elif family is SignalFamily.STEINHAUS:
        s = np.exp(2j * np.pi * rng.random(shape))
    else:
        raise ValueError(f"unknown signal family {family!r}")
    s.setflags(write=False)
    return SignalSet(signals=s, family=family, seed=seed)
