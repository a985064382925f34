"""The measurement operator A and its matrix-free forward/adjoint maps.

Columns have the structure A_theta = w_beta (x) M_f T_tau b_beta, where
b_beta mixes the probing signals over transmitters with the transmit phase
and w_beta carries the receive phase.  Forward/adjoint applications exploit
this via per-angle FFT (de)convolution; the dense materializer exists only
as a small-scale oracle.
"""

from __future__ import annotations

import numpy as np

from .config import DopplerMode, GridIndex, RadarConfig, all_grid_indices
from .signals import SignalSet, derived_rng


class DimensionMismatchError(ValueError):
    pass


class SizeCapError(ValueError):
    pass


def circular_shift(s: np.ndarray, tau: int) -> np.ndarray:
    """Circulant delay: output_k = s_{k - tau}, subtraction modulo N_t."""
    return np.roll(s, tau % len(s))


def modulate(s: np.ndarray, f: int) -> np.ndarray:
    """Linear modulation: output_k = exp(2*pi*i*f*(k-1)/N_t) * s_k (1-based k)."""
    nt = len(s)
    k = np.arange(nt)
    return np.exp(2j * np.pi * f * k / nt) * s


class MeasurementOperator:
    """Matrix-free A in C^{N_R*N_t x N} for a fixed config and signal set."""

    def __init__(self, cfg: RadarConfig, signals: SignalSet):
        if signals.n_transmit != cfg.n_transmit or signals.n_samples != cfg.n_samples:
            raise DimensionMismatchError(
                f"signal set of shape {signals.signals.shape} does not match "
                f"config (N_T={cfg.n_transmit}, N_t={cfg.n_samples})"
            )
        self.cfg = cfg
        self.signals = signals
        nb = cfg.n_angles
        nt = cfg.n_samples
        beta = np.arange(1, nb + 1)
        # d_T * delta_beta = 1/(N_T*N_R): transmit mixing of the signals per angle.
        phase_t = np.exp(2j * np.pi * np.outer(beta, np.arange(cfg.n_transmit)) / nb)
        self._mixed = phase_t @ signals.signals  # (N_B, N_t), b_beta rows
        # d_R * delta_beta = 1/N_R: receive phases w_beta.
        j = np.arange(cfg.n_receive)
        self._recv = np.exp(2j * np.pi * np.outer(j, beta) / cfg.n_receive)  # (N_R, N_B)
        # FFT of b shifted by one places T_tau at integer lags tau = 1..N_t.
        self._mixed_hat = np.fft.fft(np.roll(self._mixed, 1, axis=1), axis=1)
        self._k = np.arange(nt)
        # (tau_index, k) -> (k - tau) mod N_t with tau = tau_index + 1
        self._lag = (self._k[None, :] - self._k[:, None] - 1) % nt

    @property
    def shape(self) -> tuple[int, int]:
        return (self.cfg.n_measurements, self.cfg.grid_size)

    def mixed_signal(self, beta: int) -> np.ndarray:
        """b_beta = sum_i exp(2*pi*i*beta*(i-1)/(N_T*N_R)) s_i."""
        return self._mixed[(beta - 1) % self.cfg.n_angles]

    def column(self, theta: GridIndex) -> np.ndarray:
        """A_theta, stacked over receivers."""
        theta.validate(self.cfg)
        v = modulate(circular_shift(self.mixed_signal(theta.beta), theta.tau), theta.f)
        return np.kron(self._recv[:, (theta.beta - 1) % self.cfg.n_angles], v)

    def columns(self, thetas) -> np.ndarray:
        """Dense m x |thetas| matrix of selected columns."""
        if len(thetas) == 0:
            return np.zeros((self.cfg.n_measurements, 0), dtype=np.complex128)
        return np.stack([self.column(t) for t in thetas], axis=1)

    def _coerce_scene(self, x) -> np.ndarray:
        if hasattr(x, "to_dense"):
            return x.to_dense(self.cfg)
        x = np.asarray(x, dtype=np.complex128)
        if x.shape != (self.cfg.grid_size,):
            raise DimensionMismatchError(
                f"scene vector has shape {x.shape}, expected ({self.cfg.grid_size},)"
            )
        return x

    def forward(self, x) -> np.ndarray:
        """A x for a dense scene vector or TargetScene."""
        cfg = self.cfg
        x = self._coerce_scene(x)
        nb, nt = cfg.n_angles, cfg.n_samples
        if cfg.doppler_free:
            coeff = x.reshape(nb, nt)
            v = np.fft.ifft(np.fft.fft(coeff, axis=1) * self._mixed_hat, axis=1)
        else:
            coeff = x.reshape(nb, nt, nt)
            # Sum over Doppler first: entries at f = f_index + 1.
            d = nt * np.fft.ifft(coeff, axis=2)
            d *= np.exp(2j * np.pi * self._k / nt)[None, None, :]
            shifted = self._mixed[np.arange(nb)[:, None, None], self._lag[None, :, :]]
            v = np.einsum("btk,btk->bk", d, shifted)
        return (self._recv @ v).reshape(-1)

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        """A* y, with (A* y)_theta = <A_theta, y>."""
        cfg = self.cfg
        y = np.asarray(y, dtype=np.complex128)
        if y.shape != (cfg.n_measurements,):
            raise DimensionMismatchError(
                f"measurement vector has shape {y.shape}, expected ({cfg.n_measurements},)"
            )
        nb, nt = cfg.n_angles, cfg.n_samples
        u = self._recv.conj().T @ y.reshape(cfg.n_receive, nt)  # (N_B, N_t)
        if cfg.doppler_free:
            r = np.fft.ifft(np.fft.fft(u, axis=1) * self._mixed_hat.conj(), axis=1)
            return r.reshape(-1)
        shifted = self._mixed[np.arange(nb)[:, None, None], self._lag[None, :, :]]
        z = shifted.conj() * u[:, None, :]  # (N_B, tau_index, k)
        ft = np.fft.fft(z, axis=2)
        # <A_theta, y> needs frequency f = f_index + 1.
        r = ft[:, :, (self._k + 1) % nt]
        return r.reshape(-1)

    def densify(self, entry_cap: int = 65536) -> np.ndarray:
        """Dense m x N matrix, columns in linearization order (small-N oracle)."""
        m, n = self.shape
        if m * n > entry_cap:
            raise SizeCapError(
                f"dense matrix would have {m * n} entries, cap is {entry_cap}"
            )
        return self.columns(all_grid_indices(self.cfg))

    def operator_norm(self, n_iterations: int = 20, seed: int = 0) -> float:
        """Power-iteration estimate of ||A||_2 on A*A."""
        rng = derived_rng(seed, "power-iteration")
        x = rng.standard_normal(self.cfg.grid_size) + 1j * rng.standard_normal(
            self.cfg.grid_size
        )
        x /= np.linalg.norm(x)
        norm_sq = 0.0
        for _ in range(n_iterations):
            z = self.adjoint(self.forward(x))
            norm_sq = np.linalg.norm(z)
            if norm_sq == 0.0:
                return 0.0
            x = z / norm_sq
        return float(np.sqrt(norm_sq))


def build_x_theta(cfg: RadarConfig, theta: GridIndex, entry_cap: int = 65536) -> np.ndarray:
    """The N_R*N_t x N_T*N_t block matrix with X_theta s = A_theta.

    Block (i, j) is exp(2*pi*i*d_R*beta*db*(i-1)) * exp(2*pi*i*d_T*beta*db*(j-1))
    times the modulated shift M_f T_tau.
    """
    theta.validate(cfg)
    nt = cfg.n_samples
    rows, cols = cfg.n_receive * nt, cfg.n_transmit * nt
    if rows * cols > entry_cap:
        raise SizeCapError(f"X_theta would have {rows * cols} entries, cap is {entry_cap}")
    k = np.arange(nt)
    shift = np.zeros((nt, nt), dtype=np.complex128)
    shift[k, (k - theta.tau) % nt] = 1.0
    op = np.exp(2j * np.pi * theta.f * k / nt)[:, None] * shift
    recv = np.exp(2j * np.pi * theta.beta * np.arange(cfg.n_receive) / cfg.n_receive)
    trans = np.exp(2j * np.pi * theta.beta * np.arange(cfg.n_transmit) / cfg.n_angles)
    return np.kron(np.outer(recv, trans), op)
