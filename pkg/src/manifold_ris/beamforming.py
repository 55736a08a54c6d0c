"""Linear precoding/combining and the SINR / spectral-efficiency metrics.

Beamformer directions are unit-norm columns; transmit or uplink powers
enter separately through a per-user power vector, so the same state type
serves both link directions.
"""

from __future__ import annotations

import dataclasses
from typing import Optional, Tuple

import numpy as np

MAX_CONDITION = 1e8


class SingularChannelError(ValueError):
    """Channel matrix too ill conditioned for zero forcing."""


def _check_channel(H: np.ndarray) -> np.ndarray:
    H = np.asarray(H, dtype=np.complex128)
    if H.ndim != 2:
        raise ValueError("H must be a 2-D matrix")
    m, k = H.shape
    if k > m:
        raise ValueError(f"need K <= M, got K={k} > M={m}")
    return H


@dataclasses.dataclass(frozen=True)
class BeamformerState:
    """Unit-norm beamformer columns plus per-user powers in milliwatts.

    For downlink the powers share one budget; for uplink each user has
    an individual limit.  Pass ``p_max`` to enforce the budget at
    construction.
    """

    W: np.ndarray
    p: np.ndarray
    direction: str
    p_max: Optional[float] = None

    def __post_init__(self):
        if self.direction not in ("uplink", "downlink"):
            raise ValueError(f"unknown direction {self.direction!r}")
        W = np.asarray(self.W, dtype=np.complex128)
        p = np.asarray(self.p, dtype=float)
        if W.ndim != 2 or p.ndim != 1 or W.shape[1] != p.size:
            raise ValueError("W must be (M, K) with one power per column")
        if np.any(p < 0):
            raise ValueError("powers must be >= 0")
        if self.p_max is not None:
            if self.direction == "downlink":
                if p.sum() > self.p_max + 1e-9:
                    raise ValueError("downlink powers exceed the budget")
            elif np.any(p > self.p_max + 1e-9):
                raise ValueError("an uplink power exceeds its limit")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "p", p)


def zf_precoder(H: np.ndarray) -> np.ndarray:
    """Column-normalized zero-forcing directions H (H^H H)^-1.

    Cross terms w_j^H h_k vanish for j != k; each column has unit norm.
    """
    H = _check_channel(H)
    if np.linalg.cond(H) >= MAX_CONDITION:
        raise SingularChannelError(
            "channel condition number exceeds the zero-forcing limit")
    gram = H.conj().T @ H
    Z = np.linalg.solve(gram.conj().T, H.conj().T).conj().T
    return Z / np.linalg.norm(Z, axis=0, keepdims=True)


def equal_sinr_power_allocation(H: np.ndarray, p_max_mw: float,
                                noise_mw: float
                                ) -> Tuple[np.ndarray, float]:
    """Power split that equalizes every user's ZF SINR.

    With normalized zero forcing, SINR_k = p_k / (sigma^2 [(H^H H)^-1]_kk),
    so p_k proportional to the diagonal of the inverse Gram equalizes all
    users and the common value is

        gamma = p_max / (sigma^2 tr((H^H H)^-1)).
    """
    H = _check_channel(H)
    if p_max_mw <= 0 or noise_mw <= 0:
        raise ValueError("p_max and noise power must be > 0")
    if np.linalg.cond(H) >= MAX_CONDITION:
        raise SingularChannelError(
            "channel condition number exceeds the zero-forcing limit")
    gram_inv = np.linalg.inv(H.conj().T @ H)
    diag = np.real(np.diag(gram_inv))
    trace = float(diag.sum())
    p = p_max_mw * diag / trace
    gamma = p_max_mw / (noise_mw * trace)
    return p, gamma


def mmse_combiner(H: np.ndarray, p: np.ndarray,
                  noise_mw: float) -> np.ndarray:
    """Uplink MMSE receive filters (sum_j p_j h_j h_j^H + sigma^2 I)^-1 h_k.

    Maximizes each user's uplink SINR among linear combiners.
    """
    H = np.asarray(H, dtype=np.complex128)
    p = np.asarray(p, dtype=float)
    if noise_mw <= 0:
        raise ValueError("noise power must be > 0 for MMSE combining")
    if p.ndim != 1 or p.size != H.shape[1]:
        raise ValueError("need one power per user")
    m = H.shape[0]
    cov = (H * p) @ H.conj().T + noise_mw * np.eye(m)
    return np.linalg.solve(cov, H)


def compute_sinr(H: np.ndarray, state: BeamformerState,
                 noise_mw: float) -> np.ndarray:
    """Per-user SINR for the given beamformers, powers, and direction.

    Downlink: user k is hit by every beam j, so the interference sums
    |w_j^H h_k|^2 over j != k and the noise floor is sigma^2.  Uplink:
    combiner k collects every user j, so the sum runs over |w_k^H h_j|^2
    and the noise is amplified by ||w_k||^2.
    """
    H = np.asarray(H, dtype=np.complex128)
    if noise_mw < 0:
        raise ValueError("noise power must be >= 0")
    cross = state.W.conj().T @ H          # cross[k, j] = w_k^H h_j
    gains = np.abs(cross) ** 2
    p = state.p
    k = p.size
    signal = p * np.diag(gains)
    if state.direction == "downlink":
        # column j of `gains` holds |w_i^H h_j|^2 over beams i
        interference = (p[:, np.newaxis] * gains).sum(axis=0) - signal
        noise = noise_mw
    else:
        interference = (gains * p[np.newaxis, :]).sum(axis=1) - signal
        noise = noise_mw * np.linalg.norm(state.W, axis=0) ** 2
    return signal / (interference + noise)


def spectral_efficiency(sinr: np.ndarray, prelog: float) -> np.ndarray:
    """SE_k = prelog * log2(1 + SINR_k) in bit/s/Hz."""
    sinr = np.asarray(sinr, dtype=float)
    if np.any(sinr < 0):
        raise ValueError("SINR values must be >= 0")
    if not 0.0 <= prelog <= 1.0:
        raise ValueError("prelog must lie in [0, 1]")
    return prelog * np.log2(1.0 + sinr)
