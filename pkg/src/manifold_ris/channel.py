"""Geometry, path loss, and fading for the BS, RIS, and user links.

Positions live in a 2-D horizontal plane (meters).  Every link draws a
line-of-sight angle uniformly on [0, 2pi) and maps it to a half-wavelength
uniform-linear-array steering vector; Rician fading mixes that steering
response with circularly symmetric Gaussian scatter.  All powers are
carried in linear milliwatts; dBm appears only at configuration
boundaries.

The composite channel seen by user ``k`` is affine in the reflection
phase vector::

    h_k(theta) = h_d[k] + sum_r G[r] diag(theta_r) h_r[r, k]
               = h_d[k] + A_k theta

with the cascade matrix ``A_k`` exposed so objective gradients stay
linear-algebraic in theta.
"""

from __future__ import annotations

import dataclasses
from typing import Sequence, Tuple

import numpy as np

from .manifolds import ManifoldPoint

Position = Tuple[float, float]


def dbm_to_mw(x_dbm: float) -> float:
    """Convert dBm to linear milliwatts."""
    return 10.0 ** (x_dbm / 10.0)


def mw_to_dbm(x_mw: float) -> float:
    """Convert linear milliwatts to dBm."""
    if x_mw <= 0:
        raise ValueError("power must be positive to express in dBm")
    return 10.0 * np.log10(x_mw)


def ula_steering(length: int, angle: float) -> np.ndarray:
    """Steering vector of a half-wavelength ULA lying along the x-axis.

    ``angle`` is measured from the array axis, so broadside is pi/2 and
    the spatial frequency is cos(angle).  Every entry has unit modulus.
    """
    i = np.arange(length)
    return np.exp(1j * np.pi * i * np.cos(angle))


def _crandn(rng: np.random.Generator, *shape: int) -> np.ndarray:
    """Unit-variance circularly symmetric complex Gaussian draws."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) \
        / np.sqrt(2.0)


@dataclasses.dataclass(frozen=True)
class PathlossExponents:
    ue_ris: float = 2.0
    bs_ris: float = 2.5
    bs_ue: float = 4.0

    def __post_init__(self):
        for name in ("ue_ris", "bs_ris", "bs_ue"):
            if not getattr(self, name) > 0:
                raise ValueError(f"path-loss exponent {name} must be > 0")


@dataclasses.dataclass(frozen=True)
class SystemGeometry:
    """Node positions plus the large-scale propagation constants.

    ``reference_gain_db`` is the per-link power gain at 1 m; the link
    amplitude scale is sqrt(gain * d**-exponent).
    """

    bs_position: Position
    ris_positions: Tuple[Position, ...]
    ue_positions: Tuple[Position, ...]
    exponents: PathlossExponents = PathlossExponents()
    reference_gain_db: float = -30.0

    def __post_init__(self):
        object.__setattr__(self, "bs_position", tuple(self.bs_position))
        object.__setattr__(
            self, "ris_positions",
            tuple(tuple(p) for p in self.ris_positions))
        object.__setattr__(
            self, "ue_positions",
            tuple(tuple(p) for p in self.ue_positions))
        bs = np.asarray(self.bs_position, dtype=float)
        for label, pts in (("ris", self.ris_positions),
                           ("ue", self.ue_positions)):
            for p in pts:
                if np.linalg.norm(np.asarray(p) - bs) <= 0:
                    raise ValueError(f"{label} position coincides with BS")
        for rp in self.ris_positions:
            for up in self.ue_positions:
                if np.linalg.norm(np.asarray(rp) - np.asarray(up)) <= 0:
                    raise ValueError("ue position coincides with a RIS")

    @property
    def reference_gain(self) -> float:
        return 10.0 ** (self.reference_gain_db / 10.0)

    def distance_bs_ris(self, r: int) -> float:
        return float(np.linalg.norm(
            np.asarray(self.ris_positions[r]) - np.asarray(self.bs_position)))

    def distance_bs_ue(self, k: int) -> float:
        return float(np.linalg.norm(
            np.asarray(self.ue_positions[k]) - np.asarray(self.bs_position)))

    def distance_ris_ue(self, r: int, k: int) -> float:
        return float(np.linalg.norm(
            np.asarray(self.ue_positions[k]) - np.asarray(self.ris_positions[r])))

    def link_amplitude(self, distance: float, exponent: float) -> float:
        return float(np.sqrt(self.reference_gain * distance ** (-exponent)))


@dataclasses.dataclass(frozen=True)
class FadingConfig:
    """Small-scale model: pure line of sight, or Rician with factor kappa.

    Line-of-sight angles are drawn uniformly on [0, 2pi); arrays are
    half-wavelength ULAs.
    """

    model: str = "rician"
    kappa: float = 10.0

    def __post_init__(self):
        if self.model not in ("pure_los", "rician"):
            raise ValueError(f"unknown fading model {self.model!r}")
        if not np.isfinite(self.kappa) or self.kappa < 0:
            raise ValueError("kappa must be finite and >= 0")

    def mix(self, los: np.ndarray, scatter: np.ndarray) -> np.ndarray:
        if self.model == "pure_los":
            return los
        k = self.kappa
        return np.sqrt(k / (k + 1.0)) * los + np.sqrt(1.0 / (k + 1.0)) * scatter


@dataclasses.dataclass(frozen=True)
class ChannelSet:
    """One realization of every link for (R RIS, K users, M antennas).

    G : (R, M, N) BS-RIS matrices; h_r : (R, K, N) RIS-user vectors;
    h_d : (K, M) direct BS-user vectors.  noise_power_mw is sigma^2.
    """

    G: np.ndarray
    h_r: np.ndarray
    h_d: np.ndarray
    noise_power_mw: float = 0.0

    def __post_init__(self):
        G = np.asarray(self.G, dtype=np.complex128)
        h_r = np.asarray(self.h_r, dtype=np.complex128)
        h_d = np.asarray(self.h_d, dtype=np.complex128)
        if G.ndim != 3 or h_r.ndim != 3 or h_d.ndim != 2:
            raise ValueError("G must be (R,M,N), h_r (R,K,N), h_d (K,M)")
        r, m, n = G.shape
        if h_r.shape[0] != r or h_r.shape[2] != n or h_d.shape[1] != m:
            raise ValueError("channel array shapes are inconsistent")
        for name, arr in (("G", G), ("h_r", h_r), ("h_d", h_d)):
            if not np.all(np.isfinite(arr.view(np.float64))):
                raise ValueError(f"{name} contains non-finite entries")
        if self.noise_power_mw < 0:
            raise ValueError("noise power must be >= 0")
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "h_r", h_r)
        object.__setattr__(self, "h_d", h_d)

    @property
    def num_ris(self) -> int:
        return self.G.shape[0]

    @property
    def num_antennas(self) -> int:
        return self.G.shape[1]

    @property
    def num_elements(self) -> int:
        return self.G.shape[2]

    @property
    def num_users(self) -> int:
        return self.h_d.shape[0]


def place_users_semicircle(k: int, radius_m: float, center: Position,
                           seed: int = 0) -> Tuple[Position, ...]:
    """k points evenly spaced in angle over [0, pi] on the given circle.

    A single user sits at the midpoint angle pi/2.  ``seed`` is reserved
    for jittered placement variants and is unused here.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if radius_m <= 0:
        raise ValueError("radius must be > 0")
    angles = np.array([np.pi / 2.0]) if k == 1 else np.linspace(0.0, np.pi, k)
    cx, cy = center
    return tuple((cx + radius_m * np.cos(a), cy + radius_m * np.sin(a))
                 for a in angles)


@dataclasses.dataclass(frozen=True)
class LosAngles:
    """Slowly varying line-of-sight angles for every link.

    bs_ris / ris_side are per RIS; ris_ue is (R, K); bs_ue is (K,).
    Splitting these from the fast fading lets statistical-CSI consumers
    see the link means without touching per-realization scatter.
    """

    bs_ris: np.ndarray
    ris_side: np.ndarray
    ris_ue: np.ndarray
    bs_ue: np.ndarray


def draw_los_angles(num_ris: int, num_users: int,
                    rng: np.random.Generator) -> LosAngles:
    """Draw every link's LoS angle uniformly on [0, 2pi)."""
    two_pi = 2.0 * np.pi
    return LosAngles(
        bs_ris=rng.uniform(0.0, two_pi, num_ris),
        ris_side=rng.uniform(0.0, two_pi, num_ris),
        ris_ue=rng.uniform(0.0, two_pi, (num_ris, num_users)),
        bs_ue=rng.uniform(0.0, two_pi, num_users),
    )


def channel_means(geom: SystemGeometry, fading: FadingConfig,
                  angles: LosAngles, m: int, n: int
                  ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-link channel means (G_mean, h_r_mean, h_d_mean) given the angles.

    Under the Rician model the mean is the sqrt(kappa/(kappa+1))-weighted
    steering response times the link amplitude; under pure LoS the weight
    is 1.  Shapes match the corresponding ChannelSet fields.
    """
    R = len(geom.ris_positions)
    K = len(geom.ue_positions)
    if fading.model == "pure_los":
        w = 1.0
    else:
        w = np.sqrt(fading.kappa / (fading.kappa + 1.0))
    e = geom.exponents
    G_mean = np.empty((R, m, n), dtype=np.complex128)
    h_r_mean = np.empty((R, K, n), dtype=np.complex128)
    h_d_mean = np.empty((K, m), dtype=np.complex128)
    for r in range(R):
        amp = geom.link_amplitude(geom.distance_bs_ris(r), e.bs_ris)
        G_mean[r] = w * amp * np.outer(
            ula_steering(m, angles.bs_ris[r]),
            ula_steering(n, angles.ris_side[r]).conj())
        for k in range(K):
            amp = geom.link_amplitude(geom.distance_ris_ue(r, k), e.ue_ris)
            h_r_mean[r, k] = w * amp * ula_steering(n, angles.ris_ue[r, k])
    for k in range(K):
        amp = geom.link_amplitude(geom.distance_bs_ue(k), e.bs_ue)
        h_d_mean[k] = w * amp * ula_steering(m, angles.bs_ue[k])
    return G_mean, h_r_mean, h_d_mean


def assemble_channels(geom: SystemGeometry, fading: FadingConfig,
                      angles: LosAngles, m: int, n: int,
                      rng: np.random.Generator,
                      noise_power_mw: float = 0.0) -> ChannelSet:
    """One fast-fading realization on top of the given LoS angles.

    Scatter is drawn link by link in a fixed order (G per RIS, then h_r
    per RIS and user, then h_d per user) so results are reproducible for
    a given generator state.
    """
    R = len(geom.ris_positions)
    K = len(geom.ue_positions)
    e = geom.exponents
    G = np.empty((R, m, n), dtype=np.complex128)
    h_r = np.empty((R, K, n), dtype=np.complex128)
    h_d = np.empty((K, m), dtype=np.complex128)
    for r in range(R):
        los = np.outer(ula_steering(m, angles.bs_ris[r]),
                       ula_steering(n, angles.ris_side[r]).conj())
        amp = geom.link_amplitude(geom.distance_bs_ris(r), e.bs_ris)
        G[r] = amp * fading.mix(los, _crandn(rng, m, n))
    for r in range(R):
        for k in range(K):
            los = ula_steering(n, angles.ris_ue[r, k])
            amp = geom.link_amplitude(geom.distance_ris_ue(r, k), e.ue_ris)
            h_r[r, k] = amp * fading.mix(los, _crandn(rng, n))
    for k in range(K):
        los = ula_steering(m, angles.bs_ue[k])
        amp = geom.link_amplitude(geom.distance_bs_ue(k), e.bs_ue)
        h_d[k] = amp * fading.mix(los, _crandn(rng, m))
    return ChannelSet(G=G, h_r=h_r, h_d=h_d, noise_power_mw=noise_power_mw)


def sample_channels(geom: SystemGeometry, fading: FadingConfig, m: int,
                    n: int, seed: int,
                    noise_power_mw: float = 0.0) -> ChannelSet:
    """Draw LoS angles and one fading realization for every link.

    ``n = 0`` is allowed and models a disconnected RIS with no elements.
    """
    if m < 1 or n < 0:
        raise ValueError("m must be >= 1 and n >= 0")
    rng = np.random.default_rng(seed)
    angles = draw_los_angles(len(geom.ris_positions), len(geom.ue_positions),
                             rng)
    return assemble_channels(geom, fading, angles, m, n, rng, noise_power_mw)


def _theta_array(theta, expected: int) -> np.ndarray:
    if isinstance(theta, ManifoldPoint):
        arr = theta.ambient
    else:
        arr = np.asarray(theta, dtype=np.complex128)
    arr = arr.reshape(-1)
    if arr.size != expected:
        raise ValueError(
            f"theta has {arr.size} entries, channel set needs {expected}")
    return arr


def cascade_matrix(ch: ChannelSet, k: int) -> np.ndarray:
    """A_k = [G_1 diag(h_r[1,k]) ... G_R diag(h_r[R,k])], shape (M, R*N)."""
    if ch.num_ris == 0:
        return np.zeros((ch.num_antennas, 0), dtype=np.complex128)
    return np.hstack([ch.G[r] * ch.h_r[r, k][np.newaxis, :]
                      for r in range(ch.num_ris)])


def cascade_tensor(ch: ChannelSet) -> np.ndarray:
    """All cascade matrices stacked: shape (K, M, R*N)."""
    return np.stack([cascade_matrix(ch, k) for k in range(ch.num_users)])


def composite_channel(ch: ChannelSet, theta, k: int) -> np.ndarray:
    """h_k(theta) = h_d[k] + A_k theta for user k (length-M vector)."""
    arr = _theta_array(theta, ch.num_ris * ch.num_elements)
    return ch.h_d[k] + cascade_matrix(ch, k) @ arr


def composite_channels(ch: ChannelSet, theta,
                       cascades: np.ndarray = None) -> np.ndarray:
    """Channel matrix H(theta) with h_k(theta) as columns, shape (M, K).

    Pass a precomputed ``cascade_tensor`` result to skip reassembly in
    hot loops.
    """
    arr = _theta_array(theta, ch.num_ris * ch.num_elements)
    if cascades is None:
        cascades = cascade_tensor(ch)
    return ch.h_d.T + (cascades @ arr).T
