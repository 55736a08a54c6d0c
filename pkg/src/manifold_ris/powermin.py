"""Uplink transmit-power minimization under per-user SE targets.

Each trial alternates five steps: MMSE combining at fixed powers, a
manifold ascent on the multiplier-weighted SINR sum, a combiner refresh,
a subgradient update of the multipliers, and target-SINR power control.
The reflection schemes under comparison (none, random, and the three
manifold optimizers) share identical channel draws.
"""

from __future__ import annotations

import dataclasses
from typing import Optional, Sequence, Tuple

import numpy as np

from . import solvers
from .beamforming import BeamformerState, compute_sinr, mmse_combiner
from .channel import (
    ChannelSet,
    FadingConfig,
    SystemGeometry,
    cascade_tensor,
    composite_channels,
    dbm_to_mw,
    mw_to_dbm,
    place_users_semicircle,
    sample_channels,
)
from .manifolds import ComplexCircle, ManifoldPoint, random_point

SCHEMA_VERSION = 1
CSV_COLUMNS = ("schema_version", "config_hash", "scheme", "sweep_axis",
               "sweep_value", "trial", "p_ut_dbm", "feasible",
               "outer_iters_used")

SCHEMES = ("no_ris", "random", "sd", "cg", "pso")


@dataclasses.dataclass(frozen=True)
class EEConfig:
    m: int = 64
    n: int = 100
    k: int = 8
    p_max_dbm: float = 30.0
    noise_dbm: float = -104.0
    se_target: float = 1.0
    schemes: Tuple[str, ...] = SCHEMES
    outer_iters: int = 10
    outer_tol_db: float = 0.01
    mu0: float = 0.1
    power_tol: float = 1e-3
    power_iters: int = 500
    solver_iters: int = 120
    pso_swarm: int = 30
    pso_iters: int = 40
    ris_distance_m: float = 700.0
    user_radius_m: float = 20.0
    kappa: float = 10.0

    def __post_init__(self):
        if self.se_target <= 0:
            raise ValueError("SE target must be > 0")
        if dbm_to_mw(self.p_max_dbm) <= 0:
            raise ValueError("power budget must be > 0")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ValueError(f"unknown scheme {s!r}")

    @property
    def noise_mw(self) -> float:
        return dbm_to_mw(self.noise_dbm)

    @property
    def p_max_mw(self) -> float:
        return dbm_to_mw(self.p_max_dbm)

    @property
    def gamma_target(self) -> float:
        return 2.0 ** self.se_target - 1.0


def build_geometry(cfg: EEConfig) -> SystemGeometry:
    ris = (cfg.ris_distance_m, 0.0)
    users = place_users_semicircle(cfg.k, cfg.user_radius_m, ris)
    return SystemGeometry(bs_position=(0.0, 0.0), ris_positions=(ris,),
                          ue_positions=users)


def power_control_fixed_point(H: np.ndarray, W: np.ndarray,
                              gamma_targets: np.ndarray, noise_mw: float,
                              p_max_mw: float, p0: Optional[np.ndarray] = None,
                              max_iters: int = 500, tol: float = 1e-3
                              ) -> Tuple[np.ndarray, bool]:
    """Target-SINR power control p_k <- p_k gamma_k / SINR_k, clamped.

    Returns the power vector and a feasibility flag.  Infeasible means
    some user is pinned at its power limit while still below target.
    """
    gamma_targets = np.asarray(gamma_targets, dtype=float)
    k = H.shape[1]
    if np.any(gamma_targets <= 0):
        raise ValueError("SINR targets must be > 0")
    gains = np.abs(W.conj().T @ H) ** 2            # [i, j] = |w_i^H h_j|^2
    noise_eff = noise_mw * np.linalg.norm(W, axis=0) ** 2
    p = np.full(k, p_max_mw) if p0 is None else np.clip(p0, 0.0, p_max_mw)
    p = np.where(p > 0, p, p_max_mw)
    diag = np.diag(gains).copy()
    for _ in range(max_iters):
        total = gains @ p
        sinr = p * diag / (total - p * diag + noise_eff)
        if np.all(np.abs(sinr - gamma_targets) <= tol * gamma_targets):
            return p, True
        p_next = np.minimum(p * gamma_targets / sinr, p_max_mw)
        if np.array_equal(p_next, p):
            break
        p = p_next
    total = gains @ p
    sinr = p * diag / (total - p * diag + noise_eff)
    feasible = bool(np.all(np.abs(sinr - gamma_targets)
                           <= tol * gamma_targets))
    return p, feasible


def ee_theta_objective(ch: ChannelSet, theta, W: np.ndarray,
                       p: np.ndarray, lam: np.ndarray, noise_mw: float,
                       cascades: Optional[np.ndarray] = None,
                       cross_cascades: Optional[np.ndarray] = None
                       ) -> Tuple[float, np.ndarray]:
    """Multiplier-weighted uplink SINR sum and its phase gradient.

    ``cross_cascades[k, j] = A_j^H w_k`` may be precomputed once per
    combiner refresh; it does not depend on theta.
    """
    if cascades is None:
        cascades = cascade_tensor(ch)
    if cross_cascades is None:
        cross_cascades = np.einsum("jmn,mk->kjn", cascades.conj(), W)
    H = composite_channels(ch, theta, cascades)
    lam = np.asarray(lam, dtype=float)
    p = np.asarray(p, dtype=float)
    C = W.conj().T @ H                              # C[k, j] = w_k^H h_j
    gains = np.abs(C) ** 2
    signal = p * np.diag(gains)
    noise_eff = noise_mw * np.linalg.norm(W, axis=0) ** 2
    interf = (gains * p[np.newaxis, :]).sum(axis=1) - signal + noise_eff
    sinr = signal / interf
    value = float(np.sum(lam * sinr))
    # weights for sum_kj omega[k, j] * C[k, j] * (A_j^H w_k)
    omega = (-2.0 * (lam * signal / interf ** 2)[:, np.newaxis]
             * p[np.newaxis, :] * C)
    np.fill_diagonal(omega, 2.0 * lam * p * np.diag(C) / interf)
    egrad = np.einsum("kj,kjn->n", omega, cross_cascades)
    return value, egrad


def update_multipliers(lam: np.ndarray, sinr: np.ndarray,
                       gamma_targets: np.ndarray, mu: float) -> np.ndarray:
    """Projected subgradient step on the target-SINR constraint slack."""
    return np.maximum(0.0, lam + mu * (np.asarray(gamma_targets) - sinr))


def _uplink_sinr(H, W, p, noise_mw):
    return compute_sinr(H, BeamformerState(W, p, "uplink"), noise_mw)


@dataclasses.dataclass
class SchemeResult:
    p_ut_mw: float
    feasible: bool
    outer_iters_used: int


def _solve_theta(cfg: EEConfig, scheme: str, problem: solvers.Problem,
                 theta: ManifoldPoint, rng_seed: int) -> ManifoldPoint:
    if scheme == "sd":
        x, _ = solvers.solve_rgd(problem, theta,
                                 solvers.SolverOptions(
                                     max_iters=cfg.solver_iters))
    elif scheme == "cg":
        x, _ = solvers.solve_rcg(problem, theta,
                                 solvers.SolverOptions(
                                     max_iters=cfg.solver_iters))
    else:
        x, _ = solvers.solve_manifold_pso(
            problem, solvers.SolverOptions(max_iters=cfg.pso_iters,
                                           seed=rng_seed),
            swarm_size=cfg.pso_swarm, init_points=[theta])
    return x


def run_scheme(cfg: EEConfig, ch: ChannelSet, scheme: str,
               seed: int) -> SchemeResult:
    """Five-step alternating optimization for one scheme on one draw."""
    noise = cfg.noise_mw
    k = ch.num_users
    gamma_t = np.full(k, cfg.gamma_target)
    total_elems = ch.num_ris * ch.num_elements

    if scheme == "no_ris":
        theta = None
        H = ch.h_d.T.copy()
    elif scheme == "random":
        theta = random_point(ComplexCircle(total_elems),
                             np.random.default_rng(seed))
        H = composite_channels(ch, theta)
    else:
        theta = ManifoldPoint.create(ComplexCircle(total_elems),
                                     np.ones(total_elems, dtype=complex))
        H = composite_channels(ch, theta)

    cascades = cascade_tensor(ch) if scheme in ("sd", "cg", "pso") else None

    # Evaluate the starting phase vector before any optimization so the
    # returned power can never exceed what theta0 alone achieves.
    p = np.full(k, cfg.p_max_mw)
    W = mmse_combiner(H, p, noise)
    p, feasible = power_control_fixed_point(
        H, W, gamma_t, noise, cfg.p_max_mw, p0=p,
        max_iters=cfg.power_iters, tol=cfg.power_tol)
    best_put = float(p.sum())
    best_feasible = feasible
    prev_put_db = mw_to_dbm(best_put)

    lam = np.ones(k)
    used = 0
    for t in range(1, cfg.outer_iters + 1):
        used = t
        W = mmse_combiner(H, p, noise)
        if scheme in ("sd", "cg", "pso"):
            cross = np.einsum("jmn,mk->kjn", cascades.conj(), W)
            manifold = ComplexCircle(total_elems)

            def cost(x):
                return ee_theta_objective(ch, x, W, p, lam, noise,
                                          cascades, cross)[0]

            def egrad(x):
                return ee_theta_objective(ch, x, W, p, lam, noise,
                                          cascades, cross)[1]

            problem = solvers.Problem(manifold, cost, egrad,
                                      sense="maximize")
            theta = _solve_theta(cfg, scheme, problem, theta,
                                 rng_seed=seed + 17 * t)
            H = composite_channels(ch, theta, cascades)
            W = mmse_combiner(H, p, noise)
        p, feasible = power_control_fixed_point(
            H, W, gamma_t, noise, cfg.p_max_mw, p0=p,
            max_iters=cfg.power_iters, tol=cfg.power_tol)
        # Multiplier update sees the SINRs the power step actually delivers,
        # so prices move only while some target is genuinely unmet.
        sinr = _uplink_sinr(H, W, p, noise)
        lam = update_multipliers(lam, sinr, gamma_t, cfg.mu0 / np.sqrt(t))
        put = float(p.sum())
        if (feasible and not best_feasible) \
                or (feasible == best_feasible and put < best_put):
            best_put = put
            best_feasible = feasible
        put_db = mw_to_dbm(put)
        if abs(put_db - prev_put_db) < cfg.outer_tol_db:
            break
        prev_put_db = put_db
    return SchemeResult(p_ut_mw=best_put, feasible=best_feasible,
                        outer_iters_used=used)


def run_trial_app2(cfg: EEConfig, seed: int,
                   sweep_axis: str = "none",
                   sweep_value: float = 0.0) -> list:
    """All configured schemes on one shared channel draw."""
    geom = build_geometry(cfg)
    fading = FadingConfig("rician", cfg.kappa)
    ch = sample_channels(geom, fading, cfg.m, cfg.n, seed,
                         noise_power_mw=cfg.noise_mw)
    rows = []
    for scheme in cfg.schemes:
        res = run_scheme(cfg, ch, scheme, seed)
        rows.append({
            "scheme": scheme,
            "sweep_axis": sweep_axis,
            "sweep_value": sweep_value,
            "trial": seed,
            "p_ut_dbm": mw_to_dbm(res.p_ut_mw),
            "feasible": int(res.feasible),
            "outer_iters_used": res.outer_iters_used,
        })
    return rows


def run_app2(cfg: EEConfig, seed: int, trials: int = 1) -> list:
    """Serial Monte-Carlo driver; trial t uses seed + t."""
    rows = []
    for t in range(trials):
        trial_rows = run_trial_app2(cfg, seed + t)
        for row in trial_rows:
            row["trial"] = t
        rows.extend(trial_rows)
    return rows
