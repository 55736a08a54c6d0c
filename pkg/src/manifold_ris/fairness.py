"""Max-min fair downlink design: closed-form equal-SINR power allocation
on top of zero forcing, with the reflection phases chosen to maximize the
resulting common SINR.

Because zero forcing equalizes users through p_k proportional to the
diagonal of (H^H H)^-1, the common SINR is

    gamma(theta) = p_max / (sigma^2 tr((H(theta)^H H(theta))^-1)),

so the phase problem is a trace-inverse minimization over the unit-
modulus manifold.  Both the gamma-maximization and trace-minimization
formulations are available; they share the same stationary points.
"""

from __future__ import annotations

import dataclasses
import time
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from . import solvers
from .beamforming import MAX_CONDITION, SingularChannelError
from .channel import (
    ChannelSet,
    FadingConfig,
    SystemGeometry,
    cascade_tensor,
    composite_channels,
    dbm_to_mw,
    place_users_semicircle,
    sample_channels,
)
from .manifolds import ComplexCircle, ManifoldPoint, random_point

SCHEMA_VERSION = 1
CSV_COLUMNS = ("schema_version", "config_hash", "method", "p_max_dbm",
               "trial", "common_rate_bps_hz", "runtime_ms", "iters")


@dataclasses.dataclass(frozen=True)
class FairnessConfig:
    m: int = 8
    k: int = 4
    n: int = 32
    p_max_dbm: Tuple[float, ...] = (15.0, 20.0, 25.0, 30.0)
    noise_dbm: float = -104.0
    solver: str = "rcg"
    baselines: Tuple[str, ...] = ("random_phase", "per_element_analytical")
    analytical_sweeps: int = 2
    max_iters: int = 500
    ris_distance_m: float = 700.0
    user_radius_m: float = 20.0
    kappa: float = 10.0
    record_runtime: bool = False

    def __post_init__(self):
        if self.k > self.m:
            raise ValueError("need k <= m for zero forcing")
        if not self.p_max_dbm:
            raise ValueError("p_max_dbm sweep must be non-empty")
        if self.solver not in ("rcg", "rgd"):
            raise ValueError(f"unknown solver {self.solver!r}")
        for b in self.baselines:
            if b not in ("random_phase", "per_element_analytical"):
                raise ValueError(f"unknown baseline {b!r}")

    @property
    def noise_mw(self) -> float:
        return dbm_to_mw(self.noise_dbm)


def build_geometry(cfg: FairnessConfig) -> SystemGeometry:
    ris = (cfg.ris_distance_m, 0.0)
    users = place_users_semicircle(cfg.k, cfg.user_radius_m, ris)
    return SystemGeometry(bs_position=(0.0, 0.0), ris_positions=(ris,),
                          ue_positions=users)


def _channel_matrix(ch: ChannelSet, theta, cascades) -> np.ndarray:
    H = composite_channels(ch, theta, cascades)
    if np.linalg.cond(H) >= MAX_CONDITION:
        raise SingularChannelError(
            "composite channel condition number exceeds the limit")
    return H


def _trace_inverse_parts(H: np.ndarray, cascades: np.ndarray
                         ) -> Tuple[float, np.ndarray]:
    """tr((H^H H)^-1) and the matching conjugate-coordinate gradient
    (times two) of the trace with respect to theta."""
    C = H.conj().T @ H
    Cinv = np.linalg.inv(C)
    trace = float(np.real(np.trace(Cinv)))
    # d tr(C^-1) = -2 Re tr(C^-2 H^H dH) with dH[:, k] = A_k d(theta)
    M1 = H @ (Cinv @ Cinv)
    egrad = -2.0 * np.einsum("kmn,mk->n", cascades.conj(), M1)
    return trace, egrad


def trace_inverse_objective(ch: ChannelSet, theta, noise_mw: float,
                            p_max_mw: float,
                            cascades: Optional[np.ndarray] = None
                            ) -> Tuple[float, np.ndarray]:
    """Common SINR gamma(theta) and its gradient for maximization."""
    if cascades is None:
        cascades = cascade_tensor(ch)
    H = _channel_matrix(ch, theta, cascades)
    trace, egrad_trace = _trace_inverse_parts(H, cascades)
    gamma = p_max_mw / (noise_mw * trace)
    egrad = -(p_max_mw / (noise_mw * trace * trace)) * egrad_trace
    return gamma, egrad


def make_fairness_problem(ch: ChannelSet, noise_mw: float, p_max_mw: float,
                          formulation: str = "gamma") -> solvers.Problem:
    """Solver problem for the phase step, in either formulation.

    ``gamma`` maximizes the common SINR directly; ``trace`` minimizes
    tr((H^H H)^-1).  The optimizers coincide.
    """
    if formulation not in ("gamma", "trace"):
        raise ValueError(f"unknown formulation {formulation!r}")
    cascades = cascade_tensor(ch)
    manifold = ComplexCircle(ch.num_ris * ch.num_elements)

    if formulation == "gamma":
        def cost(x):
            return trace_inverse_objective(ch, x, noise_mw, p_max_mw,
                                           cascades)[0]

        def egrad(x):
            return trace_inverse_objective(ch, x, noise_mw, p_max_mw,
                                           cascades)[1]

        return solvers.Problem(manifold, cost, egrad, sense="maximize")

    def cost(x):
        H = _channel_matrix(ch, x, cascades)
        return _trace_inverse_parts(H, cascades)[0]

    def egrad(x):
        H = _channel_matrix(ch, x, cascades)
        return _trace_inverse_parts(H, cascades)[1]

    return solvers.Problem(manifold, cost, egrad, sense="minimize")


def _trace_on_phase_grid(C0: np.ndarray, E: np.ndarray,
                         phases: np.ndarray) -> np.ndarray:
    """tr(C(phi)^-1) on a batch of phases for the rank-2 phase update
    C(phi) = C0 + e^{j phi} E + e^{-j phi} E^H."""
    rot = np.exp(1j * phases)[:, np.newaxis, np.newaxis]
    C = C0[np.newaxis] + rot * E[np.newaxis] + rot.conj() \
        * E.conj().swapaxes(-1, -2)[np.newaxis]
    return np.real(np.einsum("gkk->g", np.linalg.inv(C)))


def per_element_analytical_baseline(ch: ChannelSet, theta0: ManifoldPoint,
                                    noise_mw: float, p_max_mw: float,
                                    sweeps: int = 1, grid: int = 360
                                    ) -> Tuple[ManifoldPoint, float]:
    """Cyclic per-element phase updates with a grid + golden-section search.

    Each element's phase is optimized with all others fixed; the common
    SINR never decreases across updates.
    """
    if sweeps < 0:
        raise ValueError("sweeps must be >= 0")
    cascades = cascade_tensor(ch)
    theta = theta0.ambient.reshape(-1).copy()
    total = theta.size
    H = composite_channels(ch, theta, cascades)
    phases = np.linspace(0.0, 2.0 * np.pi, grid, endpoint=False)
    delta = 2.0 * np.pi / grid
    for _ in range(sweeps):
        for n in range(total):
            B = cascades[:, :, n].T          # column k = A_k[:, n]
            H0 = H - theta[n] * B
            C0 = H0.conj().T @ H0 + B.conj().T @ B
            E = H0.conj().T @ B

            def trace_at(phi):
                return float(_trace_on_phase_grid(C0, E, np.array([phi]))[0])

            current = trace_at(float(np.angle(theta[n])))
            values = _trace_on_phase_grid(C0, E, phases)
            g = int(np.argmin(values))
            best_phi, best_val = float(phases[g]), float(values[g])
            bracket = (best_phi - delta, best_phi, best_phi + delta)
            if trace_at(bracket[0]) > best_val < trace_at(bracket[2]):
                res = optimize.minimize_scalar(
                    trace_at, bracket=bracket, method="golden",
                    options={"xtol": 1e-7})
                if res.fun < best_val:
                    best_phi, best_val = float(res.x), float(res.fun)
            if best_val < current:
                theta[n] = np.exp(1j * best_phi)
                H = H0 + theta[n] * B
    point = ManifoldPoint.create(ComplexCircle(total), theta)
    trace, _ = _trace_inverse_parts(H, cascades)
    return point, p_max_mw / (noise_mw * trace)


def _direct_only_trace(ch: ChannelSet) -> float:
    H = ch.h_d.T
    if np.linalg.cond(H) >= MAX_CONDITION:
        raise SingularChannelError("direct channel is rank deficient")
    C = H.conj().T @ H
    return float(np.real(np.trace(np.linalg.inv(C))))


def run_trial_app1(cfg: FairnessConfig, seed: int) -> Tuple[list, int]:
    """One Monte-Carlo trial; returns (rows, resample_count).

    Channel draws whose composite matrix is numerically rank deficient
    are discarded and redrawn with an offset seed.
    """
    geom = build_geometry(cfg)
    fading = FadingConfig("rician", cfg.kappa)
    noise = cfg.noise_mw
    p_ref = dbm_to_mw(cfg.p_max_dbm[0])

    resampled = 0
    draw_seed = seed
    while True:
        ch = sample_channels(geom, fading, cfg.m, cfg.n, draw_seed,
                             noise_power_mw=noise)
        rng = np.random.default_rng(draw_seed + 1)
        try:
            if cfg.n == 0:
                trace_random = trace_mo = trace_an = _direct_only_trace(ch)
                iters = 0
                elapsed_ms = 0.0
            else:
                theta0 = random_point(ComplexCircle(cfg.n), rng)
                problem = make_fairness_problem(ch, noise, p_ref, "trace")
                trace_random = problem.cost(theta0)
                start = time.perf_counter()
                solve = solvers.solve_rcg if cfg.solver == "rcg" \
                    else solvers.solve_rgd
                _, trace_sol = solve(
                    problem, theta0,
                    solvers.SolverOptions(max_iters=cfg.max_iters))
                elapsed_ms = 1e3 * (time.perf_counter() - start)
                trace_mo = trace_sol.final_cost
                iters = trace_sol.num_iters
                trace_an = None
                if "per_element_analytical" in cfg.baselines:
                    _, gamma_an = per_element_analytical_baseline(
                        ch, theta0, noise, p_ref,
                        sweeps=cfg.analytical_sweeps)
                    trace_an = p_ref / (noise * gamma_an)
            break
        except SingularChannelError:
            resampled += 1
            draw_seed = seed + 1_000_003 * resampled

    rows = []
    runtime = elapsed_ms if cfg.record_runtime else 0.0

    def emit(method, trace_val, n_iters, ms):
        if trace_val is None:
            return
        for p_dbm in cfg.p_max_dbm:
            gamma = dbm_to_mw(p_dbm) / (noise * trace_val)
            rows.append({
                "method": method,
                "p_max_dbm": p_dbm,
                "trial": seed,
                "common_rate_bps_hz": float(np.log2(1.0 + gamma)),
                "runtime_ms": ms,
                "iters": n_iters,
            })

    emit("mo", trace_mo, iters, runtime)
    if "random_phase" in cfg.baselines or cfg.n == 0:
        emit("random_phase", trace_random, 0, 0.0)
    if cfg.n == 0:
        emit("per_element_analytical", trace_an, 0, 0.0)
    elif "per_element_analytical" in cfg.baselines:
        emit("per_element_analytical", trace_an,
             cfg.analytical_sweeps * cfg.n, 0.0)
    return rows, resampled


def run_app1(cfg: FairnessConfig, seed: int, trials: int = 1
             ) -> Tuple[list, int]:
    """Serial Monte-Carlo driver; trial t uses seed + t."""
    rows = []
    resampled = 0
    for t in range(trials):
        trial_rows, n_res = run_trial_app1(cfg, seed + t)
        for row in trial_rows:
            row["trial"] = t
        rows.extend(trial_rows)
        resampled += n_res
    return rows, resampled
