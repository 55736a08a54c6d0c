"""Grant-free random access behind a beam-swept reflecting surface.

A base station reaches a device area only via a reflecting surface.  In a
sounding phase the surface sweeps reflection configurations, each device
listens and picks the beam it hears best, and in the access phase the
surface cycles through the fine beam set, one slot per beam, while every
device transmits a randomly chosen pilot in its beam's slot.  A device
succeeds when it is alone on its (beam, pilot) resource and its matched
filter clears a decoding threshold.

Two sounding schemes are compared.  The one-beam-per-slot sweep spends a
slot on every access beam.  The bundled scheme sounds a uniform angle
grid of b**2 beams with 2 b configurations: b bundles of consecutive
grid beams, then b bundles of interleaved grid beams, so each grid beam
is identified by the (consecutive winner, interleaved winner) pair.
Bundle configurations are unit-modulus phase profiles fitted to a
multi-lobe gain mask on the reflection manifold.

Power, noise, and geometry live in :class:`GfraConfig`; per-trial output
rows follow ``CSV_COLUMNS``.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Dict, List, Sequence, Tuple

import numpy as np

from . import solvers
from .manifolds import ComplexCircle, ManifoldPoint

SCHEMA_VERSION = 1

SINGLE = "single_beam"
MULTI = "multi_beam"
SCHEMES = (SINGLE, MULTI)

CSV_COLUMNS = ("scheme", "device_count", "trial", "successes",
               "throughput", "sum_se_bpcu")

PATTERN_COLUMNS = ("scheme", "config", "angle_deg", "gain_db")


def steering_grid(n: int, u) -> np.ndarray:
    """Steering vectors of an n-element half-wavelength ULA, stacked.

    ``u`` holds spatial frequencies (cosine of the angle from the array
    axis); the result has shape ``(len(u), n)`` and unit-modulus entries,
    matching ``channel.ula_steering(n, arccos(u))`` row by row.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    return np.exp(1j * np.pi * np.outer(u, np.arange(n)))


# ---------------------------------------------------------------------------
# Beam codebook


@dataclasses.dataclass(frozen=True)
class Codebook:
    """Orthogonal beam set of an n-element surface row.

    Beam b points at spatial frequency (2 b + 1 - n) / n; the grid is
    symmetric around broadside and contains no endfire beam.  ``configs``
    holds one unit-modulus steering profile per beam, ``in_sector`` the
    beam indices whose pointing angle falls inside ``sector_deg``.
    """

    n_h: int
    sector_deg: Tuple[float, float]
    u: np.ndarray
    point_deg: np.ndarray
    configs: np.ndarray
    in_sector: np.ndarray

    @property
    def num_access(self) -> int:
        return int(self.in_sector.size)

    @property
    def access_u(self) -> np.ndarray:
        return self.u[self.in_sector]

    @property
    def access_configs(self) -> np.ndarray:
        return self.configs[self.in_sector]


def dft_beam_codebook(n_h: int,
                      sector_deg: Tuple[float, float] = (45.0, 135.0),
                      ) -> Codebook:
    """Build the odd-grid orthogonal codebook and its in-sector subset.

    Beams are ordered by increasing spatial frequency, i.e. decreasing
    pointing angle.  Raises if the sector excludes every beam.
    """
    if n_h < 1:
        raise ValueError("n_h must be >= 1")
    lo, hi = float(sector_deg[0]), float(sector_deg[1])
    if not (0.0 <= lo < hi <= 180.0):
        raise ValueError("sector must satisfy 0 <= lo < hi <= 180 degrees")
    b = np.arange(n_h)
    u = (2.0 * b + 1.0 - n_h) / n_h
    point_deg = np.degrees(np.arccos(u))
    configs = steering_grid(n_h, u)
    in_sector = np.nonzero((point_deg >= lo) & (point_deg <= hi))[0]
    if in_sector.size == 0:
        raise ValueError("sector excludes every codebook beam")
    return Codebook(n_h=n_h, sector_deg=(lo, hi), u=u, point_deg=point_deg,
                    configs=configs, in_sector=in_sector)


# ---------------------------------------------------------------------------
# Multi-lobe configuration design


def mask_fit_objective(n_h: int, grid_u: np.ndarray, target: np.ndarray,
                       weight: np.ndarray):
    """Weighted least-squares fit of a normalised gain mask.

    The pattern gain at grid point i is |a(u_i)^H theta|^2 / n_h^2, so a
    single full-aperture beam peaks at 1.  Returns ``(cost, egrad)``
    closures over the length-n_h circle manifold; the gradient follows
    the conjugate-coordinate convention used by the solvers.
    """
    a = steering_grid(n_h, grid_u)
    a_conj = a.conj()
    target = np.asarray(target, dtype=float)
    weight = np.asarray(weight, dtype=float)
    norm = float(n_h) ** 2

    def unwrap(theta) -> np.ndarray:
        if isinstance(theta, ManifoldPoint):
            return theta.ambient
        return np.asarray(theta)

    def cost(theta) -> float:
        c = a_conj @ unwrap(theta)
        gain = np.abs(c) ** 2 / norm
        return float(np.sum(weight * (gain - target) ** 2))

    def egrad(theta) -> np.ndarray:
        c = a_conj @ unwrap(theta)
        gain = np.abs(c) ** 2 / norm
        return (4.0 / norm) * ((weight * (gain - target) * c) @ a)

    return cost, egrad


@dataclasses.dataclass(frozen=True)
class MultibeamDesign:
    """A fitted reflection profile plus its mask-quality report.

    ``below_spec`` is set when the fitted pattern has a weak intended
    lobe (floor under 0.6 of the in-band mean) or strong leakage
    (out-of-band mean above 0.15 of the in-band mean).
    """

    theta: np.ndarray
    intended: Tuple[int, ...]
    in_band_floor: float
    in_band_mean: float
    out_band_mean: float
    below_spec: bool


IN_BAND_HALF_WIDTH = 0.75
GUARD_HALF_WIDTH = 2.0


def _mask_zones(n_h: int, grid_u: np.ndarray, centers: np.ndarray):
    """Split the fitting grid into in-band islands and a guard ring.

    Islands cover 0.75 of a beam null spacing around each centre and
    carry the gain targets; the guard ring out to two null spacings has
    zero weight so the fit may roll off freely; everything beyond is the
    leakage region to suppress.
    """
    dist = np.abs(grid_u[:, None] - centers[None, :]).min(axis=1)
    in_band = dist <= IN_BAND_HALF_WIDTH / n_h
    guard = ~in_band & (dist <= GUARD_HALF_WIDTH / n_h)
    return in_band, guard


def multibeam_design(n_h: int, beam_u: np.ndarray, intended: Sequence[int],
                     sector_deg: Tuple[float, float], grid_size: int = 512,
                     in_band_weight: float = 1.0, out_band_weight: float = 4.0,
                     max_iters: int = 400, starts: int = 8,
                     refine_rounds: int = 3, seed: int = 0) -> MultibeamDesign:
    """Fit one unit-modulus profile serving a subset of beam directions.

    The mask asks for gain 1/B on each intended mainlobe island, ignores
    the guard ring, and drives the remaining grid toward zero with
    ``out_band_weight``.  Each start runs conjugate gradient on the
    circle manifold from the phase-only projection of a random-phase sum
    of the intended steering vectors; after every round the in-band
    weights are boosted where the pattern fell short of its target,
    which evens out the lobes.  The start with the best in-band floor
    over mean wins.
    """
    intended = tuple(int(i) for i in intended)
    if not intended:
        raise ValueError("intended beam set must be non-empty")
    beam_u = np.asarray(beam_u, dtype=float)
    centers = beam_u[list(intended)]
    num_beams = len(intended)

    lo, hi = sector_deg
    grid_u = np.cos(np.radians(np.linspace(lo, hi, grid_size)))
    in_band, guard = _mask_zones(n_h, grid_u, centers)
    target = np.where(in_band, 1.0 / num_beams, 0.0)
    base_weight = np.where(
        in_band, in_band_weight, np.where(guard, 0.0, out_band_weight))
    pattern_of = steering_grid(n_h, grid_u).conj()
    steer_t = steering_grid(n_h, centers).T
    manifold = ComplexCircle(n_h)
    if num_beams == 1:
        # every phase draw gives the same start up to a global phase
        starts = 1

    best = None
    for s in range(starts):
        rng = np.random.default_rng((seed, s))
        raw = steer_t @ np.exp(2j * np.pi * rng.random(num_beams))
        raw[np.abs(raw) < 1e-12] = 1.0
        x = ManifoldPoint.create(manifold, raw / np.abs(raw))
        weight = base_weight
        for _ in range(max(1, refine_rounds)):
            cost, egrad = mask_fit_objective(n_h, grid_u, target, weight)
            x, _ = solvers.solve_rcg(
                solvers.Problem(manifold, cost, egrad), x,
                solvers.SolverOptions(max_iters=max_iters))
            gain = np.abs(pattern_of @ x.ambient) ** 2 / n_h ** 2
            short = np.clip(
                target[in_band] / np.maximum(gain[in_band], 1e-9), 0.25, 4.0)
            weight = weight.copy()
            weight[in_band] = np.clip(weight[in_band] * short, 0.25, 16.0)
        floor_ratio = gain[in_band].min() / gain[in_band].mean()
        if best is None or floor_ratio > best[0]:
            best = (floor_ratio, x.ambient)
    theta = best[1]

    gain = np.abs(pattern_of @ theta) ** 2 / n_h ** 2
    suppress = ~in_band & ~guard
    in_mean = float(gain[in_band].mean())
    floor = float(gain[in_band].min())
    out_mean = float(gain[suppress].mean()) if suppress.any() else 0.0
    below = floor < 0.6 * in_mean or out_mean > 0.15 * in_mean
    return MultibeamDesign(theta=theta, intended=intended,
                           in_band_floor=floor, in_band_mean=in_mean,
                           out_band_mean=out_mean, below_spec=below)


# ---------------------------------------------------------------------------
# Sounding schedules


@dataclasses.dataclass(frozen=True)
class BeamSchedule:
    """Sounding configurations and the decode map back to access beams.

    ``configs`` has one row per sounding slot.  ``beam_u`` lists the
    sounding beam centres a device can decide between (equal to the slot
    count for the one-beam sweep, b**2 for the bundled scheme) and
    ``access_of`` maps each of them to the access beam used afterwards.
    """

    kind: str
    n_h: int
    beams_per_group: int
    configs: np.ndarray
    intended: Tuple[Tuple[int, ...], ...]
    beam_u: np.ndarray
    beam_point_deg: np.ndarray
    access_of: np.ndarray
    below_spec: Tuple[bool, ...]

    @property
    def sounding_slots(self) -> int:
        return int(self.configs.shape[0])


def build_schedule(kind: str, codebook: Codebook, beams_per_group: int = 7,
                   design_grid: int = 512, design_iters: int = 400,
                   design_starts: int = 8, design_refine_rounds: int = 3,
                   in_band_weight: float = 1.0,
                   out_band_weight: float = 4.0) -> BeamSchedule:
    """Construct the sounding schedule for one scheme.

    ``single_beam`` sweeps every in-sector codebook beam with its own
    steering profile.  ``multi_beam`` lays a uniform angle grid of
    beams_per_group**2 beams over the sector, maps each to the nearest
    in-sector codebook beam by pointing angle, and fits one profile per
    consecutive group and one per interleaved group.
    """
    if kind == SINGLE:
        point = codebook.point_deg[codebook.in_sector]
        return BeamSchedule(
            kind=kind, n_h=codebook.n_h, beams_per_group=1,
            configs=codebook.access_configs.copy(),
            intended=tuple((i,) for i in range(codebook.num_access)),
            beam_u=codebook.access_u.copy(), beam_point_deg=point.copy(),
            access_of=np.arange(codebook.num_access),
            below_spec=(False,) * codebook.num_access)
    if kind != MULTI:
        raise ValueError(f"unknown sounding scheme {kind!r}")

    k = beams_per_group
    if k < 1:
        raise ValueError("beams_per_group must be >= 1")
    lo, hi = codebook.sector_deg
    point_deg = np.linspace(lo, hi, k * k)
    beam_u = np.cos(np.radians(point_deg))
    access_point = codebook.point_deg[codebook.in_sector]
    access_of = np.abs(point_deg[:, None] - access_point[None, :]).argmin(axis=1)

    groups: List[Tuple[int, ...]] = []
    for c in range(k):
        groups.append(tuple(range(k * c, k * c + k)))
    for i in range(k):
        groups.append(tuple(range(i, k * k, k)))

    configs = np.empty((2 * k, codebook.n_h), dtype=complex)
    below: List[bool] = []
    for g, members in enumerate(groups):
        fit = multibeam_design(
            codebook.n_h, beam_u, members, codebook.sector_deg,
            grid_size=design_grid, in_band_weight=in_band_weight,
            out_band_weight=out_band_weight, max_iters=design_iters,
            starts=design_starts, refine_rounds=design_refine_rounds, seed=g)
        configs[g] = fit.theta
        below.append(fit.below_spec)

    return BeamSchedule(
        kind=kind, n_h=codebook.n_h, beams_per_group=k, configs=configs,
        intended=tuple(groups), beam_u=beam_u, beam_point_deg=point_deg,
        access_of=access_of, below_spec=tuple(below))


# ---------------------------------------------------------------------------
# Sounding and access stages


def _crandn(rng: np.random.Generator, *shape: int) -> np.ndarray:
    return (rng.standard_normal(shape)
            + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


@dataclasses.dataclass(frozen=True)
class SoundingResult:
    access_beam: np.ndarray
    sounding_beam: np.ndarray
    low_confidence: np.ndarray


def channel_sounding(schedule: BeamSchedule, device_u: np.ndarray,
                     snr_scale: np.ndarray, num_access: int,
                     rng: np.random.Generator) -> SoundingResult:
    """Per-device beam decision from noisy sounding observations.

    Device d observes sqrt(snr_scale[d]) * a(u_d)^H theta_s plus unit
    complex Gaussian noise in slot s and keeps the energy metric.  The
    one-beam sweep takes the argmax slot; the bundled scheme takes the
    argmax over consecutive bundles and over interleaved bundles and
    decodes the grid beam from the pair.  A device with zero channel
    scale learns nothing, so it is flagged and assigned a uniformly
    random access beam; its sounding beam is reported as -1.
    """
    device_u = np.asarray(device_u, dtype=float)
    snr_scale = np.asarray(snr_scale, dtype=float)
    received = steering_grid(schedule.n_h, device_u).conj() @ schedule.configs.T
    received = np.sqrt(snr_scale)[:, None] * received
    metric = np.abs(received + _crandn(rng, *received.shape)) ** 2

    if schedule.kind == SINGLE:
        choice = metric.argmax(axis=1)
    else:
        k = schedule.beams_per_group
        cons = metric[:, :k].argmax(axis=1)
        inter = metric[:, k:].argmax(axis=1)
        choice = cons * k + inter
    access = schedule.access_of[choice]

    blocked = snr_scale == 0.0
    sounding_beam = choice.astype(int)
    if blocked.any():
        access = access.copy()
        access[blocked] = rng.integers(0, num_access, int(blocked.sum()))
        sounding_beam = sounding_beam.copy()
        sounding_beam[blocked] = -1
    return SoundingResult(access_beam=access, sounding_beam=sounding_beam,
                          low_confidence=blocked)


@dataclasses.dataclass(frozen=True)
class AccessResult:
    success: np.ndarray
    sinr: np.ndarray
    pilot: np.ndarray


def access_stage(access_configs: np.ndarray, device_u: np.ndarray,
                 access_beam: np.ndarray, snr_scale: np.ndarray, tau_p: int,
                 threshold: float, rng: np.random.Generator) -> AccessResult:
    """Slotted access on the fine beam set with random pilots.

    Each device draws one of tau_p orthogonal pilots and transmits in its
    access beam's slot.  A device succeeds when no other device picked
    the same (beam, pilot) pair and its matched-filter SINR, snr_scale
    times the pattern gain of its beam at its own direction, reaches
    ``threshold`` (linear).  Orthogonal pilots and disjoint slots leave
    the failure modes as collisions and noise.
    """
    access_configs = np.asarray(access_configs)
    device_u = np.asarray(device_u, dtype=float)
    access_beam = np.asarray(access_beam, dtype=int)
    num_access = access_configs.shape[0]
    n_h = access_configs.shape[1]
    num_dev = device_u.size

    pilot = rng.integers(0, tau_p, num_dev)
    resource = access_beam * tau_p + pilot
    counts = np.bincount(resource, minlength=num_access * tau_p)
    unique = counts[resource] == 1

    rows = access_configs[access_beam]
    response = np.einsum("dk,dk->d", steering_grid(n_h, device_u).conj(), rows)
    sinr = np.asarray(snr_scale, dtype=float) * np.abs(response) ** 2
    return AccessResult(success=unique & (sinr >= threshold), sinr=sinr,
                        pilot=pilot)


# ---------------------------------------------------------------------------
# Experiment driver


@dataclasses.dataclass(frozen=True)
class GfraConfig:
    """Scenario for the grant-free access comparison.

    The base station has ``m`` antennas and serves through one surface
    row of ``n_h`` elements; devices lie in an annulus around the
    surface, uniform in angle over the sector and uniform in area over
    the radius range.  One transmit power figure drives both stages and
    the base-station array contributes its full coherent gain in both
    directions; each sounding slot carries a known sequence of
    ``sounding_symbols`` symbols whose matched filter adds that factor
    to the budget.  Small-scale fading is pure line of sight here, so
    the comparison isolates beam identification and collisions.
    """

    m: int = 128
    n_h: int = 64
    sector_deg: Tuple[float, float] = (45.0, 135.0)
    tau_p: int = 4
    sounding_symbols: int = 64
    sinr_threshold_db: float = 0.0
    schemes: Tuple[str, ...] = SCHEMES
    device_power_mw: float = 0.1
    noise_dbm: float = -104.0
    reference_gain_db: float = -30.0
    exponent_bs_ris: float = 2.5
    exponent_ris_device: float = 2.0
    bs_ris_distance_m: float = 100.0
    device_min_m: float = 20.0
    device_max_m: float = 60.0
    beams_per_group: int = 7
    design_grid: int = 512
    design_iters: int = 400
    design_starts: int = 8
    design_refine_rounds: int = 3
    in_band_weight: float = 1.0
    out_band_weight: float = 4.0

    def __post_init__(self):
        object.__setattr__(self, "sector_deg",
                           (float(self.sector_deg[0]),
                            float(self.sector_deg[1])))
        object.__setattr__(self, "schemes", tuple(self.schemes))
        lo, hi = self.sector_deg
        if not (0.0 <= lo < hi <= 180.0):
            raise ValueError("sector must satisfy 0 <= lo < hi <= 180")
        for name in ("m", "n_h", "tau_p", "sounding_symbols",
                     "beams_per_group", "design_iters", "design_starts",
                     "design_refine_rounds"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.design_grid < 2:
            raise ValueError("design_grid must be >= 2")
        for name in ("device_power_mw", "bs_ris_distance_m",
                     "exponent_bs_ris", "exponent_ris_device",
                     "in_band_weight"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be > 0")
        if self.out_band_weight < 0.0:
            raise ValueError("out_band_weight must be >= 0")
        if not 0.0 < self.device_min_m < self.device_max_m:
            raise ValueError("device radii must satisfy 0 < min < max")
        unknown = set(self.schemes) - set(SCHEMES)
        if unknown or not self.schemes:
            raise ValueError(f"schemes must be a non-empty subset of {SCHEMES}")

    @property
    def noise_mw(self) -> float:
        return 10.0 ** (self.noise_dbm / 10.0)

    @property
    def threshold_linear(self) -> float:
        return 10.0 ** (self.sinr_threshold_db / 10.0)

    @property
    def reference_gain(self) -> float:
        return 10.0 ** (self.reference_gain_db / 10.0)


def build_schedules(cfg: GfraConfig,
                    codebook: Codebook) -> Dict[str, BeamSchedule]:
    return {kind: build_schedule(
        kind, codebook, beams_per_group=cfg.beams_per_group,
        design_grid=cfg.design_grid, design_iters=cfg.design_iters,
        design_starts=cfg.design_starts,
        design_refine_rounds=cfg.design_refine_rounds,
        in_band_weight=cfg.in_band_weight,
        out_band_weight=cfg.out_band_weight) for kind in cfg.schemes}


def _draw_devices(cfg: GfraConfig, count: int,
                  rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    lo, hi = cfg.sector_deg
    angle_deg = rng.uniform(lo, hi, count)
    radius = np.sqrt(rng.uniform(cfg.device_min_m ** 2,
                                 cfg.device_max_m ** 2, count))
    return np.cos(np.radians(angle_deg)), radius


def _link_scale(cfg: GfraConfig, radius: np.ndarray) -> np.ndarray:
    """End-to-end power gain over noise, before array and pattern gains."""
    g0 = cfg.reference_gain
    bs_leg = g0 * cfg.bs_ris_distance_m ** (-cfg.exponent_bs_ris)
    dev_leg = g0 * radius ** (-cfg.exponent_ris_device)
    return cfg.device_power_mw * cfg.m * bs_leg * dev_leg / cfg.noise_mw


def sum_spectral_efficiency(success_sinr: np.ndarray, t_sound: int,
                            t_access: int) -> float:
    """Overhead-weighted sum rate of the successful devices.

    The access fraction of the frame is t_access/(t_sound + t_access)
    and the per-beam average spreads over t_access slots, which folds to
    dividing the rate sum by the total slot count.
    """
    return float(np.log2(1.0 + np.asarray(success_sinr, dtype=float)).sum()
                 / (t_sound + t_access))


def run_trial_app4(cfg: GfraConfig, codebook: Codebook,
                   schedules: Dict[str, BeamSchedule], seed: int,
                   device_count: int) -> List[Dict]:
    """One drop of devices, sounded and granted under every scheme.

    Device positions are shared across schemes; sounding noise and pilot
    draws are scheme-specific.  Throughput normalises successes by the
    full resource pool (access beams times pilots) and the sum spectral
    efficiency divides by sounding plus access slots.
    """
    rng = np.random.default_rng(seed)
    device_u, radius = _draw_devices(cfg, device_count, rng)
    scale = _link_scale(cfg, radius)
    num_access = codebook.num_access
    resources = num_access * cfg.tau_p

    rows = []
    for scheme in cfg.schemes:
        schedule = schedules[scheme]
        # each sounding slot carries a known sequence; matched filtering
        # over it buys the integration gain on top of the link budget
        sounding = channel_sounding(schedule, device_u,
                                    cfg.sounding_symbols * scale,
                                    num_access, rng)
        outcome = access_stage(codebook.access_configs, device_u,
                               sounding.access_beam, cfg.tau_p * scale,
                               cfg.tau_p, cfg.threshold_linear, rng)
        successes = int(np.count_nonzero(outcome.success))
        se = sum_spectral_efficiency(outcome.sinr[outcome.success],
                                     schedule.sounding_slots, num_access)
        rows.append({
            "scheme": scheme,
            "device_count": device_count,
            "trial": 0,
            "successes": successes,
            "throughput": successes / resources,
            "sum_se_bpcu": se,
        })
    return rows


def run_app4(cfg: GfraConfig, seed: int,
             device_counts: Sequence[int] = (46, 92, 184, 368),
             trials: int = 1, codebook: Codebook = None,
             schedules: Dict[str, BeamSchedule] = None) -> List[Dict]:
    """Monte-Carlo sweep over device loads; load i, trial t uses
    seed + i * trials + t.

    ``codebook`` and ``schedules`` may be passed in to reuse designs
    across calls; both are rebuilt from the config when omitted.
    """
    counts = [int(c) for c in device_counts]
    if any(c < 1 for c in counts):
        raise ValueError("device counts must be >= 1")
    if codebook is None:
        codebook = dft_beam_codebook(cfg.n_h, cfg.sector_deg)
    if schedules is None:
        schedules = build_schedules(cfg, codebook)
    missing = set(cfg.schemes) - set(schedules)
    if missing:
        raise ValueError(f"schedules missing for schemes {sorted(missing)}")
    rows = []
    for i, count in enumerate(counts):
        for t in range(trials):
            trial_rows = run_trial_app4(cfg, codebook, schedules,
                                        seed + i * trials + t, count)
            for row in trial_rows:
                row["trial"] = t
            rows.extend(trial_rows)
    return rows


def pattern_rows(cfg: GfraConfig, num_points: int = 361) -> List[Dict]:
    """Normalised gain of every sounding configuration on an angle grid.

    One row per (scheme, configuration, angle); gains are relative to a
    full-aperture single beam peak, floored at -80 dB.
    """
    codebook = dft_beam_codebook(cfg.n_h, cfg.sector_deg)
    schedules = build_schedules(cfg, codebook)
    angles = np.linspace(0.0, 180.0, num_points)
    a_conj = steering_grid(cfg.n_h, np.cos(np.radians(angles))).conj()
    rows = []
    for scheme in cfg.schemes:
        gains = np.abs(a_conj @ schedules[scheme].configs.T) ** 2
        gains = np.maximum(gains / cfg.n_h ** 2, 1e-8)
        for c in range(gains.shape[1]):
            for angle, g in zip(angles, gains[:, c]):
                rows.append({"scheme": scheme, "config": c,
                             "angle_deg": float(angle),
                             "gain_db": float(10.0 * np.log10(g))})
    return rows
