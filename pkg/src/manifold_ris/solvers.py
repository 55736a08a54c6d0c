"""First-order solvers on manifolds.

``solve_rgd`` is projected gradient descent with retraction: at each
step the Euclidean gradient is projected to the tangent space, a step is
taken along its negative, and the result is retracted back onto the
manifold.  The step length comes from Armijo backtracking by default; a
fixed step length is available through ``SolverOptions.fixed_step`` for
the textbook variant (which can stall on badly scaled objectives, hence
the default).

``solve_rcg`` adds Polak-Ribiere-plus conjugate directions with vector
transport, restarting to steepest descent whenever the beta coefficient
truncates to zero, the direction stops being a descent direction, or a
fixed iteration period elapses.

``solve_manifold_pso`` is a derivative-free particle swarm baseline:
velocities live in the ambient space and position updates are projected
to the tangent space and retracted, so particles never leave the
manifold.

``gradient_check`` validates a Problem's cost/gradient pair against
central finite differences through the retraction; every experiment
objective in this package is checked with it before use.

All solvers are deterministic given (problem, start, options, seed) and
single-threaded; parallelism belongs one level up, across Monte-Carlo
trials.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from . import manifolds as mf
from .manifolds import ManifoldPoint, TangentVector

CONVERGED = "converged"
MAX_ITERS = "max_iters"
DEGENERATE = "degenerate"

# when enabled (test builds), every iterate is re-validated against the
# manifold point invariant
CHECK_ITERATES = False

_PSO_INERTIA = 0.72
_PSO_COGNITIVE = 1.49
_PSO_SOCIAL = 1.49


@dataclass
class Problem:
    """A smooth objective restricted to a manifold.

    ``egrad`` must follow the conjugate-coordinate convention
    (``2 * df/d(conj(z))``): the directional derivative along a tangent
    v is then ``Re <egrad, v>``, which is what the tangent projection
    and the finite-difference checker assume.
    """

    manifold: object
    cost: Callable[[ManifoldPoint], float]
    egrad: Optional[Callable[[ManifoldPoint], np.ndarray]] = None
    sense: str = "minimize"

    def __post_init__(self):
        if self.sense not in ("minimize", "maximize"):
            raise ValueError(f"unknown sense {self.sense!r}")


@dataclass
class ArmijoParams:
    c1: float = 1e-4
    shrink: float = 0.5
    init_step: float = 1.0
    max_backtracks: int = 50

    def __post_init__(self):
        if not (0.0 < self.shrink < 1.0):
            raise ValueError("shrink must lie in (0, 1)")
        if self.c1 <= 0 or self.init_step <= 0:
            raise ValueError("Armijo constants must be positive")


@dataclass
class SolverOptions:
    max_iters: int = 500
    grad_tol: float = 1e-6
    armijo: ArmijoParams = field(default_factory=ArmijoParams)
    cg_restart_period: Optional[int] = None  # None -> manifold dimension
    seed: int = 0
    fixed_step: Optional[float] = None

    def __post_init__(self):
        if self.max_iters < 0:
            raise ValueError("max_iters must be non-negative")
        if self.grad_tol <= 0:
            raise ValueError("grad_tol must be positive")


@dataclass
class IterationRecord:
    index: int
    cost: float
    grad_norm: float
    step: float


@dataclass
class SolverTrace:
    iterations: List[IterationRecord] = field(default_factory=list)
    status: str = MAX_ITERS

    @property
    def costs(self) -> np.ndarray:
        return np.array([r.cost for r in self.iterations])

    @property
    def grad_norms(self) -> np.ndarray:
        return np.array([r.grad_norm for r in self.iterations])

    @property
    def final_cost(self) -> float:
        return self.iterations[-1].cost

    @property
    def num_iters(self) -> int:
        return self.iterations[-1].index


class _Objective:
    """Internal minimization view of a Problem (maximization negated)."""

    def __init__(self, p: Problem):
        self._p = p
        self._flip = -1.0 if p.sense == "maximize" else 1.0

    def cost(self, x: ManifoldPoint) -> float:
        return self._flip * float(self._p.cost(x))

    def rgrad(self, x: ManifoldPoint) -> TangentVector:
        e = self._p.egrad(x)
        if self._flip < 0:
            e = -np.asarray(e)
        return mf.egrad_to_rgrad(self._p.manifold, x, e)

    def user_cost(self, internal: float) -> float:
        return self._flip * internal


def _validated(m, x: ManifoldPoint) -> None:
    if CHECK_ITERATES:
        defect = m.point_defect(x.ambient)
        assert defect <= mf.POINT_TOL, f"iterate defect {defect:.3e}"


def _armijo(m, obj, x, fx, d, slope, armijo, trial):
    """Line search along d: backtrack from ``trial`` until the Armijo
    inequality holds, then forward-track (grow by 1/shrink) while that
    keeps improving the cost.  Returns (step, new point, new cost) or
    None when no acceptable step exists."""
    alpha = trial
    hit = None
    for _ in range(armijo.max_backtracks + 1):
        try:
            y = mf.retract(m, x, TangentVector(d.ambient * alpha, x))
        except mf.DegenerateRetractionError:
            return None
        fy = obj.cost(y)
        if fy <= fx + armijo.c1 * alpha * slope:
            hit = (alpha, y, fy)
            break
        # quadratic interpolation through f(0), f'(0), f(alpha), clamped
        # so each rejection still shrinks by at least the configured factor
        denom = 2.0 * (fy - fx - slope * alpha)
        if denom > 0.0 and np.isfinite(denom):
            alpha_q = -slope * alpha * alpha / denom
            alpha = min(max(alpha_q, 0.1 * alpha), armijo.shrink * alpha)
        else:
            alpha *= armijo.shrink
    if hit is None:
        return None
    if alpha == trial:
        # accepted immediately: the trial may be conservative, so probe
        # larger steps while they still satisfy Armijo and improve
        for _ in range(8):
            alpha2 = alpha / armijo.shrink
            try:
                y2 = mf.retract(m, x, TangentVector(d.ambient * alpha2, x))
            except mf.DegenerateRetractionError:
                break
            fy2 = obj.cost(y2)
            if fy2 <= fx + armijo.c1 * alpha2 * slope and fy2 < hit[2]:
                alpha = alpha2
                hit = (alpha2, y2, fy2)
            else:
                break
    return hit


def _next_trial(armijo, prev_alpha, prev_slope, slope):
    """Initial trial step: ``init_step`` on the first iteration, then
    the previous accepted step rescaled by the slope ratio (assume the
    new directional decrease matches the last one).  Damps oscillatory
    full steps and grows conservative ones; the line search corrects
    the rest."""
    if prev_alpha is None or slope >= 0.0 or prev_slope >= 0.0:
        return armijo.init_step
    trial = prev_alpha * prev_slope / slope
    if not np.isfinite(trial) or trial <= 0.0:
        return armijo.init_step
    return float(min(max(trial, 1e-14), 1e6))


def solve_rgd(p: Problem, x0: ManifoldPoint,
              opts: SolverOptions = None) -> Tuple[ManifoldPoint, SolverTrace]:
    """Riemannian gradient descent with retraction."""
    opts = opts or SolverOptions()
    m, obj = p.manifold, _Objective(p)
    trace = SolverTrace()
    x = x0
    fx = obj.cost(x)
    prev_alpha = prev_slope = None
    for k in range(opts.max_iters + 1):
        _validated(m, x)
        g = obj.rgrad(x)
        gn = mf.norm(m, x, g)
        trace.iterations.append(
            IterationRecord(k, obj.user_cost(fx), gn, _pop_step(trace)))
        if gn < opts.grad_tol:
            trace.status = CONVERGED
            return x, trace
        if k == opts.max_iters:
            break
        d = TangentVector(-g.ambient, x)
        if opts.fixed_step is not None:
            try:
                x = mf.retract(m, x, TangentVector(d.ambient * opts.fixed_step, x))
            except mf.DegenerateRetractionError:
                trace.status = DEGENERATE
                return x, trace
            fx = obj.cost(x)
            _note_step(trace, opts.fixed_step)
            continue
        slope = -gn * gn
        trial = _next_trial(opts.armijo, prev_alpha, prev_slope, slope)
        hit = _armijo(m, obj, x, fx, d, slope, opts.armijo, trial)
        if hit is None:
            # no decrease at machine-level steps: cannot make progress
            trace.status = MAX_ITERS
            return x, trace
        alpha, y, fy = hit
        prev_alpha, prev_slope = alpha, slope
        x, fx = y, fy
        _note_step(trace, alpha)
    trace.status = MAX_ITERS
    return x, trace


def _note_step(trace: SolverTrace, alpha: float) -> None:
    # the step that produced iterate k is recorded on iterate k's row,
    # which is appended at the top of the next loop pass
    trace._pending_step = alpha


def solve_rcg(p: Problem, x0: ManifoldPoint,
              opts: SolverOptions = None) -> Tuple[ManifoldPoint, SolverTrace]:
    """Riemannian conjugate gradient (Polak-Ribiere-plus with restarts)."""
    opts = opts or SolverOptions()
    m, obj = p.manifold, _Objective(p)
    period = opts.cg_restart_period or m.dim
    trace = SolverTrace()
    x = x0
    fx = obj.cost(x)
    g = obj.rgrad(x)
    gn = mf.norm(m, x, g)
    d = TangentVector(-g.ambient, x)
    prev_alpha = prev_slope = None
    for k in range(opts.max_iters + 1):
        _validated(m, x)
        trace.iterations.append(
            IterationRecord(k, obj.user_cost(fx), gn, _pop_step(trace)))
        if gn < opts.grad_tol:
            trace.status = CONVERGED
            return x, trace
        if k == opts.max_iters:
            break
        slope = mf.inner(m, x, g, d)
        if slope >= 0.0:
            # not a descent direction: restart to steepest descent
            d = TangentVector(-g.ambient, x)
            slope = -gn * gn
        trial = _next_trial(opts.armijo, prev_alpha, prev_slope, slope)
        hit = _armijo(m, obj, x, fx, d, slope, opts.armijo, trial)
        if hit is None:
            trace.status = MAX_ITERS
            return x, trace
        alpha, y, fy = hit
        prev_alpha, prev_slope = alpha, slope
        _note_step(trace, alpha)
        g_new = obj.rgrad(y)
        gn_new = mf.norm(m, y, g_new)
        if (k + 1) % period == 0:
            d = TangentVector(-g_new.ambient, y)
        else:
            g_prev = mf.transport(m, x, y, g)
            beta = max(0.0, mf.inner(m, y, g_new,
                                     TangentVector(g_new.ambient - g_prev.ambient, y))
                       / (gn * gn))
            if beta == 0.0:
                d = TangentVector(-g_new.ambient, y)
            else:
                d_t = mf.transport(m, x, y, d)
                d = TangentVector(-g_new.ambient + beta * d_t.ambient, y)
        x, fx, g, gn = y, fy, g_new, gn_new
    trace.status = MAX_ITERS
    return x, trace


def _pop_step(trace: SolverTrace) -> float:
    alpha = getattr(trace, "_pending_step", 0.0)
    trace._pending_step = 0.0
    return alpha


def solve_manifold_pso(p: Problem, opts: SolverOptions = None,
                       swarm_size: int = 40,
                       init_points: Optional[Sequence[ManifoldPoint]] = None,
                       ) -> Tuple[ManifoldPoint, SolverTrace]:
    """Particle swarm over the manifold (derivative-free baseline).

    Velocities are ambient arrays; each position update projects the
    velocity to the tangent space at the particle and retracts.  The
    best-so-far cost sequence recorded in the trace is monotone.
    """
    opts = opts or SolverOptions()
    if swarm_size < 1:
        raise ValueError("swarm_size must be at least 1")
    m, obj = p.manifold, _Objective(p)
    rng = np.random.default_rng(opts.seed)
    shape = m.ambient_shape

    particles: List[ManifoldPoint] = list(init_points or [])[:swarm_size]
    while len(particles) < swarm_size:
        particles.append(mf._wrap_point(m, m.random(rng)))
    velocities = [np.zeros(shape, dtype=np.complex128) for _ in particles]

    pbest = list(particles)
    pbest_cost = [obj.cost(q) for q in particles]
    g_idx = int(np.argmin(pbest_cost))
    gbest, gbest_cost = pbest[g_idx], pbest_cost[g_idx]

    trace = SolverTrace()
    trace.iterations.append(IterationRecord(0, obj.user_cost(gbest_cost), np.nan, 0.0))
    for it in range(1, opts.max_iters + 1):
        for i, q in enumerate(particles):
            r1 = rng.uniform(size=shape)
            r2 = rng.uniform(size=shape)
            velocities[i] = (_PSO_INERTIA * velocities[i]
                             + _PSO_COGNITIVE * r1 * (pbest[i].ambient - q.ambient)
                             + _PSO_SOCIAL * r2 * (gbest.ambient - q.ambient))
            step = m.project(q.ambient, velocities[i])
            q = mf._wrap_point(m, m.retract(q.ambient, step))
            _validated(m, q)
            particles[i] = q
            c = obj.cost(q)
            if c < pbest_cost[i]:
                pbest[i], pbest_cost[i] = q, c
                if c < gbest_cost:
                    gbest, gbest_cost = q, c
        trace.iterations.append(
            IterationRecord(it, obj.user_cost(gbest_cost), np.nan, 0.0))
    trace.status = MAX_ITERS
    return gbest, trace


def gradient_check(p: Problem, x: ManifoldPoint, num_directions: int = 10,
                   h: float = 1e-5, seed: int = 0) -> float:
    """Max relative error between <rgrad, v> and central differences of
    the cost through the retraction, over random unit tangent directions."""
    m = p.manifold
    rng = np.random.default_rng(seed)
    g = mf.egrad_to_rgrad(m, x, p.egrad(x))
    worst = 0.0
    for _ in range(num_directions):
        raw = rng.standard_normal(m.ambient_shape) \
            + 1j * rng.standard_normal(m.ambient_shape)
        v = m.project(x.ambient, raw)
        nv = np.linalg.norm(v)
        if nv == 0.0:
            continue
        v = v / nv
        analytic = mf._kernels.real_inner(np.ravel(g.ambient), np.ravel(v))
        f_plus = p.cost(mf._wrap_point(m, m.retract(x.ambient, h * v)))
        f_minus = p.cost(mf._wrap_point(m, m.retract(x.ambient, -h * v)))
        fd = (f_plus - f_minus) / (2.0 * h)
        denom = max(abs(analytic), abs(fd))
        if denom < 1e-12:
            continue  # both sides vanish: no error to report
        worst = max(worst, abs(analytic - fd) / denom)
    return worst
