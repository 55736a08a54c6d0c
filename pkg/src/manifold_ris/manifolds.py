"""Manifold geometry: points, tangent vectors, projection, retraction.

Three constraint sets are supported:

* ``ComplexCircle(n)`` — length-n complex vectors with unit-modulus
  entries (phase vectors).
* ``ComplexStiefel(m, k)`` — m-by-k complex matrices X with
  orthonormal columns, X^H X = I_k.
* ``Product(parts)`` — an ordered product of the above, stored as the
  concatenation of the flattened component arrays.

The metric is the real part of the Euclidean (Frobenius) inner product
of ambient arrays.  Euclidean gradients follow the conjugate-coordinate
convention: ``egrad = 2 * df/d(conj(z))``, so the directional derivative
of f at x along a tangent v is ``Re <egrad, v>``.  Tangent projection of
that gradient gives the Riemannian gradient.

Everything here is a pure function of immutable values; ambient arrays
are marked read-only on construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np

from . import _kernels

POINT_TOL = 1e-10
# ops accept slightly stale points (e.g. accumulated float drift) but
# reject anything worse than this
POINT_REJECT_TOL = 1e-8


class DimensionError(ValueError):
    """Shapes or sizes inconsistent with the manifold descriptor."""


class InvalidPointError(ValueError):
    """Array does not satisfy the manifold's point invariant."""


class BasePointMismatchError(ValueError):
    """Tangent vectors based at different points were combined."""


class DegenerateRetractionError(RuntimeError):
    """A retraction step annihilated a unit-modulus entry exactly."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def _as_complex(a, shape=None) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=np.complex128)
    if shape is not None and out.shape != shape:
        raise DimensionError(f"expected shape {shape}, got {out.shape}")
    return out


def _herm(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


@dataclass(frozen=True)
class ComplexCircle:
    """Product of n unit circles in the complex plane."""

    n: int

    def __post_init__(self):
        if self.n <= 0:
            raise DimensionError("ComplexCircle size must be positive")

    @property
    def dim(self) -> int:
        return self.n

    @property
    def ambient_shape(self) -> Tuple[int, ...]:
        return (self.n,)

    def point_defect(self, a: np.ndarray) -> float:
        return _kernels.ccm_max_dev(a)

    def tangent_defect(self, x: np.ndarray, v: np.ndarray) -> float:
        return _kernels.ccm_tangent_dev(x, v)

    def project(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        return _kernels.ccm_project(x, v)

    def retract(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        out, min_mod = _kernels.ccm_retract(x, v)
        if min_mod == 0.0:
            raise DegenerateRetractionError(
                "retraction step drove a unit-modulus entry to zero")
        return out

    def inner(self, x: np.ndarray, u: np.ndarray, v: np.ndarray) -> float:
        return _kernels.real_inner(u, v)

    def random(self, rng: np.random.Generator) -> np.ndarray:
        phases = rng.uniform(0.0, 2.0 * np.pi, size=self.n)
        return np.exp(1j * phases)


@dataclass(frozen=True)
class ComplexStiefel:
    """m-by-k complex matrices with orthonormal columns."""

    m: int
    k: int

    def __post_init__(self):
        if self.m <= 0 or self.k <= 0:
            raise DimensionError("Stiefel sizes must be positive")
        if self.k > self.m:
            raise DimensionError(
                f"Stiefel needs k <= m, got k={self.k}, m={self.m}")

    @property
    def dim(self) -> int:
        # real dimension of the complex Stiefel manifold
        return 2 * self.m * self.k - self.k * self.k

    @property
    def ambient_shape(self) -> Tuple[int, ...]:
        return (self.m, self.k)

    def point_defect(self, a: np.ndarray) -> float:
        gram = a.conj().T @ a
        return float(np.linalg.norm(gram - np.eye(self.k)))

    def tangent_defect(self, x: np.ndarray, v: np.ndarray) -> float:
        return float(np.linalg.norm(_herm(x.conj().T @ v)))

    def project(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        return v - x @ _herm(x.conj().T @ v)

    def retract(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        # polar retraction via the thin SVD
        u, _, vh = np.linalg.svd(x + v, full_matrices=False)
        return u @ vh

    def inner(self, x: np.ndarray, u: np.ndarray, v: np.ndarray) -> float:
        return _kernels.real_inner(u.ravel(), v.ravel())

    def random(self, rng: np.random.Generator) -> np.ndarray:
        z = rng.standard_normal((self.m, self.k)) \
            + 1j * rng.standard_normal((self.m, self.k))
        q, _ = np.linalg.qr(z)
        return q


@dataclass(frozen=True)
class Product:
    """Ordered product manifold; ambient arrays are flat concatenations."""

    parts: Tuple = field(default=())

    def __init__(self, parts: Sequence):
        if len(parts) == 0:
            raise DimensionError("Product needs at least one part")
        object.__setattr__(self, "parts", tuple(parts))

    @property
    def dim(self) -> int:
        return sum(p.dim for p in self.parts)

    @property
    def ambient_shape(self) -> Tuple[int, ...]:
        return (sum(int(np.prod(p.ambient_shape)) for p in self.parts),)

    def split(self, flat: np.ndarray) -> list:
        """Views of the flat ambient array, reshaped per component."""
        out, start = [], 0
        for p in self.parts:
            size = int(np.prod(p.ambient_shape))
            out.append(flat[start:start + size].reshape(p.ambient_shape))
            start += size
        return out

    def join(self, arrays: Sequence[np.ndarray]) -> np.ndarray:
        return np.concatenate([np.ravel(a) for a in arrays])

    def point_defect(self, a: np.ndarray) -> float:
        return max(p.point_defect(c) for p, c in zip(self.parts, self.split(a)))

    def tangent_defect(self, x: np.ndarray, v: np.ndarray) -> float:
        return max(p.tangent_defect(cx, cv)
                   for p, cx, cv in zip(self.parts, self.split(x), self.split(v)))

    def project(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        return self.join([p.project(cx, cv)
                          for p, cx, cv in zip(self.parts, self.split(x), self.split(v))])

    def retract(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        return self.join([p.retract(cx, cv)
                          for p, cx, cv in zip(self.parts, self.split(x), self.split(v))])

    def inner(self, x: np.ndarray, u: np.ndarray, v: np.ndarray) -> float:
        return _kernels.real_inner(u, v)

    def random(self, rng: np.random.Generator) -> np.ndarray:
        return self.join([p.random(rng) for p in self.parts])


@dataclass(frozen=True, eq=False)
class ManifoldPoint:
    """A validated point; ``ambient`` is read-only."""

    ambient: np.ndarray
    descriptor: object

    @staticmethod
    def create(descriptor, ambient) -> "ManifoldPoint":
        """Validate and wrap a user-supplied array (copies it)."""
        a = _as_complex(ambient, descriptor.ambient_shape).copy()
        defect = descriptor.point_defect(a)
        if defect > POINT_TOL:
            raise InvalidPointError(
                f"point violates manifold invariant by {defect:.3e}")
        return ManifoldPoint(_readonly(a), descriptor)


@dataclass(frozen=True, eq=False)
class TangentVector:
    """An ambient array tangent to the manifold at ``base``."""

    ambient: np.ndarray
    base: ManifoldPoint

    @property
    def descriptor(self):
        return self.base.descriptor


def _same_point(a: ManifoldPoint, b: ManifoldPoint) -> bool:
    return a is b or (a.descriptor == b.descriptor
                      and np.array_equal(a.ambient, b.ambient))


def _wrap_point(descriptor, ambient: np.ndarray) -> ManifoldPoint:
    # internal fast path: array is freshly produced by a manifold op
    return ManifoldPoint(_readonly(ambient), descriptor)


def _wrap_tangent(base: ManifoldPoint, ambient: np.ndarray) -> TangentVector:
    return TangentVector(_readonly(ambient), base)


def _check_op_point(m, x: ManifoldPoint) -> None:
    if m != x.descriptor:
        raise DimensionError("descriptor does not match the point's manifold")
    defect = m.point_defect(x.ambient)
    if defect > POINT_REJECT_TOL:
        raise InvalidPointError(
            f"point violates manifold invariant by {defect:.3e}")


def project_tangent(m, x: ManifoldPoint, v) -> TangentVector:
    """Orthogonal projection of an ambient array onto the tangent space."""
    _check_op_point(m, x)
    va = _as_complex(v, m.ambient_shape)
    return _wrap_tangent(x, m.project(x.ambient, va))


def retract(m, x: ManifoldPoint, v: TangentVector) -> ManifoldPoint:
    """Map a tangent step back onto the manifold.

    Entrywise normalization of ``x + v`` on the unit-modulus factor,
    polar factorization on the Stiefel factor.
    """
    if not _same_point(v.base, x):
        raise BasePointMismatchError("tangent vector is not based at x")
    return _wrap_point(m, m.retract(x.ambient, v.ambient))


def egrad_to_rgrad(m, x: ManifoldPoint, egrad) -> TangentVector:
    """Riemannian gradient = tangent projection of the Euclidean one."""
    return project_tangent(m, x, egrad)


def inner(m, x: ManifoldPoint, u: TangentVector, v: TangentVector) -> float:
    """Embedded metric: Re <u, v> of the ambient arrays."""
    for t in (u, v):
        if not _same_point(t.base, x):
            raise BasePointMismatchError("tangent vector is not based at x")
    return m.inner(x.ambient, u.ambient, v.ambient)


def norm(m, x: ManifoldPoint, u: TangentVector) -> float:
    return float(np.sqrt(max(inner(m, x, u, u), 0.0)))


def transport(m, x: ManifoldPoint, y: ManifoldPoint, v: TangentVector) -> TangentVector:
    """Vector transport: reproject the ambient representation at y."""
    if not _same_point(v.base, x):
        raise BasePointMismatchError("tangent vector is not based at x")
    return project_tangent(m, y, v.ambient)


def zero_tangent(m, x: ManifoldPoint) -> TangentVector:
    return _wrap_tangent(x, np.zeros(m.ambient_shape, dtype=np.complex128))


def random_point(m, seed: int) -> ManifoldPoint:
    """Seeded uniform draw: random phases on the circle factor, the
    orthonormal factor of a complex Gaussian matrix on Stiefel."""
    rng = np.random.default_rng(seed)
    return _wrap_point(m, m.random(rng))
