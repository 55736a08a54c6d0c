"""Reference numpy implementations of the phase-vector kernels.

These are the operations sitting inside every solver iteration when the
manifold is a product of unit circles: tangent projection, retraction,
renormalization, and the real inner product.  The compiled module
``_speedups`` implements the same signatures with fused single-pass
loops; this module is the always-available fallback and the ground
truth the compiled kernels are tested against.

All functions expect 1-D contiguous complex128 arrays.
"""

import numpy as np


def ccm_project(x, v):
    """Remove the radial component of ``v`` at ``x``, entrywise."""
    return v - (v * np.conj(x)).real * x


def ccm_retract(x, v):
    """Normalize ``x + v`` back to unit modulus.

    Returns the retracted point and the smallest modulus of ``x + v``
    encountered, so the caller can detect an annihilated entry without
    a second pass.
    """
    s = x + v
    mod = np.abs(s)
    min_mod = float(mod.min()) if mod.size else 1.0
    if min_mod == 0.0:
        return s, 0.0
    return s / mod, min_mod


def ccm_normalize(x):
    """Project ``x`` entrywise onto the unit circle (modulus 1)."""
    return x / np.abs(x)


def ccm_max_dev(x):
    """Largest deviation of any entry's modulus from 1."""
    if x.size == 0:
        return 0.0
    return float(np.abs(np.abs(x) - 1.0).max())


def ccm_tangent_dev(x, v):
    """Largest radial component |Re(v_i * conj(x_i))| over entries."""
    if x.size == 0:
        return 0.0
    return float(np.abs((v * np.conj(x)).real).max())


def real_inner(u, v):
    """Real part of the Euclidean inner product <u, v>."""
    return float(np.vdot(u, v).real)
