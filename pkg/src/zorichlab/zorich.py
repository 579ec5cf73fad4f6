"""The piecewise-exponential map on R^3, its building blocks and inverse branches.

Conventions used throughout the library:

* angular coordinates (the first two axes) are radians;
* the base square B is ``max(|x1|, |x2|) <= pi/2``;
* ``beam(i, j)`` is the vertical prism obtained by translating B by
  ``(i*pi, j*pi)``; the map sends the interior of a beam onto the open upper
  half space when ``i + j`` is even and onto the open lower half space when
  it is odd;
* the map is many-to-one, so every inverse branch takes an explicit beam
  index.  Nothing in this module guesses a branch.

All functions are vectorized over leading axes: points are arrays of shape
``(..., 2)`` or ``(..., 3)``.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import DomainError, ExponentOverflowError, ParityMismatchError

HALF_PI = math.pi / 2.0
TWO_PI = 2.0 * math.pi

# exp(x3) must stay finite in float64; callers composing the map twice have to
# pre-check the intermediate third coordinate against the same cap.
EXP_CAP = 700.0

_SQUARE_TOL = 1e-12
_UNIT_TOL = 1e-9
_POLE_TOL = 1e-12


class FoldResult(NamedTuple):
    """Coordinate folded into [-pi/2, pi/2] plus the strip it came from."""

    folded: float
    strip: int
    parity: int


class Beam(NamedTuple):
    """Integer beam index; parity decides which half space the image fills."""

    i: int
    j: int

    @property
    def parity(self) -> int:
        return (self.i + self.j) % 2


def _fold_arrays(t):
    """Vectorized fold: returns (folded, strip) as float arrays."""
    q = np.floor((t + HALF_PI) / math.pi)
    folded = (t - q * math.pi) * np.where(np.mod(q, 2.0) == 0.0, 1.0, -1.0)
    return folded, q


def fold(t):
    """Reflect t into [-pi/2, pi/2].

    strip = floor((t + pi/2)/pi) counts how many square sides were crossed;
    folded = (-1)**strip * (t - strip*pi).  ``unfold`` is the exact inverse.
    """
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        raise DomainError("fold: input must be finite")
    folded, q = _fold_arrays(t)
    if t.ndim == 0:
        qi = int(q)
        return FoldResult(float(folded), qi, qi % 2)
    strip = q.astype(np.int64)
    return FoldResult(folded, strip, np.mod(strip, 2))


def unfold(folded, strip):
    """Inverse of fold: strip*pi + (-1)**strip * folded."""
    folded = np.asarray(folded, dtype=float)
    strip = np.asarray(strip)
    sign = np.where(np.mod(strip, 2) == 0, 1.0, -1.0)
    return strip * math.pi + sign * folded


def h_square(p):
    """Bi-Lipschitz map from the base square onto the upper unit hemisphere.

    h(x1, x2) = (x1*sin(M)/r, x2*sin(M)/r, cos(M)) with M = max(|x1|, |x2|)
    and r = |(x1, x2)|; the square center maps to the pole (0, 0, 1).
    """
    p = np.asarray(p, dtype=float)
    x1 = p[..., 0]
    x2 = p[..., 1]
    m = np.maximum(np.abs(x1), np.abs(x2))
    if np.any(m > HALF_PI + _SQUARE_TOL):
        raise DomainError("h_square: point outside the base square")
    r = np.hypot(x1, x2)
    safe_r = np.where(r > 0.0, r, 1.0)
    scale = np.where(r > 0.0, np.sin(m) / safe_r, 0.0)
    return np.stack([x1 * scale, x2 * scale, np.cos(m)], axis=-1)


def h_extended(p):
    """Doubly periodic extension of h_square to the whole plane.

    Each reflection in a square side reflects the image across the equator,
    so the third coordinate picks up the fold-parity sign.  The fold is
    mathematically inside the base square, but for huge inputs the rounding
    of strip*pi can overshoot it, so the folded values are clipped; the
    phase uncertainty at such magnitudes is the caller's concern.
    """
    p = np.asarray(p, dtype=float)
    a, qa = _fold_arrays(p[..., 0])
    b, qb = _fold_arrays(p[..., 1])
    a = np.clip(a, -HALF_PI, HALF_PI)
    b = np.clip(b, -HALF_PI, HALF_PI)
    v = h_square(np.stack([a, b], axis=-1))
    sign = np.where(np.mod(qa + qb, 2.0) == 0.0, 1.0, -1.0)
    v[..., 2] = v[..., 2] * sign
    return v


def _exp_stage(x, stage):
    x3 = x[..., 2]
    if np.any(x3 > EXP_CAP):
        bad = float(np.max(x3))
        raise ExponentOverflowError(stage, bad)
    return np.exp(x3)[..., None] * h_extended(x[..., :2])


def zorich(x):
    """Evaluate the map: exp(x3) * h_extended(x1, x2).

    |result| equals exp(x3) exactly up to rounding.  Raises
    ExponentOverflowError for x3 beyond the float64 cap.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("zorich: input must be finite")
    return _exp_stage(x, "first")


def zorich_second(x):
    """Second iterate of the map.

    The intermediate third coordinate must also respect the exponent cap;
    overflow errors carry a stage tag ("first" or "second").
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("zorich_second: input must be finite")
    mid = _exp_stage(x, "first")
    return _exp_stage(mid, "second")


def h_inverse(u):
    """Invert h_square on the closed upper hemisphere.

    M = arccos(u3); below the pole cutoff the unique preimage is the origin,
    otherwise the preimage is M * (u1, u2) / max(|u1|, |u2|).
    """
    u = np.asarray(u, dtype=float)
    norm = np.sqrt(np.sum(u * u, axis=-1))
    if np.any(np.abs(norm - 1.0) > _UNIT_TOL):
        raise DomainError("h_inverse: input must be a unit vector")
    u3 = u[..., 2]
    if np.any(u3 < -_POLE_TOL):
        raise DomainError("h_inverse: third coordinate must be >= 0")
    m = np.arccos(np.clip(u3, -1.0, 1.0))
    den = np.maximum(np.abs(u[..., 0]), np.abs(u[..., 1]))
    at_pole = m < _POLE_TOL
    safe_den = np.where(at_pole, 1.0, den)
    scale = np.where(at_pole, 0.0, m / safe_den)
    return np.stack([u[..., 0] * scale, u[..., 1] * scale], axis=-1)


def zorich_inverse(y, beam):
    """Inverse branch of the map in the named beam.

    x3 = ln|y|; the unit direction is reflected to the upper hemisphere when
    the beam parity is odd, inverted through h_inverse and unfolded into the
    beam.  The sign of y3 must match the beam parity (y3 = 0 is accepted by
    both parities and resolves to the shared face).
    """
    y = np.asarray(y, dtype=float)
    beam = Beam(*beam)
    norm = np.sqrt(np.sum(y * y, axis=-1))
    if np.any(norm < 1e-300):
        raise DomainError("zorich_inverse: zero input has no preimage")
    y3 = y[..., 2]
    if beam.parity == 0 and np.any(y3 < 0.0):
        raise ParityMismatchError("zorich_inverse: y3 < 0 needs an odd-parity beam")
    if beam.parity == 1 and np.any(y3 > 0.0):
        raise ParityMismatchError("zorich_inverse: y3 > 0 needs an even-parity beam")
    u = y / norm[..., None]
    if beam.parity == 1:
        u = u.copy()
        u[..., 2] = -u[..., 2]
    ab = h_inverse(u)
    x1 = unfold(ab[..., 0], beam.i)
    x2 = unfold(ab[..., 1], beam.j)
    return np.stack([x1, x2, np.log(norm)], axis=-1)


def branch_distance(x):
    """Euclidean distance from (x1, x2) to the branch-line lattice.

    The branch set is the family of vertical lines through the beam corners
    (pi/2 + j*pi, pi/2 + k*pi).  Accepts (..., 2) or (..., 3) input.
    """
    x = np.asarray(x, dtype=float)
    t = (x[..., :2] - HALF_PI) / math.pi
    d = (t - np.round(t)) * math.pi
    return np.hypot(d[..., 0], d[..., 1])
