"""Scalar building blocks: entropies, the Bernoulli rate-distortion-perception
function R(d, p, q), and the (d, p) region classifier.

All rates are in nats (natural log).  Every function accepts floats or numpy
arrays and broadcasts; scalar inputs give a plain ``float`` back.  The
``0 * log 0 = 0`` convention is implemented by explicit masking, never by
limit evaluation, so boundary values are exact.
"""

from __future__ import annotations

import enum
import math

import numpy as np

from .errors import DomainError

#: Inputs may stray this far outside their domain before we raise.
DOMAIN_TOL = 1e-12


class ScalarRegion(enum.Enum):
    """Distortion/perception region of a single component (d, p) pair.

    S: low distortion, slack perception (only the distortion multiplier acts).
    T: zero rate with room to spare.
    U: both constraints shape the optimum.
    V: the saturation corner d = q with p >= q.
    EXTERIOR: d = 0, where the partition is not defined.
    """

    S = "S"
    T = "T"
    U = "U"
    V = "V"
    EXTERIOR = "boundary-exterior"


def _as_unit(x, name: str, lo: float = 0.0, hi: float = 1.0):
    """Validate x in [lo, hi] within DOMAIN_TOL and clip the excursion."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr < lo - DOMAIN_TOL) or np.any(arr > hi + DOMAIN_TOL):
        bad = arr[(arr < lo - DOMAIN_TOL) | (arr > hi + DOMAIN_TOL)]
        raise DomainError(f"{name} must lie in [{lo}, {hi}]; got {bad.flat[0]!r}")
    return np.clip(arr, lo, hi)


def _xlogx(m: np.ndarray) -> np.ndarray:
    out = np.zeros_like(m)
    pos = m > 0.0
    out[pos] = m[pos] * np.log(m[pos])
    return out


def _maybe_float(x: np.ndarray, *inputs):
    if all(np.isscalar(i) or getattr(i, "ndim", 1) == 0 for i in inputs):
        return float(x)
    return x


def h2(u):
    """Binary entropy -u ln u - (1-u) ln(1-u) in nats.

    Symmetric under u <-> 1-u with maximum ln 2 at u = 1/2, and h2(0) =
    h2(1) = 0 exactly.
    """
    uu = _as_unit(u, "u")
    val = -_xlogx(uu) - _xlogx(1.0 - uu)
    return _maybe_float(val, u)


def h3(u, v):
    """Ternary entropy of the probability vector (u, v, 1-u-v) in nats.

    Requires u >= 0, v >= 0 and u + v <= 1 (within tolerance).  Collapses to
    h2 when any mass is zero: h3(0, v) == h2(v) exactly.
    """
    uu = _as_unit(u, "u")
    vv = _as_unit(v, "v")
    rest = 1.0 - uu - vv
    if np.any(rest < -DOMAIN_TOL):
        raise DomainError("h3 needs u + v <= 1")
    rest = np.maximum(rest, 0.0)
    val = -_xlogx(np.broadcast_to(uu, rest.shape).copy()) \
        - _xlogx(np.broadcast_to(vv, rest.shape).copy()) - _xlogx(rest)
    return _maybe_float(val, u, v)


def scalar_rdp(d, p, q):
    """RDP function of a Bernoulli(q) source, q <= 1/2, in nats.

    ``d`` is the tolerated flip probability (Hamming distortion per use),
    ``p`` the tolerated gap between source and reconstruction marginals.
    Nonincreasing and jointly convex in (d, p), continuous across all branch
    boundaries.  Branch ties: the zero branch is closed, the rate-distortion
    branch is open on its right edge.
    """
    dd = _as_unit(d, "d")
    pp = _as_unit(p, "p", hi=np.inf)
    qq = _as_unit(q, "q", hi=0.5)
    dd, pp, qq = np.broadcast_arrays(dd, pp, qq)

    rd_branch = h2_arr(qq) - h2_arr(dd)
    zero_thresh = 2.0 * qq * (1.0 - qq) - (1.0 - 2.0 * qq) * pp
    den = 1.0 - 2.0 * (qq - pp)
    # p == 0 makes the first-branch threshold 0 for every q (incl. q = 1/2,
    # where the raw expression is 0/0); the ternary branch then takes over
    # and coincides with h2(q) - h2(d) exactly.
    rd_thresh = np.where(pp > 0.0, pp / np.where(den != 0.0, den, 1.0), 0.0)

    u1 = np.maximum(dd - pp, 0.0) / 2.0
    u2 = np.minimum((dd + pp) / 2.0, qq)  # keep h3 args legal off-branch
    ternary = (2.0 * h2_arr(qq) + h2_arr(np.maximum(qq - pp, 0.0))
               - h3_arr(u1, qq) - h3_arr(u2, 1.0 - qq))

    low_p = np.where(dd >= zero_thresh, 0.0,
                     np.where(dd < rd_thresh, rd_branch, ternary))
    high_p = np.where(dd < qq, rd_branch, 0.0)
    val = np.where(qq <= 0.0, 0.0, np.where(pp >= qq, high_p, low_p))
    val = np.maximum(val, 0.0)
    return _maybe_float(val, d, p, q)


def h2_arr(u: np.ndarray) -> np.ndarray:
    """h2 on pre-validated arrays (no domain checks, no clipping)."""
    return -_xlogx(u) - _xlogx(1.0 - u)


def h3_arr(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """h3 on pre-validated arrays with masses clipped at 0."""
    u, v = np.broadcast_arrays(u, v)
    rest = np.maximum(1.0 - u - v, 0.0)
    return -_xlogx(u.copy()) - _xlogx(v.copy()) - _xlogx(rest)


def rd_boundary(d, q):
    """The perception level below which the constraint starts to bind,
    p = d(1-2q)/(1-2d), for 0 <= d <= q <= 1/2.

    This is the S/U frontier; summed over water-filled components it is the
    boundary curve of the perception-inactive plane region.
    """
    dd = np.asarray(d, dtype=float)
    qq = np.asarray(q, dtype=float)
    den = 1.0 - 2.0 * dd
    out = np.where(den > 0.0, dd * (1.0 - 2.0 * qq) / np.where(den > 0.0, den, 1.0), np.inf)
    return _maybe_float(out, d, q)


def scalar_region(d, p, q) -> ScalarRegion:
    """Classify a single (d, p) pair into S, T, U or V for parameter q.

    The partition is defined on d > 0; d = 0 returns EXTERIOR.  Shared
    boundaries follow the closed-set definitions: S and T keep their closed
    edges, U is open, V is the segment d == q, p >= q.
    """
    dd = float(_as_unit(d, "d"))
    pq = float(_as_unit(p, "p", hi=np.inf))
    qv = float(_as_unit(q, "q", hi=0.5))
    if dd <= 0.0:
        return ScalarRegion.EXTERIOR
    if dd < qv:
        return ScalarRegion.S if pq >= rd_boundary(dd, qv) else ScalarRegion.U
    if dd == qv:
        return ScalarRegion.V if pq >= qv else ScalarRegion.U
    # d > q
    if dd >= 2.0 * qv * (1.0 - qv) - (1.0 - 2.0 * qv) * pq:
        return ScalarRegion.T
    return ScalarRegion.U
