"""Closed-form entropy bounds and inequality checkers.

These are the exactly evaluable counterparts of the probabilistic analysis:
the entangled-state output bound and its universal form, the collision
probability of the mixing distribution, the merged-distribution upper bound
on the minimum output entropy, the per-eigenvalue density envelope and its
product bound, the quadratic entropy-deficit bound, and the continuity slack
used when transferring entropy between nearby states.  Everything with a
large exponent is evaluated in log-space: ``exp`` of anything below about
-745 underflows to exactly 0 by design.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .matcore import ValidationError

if TYPE_CHECKING:
    from .channels import ChannelSpec

SIMPLEX_TOL = 1e-12


def _check_simplex(p) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValidationError(f"expected a 1-d probability vector, got shape {p.shape}")
    if np.any(p < -SIMPLEX_TOL):
        raise ValidationError(f"negative probability {p.min():.3e}")
    if abs(float(p.sum()) - 1.0) > SIMPLEX_TOL:
        raise ValidationError(f"probabilities sum to {p.sum()!r}, not 1")
    return np.clip(p, 0.0, None)


def _entropy(p: np.ndarray) -> float:
    nz = p[p > 0.0]
    return float(-np.sum(nz * np.log(nz)))


@dataclass(frozen=True)
class BoundReport:
    """Evaluated analytic bounds for one channel.

    ``collision_probability`` is sum_i P_i^2 of the mixing distribution;
    ``me_bound`` the channel-specific entangled-output bound; ``merged_bound``
    the output entropy guaranteed by collapsing the two heaviest mixture
    components; ``entropy_deficit`` is ln D minus the mixing-distribution
    entropy, with ``quadratic_bound`` its quadratic majorant.
    """

    d: int
    n: int
    collision_probability: float
    me_bound: float
    me_bound_universal: float
    merged_bound: float
    entropy_deficit: float
    quadratic_bound: float
    seed: int | None = None
    stream_id: int | None = None

    def __post_init__(self):
        if not (1.0 / self.d - 1e-12 <= self.collision_probability <= 1.0 + 1e-12):
            raise ValidationError(
                f"collision probability {self.collision_probability!r} outside [1/D, 1]"
            )
        if self.me_bound > self.me_bound_universal + 1e-12:
            raise ValidationError(
                f"channel bound {self.me_bound!r} exceeds universal bound {self.me_bound_universal!r}"
            )


def me_bound_universal(d: int) -> float:
    """2 ln d - (ln d)/d, the dimension-only bound on the entangled output."""
    if d < 1:
        raise ValidationError(f"need d >= 1, got {d}")
    return 2.0 * np.log(d) - np.log(d) / d


def me_bound_channel(ch: "ChannelSpec") -> BoundReport:
    """Channel-specific bound on the entangled-output entropy.

    The pair output is a mixture of pure components with weights P_i P_j in
    which all the i = j terms coincide, so its entropy is at most the entropy
    of the weight distribution with that diagonal mass collapsed to a single
    atom of size sum_i P_i^2.
    """
    p = ch.probabilities
    p_same = float(np.sum(p**2))
    w_off = np.outer(p, p)[~np.eye(ch.d, dtype=bool)]
    nz = w_off[w_off > 0.0]
    me_bound = float(-np.sum(nz * np.log(nz)))
    if p_same > 0.0:
        me_bound += -p_same * np.log(p_same)
    merged = merged_entropy_bound(p) if ch.d >= 2 else 0.0
    deficit, quad = quadratic_entropy_deficit_bound(p)
    return BoundReport(
        d=ch.d,
        n=ch.n,
        collision_probability=p_same,
        me_bound=me_bound,
        me_bound_universal=me_bound_universal(ch.d),
        merged_bound=merged,
        entropy_deficit=deficit,
        quadratic_bound=quad,
        seed=ch.provenance.master_seed if ch.provenance else None,
        stream_id=ch.provenance.stream_id if ch.provenance else None,
    )


def merged_entropy_bound(p) -> float:
    """Entropy of ``p`` with its two largest atoms merged into one.

    This is an upper bound on the output entropy reachable by an input that
    makes the two heaviest channel branches produce the same pure state; it
    equals ln D - (2/D) ln 2 at uniform ``p``.  Exact ties are broken toward
    the lowest index.
    """
    p = _check_simplex(p)
    d = p.size
    if d < 2:
        raise ValidationError(f"need at least 2 atoms, got {d}")
    order = np.argsort(-p, kind="stable")  # stable: ties go to the lowest index
    a, b = order[0], order[1]
    merged = np.delete(p, [a, b])
    merged = np.concatenate([[p[a] + p[b]], merged])
    return _entropy(merged)


def spectral_envelope(p, d: int, n: int):
    """Per-eigenvalue envelope of the reduced-spectrum density.

    ``(d p)^(n-d) exp[-(n-d) d (p - 1/d)]``, computed in log-space; at most 1
    for all p in [0, 1] (with equality at p = 1/d), which is what makes it a
    usable density majorant.  Accepts a scalar or an array of p values.
    """
    if d < 1 or n <= d:
        raise ValidationError(f"need n > d >= 1, got ({d}, {n})")
    p_arr = np.asarray(p, dtype=np.float64)
    if np.any(p_arr < 0.0) or np.any(p_arr > 1.0):
        raise ValidationError("p must lie in [0, 1]")
    with np.errstate(divide="ignore"):
        log_env = (n - d) * (np.log(d * p_arr) - d * (p_arr - 1.0 / d))
    out = np.exp(log_env)  # exp(-inf) -> 0 at p = 0
    return out if p_arr.ndim else float(out)


def log_spectral_envelope(p, d: int, n: int):
    """log of :func:`spectral_envelope` (-inf at p = 0)."""
    if d < 1 or n <= d:
        raise ValidationError(f"need n > d >= 1, got ({d}, {n})")
    p_arr = np.asarray(p, dtype=np.float64)
    if np.any(p_arr < 0.0) or np.any(p_arr > 1.0):
        raise ValidationError("p must lie in [0, 1]")
    with np.errstate(divide="ignore"):
        out = (n - d) * (np.log(d * p_arr) - d * (p_arr - 1.0 / d))
    return out if p_arr.ndim else float(out)


def quadratic_entropy_deficit_bound(p) -> tuple[float, float]:
    """(deficit, bound) with deficit = ln D - S(p) and bound = D sum (p_i - 1/D)^2.

    The deficit never exceeds the bound: the quadratic is fitted to the
    entropy drop at p_i = 1/D (value and slope) and at p_i = 0, and the
    third-derivative sign keeps it above the exact deficit in between.
    """
    p = _check_simplex(p)
    d = p.size
    deficit = float(np.log(d) - _entropy(p))
    bound = float(d * np.sum((p - 1.0 / d) ** 2))
    return deficit, bound


def product_envelope_bound(q, d: int, n: int, y: float, x: float = 0.0) -> tuple[float, float]:
    """Log-space two sides of the envelope product bound.

    Returns ``(lhs, rhs)`` with ``lhs = sum_i log envelope(q_i)`` and
    ``rhs = -(n-d) d^2 sum_i (q_i - 1/d)^2 / (2 y^2)``; lhs <= rhs whenever
    every q_i lies in the window (x/d, y/d) with 0 <= x < 1 < y.
    """
    if d < 1 or n <= d:
        raise ValidationError(f"need n > d >= 1, got ({d}, {n})")
    if not (0.0 <= x < 1.0 < y):
        raise ValidationError(f"window must satisfy 0 <= x < 1 < y, got ({x}, {y})")
    q = _check_simplex(q)
    lo, hi = x / d, y / d
    bad = np.nonzero((q <= lo) | (q >= hi))[0]
    if bad.size:
        i = int(bad[0])
        raise ValidationError(f"q[{i}] = {q[i]!r} outside the window ({lo!r}, {hi!r})")
    lhs = float(np.sum(log_spectral_envelope(q, d, n)))
    rhs = float(-(n - d) * d * d * np.sum((q - 1.0 / d) ** 2) / (2.0 * y * y))
    return lhs, rhs


def fannes_slack(dist: float, d_dim: int) -> float:
    """Entropy slack ``dist^2 ln(D / dist^2)`` for states within ``dist``.

    Continuity allowance when transferring an entropy deficit from one state
    to a nearby one; tends to 0 with the distance.
    """
    if d_dim < 2:
        raise ValidationError(f"need dimension >= 2, got {d_dim}")
    if dist < 0.0 or dist > 1.0:
        raise ValidationError(f"distance must lie in [0, 1], got {dist}")
    if dist == 0.0:
        return 0.0
    return float(dist * dist * np.log(d_dim / (dist * dist)))


def entropy_deficit_max(d: int, n: int, c1: float = 1.0, poly_coeffs=(0.0, 0.0, 1.0)) -> float:
    """Reporting model ``c1/d + p1(d) sqrt(ln n / n)`` for the largest
    entropy deficit below ln D.

    ``poly_coeffs`` are ascending coefficients of p1 (default p1(d) = d^2).
    The constants are illustrative reporting parameters, not derived values;
    compare 2x the result against ln(d)/d to see where a configuration sits
    relative to the entangled-input advantage threshold.
    """
    if d < 2 or n < 2:
        raise ValidationError(f"need d >= 2 and n >= 2, got ({d}, {n})")
    if c1 <= 0:
        raise ValidationError(f"need c1 > 0, got {c1}")
    p1 = float(np.polynomial.polynomial.polyval(d, np.asarray(poly_coeffs, dtype=np.float64)))
    return c1 / d + p1 * np.sqrt(np.log(n) / n)
