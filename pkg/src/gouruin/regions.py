"""Quadrant regions, critical thresholds, and the drift inequality.

The no-ruin analysis revolves around which pair jumps (x, y) turn the test
process S(u) = eta - u W downward.  A jump moves S by ``y - u (e^-x - 1)``;
the moving regions

    A_i^u = { (x, y) in quadrant A_i : y - u (e^-x - 1) < 0 }

gain or lose jump mass as u varies, and the four critical values theta_1..4
mark where each branch empties out.  On the atom tier every threshold is the
exact extremum of per-atom critical values ``y / (e^-x - 1)``; on the
density tier thresholds come from monotone bisection of the region mass.

The drift inequality's left-hand side

    L(u) = gamma_eta + u gamma_xi - u sigma_xi^2 / 2
           - integral over {y - u(e^-x - 1) >= 0, x^2 + y^2 < 1} of (u x + y)

equals the subordinator drift of S(u) whenever S(u) has no negative jumps.
The region here is taken closed in the jump direction: at the finitely many
u where an atom sits exactly on the boundary, the closed version is the one
that agrees with the drift of S(u) computed from its own triplet (a jump of
size zero is no jump, but its compensator share still moves the drift).
At every other u the open and closed versions coincide.

For atom measures L is piecewise affine in u with breakpoints at the
critical values of unit-disk atoms; the exact piecewise form drives the
feasibility intervals of the classifier.
"""

from __future__ import annotations

import enum
import math
import warnings
from bisect import bisect_right
from dataclasses import dataclass

from .errors import NotSupportedError, UndeterminedError
from .intervals import Interval, IntervalSet
from .model import LevyTriplet2D, s_jump, w_jump, _in_open_ball
from .numerics import BOUNDARY_TOL, INF, NEG_INF, ext_to_json, sgn
from .quadrature import Strip

_HUGE = 1e18
_U_CAP = 1e12


class RegionBoundaryWarning(UserWarning):
    """The returned threshold borders a region of vanishing mass."""


@dataclass(frozen=True)
class ThetaBounds:
    """The four critical u values; theta1, theta3 <= 0 <= theta2, theta4."""

    theta1: float
    theta2: float
    theta3: float
    theta4: float

    def to_json(self) -> dict:
        return {
            "theta1": ext_to_json(self.theta1),
            "theta2": ext_to_json(self.theta2),
            "theta3": ext_to_json(self.theta3),
            "theta4": ext_to_json(self.theta4),
        }


def _quadrant_signs(i: int) -> tuple[int, int]:
    # Sign pattern (x, y) of each closed quadrant.
    return {1: (1, 1), 2: (1, -1), 3: (-1, -1), 4: (-1, 1)}[i]


def _atom_in_quadrant(a, i: int) -> bool:
    sx, sy = _quadrant_signs(i)
    gx, gy = sgn(a.x), sgn(a.y)
    return (gx == 0 or gx == sx) and (gy == 0 or gy == sy)


def _quadrant_strips(i: int, u: float | None) -> list[Strip]:
    """Strips for A_i, optionally intersected with {y < u (e^-x - 1)}."""

    def cap(x: float) -> float:
        return u * math.expm1(-x) if u is not None else _HUGE

    if i == 1:
        return [Strip(0.0, _HUGE, lambda x: 0.0, lambda x: min(cap(x), _HUGE))]
    if i == 2:
        return [Strip(0.0, _HUGE, lambda x: -_HUGE, lambda x: min(cap(x), 0.0))]
    if i == 3:
        return [Strip(-_HUGE, 0.0, lambda x: -_HUGE, lambda x: min(cap(x), 0.0))]
    return [Strip(-_HUGE, 0.0, lambda x: 0.0, lambda x: min(cap(x), _HUGE))]


def quadrant_mass(m, i: int) -> float:
    """Total jump mass of the closed quadrant A_i (may be inf)."""
    atoms = m.atoms_or_none()
    if atoms is not None:
        return sum(a.rate for a in atoms if _atom_in_quadrant(a, i))
    return m.integrate_refined(lambda x, y: 1.0, _quadrant_strips(i, None))


def region_mass(m, i: int, u: float) -> float:
    """Mass of the moving region A_i^u (may be inf)."""
    atoms = m.atoms_or_none()
    if atoms is not None:
        return sum(
            a.rate
            for a in atoms
            if _atom_in_quadrant(a, i) and sgn(s_jump(a.x, a.y, u)) < 0
        )
    return m.integrate_refined(lambda x, y: 1.0, _quadrant_strips(i, u))


def _atom_critical(a) -> float:
    """Critical u of one atom: its jump of S(u) vanishes at u = y / w(x)."""
    return a.y / w_jump(a.x)


def _atom_thetas(atoms) -> ThetaBounds:
    t1, t2, t3, t4 = NEG_INF, 0.0, 0.0, INF
    for a in atoms:
        gx, gy = sgn(a.x), sgn(a.y)
        if _atom_in_quadrant(a, 2):
            if gx == 0:
                c = INF if gy < 0 else 0.0
            else:
                c = _atom_critical(a)
            t2 = max(t2, c)
        if _atom_in_quadrant(a, 4):
            c = INF if gx == 0 else _atom_critical(a)
            t4 = min(t4, c)
        if _atom_in_quadrant(a, 1):
            c = NEG_INF if gx == 0 else _atom_critical(a)
            t1 = max(t1, c)
        if _atom_in_quadrant(a, 3):
            if gx == 0:
                c = NEG_INF if gy < 0 else 0.0
            else:
                c = _atom_critical(a)
            t3 = min(t3, c)
    return ThetaBounds(t1, t2, t3, t4)


def _bisect_theta(m, i: int, sign: float, vanishing: bool) -> float:
    """Density-tier threshold by monotone bisection on region mass.

    The search runs over v >= 0 with u = sign * v.  ``vanishing`` means the
    region holds mass near v = 0 and empties past the transition (the
    theta_2 and theta_3 branches); otherwise mass appears beyond the
    transition (theta_4 and theta_1).

    The bracket is on {mass above tolerance}, so the answer is exact only up
    to the rate at which the region mass decays at the threshold: a density
    fading continuously into the critical level resolves to roughly the cube
    root of the mass tolerance, not machine precision.
    """
    tol_mass = 16.0 * getattr(m, "tol", 1e-9)

    def mass_at(v: float) -> float:
        return region_mass(m, i, sign * v)

    empty_value = {1: NEG_INF, 2: 0.0, 3: 0.0, 4: INF}[i]
    if quadrant_mass(m, i) <= tol_mass:
        return empty_value

    if vanishing:
        if mass_at(0.0) <= tol_mass:
            warnings.warn(
                "region mass vanishes next to the returned threshold",
                RegionBoundaryWarning,
            )
            return 0.0
        lo, hi = 0.0, 1.0
        while mass_at(hi) > tol_mass:
            lo = hi
            hi *= 4.0
            if hi > _U_CAP:
                return sign * INF
        for _ in range(48):
            mid = 0.5 * (lo + hi)
            if mass_at(mid) > tol_mass:
                lo = mid
            else:
                hi = mid
        return sign * 0.5 * (lo + hi)

    lo, hi = 0.0, 1.0
    while mass_at(hi) <= tol_mass:
        lo = hi
        hi *= 4.0
        if hi > _U_CAP:
            warnings.warn(
                "region mass stayed empty out to the search cap",
                RegionBoundaryWarning,
            )
            return empty_value
    for _ in range(48):
        mid = 0.5 * (lo + hi)
        if mass_at(mid) <= tol_mass:
            lo = mid
        else:
            hi = mid
    return sign * 0.5 * (lo + hi)


def thetas(m) -> ThetaBounds:
    """Critical thresholds of the four moving regions."""
    atoms = m.atoms_or_none()
    if atoms is not None:
        return _atom_thetas(atoms)
    # On u >= 0 the A2 region empties as u grows while A4 fills; mirrored on
    # u <= 0, A3 empties as u falls while A1 fills.
    return ThetaBounds(
        _bisect_theta(m, 1, sign=-1.0, vanishing=False),
        _bisect_theta(m, 2, sign=1.0, vanishing=True),
        _bisect_theta(m, 3, sign=-1.0, vanishing=True),
        _bisect_theta(m, 4, sign=1.0, vanishing=False),
    )


# ---------------------------------------------------------------------------
# Drift inequality
# ---------------------------------------------------------------------------


def _disk_region_strips(u: float) -> list[Strip]:
    """Strips for {y - u(e^-x - 1) >= 0} inside the open unit disk."""

    def rad(x: float) -> float:
        return math.sqrt(max(0.0, 1.0 - x * x))

    return [
        Strip(
            -1.0,
            1.0,
            lambda x: max(u * math.expm1(-x), -rad(x)),
            lambda x: rad(x),
        )
    ]


def drift_lhs(t: LevyTriplet2D, u: float) -> float:
    """Left-hand side of the drift inequality at u; may be -inf."""
    base = t.gamma_tilde[1] + u * t.gamma_tilde[0] - 0.5 * u * t.sigma_xi2
    atoms = t.jumps.atoms_or_none()
    if atoms is not None:
        term = 0.0
        for a in atoms:
            if _in_open_ball(a.x, a.y) and sgn(s_jump(a.x, a.y, u)) >= 0:
                term += a.rate * (u * a.x + a.y)
        return base - term
    strips = _disk_region_strips(u)
    pos = t.jumps.integrate_refined(lambda x, y: max(u * x + y, 0.0), strips)
    if pos == INF:
        return NEG_INF
    neg = t.jumps.integrate_refined(lambda x, y: max(-(u * x + y), 0.0), strips)
    if neg == INF:
        raise UndeterminedError(
            "negative part of the drift integral diverged; measure is not Levy"
        )
    return base - (pos - neg)


class SmallJumpVariation(enum.Enum):
    FINITE = "finite"
    INFINITE = "infinite"
    UNDETERMINED = "undetermined"


def small_jump_variation(t: LevyTriplet2D, u: float) -> SmallJumpVariation:
    """Decides whether the small positive jumps of S(u) have finite mass-size
    integral; always finite on the atom tier."""
    if t.jumps.atoms_or_none() is not None:
        return SmallJumpVariation.FINITE
    strips = [
        Strip(
            -_HUGE,
            _HUGE,
            lambda x: u * math.expm1(-x),
            lambda x: u * math.expm1(-x) + 1.0,
        )
    ]
    try:
        value = t.jumps.integrate_refined(lambda x, y: max(s_jump(x, y, u), 0.0), strips)
    except UndeterminedError:
        return SmallJumpVariation.UNDETERMINED
    return SmallJumpVariation.INFINITE if value == INF else SmallJumpVariation.FINITE


# ---------------------------------------------------------------------------
# Exact piecewise-affine form of the drift inequality (atom tier)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PiecewiseLinearFn:
    """Piecewise-affine function of u with explicit values at breakpoints.

    ``pieces[k]`` is the (slope, intercept) pair on the open interval between
    ``breakpoints[k-1]`` and ``breakpoints[k]``; the function may jump at a
    breakpoint, where ``at_points[k]`` is the exact value.
    """

    breakpoints: tuple[float, ...]
    pieces: tuple[tuple[float, float], ...]
    at_points: tuple[float, ...]

    def __call__(self, u: float) -> float:
        for bp, val in zip(self.breakpoints, self.at_points):
            if abs(u - bp) <= BOUNDARY_TOL:
                return val
        k = bisect_right(self.breakpoints, u)
        slope, intercept = self.pieces[k]
        return slope * u + intercept

    def left_right(self, k: int) -> tuple[float, float]:
        """One-sided limits at breakpoint k."""
        bp = self.breakpoints[k]
        sl, cl = self.pieces[k]
        sr, cr = self.pieces[k + 1]
        return sl * bp + cl, sr * bp + cr

    def nonneg_set(self, tol: float = BOUNDARY_TOL) -> IntervalSet:
        """The set {u : f(u) >= 0}, with boundary dead band.

        Roots are exact up to rounding; solution intervals are widened
        outward by a relative 1e-13 so that coincident boundaries computed
        through different float paths still intersect.
        """
        cuts = (NEG_INF,) + self.breakpoints + (INF,)
        parts = []
        for k, (slope, intercept) in enumerate(self.pieces):
            lo, hi = cuts[k], cuts[k + 1]
            piece = Interval(lo, hi, lo_open=True, hi_open=True)
            if abs(slope) <= 1e-300:
                if intercept >= -tol:
                    parts.append(piece)
                continue
            root = -intercept / slope
            pad = 1e-13 * max(1.0, abs(root))
            if slope > 0:
                sol = Interval(root - pad, INF, lo_open=False, hi_open=True)
            else:
                sol = Interval(NEG_INF, root + pad, lo_open=True, hi_open=False)
            parts.append(piece.intersect(sol))
        for bp, val in zip(self.breakpoints, self.at_points):
            if val >= -tol:
                parts.append(Interval(bp, bp))
        return IntervalSet(parts)

    def to_json(self) -> dict:
        return {
            "breakpoints": list(self.breakpoints),
            "pieces": [{"slope": s, "intercept": c} for s, c in self.pieces],
            "at_points": [ext_to_json(v) for v in self.at_points],
        }


def drift_lhs_piecewise(t: LevyTriplet2D) -> PiecewiseLinearFn:
    """Exact u-parametric form of the drift inequality for atom measures."""
    atoms = t.jumps.atoms_or_none()
    if atoms is None:
        raise NotSupportedError("piecewise drift form requires the atom tier")
    base_slope = t.gamma_tilde[0] - 0.5 * t.sigma_xi2
    base_intercept = t.gamma_tilde[1]

    disk = [a for a in atoms if _in_open_ball(a.x, a.y)]
    bps = sorted({_atom_critical(a) for a in disk if a.x != 0.0})

    cuts = [NEG_INF] + bps + [INF]
    pieces = []
    for k in range(len(cuts) - 1):
        lo, hi = cuts[k], cuts[k + 1]
        if math.isinf(lo) and math.isinf(hi):
            mid = 0.0
        elif math.isinf(lo):
            mid = hi - 1.0
        elif math.isinf(hi):
            mid = lo + 1.0
        else:
            mid = 0.5 * (lo + hi)
        slope, intercept = base_slope, base_intercept
        for a in disk:
            if s_jump(a.x, a.y, mid) > 0.0:
                slope -= a.rate * a.x
                intercept -= a.rate * a.y
        pieces.append((slope, intercept))

    at_points = tuple(drift_lhs(t, bp) for bp in bps)
    return PiecewiseLinearFn(tuple(bps), tuple(pieces), at_points)
