"""Exact ruin classification for the generalized Ornstein-Uhlenbeck process.

Everything here reduces to one question: for which levels u is the test
process S(u) = eta - u W a subordinator, where W is the Levy process with
exp(-xi) = stochexp(W)?  The process started at z can never drop below the
largest such u at or below z, and the infinite-horizon ruin probability from
z is zero exactly when some u in [0, z] qualifies.

A 1-d Levy process is a subordinator iff it has no Gaussian part, no
negative jumps, and nonnegative drift after removing the small-jump
compensation.  Applied to S(u) those three conditions become

* a rigidity constraint on the Gaussian covariance (B_eta = -u B_xi),
* emptiness of the moving quadrant regions at u, captured by the interval
  [theta2, theta4] (u >= 0) or [theta1, theta3] (u <= 0),
* the drift inequality L(u) >= 0 of :mod:`gouruin.regions`.

The module deliberately keeps two independent routes to the same verdict:
``is_subordinator_s`` evaluates the three structural conditions from the
pair triplet, while ``is_subordinator_1d(s_process(t, u))`` builds the
triplet of S(u) explicitly and applies the 1-d definition.  Their agreement
is the core correctness oracle of the package.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import NotApplicableError, UndeterminedError
from .intervals import Interval, IntervalSet
from .model import (
    LevyTriplet2D,
    MarginalTriplet,
    d_eta,
    l_process,
    marginal_eta,
    marginal_xi,
    mean_at_one,
    s_gaussian_variance,
    s_jump,
    s_process,
    scale_eta,
    w_jump,
)
from .numerics import BOUNDARY_TOL, INF, NEG_INF, ext_to_json, sgn
from .regions import ThetaBounds, drift_lhs, drift_lhs_piecewise, quadrant_mass, thetas


class Verdict(enum.Enum):
    YES = "yes"
    NO = "no"
    UNDETERMINED = "undetermined"


class FailedCondition(enum.Enum):
    GAUSSIAN = "gaussian"
    NEGATIVE_JUMPS = "negative_jumps"
    DRIFT = "drift"


@dataclass(frozen=True)
class SubordinatorCertificate:
    """Machine-checkable record of the three-part subordinator test."""

    verdict: Verdict
    gaussian_ok: bool
    negative_jumps_mass: float
    drift_d: float | None
    failing_condition: FailedCondition | None
    detail: str | None = None

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "gaussian_ok": self.gaussian_ok,
            "negative_jumps_mass": ext_to_json(self.negative_jumps_mass),
            "drift_d": None if self.drift_d is None else ext_to_json(self.drift_d),
            "failing_condition": self.failing_condition.value
            if self.failing_condition
            else None,
            "detail": self.detail,
        }


def is_subordinator_1d(m: MarginalTriplet) -> SubordinatorCertificate:
    """Direct 1-d subordinator test: no Gaussian part, no negative jumps,
    nonnegative drift."""
    gaussian_ok = sgn(m.sigma2) == 0
    try:
        neg_mass = m.jumps.mass(NEG_INF, 0.0)
    except UndeterminedError as exc:
        return SubordinatorCertificate(
            Verdict.UNDETERMINED, gaussian_ok, math.nan, None, None, detail=str(exc)
        )
    if not gaussian_ok:
        return SubordinatorCertificate(
            Verdict.NO, False, neg_mass, None, FailedCondition.GAUSSIAN
        )
    if neg_mass > 0.0:
        return SubordinatorCertificate(
            Verdict.NO, True, neg_mass, None, FailedCondition.NEGATIVE_JUMPS
        )
    try:
        d = d_eta(m)
    except NotApplicableError:  # pragma: no cover - excluded by the mass check
        raise
    except UndeterminedError as exc:
        return SubordinatorCertificate(
            Verdict.UNDETERMINED, True, neg_mass, None, None, detail=str(exc)
        )
    if sgn(d) >= 0 if math.isfinite(d) else d == INF:
        return SubordinatorCertificate(Verdict.YES, True, neg_mass, d, None)
    return SubordinatorCertificate(
        Verdict.NO, True, neg_mass, d, FailedCondition.DRIFT
    )


def _s_negative_jump_mass(t: LevyTriplet2D, u: float) -> float:
    atoms = t.jumps.atoms_or_none()
    if atoms is not None:
        return sum(a.rate for a in atoms if sgn(s_jump(a.x, a.y, u)) < 0)
    from .model import MappedSMeasure1D

    return MappedSMeasure1D(t.jumps, u).mass(NEG_INF, 0.0)


def is_subordinator_s(t: LevyTriplet2D, u: float) -> SubordinatorCertificate:
    """Three-part structural test of whether S(u) = eta - u W is a
    subordinator, evaluated on the pair triplet itself.

    The quadrant conditions are checked in their measure form (no jump of
    S(u) is negative), which is exactly the union of the interval conditions
    on [theta2, theta4] and [theta1, theta3]; the drift condition is the
    closed-region drift inequality.
    """
    gaussian_ok = sgn(s_gaussian_variance(t.sigma, u)) == 0
    try:
        neg_mass = _s_negative_jump_mass(t, u)
    except UndeterminedError as exc:
        return SubordinatorCertificate(
            Verdict.UNDETERMINED, gaussian_ok, math.nan, None, None, detail=str(exc)
        )
    if not gaussian_ok:
        return SubordinatorCertificate(
            Verdict.NO, False, neg_mass, None, FailedCondition.GAUSSIAN
        )
    if neg_mass > 0.0:
        return SubordinatorCertificate(
            Verdict.NO, True, neg_mass, None, FailedCondition.NEGATIVE_JUMPS
        )
    try:
        lhs = drift_lhs(t, u)
    except UndeterminedError as exc:
        return SubordinatorCertificate(
            Verdict.UNDETERMINED, True, neg_mass, None, None, detail=str(exc)
        )
    if (sgn(lhs) >= 0) if math.isfinite(lhs) else lhs == INF:
        return SubordinatorCertificate(Verdict.YES, True, neg_mass, lhs, None)
    return SubordinatorCertificate(
        Verdict.NO, True, neg_mass, lhs, FailedCondition.DRIFT
    )


# ---------------------------------------------------------------------------
# Feasible levels and the lower-bound function
# ---------------------------------------------------------------------------


def _covariance_constraint(t: LevyTriplet2D) -> IntervalSet:
    """Levels u compatible with the Gaussian rigidity B_eta = -u B_xi."""
    s11, s12 = t.sigma[0]
    s22 = t.sigma[1][1]
    scale = max(1.0, s11, s22, abs(s12))
    if abs(s11) <= BOUNDARY_TOL * scale:
        if abs(s22) <= BOUNDARY_TOL * scale and abs(s12) <= BOUNDARY_TOL * scale:
            return IntervalSet.full()
        return IntervalSet.empty()
    u0 = -s12 / s11
    if abs(s22 - u0 * u0 * s11) <= BOUNDARY_TOL * max(scale, u0 * u0 * s11):
        return IntervalSet.point(u0)
    return IntervalSet.empty()


def _is_zero_mass(m, value: float) -> bool:
    if m.atoms_or_none() is not None:
        return value == 0.0
    return value <= 16.0 * getattr(m, "tol", 1e-9)


def _region_constraint(t: LevyTriplet2D, th: ThetaBounds) -> IntervalSet:
    """Levels at which no jump of S(u) is negative, as theta intervals."""
    m = t.jumps
    parts = []
    if _is_zero_mass(m, quadrant_mass(m, 3)) and th.theta2 <= th.theta4:
        parts.append(Interval(th.theta2, th.theta4))
    if _is_zero_mass(m, quadrant_mass(m, 2)) and th.theta1 <= th.theta3:
        parts.append(Interval(th.theta1, th.theta3))
    return IntervalSet(parts)


def _drift_constraint(t: LevyTriplet2D, cov: IntervalSet) -> IntervalSet:
    if t.jumps.atoms_or_none() is not None:
        return drift_lhs_piecewise(t).nonneg_set()
    # Density tier: decidable only pointwise; a point covariance constraint
    # reduces the drift condition to one evaluation.
    if len(cov.intervals) == 1:
        iv = cov.intervals[0]
        if iv.lo == iv.hi:
            u0 = iv.lo
            lhs = drift_lhs(t, u0)
            ok = (sgn(lhs) >= 0) if math.isfinite(lhs) else lhs == INF
            return IntervalSet.point(u0) if ok else IntervalSet.empty()
    if cov.is_empty():
        return IntervalSet.empty()
    raise UndeterminedError(
        "drift feasibility over a continuum of levels needs the atom tier"
    )


def feasible_u_set(t: LevyTriplet2D) -> IntervalSet:
    """All levels u at which S(u) is a subordinator, as an interval set."""
    cov = _covariance_constraint(t)
    if cov.is_empty():
        return cov
    if len(cov.intervals) == 1 and cov.intervals[0].lo == cov.intervals[0].hi:
        # Rigid Gaussian: a single candidate level; evaluate the jump and
        # drift conditions directly so coincident boundaries cannot be lost
        # to independent rounding of interval endpoints.
        u0 = cov.intervals[0].lo
        cert = is_subordinator_s(t, u0)
        if cert.verdict is Verdict.UNDETERMINED:
            raise UndeterminedError(cert.detail or "undetermined at the candidate level")
        return IntervalSet.point(u0) if cert.verdict is Verdict.YES else IntervalSet.empty()
    region = _region_constraint(t, thetas(t.jumps))
    drift = _drift_constraint(t, cov)
    return cov.intersect(region).intersect(drift)


def delta(t: LevyTriplet2D, z: float) -> float:
    """Lowest level reachable from z: the largest feasible u at or below z,
    or -inf when no such level exists."""
    return feasible_u_set(t).sup_at_most(z)


# ---------------------------------------------------------------------------
# The ruin decision
# ---------------------------------------------------------------------------


class DecisionKind(enum.Enum):
    NO_RUIN_FROM = "no_ruin_from"
    RUIN_EVERYWHERE = "ruin_everywhere"
    UNDETERMINED = "undetermined"


class Branch(enum.Enum):
    SIGMA_POSITIVE = "sigma_positive"
    SIGMA_ZERO = "sigma_zero"


@dataclass(frozen=True)
class RuinDecision:
    kind: DecisionKind
    threshold: float | None = None
    attained: bool = True

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "threshold": None if self.threshold is None else ext_to_json(self.threshold),
            "attained": self.attained,
        }


@dataclass(frozen=True)
class RuinReport:
    """Complete output of the exact no-ruin decision."""

    decision: RuinDecision
    thetas: ThetaBounds
    feasible_u: IntervalSet
    branch: Branch
    certificate: SubordinatorCertificate
    warnings: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "decision": self.decision.to_json(),
            "thetas": self.thetas.to_json(),
            "feasible_u": self.feasible_u.to_json(),
            "branch": self.branch.value,
            "certificate": self.certificate.to_json(),
            "warnings": list(self.warnings),
        }


def _literal_threshold_sigma_zero(t: LevyTriplet2D, th: ThetaBounds) -> float | None:
    """max(theta2, inf{u > 0 : drift inequality holds}), the display form of
    the zero-Gaussian threshold; used only to cross-check the feasible-set
    answer."""
    if t.jumps.atoms_or_none() is None:
        return None
    pos = drift_lhs_piecewise(t).nonneg_set().intersect(
        IntervalSet((Interval(0.0, INF, lo_open=True),))
    )
    inf_val, _ = pos.inf_value()
    if inf_val == INF:
        return None
    return max(th.theta2, inf_val)


def no_ruin_threshold(t: LevyTriplet2D) -> RuinReport:
    """The exact no-ruin decision with its certificate.

    Returns the smallest starting level from which the ruin probability
    vanishes, or reports that ruin has positive probability from every
    starting level.
    """
    warnings_out: list[str] = []
    branch = (
        Branch.SIGMA_POSITIVE
        if t.sigma_xi2 > BOUNDARY_TOL
        else Branch.SIGMA_ZERO
    )
    try:
        th = thetas(t.jumps)
        feasible = feasible_u_set(t)
    except UndeterminedError as exc:
        blank = SubordinatorCertificate(
            Verdict.UNDETERMINED, False, math.nan, None, None, detail=str(exc)
        )
        return RuinReport(
            RuinDecision(DecisionKind.UNDETERMINED),
            ThetaBounds(NEG_INF, 0.0, 0.0, INF),
            IntervalSet.empty(),
            branch,
            blank,
            (str(exc),),
        )

    nonneg = feasible.intersect(IntervalSet((Interval(0.0, INF),)))
    if nonneg.is_empty():
        if branch is Branch.SIGMA_POSITIVE:
            u_cand = -t.sigma[0][1] / t.sigma_xi2
        else:
            u_cand = th.theta2 if math.isfinite(th.theta2) else 0.0
        cert = is_subordinator_s(t, u_cand)
        if cert.verdict is Verdict.UNDETERMINED:
            return RuinReport(
                RuinDecision(DecisionKind.UNDETERMINED),
                th,
                feasible,
                branch,
                cert,
                tuple(warnings_out + [cert.detail or "undetermined certificate"]),
            )
        return RuinReport(
            RuinDecision(DecisionKind.RUIN_EVERYWHERE),
            th,
            feasible,
            branch,
            cert,
            tuple(warnings_out),
        )

    u_star, attained = nonneg.inf_value()
    if not attained:
        warnings_out.append(
            "threshold is a one-sided limit: ruin remains possible at the "
            "threshold level itself"
        )
    if branch is Branch.SIGMA_ZERO:
        literal = _literal_threshold_sigma_zero(t, th)
        if literal is None or abs(literal - u_star) > BOUNDARY_TOL * max(
            1.0, abs(u_star)
        ):
            warnings_out.append(
                "display-form threshold max(theta2, inf{u>0: drift holds}) "
                f"differs from the feasible-set threshold ({literal} vs {u_star}); "
                "the feasible-set value is authoritative"
            )
    cert = is_subordinator_s(t, u_star)
    return RuinReport(
        RuinDecision(DecisionKind.NO_RUIN_FROM, u_star, attained),
        th,
        feasible,
        branch,
        cert,
        tuple(warnings_out),
    )


# ---------------------------------------------------------------------------
# Side conditions: convergence, stationarity, degeneracy
# ---------------------------------------------------------------------------


def z_infinity_converges(t: LevyTriplet2D) -> Verdict:
    """Does the discounted integral Z converge a.s. to a finite limit?

    Requires xi to drift to +infinity and a logarithmic tail-moment of the
    eta jumps to be finite.  The drift test used here is the mean test
    E[xi_1] > 0, which covers every measure this package can represent
    (jump supports are bounded, so the mean always exists).
    """
    try:
        m_eta = marginal_eta(t)
        tail = m_eta.jumps.integrate(
            lambda v: math.log(abs(v)), math.e, INF, nonneg=True
        ) + m_eta.jumps.integrate(
            lambda v: math.log(abs(v)), NEG_INF, -math.e, nonneg=True
        )
        if tail == INF:
            return Verdict.NO
        ex = mean_at_one(t)[0]
    except UndeterminedError:
        return Verdict.UNDETERMINED
    if not math.isfinite(ex):
        return Verdict.YES if ex == INF else Verdict.NO
    return Verdict.YES if sgn(ex) > 0 else Verdict.NO


def is_stationary_possible(t: LevyTriplet2D) -> Verdict:
    """Stationarity criterion: the convergence test applied to (-xi, L)."""
    try:
        pair_l = l_process(t)
    except UndeterminedError:
        return Verdict.UNDETERMINED
    atoms = pair_l.jumps.atoms_or_none()
    from .model import FiniteAtomSet, JumpAtom

    flipped = LevyTriplet2D(
        (-pair_l.gamma_tilde[0], pair_l.gamma_tilde[1]),
        (
            (pair_l.sigma[0][0], -pair_l.sigma[0][1]),
            (-pair_l.sigma[0][1], pair_l.sigma[1][1]),
        ),
        FiniteAtomSet([JumpAtom(-a.x, a.y, a.rate) for a in atoms]),
    )
    return z_infinity_converges(flipped)


_DEGENERACY_TOL = 1e-9


def is_degenerate(t: LevyTriplet2D) -> float | None:
    """Constant-limit test: returns k != 0 with eta = -k W when the whole
    randomness of eta is the exponential transform of xi, else None."""
    atoms = t.jumps.atoms_or_none()
    k = None
    if atoms is not None:
        for a in atoms:
            if a.x != 0.0:
                w = w_jump(a.x)
                k = -a.y / w
                break
            # A pure eta jump cannot be cancelled by any multiple of W.
            return None
    if k is None and t.sigma_xi2 > BOUNDARY_TOL:
        k = t.sigma[0][1] / t.sigma_xi2
    if k is None:
        m_xi = marginal_xi(t)
        m_eta = marginal_eta(t)
        if (
            sgn(m_eta.sigma2) == 0
            and abs(m_xi.gamma) > BOUNDARY_TOL
            and t.jumps.atoms_or_none() is not None
        ):
            k = m_eta.gamma / m_xi.gamma
    if k is None or abs(k) <= BOUNDARY_TOL:
        return None
    try:
        s = s_process(t, -k)
    except UndeterminedError:
        return None
    scale = max(1.0, abs(k))
    if abs(s.gamma) > _DEGENERACY_TOL * scale or s.sigma2 > _DEGENERACY_TOL * scale:
        return None
    jump_atoms = s.jumps.atoms_or_none()
    if jump_atoms is not None:
        if any(abs(v) > _DEGENERACY_TOL * scale for v, _ in jump_atoms):
            return None
    else:
        try:
            residual = s.jumps.mass(NEG_INF, 0.0) + s.jumps.mass(0.0, INF)
        except UndeterminedError:
            return None
        if residual > _DEGENERACY_TOL:
            return None
    return k


# ---------------------------------------------------------------------------
# Scaling of the decision
# ---------------------------------------------------------------------------


def scaled_report(t: LevyTriplet2D, k: float) -> RuinReport:
    """Ruin decision for (xi, k eta); thresholds scale linearly in k."""
    return no_ruin_threshold(scale_eta(t, k))
