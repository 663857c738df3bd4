"""Tolerance conventions and checked extended-real arithmetic.

Extended reals are plain IEEE floats carrying ``inf``/``-inf``.  Comparisons
follow the usual total order; the helpers below make the two indeterminate
forms (inf - inf and 0 * inf) hard errors instead of silent NaNs.

``BOUNDARY_TOL`` is the package-wide comparison tolerance for exact-tier
region predicates: a quantity within 1e-12 of zero is treated as sitting on
the boundary.
"""

from __future__ import annotations

import math

from .errors import IndeterminateFormError

INF = math.inf
NEG_INF = -math.inf

#: Comparison tolerance for atom-tier boundary predicates.
BOUNDARY_TOL = 1e-12


def sgn(value: float, tol: float = BOUNDARY_TOL) -> int:
    """Sign of ``value`` with a dead band of ``tol`` around zero."""
    if math.isnan(value):
        raise IndeterminateFormError("sign of NaN requested")
    if value > tol:
        return 1
    if value < -tol:
        return -1
    return 0


def is_zero(value: float, tol: float = BOUNDARY_TOL) -> bool:
    return sgn(value, tol) == 0


def nonneg(value: float, tol: float = BOUNDARY_TOL) -> bool:
    return sgn(value, tol) >= 0


def checked_add(a: float, b: float) -> float:
    if math.isinf(a) and math.isinf(b) and (a > 0) != (b > 0):
        raise IndeterminateFormError("inf - inf in extended-real addition")
    return a + b


def checked_sub(a: float, b: float) -> float:
    return checked_add(a, -b)


def checked_mul(a: float, b: float) -> float:
    if (a == 0.0 and math.isinf(b)) or (b == 0.0 and math.isinf(a)):
        raise IndeterminateFormError("0 * inf in extended-real multiplication")
    return a * b


def ext_to_json(value: float):
    """Encode an extended real for JSON ('inf'/'-inf' strings at infinity)."""
    if value == INF:
        return "inf"
    if value == NEG_INF:
        return "-inf"
    return value


def ext_from_json(value) -> float:
    if value == "inf":
        return INF
    if value == "-inf":
        return NEG_INF
    return float(value)
