"""Chebyshev asymptotic scales, probe schedules and their verification.

A scale is an ordered tuple of comparison functions on a one-sided
neighborhood of a limit point ``x0`` (finite or +inf).  The standard
orientation has ``T < x0``; the mirrored orientation ``T > x0`` (finite)
covers limits approached from the right, with all asymptotic machinery
reading "toward x0" uniformly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import (
    AllImagesVanish,
    BadScheduleParams,
    EvaluationError,
    NotAsymptoticScale,
)
from .expr import ExpressionFunction
from .extrapolate import extrapolate_limit
from .jet import jet_derivative


@dataclass
class ScaleFunction:
    """A named jet-producing evaluator ``(x, order) -> Jet``."""

    name: str
    evaluator: object

    def __call__(self, x, order):
        return self.evaluator(x, order)


@dataclass
class VerificationRecord:
    kind: str
    passed: bool
    details: dict = field(default_factory=dict)


class ChebyshevScale:
    """Ordered scale functions with interval of validity and jet caching."""

    def __init__(self, functions, T, x0, name=""):
        funcs = []
        for i, f in enumerate(functions):
            if isinstance(f, ScaleFunction):
                funcs.append(f)
            elif isinstance(f, str):
                funcs.append(ScaleFunction(f, ExpressionFunction(f)))
            else:
                funcs.append(ScaleFunction(getattr(f, "name", f"phi_{i + 1}"), f))
        self.functions = funcs
        self.n = len(funcs)
        self.T = float(T)
        self.x0 = float(x0)
        self.name = name
        if self.n < 2:
            raise NotAsymptoticScale("a scale needs at least two functions")
        if math.isinf(self.x0) and self.x0 < 0:
            raise NotAsymptoticScale("the limit point may be finite or +inf")
        if self.T == self.x0:
            raise NotAsymptoticScale("T must differ from x0")
        # +1: x -> x0 from the left (standard); -1: from the right (mirrored).
        self.direction = 1 if self.x0 > self.T else -1
        self.infinite = math.isinf(self.x0)
        self.verified = None
        self._jets = {}
        # Weighted-derivative chains need derivatives up to about twice the
        # scale length; see the module design notes.
        self.default_order = 2 * self.n

    @classmethod
    def from_exprs(cls, texts, T, x0, name=""):
        return cls([ExpressionFunction(t) for t in texts], T, x0, name=name)

    def phi_jet(self, i, x, order):
        """Jet of the i-th scale function (1-based index)."""
        key = (i, x, order)
        out = self._jets.get(key)
        if out is None:
            out = self.functions[i - 1](x, order)
            self._jets[key] = out
        return out

    def phi_value(self, i, x):
        return self.phi_jet(i, x, 0).value

    def phi_derivatives(self, i, x, order):
        """[f(x), f'(x), ..., f^(order)(x)] for the i-th function."""
        j = self.phi_jet(i, x, order)
        return [jet_derivative(j, k) for k in range(order + 1)]

    def toward_x0(self, points):
        """Sort probe points in order of approach to x0."""
        return sorted(points, key=lambda x: self.direction * x)

    def __repr__(self):
        names = ", ".join(f.name for f in self.functions)
        return f"ChebyshevScale([{names}], T={self.T}, x0={self.x0})"


@dataclass(frozen=True)
class ProbeSchedule:
    """Strictly monotone points inside the interval approaching x0."""

    points: tuple
    kind: str  # "geometric-approach" (finite x0) or "geometric-growth" (+inf)

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)


def make_schedule(T, x0, count, ratio):
    """Geometric probe schedule approaching ``x0``.

    Finite x0: ``x_j = x0 - (x0 - s) * ratio**j`` with s the midpoint of
    [T, x0); requires 0 < ratio < 1.  Infinite x0: ``x_j = s * ratio**j``
    with ``s = max(T, 1) + 1``; requires ratio > 1.
    """
    if count < 6:
        raise BadScheduleParams("a schedule needs at least 6 points")
    T = float(T)
    x0 = float(x0)
    if math.isinf(x0):
        if x0 < 0:
            raise BadScheduleParams("limit point must be finite or +inf")
        if ratio <= 1.0:
            raise BadScheduleParams("ratio must exceed 1 for an infinite limit")
        s = max(T, 1.0) + 1.0
        pts = tuple(s * ratio**j for j in range(count))
        return ProbeSchedule(pts, "geometric-growth")
    if T == x0:
        raise BadScheduleParams("T must differ from x0")
    if not 0.0 < ratio < 1.0:
        raise BadScheduleParams("ratio must lie in (0, 1) for a finite limit")
    s = 0.5 * (T + x0)
    pts = tuple(x0 - (x0 - s) * ratio**j for j in range(count))
    return ProbeSchedule(pts, "geometric-approach")


# -- hierarchy rule -----------------------------------------------------------


def ratio_decreases_to_zero(ratios, tol=1e-4):
    """Finite-sample surrogate for ``ratio -> 0`` along the schedule.

    Pass rule: the last five ratios decrease monotonically, and either the
    final ratio is below 1e-2 or the Aitken-extrapolated limit is within
    max(tol, 5% of the final ratio) of zero.  The extrapolation escape is
    needed for logarithmic hierarchies, which no finite schedule can push
    under an absolute threshold.
    """
    vals = [abs(r) for r in ratios if math.isfinite(r)]
    diag = {"ratios_used": len(vals)}
    # an exactly-zero tail means the ratio underflowed: it clearly decayed
    while len(vals) > 1 and vals[-1] == 0.0:
        vals.pop()
        diag["underflowed_tail"] = True
    if diag.get("underflowed_tail") and (len(vals) < 5 or vals[-1] < 1e-2):
        diag["final"] = 0.0
        return True, diag
    if len(vals) < 5:
        diag["reason"] = "too few finite ratios"
        return False, diag
    tail = vals[-5:]
    monotone = all(a > b for a, b in zip(tail, tail[1:]))
    final = tail[-1]
    limit, conf = extrapolate_limit(vals)
    diag.update(final=final, monotone=monotone, limit=limit, confidence=conf)
    if not monotone:
        return False, diag
    if final < 1e-2:
        return True, diag
    if final < 0.5 and abs(limit) < max(tol, 0.05 * final):
        return True, diag
    return False, diag


def hierarchy_from_values(values_per_function, tol=1e-4):
    """Pairwise hierarchy check on sampled values, first function largest."""
    pairs = []
    passed = True
    for i in range(len(values_per_function) - 1):
        upper = values_per_function[i]
        lower = values_per_function[i + 1]
        ratios = []
        for u, v in zip(upper, lower):
            ratios.append(abs(v / u) if u != 0 else math.inf)
        ok, diag = ratio_decreases_to_zero(ratios, tol)
        diag["pair"] = (i + 1, i + 2)
        diag["passed"] = ok
        pairs.append(diag)
        passed = passed and ok
    return passed, pairs


def verify_hierarchy(scale, schedule, tol=1e-4):
    """Check the pairwise ordering of the scale along the schedule.

    Each adjacent ratio must pass :func:`ratio_decreases_to_zero`, and no
    scale function may vanish at a probe.
    """
    pts = scale.toward_x0(schedule.points)
    values = []
    nonvanishing = True
    vanish_detail = []
    for i in range(1, scale.n + 1):
        vi = [scale.phi_value(i, x) for x in pts]
        if not all(math.isfinite(v) for v in vi):
            raise EvaluationError(f"scale function {i} not finite on the schedule")
        for x, v in zip(pts, vi):
            # local magnitude scale from the first-order jet at the probe
            j = scale.phi_jet(i, x, 1)
            local = max(abs(c) for c in j.coeffs)
            if abs(v) <= 1e-13 * local:
                nonvanishing = False
                vanish_detail.append({"function": i, "x": x, "value": v})
        values.append(vi)
    passed, pairs = hierarchy_from_values(values, tol)
    record = VerificationRecord(
        kind="hierarchy",
        passed=passed and nonvanishing,
        details={
            "pairs": pairs,
            "nonvanishing": nonvanishing,
            "vanishing_points": vanish_detail,
        },
    )
    if scale.verified is None:
        scale.verified = {}
    scale.verified["hierarchy"] = record
    return record


def verify_tas(scale, grid, tol=1e-9):
    """Nonvanishing of leading and reversed Wronskians on a grid.

    A violation is any determinant below ``tol`` times its Hadamard row
    scale.  When all scale functions are positive near x0 the observed signs
    of the leading Wronskians are compared against the alternating pattern
    ``(-1)^(i(i-1)/2)`` and reported (not enforced).
    """
    from .wronskian import wronskian  # local import to avoid a module cycle

    violations = []
    signs_near_x0 = {}
    pts = scale.toward_x0(grid)
    for i in range(1, scale.n + 1):
        forward = list(range(1, i + 1))
        reversed_ix = list(range(scale.n, i - 1, -1))
        for label, indices in (("forward", forward), ("reversed", reversed_ix)):
            prev_sign = 0
            for x in pts:
                ev = wronskian(scale, indices, x)
                if abs(ev.value) <= tol * ev.det_scale:
                    violations.append(
                        {"indices": tuple(indices), "x": x, "value": ev.value}
                    )
                    continue
                sgn = 1 if ev.value > 0 else -1
                if prev_sign and sgn != prev_sign:
                    # a sign change between grid points implies a zero inside
                    violations.append(
                        {"indices": tuple(indices), "x": x, "value": ev.value,
                         "kind": "sign change"}
                    )
                prev_sign = sgn
            last = wronskian(scale, indices, pts[-1])
            if label == "forward":
                signs_near_x0[i] = 1 if last.value > 0 else -1
    all_positive = all(scale.phi_value(i, pts[-1]) > 0 for i in range(1, scale.n + 1))
    sign_report = None
    if all_positive:
        sign_report = {
            i: {
                "observed": signs_near_x0[i],
                "expected": (-1) ** (i * (i - 1) // 2),
                "matches": signs_near_x0[i] == (-1) ** (i * (i - 1) // 2),
            }
            for i in signs_near_x0
        }
    record = VerificationRecord(
        kind="tas",
        passed=not violations,
        details={
            "violations": violations,
            "sign_pattern": sign_report,
            "grid_points": len(pts),
        },
    )
    if scale.verified is None:
        scale.verified = {}
    scale.verified["tas"] = record
    return record


def default_verification_schedule(scale, count=14):
    """A wide schedule for hierarchy checks, capped where evaluation overflows.

    Hierarchy ratios converge slowly (logarithmic pairs especially), so the
    verification schedule reaches as deep as double precision allows rather
    than tracking whatever narrow window a caller probes on.
    """
    ratio = 2.0 if scale.infinite else 0.5
    pts = make_schedule(scale.T, scale.x0, count, ratio).points
    good = []
    for x in pts:
        try:
            if not all(
                math.isfinite(scale.phi_value(i, x)) for i in range(1, scale.n + 1)
            ):
                break
        except (ArithmeticError, EvaluationError):
            break
        good.append(x)
    if len(good) < 8:
        return make_schedule(scale.T, scale.x0, max(8, len(good)), 1.4 if scale.infinite else 0.65)
    kind = "geometric-growth" if scale.infinite else "geometric-approach"
    return ProbeSchedule(tuple(good), kind)


def require_verified(scale, schedule=None, tol=1e-4):
    """Verify the hierarchy once (idempotent) and raise if it fails."""
    rec = None
    if scale.verified:
        rec = scale.verified.get("hierarchy")
    if rec is None:
        if schedule is None:
            schedule = default_verification_schedule(scale)
        rec = verify_hierarchy(scale, schedule, tol)
    if not rec.passed:
        raise NotAsymptoticScale(
            f"hierarchy verification failed: {rec.details['pairs']}"
        )
    return rec


# -- asymptotic admissibility ---------------------------------------------------


class DerivativeOperator:
    """The standard operator d^k/dx^k as an operator handle."""

    def __init__(self, k=1):
        self.k = k

    def apply(self, f, x):
        return jet_derivative(f(x, self.k), self.k)


def _apply_operator(operator, f, x):
    if hasattr(operator, "apply"):
        return operator.apply(f, x)
    return operator(f, x)


def check_admissibility(scale, operator, schedule, tol=1e-4):
    """Asymptotic admissibility of an operator with respect to the scale.

    Computes ``m``, the largest index whose image is not identically zero
    (constant-zero detection along the schedule), then checks that the
    surviving images still form an asymptotic scale.
    """
    pts = scale.toward_x0(schedule.points)
    images = []
    for i in range(1, scale.n + 1):
        images.append([_apply_operator(operator, scale.functions[i - 1], x) for x in pts])
    zero = []
    for i, vals in enumerate(images, start=1):
        biggest = max(abs(v) for v in vals)
        zero.append(all(abs(v) < 1e-10 * (1.0 + biggest) for v in vals))
    if all(zero):
        raise AllImagesVanish("every image vanishes identically on the schedule")
    m = max(i for i in range(1, scale.n + 1) if not zero[i - 1])
    surviving = [vals for i, vals in enumerate(images, start=1) if i <= m and not zero[i - 1]]
    if len(surviving) >= 2:
        ok, pairs = hierarchy_from_values(surviving, tol)
    else:
        ok, pairs = True, []
    return {
        "m": m,
        "verdict": "pass" if ok else "fail",
        "suppressed": [i for i in range(1, m + 1) if zero[i - 1]],
        "pairs": pairs,
    }


# -- scale-definition files ------------------------------------------------------


def load_scale_file(path):
    """Line-oriented format: ``x0 = <number|inf>``, ``T = <number>``, then one
    expression per line, largest first.  Blank lines and ``#`` comments skipped."""
    x0 = None
    T = None
    exprs = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            lowered = line.replace(" ", "").lower()
            if lowered.startswith("x0="):
                text = lowered[3:]
                x0 = math.inf if text in ("inf", "+inf", "infinity") else float(text)
            elif lowered.startswith("t="):
                T = float(lowered[2:])
            else:
                exprs.append(line)
    if x0 is None or T is None or len(exprs) < 2:
        raise NotAsymptoticScale(
            f"scale file {path!r} must set x0, T and at least two expressions"
        )
    return ChebyshevScale.from_exprs(exprs, T, x0, name=str(path))
