"""Coefficient extraction, theorem verification and remainder bounds.

Two extraction routes: the recursive peeling definition of the coefficients,
and the independent operator-limit route through the type-II weighted
derivatives.  The theorem checkers evaluate each side of the equivalences
(limits, iterated integrals, expansion sets, remainder identities and
bounds) and report ``consistent=False`` only when two decisive verdicts
contradict a claimed equivalence: that is the artifact's primary
bug-detector, since the theory guarantees it cannot happen for correct code
on valid inputs.  Marginal numerical evidence yields "inconclusive", never a
forced verdict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergentTail, EvaluationError, LimitDiverged
from .extrapolate import classify_sequence, extrapolate_limit, is_bounded_tail
from .factorization import (
    _CachedJetFn,
    _NestJetFn,
    apply_chain,
    apply_full_operator,
    as_value_fn,
    build_principal_system,
    build_type1_chain,
    build_type2_chain,
    well_conditioned_probes,
)
from .operators import operator_constants
from .quadrature import NestedIntegral, WorkGrid, classify_toward
from .scale import make_schedule, ratio_decreases_to_zero, require_verified
from .wronskian import bordered_wronskian, wronskian

_LIMIT_TOL = 1e-6  # "a limit exists" when confidence < tol * (1 + |value|)


def _guarded_ratio(num_fn, den_fn):
    """x -> num(x)/den(x) with a short-circuit: an underflowed numerator is
    zero without evaluating the (possibly overflowing) denominator."""

    def fn(x):
        v = num_fn(x)
        if v == 0.0:
            return 0.0
        return v / den_fn(x)

    return fn


def _finite_reach(fns, start, cap=3e5):
    """Largest x (by doubling) where every callable still evaluates finite."""
    reach = start
    x = start
    while x < cap:
        x *= 2.0
        try:
            if not all(math.isfinite(fn(x)) for fn in fns):
                break
        except (ArithmeticError, EvaluationError):
            break
        reach = x
    return reach


# -- artifacts bundle ------------------------------------------------------------


class ScaleArtifacts:
    """Chains, constants, principal system and shared grids for one scale."""

    def __init__(self, scale, schedule, build_system=True):
        require_verified(scale)
        self.scale = scale
        self.schedule = schedule
        self.probes = scale.toward_x0(
            well_conditioned_probes(scale, schedule.points, minimum=6)
        )
        self.chain_q = build_type2_chain(scale, schedule)
        self.chain_p = build_type1_chain(scale, schedule)
        self.q_vals = [as_value_fn(w) for w in self.chain_q.weights]
        self.p_vals = [as_value_fn(w) for w in self.chain_p.weights]
        if scale.infinite:
            # cap the tail reach where the scale/chain evaluations overflow
            reach = _finite_reach(self.q_vals + self.p_vals, max(self.probes))
            self.grid = WorkGrid(scale.T, scale.x0, include=self.probes,
                                 hard_cap=reach)
        else:
            self.grid = WorkGrid(scale.T, scale.x0, include=self.probes)
        self.system = (
            build_principal_system(scale, self.chain_p, schedule) if build_system else None
        )
        self.constants = operator_constants(
            scale, self.chain_q, self.chain_p, self.system, schedule
        )
        self._apply_cache = {}
        self._nest_cache = {}
        # classification points: the probe schedule extended geometrically to
        # the grid's reach (table lookups there are free, and integrals need
        # the extra range to classify decisively)
        pts = list(self.probes)
        if len(pts) >= 2:
            ratio = abs(
                (self.grid.x0 - pts[-1]) / (self.grid.x0 - pts[-2])
            ) if not scale.infinite else pts[-1] / pts[-2]
            edge = self.grid.sigma * self.grid.nodes[-1]
            nxt = pts[-1]
            for _ in range(24):
                nxt = (
                    nxt * ratio if scale.infinite
                    else self.grid.x0 - (self.grid.x0 - nxt) * ratio
                )
                if scale.infinite and nxt > 0.95 * edge:
                    break
                if not scale.infinite and abs(self.grid.x0 - nxt) < 1.05 * abs(
                    self.grid.x0 - edge
                ):
                    break
                pts.append(nxt)
        self.class_points = pts

    @property
    def n(self):
        return self.scale.n

    def M(self, k, f, x):
        key = ("M", k, id(f), x)
        out = self._apply_cache.get(key)
        if out is None:
            out = apply_chain(self.chain_q, f, x, level=k)
            self._apply_cache[key] = out
        return out

    def L(self, k, f, x):
        key = ("L", k, id(f), x)
        out = self._apply_cache.get(key)
        if out is None:
            out = apply_chain(self.chain_p, f, x, level=k)
            self._apply_cache[key] = out
        return out

    def M_phi(self, k, i, x):
        return self.M(k, self.scale.functions[i - 1], x)

    def L_phi(self, k, i, x):
        return self.L(k, self.scale.functions[i - 1], x)

    def limit(self, f, k):
        """Deflated operator-limit status of M_k[f] along the probes.

        Probes where the rounding-noise estimate of the weighted derivative
        rivals the values themselves are masked; beyond that point the
        sequence is numerically dead."""
        key = ("lim", k, id(f))
        out = self._apply_cache.get(key)
        if out is None:
            pairs = [
                apply_chain(self.chain_q, f, x, level=k, with_noise=True)
                for x in self.class_points
            ]
            vals = [v for v, _ in pairs]
            typical = _median([abs(v) for v in vals[: max(4, len(vals) // 2)]])
            usable = len(vals)
            for j, (v, nz) in enumerate(pairs):
                if j >= 6 and nz > 1e-3 * max(abs(v), typical, 1e-300):
                    usable = j
                    break
            usable = min(usable, _sane_prefix(vals))
            pts = self.class_points[:usable]
            basis = [
                [self.M_phi(k, i, x) for x in pts]
                for i in range(k + 2, self.n + 1)
            ]
            out = _deflated_limit_status(vals[:usable], basis)
            self._apply_cache[key] = out
        return out

    def lf_evaluator(self, f, source=None):
        """``x -> L[f](x)``; a known source density short-circuits the
        Wronskian quotient."""
        if source is not None:
            qn = self.q_vals[self.n]

            def lf(x):
                v = source(x)
                if v == 0.0:
                    return 0.0
                return qn(x) * v

            return lf
        scale = self.scale
        return lambda x: apply_full_operator(scale, f, x)

    def lf_is_zero(self, f):
        """Constant-zero detection for L[f] along the schedule."""
        idx = tuple(range(1, self.n + 1))
        for x in self.probes:
            num, _, det_scale = bordered_wronskian(self.scale, idx, f, x)
            if abs(num) > 1e-8 * det_scale:
                return False
        return True

    def nest(self, weights, orientations, density, key=None):
        """Memoized NestedIntegral on the shared grid."""
        if key is not None and key in self._nest_cache:
            return self._nest_cache[key]
        nest = NestedIntegral(self.grid, weights, orientations, density)
        if key is not None:
            self._nest_cache[key] = nest
        return nest


def artifacts_for(scale, schedule=None, build_system=True):
    if schedule is None:
        ratio = 1.6 if scale.infinite else 0.5
        schedule = make_schedule(scale.T, scale.x0, 12, ratio)
    return ScaleArtifacts(scale, schedule, build_system=build_system)


# -- extraction -------------------------------------------------------------------


@dataclass
class ExpansionResult:
    coefficients: list
    confidences: list
    method: str
    remainder_samples: dict = field(default_factory=dict)
    source_density: object = None
    partial: bool = False
    statuses: list = field(default_factory=list)


def _sane_prefix(values, minimum=6):
    """Length of the usable prefix before numerical death of a sequence.

    Weighted derivatives of functions with a dominant huge term die at large
    probes: the informative digits fall below the ulp of the leading term and
    values collapse to exact zeros or explode off-trend.  Detect the first
    collapse/explosion after a sane start and cut there.
    """
    n = len(values)
    mags = [abs(v) for v in values if v != 0.0 and math.isfinite(v)]
    if not mags:
        return n
    ref = _median(mags[: max(3, len(mags) // 2)])
    for j in range(minimum, n):
        v = values[j]
        dead = v == 0.0 and values[j - 1] != 0.0
        wild = math.isfinite(v) and ref > 0 and abs(v) > 1e4 * max(ref, abs(values[j - 1]))
        if dead or wild or not math.isfinite(v):
            return j
    return n


def _median(xs):
    s = sorted(xs)
    if not s:
        return 0.0
    mid = len(s) // 2
    return s[mid] if len(s) % 2 else 0.5 * (s[mid - 1] + s[mid])


def _informative_points(pts, f_vals, phi_n_vals, eta=1e-4, minimum=6):
    """Probes whose float value of f still resolves the smallest scale term.

    Beyond the point where ulp(|f|) exceeds eta * |phi_n| no method can
    recover the deeper coefficients from f's double values; such probes only
    inject rounding junk."""
    keep = [
        j for j in range(len(pts))
        if 1e-16 * abs(f_vals[j]) <= eta * abs(phi_n_vals[j])
    ]
    if len(keep) >= minimum:
        return keep
    return list(range(min(len(pts), max(minimum, len(keep)))))


def _status_from_conf(value, conf, tol=_LIMIT_TOL):
    scale0 = 1.0 + abs(value)
    if not math.isfinite(value) or not math.isfinite(conf) or conf > 1e-2 * scale0:
        return "unstable"
    return "stable" if conf <= tol * scale0 else "loose"


def _limit_status(values, tol=_LIMIT_TOL, loo=True):
    """Limit detection with leave-one-out validation of the confidence.

    The extrapolators can land on accidental deep-tableau coincidences; the
    shift of the estimate when the last probe is withheld is a real
    stability measure that an accidental claim cannot fake.
    """
    res = classify_sequence(values, tol)
    kind = res["kind"]
    if kind in ("diverged_plus", "diverged_minus", "oscillatory"):
        return "diverged", math.nan, math.inf
    if kind == "converged":
        value, conf = res["value"], res["confidence"]
    else:
        value, conf = extrapolate_limit(values)
    if loo and len(values) >= 7 and math.isfinite(value):
        _, v2, _ = _limit_status(values[:-1], tol, loo=False)
        if math.isfinite(v2):
            conf = max(conf, abs(value - v2))
    return _status_from_conf(value, conf, tol), value, conf


def _deflated_limit_status(values, basis_rows, tol=_LIMIT_TOL):
    """Limit detection after removing exactly-computable correction terms.

    ``basis_rows`` hold sampled functions that tend to zero toward x0 (the
    operator images of the deeper scale members, or their ratios).  A least
    squares fit of the sequence against [1, basis...] identifies their
    contribution; the deflated sequence has the same limit but a far smaller
    transient, which the standard detector then resolves.  Divergent
    sequences stay divergent under deflation by decaying terms.
    """
    clean = [b for b in basis_rows if all(math.isfinite(v) for v in b)]
    if not clean or not all(math.isfinite(v) for v in values):
        return _limit_status(values, tol)

    def deflate(vals, rows):
        # fit on the late probes only: whatever the basis cannot represent
        # (the true remainder) is smallest there and cannot smear the fit
        m = len(vals)
        start = max(m - max(len(rows) + 4, (2 * m) // 3), 0)
        a = np.ones((m - start, len(rows) + 1))
        for c, row in enumerate(rows, start=1):
            a[:, c] = row[start:]
        scalecols = np.maximum(np.abs(a).max(axis=0), 1e-300)
        sol, *_ = np.linalg.lstsq(a / scalecols, np.array(vals[start:]), rcond=None)
        betas = sol / scalecols
        out = list(vals)
        for c, row in enumerate(rows, start=1):
            out = [d - betas[c] * v for d, v in zip(out, row)]
        return out

    try:
        deflated = deflate(values, clean)
    except np.linalg.LinAlgError:
        return _limit_status(values, tol)
    status, value, conf = _limit_status(deflated, tol, loo=False)
    # leave-one-out over the whole pipeline (refit included): an absorbed
    # genuine transient or a tableau fluke shifts under point removal
    if len(values) >= 7 and math.isfinite(value):
        try:
            defl2 = deflate(values[:-1], [r[:-1] for r in clean])
            _, v2, _ = _limit_status(defl2, tol, loo=False)
            if math.isfinite(v2):
                conf = max(conf, abs(value - v2))
        except np.linalg.LinAlgError:
            pass
        status = _status_from_conf(value, conf, tol) if status != "diverged" else status
    raw_status, raw_value, raw_conf = _limit_status(values, tol)
    if raw_status == "diverged" and status == "unstable":
        return raw_status, raw_value, raw_conf
    if raw_status in ("stable", "loose") and raw_conf < conf:
        return raw_status, raw_value, raw_conf
    return status, value, conf


def extract_recursive(f, scale, schedule, refine_sweeps=5):
    """Coefficients by peeling: a_i from the residual-over-phi_i limits.

    After the defining recursive pass, a few Gauss-Seidel sweeps re-extract
    each coefficient from the residual with *all* other extracted terms
    removed.  The limits are mathematically identical; the sweeps damp the
    pollution a small error in an early coefficient injects into later
    ratios through the scale's dynamic range.
    """
    require_verified(scale)
    pts = scale.toward_x0(schedule.points)
    n = scale.n
    fvals = [f(x, 0).value for x in pts]
    phis = [[scale.phi_value(i, x) for x in pts] for i in range(1, n + 1)]
    info = _informative_points(pts, fvals, phis[n - 1])
    pts = [pts[j] for j in info]
    fvals = [fvals[j] for j in info]
    phis = [[p[j] for j in info] for p in phis]

    def peeled(skip=None, upto=None):
        res = list(fvals)
        for j in range(len(coeffs) if upto is None else upto):
            if j != skip:
                res = [r - coeffs[j] * p for r, p in zip(res, phis[j])]
        return res

    floors = [
        1e-14 * max(abs(fvals[j]), max(abs(p[j]) for p in phis))
        for j in range(len(pts))
    ]
    conf_by_coeff = {}

    def ratio_limit(res, i, rem_row=None):
        # drop probes where the peeled residual sits below the cancellation
        # floor of the subtraction: their ratios are pure rounding noise
        keep = [j for j in range(len(pts)) if abs(res[j]) > 30.0 * floors[j]]
        if len(keep) < 7:
            keep = list(range(len(pts)))[: max(7, len(pts) - 2)]
        # pollution truncation: the uncertainty of every *other* extracted
        # coefficient leaks into this ratio scaled by phi_l/phi_i, which can
        # grow toward x0; drop probes where that leak rivals the signal
        kept = []
        for j in keep:
            ratio_j = res[j] / phis[i][j]
            leak = sum(
                conf_by_coeff.get(l, 0.0) * abs(phis[l][j] / phis[i][j])
                for l in range(n) if l != i
            )
            if 20.0 * leak <= 0.05 * abs(ratio_j) + 1e-300 or len(kept) < 7:
                kept.append(j)
        keep = kept
        ratios = [res[j] / phis[i][j] for j in keep]
        # deflation basis: only the deeper (decaying) expansion-term shapes;
        # growing pollution is handled by the truncation above, since a fit
        # against growing shapes can absorb the genuine limit approach
        basis = [
            [phis[l][j] / phis[i][j] for j in keep] for l in range(i + 1, n)
        ]
        if rem_row is not None:
            mag = max(abs(rem_row[j]) for j in keep)
            if mag > 0 and all(abs(rem_row[j]) > 3.0 * floors[j] for j in keep[-3:]):
                basis.append([rem_row[j] / phis[i][j] for j in keep])
        status, value, conf = _deflated_limit_status(ratios, basis)
        # the kept probes still carry rounding noise; fold the worst of the
        # last few into the confidence so it cannot be understated
        noise = max(floors[j] / abs(phis[i][j]) for j in keep[-3:])
        if noise > conf and status in ("stable", "loose"):
            conf = noise
            scale0 = 1.0 + abs(value)
            if conf > 1e-2 * scale0:
                status = "unstable"
            elif conf > _LIMIT_TOL * scale0:
                status = "loose"
        return status, value, conf

    coeffs = []
    stopped = None
    for attempt in range(4):
        # (re-)extend the defining peel with the current estimates removed
        extended = False
        residual = peeled()
        for i in range(len(coeffs), n):
            status, value, conf = ratio_limit(residual, i)
            if status == "diverged":
                if i == 0:
                    raise LimitDiverged("f/phi_1 has no finite limit")
                stopped = status
                break
            if status == "unstable" or not math.isfinite(value):
                stopped = "unstable"
                break
            stopped = None
            coeffs.append(value)
            conf_by_coeff[i] = conf
            extended = True
            residual = [r - value * p for r, p in zip(residual, phis[i])]
        # Gauss-Seidel sweeps: each coefficient re-extracted with all other
        # terms removed (same limits, far less pollution); the full residual
        # rides along as an empirical remainder shape
        for _ in range(refine_sweeps if coeffs else 0):
            rem_row = peeled()
            for i in range(len(coeffs)):
                status, value, conf = ratio_limit(peeled(skip=i), i, rem_row)
                if status in ("stable", "loose") and math.isfinite(value):
                    delta = abs(value - coeffs[i])
                    coeffs[i] = value
                    conf_by_coeff[i] = max(conf, 0.1 * delta)
        if len(coeffs) == n or (attempt and not extended):
            break

    # verification pass: final values, confidences, statuses; the residual
    # row is a luxury here, so fall back to the plain basis if it misleads
    confs, statuses = [], []
    partial = stopped is not None or len(coeffs) < n
    for i in range(len(coeffs)):
        status, value, conf = ratio_limit(peeled(skip=i), i, peeled())
        if status not in ("stable", "loose"):
            status, value, conf = ratio_limit(peeled(skip=i), i, None)
        statuses.append(status)
        confs.append(max(conf, conf_by_coeff.get(i, 0.0)))
        if status in ("stable", "loose") and math.isfinite(value):
            coeffs[i] = value
        else:
            partial = True
    if stopped is not None:
        statuses.append(stopped)
    samples = {0: list(zip(pts, peeled()))}
    return ExpansionResult(
        coefficients=coeffs,
        confidences=confs,
        method="recursive_1_3",
        remainder_samples=samples,
        partial=partial,
        statuses=statuses,
    )


def extract_operator(f, scale, chain, constants, schedule):
    """Coefficients from the independent operator limits, no peeling.

    ``chain`` must be the type-II chain (canonical at x0) and ``constants``
    its detected structural constants; ``a_{k+1}`` is the extrapolated limit
    of the level-k weighted derivative divided by the unit constant.
    """
    if chain.canonicity.get("x0") not in ("type_II", "unknown"):
        raise EvaluationError("extract_operator needs a chain of type II at x0")
    eps = constants.epsilon
    n = scale.n
    coeffs, confs, statuses = [], [], []
    partial = False
    pts = None
    for k in range(n):
        # level k touches prefix Wronskians up to order k+2; deeper probes
        # stay usable for the shallow levels
        pts = scale.toward_x0(
            well_conditioned_probes(
                scale, schedule.points, minimum=6, depth=min(k + 2, n)
            )
        )
        fv = [f(x, 0).value for x in pts]
        pn = [scale.phi_value(n, x) for x in pts]
        info = _informative_points(pts, fv, pn)
        pts = [pts[j] for j in info]
        vals = [apply_chain(chain, f, x, level=k) for x in pts]
        sane = _sane_prefix(vals)
        pts_k = pts[:sane]
        vals = vals[:sane]
        basis = [
            [apply_chain(chain, scale.functions[i - 1], x, level=k) for x in pts_k]
            for i in range(k + 2, n + 1)
        ]
        status, value, conf = _deflated_limit_status(vals, basis)
        statuses.append(status)
        if status == "diverged":
            if k == 0:
                raise LimitDiverged("M_0[f] has no finite limit")
            partial = True
            coeffs.append(math.nan)
            confs.append(math.inf)
            continue
        if status == "unstable":
            partial = True
            coeffs.append(math.nan)
            confs.append(math.inf)
            continue
        coeffs.append(value / eps[k])
        confs.append(conf / abs(eps[k]))
    samples = {}
    if all(math.isfinite(c) for c in coeffs):
        for k in range(n):
            rows = []
            for x in pts:
                acc = apply_chain(chain, f, x, level=k)
                for i in range(k + 1, n + 1):
                    acc -= coeffs[i - 1] * apply_chain(
                        chain, scale.functions[i - 1], x, level=k
                    )
                rows.append((x, acc))
            samples[k] = rows
    qn_jetfn = chain.weights[n]

    def source_density(x):
        return apply_full_operator(scale, f, x) / qn_jetfn(x, 0).value

    return ExpansionResult(
        coefficients=coeffs,
        confidences=confs,
        method="operator_limits",
        remainder_samples=samples,
        source_density=source_density,
        partial=partial,
        statuses=statuses,
    )


# -- constructed test functions -----------------------------------------------------


class ConstructedFunction:
    """f = sum c_i phi_i + nested integral of a prescribed source density.

    ``mode="tail"`` uses the representation by iterated tails (requires a
    convergent source; the c_i are then the true expansion coefficients);
    ``mode="from_T"`` anchors every level at T and works for any locally
    integrable source.  L[f] equals q_n * source exactly in both modes, and
    jets unwind algebraically through the nest, so evaluations carry no
    cancellation beyond the tabulated level values.
    """

    def __init__(self, artifacts, coefficients, source_jetfn, mode="tail"):
        art = artifacts
        n = art.n
        if len(coefficients) != n:
            raise EvaluationError("need one coefficient per scale function")
        if mode not in ("tail", "from_T"):
            raise EvaluationError("mode must be 'tail' or 'from_T'")
        self.artifacts = art
        self.coefficients = list(coefficients)
        self.source = source_jetfn
        self.mode = mode
        orientation = "to_x0" if mode == "tail" else "from_T"
        weights = [art.q_vals[i] for i in range(1, n)] + [None]
        self._nest = NestedIntegral(
            art.grid, weights, [orientation] * n, as_value_fn(source_jetfn)
        )
        sign = (-1) ** n if mode == "tail" else 1.0

        def prefactor(x, order):
            return sign / art.chain_q.weight_jet(0, x, order)

        weight_jets = [art.chain_q.weights[i] for i in range(1, n)] + [None]
        self.remainder = _NestJetFn(
            self._nest,
            weight_jets,
            source_jetfn,
            prefactor_jet=_CachedJetFn(prefactor, name="pref"),
            name="constructed-remainder",
        )
        self._cache = {}

    def __call__(self, x, order):
        key = (x, order)
        out = self._cache.get(key)
        if out is None:
            out = self.remainder(x, order)
            for i, c in enumerate(self.coefficients, start=1):
                if c != 0.0:
                    out = out + c * self.artifacts.scale.phi_jet(i, x, order)
            self._cache[key] = out
        return out

    def lf(self, x):
        """L[f](x) = q_n(x) * source(x), exact by construction."""
        v = self.source(x, 0).value
        if v == 0.0:
            return 0.0
        return self.artifacts.q_vals[self.artifacts.n](x) * v


def construct_from_source(artifacts, coefficients, source_jetfn, mode="tail"):
    return ConstructedFunction(artifacts, coefficients, source_jetfn, mode)


# -- theorem reports ------------------------------------------------------------------


@dataclass
class TheoremReport:
    theorem: str
    verdicts: dict
    consistent: bool
    notes: list = field(default_factory=list)

    def statuses(self):
        return {k: v["status"] for k, v in self.verdicts.items()}


def _v(status, **evidence):
    d = {"status": status}
    d.update(evidence)
    return d


def _group_consistent(verdicts, labels):
    decisive = {
        verdicts[l]["status"] for l in labels if l in verdicts
        and verdicts[l]["status"] in ("holds", "fails")
    }
    return len(decisive) <= 1


def _classify_to_status(kind):
    if kind == "converges":
        return "holds"
    if kind.startswith("diverges") or kind == "oscillatory":
        return "fails"
    return "inconclusive"


def _limit_to_status(status):
    if status in ("stable", "loose"):
        return "holds"
    if status == "diverged":
        return "fails"
    return "inconclusive"


def _zero_limit_status(residuals, comparisons, floors):
    """Is residual = o(comparison)?  Ratio rule with an absolute noise floor."""
    ratios, below = [], []
    for r, c, fl in zip(residuals, comparisons, floors):
        below.append(abs(r) <= fl)
        if c != 0.0:
            ratios.append(abs(r / c))
    if len(below) >= 3 and all(below[-3:]):
        return "holds", {"floor": True}
    ok, diag = ratio_decreases_to_zero(ratios)
    if ok:
        return "holds", diag
    res = classify_sequence(ratios, tol=1e-4)
    if res["kind"].startswith("diverged"):
        return "fails", diag
    if res["kind"] == "converged" and abs(res["value"]) > 1e-2:
        return "fails", diag
    return "inconclusive", diag


def _residual_values(f, coeffs, art, k, chain="M", upto=None, remainder=None,
                     coeff_confs=None):
    """R_k(x) over the probes; uses the exact remainder evaluator if given.

    The floor below which a residual counts as numerically zero combines the
    rounding floor with the uncertainty each coefficient carries into the
    subtraction."""
    n = art.n
    upto = n if upto is None else upto
    apply_k = art.M if chain == "M" else art.L
    phi_k = art.M_phi if chain == "M" else art.L_phi
    # M_k kills the first k scale members, L_k the last k: the expansion of
    # the level-k image starts at i = k+1 on the type-II side but at i = 1
    # on the type-I side
    start = k + 1 if chain == "M" else 1
    rows, floors = [], []
    for x in art.probes:
        terms = []
        uncertainty = 0.0
        for i in range(start, upto + 1):
            img = phi_k(k, i, x)
            terms.append(coeffs[i - 1] * img)
            if coeff_confs is not None and i - 1 < len(coeff_confs):
                c = coeff_confs[i - 1]
                if math.isfinite(c):
                    uncertainty += c * abs(img)
        if remainder is not None:
            val = apply_k(k, remainder, x)
        else:
            val = apply_k(k, f, x)
            for t in terms:
                val -= t
        scale_mag = abs(apply_k(k, f, x)) + sum(abs(t) for t in terms)
        rows.append(val)
        floors.append(1e-11 * (scale_mag + 1e-300) + 3.0 * uncertainty)
    return rows, floors


# -- check_complete -------------------------------------------------------------------


def check_complete(f, artifacts, source=None, remainder=None, coefficients=None):
    """Cross-check the complete-expansion equivalences plus remainder facts.

    ``source`` (the density L[f]/q_n), ``remainder`` (a jet-evaluator of the
    remainder) and ``coefficients`` may be supplied for constructed inputs;
    everything is recomputed from f alone otherwise.
    """
    art = artifacts
    n = art.n
    eps = art.constants.epsilon
    verdicts = {}
    notes = []

    lf_zero = source is None and art.lf_is_zero(f)
    if lf_zero:
        lf = lambda x: 0.0
        notes.append("L[f] below detection threshold: treated as identically zero")
    else:
        lf = art.lf_evaluator(f, source)
    qn = art.q_vals[n]
    density = (lambda x: 0.0) if lf_zero else _guarded_ratio(lf, qn)

    # (5.7)/(5.8): operator limits
    limit_vals = []
    for k in range(n):
        status, value, conf = art.limit(f, k)
        limit_vals.append((status, value, conf))
        verdicts[f"(5.7) limit k={k}"] = _v(
            _limit_to_status(status), value=value, confidence=conf
        )
    all_lim = [_limit_to_status(s) for s, _, _ in limit_vals]
    agg = "holds" if all(s == "holds" for s in all_lim) else (
        "fails" if any(s == "fails" for s in all_lim) else "inconclusive"
    )
    verdicts["(5.7) limits"] = _v(agg)
    verdicts["(5.8) last limit"] = verdicts[f"(5.7) limit k={n - 1}"].copy()

    # (5.9): convergence of the source integral
    if lf_zero:
        verdicts["(5.9) integral"] = _v("holds", value=0.0, zero=True)
        int_converges = True
    else:
        kind, value = _classify_single_level(art, density, key=("59", id(f)))
        verdicts["(5.9) integral"] = _v(_classify_to_status(kind), kind=kind, value=value)
        int_converges = kind == "converges"

    # coefficients (prefer supplied construction values)
    coeffs = list(coefficients) if coefficients is not None else None
    coeff_confs = [0.0] * n if coefficients is not None else None
    if coeffs is None and all(s in ("stable", "loose") for s, _, _ in limit_vals):
        coeffs = [limit_vals[k][1] / eps[k] for k in range(n)]
        coeff_confs = [limit_vals[k][2] / abs(eps[k]) for k in range(n)]

    # (5.5)-(5.6): the expansion set
    if lf_zero and coeffs is not None:
        # identically-zero operator image: f lies in the kernel span, the
        # expansion is exact and every formally differentiated set is too
        verdicts["(5.5)-(5.6) set"] = _v("holds", zero=True)
    elif coeffs is not None:
        set_status = "holds"
        diags = {}
        for k in range(n):
            rows, floors = _residual_values(f, coeffs, art, k, "M", remainder=remainder,
                                            coeff_confs=coeff_confs)
            cmps = [art.M_phi(k, n, x) for x in art.probes]
            st, diag = _zero_limit_status(rows, cmps, floors)
            diags[k] = st
            if st == "fails":
                set_status = "fails"
            elif st == "inconclusive" and set_status != "fails":
                set_status = "inconclusive"
        verdicts["(5.5)-(5.6) set"] = _v(set_status, per_k=diags)
    elif any(s == "diverged" for s, _, _ in limit_vals):
        verdicts["(5.5)-(5.6) set"] = _v("fails", reason="a defining limit diverges")
    else:
        verdicts["(5.5)-(5.6) set"] = _v("inconclusive")

    # remainder identity (5.14)-(5.15) and bounds, only in the convergent case
    if int_converges and coeffs is not None and not lf_zero:
        try:
            nest = art.nest(
                [art.q_vals[i] for i in range(1, n + 1)],
                ["to_x0"] * n,
                lf,
                key=("rep", id(f)),
            )
        except DivergentTail:
            nest = None
            verdicts["(5.14)-(5.15) identity"] = _v(
                "inconclusive", reason="tail tables did not stabilize"
            )
        if nest is not None:
            _remainder_identity(f, coeffs, art, nest, remainder, verdicts, coeff_confs)
            _remainder_bounds(f, coeffs, art, nest, lf, remainder, verdicts, coeff_confs)
    elif lf_zero and coeffs is not None:
        rows, floors = _residual_values(f, coeffs, art, 0, "M", remainder=remainder,
                                        coeff_confs=coeff_confs)
        ok = all(abs(r) <= fl * 100 for r, fl in zip(rows, floors))
        verdicts["(5.14)-(5.15) identity"] = _v("holds" if ok else "fails", zero=True)

    # type-I side: (4.31) ladder and (4.32)
    _type1_side(f, coeffs, art, lf, lf_zero, remainder, verdicts, coeff_confs)

    # generalized convexity branch (needs the all-positive Wronskian case)
    convex = _convexity(f, coeffs, art, lf, lf_zero, remainder, verdicts, notes,
                        coeff_confs)

    groups = [
        ["(5.5)-(5.6) set", "(5.7) limits", "(5.8) last limit", "(5.9) integral"],
        ["(4.31) set", "(4.32) integral"],
    ]
    if convex:
        groups = [groups[0] + groups[1] + ["(6.2) O-form"]]
    consistent = all(_group_consistent(verdicts, g) for g in groups)
    for label in (
        "(5.14)-(5.15) identity",
        "(5.16) bound",
        "(5.17) bound",
        "(6.9) sign",
        "(6.10) monotonicity",
    ):
        if label in verdicts and verdicts[label]["status"] == "fails":
            consistent = False
    return TheoremReport(
        theorem="complete (type-I and type-II formal differentiation)",
        verdicts=verdicts,
        consistent=consistent,
        notes=notes,
    )


def _nest_points(art, nest):
    """Classification points cropped to the nest's reliable range (cells
    whose embedded quadrature error rivals their value, e.g. oscillatory
    integrands on wide far cells, are excluded)."""
    sigma = art.grid.sigma
    pts = [x for x in art.class_points if sigma * x <= sigma * nest.reliable_x]
    return pts if len(pts) >= 6 else art.class_points[:6]


def _classify_single_level(art, density, key=None):
    """Classify the improper integral of a density toward x0 on the grid."""
    nest = art.nest([None], ["from_T"], density, key=key)
    partials = [nest.value(x, 0) for x in _nest_points(art, nest)]
    res = classify_sequence(partials, tol=1e-6)
    kind = {
        "converged": "converges",
        "diverged_plus": "diverges_plus",
        "diverged_minus": "diverges_minus",
        "oscillatory": "oscillatory",
        "inconclusive": "inconclusive",
    }[res["kind"]]
    value = res["value"] if kind == "converges" else math.nan
    return kind, value


def _remainder_identity(f, coeffs, art, nest, remainder, verdicts, coeff_confs=None):
    n = art.n
    ok_probes = 0
    bad = 0
    details = []
    for k in range(n):
        rows, floors = _residual_values(f, coeffs, art, k, "M", remainder=remainder,
                                        coeff_confs=coeff_confs)
        for x, direct, fl in zip(art.probes, rows, floors):
            rep = (-1) ** (n + k) * nest.value(x, k)
            scale_mag = abs(direct) + abs(rep)
            if scale_mag < max(10 * fl, 1e-12):
                continue  # below numerical resolution at this probe
            rel = abs(direct - rep) / scale_mag
            details.append((k, x, rel))
            if rel < 1e-5:
                ok_probes += 1
            else:
                bad += 1
    if ok_probes + bad < 3:
        verdicts["(5.14)-(5.15) identity"] = _v("inconclusive", checked=ok_probes + bad)
    else:
        verdicts["(5.14)-(5.15) identity"] = _v(
            "holds" if bad == 0 else "fails",
            checked=ok_probes + bad,
            failures=bad,
            worst=max((r for _, _, r in details), default=0.0),
        )


def _remainder_bounds(f, coeffs, art, nest, lf, remainder, verdicts, coeff_confs=None):
    n = art.n
    # (5.16): |R_0| <= |phi_n| * sup over later probes of |innermost tail|
    tails = [nest.value(x, n - 1) for x in art.probes]
    rows, floors = _residual_values(f, coeffs, art, 0, "M", remainder=remainder,
                                    coeff_confs=coeff_confs)
    q0 = art.q_vals[0]
    ok16 = True
    for j, x in enumerate(art.probes):
        r0 = rows[j] / q0(x)  # undo the level-0 weight: M_0 = q_0 f
        sup_tail = max(abs(t) for t in tails[j:])
        bound = abs(art.scale.phi_value(n, x)) * sup_tail + 10 * floors[j] / q0(x)
        if abs(r0) > bound * (1 + 1e-9) + 1e-300:
            ok16 = False
    verdicts["(5.16) bound"] = _v("holds" if ok16 else "fails")
    # (5.17): absolute-convergence bound with the quadrature error folded in
    try:
        abs_nest = art.nest(
            [art.q_vals[n]], ["to_x0"], lambda x: abs(lf(x)), key=("abs", id(f))
        )
    except DivergentTail:
        verdicts["(5.17) bound"] = _v("inconclusive", reason="not absolutely convergent")
        return
    ok17 = True
    for j, x in enumerate(art.probes):
        r0 = rows[j] / q0(x)
        bound = (
            abs(art.scale.phi_value(n, x)) * (abs(abs_nest.value(x)) + abs_nest.value_error)
            + 10 * floors[j] / q0(x)
        )
        if abs(r0) > bound + 1e-300:
            ok17 = False
    verdicts["(5.17) bound"] = _v("holds" if ok17 else "fails")


def _type1_side(f, coeffs, art, lf, lf_zero, remainder, verdicts, coeff_confs=None):
    n = art.n
    if lf_zero and coeffs is not None:
        verdicts["(4.31) set"] = _v(
            "holds" if _term_loss(art, n) else "fails", zero=True
        )
    elif coeffs is not None:
        set_status = "holds"
        diags = {}
        for k in range(n):
            rows, floors = _residual_values(
                f, coeffs, art, k, "L", upto=n - k, remainder=remainder,
                coeff_confs=coeff_confs,
            )
            ones = [1.0] * len(rows)
            st, diag = _zero_limit_status(rows, ones, floors)
            diags[k] = st
            if st == "fails":
                set_status = "fails"
            elif st == "inconclusive" and set_status != "fails":
                set_status = "inconclusive"
        # term-loss rule: the lost term is annihilated identically
        loss_ok = _term_loss(art, n)
        verdicts["(4.31) set"] = _v(set_status, per_k=diags, term_loss=loss_ok)
        if not loss_ok and set_status == "holds":
            verdicts["(4.31) set"]["status"] = "fails"
    elif verdicts["(5.7) limits"]["status"] == "fails":
        verdicts["(4.31) set"] = _v("inconclusive", reason="no coefficients")
    else:
        verdicts["(4.31) set"] = _v("inconclusive")

    if lf_zero:
        verdicts["(4.32) integral"] = _v("holds", zero=True)
        return
    pn = art.p_vals[n]
    density = _guarded_ratio(lf, pn)
    try:
        nest = art.nest(
            [art.p_vals[i] for i in range(1, n)] + [None],
            ["from_T"] + ["to_x0"] * (n - 1),
            density,
            key=("typeI", id(f)),
        )
    except DivergentTail as exc:
        decisive = getattr(exc, "decisive", True)
        verdicts["(4.32) integral"] = _v(
            "fails" if decisive else "inconclusive", reason=str(exc)
        )
        return
    partials = [nest.value(x, 0) for x in _nest_points(art, nest)]
    res = classify_sequence(partials, tol=1e-6)
    verdicts["(4.32) integral"] = _v(
        _classify_to_status(
            {
                "converged": "converges",
                "diverged_plus": "diverges_plus",
                "diverged_minus": "diverges_minus",
                "oscillatory": "oscillatory",
                "inconclusive": "inconclusive",
            }[res["kind"]]
        ),
        kind=res["kind"],
    )


def _term_loss(art, i):
    """(4.29)-style annihilation: L_{n-i+h}[phi_{i-h+1}] == 0 identically."""
    n = art.n
    for h in range(i):
        k = n - i + h
        target = i - h + 1
        if not 1 <= target <= n or k < 1:
            continue
        for x in art.probes[:: max(1, len(art.probes) // 4)]:
            img = abs(art.L_phi(k, target, x))
            biggest = max(abs(art.L_phi(k, j, x)) for j in range(1, n - k + 1))
            if img > 1e-7 * (biggest + 1e-300):
                return False
    return True


def _convexity(f, coeffs, art, lf, lf_zero, remainder, verdicts, notes,
               coeff_confs=None):
    """Generalized-convexity branch: needs L[f] >= 0 along the schedule and
    the all-positive leading-Wronskian case, which fixes the sign pattern."""
    n = art.n
    if not art.constants.positivity_case:
        return False
    if lf_zero:
        nonneg = True
    else:
        vals = [lf(x) for x in art.probes]
        mag = max(abs(v) for v in vals) + 1e-300
        nonneg = all(v >= -1e-9 * mag for v in vals)
    if not nonneg:
        return False
    notes.append("L[f] >= 0 on the schedule: generalized-convexity checks apply")
    if coeffs is None:
        return True
    # (6.2): O-form with n-1 terms
    rows = []
    for x in art.probes:
        acc = f(x, 0).value
        for i in range(1, n):
            acc -= coeffs[i - 1] * art.scale.phi_value(i, x)
        rows.append(acc / art.scale.phi_value(n, x))
    bounded, diag = is_bounded_tail(rows)
    verdicts["(6.2) O-form"] = _v(
        "holds" if bounded else ("inconclusive" if bounded is None else "fails"),
        **diag,
    )
    # (6.9)/(6.10): remainder sign and monotone products; the products are
    # taken with the positive chain weights ((-1)^n R_0 p_0 and
    # (-1)^n R_0 q_0), which is the sign-convention-free form
    rows0, floors0 = _residual_values(f, coeffs, art, 0, "M", remainder=remainder,
                                      coeff_confs=coeff_confs)
    q0 = art.q_vals[0]
    r0 = [r / q0(x) for r, x in zip(rows0, art.probes)]
    slack = [10 * fl / q0(x) for fl, x in zip(floors0, art.probes)]
    sign_ok = all((-1) ** n * r >= -s for r, s in zip(r0, slack))
    verdicts["(6.9) sign"] = _v("holds" if sign_ok else "fails")
    mono_ok = True
    for weight in (art.p_vals[0], art.q_vals[0]):
        prods, slacks = [], []
        for r, s, x in zip(r0, slack, art.probes):
            wv = weight(x)
            prods.append((-1) ** n * r * wv)
            slacks.append(abs(s * wv) + 1e-300)
        for j in range(len(prods) - 1):
            if prods[j + 1] > prods[j] + slacks[j] + slacks[j + 1]:
                mono_ok = False
    verdicts["(6.10) monotonicity"] = _v("holds" if mono_ok else "fails")
    return True


# -- check_incomplete ------------------------------------------------------------------


def check_incomplete(f, i, artifacts, source=None, remainder=None, coefficients=None):
    """Cross-check the order-i incomplete-expansion equivalences (1 <= i <= n-1)."""
    art = artifacts
    n = art.n
    if not 1 <= i <= n - 1:
        raise EvaluationError(f"i must lie in [1, {n - 1}]")
    eps = art.constants.epsilon
    verdicts = {}
    notes = []
    lf_zero = source is None and art.lf_is_zero(f)
    if lf_zero:
        lf = lambda x: 0.0
        notes.append("L[f] below detection threshold: treated as identically zero")
    else:
        lf = art.lf_evaluator(f, source)

    # (5.22)/(5.23) limits up to order i-1
    limit_vals = []
    for k in range(i):
        status, value, conf = art.limit(f, k)
        limit_vals.append((status, value, conf))
        verdicts[f"(5.22) limit k={k}"] = _v(
            _limit_to_status(status), value=value, confidence=conf
        )
    agg = [_limit_to_status(s) for s, _, _ in limit_vals]
    verdicts["(5.22) limits"] = _v(
        "holds" if all(s == "holds" for s in agg)
        else ("fails" if any(s == "fails" for s in agg) else "inconclusive")
    )
    verdicts["(5.23) last limit"] = verdicts[f"(5.22) limit k={i - 1}"].copy()

    coeffs = list(coefficients) if coefficients is not None else None
    coeff_confs = [0.0] * len(coeffs) if coefficients is not None else None
    if coeffs is None and all(s in ("stable", "loose") for s, _, _ in limit_vals):
        coeffs = [limit_vals[k][1] / eps[k] for k in range(i)]
        coeff_confs = [limit_vals[k][2] / abs(eps[k]) for k in range(i)]
    if coeffs is not None and len(coeffs) < n:
        coeffs = coeffs + [0.0] * (n - len(coeffs))
        coeff_confs = coeff_confs + [0.0] * (n - len(coeff_confs))

    # (5.20)-(5.21) expansion set up to phi_i
    if coeffs is not None:
        set_status = "holds"
        diags = {}
        for k in range(i):
            rows, floors = _residual_values(
                f, coeffs, art, k, "M", upto=i, remainder=remainder,
                coeff_confs=coeff_confs,
            )
            cmps = [art.M_phi(k, i, x) for x in art.probes]
            st, diag = _zero_limit_status(rows, cmps, floors)
            diags[k] = st
            if st == "fails":
                set_status = "fails"
            elif st == "inconclusive" and set_status != "fails":
                set_status = "inconclusive"
        verdicts["(5.20)-(5.21) set"] = _v(set_status, per_k=diags)
    elif any(s == "diverged" for s, _, _ in limit_vals):
        verdicts["(5.20)-(5.21) set"] = _v("fails", reason="a defining limit diverges")
    else:
        verdicts["(5.20)-(5.21) set"] = _v("inconclusive")

    # (5.24): outer improper integral of the mixed from-T nest
    if lf_zero:
        verdicts["(5.24) integral"] = _v("holds", zero=True)
    else:
        nest = art.nest(
            [art.q_vals[j] for j in range(i, n + 1)],
            ["from_T"] * (n - i + 1),
            lf,
            key=("524", i, id(f)),
        )
        partials = [nest.value(x, 0) for x in _nest_points(art, nest)]
        res = classify_sequence(partials, tol=1e-6)
        verdicts["(5.24) integral"] = _v(
            {"converged": "holds", "diverged_plus": "fails",
             "diverged_minus": "fails", "oscillatory": "fails",
             "inconclusive": "inconclusive"}[res["kind"]],
            kind=res["kind"],
        )

    # type-I side: (4.23) set, (4.22) first group, (4.24) integral
    if coeffs is not None:
        st23 = "holds"
        per_h = {}
        for h in range(i):
            k = n - i + h
            rows, floors = _residual_values(
                f, coeffs, art, k, "L", upto=i - h, remainder=remainder,
                coeff_confs=coeff_confs,
            )
            ones = [1.0] * len(rows)
            st, _ = _zero_limit_status(rows, ones, floors)
            per_h[h] = st
            if st == "fails":
                st23 = "fails"
            elif st == "inconclusive" and st23 != "fails":
                st23 = "inconclusive"
        verdicts["(4.23) set"] = _v(st23, per_h=per_h)
        st22 = "holds"
        per_k = {}
        for k in range(n - i + 1):
            rows, floors = _residual_values(
                f, coeffs, art, k, "L", upto=i, remainder=remainder,
                coeff_confs=coeff_confs,
            )
            cmps = [art.L_phi(k, i, x) for x in art.probes]
            st, _ = _zero_limit_status(rows, cmps, floors)
            per_k[k] = st
            if st == "fails":
                st22 = "fails"
            elif st == "inconclusive" and st22 != "fails":
                st22 = "inconclusive"
        if st22 == "holds" and st23 != "holds":
            st22 = st23
        verdicts["(4.22) set"] = _v(st22, per_k=per_k, term_loss=_term_loss(art, i))
    else:
        verdicts["(4.23) set"] = _v("inconclusive")
        verdicts["(4.22) set"] = _v("inconclusive")

    if lf_zero:
        verdicts["(4.24) integral"] = _v("holds", zero=True)
    else:
        pn = art.p_vals[n]
        density = _guarded_ratio(lf, pn)
        try:
            nest = art.nest(
                [art.p_vals[j] for j in range(n - i + 1, n)] + [None],
                ["from_T"] + ["to_x0"] * (i - 1),
                density,
                key=("424", i, id(f)),
            )
            partials = [nest.value(x, 0) for x in _nest_points(art, nest)]
            res = classify_sequence(partials, tol=1e-6)
            verdicts["(4.24) integral"] = _v(
                {"converged": "holds", "diverged_plus": "fails",
                 "diverged_minus": "fails", "oscillatory": "fails",
                 "inconclusive": "inconclusive"}[res["kind"]],
                kind=res["kind"],
            )
        except DivergentTail as exc:
            decisive = getattr(exc, "decisive", True)
            verdicts["(4.24) integral"] = _v(
                "fails" if decisive else "inconclusive", reason=str(exc)
            )

    # (6.18) O-estimates in the convex case
    convex = lf_zero or _nonneg(lf, art)
    if convex and not lf_zero:
        notes.append("L[f] >= 0 on the schedule: (6.18) O-estimates checked")
        ok18 = True
        for k in range(i, n):
            nest = art.nest(
                [art.q_vals[j] for j in range(k + 1, n + 1)],
                ["from_T"] * (n - k),
                lf,
                key=("618", k, id(f)),
            )
            ratios = []
            for x in art.probes:
                ref = max(1.0, abs(nest.value(x, 0)))
                ratios.append(art.M(k, f, x) / ref)
            bounded, _ = is_bounded_tail(ratios)
            if bounded is False:
                ok18 = False
        verdicts["(6.18) O-estimates"] = _v("holds" if ok18 else "fails")

    groups = [
        ["(5.20)-(5.21) set", "(5.22) limits", "(5.23) last limit", "(5.24) integral"],
        ["(4.22) set", "(4.23) set", "(4.24) integral"],
    ]
    if convex:
        groups = [groups[0] + groups[1]]
    consistent = all(_group_consistent(verdicts, g) for g in groups)
    if "(6.18) O-estimates" in verdicts and verdicts["(6.18) O-estimates"]["status"] == "fails":
        consistent = False
    return TheoremReport(
        theorem=f"incomplete expansion, i={i}",
        verdicts=verdicts,
        consistent=consistent,
        notes=notes,
    )


def _nonneg(lf, art):
    vals = [lf(x) for x in art.probes]
    mag = max(abs(v) for v in vals) + 1e-300
    return all(v >= -1e-9 * mag for v in vals)


# -- check_O ---------------------------------------------------------------------------


def check_O(f, i, artifacts, source=None, coefficients=None):
    """Boundedness equivalences: M_{i-1}[f] = O(1) iff the order-i partial
    iterated integral stays bounded (2 <= i <= n; i = 1 compares f to phi_1)."""
    art = artifacts
    n = art.n
    if not 1 <= i <= n:
        raise EvaluationError(f"i must lie in [1, {n}]")
    eps = art.constants.epsilon
    verdicts = {}
    notes = []
    lf_zero = source is None and art.lf_is_zero(f)
    lf = (lambda x: 0.0) if lf_zero else art.lf_evaluator(f, source)

    if i == 1:
        rows = [f(x, 0).value / art.scale.phi_value(1, x) for x in art.probes]
        bounded, diag = is_bounded_tail(rows)
        verdicts["(5.36) O-form"] = _v(
            "holds" if bounded else ("inconclusive" if bounded is None else "fails"),
            **diag,
        )
    else:
        # (5.31): limits below the boundary order, then boundedness at i-1
        limit_vals = []
        for k in range(i - 1):
            status, value, conf = art.limit(f, k)
            limit_vals.append((status, value, conf))
            verdicts[f"(5.31) limit k={k}"] = _v(
                _limit_to_status(status), value=value, confidence=conf
            )
        coeffs = list(coefficients) if coefficients is not None else None
        if coeffs is None and all(s in ("stable", "loose") for s, _, _ in limit_vals):
            coeffs = [limit_vals[k][1] / eps[k] for k in range(i - 1)]
        verdicts["(5.29) coefficients"] = _v(
            "holds" if coeffs is not None else "inconclusive",
            values=list(coeffs) if coeffs is not None else None,
        )

    pairs = [
        apply_chain(art.chain_q, f, x, level=i - 1, with_noise=True)
        for x in art.class_points
    ]
    vals = [v for v, _ in pairs]
    typical = _median([abs(v) for v in vals[: max(4, len(vals) // 2)]])
    usable = len(vals)
    for j, (v, nz) in enumerate(pairs):
        if j >= 6 and nz > 1e-3 * max(abs(v), typical, 1e-300):
            usable = j
            break
    vals = vals[: min(usable, _sane_prefix(vals))]
    res = classify_sequence(vals, tol=_LIMIT_TOL)
    bounded, diag = is_bounded_tail(vals)
    if res["kind"].startswith("diverged"):
        st32 = "fails"
    elif res["kind"] == "converged" or res["kind"] == "oscillatory" or bounded:
        st32 = "holds" if bounded is not False else "fails"
    elif bounded is False:
        st32 = "fails"
    else:
        st32 = "inconclusive"
    verdicts["(5.32) bounded"] = _v(st32, kind=res["kind"], **diag)

    if lf_zero:
        verdicts["(5.33) partial bounded"] = _v("holds", zero=True)
    else:
        nest = art.nest(
            [art.q_vals[j] for j in range(i, n + 1)],
            ["from_T"] * (n - i + 1),
            lf,
            key=("533", i, id(f)),
        )
        partials = [nest.value(x, 0) for x in _nest_points(art, nest)]
        res2 = classify_sequence(partials, tol=_LIMIT_TOL)
        bounded2, diag2 = is_bounded_tail(partials)
        if res2["kind"].startswith("diverged"):
            st33 = "fails"
        elif res2["kind"] == "converged" or res2["kind"] == "oscillatory" or bounded2:
            st33 = "holds" if bounded2 is not False else "fails"
        elif bounded2 is False:
            st33 = "fails"
        else:
            st33 = "inconclusive"
        verdicts["(5.33) partial bounded"] = _v(st33, kind=res2["kind"], **diag2)

    label32 = "(5.36) O-form" if i == 1 else "(5.32) bounded"
    consistent = _group_consistent(verdicts, [label32, "(5.33) partial bounded"])
    return TheoremReport(
        theorem=f"O-estimates, i={i}",
        verdicts=verdicts,
        consistent=consistent,
        notes=notes,
    )


# -- check_absolute ---------------------------------------------------------------------


def check_absolute(f, artifacts, source=None):
    """Equivalence of the three absolute-convergence integral conditions."""
    art = artifacts
    n = art.n
    verdicts = {}
    notes = []
    lf_zero = source is None and art.lf_is_zero(f)
    lf = (lambda x: 0.0) if lf_zero else art.lf_evaluator(f, source)
    abs_lf = lambda x: abs(lf(x))

    if lf_zero:
        for label in ("(6.11) type-I nest", "(6.12) P-weighted", "(6.13) direct"):
            verdicts[label] = _v("holds", zero=True)
        return TheoremReport("absolute convergence", verdicts, True, notes)

    pn = art.p_vals[n]
    try:
        nest = art.nest(
            [art.p_vals[j] for j in range(1, n)] + [None],
            ["from_T"] + ["to_x0"] * (n - 1),
            lambda x: abs_lf(x) / pn(x),
            key=("611", id(f)),
        )
        partials = [nest.value(x, 0) for x in _nest_points(art, nest)]
        res = classify_sequence(partials, tol=1e-6)
        verdicts["(6.11) type-I nest"] = _v(
            {"converged": "holds", "diverged_plus": "fails",
             "diverged_minus": "fails", "oscillatory": "fails",
             "inconclusive": "inconclusive"}[res["kind"]],
            kind=res["kind"],
        )
    except DivergentTail as exc:
        decisive = getattr(exc, "decisive", True)
        verdicts["(6.11) type-I nest"] = _v(
            "fails" if decisive else "inconclusive", reason=str(exc)
        )

    # (6.12): P(t) built by nested from-T integration of the type-I chain
    pnest = art.nest(
        [art.p_vals[j] for j in range(n - 1, 0, -1)],
        ["from_T"] * (n - 1),
        lambda x: 1.0,
        key=("P-weight",),
    )

    def p_weighted_density(t):
        v = abs_lf(t)
        if v == 0.0:
            return 0.0
        return pnest.value(t, 0) / pn(t) * v

    kind, _ = _classify_single_level(art, p_weighted_density, key=("612", id(f)))
    verdicts["(6.12) P-weighted"] = _v(_classify_to_status(kind), kind=kind)

    qn = art.q_vals[n]
    kind, _ = _classify_single_level(art, _guarded_ratio(abs_lf, qn), key=("613", id(f)))
    verdicts["(6.13) direct"] = _v(_classify_to_status(kind), kind=kind)

    consistent = _group_consistent(
        verdicts, ["(6.11) type-I nest", "(6.12) P-weighted", "(6.13) direct"]
    )
    return TheoremReport("absolute convergence", verdicts, consistent, notes)
