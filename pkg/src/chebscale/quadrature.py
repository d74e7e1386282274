"""Adaptive quadrature, improper-integral classification, nested integrals.

The basic kernel is a Gauss(7)/Kronrod(15) embedded pair driving adaptive
bisection.  Improper integrals toward the limit point are classified from
partial integrals along a probe schedule (shared extrapolation rules).

Iterated integrals reuse one master grid per (T, x0) pair: each level's
cumulative is tabulated over the grid cells, with a per-cell interpolating
polynomial built on the Kronrod nodes so inner levels can be sampled at the
outer level's nodes without recursive quadrature.  Depth-n nests therefore
cost O(cells * 15) per level instead of exploding exponentially.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergentTail, EvaluationError, ToleranceNotMet
from .extrapolate import classify_sequence, extrapolate_limit

# 15-point Kronrod nodes/weights with the embedded 7-point Gauss rule
# (standard double-precision values, ascending order).
_XGK_HALF = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
]
_WGK_HALF = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
]
_WG_HALF = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
]

XGK = np.array([-x for x in _XGK_HALF[:-1]] + list(reversed(_XGK_HALF)))
WGK = np.array(_WGK_HALF[:-1] + list(reversed(_WGK_HALF)))
WG15 = np.zeros(15)
for _i in range(3):
    WG15[2 * _i + 1] = _WG_HALF[_i]
    WG15[13 - 2 * _i] = _WG_HALF[_i]
WG15[7] = _WG_HALF[3]

# Antiderivatives of the Lagrange cardinal polynomials on the Kronrod nodes:
# PART[i, j] = integral of l_i over [-1, XGK[j]], and the coefficient matrix
# CARD_COEF[i] holds the antiderivative polynomial for arbitrary points.


def _cardinal_antiderivatives():
    from numpy.polynomial import polynomial as P

    coef = []
    part = np.zeros((15, 15))
    for i in range(15):
        roots = np.delete(XGK, i)
        num = P.polyfromroots(roots)
        den = np.prod(XGK[i] - roots)
        li = num / den
        anti = P.polyint(li)
        anti[0] -= P.polyval(-1.0, anti)
        coef.append(anti)
        part[i, :] = P.polyval(XGK, anti)
    return np.array(coef), part


CARD_COEF, PART = _cardinal_antiderivatives()
# complement: integral of each cardinal from the node to the right edge
PARTC = WGK[:, None] - PART


def _gk15(f, a, b):
    """Kronrod value, error estimate and node values of f on [a, b]."""
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    vals = np.empty(15)
    for i in range(15):
        vals[i] = f(mid + half * XGK[i])
    k = half * float(WGK @ vals)
    g = half * float(WG15 @ vals)
    return k, abs(k - g), vals


@dataclass
class IntegralSpec:
    integrand: object
    lower: float
    upper: float
    improper_at: str = "none"  # "none" | "upper"


@dataclass
class ConvergenceVerdict:
    kind: str  # converges | diverges_plus | diverges_minus | oscillatory | inconclusive
    value: float
    error_estimate: float
    partial_values: list = field(default_factory=list)


def integrate(spec, lower=None, upper=None, tol=1e-10, max_intervals=4096):
    """Adaptive integration of a proper integral.

    ``spec`` may be an :class:`IntegralSpec` (with improper_at == "none") or
    a plain callable together with ``lower`` and ``upper``.  Subdivision
    continues until the summed error estimate drops below
    ``tol * (1 + |value|)``.  Returns ``(value, error_estimate)``.
    """
    if isinstance(spec, IntegralSpec):
        if spec.improper_at != "none":
            raise EvaluationError("improper integrals go through classify_improper")
        f, a, b = spec.integrand, spec.lower, spec.upper
    else:
        f, a, b = spec, lower, upper
    if a == b:
        return 0.0, 0.0
    sign = 1.0
    if b < a:
        a, b = b, a
        sign = -1.0
    if math.isinf(a) or math.isinf(b):
        raise EvaluationError("infinite endpoints go through classify_improper")
    val, err, _ = _gk15(f, a, b)
    heap = [(-err, a, b, val)]
    total_val, total_err = val, err
    splits = 0
    while total_err > tol * (1.0 + abs(total_val)) and heap:
        if splits >= max_intervals:
            raise ToleranceNotMet(
                f"budget of {max_intervals} subdivisions exhausted",
                value=sign * total_val,
                error=total_err,
            )
        neg_err, a0, b0, v0 = heapq.heappop(heap)
        mid = 0.5 * (a0 + b0)
        if mid <= a0 or mid >= b0:
            # interval at floating-point resolution; accept its estimate
            total_err += neg_err  # remove this error from the pool
            continue
        v1, e1, _ = _gk15(f, a0, mid)
        v2, e2, _ = _gk15(f, mid, b0)
        total_val += v1 + v2 - v0
        total_err += e1 + e2 + neg_err
        heapq.heappush(heap, (-e1, a0, mid, v1))
        heapq.heappush(heap, (-e2, mid, b0, v2))
        splits += 1
    return sign * total_val, max(total_err, 0.0)


def _signed_integral(f, a, b, tol):
    if a == b:
        return 0.0, 0.0
    return integrate(f, a, b, tol=tol)


def classify_toward(integrand, anchor, points, tol=1e-8, quad_tol=None):
    """Classify ``lim integral(anchor -> x_j)`` as x_j runs through ``points``.

    Signed partial integrals, so the same routine serves limits approached
    from either side.  Returns a :class:`ConvergenceVerdict`.
    """
    if quad_tol is None:
        quad_tol = min(1e-11, tol * 1e-3)
    partials = []
    errs = 0.0
    acc = 0.0
    prev = anchor
    for x in points:
        inc, err = _signed_integral(integrand, prev, x, quad_tol)
        acc += inc
        errs += err
        partials.append((x, acc))
        prev = x
    seq = [v for _, v in partials]
    res = classify_sequence(seq, tol)
    kind = {
        "converged": "converges",
        "diverged_plus": "diverges_plus",
        "diverged_minus": "diverges_minus",
        "oscillatory": "oscillatory",
        "inconclusive": "inconclusive",
    }[res["kind"]]
    value = res["value"] if kind == "converges" else math.nan
    err_est = res["confidence"] + errs if kind == "converges" else math.inf
    return ConvergenceVerdict(kind, value, err_est, partials)


def classify_improper(spec, schedule, tol=1e-8):
    """Classify an improper integral toward its upper limit along a schedule."""
    if spec.improper_at != "upper":
        raise EvaluationError("classify_improper expects improper_at == 'upper'")
    points = list(schedule.points)
    return classify_toward(spec.integrand, spec.lower, points, tol=tol)


# -- master grids and nested integrals -----------------------------------------


class WorkGrid:
    """Shared cell decomposition of [T, x0) with cached node evaluations.

    Work coordinates are oriented so that x0 lies to the right; the mirrored
    orientation (x0 < T) is folded in by ``sigma = -1``.  All schedule probes
    passed via ``include`` land exactly on cell boundaries, so cumulative
    values at probes need no interpolation.
    """

    def __init__(self, T, x0, include=(), finite_grade=1e-12, t_grade=None,
                 growth=1.35, far_factor=50.0, max_reach=None, hard_cap=None):
        self.T = float(T)
        self.x0 = float(x0)
        self.sigma = 1.0 if self.x0 > self.T else -1.0
        if self.sigma < 0 and math.isinf(self.x0):
            raise EvaluationError("mirrored orientation needs a finite x0")
        wT = self.sigma * self.T
        include_w = sorted({self.sigma * float(x) for x in include})
        if include_w and include_w[0] < wT:
            raise EvaluationError("grid points must lie on the x0 side of T")
        nodes = {wT}
        if math.isinf(self.x0):
            far = (include_w[-1] if include_w else wT + 1.0) * far_factor
            if far_factor >= 40.0:
                far = max(far, 1e4)
            if max_reach is not None:
                far = max(far, max_reach)
            if hard_cap is not None:
                far = min(far, max(hard_cap, include_w[-1] if include_w else wT + 1.0))
            h = max((include_w[0] - wT) / 4.0 if include_w else 0.25, 1e-3)
            w = wT
            while w < far:
                w = w + h
                nodes.add(w)
                h *= growth
        else:
            wx0 = self.sigma * self.x0
            span = wx0 - wT
            # uniform backbone so no cell spans a large fraction of the interval
            for k in range(1, 8):
                nodes.add(wT + span * k / 8.0)
            # geometric grading toward the limit point
            d = 0.5 * span
            while d > finite_grade * span:
                nodes.add(wx0 - d)
                d *= 0.55
            # mild grading toward T for integrands singular at an open T end
            if t_grade is not None:
                d = 0.5 * span
                while d > t_grade * span:
                    nodes.add(wT + d)
                    d *= 0.4
        nodes.update(include_w)
        arr = np.array(sorted(nodes))
        keep = np.concatenate(([True], np.diff(arr) > 1e-14 * np.maximum(1.0, np.abs(arr[1:]))))
        self.nodes = arr[keep]
        self.cells = len(self.nodes) - 1
        if self.cells < 4:
            raise EvaluationError("degenerate grid")
        lo = self.nodes[:-1][:, None]
        hi = self.nodes[1:][:, None]
        self.half = 0.5 * (hi - lo)
        self.mid = 0.5 * (hi + lo)
        self.cellnodes = self.mid + self.half * XGK[None, :]
        self._value_cache = {}

    def x_from_work(self, w):
        return self.sigma * w

    def work_from_x(self, x):
        return self.sigma * x

    def values(self, fn):
        """(cells, 15) array of fn evaluated at the cell nodes (x coords).

        Nodes where the evaluation overflows come back as +inf; downstream
        reciprocal/product rules treat an overflowed weight as 1/w = 0.
        """
        got = self._value_cache.get(fn)
        if got is None:
            flat = np.empty(self.cellnodes.size)
            for idx, w in enumerate(self.cellnodes.ravel()):
                try:
                    flat[idx] = fn(self.sigma * w)
                except (ArithmeticError, EvaluationError):
                    flat[idx] = math.inf
            got = np.nan_to_num(
                flat.reshape(self.cellnodes.shape),
                nan=0.0, posinf=math.inf, neginf=-math.inf,
            )
            self._value_cache[fn] = got
        return got

    def locate(self, w):
        i = int(np.searchsorted(self.nodes, w, side="right")) - 1
        slack = 1e-12 * max(1.0, abs(self.nodes[-1]))
        if i < 0 or w > self.nodes[-1] + slack:
            raise EvaluationError(f"point {self.sigma * w} outside the grid")
        return min(i, self.cells - 1)


def _median_abs(arr):
    finite = np.abs(arr[np.isfinite(arr)])
    return float(np.median(finite)) if finite.size else 0.0


def _combine(inv_w, nxt):
    """Elementwise (1/w) * next-level with underflow-aware zero handling."""
    with np.errstate(invalid="ignore", over="ignore"):
        out = inv_w * nxt
    # 0 * inf from underflowed tails is a true zero, not a NaN
    mask = (nxt == 0.0) | (inv_w == 0.0)
    out[mask] = 0.0
    return out


class _Level:
    __slots__ = (
        "orientation", "gvals", "cell_ints", "cum", "suffix", "total",
        "rem_err", "quad_err", "cell_errs", "reliable_cells",
    )


class NestedIntegral:
    """Iterated integral with per-level cumulative tables on a WorkGrid.

    ``weights`` is the ordered list of level weights (the integrand of level
    l is ``(1/weights[l]) * I_{l+1}``, the innermost integrand being
    ``(1/weights[-1]) * density``); an entry of ``None`` means a unit weight.
    ``orientations[l]`` is "from_T" or "to_x0".  Values are signed: a to_x0
    level returns ``lim_{y->x0} integral_x^y``, negative increments included
    in the mirrored orientation.
    """

    def __init__(self, grid, weights, orientations, density, tol=1e-9):
        if len(weights) != len(orientations) or not weights:
            raise EvaluationError("need one orientation per weight")
        self.grid = grid
        self.orientations = list(orientations)
        self.tol = tol
        self.depth = len(weights)
        sigma = grid.sigma

        dens = grid.values(density)
        nxt = dens
        self.levels = []
        reliable = grid.cells
        for l in range(self.depth - 1, -1, -1):
            w = weights[l]
            if w is None:
                inv = np.ones_like(nxt)
            else:
                inv = grid.values(w)
                with np.errstate(divide="ignore", over="ignore"):
                    inv = 1.0 / inv
            g = _combine(inv, nxt)
            lev = _Level()
            lev.orientation = orientations[l]
            lev.gvals = g
            # d(work) = sigma * dx, so cell integrals in x pick up sigma;
            # overflowed far cells stay inf/nan and only matter for tails
            with np.errstate(invalid="ignore", over="ignore"):
                lev.cell_ints = sigma * (grid.half[:, 0] * (g @ WGK))
                gauss = sigma * (grid.half[:, 0] * (g @ WG15))
                lev.cell_errs = np.abs(lev.cell_ints - gauss)
                finite = lev.cell_errs[np.isfinite(lev.cell_errs)]
                lev.quad_err = float(np.sum(finite))
                lev.cum = np.concatenate(([0.0], np.cumsum(lev.cell_ints)))
            # reliability: the first cell whose embedded error rivals its
            # value marks the onset of unresolved (e.g. oscillatory) cells
            scale_c = _median_abs(lev.cell_ints) + 1e-300
            lev.reliable_cells = grid.cells
            for m in range(grid.cells):
                e = lev.cell_errs[m]
                v = abs(lev.cell_ints[m])
                if not math.isfinite(e) or e > 0.05 * max(v, 1e-6 * scale_c):
                    lev.reliable_cells = m
                    break
            reliable = min(reliable, lev.reliable_cells)
            if lev.orientation == "to_x0":
                lev.total, lev.rem_err = self._tail_total(lev)
                # backward accumulation keeps exponentially small tails exact
                rem = lev.total - lev.cum[-1]
                # that subtraction carries the extrapolation noise of the
                # total; when the last cells are far smaller, the noise would
                # swamp the true beyond-grid tail, so clamp to the cell scale
                edge = 3.0 * (abs(lev.cell_ints[-1]) + abs(lev.cell_ints[-2]))
                if abs(rem) > edge:
                    sign = 1.0 if lev.cell_ints[-1] >= 0 else -1.0
                    rem = sign * min(abs(rem), edge)
                suffix = np.empty(grid.cells + 1)
                suffix[-1] = rem
                for m in range(grid.cells - 1, -1, -1):
                    suffix[m] = suffix[m + 1] + lev.cell_ints[m]
                lev.suffix = suffix
            else:
                lev.total, lev.rem_err = None, 0.0
                lev.suffix = None
            self.levels.insert(0, lev)
            nxt = self._node_values(lev)
        self.value_error = sum(l.quad_err + l.rem_err for l in self.levels)
        self.reliable_cells = reliable
        edge = grid.nodes[min(reliable, grid.cells)]
        self.reliable_x = grid.sigma * edge

    # -- internals -------------------------------------------------------

    def _tail_total(self, lev):
        """Full integral to x0 at this level: grid sum plus extrapolated tail."""
        cells = lev.cell_ints
        cum = lev.cum
        res = classify_sequence(list(cum[-12:]), tol=self.tol)
        if res["kind"].startswith("diverged") or res["kind"] == "oscillatory":
            exc = DivergentTail(f"a to_x0 level fails convergence ({res['kind']})")
            exc.decisive = True
            raise exc
        if res["kind"] == "converged":
            return float(res["value"]), float(res["confidence"])
        # inconclusive: accept the grid sum if the leftover is clearly tiny
        if abs(cells[-1]) <= 1e-12 * (1.0 + abs(cum[-1])):
            return float(cum[-1]), abs(cells[-1])
        exc = DivergentTail("a to_x0 level did not stabilize on the grid")
        exc.decisive = False
        raise exc

    def _node_values(self, lev):
        """This level's value at every cell node (used by the next level out).

        Partial-cell integrals are clamped by the cell's L1 quadrature: when
        an integrand collapses many orders of magnitude across one far cell,
        the interpolant's wiggle would otherwise dwarf the true tail.
        """
        with np.errstate(invalid="ignore", over="ignore"):
            bound = self.grid.half * (np.abs(lev.gvals) @ WGK)[:, None]
            if lev.orientation == "from_T":
                # gvals (M,15) dot PART(15,15) -> integral over [cell lo, node]
                partial = self.grid.sigma * (self.grid.half * lev.gvals.dot(PART))
                partial = np.clip(partial, -bound, bound)
                return lev.cum[:-1][:, None] + partial
            # tail: integral over [node, cell hi] plus the suffix beyond;
            # built from small pieces so tiny far tails survive in doubles
            rest = self.grid.sigma * (self.grid.half * lev.gvals.dot(PARTC))
            rest = np.clip(rest, -bound, bound)
            out = lev.suffix[1:][:, None] + rest
            # single-signed cells admit a monotone envelope: the true tail
            # at an interior node lies between the suffix endpoints, which
            # contains interpolation wiggle on boundary-layer cells
            single = (lev.gvals.min(axis=1) >= 0.0) | (lev.gvals.max(axis=1) <= 0.0)
            lo = np.minimum(lev.suffix[:-1], lev.suffix[1:])[:, None]
            hi = np.maximum(lev.suffix[:-1], lev.suffix[1:])[:, None]
            clipped = np.clip(out, lo, hi)
            out = np.where(single[:, None], clipped, out)
            return out

    # -- queries -----------------------------------------------------------

    def cumulative_at(self, level, x):
        """Signed integral from T to x of this level's integrand."""
        lev = self.levels[level]
        w = self.grid.work_from_x(x)
        i = self.grid.locate(w)
        lo = self.grid.nodes[i]
        if w == lo:
            return float(lev.cum[i])
        xi = (w - self.grid.mid[i, 0]) / self.grid.half[i, 0]
        xi = min(max(xi, -1.0), 1.0)
        powers = np.power(xi, np.arange(CARD_COEF.shape[1]))
        part = self.grid.sigma * self.grid.half[i, 0] * float(
            lev.gvals[i] @ (CARD_COEF @ powers)
        )
        return float(lev.cum[i] + part)

    def value(self, x, level=0):
        """The level's integral at x per its orientation."""
        lev = self.levels[level]
        if lev.orientation == "from_T":
            return self.cumulative_at(level, x)
        w = self.grid.work_from_x(x)
        i = self.grid.locate(w)
        if w == self.grid.nodes[i]:
            return float(lev.suffix[i])
        xi = (w - self.grid.mid[i, 0]) / self.grid.half[i, 0]
        xi = min(max(xi, -1.0), 1.0)
        powers = np.power(xi, np.arange(CARD_COEF.shape[1]))
        anti = float(lev.gvals[i] @ (CARD_COEF @ powers))
        full = float(lev.gvals[i] @ WGK)
        rest = self.grid.sigma * self.grid.half[i, 0] * (full - anti)
        bound = self.grid.half[i, 0] * float(np.abs(lev.gvals[i]) @ WGK)
        rest = min(max(rest, -bound), bound)
        out = float(lev.suffix[i + 1] + rest)
        g = lev.gvals[i]
        if g.min() >= 0.0 or g.max() <= 0.0:
            lo = min(lev.suffix[i], lev.suffix[i + 1])
            hi = max(lev.suffix[i], lev.suffix[i + 1])
            out = min(max(out, lo), hi)
        return out

    def level_values(self, x):
        return [self.value(x, l) for l in range(self.depth)]


def iterated_integral(weights, density, x, orientation, tol=1e-9, *, T, x0,
                      grid=None):
    """One-shot nested integral; see :class:`NestedIntegral` for semantics.

    ``weights`` may be empty, meaning a single level integrating the bare
    density.  ``orientation`` is one tag per level (a single tag is
    broadcast).
    """
    w = list(weights) if weights else [None]
    if isinstance(orientation, str):
        orientation = [orientation] * len(w)
    orientation = list(orientation)
    if len(orientation) == 1 and len(w) > 1:
        orientation = orientation * len(w)
    if grid is None:
        grid = WorkGrid(T, x0, include=[x])
    nest = NestedIntegral(grid, w, orientation, density, tol=tol)
    return nest.value(x)
