"""Wronskian determinants from jets, float- and jet-valued.

Float determinants use partial-pivoted elimination and carry a conditioning
diagnostic (ratio of largest to smallest row scale).  Jet-valued determinants
(needed wherever a Wronskian must itself be differentiated) are computed by
division-free minor expansion with memoization over column subsets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import EvaluationError, IndexConditionViolated
from .jet import derivative, jet_derivative
from .scale import ratio_decreases_to_zero


@dataclass(frozen=True)
class WronskianEvaluation:
    index_set: tuple
    point: float
    value: float
    conditioning: float
    det_scale: float = 1.0  # column-norm product, magnitude scale for zero tests


def det_pivoted(matrix):
    """Determinant by Gaussian elimination with partial pivoting.

    Returns ``(value, conditioning, det_scale)``.  ``conditioning`` is the
    ratio of largest to smallest row scale (diagnostic); ``det_scale`` is the
    product of column infinity-norms, the natural magnitude yardstick for
    zero tests on matrices whose columns carry wildly different scales.
    """
    k = len(matrix)
    a = [list(row) for row in matrix]
    norms = [max(abs(v) for v in row) for row in a]
    finite = [s for s in norms if s > 0.0]
    conditioning = math.inf if len(finite) < k else max(finite) / min(finite)
    det_scale = 1.0
    for c in range(k):
        s = max(abs(a[r][c]) for r in range(k))
        det_scale *= s if s > 0.0 else 1.0
    det = 1.0
    for col in range(k):
        piv = max(range(col, k), key=lambda r: abs(a[r][col]))
        if abs(a[piv][col]) == 0.0:
            return 0.0, conditioning, det_scale
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            det = -det
        det *= a[col][col]
        inv = 1.0 / a[col][col]
        for r in range(col + 1, k):
            f = a[r][col] * inv
            if f != 0.0:
                for c in range(col, k):
                    a[r][c] -= f * a[col][c]
    return det, conditioning, det_scale


def det_jet(matrix):
    """Determinant of a square matrix of jets, by memoized minor expansion."""
    k = len(matrix)
    if k == 1:
        return matrix[0][0]
    memo = {}

    def minor(cols, row):
        if len(cols) == 1:
            return matrix[row][cols[0]]
        key = cols
        got = memo.get(key)
        if got is not None:
            return got
        acc = None
        sign = 1.0
        for pos, c in enumerate(cols):
            rest = cols[:pos] + cols[pos + 1 :]
            term = matrix[row][c] * minor(rest, row + 1)
            if sign < 0:
                term = -term
            acc = term if acc is None else acc + term
            sign = -sign
        memo[key] = acc
        return acc

    return minor(tuple(range(k)), 0)


def _derivative_matrix(scale, indices, x, rows):
    """Float matrix whose (r, c) entry is the r-th derivative of phi_indices[c]."""
    cols = []
    for i in indices:
        cols.append(scale.phi_derivatives(i, x, rows - 1))
    return [[cols[c][r] for c in range(len(indices))] for r in range(rows)]


def wronskian(scale, indices, x):
    """W(phi_{i1}, ..., phi_{ik}) at x as a :class:`WronskianEvaluation`."""
    indices = tuple(indices)
    if not indices:
        raise EvaluationError("empty index set")
    k = len(indices)
    matrix = _derivative_matrix(scale, indices, x, k)
    value, conditioning, det_scale = det_pivoted(matrix)
    if not math.isfinite(value):
        raise EvaluationError(f"Wronskian overflow at x={x} for {indices}")
    return WronskianEvaluation(indices, x, value, conditioning, det_scale)


def wronskian_suppressed(scale, indices, suppress, x):
    """Determinant with derivative rows 0..k-2 and the ``suppress`` column removed."""
    indices = tuple(indices)
    if suppress not in indices:
        raise EvaluationError(f"{suppress} is not part of {indices}")
    if len(indices) < 2:
        raise EvaluationError("need at least two indices to suppress one")
    kept = tuple(i for i in indices if i != suppress)
    matrix = _derivative_matrix(scale, kept, x, len(kept))
    value, _, _ = det_pivoted(matrix)
    return value


def wronskian_jet(scale, indices, x, order):
    """W(phi_{i1}, ..., phi_{ik}) at x as a jet of the requested order.

    The determinant is computed in jet arithmetic end to end, so derivatives
    of the Wronskian are exact to the truncation order.
    """
    indices = tuple(indices)
    k = len(indices)
    jets = [scale.phi_jet(i, x, order + k - 1) for i in indices]
    matrix = [[derivative(jets[c], r) for c in range(k)] for r in range(k)]
    # rows now have order (order + k - 1 - r); multiplication truncates to
    # the shortest operand, which is exactly ``order``.
    return det_jet(matrix)


def bordered_wronskian_jet(scale, indices, f, x, order):
    """W(phi_{i1}, ..., phi_{ik}, f) at x as a jet (f appended as last column)."""
    indices = tuple(indices)
    k = len(indices) + 1
    jets = [scale.phi_jet(i, x, order + k - 1) for i in indices]
    jets.append(f(x, order + k - 1))
    matrix = [[derivative(jets[c], r) for c in range(k)] for r in range(k)]
    return det_jet(matrix)


def bordered_wronskian(scale, indices, f, x):
    """Float value of W(phi_{i1}, ..., phi_{ik}, f) at x."""
    indices = tuple(indices)
    k = len(indices) + 1
    matrix_cols = [scale.phi_derivatives(i, x, k - 1) for i in indices]
    fj = f(x, k - 1)
    matrix_cols.append([jet_derivative(fj, r) for r in range(k)])
    matrix = [[matrix_cols[c][r] for c in range(k)] for r in range(k)]
    value, conditioning, det_scale = det_pivoted(matrix)
    return value, conditioning, det_scale


def check_levin_hierarchy(scale, pairs, schedule, tol=1e-4):
    """Verify W(i-set) >> W(j-set) along the schedule for each pair.

    Preconditions per pair: equal cardinality, strictly increasing index
    sets, distinct, and ``i_h <= j_h`` componentwise.
    """
    results = []
    pts = scale.toward_x0(schedule.points)
    for iset, jset in pairs:
        iset, jset = tuple(iset), tuple(jset)
        if len(iset) != len(jset):
            raise IndexConditionViolated("index sets must have equal cardinality")
        for s in (iset, jset):
            if list(s) != sorted(set(s)):
                raise IndexConditionViolated(f"{s} is not strictly increasing")
            if not all(1 <= i <= scale.n for i in s):
                raise IndexConditionViolated(f"{s} has out-of-range indices")
        if iset == jset:
            raise IndexConditionViolated("index sets must be distinct")
        if not all(a <= b for a, b in zip(iset, jset)):
            raise IndexConditionViolated(f"need i_h <= j_h, got {iset} vs {jset}")
        ratios = []
        for x in pts:
            wi = wronskian(scale, iset, x)
            wj = wronskian(scale, jset, x)
            ratios.append(abs(wj.value / wi.value) if wi.value != 0 else math.inf)
        ok, diag = ratio_decreases_to_zero(ratios, tol)
        diag.update(pair=(iset, jset), passed=ok)
        results.append(diag)
    return results
