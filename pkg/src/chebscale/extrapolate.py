"""Limit extrapolation and finite-sample classification of sequences.

All asymptotic statements in the library (limits toward the scale's limit
point, convergence of improper integrals, hierarchy checks) are reduced to
finite probe sequences.  This module holds the shared decision rules:

* iterated Aitken delta-squared extrapolation with a confidence estimate,
* a sequence classifier (converged / diverged / oscillatory / inconclusive),
* the bounded-tail ("O(1)") detector.

The rules are deliberately conservative: a marginal sequence is reported as
inconclusive rather than forced into a verdict.
"""

from __future__ import annotations

import math


def aitken_step(seq):
    """One Aitken delta-squared pass; length shrinks by two."""
    out = []
    for j in range(len(seq) - 2):
        d1 = seq[j + 1] - seq[j]
        d2 = seq[j + 2] - seq[j + 1]
        den = d2 - d1
        scale = abs(seq[j + 2]) + abs(d1) + abs(d2)
        if not math.isfinite(den) or abs(den) <= 1e-305 + 1e-16 * scale:
            out.append(seq[j + 2])
            continue
        acc = seq[j + 2] - d2 * d2 / den
        out.append(acc if math.isfinite(acc) else seq[j + 2])
    return out


def _scan_diagonal(estimates):
    """Pick the most self-consistent estimate from a refinement diagonal.

    Walks the successive estimates, tracking the gap between neighbors, and
    stops once the gaps start blowing up (the noise floor of the tableau);
    this prevents trusting accidental coincidences deep in the table.
    Returns ``(value, confidence)``.
    """
    finite = [e for e in estimates if math.isfinite(e)]
    if not finite:
        return math.nan, math.inf
    if len(finite) == 1:
        return finite[0], math.inf
    best_v = finite[1]
    best_g = abs(finite[1] - finite[0])
    for k in range(2, len(finite)):
        g = abs(finite[k] - finite[k - 1])
        if g <= best_g:
            best_g = g
            best_v = finite[k]
        elif best_g > 0 and g > 64.0 * best_g:
            break  # tableau noise has taken over
    return best_v, best_g


def aitken_limit(values):
    """Iterated Aitken extrapolation with noise-aware stopping.

    Exact for geometric transients ``C + A*r**j``.  Returns
    ``(value, confidence)``; ``(nan, inf)`` with fewer than two finite
    entries.
    """
    seq = [v for v in values if isinstance(v, (int, float)) and math.isfinite(v)]
    if len(seq) < 2:
        return (seq[-1] if seq else math.nan, math.inf)
    diagonal = [seq[-2], seq[-1]]
    cur = seq
    while len(cur) >= 3:
        cur = aitken_step(cur)
        diagonal.append(cur[-1])
    return _scan_diagonal(diagonal)


def richardson_limit(values):
    """Neville polynomial extrapolation in 1/j to j = infinity.

    Exact (up to truncation) for sequences analytic in 1/j, e.g. partial
    integrals behaving like C - 1/(a + b*j); these defeat Aitken, which is
    tuned to geometric transients.
    """
    seq = [v for v in values if isinstance(v, (int, float)) and math.isfinite(v)]
    m = len(seq)
    if m < 2:
        return (seq[-1] if seq else math.nan, math.inf)
    t = [1.0 / (j + 1.0) for j in range(m)]
    tab = list(seq)
    diagonal = [seq[-2], seq[-1]]
    for k in range(1, m):
        nxt = []
        for j in range(m - k):
            den = t[j] - t[j + k]
            nxt.append((t[j] * tab[j + 1] - t[j + k] * tab[j]) / den)
        tab = nxt
        diagonal.append(tab[-1])
    return _scan_diagonal(diagonal)


def extrapolate_limit(values):
    """Consensus extrapolated limit over methods and tail windows.

    Runs Aitken (geometric transients) and Richardson (1/j transients) on
    the full sequence and on a tail window.  The best-confidence candidate
    must be seconded by another candidate within the pair's confidences;
    an unseconded claim has its confidence inflated to its distance from
    the nearest rival.  This guards against accidental deep-tableau
    coincidences masquerading as convergence.
    """
    seq = [v for v in values if isinstance(v, (int, float)) and math.isfinite(v)]
    if len(seq) < 2:
        return (seq[-1] if seq else math.nan, math.inf)
    windows = [seq]
    if len(seq) >= 8:
        windows.append(seq[2:])
    if len(seq) >= 11:
        windows.append(seq[-8:])
    cands = []
    for w in windows:
        for method in (aitken_limit, richardson_limit):
            v, c = method(w)
            if math.isfinite(v):
                cands.append((v, c))
    if not cands:
        return (seq[-1], math.inf)
    if len(cands) == 1:
        return cands[0]
    cands.sort(key=lambda vc: vc[1])
    v0, c0 = cands[0]
    scale = 1.0 + abs(v0)
    others = cands[1:]
    seconded = any(
        abs(v0 - v) <= 10.0 * max(c0, c, 1e-16 * scale) for v, c in others
    )
    if seconded:
        return (v0, c0)
    nearest = min(abs(v0 - v) for v, _ in others)
    return (v0, max(c0, nearest))


def _tail(seq, k):
    return seq[-k:] if len(seq) >= k else seq


def classify_sequence(values, tol=1e-8):
    """Classify the limiting behavior of a probe sequence.

    Returns a dict with ``kind`` in {"converged", "diverged_plus",
    "diverged_minus", "oscillatory", "inconclusive"} plus ``value`` and
    ``confidence`` from extrapolation and increment diagnostics.

    Divergence is decided either by the magnitude threshold or by same-sign
    increments that do not shrink (ratio >= 0.98 across the last probes);
    finite schedules cannot reach any fixed magnitude threshold for slowly
    divergent integrals, so the increment test is load-bearing.
    """
    seq = [v for v in values if isinstance(v, (int, float)) and math.isfinite(v)]
    res = {
        "kind": "inconclusive",
        "value": math.nan,
        "confidence": math.inf,
        "n_used": len(seq),
    }
    if len(seq) < 4:
        return res
    scale0 = 1.0 + abs(seq[0])
    deltas = []
    dsigns = []  # per-increment sign with a local noise floor
    for j in range(len(seq) - 1):
        d = seq[j + 1] - seq[j]
        tiny = 1e-14 * (abs(seq[j]) + abs(seq[j + 1]))
        deltas.append(d)
        dsigns.append(0 if abs(d) <= tiny else (1 if d > 0 else -1))
    last_d = _tail(deltas, 5)
    last_s = _tail(dsigns, 5)
    res["last_increment"] = last_d[-1]

    # Oscillatory: alternating increments whose amplitude is not shrinking.
    alternations = sum(1 for a, b in zip(last_s, last_s[1:]) if a * b < 0)
    amp_late = _median([abs(d) for d in last_d])
    amp_early = _median([abs(d) for d in _tail(deltas[: -len(last_d)] or deltas, 5)])
    if (
        alternations >= len(last_s) - 2
        and amp_late > 1e-12 * scale0
        and amp_late >= 0.5 * amp_early
    ):
        res["kind"] = "oscillatory"
        return res

    value, conf = extrapolate_limit(seq)
    res["value"], res["confidence"] = value, conf

    ratios = []
    for (a, b), sa in zip(zip(last_d, last_d[1:]), last_s):
        if sa != 0:
            ratios.append(b / a)
    shrinking = bool(ratios) and _median([abs(r) for r in ratios]) <= 0.999
    negligible = last_s[-1] == 0 or abs(last_d[-1]) <= tol * (1.0 + abs(value))

    if conf <= tol * (1.0 + abs(value)) and (shrinking or negligible):
        res["kind"] = "converged"
        return res

    same_sign = all(s == 1 for s in last_s[-4:]) or all(s == -1 for s in last_s[-4:])
    if same_sign:
        big = abs(seq[-1]) > 1e6 * scale0
        steady = ratios and min(ratios) >= 0.98
        if big or steady:
            res["kind"] = "diverged_plus" if last_d[-1] > 0 else "diverged_minus"
            return res
    return res


def is_bounded_tail(values, window=5, factor=10.0):
    """O(1) detector: the last ``window`` magnitudes stay within ``factor``
    times their median.  Returns (verdict bool or None, diagnostics)."""
    seq = [abs(v) for v in values if isinstance(v, (int, float)) and math.isfinite(v)]
    if len(seq) < window:
        return None, {}
    tail = seq[-window:]
    med = _median(tail)
    bound = factor * (med + 1e-300)
    ok = max(tail) <= bound
    return ok, {"median": med, "max": max(tail), "bound": bound}


def _median(xs):
    if not xs:
        return 0.0
    s = sorted(xs)
    n = len(s)
    mid = n // 2
    return s[mid] if n % 2 else 0.5 * (s[mid - 1] + s[mid])
