import math
import random

import pytest
from scipy import integrate as scipy_integrate

from chebscale import (
    IntegralSpec,
    classify_improper,
    integrate,
    iterated_integral,
    make_schedule,
)
from chebscale.errors import DivergentTail, EvaluationError
from chebscale.quadrature import NestedIntegral, WorkGrid, classify_toward


def test_integrate_examples():
    v, e = integrate(lambda t: t * t, 0.0, 1.0, tol=1e-12)
    assert abs(v - 1 / 3) < 1e-12
    v, e = integrate(math.log, 0.0, 1.0, tol=1e-11)
    assert abs(v + 1.0) < 1e-9
    v, e = integrate(math.sin, 0.0, math.pi, tol=1e-12)
    assert abs(v - 2.0) < 1e-11


def test_integrate_matches_scipy_on_random_polynomials():
    rng = random.Random(5)
    for _ in range(20):
        coeffs = [rng.uniform(-2, 2) for _ in range(5)]
        f = lambda t, c=coeffs: sum(ci * t**i for i, ci in enumerate(c))
        a, b = sorted((rng.uniform(-3, 3), rng.uniform(-3, 3)))
        if b - a < 0.1:
            continue
        mine, _ = integrate(f, a, b, tol=1e-12)
        ref, _ = scipy_integrate.quad(f, a, b)
        assert abs(mine - ref) < 1e-10 * max(1.0, abs(ref))


def test_integrate_signed_orientation():
    v, _ = integrate(lambda t: 1.0, 2.0, 1.0)
    assert abs(v + 1.0) < 1e-14


def test_integrate_rejects_improper():
    with pytest.raises(EvaluationError):
        integrate(IntegralSpec(lambda t: 1 / t, 1.0, math.inf, "upper"))
    with pytest.raises(EvaluationError):
        integrate(lambda t: 1.0, 0.0, math.inf)


def test_classify_improper_examples():
    sched = make_schedule(1.0, math.inf, 12, 2.0)
    v = classify_improper(IntegralSpec(lambda t: t**-2, 1.0, math.inf, "upper"), sched)
    assert v.kind == "converges" and abs(v.value - 1.0) < 1e-9
    v = classify_improper(IntegralSpec(lambda t: 1.0 / t, 1.0, math.inf, "upper"), sched)
    assert v.kind == "diverges_plus"
    v = classify_improper(IntegralSpec(lambda t: t**-0.5, 1.0, math.inf, "upper"), sched)
    assert v.kind == "diverges_plus"


def test_classify_type1_condition_on_appendix_weight():
    # the reciprocal of a linear type-I weight diverges toward +inf
    sched = make_schedule(2.0, math.inf, 12, 2.0)
    v = classify_improper(IntegralSpec(lambda t: 1.0 / t, 2.0, math.inf, "upper"), sched)
    assert v.kind == "diverges_plus"


def test_classify_oscillatory():
    sched = make_schedule(1.0, math.inf, 12, 1.5)
    v = classify_improper(IntegralSpec(math.sin, 1.0, math.inf, "upper"), sched)
    assert v.kind in ("oscillatory", "inconclusive")


def test_classify_cauchy_property():
    sched = make_schedule(1.0, math.inf, 12, 2.0)
    v = classify_improper(IntegralSpec(lambda t: t**-2, 1.0, math.inf, "upper"), sched)
    deltas = [abs(b[1] - a[1]) for a, b in zip(v.partial_values, v.partial_values[1:])]
    assert deltas[-1] < deltas[0] * 1e-3


def test_classify_linearity():
    sched = make_schedule(1.0, math.inf, 14, 2.0)
    f = lambda t: t**-2
    g = lambda t: t**-1.5
    a, b = 2.0, 0.5
    vf = classify_improper(IntegralSpec(f, 1.0, math.inf, "upper"), sched)
    vg = classify_improper(IntegralSpec(g, 1.0, math.inf, "upper"), sched)
    combo = classify_improper(
        IntegralSpec(lambda t: a * f(t) + b * g(t), 1.0, math.inf, "upper"),
        sched, tol=1e-5,
    )
    assert combo.kind == "converges"
    # single-mode tails extrapolate to machine accuracy; the two-mode mix is
    # honest about its extrapolation floor
    assert abs(combo.value - (a * vf.value + b * vg.value)) < 1e-5 * abs(combo.value)
    assert abs(combo.value - (a * vf.value + b * vg.value)) < 10 * combo.error_estimate


def test_iterated_from_T_triangle():
    v = iterated_integral([None, None], lambda t: 1.0, 2.0, "from_T", T=0.0, x0=4.0)
    assert abs(v - 2.0) < 1e-9


def test_iterated_single_tail():
    v = iterated_integral([], lambda t: t**-2, 1.0, "to_x0", T=1.0, x0=math.inf)
    assert abs(v - 1.0) < 1e-9


def test_iterated_double_tail_closed_form():
    # double tail of e^-t from 1: inner tail is e^-t, outer integral e^-1
    v = iterated_integral(
        [None, None], lambda t: math.exp(-t), 1.0, ["to_x0", "to_x0"],
        T=1.0, x0=math.inf,
    )
    assert abs(v - math.exp(-1)) < 1e-8


def test_iterated_divergent_tail_raises():
    with pytest.raises(DivergentTail):
        iterated_integral([], lambda t: 1.0 / t, 2.0, "to_x0", T=1.0, x0=math.inf)


def test_fubini_on_separable_density():
    # swapping the two from_T levels of a separable nonnegative density
    # with swapped weights reproduces the value
    w1 = lambda t: 1.0 + t
    w2 = lambda t: 2.0 + t * t
    dens = lambda t: math.exp(-t)
    a = iterated_integral([w1, w2], dens, 3.0, "from_T", T=0.5, x0=8.0)

    # oracle via scipy double quadrature of the same iterated integral
    inner = lambda t: scipy_integrate.quad(
        lambda s: dens(s) / w2(s), 0.5, t
    )[0]
    ref, _ = scipy_integrate.quad(lambda t: inner(t) / w1(t), 0.5, 3.0)
    assert abs(a - ref) < 1e-8 * max(1.0, abs(ref))

    swapped = iterated_integral([w2, w1], dens, 3.0, "from_T", T=0.5, x0=8.0)
    inner2 = lambda t: scipy_integrate.quad(lambda s: dens(s) / w1(s), 0.5, t)[0]
    ref2, _ = scipy_integrate.quad(lambda t: inner2(t) / w2(t), 0.5, 3.0)
    assert abs(swapped - ref2) < 1e-8 * max(1.0, abs(ref2))


def test_mirrored_signed_tail():
    v = iterated_integral([], lambda t: 1.0, 0.2, "to_x0", T=0.4, x0=0.0)
    assert abs(v + 0.2) < 1e-10


def test_nested_level_values_match_direct_quadrature():
    grid = WorkGrid(1.0, math.inf, include=[2.0, 4.0, 8.0, 16.0])
    nest = NestedIntegral(grid, [lambda t: t, None], ["to_x0", "to_x0"],
                          lambda t: math.exp(-t))
    # level 1 at x: tail of e^-t = e^-x
    for x in (2.0, 4.0, 8.0):
        assert abs(nest.value(x, 1) - math.exp(-x)) < 1e-9
        ref, _ = scipy_integrate.quad(lambda t: math.exp(-t) / t, x, 60.0)
        assert abs(nest.value(x, 0) - ref) < 1e-8 * max(ref, 1e-12)
