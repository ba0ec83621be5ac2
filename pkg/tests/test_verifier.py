"""Numerical differentiation and operator residual checks."""

import cmath
import math

import numpy as np
import pytest

from gkzperiods import (
    BoxOperator,
    DerivativeCache,
    DiffSettings,
    EulerOperator,
    PeriodFunction,
    apply_operator,
    build_system,
    corrupt_eigenvalue,
    differentiate,
    verification_points,
    verify,
)
from gkzperiods.analytic_paths import EvaluationError, PathSingularityError

from oracles import (
    quadratic_formula_root,
    quadratic_root_derivative,
    quadratic_root_second_mixed,
)

from test_scenario import builtin


def test_second_derivative_of_square():
    d = differentiate(lambda a: a[0] ** 2, np.array([0.7 + 0.2j]), (2,))
    assert abs(d.value - 2.0) < 1e-12
    assert d.warnings == ()


def test_third_derivative_of_exp():
    d = differentiate(lambda a: np.exp(a[0]), np.array([0.0j]), (3,))
    assert abs(d.value - 1.0) < 1e-12


def test_mixed_partial_of_monomial():
    # d_a1 d_a2^2 of a1 a2^2 = 2, constant in a
    phi = lambda a: a[1] * a[2] ** 2
    d = differentiate(phi, np.array([0.3, -0.8 + 0.1j, 1.4j]), (0, 1, 2))
    assert abs(d.value - 2.0) < 1e-12


def test_polynomial_exactness_below_node_count():
    # Cauchy circles with 16 nodes integrate coordinate degree < 16 exactly
    rng = np.random.default_rng(8)
    coeffs = rng.standard_normal(13) + 1j * rng.standard_normal(13)

    def phi(a):
        return sum(c * a[0] ** k for k, c in enumerate(coeffs))

    a = np.array([0.4 - 0.3j])
    for q in (1, 3, 5):
        expect = sum(
            c * math.perm(k, q) * a[0] ** (k - q)
            for k, c in enumerate(coeffs)
            if k >= q
        )
        d = differentiate(phi, a, (q,))
        assert abs(d.value - expect) < 1e-12 * max(1.0, abs(expect))


def test_differentiation_is_linear():
    f = lambda a: np.exp(a[0]) * a[1]
    g = lambda a: a[0] ** 3 + a[1] ** 2
    alpha, beta = 1.7 - 0.3j, -0.6 + 1.1j
    h = lambda a: alpha * f(a) + beta * g(a)
    a = np.array([0.2 + 0.1j, -0.5])
    multi = (2, 1)
    dh = differentiate(h, a, multi).value
    df = differentiate(f, a, multi).value
    dg = differentiate(g, a, multi).value
    assert abs(dh - alpha * df - beta * dg) < 1e-10 * max(1.0, abs(dh))


def test_central_difference_fallback():
    settings = DiffSettings(method="central-difference")
    d = differentiate(lambda a: np.exp(a[0]), np.array([0.0j]), (1,), settings)
    assert abs(d.value - 1.0) < 1e-9
    d2 = differentiate(lambda a: a[0] ** 4, np.array([0.5 + 0.5j]), (2,), settings)
    assert abs(d2.value - 12.0 * (0.5 + 0.5j) ** 2) < 1e-7


def test_order_zero_returns_value():
    cache = DerivativeCache()
    a = np.array([1.0 + 2.0j])
    d = differentiate(lambda x: 3.0 * x[0], a, (0,), cache=cache)
    assert d.value == 3.0 * (1.0 + 2.0j)
    assert d.diagnostic == 0.0


def test_order_cap_and_negative_index_rejected():
    a = np.array([0.0j, 0.0j])
    with pytest.raises(ValueError, match="exceeds cap"):
        differentiate(lambda x: x[0], a, (4, 3))
    with pytest.raises(ValueError, match="nonnegative"):
        differentiate(lambda x: x[0], a, (-1, 0))
    with pytest.raises(ValueError, match="length"):
        differentiate(lambda x: x[0], a, (1,))


def test_circle_evaluations_are_shared_between_orders():
    calls = {"n": 0}

    def phi(a):
        calls["n"] += 1
        return cmath.exp(a[0] + 0.5 * a[1])

    cache = DerivativeCache()
    a = np.array([0.1, 0.2], dtype=complex)
    differentiate(phi, a, (1, 1), cache=cache)
    first = calls["n"]
    assert first > 0
    # same circles, higher order: every needed sample is already cached
    differentiate(phi, a, (2, 2), cache=cache)
    assert calls["n"] == first
    # and a repeated request is memoized outright
    differentiate(phi, a, (1, 1), cache=cache)
    assert calls["n"] == first


def test_diagnostic_flags_pole_inside_circle():
    # pole at 1.0 sits inside both sampling circles around 0.9
    phi = lambda a: 1.0 / (a[0] - 1.0)
    d = differentiate(phi, np.array([0.9 + 0.0j]), (1,))
    assert d.diagnostic > 1e-4
    assert any("agreement" in w for w in d.warnings)


def test_exact_zero_derivative_stays_quiet():
    # d^2/da1^2 of a function not depending on a1: zero, and no warning
    phi = lambda a: a[0] ** 3
    d = differentiate(phi, np.array([0.8, 0.6 + 0.2j]), (0, 2))
    assert abs(d.value) < 1e-13
    assert d.warnings == ()


def test_quadratic_root_derivatives_match_implicit_formula():
    spec = builtin("quadratic_root")
    pf = PeriodFunction(scenario=spec)
    settings = DiffSettings.from_eval_settings(spec.settings)
    cache = DerivativeCache()
    for a in verification_points(spec.coefficient_vector(), 3, seed=17):
        x = quadratic_formula_root(a, near=pf(a))
        for j in range(3):
            multi = tuple(1 if v == j else 0 for v in range(3))
            d = differentiate(pf, a, multi, settings, cache)
            expect = quadratic_root_derivative(a, x, j)
            assert abs(d.value - expect) < 1e-8 * max(1.0, abs(expect))
        # both second mixed partials against the closed form
        for multi in ((1, 0, 1), (0, 2, 0)):
            d = differentiate(pf, a, multi, settings, cache)
            expect = quadratic_root_second_mixed(a, x)
            assert abs(d.value - expect) < 1e-7 * max(1.0, abs(expect))


def test_euler_operator_application():
    # phi = a0 a1 satisfies (a0 d0 + a1 d1 - 2) phi = 0
    phi = lambda a: a[0] * a[1]
    a = np.array([0.8 - 0.1j, 1.3 + 0.4j])
    good = EulerOperator(weights=(1, 1), eigenvalue=2.0, label=("exponent", 1))
    app = apply_operator(good, phi, a)
    assert app.relative < 1e-12
    assert not app.degenerate
    bad = EulerOperator(weights=(1, 1), eigenvalue=1.0, label=("exponent", 1))
    app2 = apply_operator(bad, phi, a)
    assert app2.relative > 0.2


def test_box_operator_application():
    # phi = exp(a0 a2 + a1^2 / 2): d0 d2 phi - d1^2 phi = (a0 a2 - a1^2) phi,
    # so the residual vanishes exactly on the a0 a2 = a1^2 locus
    phi = lambda a: np.exp(a[0] * a[2] + 0.5 * a[1] ** 2)
    box = BoxOperator(u_plus=(1, 0, 1), u_minus=(0, 2, 0), label="box")
    off = apply_operator(box, phi, np.array([0.3, 0.4, 0.2], dtype=complex))
    assert off.relative > 1e-3
    on = apply_operator(
        box, phi, np.array([0.3, math.sqrt(0.06), 0.2], dtype=complex)
    )
    assert on.relative < 1e-10


def test_degenerate_operator_flagged():
    # box of order 2 on a linear function: both sides vanish identically
    phi = lambda a: 2.0 * a[0] + a[1]
    box = BoxOperator(u_plus=(2, 0), u_minus=(0, 2), label="box")
    app = apply_operator(box, phi, np.array([0.4, 0.7], dtype=complex))
    assert app.degenerate
    assert app.relative == 0.0


def test_verification_points_reproducible_and_bounded():
    base = np.array([-1.0, 0.1, 1.0], dtype=complex)
    p1 = verification_points(base, 5, seed=42)
    p2 = verification_points(base, 5, seed=42)
    for u, v in zip(p1, p2):
        assert np.array_equal(u, v)
    p3 = verification_points(base, 5, seed=43)
    assert not np.array_equal(p1[0], p3[0])
    scale = np.where(np.abs(base) > 1e-12, np.abs(base), 1.0)
    for pt in p1:
        rel = np.abs(pt - base) / scale
        assert np.all(rel >= 0.1 - 1e-12) and np.all(rel <= 0.2 + 1e-12)


def test_verify_passes_on_root_scenario():
    spec = builtin("quadratic_root")
    system = build_system(spec)
    report = verify(system, PeriodFunction(scenario=spec))
    assert report.passed
    assert not report.has_errors
    assert report.max_relative < 1e-6
    assert len(report.points) == spec.settings.points
    n_ops = len(system.eulers) + len(system.boxes)
    assert len(report.cells) == n_ops * len(report.points)


def test_verify_fails_after_corruption():
    spec = builtin("quadratic_root")
    system = corrupt_eigenvalue(build_system(spec), row=1)
    report = verify(system, PeriodFunction(scenario=spec))
    assert not report.passed
    assert report.max_relative > 1e-2


def test_verify_parallel_matches_serial():
    spec = builtin("quadratic_root")
    system = build_system(spec)
    pf = PeriodFunction(scenario=spec)
    serial = verify(system, pf, jobs=1)
    parallel = verify(system, pf, jobs=3)
    assert serial.cells == parallel.cells
    assert serial.max_relative == parallel.max_relative


def test_verify_collects_evaluation_errors():
    spec = builtin("quadratic_root")
    system = build_system(spec)

    def broken(a):
        raise PathSingularityError("synthetic failure")

    report = verify(system, broken)
    assert report.has_errors
    assert not report.passed
    assert all(c.error is not None for c in report.cells)
    assert "synthetic failure" in report.cells[0].error


def test_verify_shared_cache_reuses_values():
    spec = builtin("quadratic_root")
    system = build_system(spec)
    calls = {"n": 0}
    inner = PeriodFunction(scenario=spec)

    def phi(a):
        calls["n"] += 1
        return inner(a)

    cache = DerivativeCache()
    verify(system, phi, cache=cache)
    first = calls["n"]
    # corrupted re-verify at the same points: derivatives all cached
    verify(corrupt_eigenvalue(system, row=0), phi, cache=cache)
    assert calls["n"] == first


def test_diff_settings_validation():
    with pytest.raises(ValueError, match="method"):
        DiffSettings(method="simpson")
    with pytest.raises(ValueError, match="nodes"):
        DiffSettings(nodes=7)
    with pytest.raises(ValueError, match="positive"):
        DiffSettings(radius_factor=0.0)


def test_diff_settings_from_eval_settings():
    spec = builtin("quadratic_root")
    s = DiffSettings.from_eval_settings(spec.settings)
    assert s.radius_factor == spec.settings.radius_factor
    assert s.nodes == spec.settings.diff_nodes
    assert s.method == spec.settings.diff_method
