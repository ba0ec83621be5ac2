"""Cycle integration against closed forms."""

import dataclasses
import math

import numpy as np
import pytest

from gkzperiods import (
    ArcSegment,
    CycleSpec,
    CycleTerm,
    EvalSettings,
    FactorSupport,
    LineSegment,
    Path1D,
    RaySegment,
    ScenarioSpec,
    UnconvergedQuadratureError,
    eval_period,
    integrate_cycle,
    integrate_term,
    validate_scenario,
)
from gkzperiods.quadrature import _term_level_value, _path_rules
from gkzperiods.analytic_paths import resolve_path, tracked_requirements

from oracles import GAUSS_SEGMENT_VALUE, airy_ai0

from test_scenario import builtin

TWO_PI = 2.0 * math.pi


def unit_circle(radius=1.0, center=0.0):
    return Path1D(
        segments=(ArcSegment(center=center, radius=radius, angle_start=0.0,
                             angle_end=TWO_PI),),
        closed=True,
    )


def period_spec(name, factors, beta, cycle, m=1, **settings):
    spec = ScenarioSpec(
        name=name,
        m=m,
        factors=factors,
        twist_beta=tuple(beta),
        function_kind="period",
        cycle=cycle,
        settings=EvalSettings(**settings),
    )
    validate_scenario(spec)
    return spec


def test_residue_of_inverse_coordinate():
    # builtin: (2x)^(-1) around the unit circle, exactly pi i
    spec = builtin("residue_circle")
    val = eval_period(spec, spec.coefficient_vector())
    assert abs(val - 1j * math.pi) < 1e-12


def test_entire_integrand_integrates_to_zero_on_loops():
    # x^2 around the unit circle: holomorphic, so the loop integral vanishes
    fac = FactorSupport(index=1, kind="power", monomials=((0,), (1,)),
                        coefficients=(0.0, 1.0), lam=2.0)
    spec = period_spec("loop_zero", (fac,), (1.0,),
                       CycleSpec((CycleTerm(1.0, (unit_circle(),)),)))
    val = eval_period(spec, spec.coefficient_vector())
    assert abs(val) < 1e-12


def test_beta_integral_closed_form():
    spec = builtin("beta")
    val = eval_period(spec, spec.coefficient_vector())
    assert abs(val - 1.0 / 6.0) < 1e-12


def test_gauss_segment_against_frozen_reference():
    spec = builtin("gauss")
    val = eval_period(spec, spec.coefficient_vector())
    assert abs(val - GAUSS_SEGMENT_VALUE) < 1e-9


def test_airy_contour_value():
    spec = builtin("airy")
    val = eval_period(spec, spec.coefficient_vector())
    assert abs(val - TWO_PI * 1j * airy_ai0()) < 1e-8


def test_pochhammer_cycle_value():
    # double contour: (1 - mu0)(1 - mu1) B(3/2, 3/2) with mu = exp(2 pi i /2)
    spec = builtin("pochhammer")
    val = eval_period(spec, spec.coefficient_vector())
    b_32_32 = math.gamma(1.5) ** 2 / math.gamma(3.0)
    assert abs(val - 4.0 * b_32_32) < 1e-10
    assert abs(val - 0.5 * math.pi) < 1e-10


def test_torus_residue_in_two_variables():
    # dx dy / (x y) over a product of unit circles: (2 pi i)^2
    fac = FactorSupport(index=1, kind="power", monomials=((1, 1),),
                        coefficients=(1.0,), lam=-1.0)
    cycle = CycleSpec((CycleTerm(1.0, (unit_circle(), unit_circle())),))
    spec = period_spec("torus", (fac,), (1.0, 1.0), cycle, m=2)
    val = eval_period(spec, spec.coefficient_vector())
    assert abs(val - (2j * math.pi) ** 2) < 1e-10 * abs(val)


def test_divergent_endpoint_exponents_stay_honest():
    # int_0^1 x^(-1/2) (1-x)^(-1/2) dx = pi.  Exponent -1/2 at both ends is
    # at the edge of what pointwise double precision can resolve (the last
    # usable nodes sit ~1e-16 from the endpoint), so tanh-sinh stalls around
    # 1e-7 absolute.  The contract: get close AND report the stall rather
    # than claim convergence at tol 1e-10.
    fac = FactorSupport(index=1, kind="power", monomials=((0,), (1,)),
                        coefficients=(1.0, -1.0), lam=-0.5)
    cycle = CycleSpec(
        (CycleTerm(1.0, (Path1D(segments=(LineSegment(0.0, 1.0),),
                                anchor_t=0.5),)),)
    )
    spec = period_spec("halfpole", (fac,), (0.5,), cycle)
    res = integrate_cycle(spec.cycle, spec, a=spec.coefficient_vector(),
                          settings=spec.settings)
    assert abs(res.value - math.pi) < 5e-7
    if not res.converged:
        with pytest.raises(UnconvergedQuadratureError):
            eval_period(spec, spec.coefficient_vector())
    # relaxing the tolerance to the honest floor converges cleanly
    loose = dataclasses.replace(spec.settings, tol=1e-6)
    val = eval_period(spec, spec.coefficient_vector(), settings=loose)
    assert abs(val - math.pi) < 1e-6


def test_clipped_tail_enters_the_error_estimate():
    # int_0^1 x^(-1/2) (1-x)^(+1/2) dx = B(1/2, 3/2) = pi/2.  The divergent
    # end leaves ~5e-8 beyond the last representable node; plain level
    # agreement would claim 1e-9 convergence while being off by that much,
    # so the estimate must carry the clipped mass
    fac = FactorSupport(index=1, kind="power", monomials=((0,), (1,)),
                        coefficients=(1.0, -1.0), lam=0.5)
    cycle = CycleSpec(
        (CycleTerm(1.0, (Path1D(segments=(LineSegment(0.0, 1.0),),
                                anchor_t=0.5),)),)
    )
    spec = period_spec("halfzero", (fac,), (0.5,), cycle, tol=1e-9)
    res = integrate_cycle(spec.cycle, spec, a=spec.coefficient_vector(),
                          settings=spec.settings)
    true_err = abs(res.value - 0.5 * math.pi)
    assert not res.converged
    assert res.error_estimate >= true_err
    # at a tolerance the clipping floor can meet, the run converges honestly
    loose = dataclasses.replace(spec.settings, tol=1e-6)
    res2 = integrate_cycle(spec.cycle, spec, a=spec.coefficient_vector(),
                           settings=loose)
    assert res2.converged
    assert abs(res2.value - 0.5 * math.pi) <= res2.error_estimate < 1.6e-6


def test_term_multiplicity_scales_value():
    spec = builtin("beta")
    term = spec.cycle.terms[0]
    doubled = CycleTerm(multiplicity=-2.0, paths=term.paths)
    r1 = integrate_term(term, spec)
    r2 = integrate_term(doubled, spec)
    assert abs(r2.value + 2.0 * r1.value) < 1e-12
    assert r1.converged and r2.converged


def test_error_estimate_covers_true_error():
    spec = builtin("gauss")
    res = integrate_cycle(spec.cycle, spec, a=spec.coefficient_vector(),
                          settings=spec.settings)
    assert res.converged
    true_err = abs(res.value - GAUSS_SEGMENT_VALUE)
    assert true_err < 10.0 * max(res.error_estimate, 1e-12)


def test_level_refinement_converges_geometrically():
    spec = builtin("gauss")
    a = spec.coefficient_vector()
    term = spec.cycle.terms[0]
    tracked_factors, tracked_coords = tracked_requirements(spec)
    rpaths = [resolve_path(p, spec, a) for p in term.paths]
    rules = [_path_rules(rp, spec, a, tracked_factors, tracked_coords)
             for rp in rpaths]
    vals = []
    for level in range(4, 10):
        v, _, _ = _term_level_value(spec, a, rpaths, rules, level,
                                    tracked_factors, tracked_coords)
        vals.append(v)
    errs = [abs(v - GAUSS_SEGMENT_VALUE) for v in vals]
    for e0, e1 in zip(errs, errs[1:]):
        if e0 < 1e-13:
            break
        assert e1 < 0.5 * e0


def test_split_segment_matches_single_segment():
    # same contour, different parameterization: split at an interior point
    spec = builtin("beta")
    single = eval_period(spec, spec.coefficient_vector())
    split_path = Path1D(
        segments=(LineSegment(0.0, 0.3), LineSegment(0.3, 1.0)),
        anchor_t=1.0,
    )
    split = dataclasses.replace(
        spec, cycle=CycleSpec((CycleTerm(1.0, (split_path,)),))
    )
    val = eval_period(split, split.coefficient_vector())
    assert abs(val - single) < 1e-10


def test_orientation_reversal_flips_sign():
    spec = builtin("beta")
    forward = eval_period(spec, spec.coefficient_vector())
    back_path = Path1D(segments=(LineSegment(1.0, 0.0),), anchor_t=0.5)
    back = dataclasses.replace(
        spec, cycle=CycleSpec((CycleTerm(1.0, (back_path,)),))
    )
    val = eval_period(back, back.coefficient_vector())
    assert abs(val + forward) < 1e-12


def test_ray_truncation_is_long_enough():
    # lengthening the airy rays by a third moves nothing at this tolerance
    spec = builtin("airy")
    short = eval_period(spec, spec.coefficient_vector())

    def stretch(path):
        segs = tuple(
            dataclasses.replace(s, length=12.0) if isinstance(s, RaySegment)
            else s
            for s in path.segments
        )
        return dataclasses.replace(path, segments=segs)

    terms = tuple(
        CycleTerm(t.multiplicity, tuple(stretch(p) for p in t.paths))
        for t in spec.cycle.terms
    )
    long = dataclasses.replace(spec, cycle=CycleSpec(terms))
    val = eval_period(long, long.coefficient_vector())
    assert abs(val - short) < 1e-10


def test_level_cap_failure_raises():
    spec = builtin("gauss")
    starved = dataclasses.replace(
        spec,
        settings=dataclasses.replace(spec.settings, level_start=2, level_cap=3),
    )
    with pytest.raises(UnconvergedQuadratureError, match="did not converge"):
        eval_period(starved, starved.coefficient_vector())


def test_moved_coefficients_move_the_value():
    # residue of c / (2x) picks up the perturbed numerator... the residue
    # pair (coefficient, value) must stay proportional
    spec = builtin("residue_circle")
    a = spec.coefficient_vector()
    val0 = eval_period(spec, a)
    val1 = eval_period(spec, 2.0 * a)
    assert abs(val1 - 0.5 * val0) < 1e-12
