"""Coefficient functions: periods, continued roots, and residue sums.

Each scenario's function kind is packaged as a black-box map a -> complex,
holomorphic on a neighborhood of the base coefficients, ready for
numerical differentiation:

  period      integrate the branched integrand over the scenario cycle
  root        continue the base root along a straight coefficient segment
  gl_residue  sum r^(beta-1)/f'(r) over all roots of the univariate factor
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field

import numpy as np

from ._roots import univariate_roots
from .analytic_paths import EvaluationError
from .quadrature import integrate_cycle
from .scenario import EvalSettings, ScenarioSpec, is_real_integer

__all__ = [
    "PeriodEvaluationError",
    "UnconvergedQuadratureError",
    "NearDiscriminantError",
    "RootEscapeError",
    "MultipleRootError",
    "BranchAmbiguityError",
    "PeriodFunction",
    "RootTrack",
    "make_period_function",
    "eval_period",
    "eval_root",
    "track_root",
    "eval_gl_residue",
    "effective_univariate",
]


class PeriodEvaluationError(EvaluationError):
    """Evaluation of a coefficient function failed."""


class UnconvergedQuadratureError(PeriodEvaluationError):
    """The quadrature level cap was reached without tolerance agreement."""


class NearDiscriminantError(PeriodEvaluationError):
    """Root continuation stalled: the path runs too close to a root collision."""


class RootEscapeError(PeriodEvaluationError):
    """A root left the working range (leading coefficient degenerated)."""


class MultipleRootError(PeriodEvaluationError):
    """The factor is not squarefree at the requested coefficients."""


class BranchAmbiguityError(PeriodEvaluationError):
    """A root sits on the principal branch cut with a non-integer twist."""


# ---------------------------------------------------------------------------
# root continuation


def effective_univariate(spec: ScenarioSpec, a: np.ndarray) -> np.ndarray:
    """Dense coefficients of the factor in the root variable, frozen folded.

    Frozen parameter variables are substituted at their declared values;
    the result is ascending-degree dense coefficients in the remaining
    variable.  Linear in a, so straight segments in coefficient space map
    to straight segments of effective coefficients.
    """
    fac = spec.factors[0]
    q = spec.root_variable() - 1
    frozen = dict(spec.frozen)
    coeffs = spec.coefficients_for(a, fac.index)
    deg = max(mono[q] for mono in fac.monomials)
    dense = np.zeros(deg + 1, dtype=complex)
    for mono, c in zip(fac.monomials, coeffs):
        w = complex(c)
        for p, val in frozen.items():
            w *= complex(val) ** mono[p - 1]
        dense[mono[q]] += w
    return dense


def _poly_eval(dense: np.ndarray, x: complex) -> tuple[complex, complex]:
    f = 0.0 + 0.0j
    df = 0.0 + 0.0j
    for c in dense[::-1]:
        df = df * x + f
        f = f * x + c
    return f, df


def _poly_scale(dense: np.ndarray, x: complex) -> float:
    m = max(1.0, abs(x))
    return float(sum(abs(c) * m**k for k, c in enumerate(dense)))


def _newton(dense: np.ndarray, x: complex, tol_rel: float = 1e-13,
            max_iter: int = 10) -> complex | None:
    for _ in range(max_iter):
        f, df = _poly_eval(dense, x)
        scale = _poly_scale(dense, x)
        if abs(f) <= tol_rel * scale:
            return x
        if df == 0:
            return None
        step = f / df
        if abs(step) > 0.5 * (1.0 + abs(x)):
            return None
        x = x - step
    f, _ = _poly_eval(dense, x)
    if abs(f) <= tol_rel * _poly_scale(dense, x):
        return x
    return None


def _continue_root_segment(
    dense0: np.ndarray, dense1: np.ndarray, x0: complex,
    escape_radius: float,
) -> complex:
    """Track the root of (1-t) dense0 + t dense1 from t=0 to t=1."""
    ddense = dense1 - dense0
    x = complex(x0)
    t = 0.0
    dt = 0.25
    while t < 1.0:
        dt = min(dt, 1.0 - t)
        tn = t + dt
        dense_t = dense0 + tn * ddense
        lead = np.abs(dense_t)
        if lead[-1] < 1e-10 * max(float(np.max(lead)), 1e-300):
            raise RootEscapeError(
                f"leading coefficient degenerates at segment parameter {tn:.6f}"
            )
        fdot = complex(np.polyval(ddense[::-1], x))
        _, df = _poly_eval(dense0 + t * ddense, x)
        pred = x - dt * fdot / df if df != 0 else x
        corrected = _newton(dense_t, pred)
        if corrected is None:
            dt *= 0.5
            if dt < 1e-12:
                raise NearDiscriminantError(
                    f"Newton correction failed near segment parameter {t:.6f}; "
                    f"the continuation path runs too close to a root collision"
                )
            continue
        x = corrected
        t = tn
        if abs(x) > escape_radius:
            raise RootEscapeError(
                f"root magnitude {abs(x):.3e} exceeded escape radius at "
                f"segment parameter {t:.6f}"
            )
        dt = min(dt * 1.6, 0.25)
    return x


def eval_root(
    spec: ScenarioSpec,
    a: np.ndarray,
    settings: EvalSettings | None = None,
) -> complex:
    """Analytic continuation of the base root to coefficients a.

    Predictor-corrector continuation along the straight segment from the
    scenario base coefficients, with adaptive step halving and Newton
    correction to |f| <= 1e-13 * coefficient scale.
    """
    a = np.asarray(a, dtype=complex)
    base = spec.coefficient_vector()
    dense0 = effective_univariate(spec, base)
    dense1 = effective_univariate(spec, a)
    x0 = complex(spec.base_root)
    start = _newton(dense0, x0)
    if start is None:
        raise PeriodEvaluationError(
            "base root does not satisfy the base coefficients"
        )
    escape = 1e6 * (1.0 + abs(x0))
    return _continue_root_segment(dense0, dense1, start, escape)


@dataclass(frozen=True)
class RootTrack:
    """Accepted root values along a polyline in coefficient space."""

    waypoints: tuple
    roots: tuple
    residuals: tuple

    @property
    def final(self) -> complex:
        return self.roots[-1]


def track_root(
    spec: ScenarioSpec,
    waypoints,
    settings: EvalSettings | None = None,
) -> RootTrack:
    """Continue the base root along straight segments between waypoints."""
    base = spec.coefficient_vector()
    dense_prev = effective_univariate(spec, base)
    x = complex(spec.base_root)
    x0 = _newton(dense_prev, x)
    if x0 is None:
        raise PeriodEvaluationError(
            "base root does not satisfy the base coefficients"
        )
    x = x0
    escape = 1e6 * (1.0 + abs(x))
    roots = [x]
    residuals = [abs(_poly_eval(dense_prev, x)[0]) / _poly_scale(dense_prev, x)]
    pts = [np.asarray(w, dtype=complex) for w in waypoints]
    for w in pts:
        dense_next = effective_univariate(spec, w)
        x = _continue_root_segment(dense_prev, dense_next, x, escape)
        roots.append(x)
        residuals.append(
            abs(_poly_eval(dense_next, x)[0]) / _poly_scale(dense_next, x)
        )
        dense_prev = dense_next
    return RootTrack(
        waypoints=tuple(tuple(map(complex, w)) for w in pts),
        roots=tuple(roots),
        residuals=tuple(residuals),
    )


# ---------------------------------------------------------------------------
# residue sums


def eval_gl_residue(
    spec: ScenarioSpec,
    a: np.ndarray,
    settings: EvalSettings | None = None,
) -> complex:
    """Sum of r^(beta-1) / f'(r) over all roots r of the factor.

    Roots come from companion-matrix eigenvalues plus Newton polish.  For
    non-integer beta the power uses the principal branch; a root on (or
    hugging) the negative real axis makes that choice ambiguous and raises.
    """
    a = np.asarray(a, dtype=complex)
    fac = spec.factors[0]
    dense = np.zeros(max(mono[0] for mono in fac.monomials) + 1, dtype=complex)
    for mono, c in zip(fac.monomials, spec.coefficients_for(a, fac.index)):
        dense[mono[0]] += c
    mags = np.abs(dense)
    if mags[-1] < 1e-10 * max(float(np.max(mags)), 1e-300):
        raise RootEscapeError("leading coefficient of the factor degenerates")
    if dense.size < 2:
        raise PeriodEvaluationError("factor is constant; no roots to sum over")
    roots = univariate_roots(dense)
    beta = complex(spec.twist_beta[0])
    dpoly = dense[1:] * np.arange(1, dense.size)
    total = 0.0 + 0.0j
    for r in sorted(map(complex, roots), key=lambda z: (z.real, z.imag)):
        df = complex(np.polyval(dpoly[::-1], r))
        scale = _poly_scale(dense, r) / max(1.0, abs(r))
        if abs(df) < 1e-8 * scale:
            raise MultipleRootError(
                f"nearly multiple root at {r:.6g}: |f'| = {abs(df):.3e}"
            )
        if is_real_integer(beta):
            k = int(beta.real) - 1
            if k < 0 and r == 0:
                raise PeriodEvaluationError(
                    "zero root with negative twist power has no finite weight"
                )
            weight = r**k
        else:
            if r == 0 or (r.real < 0 and abs(r.imag) <= 1e-9 * abs(r)):
                raise BranchAmbiguityError(
                    f"root {r:.6g} sits on the principal branch cut with "
                    f"non-integer twist beta = {beta}"
                )
            weight = cmath.exp((beta - 1.0) * cmath.log(r))
        total += weight / df
    if not (np.isfinite(total.real) and np.isfinite(total.imag)):
        raise PeriodEvaluationError("residue sum is not finite")
    return total


# ---------------------------------------------------------------------------
# periods


def eval_period(
    spec: ScenarioSpec,
    a: np.ndarray,
    settings: EvalSettings | None = None,
) -> complex:
    """Cycle integral at coefficients a; raises instead of returning junk."""
    if settings is None:
        settings = spec.settings
    res = integrate_cycle(spec.cycle, spec, a=np.asarray(a, dtype=complex),
                          settings=settings)
    if not res.converged:
        raise UnconvergedQuadratureError(
            f"quadrature did not converge below tol {settings.tol:g} within "
            f"level cap {settings.level_cap} (error estimate "
            f"{res.error_estimate:.3e})"
        )
    return res.value


# ---------------------------------------------------------------------------
# the packaged callable


@dataclass
class PeriodFunction:
    """Black-box holomorphic function of the coefficient vector."""

    scenario: ScenarioSpec
    settings: EvalSettings = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.settings is None:
            self.settings = self.scenario.settings

    @property
    def kind(self) -> str:
        return self.scenario.function_kind

    @property
    def dimension(self) -> int:
        return self.scenario.n_columns()

    def __call__(self, a) -> complex:
        a = np.asarray(a, dtype=complex)
        if a.shape != (self.dimension,):
            raise ValueError(
                f"expected coefficient vector of length {self.dimension}, "
                f"got shape {a.shape}"
            )
        kind = self.scenario.function_kind
        if kind == "period":
            return eval_period(self.scenario, a, self.settings)
        if kind == "root":
            return eval_root(self.scenario, a, self.settings)
        return eval_gl_residue(self.scenario, a, self.settings)


def make_period_function(
    spec: ScenarioSpec, settings: EvalSettings | None = None
) -> PeriodFunction:
    pf = PeriodFunction(scenario=spec, settings=settings)
    return pf
