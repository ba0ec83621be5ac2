"""Numerical verification that every operator annihilates the function.

Derivatives of the holomorphic coefficient function come from tensor
Cauchy-circle quadrature (trapezoid on circles, exact for coordinate
degree below the node count), with a halved-radius rerun as a built-in
diagnostic; central differences with Richardson extrapolation remain as a
cross-check method.  Residuals are normalized by the sum of the operator's
term magnitudes so they stay meaningful where the function is small.
"""

from __future__ import annotations

import cmath
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analytic_paths import EvaluationError
from .gkz_system import BoxOperator, EulerOperator, GkzSystem
from .scenario import EvalSettings, ScenarioSpec

__all__ = [
    "DiffSettings",
    "DerivativeCache",
    "DerivResult",
    "differentiate",
    "OperatorApplication",
    "apply_operator",
    "ResidualCell",
    "ResidualReport",
    "verification_points",
    "verify",
]

_MAX_ORDER = 6
# below this fraction of |phi| the operator's own scale is numerically zero
_DEGENERATE_FRACTION = 1e-8


@dataclass(frozen=True)
class DiffSettings:
    """Settings for numerical differentiation of a holomorphic function.

    The default radius suits entire functions; callers differentiating a
    function with nearby singularities should shrink radius_factor (the
    scenario settings carry their own value).
    """

    method: str = "cauchy-circle"
    radius_factor: float = 0.5
    nodes: int = 16
    fd_step_rel: float = 1e-3
    richardson: int = 2
    diagnostic_tol: float = 1e-4

    def __post_init__(self):
        if self.method not in ("cauchy-circle", "central-difference"):
            raise ValueError(f"unknown differentiation method {self.method!r}")
        if self.nodes < 8 or self.nodes % 2 != 0:
            raise ValueError("nodes must be an even integer >= 8")
        if self.radius_factor <= 0 or self.fd_step_rel <= 0:
            raise ValueError("radius and step factors must be positive")

    @classmethod
    def from_eval_settings(cls, s: EvalSettings) -> "DiffSettings":
        return cls(
            method=s.diff_method,
            radius_factor=s.radius_factor,
            nodes=s.diff_nodes,
            fd_step_rel=s.fd_step,
            richardson=s.richardson,
        )


class DerivativeCache:
    """Memo for function values and finished derivatives.

    Function values are keyed by the exact evaluation point, so stencils
    that revisit a point (different derivative orders on the same circles,
    repeated verify runs at the same seed) share work.  One cache serves
    one function only.
    """

    def __init__(self):
        self.values: dict = {}
        self.derivs: dict = {}
        self.hits = 0
        self.misses = 0

    def value(self, phi, point: np.ndarray) -> complex:
        key = point.tobytes()
        if key in self.values:
            self.hits += 1
            return self.values[key]
        self.misses += 1
        v = complex(phi(point))
        self.values[key] = v
        return v


@dataclass(frozen=True)
class DerivResult:
    value: complex
    diagnostic: float
    warnings: tuple = ()


def _cauchy_tensor(
    phi, a: np.ndarray, vars_orders: list, radii: list, nodes: int, cache
) -> complex:
    k = np.arange(nodes)
    theta = 2.0 * math.pi * k / nodes
    rot = np.exp(1j * theta)
    acc = 0.0 + 0.0j
    for combo in itertools.product(range(nodes), repeat=len(vars_orders)):
        point = a.copy()
        phase = 1.0 + 0.0j
        for (v, q), rho, idx in zip(vars_orders, radii, combo):
            point[v] = a[v] + rho * rot[idx]
            phase *= np.exp(-1j * q * theta[idx])
        acc += cache.value(phi, point) * phase
    pref = 1.0 + 0.0j
    for (v, q), rho in zip(vars_orders, radii):
        pref *= math.factorial(q) / (nodes * rho**q)
    return pref * acc


def _central_tensor(
    phi, a: np.ndarray, vars_orders: list, steps: list, cache
) -> complex:
    axes = []
    for (v, q), h in zip(vars_orders, steps):
        offs = [(j - q / 2.0) * h for j in range(q + 1)]
        coefs = [((-1) ** (q - j)) * math.comb(q, j) for j in range(q + 1)]
        axes.append((v, q, h, offs, coefs))
    acc = 0.0 + 0.0j
    for combo in itertools.product(*[range(q + 1) for _, q, _, _, _ in axes]):
        point = a.copy()
        coef = 1.0
        for (v, q, h, offs, coefs), j in zip(axes, combo):
            point[v] = a[v] + offs[j]
            coef *= coefs[j]
        acc += coef * cache.value(phi, point)
    denom = 1.0
    for _, q, h, _, _ in axes:
        denom *= h**q
    return acc / denom


def differentiate(
    phi,
    a: np.ndarray,
    multi,
    settings: DiffSettings | None = None,
    cache: DerivativeCache | None = None,
) -> DerivResult:
    """Mixed partial derivative of phi at a for the given multi-index.

    Cauchy-circle evaluation is exact for polynomials of coordinate degree
    below the node count; the same derivative recomputed at half radius is
    returned as an agreement diagnostic, with a warning when it exceeds the
    configured tolerance.
    """
    if settings is None:
        settings = DiffSettings()
    if cache is None:
        cache = DerivativeCache()
    a = np.asarray(a, dtype=complex)
    multi = tuple(int(q) for q in multi)
    if len(multi) != a.size:
        raise ValueError(f"multi-index length {len(multi)} != dimension {a.size}")
    if any(q < 0 for q in multi):
        raise ValueError("multi-index entries must be nonnegative")
    order = sum(multi)
    if order > _MAX_ORDER:
        raise ValueError(f"derivative order {order} exceeds cap {_MAX_ORDER}")
    if order == 0:
        v = cache.value(phi, a)
        return DerivResult(value=v, diagnostic=0.0)

    key = (a.tobytes(), multi, settings.method, settings.radius_factor,
           settings.nodes, settings.fd_step_rel)
    if key in cache.derivs:
        return cache.derivs[key]

    vars_orders = [(v, q) for v, q in enumerate(multi) if q > 0]
    warnings: list[str] = []
    if settings.method == "cauchy-circle":
        radii = [
            settings.radius_factor * max(1.0, abs(a[v])) for v, _ in vars_orders
        ]
        val = _cauchy_tensor(phi, a, vars_orders, radii, settings.nodes, cache)
        half = _cauchy_tensor(
            phi, a, vars_orders, [r / 2.0 for r in radii], settings.nodes, cache
        )
        # rounding noise scale at the smaller radius: prod q!/rho^q * eps * |phi|
        amp = 1.0
        for (_, q), rho in zip(vars_orders, radii):
            amp *= math.factorial(q) / (rho / 2.0) ** q
    else:
        steps = [
            settings.fd_step_rel * max(1.0, abs(a[v])) for v, _ in vars_orders
        ]
        coarse = _central_tensor(phi, a, vars_orders, steps, cache)
        fine = _central_tensor(
            phi, a, vars_orders, [h / 2.0 for h in steps], cache
        )
        if settings.richardson >= 2:
            val = (4.0 * fine - coarse) / 3.0
            half = fine
        else:
            val = fine
            half = coarse
        amp = 1.0
        for (_, q), h in zip(vars_orders, steps):
            amp *= 2.0**q / (h / 2.0) ** q
    val = complex(val)
    # a derivative whose both estimates sit at the noise floor is zero, not
    # disagreeing; measure agreement against value, halved value, and floor
    # (floor = 1e-10 * amplified rounding scale, >= 1e4 x the eps-level noise
    # so vanishing derivatives stay comfortably below diagnostic_tol)
    floor = amp * max(abs(cache.value(phi, a)), 1e-300) * 1e-10
    diag = float(abs(val - half) / max(abs(val), abs(half), floor))
    if diag > settings.diagnostic_tol:
        warnings.append(
            f"derivative d^{multi} agreement {diag:.2e} above "
            f"{settings.diagnostic_tol:g}; value may be unreliable"
        )
    result = DerivResult(value=val, diagnostic=diag, warnings=tuple(warnings))
    cache.derivs[key] = result
    return result


# ---------------------------------------------------------------------------
# operators


@dataclass(frozen=True)
class OperatorApplication:
    raw: complex
    normalization: float
    relative: float
    diagnostic: float
    degenerate: bool
    warnings: tuple = ()


def apply_operator(
    op,
    phi,
    a: np.ndarray,
    settings: DiffSettings | None = None,
    cache: DerivativeCache | None = None,
) -> OperatorApplication:
    """Apply one annihilator to phi at a and normalize the residual.

    Euler: sum_v w_v a_v d_v(phi) - kappa phi, normalized by the sum of the
    term magnitudes.  Box: d^(u+) phi - d^(u-) phi, normalized by the two
    magnitudes.  If the normalization is numerically zero relative to |phi|
    the cell is flagged degenerate instead of dividing by noise.
    """
    if settings is None:
        settings = DiffSettings()
    if cache is None:
        cache = DerivativeCache()
    a = np.asarray(a, dtype=complex)
    n = a.size
    phi0 = cache.value(phi, a)
    warnings: list[str] = []
    diag = 0.0
    if isinstance(op, EulerOperator):
        raw = -complex(op.eigenvalue) * phi0
        norm = abs(complex(op.eigenvalue) * phi0)
        for v, w in enumerate(op.weights):
            if w == 0:
                continue
            multi = tuple(1 if u == v else 0 for u in range(n))
            d = differentiate(phi, a, multi, settings, cache)
            term = w * a[v] * d.value
            raw += term
            norm += abs(term)
            diag = max(diag, d.diagnostic)
            warnings.extend(d.warnings)
    elif isinstance(op, BoxOperator):
        dplus = differentiate(phi, a, op.u_plus, settings, cache)
        dminus = differentiate(phi, a, op.u_minus, settings, cache)
        raw = dplus.value - dminus.value
        norm = abs(dplus.value) + abs(dminus.value)
        diag = max(dplus.diagnostic, dminus.diagnostic)
        warnings.extend(dplus.warnings)
        warnings.extend(dminus.warnings)
    else:
        raise TypeError(f"not an operator: {type(op).__name__}")
    raw = complex(raw)
    norm = float(norm)
    diag = float(diag)
    scale = abs(phi0) if phi0 != 0 else 1.0
    degenerate = bool(norm < _DEGENERATE_FRACTION * scale)
    relative = 0.0 if degenerate else abs(raw) / norm
    return OperatorApplication(
        raw=raw,
        normalization=norm,
        relative=relative,
        diagnostic=diag,
        degenerate=degenerate,
        warnings=tuple(warnings),
    )


# ---------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class ResidualCell:
    operator: str
    point_index: int
    raw: complex = 0.0
    normalization: float = 0.0
    relative: float = 0.0
    diagnostic: float = 0.0
    degenerate: bool = False
    error: str | None = None
    warnings: tuple = ()


@dataclass(frozen=True)
class ResidualReport:
    cells: tuple
    points: tuple
    phi_values: tuple
    threshold: float
    max_relative: float
    passed: bool
    has_errors: bool

    def cells_for_point(self, k: int):
        return [c for c in self.cells if c.point_index == k]


def verification_points(
    base: np.ndarray,
    n: int,
    seed: int,
    rel: float = 0.2,
    rel_min: float = 0.1,
) -> list[np.ndarray]:
    """Seeded random perturbations of the base coefficients.

    Per coordinate the offset magnitude is uniform in [rel_min, rel] times
    the coordinate scale (|a_v|, falling back to 1 for zero coordinates),
    with uniform phase.
    """
    base = np.asarray(base, dtype=complex)
    rng = np.random.default_rng(seed)
    scale = np.where(np.abs(base) > 1e-12, np.abs(base), 1.0)
    points = []
    for _ in range(n):
        r = rng.uniform(rel_min, rel, size=base.size)
        phase = rng.uniform(0.0, 2.0 * math.pi, size=base.size)
        points.append(base + scale * r * np.exp(1j * phase))
    return points


def _operator_label(op) -> str:
    if isinstance(op, EulerOperator):
        return f"euler {op.label[0]}({op.label[1]})"
    return f"box {tuple(p - m for p, m in zip(op.u_plus, op.u_minus))}"


def verify(
    system: GkzSystem,
    phi,
    points=None,
    settings: DiffSettings | None = None,
    threshold: float | None = None,
    cache: DerivativeCache | None = None,
    jobs: int = 1,
) -> ResidualReport:
    """Residuals of every operator at every point, assembled deterministically.

    Evaluation errors mark their (operator, point) cell and the run keeps
    going; the report fails if any non-degenerate relative residual crosses
    the threshold, and flags errors separately.
    """
    spec = system.scenario
    if settings is None:
        settings = DiffSettings.from_eval_settings(spec.settings)
    if threshold is None:
        threshold = spec.settings.threshold
    if points is None:
        points = verification_points(
            spec.coefficient_vector(),
            spec.settings.points,
            spec.settings.seed,
            spec.settings.point_rel,
            spec.settings.point_rel_min,
        )
    points = [np.asarray(p, dtype=complex) for p in points]
    operators = list(system.eulers) + list(system.boxes)
    if cache is None:
        cache = DerivativeCache()

    def run_point(k: int):
        pt = points[k]
        out = []
        try:
            phi_val = cache.value(phi, pt)
            phi_err = None
        except EvaluationError as exc:
            phi_val = None
            phi_err = f"{type(exc).__name__}: {exc}"
        for op in operators:
            label = _operator_label(op)
            if phi_err is not None:
                out.append(
                    ResidualCell(operator=label, point_index=k, error=phi_err)
                )
                continue
            try:
                app = apply_operator(op, phi, pt, settings, cache)
            except EvaluationError as exc:
                out.append(
                    ResidualCell(
                        operator=label,
                        point_index=k,
                        error=f"{type(exc).__name__}: {exc}",
                    )
                )
                continue
            out.append(
                ResidualCell(
                    operator=label,
                    point_index=k,
                    raw=app.raw,
                    normalization=app.normalization,
                    relative=app.relative,
                    diagnostic=app.diagnostic,
                    degenerate=app.degenerate,
                    warnings=app.warnings,
                )
            )
        return phi_val, out

    results: list = [None] * len(points)
    if jobs > 1 and len(points) > 1:
        # Cache writes are guarded by the GIL on dict level; points rarely
        # share stencil nodes, so contention is harmless.
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = {pool.submit(run_point, k): k for k in range(len(points))}
            for fut, k in futures.items():
                results[k] = fut.result()
    else:
        for k in range(len(points)):
            results[k] = run_point(k)

    cells: list[ResidualCell] = []
    phi_values: list = []
    for k in range(len(points)):
        phi_val, out = results[k]
        phi_values.append(phi_val)
        cells.extend(out)

    usable = [
        c.relative for c in cells if c.error is None and not c.degenerate
    ]
    max_rel = max(usable) if usable else 0.0
    has_errors = any(c.error is not None for c in cells)
    passed = (not has_errors) and max_rel < threshold
    return ResidualReport(
        cells=tuple(cells),
        points=tuple(tuple(map(complex, p)) for p in points),
        phi_values=tuple(phi_values),
        threshold=threshold,
        max_relative=max_rel,
        passed=passed,
        has_errors=has_errors,
    )
