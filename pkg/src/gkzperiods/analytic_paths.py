"""Paths, cycles, and branch-continuous evaluation of multivalued integrands.

A cycle is a complex-weighted chain of products of planar paths.  Along a
path, each power factor f_i(x)^lam and each coordinate twist x_p^(beta-1)
with a non-integer exponent needs a continuous choice of logarithm; this
module maintains those logs by adaptive argument tracking (per step the
imaginary part moves by less than pi/2, refining by bisection otherwise).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from ._roots import univariate_roots
from .scenario import ScenarioError, ScenarioSpec, is_real_integer

__all__ = [
    "EvaluationError",
    "PathSingularityError",
    "NonResolvableBranchError",
    "IntegrandOverflowError",
    "RootAnchor",
    "LineSegment",
    "ArcSegment",
    "RaySegment",
    "PathSegment",
    "Path1D",
    "CycleTerm",
    "CycleSpec",
    "ResolvedSegment",
    "ResolvedPath",
    "resolve_path",
    "tracked_requirements",
    "continued_logs",
    "BranchState",
    "continue_branch",
    "integrand_eval",
]

# Overflow guard for exp() of the accumulated log-integrand.
_EXP_CAP = 700.0


class EvaluationError(Exception):
    """Base class for failures while evaluating a coefficient function."""


class PathSingularityError(EvaluationError):
    """A factor or coordinate vanishes on (or too close to) the path."""


class NonResolvableBranchError(EvaluationError):
    """Branch tracking could not settle within the bisection depth limit."""


class IntegrandOverflowError(EvaluationError):
    """The integrand magnitude exceeded floating-point range."""


# ---------------------------------------------------------------------------
# path geometry


@dataclass(frozen=True)
class RootAnchor:
    """Path endpoint pinned to the root of a factor nearest a reference.

    The endpoint is recomputed for every coefficient vector, so cycles whose
    boundary sits on a moving zero locus stay attached to it.
    """

    factor: int
    near: complex


@dataclass(frozen=True)
class LineSegment:
    start: Union[complex, RootAnchor]
    end: Union[complex, RootAnchor]


@dataclass(frozen=True)
class ArcSegment:
    center: complex
    radius: float
    angle_start: float
    angle_end: float


@dataclass(frozen=True)
class RaySegment:
    start: complex
    direction: complex
    length: float


PathSegment = Union[LineSegment, ArcSegment, RaySegment]


@dataclass(frozen=True)
class Path1D:
    """Chain of segments with a branch anchor at global parameter anchor_t.

    The global parameter runs over [0, nsegments], one unit per segment.
    The anchor is where the principal branch is taken; it must avoid zeros
    of every tracked factor.
    """

    segments: tuple
    closed: bool = False
    anchor_t: float = 0.0


@dataclass(frozen=True)
class CycleTerm:
    multiplicity: complex
    paths: tuple


@dataclass(frozen=True)
class CycleSpec:
    terms: tuple


# ---------------------------------------------------------------------------
# resolution: geometry with RootAnchors replaced by concrete points


@dataclass(frozen=True)
class ResolvedSegment:
    kind: str
    z0: complex = 0.0
    z1: complex = 0.0
    center: complex = 0.0
    radius: float = 0.0
    angle_start: float = 0.0
    angle_end: float = 0.0
    direction: complex = 1.0
    length: float = 0.0
    # endpoints that resolved from RootAnchors of these factor indices
    anchored_start: int = 0
    anchored_end: int = 0

    def point(self, s):
        if self.kind == "line":
            return self.z0 + s * (self.z1 - self.z0)
        if self.kind == "arc":
            ang = self.angle_start + s * (self.angle_end - self.angle_start)
            return self.center + self.radius * np.exp(1j * np.asarray(ang))
        return self.z0 + s * (self.length * self.direction)

    def derivative(self, s):
        if self.kind == "line":
            return (self.z1 - self.z0) * np.ones_like(np.asarray(s, dtype=float))
        if self.kind == "arc":
            span = self.angle_end - self.angle_start
            ang = self.angle_start + s * span
            return 1j * self.radius * span * np.exp(1j * np.asarray(ang))
        return self.length * self.direction * np.ones_like(np.asarray(s, dtype=float))

    @property
    def start_point(self) -> complex:
        return complex(self.point(0.0))

    @property
    def end_point(self) -> complex:
        return complex(self.point(1.0))


@dataclass(frozen=True)
class ResolvedPath:
    segments: tuple
    closed: bool
    anchor_t: float

    @property
    def nsegments(self) -> int:
        return len(self.segments)

    def point(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.clip(np.floor(t).astype(int), 0, self.nsegments - 1)
        s = t - idx
        out = np.empty(t.shape, dtype=complex)
        for k, seg in enumerate(self.segments):
            mask = idx == k
            if np.any(mask):
                out[mask] = seg.point(s[mask])
        return out if out.shape else complex(out)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.clip(np.floor(t).astype(int), 0, self.nsegments - 1)
        s = t - idx
        out = np.empty(t.shape, dtype=complex)
        for k, seg in enumerate(self.segments):
            mask = idx == k
            if np.any(mask):
                out[mask] = seg.derivative(s[mask])
        return out if out.shape else complex(out)


def _dense_univariate(spec: ScenarioSpec, a: np.ndarray, factor: int) -> np.ndarray:
    fac = spec.factors[factor - 1]
    coeffs = spec.coefficients_for(a, factor)
    deg = max(mono[0] for mono in fac.monomials)
    dense = np.zeros(deg + 1, dtype=complex)
    for mono, c in zip(fac.monomials, coeffs):
        dense[mono[0]] += c
    return dense


def _resolve_endpoint(pt, spec: ScenarioSpec, a: np.ndarray) -> tuple[complex, int]:
    if isinstance(pt, RootAnchor):
        if spec.m != 1:
            raise ScenarioError("cycle", "root-anchored endpoints need m = 1")
        fac = spec.factors[pt.factor - 1]
        if fac.kind != "power":
            raise ScenarioError("cycle", "root anchor must point at a power factor")
        roots = univariate_roots(_dense_univariate(spec, a, pt.factor))
        if roots.size == 0:
            raise PathSingularityError(
                f"factor {pt.factor} has no roots to anchor a path endpoint"
            )
        z = complex(roots[np.argmin(np.abs(roots - complex(pt.near)))])
        return z, pt.factor
    return complex(pt), 0


def resolve_path(path: Path1D, spec: ScenarioSpec, a: np.ndarray) -> ResolvedPath:
    """Replace RootAnchor endpoints by concrete roots and validate chaining."""
    segs: list[ResolvedSegment] = []
    for seg in path.segments:
        if isinstance(seg, LineSegment):
            z0, f0 = _resolve_endpoint(seg.start, spec, a)
            z1, f1 = _resolve_endpoint(seg.end, spec, a)
            segs.append(
                ResolvedSegment(
                    kind="line", z0=z0, z1=z1, anchored_start=f0, anchored_end=f1
                )
            )
        elif isinstance(seg, ArcSegment):
            segs.append(
                ResolvedSegment(
                    kind="arc",
                    center=complex(seg.center),
                    radius=float(seg.radius),
                    angle_start=float(seg.angle_start),
                    angle_end=float(seg.angle_end),
                )
            )
        elif isinstance(seg, RaySegment):
            d = complex(seg.direction)
            if abs(abs(d) - 1.0) > 1e-9:
                d = d / abs(d)
            segs.append(
                ResolvedSegment(
                    kind="ray", z0=complex(seg.start), direction=d,
                    length=float(seg.length),
                )
            )
        else:
            raise ScenarioError("cycle", f"unknown segment type {type(seg).__name__}")
    if not segs:
        raise ScenarioError("cycle", "path has no segments")
    scale = max(
        1.0, max(abs(s.start_point) for s in segs), max(abs(s.end_point) for s in segs)
    )
    for prev, nxt in zip(segs, segs[1:]):
        if abs(prev.end_point - nxt.start_point) > 1e-9 * scale:
            raise ScenarioError(
                "cycle",
                f"consecutive segments do not chain: {prev.end_point} vs "
                f"{nxt.start_point}",
            )
    if path.closed and abs(segs[-1].end_point - segs[0].start_point) > 1e-9 * scale:
        raise ScenarioError("cycle", "closed path does not return to its start")
    anchor_t = float(path.anchor_t)
    if not 0.0 <= anchor_t <= len(segs):
        raise ScenarioError("cycle", f"anchor_t {anchor_t} outside [0, {len(segs)}]")
    return ResolvedPath(segments=tuple(segs), closed=path.closed, anchor_t=anchor_t)


def tracked_requirements(spec: ScenarioSpec) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Factor and coordinate indices whose exponents force log tracking.

    Integer exponents give single-valued powers and are evaluated directly;
    everything else needs a continuous branch.
    """
    factors = tuple(
        fac.index
        for fac in spec.factors
        if fac.kind == "power"
        and fac.lam is not None
        and not is_real_integer(complex(fac.lam))
    )
    coords = tuple(
        p + 1
        for p, beta in enumerate(spec.twist_beta)
        if not is_real_integer(complex(beta))
    )
    return factors, coords


# ---------------------------------------------------------------------------
# branch transport


def _arg_increment(
    eval_at: Callable[[float], complex],
    t0: float,
    v0: complex,
    t1: float,
    v1: complex,
    depth: int,
    zero_floor: float,
) -> float:
    d = cmath.phase(v1 / v0)
    if abs(d) < 0.5 * math.pi:
        return d
    if depth <= 0:
        raise NonResolvableBranchError(
            f"branch not resolvable between parameters {t0} and {t1}"
        )
    tm = 0.5 * (t0 + t1)
    vm = complex(eval_at(tm))
    if not (math.isfinite(vm.real) and math.isfinite(vm.imag)):
        raise PathSingularityError(f"non-finite value at path parameter {tm}")
    if vm == 0 or abs(vm) < zero_floor:
        raise PathSingularityError(
            f"value {abs(vm):.3e} below safety floor at path parameter {tm}"
        )
    left = _arg_increment(eval_at, t0, v0, tm, vm, depth - 1, zero_floor)
    right = _arg_increment(eval_at, tm, vm, t1, v1, depth - 1, zero_floor)
    return left + right


def continued_logs(
    ts: np.ndarray,
    values: np.ndarray,
    eval_at: Callable[[float], complex],
    anchor_t: float,
    anchor_log: complex | None = None,
    max_depth: int = 40,
) -> np.ndarray:
    """Continuous logs of sampled nonzero values along a parameterized curve.

    The branch is principal at the anchor parameter (or continues a supplied
    anchor_log); between consecutive samples the argument may move by less
    than pi/2, refined by bisection via eval_at where it does not.  The
    anchor is inserted as a virtual node if it is not already sampled, so
    results do not depend on the sampling resolution.
    """
    ts = np.asarray(ts, dtype=float)
    values = np.asarray(values, dtype=complex)
    if ts.size == 0:
        return np.zeros(0, dtype=complex)
    if not np.all(np.isfinite(values)):
        raise PathSingularityError("non-finite factor value on the path")
    if np.any(values == 0):
        k = int(np.argmax(values == 0))
        raise PathSingularityError(f"exact zero on the path at parameter {ts[k]}")
    zero_floor = 1e-10 * float(np.max(np.abs(values)))

    pos = int(np.searchsorted(ts, anchor_t))
    virtual = not (
        (pos < ts.size and ts[pos] == anchor_t)
        or (pos > 0 and ts[pos - 1] == anchor_t)
    )
    if virtual:
        va = complex(eval_at(anchor_t))
        if va == 0 or not (math.isfinite(va.real) and math.isfinite(va.imag)):
            raise PathSingularityError("anchor sits on a zero of a tracked value")
        work_t = np.insert(ts, pos, anchor_t)
        work_v = np.insert(values, pos, va)
        anchor_idx = pos
    else:
        work_t = ts
        work_v = values
        anchor_idx = pos if (pos < ts.size and ts[pos] == anchor_t) else pos - 1

    base = cmath.log(complex(work_v[anchor_idx])) if anchor_log is None else anchor_log

    increments = np.zeros(work_t.size, dtype=float)
    if work_t.size > 1:
        d = np.angle(work_v[1:] / work_v[:-1])
        big = np.abs(d) >= 0.5 * math.pi
        for k in np.nonzero(big)[0]:
            d[k] = _arg_increment(
                eval_at,
                float(work_t[k]),
                complex(work_v[k]),
                float(work_t[k + 1]),
                complex(work_v[k + 1]),
                max_depth,
                zero_floor,
            )
        increments[1:] = d
    total = np.cumsum(increments)
    arg = base.imag + (total - total[anchor_idx])
    logs = np.log(np.abs(work_v)) + 1j * arg
    if virtual:
        logs = np.delete(logs, anchor_idx)
    return logs


# ---------------------------------------------------------------------------
# branch states along a path (test- and user-facing transport)


@dataclass(frozen=True)
class BranchState:
    """Continuous-log data of the integrand factors at one path point."""

    t: float
    point: complex
    factor_logs: dict
    coord_logs: dict

    def log_for_factor(self, index: int) -> complex:
        return self.factor_logs[index]


def _factor_eval_on_curve(
    spec: ScenarioSpec, a: np.ndarray, factor: int, coords_at
) -> Callable:
    fac = spec.factors[factor - 1]
    coeffs = spec.coefficients_for(a, factor)

    def eval_at(t):
        return fac.values(coeffs, coords_at(t))

    return eval_at


def continue_branch(
    path: Path1D,
    spec: ScenarioSpec,
    a: np.ndarray | None = None,
    coordinate: int = 1,
    fixed: Sequence[complex] = (),
    samples_per_segment: int = 64,
    track_factors: Sequence[int] | None = None,
    track_coords: Sequence[int] | None = None,
) -> list[BranchState]:
    """Transport branch data along one path in one coordinate.

    The path moves coordinate ``coordinate`` while the remaining coordinates
    (if any) are pinned to ``fixed`` (length m-1, in increasing coordinate
    order).  By default every power factor is tracked, plus every coordinate
    whose twist exponent is non-integer.
    """
    if a is None:
        a = spec.coefficient_vector()
    a = np.asarray(a, dtype=complex)
    rpath = resolve_path(path, spec, a)

    fixed = tuple(complex(z) for z in fixed)
    others = [p for p in range(1, spec.m + 1) if p != coordinate]
    if len(fixed) != len(others):
        raise ScenarioError(
            "cycle", f"need {len(others)} fixed coordinates, got {len(fixed)}"
        )
    pin = dict(zip(others, fixed))

    def coords_at(t):
        x = rpath.point(t)
        return tuple(
            x if p == coordinate else pin[p] for p in range(1, spec.m + 1)
        )

    if track_factors is None:
        track_factors = tuple(f.index for f in spec.factors if f.kind == "power")
    if track_coords is None:
        _, auto_coords = tracked_requirements(spec)
        track_coords = tuple(p for p in auto_coords)

    nseg = rpath.nsegments
    ts = np.unique(
        np.concatenate(
            [
                np.linspace(k, k + 1, samples_per_segment + 1)
                for k in range(nseg)
            ]
        )
    )
    points = rpath.point(ts)

    factor_logs: dict[int, np.ndarray] = {}
    for fi in track_factors:
        fac = spec.factors[fi - 1]
        if fac.kind != "power":
            raise ScenarioError("cycle", f"factor {fi} is not a power factor")
        coeffs = spec.coefficients_for(a, fi)
        vmono = fac.values(coeffs, _coords_vec(points, coordinate, pin, spec.m))
        eval_at = _factor_eval_on_curve(spec, a, fi, coords_at)
        factor_logs[fi] = continued_logs(ts, vmono, eval_at, rpath.anchor_t)

    coord_logs: dict[int, np.ndarray] = {}
    for p in track_coords:
        if p == coordinate:
            coord_logs[p] = continued_logs(
                ts, points, lambda t: complex(rpath.point(t)), rpath.anchor_t
            )
        else:
            z = pin[p]
            coord_logs[p] = np.full(ts.size, cmath.log(z), dtype=complex)

    states = []
    for k in range(ts.size):
        states.append(
            BranchState(
                t=float(ts[k]),
                point=complex(points[k]),
                factor_logs={fi: complex(v[k]) for fi, v in factor_logs.items()},
                coord_logs={p: complex(v[k]) for p, v in coord_logs.items()},
            )
        )
    return states


def _coords_vec(points, coordinate, pin, m):
    return tuple(
        points if p == coordinate else pin[p] for p in range(1, m + 1)
    )


def integrand_eval(
    x: Sequence[complex],
    branch: BranchState,
    spec: ScenarioSpec,
    a: np.ndarray | None = None,
) -> complex:
    """Value of the multivalued integrand at one point with branch data.

    Power factors with tracked logs use exp(lam * L); untracked power
    factors must have integer lam and are evaluated by direct powers.  Exp
    factors contribute exp(f(x)); coordinate twists exp((beta-1) log x_p)
    use tracked logs when present, integer powers otherwise.
    """
    if a is None:
        a = spec.coefficient_vector()
    a = np.asarray(a, dtype=complex)
    x = tuple(complex(z) for z in x)

    w = 0.0 + 0.0j
    direct = 1.0 + 0.0j
    for fac in spec.factors:
        coeffs = spec.coefficients_for(a, fac.index)
        if fac.kind == "exp":
            w += complex(fac.values(coeffs, x))
            continue
        lam = complex(fac.lam)
        if fac.index in branch.factor_logs:
            w += lam * branch.factor_logs[fac.index]
        else:
            if not is_real_integer(lam):
                raise ScenarioError(
                    "cycle",
                    f"factor {fac.index} has non-integer exponent but no "
                    f"tracked branch",
                )
            direct *= complex(fac.values(coeffs, x)) ** int(lam.real)
    for p in range(1, spec.m + 1):
        beta = complex(spec.twist_beta[p - 1])
        if p in branch.coord_logs:
            w += (beta - 1.0) * branch.coord_logs[p]
        else:
            if not is_real_integer(beta):
                raise ScenarioError(
                    "cycle",
                    f"coordinate {p} has non-integer twist but no tracked "
                    f"branch",
                )
            k = int(beta.real) - 1
            if k != 0:
                direct *= x[p - 1] ** k
    if w.real > _EXP_CAP:
        raise IntegrandOverflowError(
            f"integrand magnitude exp({w.real:.1f}) overflows at x = {x}"
        )
    return cmath.exp(w) * direct
