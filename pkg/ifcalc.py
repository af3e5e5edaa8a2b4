"""Standard interference mappings, the combinators that preserve them, and fixed-point solvers.

A standard interference mapping J sends nonnegative M-vectors to strictly
positive M-vectors and is scalable (a*J(x) > J(a*x) for a > 1) and monotone
(x1 >= x2 implies J(x1) >= J(x2)). Concave positive functions qualify, and
the class is closed under positive scaling, sums, pointwise min/max, and
composition. A mapping may also declare a uniform upper bound B with
J(x) <= B*1; such mappings always have a unique fixed point, and the solver
brackets it between two Picard sequences started at 0 and at B*1.

Mappings evaluate either a single point (shape ``(M,)``) or a batch of
points stored as columns (shape ``(M, S)``).
"""

import abc
import logging
import os
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from errors import DimensionError, DivergenceError, InternalError, MalformedMappingError

log = logging.getLogger(__name__)

DEFAULT_MAX_ITERATIONS = 100_000
AXIOM_SLACK = 1e-12

_verify = os.environ.get("NETENERGY_VERIFY", "").strip().lower() not in ("", "0", "false", "no")


def set_verification(enabled):
    """Toggle the debug check that every evaluation respects the declared upper bound."""
    global _verify
    _verify = bool(enabled)


def verification_enabled():
    return _verify


class InterferenceMapping(abc.ABC):
    """Base class of the combinator tree. Instances are immutable."""

    kind = "leaf"

    def __init__(self, dimension, upper_bound=None, name=None):
        if dimension < 1:
            raise DimensionError(f"mapping dimension must be >= 1, got {dimension}")
        if upper_bound is not None and not upper_bound > 0:
            raise ValueError(f"upper bound must be > 0, got {upper_bound}")
        self._dimension = int(dimension)
        self._upper_bound = None if upper_bound is None else float(upper_bound)
        self._name = name or self.kind

    @property
    def dimension(self):
        return self._dimension

    @property
    def upper_bound(self):
        return self._upper_bound

    @property
    def name(self):
        return self._name

    @property
    def children(self):
        return ()

    @abc.abstractmethod
    def _evaluate(self, x):
        """Evaluate on a validated float array of shape (M,) or (M, S)."""

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim not in (1, 2) or x.shape[0] != self._dimension:
            raise DimensionError(
                f"{self._name}: expected input with leading dimension {self._dimension}, "
                f"got shape {x.shape}")
        value = np.asarray(self._evaluate(x), dtype=float)
        if value.shape != x.shape:
            raise MalformedMappingError(
                f"{self._name}: output shape {value.shape} does not match input shape {x.shape}",
                point=x, value=value)
        if np.any(np.isnan(value)) or np.any(value <= 0):
            raise MalformedMappingError(
                f"{self._name}: evaluation produced NaN or non-positive entries",
                point=x, value=value)
        if _verify and self._upper_bound is not None:
            if np.any(value > self._upper_bound * (1 + 1e-12)):
                raise InternalError(
                    f"{self._name}: evaluation {value.max():.6g} exceeds declared "
                    f"upper bound {self._upper_bound:.6g}")
        return value

    def describe(self, indent=0):
        """Human-readable combinator tree, one node per line."""
        bound = "" if self._upper_bound is None else f" (bound {self._upper_bound:g})"
        lines = [f"{'  ' * indent}{self._name} [{self._dimension}]{bound}"]
        for child in self.children:
            lines.append(child.describe(indent + 1))
        return "\n".join(lines)

    def __repr__(self):
        return f"<{type(self).__name__} {self._name} dim={self._dimension} bound={self._upper_bound}>"


class Leaf(InterferenceMapping):
    """A user-supplied function, declared concave and strictly positive by the caller.

    If ``vectorized`` is false the function only accepts single points and
    batches are evaluated column by column.
    """

    def __init__(self, fn: Callable, dimension, upper_bound=None, name=None, vectorized=False):
        super().__init__(dimension, upper_bound, name or getattr(fn, "__name__", "leaf"))
        self._fn = fn
        self._vectorized = vectorized

    def _evaluate(self, x):
        if x.ndim == 1 or self._vectorized:
            return self._fn(x)
        return np.column_stack([self._fn(x[:, s]) for s in range(x.shape[1])])


class Constant(InterferenceMapping):
    kind = "constant"

    def __init__(self, values, dimension=None, name=None):
        values = np.atleast_1d(np.asarray(values, dtype=float))
        if dimension is not None and values.size == 1:
            values = np.full(dimension, float(values[0]))
        if np.any(values <= 0) or not np.all(np.isfinite(values)):
            raise ValueError("constant mapping needs finite, strictly positive values")
        super().__init__(values.size, float(values.max()), name)
        self._values = values
        self._values.setflags(write=False)

    def _evaluate(self, x):
        if x.ndim == 1:
            return self._values.copy()
        return np.repeat(self._values[:, None], x.shape[1], axis=1)


class Affine(InterferenceMapping):
    """x -> A x + b with A >= 0 entrywise and b > 0 (concave and positive)."""

    kind = "affine"

    def __init__(self, matrix, offset, name=None):
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        offset = np.atleast_1d(np.asarray(offset, dtype=float))
        if matrix.shape != (offset.size, offset.size):
            raise DimensionError(f"affine matrix shape {matrix.shape} does not match offset size {offset.size}")
        if np.any(matrix < 0):
            raise ValueError("affine matrix must be entrywise nonnegative")
        if np.any(offset <= 0):
            raise ValueError("affine offset must be strictly positive")
        bound = float(offset.max()) if not np.any(matrix) else None
        super().__init__(offset.size, bound, name)
        self._matrix = matrix
        self._offset = offset

    def _evaluate(self, x):
        if x.ndim == 1:
            return self._matrix @ x + self._offset
        return self._matrix @ x + self._offset[:, None]


class ScaledSum(InterferenceMapping):
    kind = "scaled-sum"

    def __init__(self, maps, weights, name=None):
        bounds = [m.upper_bound for m in maps]
        bound = None
        if all(b is not None for b in bounds):
            bound = float(sum(w * b for w, b in zip(weights, bounds)))
        super().__init__(maps[0].dimension, bound, name)
        self._maps = tuple(maps)
        self._weights = tuple(float(w) for w in weights)

    @property
    def children(self):
        return self._maps

    def _evaluate(self, x):
        total = self._weights[0] * self._maps[0](x)
        for w, m in zip(self._weights[1:], self._maps[1:]):
            total = total + w * m(x)
        return total


class Minimum(InterferenceMapping):
    kind = "min"

    def __init__(self, maps, name=None):
        bounds = [m.upper_bound for m in maps if m.upper_bound is not None]
        super().__init__(maps[0].dimension, min(bounds) if bounds else None, name)
        self._maps = tuple(maps)

    @property
    def children(self):
        return self._maps

    def _evaluate(self, x):
        result = self._maps[0](x)
        for m in self._maps[1:]:
            result = np.minimum(result, m(x))
        return result


class Maximum(InterferenceMapping):
    kind = "max"

    def __init__(self, maps, name=None):
        bounds = [m.upper_bound for m in maps]
        bound = max(bounds) if all(b is not None for b in bounds) else None
        super().__init__(maps[0].dimension, bound, name)
        self._maps = tuple(maps)

    @property
    def children(self):
        return self._maps

    def _evaluate(self, x):
        result = self._maps[0](x)
        for m in self._maps[1:]:
            result = np.maximum(result, m(x))
        return result


class Composition(InterferenceMapping):
    kind = "composition"

    def __init__(self, outer, inner, name=None):
        super().__init__(outer.dimension, outer.upper_bound, name)
        self._outer = outer
        self._inner = inner

    @property
    def children(self):
        return (self._outer, self._inner)

    def _evaluate(self, x):
        return self._outer(self._inner(x))


class Cap(InterferenceMapping):
    """Componentwise min of a mapping with a positive constant; declares that constant as bound."""

    kind = "cap"

    def __init__(self, inner, bound, name=None):
        if not bound > 0:
            raise ValueError(f"cap must be > 0, got {bound}")
        effective = float(bound) if inner.upper_bound is None else min(float(bound), inner.upper_bound)
        super().__init__(inner.dimension, effective, name)
        self._inner = inner
        self._cap = float(bound)

    @property
    def inner(self):
        return self._inner

    @property
    def children(self):
        return (self._inner,)

    def _evaluate(self, x):
        return np.minimum(self._inner(x), self._cap)


def _check_same_dimension(maps):
    if not maps:
        raise ValueError("at least one mapping is required")
    dims = {m.dimension for m in maps}
    if len(dims) != 1:
        raise DimensionError(f"mappings have mismatched dimensions {sorted(dims)}")


def leaf(fn, dimension, upper_bound=None, name=None, vectorized=False):
    return Leaf(fn, dimension, upper_bound=upper_bound, name=name, vectorized=vectorized)


def constant(values, dimension=None, name=None):
    return Constant(values, dimension=dimension, name=name)


def affine(matrix, offset, name=None):
    return Affine(matrix, offset, name=name)


def cap(inner, bound, name=None):
    return Cap(inner, bound, name=name)


def combine_scaled_sum(maps, weights=None, name=None):
    """Positive combination sum_k weights[k] * maps[k](x)."""
    maps = list(maps)
    _check_same_dimension(maps)
    weights = [1.0] * len(maps) if weights is None else [float(w) for w in weights]
    if len(weights) != len(maps):
        raise DimensionError(f"{len(maps)} mappings but {len(weights)} weights")
    for w in weights:
        if not w > 0:
            raise ValueError(f"weights must be strictly positive, got {w}")
    return ScaledSum(maps, weights, name=name)


def combine_min(maps, name=None):
    maps = list(maps)
    _check_same_dimension(maps)
    return Minimum(maps, name=name)


def combine_max(maps, name=None):
    maps = list(maps)
    _check_same_dimension(maps)
    return Maximum(maps, name=name)


def compose(outer, inner, name=None):
    """Mapping x -> outer(inner(x))."""
    if outer.dimension != inner.dimension:
        raise DimensionError(
            f"cannot compose {outer.name} [{outer.dimension}] with {inner.name} [{inner.dimension}]")
    return Composition(outer, inner, name=name)


@dataclass(frozen=True)
class Violation:
    kind: str
    component: int
    x: np.ndarray
    other: object
    lhs: float
    rhs: float

    def __str__(self):
        if self.kind == "scalability":
            return (f"scalability violated at component {self.component}: "
                    f"alpha={self.other:.6g}, alpha*J(x)={self.lhs:.6g} <= J(alpha*x)={self.rhs:.6g}")
        return (f"monotonicity violated at component {self.component}: "
                f"J(x1)={self.lhs:.6g} < J(x2)={self.rhs:.6g}")


@dataclass(frozen=True)
class AxiomReport:
    samples: int
    violations: tuple = ()

    @property
    def scalability_violations(self):
        return [v for v in self.violations if v.kind == "scalability"]

    @property
    def monotonicity_violations(self):
        return [v for v in self.violations if v.kind == "monotonicity"]

    @property
    def ok(self):
        return not self.violations


def _sample_points(rng, dimension, count):
    """Nonnegative points spread over several orders of magnitude, some coordinates zeroed."""
    scale = 10.0 ** rng.uniform(-2.0, 2.0, size=count)
    x = rng.exponential(1.0, size=(dimension, count)) * scale
    x[rng.random((dimension, count)) < 0.1] = 0.0
    return x, scale


def check_axioms(mapping, sample_count=1000, seed=0, slack=AXIOM_SLACK):
    """Sample scalability and monotonicity; violations are report content, not errors.

    Scalability is checked as the strict inequality alpha*J(x) > J(alpha*x)
    with alpha in (1, 10]; monotonicity as J(x1) >= J(x2) for x1 >= x2. Both
    allow a relative slack for floating-point noise.
    """
    if sample_count < 1:
        raise ValueError(f"sample_count must be >= 1, got {sample_count}")
    rng = np.random.default_rng(seed)
    m = mapping.dimension

    x, scale = _sample_points(rng, m, sample_count)
    alpha = 1.0 + 9.0 * (1.0 - rng.random(sample_count))
    lhs = alpha * mapping(x)
    rhs = mapping(alpha * x)
    tol = slack * np.maximum(np.abs(lhs), np.abs(rhs))
    bad_scal = lhs <= rhs - tol

    x2, scale2 = _sample_points(rng, m, sample_count)
    bump = rng.exponential(1.0, size=(m, sample_count)) * scale2
    bump[rng.random((m, sample_count)) < 0.5] = 0.0
    x1 = x2 + bump
    j1 = mapping(x1)
    j2 = mapping(x2)
    tol_mono = slack * np.maximum(np.abs(j1), np.abs(j2))
    bad_mono = j1 < j2 - tol_mono

    violations = []
    for comp, s in zip(*np.nonzero(bad_scal)):
        violations.append(Violation("scalability", int(comp), x[:, s].copy(), float(alpha[s]),
                                    float(lhs[comp, s]), float(rhs[comp, s])))
    for comp, s in zip(*np.nonzero(bad_mono)):
        violations.append(Violation("monotonicity", int(comp), x1[:, s].copy(), x2[:, s].copy(),
                                    float(j1[comp, s]), float(j2[comp, s])))
    if violations:
        log.debug("%s: %d axiom violation(s) in %d samples", mapping.name, len(violations), sample_count)
    return AxiomReport(samples=sample_count, violations=tuple(violations))


@dataclass(frozen=True)
class FixedPointResult:
    fixed_point: np.ndarray
    lower: np.ndarray
    upper: Optional[np.ndarray]
    iterations: int
    certified_gap: Optional[float]
    residual: float
    history: tuple = field(default=(), repr=False)

    @property
    def certified(self):
        return self.upper is not None


def _monotone_slack(a, b):
    return 1e-12 * (1.0 + np.maximum(np.abs(a), np.abs(b)))


def _check_sandwich(lower, new_lower, upper, new_upper, iteration):
    if np.any(new_lower < lower - _monotone_slack(lower, new_lower)):
        raise InternalError(f"lower Picard sequence decreased at iteration {iteration}")
    if np.any(new_upper > upper + _monotone_slack(upper, new_upper)):
        raise InternalError(f"upper Picard sequence increased at iteration {iteration}; "
                            "is the declared upper bound valid?")
    if np.any(new_lower > new_upper + _monotone_slack(new_lower, new_upper)):
        raise InternalError(f"lower iterate crossed upper iterate at iteration {iteration}")


def fixed_point(mapping, tolerance=1e-9, max_iterations=DEFAULT_MAX_ITERATIONS, start=None,
                keep_history=False):
    """Compute the fixed point of ``mapping`` by Picard iteration.

    With a declared upper bound B (and no explicit start) two sequences run
    in parallel from 0 and B*1; they bracket the fixed point and the solver
    stops once they are within ``tolerance`` in the max norm. Otherwise a
    single sequence runs from ``start`` (default 0) until successive
    iterates are within ``tolerance``, which is not a certificate.
    """
    if not tolerance > 0:
        raise ValueError(f"tolerance must be > 0, got {tolerance}")
    if max_iterations < 1:
        raise ValueError(f"max_iterations must be >= 1, got {max_iterations}")
    m = mapping.dimension

    if start is None and mapping.upper_bound is not None:
        lower = np.zeros(m)
        upper = np.full(m, mapping.upper_bound)
        history = [(lower, upper)] if keep_history else None
        iteration = 0
        while True:
            gap = float(np.max(upper - lower))
            if gap <= tolerance:
                break
            if iteration >= max_iterations:
                raise DivergenceError(
                    f"{mapping.name}: certified gap {gap:.3g} still above {tolerance:.3g} "
                    f"after {iteration} iterations", iterations=iteration, lower=lower, upper=upper)
            new_lower = mapping(lower)
            new_upper = mapping(upper)
            _check_sandwich(lower, new_lower, upper, new_upper, iteration)
            lower, upper = new_lower, new_upper
            iteration += 1
            if history is not None:
                history.append((lower, upper))
        x = 0.5 * (lower + upper)
        residual = float(np.max(np.abs(x - mapping(x))))
        log.debug("%s: certified fixed point in %d iterations (gap %.3g, residual %.3g)",
                  mapping.name, iteration, gap, residual)
        return FixedPointResult(x, lower, upper, iteration, gap, residual,
                                tuple(history) if history is not None else ())

    x = np.zeros(m) if start is None else np.asarray(start, dtype=float).copy()
    if x.shape != (m,) or np.any(x < 0):
        raise ValueError(f"start must be a nonnegative vector of length {m}")
    history = [x] if keep_history else None
    for iteration in range(1, max_iterations + 1):
        nxt = mapping(x)
        if not np.all(np.isfinite(nxt)):
            raise DivergenceError(f"{mapping.name}: iterates overflowed after {iteration} iterations",
                                  iterations=iteration, lower=x)
        step = float(np.max(np.abs(nxt - x)))
        x = nxt
        if history is not None:
            history.append(x)
        if step <= tolerance:
            break
    else:
        raise DivergenceError(
            f"{mapping.name}: no convergence after {max_iterations} iterations "
            f"(last step {step:.3g}); the mapping may have no fixed point",
            iterations=max_iterations, lower=x)
    residual = float(np.max(np.abs(x - mapping(x))))
    log.debug("%s: fixed point in %d iterations (step %.3g, residual %.3g, uncertified)",
              mapping.name, iteration, step, residual)
    return FixedPointResult(x, x, None, iteration, None, residual,
                            tuple(history) if history is not None else ())


def has_fixed_point_certificate(mapping, candidate):
    """True iff J(x') <= x' componentwise, which proves a fixed point exists."""
    candidate = np.asarray(candidate, dtype=float)
    if candidate.shape != (mapping.dimension,):
        raise DimensionError(f"candidate must have length {mapping.dimension}, got shape {candidate.shape}")
    if np.any(candidate <= 0):
        raise ValueError("certificate candidate must be strictly positive")
    return bool(np.all(mapping(candidate) <= candidate))


def random_concave_mapping(rng, dimension, depth=2):
    """Random tree of concave-positive leaves joined by the preserving combinators.

    Used by the axiom test-suite; leaves are affine maps, square-root
    saturations and constants, all concave and strictly positive.
    """
    def random_leaf():
        pick = rng.integers(3)
        if pick == 0:
            matrix = rng.random((dimension, dimension)) * (rng.random((dimension, dimension)) < 0.6)
            return affine(matrix, rng.uniform(0.1, 2.0, dimension))
        if pick == 1:
            weights = rng.random((dimension, dimension))
            offset = rng.uniform(0.1, 2.0, dimension)
            return leaf(lambda x, w=weights, b=offset: np.sqrt(w @ x + 1.0) + (b if x.ndim == 1 else b[:, None]),
                        dimension, name="sqrt", vectorized=True)
        return constant(rng.uniform(0.5, 3.0, dimension))

    def build(level):
        if level == 0:
            return random_leaf()
        pick = rng.integers(5)
        children = [build(level - 1) for _ in range(int(rng.integers(2, 4)))]
        if pick == 0:
            return combine_scaled_sum(children, rng.uniform(0.1, 3.0, len(children)))
        if pick == 1:
            return combine_min(children)
        if pick == 2:
            return combine_max(children)
        if pick == 3:
            return compose(children[0], children[1])
        return cap(children[0], float(rng.uniform(1.0, 10.0)))

    return build(depth)
