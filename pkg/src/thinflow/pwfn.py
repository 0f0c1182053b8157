"""Exact piecewise-constant and piecewise-linear functions over the rationals.

Both function types are immutable values kept in canonical form, so two
functions compare equal iff they agree everywhere.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from fractions import Fraction
from numbers import Rational as _RationalABC
from typing import Callable, Iterable, Iterator, Sequence

Rational = Fraction

INF = math.inf


def as_rational(value) -> Fraction:
    """Coerce ``value`` to a Fraction without ever going through floats.

    Accepts Fraction, int and strings of the form ``"p"`` or ``"p/q"``.
    """
    if isinstance(value, bool):
        raise TypeError(f"not a rational: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, _RationalABC):
        return Fraction(value.numerator, value.denominator)
    if isinstance(value, str):
        text = value.strip()
        num, sep, den = text.partition("/")
        try:
            p = int(num)
            q = int(den) if sep else 1
        except ValueError:
            raise ValueError(f"malformed rational {value!r}") from None
        if q == 0:
            raise ValueError(f"malformed rational {value!r}: zero denominator")
        return Fraction(p, q)
    raise TypeError(f"not a rational: {value!r}")


def format_rational(value: Fraction) -> str:
    return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"


def _check_increasing(points: Sequence[Fraction]) -> None:
    for a, b in zip(points, points[1:]):
        if not a < b:
            raise ValueError(f"breakpoints must be strictly increasing, got {a} then {b}")


class PiecewiseConstantFn:
    """Right-continuous step function.

    The value is ``default`` on ``(-inf, b[0])`` and ``values[i]`` on
    ``[b[i], b[i+1])``; the last value extends to ``+inf``.
    """

    __slots__ = ("breakpoints", "values", "default")

    def __init__(self, breakpoints: Iterable = (), values: Iterable = (), default=0):
        bps = [as_rational(b) for b in breakpoints]
        vals = [as_rational(v) for v in values]
        if len(bps) != len(vals):
            raise ValueError("breakpoints and values differ in length")
        _check_increasing(bps)
        default = as_rational(default)
        keep_b: list[Fraction] = []
        keep_v: list[Fraction] = []
        prev = default
        for b, v in zip(bps, vals):
            if v != prev:
                keep_b.append(b)
                keep_v.append(v)
                prev = v
        self.breakpoints: tuple[Fraction, ...] = tuple(keep_b)
        self.values: tuple[Fraction, ...] = tuple(keep_v)
        self.default: Fraction = default

    @classmethod
    def constant(cls, value) -> PiecewiseConstantFn:
        return cls((), (), value)

    @classmethod
    def zero(cls) -> PiecewiseConstantFn:
        return cls()

    @classmethod
    def from_pieces(cls, pieces: Iterable[tuple], default=0) -> PiecewiseConstantFn:
        """Build from ``(start, value)`` pairs sorted by start."""
        pieces = list(pieces)
        return cls([p[0] for p in pieces], [p[1] for p in pieces], default)

    def __call__(self, theta) -> Fraction:
        i = bisect_right(self.breakpoints, theta) - 1
        return self.default if i < 0 else self.values[i]

    eval = __call__

    def pieces(self) -> Iterator[tuple]:
        """Yield ``(start, end, value)`` covering the real line; ends may be infinite."""
        starts = (-INF,) + self.breakpoints
        ends = self.breakpoints + (INF,)
        vals = (self.default,) + self.values
        yield from zip(starts, ends, vals)

    @property
    def final_value(self) -> Fraction:
        return self.values[-1] if self.values else self.default

    def combine(self, others: Sequence[PiecewiseConstantFn], op: Callable) -> PiecewiseConstantFn:
        fns = (self, *others)
        points = sorted(set().union(*(f.breakpoints for f in fns)))
        default = op(*(f.default for f in fns))
        return PiecewiseConstantFn(points, [op(*(f(p) for f in fns)) for p in points], default)

    def __add__(self, other: PiecewiseConstantFn) -> PiecewiseConstantFn:
        return self.combine([other], lambda a, b: a + b)

    def __sub__(self, other: PiecewiseConstantFn) -> PiecewiseConstantFn:
        return self.combine([other], lambda a, b: a - b)

    def __neg__(self) -> PiecewiseConstantFn:
        return self.scale(-1)

    def scale(self, c) -> PiecewiseConstantFn:
        c = as_rational(c)
        return PiecewiseConstantFn(self.breakpoints, [c * v for v in self.values], c * self.default)

    def cut(self, at) -> PiecewiseConstantFn:
        """Same function on ``(-inf, at)``, zero from ``at`` on."""
        at = as_rational(at)
        bps = [b for b in self.breakpoints if b < at]
        vals = [self(b) for b in bps]
        return PiecewiseConstantFn(bps + [at], vals + [Fraction(0)], self.default)

    def integrate(self) -> PiecewiseLinearFn:
        """Antiderivative anchored at ``F(0) = 0``."""
        return integrate(self)

    def support_end(self) -> Fraction | float:
        """Left end of the final zero stretch, or ``inf`` if the tail is nonzero."""
        if self.final_value != 0:
            return INF
        return self.breakpoints[-1] if self.breakpoints else -INF

    def __eq__(self, other) -> bool:
        if not isinstance(other, PiecewiseConstantFn):
            return NotImplemented
        return (self.breakpoints, self.values, self.default) == (other.breakpoints, other.values, other.default)

    def __hash__(self) -> int:
        return hash((self.breakpoints, self.values, self.default))

    def __repr__(self) -> str:
        parts = ", ".join(f"{format_rational(b)}->{format_rational(v)}" for b, v in zip(self.breakpoints, self.values))
        return f"PiecewiseConstantFn(default={format_rational(self.default)}; {parts})"


class PiecewiseLinearFn:
    """Continuous broken-line function defined on the whole real line.

    Linear interpolation between ``(breakpoints[i], values[i])``; affine with
    ``slope_left`` / ``slope_right`` beyond the outermost breakpoints. At
    least one breakpoint is always stored; an affine function is anchored at 0.
    """

    __slots__ = ("breakpoints", "values", "slope_left", "slope_right")

    def __init__(self, breakpoints: Iterable, values: Iterable, slope_left=0, slope_right=0, *, monotone: bool = False):
        bps = [as_rational(b) for b in breakpoints]
        vals = [as_rational(v) for v in values]
        if not bps or len(bps) != len(vals):
            raise ValueError("need one value per breakpoint and at least one breakpoint")
        _check_increasing(bps)
        sl, sr = as_rational(slope_left), as_rational(slope_right)
        slopes = [sl]
        slopes += [(vals[i + 1] - vals[i]) / (bps[i + 1] - bps[i]) for i in range(len(bps) - 1)]
        slopes.append(sr)
        keep = [i for i in range(len(bps)) if slopes[i] != slopes[i + 1]]
        if not keep:
            # affine: slope sl everywhere
            bps, vals = [Fraction(0)], [vals[0] - sl * bps[0]]
        else:
            bps = [bps[i] for i in keep]
            vals = [vals[i] for i in keep]
        self.breakpoints: tuple[Fraction, ...] = tuple(bps)
        self.values: tuple[Fraction, ...] = tuple(vals)
        self.slope_left: Fraction = sl
        self.slope_right: Fraction = sr
        if monotone and not self.is_monotone():
            raise ValueError("function flagged monotone is not nondecreasing")

    @classmethod
    def affine(cls, slope, intercept) -> PiecewiseLinearFn:
        slope = as_rational(slope)
        return cls([0], [intercept], slope, slope)

    @classmethod
    def identity(cls) -> PiecewiseLinearFn:
        return cls.affine(1, 0)

    @classmethod
    def zero(cls) -> PiecewiseLinearFn:
        return cls.affine(0, 0)

    @classmethod
    def from_samples(cls, points: Iterable, fn: Callable) -> PiecewiseLinearFn:
        """Interpolate ``fn`` through ``points``.

        Exact only when ``fn`` is affine between consecutive points and on
        both rays beyond them; the end slopes are read off at distance one.
        """
        pts = sorted(set(as_rational(p) for p in points))
        if not pts:
            pts = [Fraction(0)]
        vals = [fn(p) for p in pts]
        sl = vals[0] - fn(pts[0] - 1)
        sr = fn(pts[-1] + 1) - vals[-1]
        return cls(pts, vals, sl, sr)

    def __call__(self, theta) -> Fraction:
        bps = self.breakpoints
        if theta <= bps[0]:
            return self.values[0] + self.slope_left * (theta - bps[0])
        if theta >= bps[-1]:
            return self.values[-1] + self.slope_right * (theta - bps[-1])
        i = bisect_right(bps, theta) - 1
        if bps[i] == theta:
            return self.values[i]
        b0, b1 = bps[i], bps[i + 1]
        v0, v1 = self.values[i], self.values[i + 1]
        return v0 + (v1 - v0) * (theta - b0) / (b1 - b0)

    eval = __call__

    def segment_slopes(self) -> list[Fraction]:
        """Slopes of the ``len(breakpoints) + 1`` affine pieces, left ray first."""
        b, v = self.breakpoints, self.values
        inner = [(v[i + 1] - v[i]) / (b[i + 1] - b[i]) for i in range(len(b) - 1)]
        return [self.slope_left, *inner, self.slope_right]

    def slope_at(self, theta) -> Fraction:
        """Right derivative at ``theta``."""
        i = bisect_right(self.breakpoints, theta)
        return self.segment_slopes()[i]

    def left_slope_at(self, theta) -> Fraction:
        i = bisect_right(self.breakpoints, theta)
        if i > 0 and self.breakpoints[i - 1] == theta:
            i -= 1
        return self.segment_slopes()[i]

    def is_monotone(self) -> bool:
        return self.slope_left >= 0 and self.slope_right >= 0 and all(
            a <= b for a, b in zip(self.values, self.values[1:])
        )

    def translate(self, d) -> PiecewiseLinearFn:
        """The function ``theta -> self(theta - d)``."""
        d = as_rational(d)
        return PiecewiseLinearFn([b + d for b in self.breakpoints], self.values, self.slope_left, self.slope_right)

    def scale(self, c) -> PiecewiseLinearFn:
        c = as_rational(c)
        return PiecewiseLinearFn(self.breakpoints, [c * v for v in self.values], c * self.slope_left, c * self.slope_right)

    def _pointwise(self, other: PiecewiseLinearFn, op: Callable) -> PiecewiseLinearFn:
        pts = set(self.breakpoints) | set(other.breakpoints)
        return PiecewiseLinearFn.from_samples(pts, lambda x: op(self(x), other(x)))

    def __add__(self, other):
        if isinstance(other, PiecewiseLinearFn):
            return self._pointwise(other, lambda a, b: a + b)
        c = as_rational(other)
        return PiecewiseLinearFn(self.breakpoints, [v + c for v in self.values], self.slope_left, self.slope_right)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, PiecewiseLinearFn):
            return self._pointwise(other, lambda a, b: a - b)
        return self + (-as_rational(other))

    def __neg__(self) -> PiecewiseLinearFn:
        return self.scale(-1)

    def zeros(self) -> list[Fraction]:
        """Isolated sign-change roots (crossings strictly inside pieces or at breakpoints)."""
        roots: set[Fraction] = set()
        b, v = self.breakpoints, self.values
        for bi, vi in zip(b, v):
            if vi == 0:
                roots.add(bi)
        for i in range(len(b) - 1):
            if v[i] * v[i + 1] < 0:
                roots.add(b[i] - v[i] * (b[i + 1] - b[i]) / (v[i + 1] - v[i]))
        if self.slope_left != 0:
            r = b[0] - v[0] / self.slope_left
            if r < b[0]:
                roots.add(r)
        if self.slope_right != 0:
            r = b[-1] - v[-1] / self.slope_right
            if r > b[-1]:
                roots.add(r)
        return sorted(roots)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PiecewiseLinearFn):
            return NotImplemented
        return (self.breakpoints, self.values, self.slope_left, self.slope_right) == (
            other.breakpoints,
            other.values,
            other.slope_left,
            other.slope_right,
        )

    def __hash__(self) -> int:
        return hash((self.breakpoints, self.values, self.slope_left, self.slope_right))

    def __repr__(self) -> str:
        pts = ", ".join(f"({format_rational(b)}, {format_rational(v)})" for b, v in zip(self.breakpoints, self.values))
        return (
            f"PiecewiseLinearFn([{pts}], slope_left={format_rational(self.slope_left)}, "
            f"slope_right={format_rational(self.slope_right)})"
        )


def evaluate(f: PiecewiseConstantFn | PiecewiseLinearFn, theta) -> Fraction:
    return f(as_rational(theta))


def integrate(f: PiecewiseConstantFn) -> PiecewiseLinearFn:
    points = sorted(set(f.breakpoints) | {Fraction(0)})
    k = points.index(Fraction(0))
    values = [Fraction(0)] * len(points)
    for i in range(k, len(points) - 1):
        values[i + 1] = values[i] + f(points[i]) * (points[i + 1] - points[i])
    for i in range(k, 0, -1):
        values[i - 1] = values[i] - f(points[i - 1]) * (points[i] - points[i - 1])
    return PiecewiseLinearFn(points, values, f.default, f.final_value)


def compose_monotone(g: PiecewiseLinearFn, f: PiecewiseLinearFn) -> PiecewiseLinearFn:
    """Exact ``g o f`` for nondecreasing ``f``."""
    if not f.is_monotone():
        raise ValueError("inner function of compose_monotone must be nondecreasing")
    points = set(f.breakpoints)
    slopes = f.segment_slopes()
    fb, fv = f.breakpoints, f.values
    for b in g.breakpoints:
        # left ray
        if slopes[0] > 0 and b < fv[0]:
            points.add(fb[0] + (b - fv[0]) / slopes[0])
        for i in range(len(fb) - 1):
            if slopes[i + 1] > 0 and fv[i] < b < fv[i + 1]:
                points.add(fb[i] + (b - fv[i]) / slopes[i + 1])
        if slopes[-1] > 0 and b > fv[-1]:
            points.add(fb[-1] + (b - fv[-1]) / slopes[-1])
    return PiecewiseLinearFn.from_samples(points, lambda x: g(f(x)))


def min_pointwise(fs: Sequence[PiecewiseLinearFn]) -> PiecewiseLinearFn:
    fs = list(fs)
    if not fs:
        raise ValueError("min_pointwise of an empty list")
    if len(fs) == 1:
        return fs[0]
    points: set[Fraction] = set()
    for f in fs:
        points.update(f.breakpoints)
    for i in range(len(fs)):
        for j in range(i + 1, len(fs)):
            points.update((fs[i] - fs[j]).zeros())
    return PiecewiseLinearFn.from_samples(points, lambda x: min(f(x) for f in fs))


def max_pointwise(fs: Sequence[PiecewiseLinearFn]) -> PiecewiseLinearFn:
    return -min_pointwise([-f for f in fs])


def positive_part(f: PiecewiseLinearFn) -> PiecewiseLinearFn:
    return max_pointwise([f, PiecewiseLinearFn.zero()])
