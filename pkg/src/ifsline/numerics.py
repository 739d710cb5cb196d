"""Exact rationals, outward-rounded intervals and piecewise polynomials.

Everything the library certifies is computed here with :class:`fractions.Fraction`
endpoints, so that no floating-point rounding can leak into a proof.
"""

from bisect import bisect_right
from fractions import Fraction
import math

import mpmath
import numpy as np

DEFAULT_BITS = 256


def to_fraction(value):
    """Convert ``value`` to an exact :class:`Fraction`.

    Strings may be ``"p/q"`` or decimals such as ``"1e-4"``; floats are read
    through their shortest decimal representation, so ``0.6`` becomes ``3/5``.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite value {value!r}")
        return Fraction(repr(value))
    if isinstance(value, np.integer):
        return Fraction(int(value))
    if isinstance(value, np.floating):
        return to_fraction(float(value))
    if isinstance(value, mpmath.mpf):
        man, exp = mpmath.mpf(value).man_exp
        return Fraction(int(man)) * Fraction(2) ** int(exp)
    raise TypeError(f"cannot convert {type(value).__name__} to a rational")


def fraction_str(x):
    """Render a rational as ``"p/q"`` (or ``"p"`` for integers)."""
    x = to_fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def to_mpf(x):
    """Convert a rational (or anything numeric) to an mpmath float at the current precision."""
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    if isinstance(x, int):
        return mpmath.mpf(x)
    return mpmath.mpf(x)


def round_down(x, bits=DEFAULT_BITS):
    """Largest multiple of ``2**-bits`` that is ``<= x``; small fractions pass through."""
    if x.denominator.bit_length() <= bits:
        return x
    scale = 1 << bits
    return Fraction(math.floor(x * scale), scale)


def round_up(x, bits=DEFAULT_BITS):
    if x.denominator.bit_length() <= bits:
        return x
    scale = 1 << bits
    return Fraction(math.ceil(x * scale), scale)


class Interval:
    """Closed interval with rational endpoints."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None):
        lo = to_fraction(lo)
        hi = lo if hi is None else to_fraction(hi)
        if lo > hi:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        self.lo = lo
        self.hi = hi

    @staticmethod
    def _coerce(other):
        return other if isinstance(other, Interval) else Interval(other)

    def __add__(self, other):
        other = self._coerce(other)
        return Interval(self.lo + other.lo, self.hi + other.hi)

    __radd__ = __add__

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        products = (self.lo * other.lo, self.lo * other.hi, self.hi * other.lo, self.hi * other.hi)
        return Interval(min(products), max(products))

    __rmul__ = __mul__

    def __eq__(self, other):
        return isinstance(other, Interval) and self.lo == other.lo and self.hi == other.hi

    def __hash__(self):
        return hash((self.lo, self.hi))

    def __repr__(self):
        return f"Interval({fraction_str(self.lo)}, {fraction_str(self.hi)})"

    @property
    def width(self):
        return self.hi - self.lo

    @property
    def mid(self):
        return (self.lo + self.hi) / 2

    def mag(self):
        """Largest absolute value in the interval."""
        return max(abs(self.lo), abs(self.hi))

    def mig(self):
        """Smallest absolute value in the interval."""
        if self.lo <= 0 <= self.hi:
            return Fraction(0)
        return min(abs(self.lo), abs(self.hi))

    def contains(self, x):
        if isinstance(x, Interval):
            return self.lo <= x.lo and x.hi <= self.hi
        return self.lo <= x <= self.hi

    def intersects(self, other):
        return not (self.hi < other.lo or other.hi < self.lo)

    def distance(self, other):
        """Gap between two intervals (0 when they meet)."""
        return max(Fraction(0), other.lo - self.hi, self.lo - other.hi)

    def hull(self, other):
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def rounded(self, bits=DEFAULT_BITS):
        return Interval(round_down(self.lo, bits), round_up(self.hi, bits))

    def split(self, pieces):
        step = self.width / pieces
        return [Interval(self.lo + k * step, self.lo + (k + 1) * step) for k in range(pieces)]


def _is_exact(x):
    return isinstance(x, (Fraction, int)) and not isinstance(x, bool)


class Poly:
    """Polynomial with rational coefficients, stored lowest degree first."""

    __slots__ = ("coeffs", "_float")

    def __init__(self, coeffs=()):
        cs = [to_fraction(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs = tuple(cs)
        self._float = tuple(float(c) for c in cs)

    @classmethod
    def linear(cls, slope, intercept):
        return cls([intercept, slope])

    @classmethod
    def from_roots(cls, roots, scale=1):
        p = cls([scale])
        for root in roots:
            p = p * cls([-to_fraction(root), 1])
        return p

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def is_zero(self):
        return not self.coeffs

    def __call__(self, x):
        if not self.coeffs:
            return x * 0 if not _is_exact(x) else Fraction(0)
        if _is_exact(x):
            acc = Fraction(0)
            for c in reversed(self.coeffs):
                acc = acc * x + c
            return acc
        if isinstance(x, mpmath.mpf):
            acc = mpmath.mpf(0)
            for c in reversed(self.coeffs):
                acc = acc * x + to_mpf(c)
            return acc
        acc = 0.0 * x
        for c in reversed(self._float):
            acc = acc * x + c
        return acc

    def deriv(self):
        return Poly([k * c for k, c in enumerate(self.coeffs)][1:])

    def __add__(self, other):
        if not isinstance(other, Poly):
            other = Poly([other])
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (Fraction(0),) * (n - len(self.coeffs))
        b = other.coeffs + (Fraction(0),) * (n - len(other.coeffs))
        return Poly([x + y for x, y in zip(a, b)])

    __radd__ = __add__

    def __neg__(self):
        return Poly([-c for c in self.coeffs])

    def __sub__(self, other):
        if not isinstance(other, Poly):
            other = Poly([other])
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, Poly):
            c = to_fraction(other)
            return Poly([c * a for a in self.coeffs])
        if not self.coeffs or not other.coeffs:
            return Poly()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
        return Poly(out)

    __rmul__ = __mul__

    def __pow__(self, n):
        out = Poly([1])
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        return isinstance(other, Poly) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        return f"Poly([{', '.join(fraction_str(c) for c in self.coeffs)}])"

    def taylor(self, c):
        """Coefficients of ``h -> p(c + h)``."""
        coeffs = list(self.coeffs)
        n = len(coeffs)
        for i in range(n):
            for k in range(n - 2, i - 1, -1):
                coeffs[k] += c * coeffs[k + 1]
        return coeffs

    def enclose(self, interval, pieces=1):
        """Rigorous enclosure of the range over ``interval`` (centred Taylor form)."""
        if not self.coeffs:
            return Interval(0)
        result = None
        for part in interval.split(pieces) if pieces > 1 else [interval]:
            w = part.width / 2
            q = self.taylor(part.mid)
            lo = hi = q[0]
            wk = Fraction(1)
            for k in range(1, len(q)):
                wk *= w
                term = abs(q[k]) * wk
                hi += term
                if k % 2:
                    lo -= term
                elif q[k] < 0:
                    lo -= term
                    hi -= term
            enc = Interval(lo, hi)
            result = enc if result is None else result.hull(enc)
        return result


class PiecewisePoly:
    """Continuous function given by one polynomial on each gap between breakpoints.

    Piece ``k`` covers ``[breaks[k-1], breaks[k]]`` with the outer pieces
    unbounded; neighbouring pieces agree at the shared breakpoint.
    """

    __slots__ = ("breaks", "polys", "_fbreaks")

    def __init__(self, breaks, polys):
        breaks = tuple(to_fraction(b) for b in breaks)
        polys = tuple(polys)
        if len(polys) != len(breaks) + 1:
            raise ValueError("need exactly one more polynomial than breakpoints")
        if any(a >= b for a, b in zip(breaks, breaks[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        self.breaks = breaks
        self.polys = polys
        self._fbreaks = np.array([float(b) for b in breaks])

    @classmethod
    def from_poly(cls, poly):
        return cls((), (poly,))

    def piece_at(self, x):
        if _is_exact(x):
            return bisect_right(self.breaks, x)
        return bisect_right(self._fbreaks, float(x))

    def __call__(self, x):
        if isinstance(x, np.ndarray):
            if not self.breaks:
                return self.polys[0](x)
            idx = np.searchsorted(self._fbreaks, x, side="right")
            out = np.empty_like(x, dtype=float)
            for k in np.unique(idx):
                mask = idx == k
                out[mask] = self.polys[k](x[mask])
            return out
        return self.polys[self.piece_at(x)](x)

    def deriv(self):
        return PiecewisePoly(self.breaks, [p.deriv() for p in self.polys])

    def _merge(self, other, op):
        breaks = sorted(set(self.breaks) | set(other.breaks))
        polys = []
        for k in range(len(breaks) + 1):
            if not breaks:
                probe = Fraction(0)
            elif k == 0:
                probe = breaks[0] - 1
            elif k == len(breaks):
                probe = breaks[-1] + 1
            else:
                probe = (breaks[k - 1] + breaks[k]) / 2
            polys.append(op(self.polys[self.piece_at(probe)], other.polys[other.piece_at(probe)]))
        return PiecewisePoly(breaks, polys)

    def __add__(self, other):
        return self._merge(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self._merge(other, lambda a, b: a - b)

    def scaled(self, c):
        return PiecewisePoly(self.breaks, [p * c for p in self.polys])

    def pieces_over(self, interval):
        """Yield ``(sub_interval, poly)`` pairs covering ``interval``."""
        edges = [interval.lo] + [b for b in self.breaks if interval.lo < b < interval.hi] + [interval.hi]
        for a, b in zip(edges, edges[1:]):
            yield Interval(a, b), self.polys[self.piece_at((a + b) / 2)]
        if interval.lo == interval.hi:
            yield interval, self.polys[self.piece_at(interval.lo)]

    def enclose(self, interval, pieces=16):
        """Rigorous range enclosure over ``interval``."""
        result = None
        for part, poly in self.pieces_over(interval):
            enc = poly.enclose(part, pieces if part.width > 0 else 1)
            result = enc if result is None else result.hull(enc)
        return result

    def is_zero(self):
        return all(p.is_zero() for p in self.polys)


def certify_range(pp, interval, accept, max_depth=14, pieces=4):
    """Adaptively check ``accept(enclosure)`` over every part of ``interval``.

    Returns ``(ok, enclosure_hull)``; ``ok`` is False only when some part still
    fails after ``max_depth`` bisections.
    """
    stack = [(interval, 0)]
    hull = None
    ok = True
    while stack:
        part, depth = stack.pop()
        enc = pp.enclose(part, pieces)
        if accept(enc):
            hull = enc if hull is None else hull.hull(enc)
            continue
        if depth >= max_depth or part.width == 0:
            ok = False
            hull = enc if hull is None else hull.hull(enc)
            continue
        mid = part.mid
        stack.append((Interval(mid, part.hi), depth + 1))
        stack.append((Interval(part.lo, mid), depth + 1))
    return ok, hull


def sup_abs(pp, interval, rel_tol=Fraction(1, 10**6), max_depth=12):
    """Certified upper bound for ``sup |pp|`` over ``interval``.

    Refines by bisection until the enclosure is within ``rel_tol`` of the best
    lower witness found at interval midpoints.
    """
    if pp.is_zero():
        return Fraction(0)
    best_lower = max(abs(pp(interval.lo)), abs(pp(interval.hi)))
    stack = [(interval, 0)]
    upper = Fraction(0)
    while stack:
        part, depth = stack.pop()
        enc = pp.enclose(part, 2)
        bound = enc.mag()
        best_lower = max(best_lower, abs(pp(part.mid)))
        if bound <= best_lower * (1 + rel_tol) or depth >= max_depth or part.width == 0:
            upper = max(upper, bound)
            continue
        mid = part.mid
        stack.append((Interval(part.lo, mid), depth + 1))
        stack.append((Interval(mid, part.hi), depth + 1))
    return round_up(upper, 64)


def mp_bisect(f, lo, hi, tol, max_iter=400):
    """Bisect a decreasing-through-zero function; returns ``(lo, hi)`` with f(lo) > 0 >= f(hi)."""
    flo = f(lo)
    fhi = f(hi)
    if flo <= 0 or fhi > 0:
        from .errors import BracketError

        raise BracketError(f"no sign change on [{lo}, {hi}]")
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = (lo + hi) / 2
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return lo, hi
