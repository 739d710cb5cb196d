"""Contracting maps on an interval, IFS containers and their basic invariants.

A map is an affine base ``r*x + t`` plus optional closed-form polynomial
perturbations (bumps or global polynomials).  With no perturbations it is an
exact similarity and every computation on it is done in rational arithmetic.
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
import math

import mpmath
import numpy as np

from .errors import ConvergenceError, ValidationError
from .numerics import (
    Interval,
    PiecewisePoly,
    Poly,
    certify_range,
    fraction_str,
    round_down,
    round_up,
    sup_abs,
    to_fraction,
    to_mpf,
)
from .symbolic import InfiniteWordSpec, make_word

HULL_BITS = 200


@dataclass(frozen=True)
class AffineMap:
    """The similarity ``x -> r*x + t`` with rational coefficients."""

    r: Fraction
    t: Fraction

    def __call__(self, x):
        if isinstance(x, (Fraction, int)):
            return self.r * x + self.t
        if isinstance(x, mpmath.mpf):
            return to_mpf(self.r) * x + to_mpf(self.t)
        return float(self.r) * x + float(self.t)

    def deriv(self, x=None):
        return self.r

    def then(self, inner):
        """``self o inner``."""
        return AffineMap(self.r * inner.r, self.r * inner.t + self.t)

    def fixed_point(self):
        return self.t / (1 - self.r)

    def inverse(self):
        return AffineMap(1 / self.r, -self.t / self.r)

    @property
    def key(self):
        return (self.r, self.t)


IDENTITY = AffineMap(Fraction(1), Fraction(0))


@dataclass(frozen=True)
class Bump:
    """``eps*(x-(y-delta))^4*(x-(y+delta))^4`` on ``[y-delta, y+delta]``, zero elsewhere."""

    delta: Fraction
    y: Fraction
    eps: Fraction

    def __post_init__(self):
        for name in ("delta", "y", "eps"):
            object.__setattr__(self, name, to_fraction(getattr(self, name)))
        if self.delta <= 0:
            raise ValidationError("bump width delta must be positive")

    def poly(self):
        left = Poly([-(self.y - self.delta), 1]) ** 4
        right = Poly([-(self.y + self.delta), 1]) ** 4
        return left * right * self.eps

    def as_piecewise(self):
        return PiecewisePoly((self.y - self.delta, self.y + self.delta), (Poly(), self.poly(), Poly()))

    def sup_norm(self):
        return self.eps * self.delta**8

    def deriv_bound(self):
        return 8 * abs(self.eps) * self.delta**7

    def second_deriv_bound(self):
        return 54 * abs(self.eps) * self.delta**6

    def scaled(self, c):
        return Bump(self.delta, self.y, self.eps * to_fraction(c))

    def is_zero(self):
        return self.eps == 0

    def to_dict(self):
        return {"kind": "bump", "delta": fraction_str(self.delta), "y": fraction_str(self.y), "eps": fraction_str(self.eps)}

    def __call__(self, x):
        return self.as_piecewise()(x)


def bump(delta, y, eps):
    """The bump perturbation of width ``delta`` centred at ``y`` with height factor ``eps``."""
    return Bump(delta, y, eps)


@dataclass(frozen=True)
class PolyTerm:
    """A global polynomial perturbation (coefficients lowest degree first)."""

    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", Poly(self.coeffs).coeffs)

    def as_piecewise(self):
        return PiecewisePoly.from_poly(Poly(self.coeffs))

    def scaled(self, c):
        return PolyTerm(tuple(to_fraction(c) * a for a in self.coeffs))

    def is_zero(self):
        return not self.coeffs

    def to_dict(self):
        return {"kind": "poly", "coeffs": [fraction_str(c) for c in self.coeffs]}


def perturbation_from_dict(data):
    kind = data.get("kind")
    if kind == "bump":
        return Bump(to_fraction(data["delta"]), to_fraction(data["y"]), to_fraction(data["eps"]))
    if kind == "poly":
        return PolyTerm(tuple(to_fraction(c) for c in data["coeffs"]))
    raise ValidationError(f"unknown perturbation kind {kind!r}")


class IfsMap:
    """One map of an IFS: affine base plus polynomial perturbations."""

    def __init__(self, r, t, perturbations=()):
        self.r = to_fraction(r)
        self.t = to_fraction(t)
        if self.r == 0 or abs(self.r) >= 1:
            raise ValidationError(f"base ratio {self.r} must satisfy 0 < |r| < 1")
        self.perturbations = tuple(p for p in perturbations if not p.is_zero())
        self.base = AffineMap(self.r, self.t)
        f = PiecewisePoly.from_poly(Poly.linear(self.r, self.t))
        for p in self.perturbations:
            f = f + p.as_piecewise()
        self.f = f
        self.df = f.deriv()
        self.d2f = self.df.deriv()
        self._rf = float(self.r)
        self._tf = float(self.t)

    @property
    def is_affine(self):
        return not self.perturbations

    def __call__(self, x):
        if self.is_affine:
            if isinstance(x, (Fraction, int)):
                return self.r * x + self.t
            if isinstance(x, mpmath.mpf):
                return to_mpf(self.r) * x + to_mpf(self.t)
            return self._rf * x + self._tf
        return self.f(x)

    def deriv(self, x):
        if self.is_affine:
            if isinstance(x, (Fraction, int)):
                return self.r
            if isinstance(x, mpmath.mpf):
                return to_mpf(self.r)
            return self._rf + 0.0 * x
        return self.df(x)

    def second_deriv(self, x):
        return self.d2f(x)

    def image(self, interval, bits=None):
        """Image of an interval (maps are monotone on the ambient interval)."""
        a = self(interval.lo)
        b = self(interval.hi)
        lo, hi = (a, b) if a <= b else (b, a)
        if bits is not None:
            lo, hi = round_down(lo, bits), round_up(hi, bits)
        return Interval(lo, hi)

    def translated(self, lam):
        return IfsMap(self.r, self.t + to_fraction(lam), self.perturbations)

    def scaled(self, c):
        """``c * self`` as a map (used for convex combinations)."""
        c = to_fraction(c)
        return c * self.r, c * self.t, tuple(p.scaled(c) for p in self.perturbations)

    def to_dict(self):
        out = {"r": fraction_str(self.r), "t": fraction_str(self.t)}
        if self.perturbations:
            out["perturbations"] = [p.to_dict() for p in self.perturbations]
        return out

    @classmethod
    def from_dict(cls, data):
        if "r" not in data or "t" not in data:
            raise ValidationError("each map needs fields 'r' and 't'")
        perts = tuple(perturbation_from_dict(p) for p in data.get("perturbations", ()))
        return cls(to_fraction(data["r"]), to_fraction(data["t"]), perts)

    def __repr__(self):
        extra = f", {len(self.perturbations)} perturbation(s)" if self.perturbations else ""
        return f"IfsMap({fraction_str(self.r)}*x + {fraction_str(self.t)}{extra})"


@dataclass(frozen=True)
class Hull:
    """Convex hull ``[lo, hi]`` of the attractor.

    For affine systems the endpoints are exact and ``lo_code``/``hi_code`` are
    eventually periodic codings with ``Pi(code) = endpoint``.  Otherwise the
    interval is a certified outer enclosure within ``error`` of the true hull.
    """

    lo: Fraction
    hi: Fraction
    exact: bool
    lo_code: InfiniteWordSpec = None
    hi_code: InfiniteWordSpec = None
    error: Fraction = Fraction(0)

    @property
    def diameter(self):
        return self.hi - self.lo

    @property
    def interval(self):
        return Interval(self.lo, self.hi)

    @property
    def midpoint(self):
        return (self.lo + self.hi) / 2


class Ifs:
    """An ordered list of maps with ambient interval ``X`` and bounds ``beta <= |S'| <= rho``."""

    def __init__(self, maps, ambient=None, beta=None, rho=None, validate=True):
        built = []
        for m in maps:
            if isinstance(m, IfsMap):
                built.append(m)
            elif isinstance(m, dict):
                built.append(IfsMap.from_dict(m))
            else:
                built.append(IfsMap(*m))
        if len(built) < 2:
            raise ValidationError("an IFS needs at least two maps")
        self.maps = tuple(built)
        self.m = len(built)
        self.is_affine = all(mp.is_affine for mp in built)
        if ambient is None:
            if not self.is_affine:
                raise ValidationError("perturbed systems need an explicit ambient interval")
            h = _affine_hull(self.maps)
            ambient = (h.lo, h.hi) if h.lo < h.hi else (h.lo - 1, h.hi + 1)
        lo, hi = (to_fraction(a) for a in ambient)
        if lo >= hi:
            raise ValidationError("ambient interval must have positive length")
        self.ambient = Interval(lo, hi)
        sups = self._sup_values = self._sup_derivatives()
        infs = self._inf_values = self._inf_derivatives()
        self.rho = to_fraction(rho) if rho is not None else max(sups)
        self.beta = to_fraction(beta) if beta is not None else min(infs) / 2
        if not (0 < self.beta < self.rho < 1):
            raise ValidationError(f"need 0 < beta < rho < 1, got beta={self.beta}, rho={self.rho}")
        if validate:
            self._validate()

    # -- construction helpers -------------------------------------------------

    def _sup_derivatives(self):
        out = []
        for mp in self.maps:
            if mp.is_affine:
                out.append(abs(mp.r))
            else:
                out.append(sup_abs(mp.df, self.ambient))
        return tuple(out)

    def _inf_derivatives(self):
        out = []
        for mp in self.maps:
            if mp.is_affine:
                out.append(abs(mp.r))
            else:
                out.append(max(mp.df.enclose(self.ambient, 64).mig(), Fraction(0)))
        return tuple(out)

    def _validate(self):
        X = self.ambient
        beta, rho = self.beta, self.rho
        for idx, mp in enumerate(self.maps, start=1):
            if mp.is_affine:
                if not beta <= abs(mp.r) <= rho:
                    raise ValidationError(f"map {idx}: |r| = {mp.r} outside [beta, rho] = [{beta}, {rho}]")
            else:
                def accept(enc):
                    return (beta <= enc.lo and enc.hi <= rho) or (-rho <= enc.lo and enc.hi <= -beta)

                ok, _ = certify_range(mp.df, X, accept)
                if not ok:
                    raise ValidationError(f"map {idx}: derivative bounds beta <= |S'| <= rho not certified on X")
            img = mp.image(X)
            if not X.contains(img):
                raise ValidationError(f"map {idx}: S(X) = [{img.lo}, {img.hi}] is not inside X")

    # -- basic accessors --------------------------------------------------------

    def sup_derivatives(self):
        """Certified ``sup_X |S_i'|`` for each map (exact for affine maps)."""
        return self._sup_values

    def inf_derivatives(self):
        """Certified lower bounds for ``inf_X |S_i'|``."""
        return self._inf_values

    def ratios(self):
        if not self.is_affine:
            raise ValidationError("ratios are only defined for affine systems")
        return tuple(mp.r for mp in self.maps)

    def affine_maps(self):
        return tuple(mp.base for mp in self.maps)

    @cached_property
    def hull(self):
        return hull(self)

    def translated(self, lams, ambient=None):
        lams = [to_fraction(v) for v in lams]
        if len(lams) != self.m:
            raise ValidationError("need one translation per map")
        return Ifs(
            [mp.translated(v) for mp, v in zip(self.maps, lams)],
            ambient=ambient or (self.ambient.lo, self.ambient.hi),
            beta=self.beta,
            rho=self.rho,
        )

    def with_bounds(self, beta=None, rho=None, ambient=None):
        amb = ambient or (self.ambient.lo, self.ambient.hi)
        return Ifs(self.maps, amb, beta if beta is not None else self.beta, rho if rho is not None else self.rho)

    def to_dict(self):
        return {
            "ambient": [fraction_str(self.ambient.lo), fraction_str(self.ambient.hi)],
            "beta": fraction_str(self.beta),
            "rho": fraction_str(self.rho),
            "maps": [mp.to_dict() for mp in self.maps],
        }

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ValidationError("IFS description must be a JSON object")
        if "maps" not in data or not isinstance(data["maps"], list):
            raise ValidationError("field 'maps' must be a list of maps")
        maps = []
        for k, entry in enumerate(data["maps"], start=1):
            if not isinstance(entry, dict):
                raise ValidationError(f"maps[{k}] must be an object")
            try:
                maps.append(IfsMap.from_dict(entry))
            except (ValueError, ZeroDivisionError, KeyError, TypeError) as exc:
                raise ValidationError(f"maps[{k}]: {exc}") from exc
        ambient = data.get("ambient")
        try:
            return cls(maps, ambient=ambient, beta=data.get("beta"), rho=data.get("rho"))
        except (ValueError, ZeroDivisionError, TypeError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(str(exc)) from exc

    def __repr__(self):
        return f"Ifs({list(self.maps)}, X=[{self.ambient.lo}, {self.ambient.hi}], beta={self.beta}, rho={self.rho})"


def affine_ifs(pairs, **kwargs):
    """Shorthand: ``affine_ifs([("1/3", 0), ("1/3", "2/3")])``."""
    return Ifs([IfsMap(r, t) for r, t in pairs], **kwargs)


# -- composition ------------------------------------------------------------------


class Composition:
    """Evaluator for ``S_w = S_{w_1} o ... o S_{w_n}`` of a perturbed system."""

    def __init__(self, maps):
        self.maps = tuple(maps)

    def __call__(self, x):
        for mp in reversed(self.maps):
            x = mp(x)
        return x

    def deriv(self, x):
        d = None
        for mp in reversed(self.maps):
            dx = mp.deriv(x)
            d = dx if d is None else d * dx
            x = mp(x)
        if d is None:
            return x * 0 + 1
        return d

    def value_and_deriv(self, x):
        d = 1
        for mp in reversed(self.maps):
            d = d * mp.deriv(x)
            x = mp(x)
        return x, d

    def image(self, interval, bits=None):
        for mp in reversed(self.maps):
            interval = mp.image(interval, bits)
        return interval


def compose(ifs, word):
    """``S_w`` as an exact :class:`AffineMap` (affine systems) or a :class:`Composition`."""
    word = make_word(word, ifs.m)
    if ifs.is_affine or all(ifs.maps[s - 1].is_affine for s in word):
        out = IDENTITY
        for s in word:
            out = out.then(ifs.maps[s - 1].base)
        return out
    return Composition([ifs.maps[s - 1] for s in word])


def compose_affine(maps, word):
    out = IDENTITY
    for s in word:
        out = out.then(maps[s - 1])
    return out


# -- hull -------------------------------------------------------------------------------


def _affine_hull(maps):
    """Exact hull by solving the extremal fixed-point equations.

    Each endpoint is the image of an endpoint under one map; enumerating the
    ``4 m^2`` choices and keeping the narrowest invariant candidate gives the hull.
    """
    best = None
    bases = [mp.base for mp in maps]
    m = len(bases)
    for i in range(m):
        for j in range(m):
            ri, ti = bases[i].r, bases[i].t
            rj, tj = bases[j].r, bases[j].t
            for ea in ("lo", "hi"):
                for eb in ("lo", "hi"):
                    # lo = ri * e_a + ti ; hi = rj * e_b + tj
                    if ea == "lo" and eb == "hi":
                        lo = ti / (1 - ri)
                        hi = tj / (1 - rj)
                    elif ea == "lo" and eb == "lo":
                        lo = ti / (1 - ri)
                        hi = rj * lo + tj
                    elif ea == "hi" and eb == "hi":
                        hi = tj / (1 - rj)
                        lo = ri * hi + ti
                    else:
                        det = 1 - ri * rj
                        lo = (ti + ri * tj) / det
                        hi = (tj + rj * ti) / det
                    if lo > hi:
                        continue
                    ok = True
                    for b in bases:
                        u, v = b(lo), b(hi)
                        if min(u, v) < lo or max(u, v) > hi:
                            ok = False
                            break
                    if not ok:
                        continue
                    if best is None or hi - lo < best[1] - best[0]:
                        best = (lo, hi, i + 1, ea, j + 1, eb)
    lo, hi, i, ea, j, eb = best
    if ea == "lo":
        lo_code = InfiniteWordSpec((), (i,))
    elif eb == "hi":
        lo_code = InfiniteWordSpec((i,), (j,))
    else:
        lo_code = InfiniteWordSpec((), (i, j))
    if eb == "hi":
        hi_code = InfiniteWordSpec((), (j,))
    elif ea == "lo":
        hi_code = InfiniteWordSpec((j,), (i,))
    else:
        hi_code = InfiniteWordSpec((), (j, i))
    return Hull(lo, hi, True, lo_code, hi_code)


def hull(ifs, max_iter=100000):
    """Convex hull of the attractor.

    Exact for affine systems; otherwise the interval map ``J -> hull(U S_i(J))``
    is iterated from ``X`` with outward rounding, so the result always contains
    the attractor and is within ``1e-14 * diam(X)`` of the true hull.
    """
    if ifs.is_affine:
        return _affine_hull(ifs.maps)
    J = ifs.ambient
    tol = ifs.ambient.width * Fraction(1, 10**15)
    for _ in range(max_iter):
        images = [mp.image(J, HULL_BITS) for mp in ifs.maps]
        new = Interval(min(im.lo for im in images), max(im.hi for im in images))
        new = Interval(max(new.lo, J.lo), min(new.hi, J.hi))
        shrink = J.width - new.width
        J = new
        if shrink <= tol * (1 - ifs.rho):
            err = shrink * ifs.rho / (1 - ifs.rho) + tol
            return Hull(J.lo, J.hi, False, error=err)
    raise ConvergenceError("hull iteration did not converge")


def attractor_is_singleton(ifs):
    h = ifs.hull
    return h.exact and h.lo == h.hi


# -- natural projection -------------------------------------------------------------------


@dataclass(frozen=True)
class Projection:
    value: object
    error: object

    @property
    def exact(self):
        return self.error == 0


def project(ifs, w, n=None):
    """``Pi(w)`` with an error bound.

    When every map used by the period is affine the value is exact: the fixed
    point of the period composition pushed through the preperiod maps.
    Otherwise ``S_{w|n}`` is applied to the hull midpoint and the error is
    ``rho^n * diam(hull)``.
    """
    if not isinstance(w, InfiniteWordSpec):
        raise TypeError("project expects an InfiniteWordSpec")
    if max(w.preperiod + w.period) > ifs.m:
        raise ValidationError("word uses a symbol outside the alphabet")
    if all(ifs.maps[s - 1].is_affine for s in w.period) and n is None:
        per = compose_affine([mp.base for mp in ifs.maps], w.period)
        x = per.fixed_point()
        for s in reversed(w.preperiod):
            x = ifs.maps[s - 1](x)
        return Projection(x, Fraction(0))
    h = ifs.hull
    if n is None:
        n = 1
        while float(ifs.rho) ** n * float(h.diameter) > 1e-17 * float(max(h.diameter, 1)):
            n += 1
    x = float(h.midpoint)
    for k in range(n, 0, -1):
        x = ifs.maps[w.symbol(k) - 1](x)
    err = float(ifs.rho) ** n * float(h.diameter + 2 * h.error)
    return Projection(x, err)


def project_interval(ifs, w, bits=HULL_BITS, max_iter=10000):
    """Certified enclosure of ``Pi(w)`` for an eventually periodic word."""
    p = project(ifs, w) if all(ifs.maps[s - 1].is_affine for s in w.period) else None
    if p is not None:
        return Interval(p.value)
    per = Composition([ifs.maps[s - 1] for s in w.period])
    h = ifs.hull
    J = Interval(h.lo, h.hi)
    target = Fraction(1, 2 ** (bits - 16)) * max(h.diameter, Fraction(1))
    for _ in range(max_iter):
        new = per.image(J, bits)
        new = Interval(max(new.lo, J.lo), min(new.hi, J.hi))
        if new.width <= target or new == J:
            J = new
            break
        J = new
    for s in reversed(w.preperiod):
        J = ifs.maps[s - 1].image(J, bits)
    return J


# -- distortion -----------------------------------------------------------------------


def distortion_constant(ifs):
    """Certified bounded-distortion constant ``C0`` (exactly 1 for affine systems)."""
    if ifs.is_affine:
        return Fraction(1)
    X = ifs.ambient
    lip = Fraction(0)
    for mp in ifs.maps:
        if mp.is_affine:
            continue
        second = sup_abs(mp.d2f, X)
        lower = mp.df.enclose(X, 64).mig()
        if lower <= 0:
            lower = ifs.beta
        lip = max(lip, second / lower)
    exponent = round_up(lip * X.width / (1 - ifs.rho), 60)
    return math.nextafter(math.nextafter(math.exp(float(exponent)) * (1 + 2**-50), math.inf), math.inf)


def tau_bound(ifs):
    """``tau = 1 + (1 - rho) / (2 rho C0)``; exact rational for affine systems."""
    c0 = distortion_constant(ifs)
    if c0 == 1:
        return 1 + (1 - ifs.rho) / (2 * ifs.rho)
    return math.nextafter(1 + float(1 - ifs.rho) / (2 * float(ifs.rho) * c0), 0.0)


def cylinder_diameter_ratio(ifs, word):
    """``diam(S_{w^-}(X)) / diam(S_w(X))`` (exact for affine systems)."""
    X = ifs.ambient
    outer = compose(ifs, word[:-1])
    inner = compose(ifs, word)
    if isinstance(inner, AffineMap):
        return abs(outer.r) / abs(inner.r)
    if isinstance(outer, Composition):
        a = outer.image(X, HULL_BITS)
    else:
        a = Interval(min(outer(X.lo), outer(X.hi)), max(outer(X.lo), outer(X.hi)))
    b = inner.image(X, HULL_BITS)
    return a.width / b.width


# -- metric between systems ----------------------------------------------------------


def ifs_distance(a, b):
    """Certified upper bound on the distance between two systems on the same ``X``.

    Per map the value, derivative and derivative-Lipschitz (second derivative)
    sup-norm differences are added; the maximum over maps is returned.
    """
    if a.m != b.m:
        raise ValidationError("systems have different numbers of maps")
    X = a.ambient
    worst = Fraction(0)
    for ma, mb in zip(a.maps, b.maps):
        diff = ma.f - mb.f
        total = sup_abs(diff, X) + sup_abs(diff.deriv(), X) + sup_abs(diff.deriv().deriv(), X)
        worst = max(worst, total)
    return worst


def convex_combination(g, gt, alpha, validate=True):
    """The system ``alpha*G + (1-alpha)*G~`` (maps combined pointwise)."""
    alpha = to_fraction(alpha)
    maps = []
    for ma, mb in zip(g.maps, gt.maps):
        ra, ta, pa = ma.scaled(alpha)
        rb, tb, pb = mb.scaled(1 - alpha)
        maps.append(IfsMap(ra + rb, ta + tb, pa + pb))
    return Ifs(maps, (g.ambient.lo, g.ambient.hi), g.beta, g.rho, validate=validate)


def float_array_eval(mp, xs):
    """Vectorised value and derivative of one map on a numpy array."""
    xs = np.asarray(xs, dtype=float)
    if mp.is_affine:
        return mp._rf * xs + mp._tf, np.full_like(xs, mp._rf)
    return mp.f(xs), mp.df(xs)
