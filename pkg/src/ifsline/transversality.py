"""Translation families, projection gradients and the pairwise transversality bound."""

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import PreconditionError, ValidationError
from .maps import Ifs, compose, project
from .numerics import fraction_str, to_fraction
from .symbolic import InfiniteWordSpec

DEFAULT_DEPTH = 64


class TranslationFamily:
    """``S^lam_i(x) = S_i(x) + lam_i`` for ``lam`` in a box around ``center``.

    Every parameter in the box must keep each image inside the ambient
    interval; the check is done on the box corners, which suffices because a
    translation moves the image monotonically.
    """

    def __init__(self, base, center=None, radius=0, lam=None):
        self.base = base
        m = base.m
        self.center = tuple(to_fraction(c) for c in (center if center is not None else [0] * m))
        self.radius = to_fraction(radius)
        if len(self.center) != m:
            raise ValidationError("center needs one coordinate per map")
        if self.radius < 0:
            raise ValidationError("radius must be non-negative")
        self.lam = tuple(to_fraction(v) for v in lam) if lam is not None else self.center
        if len(self.lam) != m:
            raise ValidationError("lambda needs one coordinate per map")
        if any(abs(v - c) > self.radius for v, c in zip(self.lam, self.center)):
            raise ValidationError("lambda lies outside the parameter box")
        X = base.ambient
        for idx, (mp, c) in enumerate(zip(base.maps, self.center), start=1):
            img = mp.image(X)
            if img.lo + c - self.radius < X.lo or img.hi + c + self.radius > X.hi:
                raise ValidationError(f"map {idx}: translated image leaves X for some lambda in the box")

    @property
    def m(self):
        return self.base.m

    def at(self, lam):
        return TranslationFamily(self.base, self.center, self.radius, lam)

    def system(self, lam=None):
        """The translated system at ``lam`` (default: the current parameter)."""
        lam = self.lam if lam is None else tuple(to_fraction(v) for v in lam)
        return Ifs(
            [mp.translated(v) for mp, v in zip(self.base.maps, lam)],
            ambient=(self.base.ambient.lo, self.base.ambient.hi),
            beta=self.base.beta,
            rho=self.base.rho,
        )

    def to_dict(self):
        out = self.base.to_dict()
        out["family"] = {"center": [fraction_str(c) for c in self.center], "radius": fraction_str(self.radius)}
        if self.lam != self.center:
            out["family"]["lambda"] = [fraction_str(v) for v in self.lam]
        return out

    @classmethod
    def from_dict(cls, data):
        base = Ifs.from_dict(data)
        fam = data.get("family", {})
        if not isinstance(fam, dict):
            raise ValidationError("field 'family' must be an object")
        return cls(base, fam.get("center"), fam.get("radius", 0), fam.get("lambda"))

    def __repr__(self):
        return f"TranslationFamily({self.base!r}, center={self.center}, radius={self.radius})"


# -- Lemma-1 style certificate --------------------------------------------------------------------


@dataclass(frozen=True)
class TransversalityCertificate:
    """Pair bounds ``1 - rho*_i - rho*_j`` and their minimum.

    ``zeta`` is half the minimum; the gradient half of the transversality
    condition then holds for every word pair with distinct first symbols.
    The closeness clause over all infinite words is not verified.
    """

    pair_bounds: dict
    global_bound: Fraction
    zeta: Fraction
    rho_star: tuple = field(default=())

    def to_dict(self):
        return {
            "pair_bounds": [[i, j, fraction_str(b)] for (i, j), b in sorted(self.pair_bounds.items())],
            "global": fraction_str(self.global_bound),
            "zeta": fraction_str(self.zeta),
            "rho_star": [fraction_str(r) for r in self.rho_star],
            "note": "gradient bound only; the closeness clause is not checked over all word pairs",
        }


def rho_star(family):
    """``sup_X |S_i'|`` for each map (exact for affine maps, certified otherwise)."""
    return family.base.sup_derivatives()


def lemma1_check(family):
    """Certificate when ``rho*_i + rho*_j < 1`` for all ``i != j``, else ``None``."""
    rs = rho_star(family)
    bounds = {}
    for i in range(len(rs)):
        for j in range(i + 1, len(rs)):
            bounds[(i + 1, j + 1)] = 1 - rs[i] - rs[j]
    g = min(bounds.values())
    if g <= 0:
        return None
    return TransversalityCertificate(bounds, g, g / 2, tuple(rs))


# -- projection gradients -----------------------------------------------------------------------


def projection_gradient(family, w, n=DEFAULT_DEPTH):
    """``d Pi_lam(w) / d lam_z`` for ``z = 1..m`` with a per-coordinate tail bound.

    When every map is affine the series is geometric along the period and the
    exact sum is returned with tail ``0``.  Otherwise the series is cut after
    ``n`` terms, each factor ``S'_{w_k}`` evaluated at ``Pi(sigma^k w)``, and the
    tail bound is ``rho^n / (1 - rho)``.
    """
    if not isinstance(w, InfiniteWordSpec):
        raise TypeError("w must be an InfiniteWordSpec")
    ifs = family.system()
    m = ifs.m
    if w.alphabet_max() > m:
        raise ValidationError("word uses a symbol outside the alphabet")
    if ifs.is_affine:
        grad = [Fraction(0)] * m
        r = Fraction(1)
        for s in w.preperiod:
            grad[s - 1] += r
            r *= ifs.maps[s - 1].r
        r_per = compose(ifs, w.period).r
        scale = r / (1 - r_per)
        q = Fraction(1)
        for s in w.period:
            grad[s - 1] += scale * q
            q *= ifs.maps[s - 1].r
        return tuple(grad), Fraction(0)
    if n < 1:
        raise ValueError("n must be at least 1")
    grad = [0.0] * m
    prod = 1.0
    for ell in range(1, n + 1):
        s = w.symbol(ell)
        grad[s - 1] += prod
        x = project(ifs, w.shift(ell)).value
        prod *= float(ifs.maps[s - 1].deriv(float(x)))
    rho = float(ifs.rho)
    return tuple(grad), rho**n / (1 - rho)


@dataclass(frozen=True)
class EzValues:
    """``E_1, E_2`` for a word pair, their tail bracket and the chosen index."""

    E1: object
    E2: object
    tail: object
    p: int
    symbols: tuple
    rho: tuple
    convex: object
    weighted: object
    chain_holds: bool

    @property
    def chosen(self):
        return self.E1 if self.p == self.symbols[0] else self.E2

    def to_dict(self):
        f = lambda x: fraction_str(x) if isinstance(x, Fraction) else x
        return {
            "E1": f(self.E1),
            "E2": f(self.E2),
            "tail": f(self.tail),
            "p": self.p,
            "symbols": list(self.symbols),
            "weighted_sum": f(self.weighted),
            "convex_combination": f(self.convex),
            "chain_holds": self.chain_holds,
        }


def ez_values(family, i, j, n=DEFAULT_DEPTH):
    """``E_1 = d/d lam_{i1} (Pi(i) - Pi(j)) - 1`` and ``E_2 = d/d lam_{j1} (...) + 1``.

    Also checks the chain ``convex < weighted <= rho*_{i1} + rho*_{j1} < 1``,
    where ``weighted = (1-rho*_{i1})|E_1| + (1-rho*_{j1})|E_2|``, allowing the
    truncation tails.  ``p`` is the symbol whose ``|E|`` is smaller.
    """
    a, b = i.symbol(1), j.symbol(1)
    if a == b:
        raise PreconditionError("the two words must start with different symbols")
    gi, ti = projection_gradient(family, i, n)
    gj, tj = projection_gradient(family, j, n)
    e1 = gi[a - 1] - gj[a - 1] - 1
    e2 = gi[b - 1] - gj[b - 1] + 1
    tail = ti + tj
    rs = rho_star(family)
    r1, r2 = rs[a - 1], rs[b - 1]
    if not isinstance(e1, Fraction):
        r1, r2 = float(r1), float(r2)
    weighted = (1 - r1) * abs(e1) + (1 - r2) * abs(e2)
    convex = weighted / (2 - r1 - r2)
    slack = tail * (2 - r1 - r2)
    chain = (convex < weighted or weighted == 0) and weighted <= r1 + r2 + slack and r1 + r2 < 1
    p = a if abs(e1) <= abs(e2) else b
    return EzValues(e1, e2, tail, p, (a, b), (r1, r2), convex, weighted, bool(chain))


def pair_projection_difference(family, i, j, lam=None):
    """``Pi_lam(i) - Pi_lam(j)`` (exact for affine systems)."""
    ifs = family.system(lam)
    return project(ifs, i).value - project(ifs, j).value


def gradient_fd_check(family, i, j, h=Fraction(1, 10**4), n=DEFAULT_DEPTH):
    """Largest gap between the gradient and central differences of ``Pi(i) - Pi(j)``."""
    h = to_fraction(h)
    if not 0 < h < family.radius / 10:
        raise PreconditionError("need 0 < h < radius/10")
    gi, ti = projection_gradient(family, i, n)
    gj, tj = projection_gradient(family, j, n)
    worst = 0
    lam = list(family.lam)
    for z in range(family.m):
        up = list(lam)
        dn = list(lam)
        up[z] += h
        dn[z] -= h
        diff = (pair_projection_difference(family, i, j, up) - pair_projection_difference(family, i, j, dn)) / (2 * h)
        dev = abs(diff - (gi[z] - gj[z]))
        worst = max(worst, dev)
    return worst


def second_difference(family, w, z, h):
    """``Pi(lam + h e_z) - 2 Pi(lam) + Pi(lam - h e_z)`` (zero for affine families)."""
    h = to_fraction(h)
    lam = list(family.lam)
    up = list(lam)
    dn = list(lam)
    up[z - 1] += h
    dn[z - 1] -= h
    p = lambda l: project(family.system(l), w).value
    return p(up) - 2 * p(lam) + p(dn)
