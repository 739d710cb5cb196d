"""Constructive WSP-failure witnesses.

The pipeline: separate an overlapping pair of codings by a bump perturbation,
slide along the segment back to the original system until two periodic words
share a fixed point, make the log-ratio of their derivatives irrational, then
use Dirichlet approximations to build many distinct maps at a common scale.
"""

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
import math

import mpmath
import sympy

from .errors import (
    BracketError,
    DegenerateError,
    FactorizationLimitError,
    PrecisionError,
    PreconditionError,
    ResourceLimitError,
    ValidationError,
)
from .maps import (
    HULL_BITS,
    AffineMap,
    Composition,
    Ifs,
    IfsMap,
    PolyTerm,
    bump,
    compose,
    convex_combination,
    distortion_constant,
    ifs_distance,
    project_interval,
    tau_bound,
)
from .numerics import Interval, Poly, fraction_str, round_down, to_fraction, to_mpf
from .separation import phi_count
from .symbolic import DEFAULT_WORD_BUDGET, InfiniteWordSpec, make_word, words_up_to

__all__ = [
    "bump",
    "Independence",
    "IndependenceKind",
    "CommonFixedPointWitness",
    "SeparatedPerturbation",
    "InterpolationResult",
    "IrrationalizeResult",
    "HrWord",
    "WspFailureWitness",
    "perturb_separate",
    "interpolate_to_common_fixed_point",
    "irrationalize",
    "log_ratio_rationality",
    "dirichlet_pair",
    "convergents",
    "dirichlet_inequality_holds",
    "build_hr_family",
    "demonstrate_wsp_failure",
    "find_common_fixed_point",
]

FACTOR_LIMIT = 2**64
CHECK_BITS = (200, 400)


def _q(x):
    return fraction_str(x) if isinstance(x, Fraction) else x


# -- multiplicative independence ------------------------------------------------------------


class IndependenceKind(str, Enum):
    RATIONAL_RATIO = "RATIONAL_RATIO"
    IRRATIONAL_CERTIFIED = "IRRATIONAL_CERTIFIED"
    UNKNOWN = "UNKNOWN"


@dataclass(frozen=True)
class Independence:
    """Outcome of the test ``log a / log b in Q``; ``p/q`` is the ratio when rational."""

    kind: IndependenceKind
    p: int = None
    q: int = None

    def to_dict(self):
        out = {"kind": self.kind.value}
        if self.kind is IndependenceKind.RATIONAL_RATIO:
            out["p"], out["q"] = self.p, self.q
        return out

    @classmethod
    def from_dict(cls, data):
        return cls(IndependenceKind(data["kind"]), data.get("p"), data.get("q"))


def _exponents(x):
    x = to_fraction(x)
    out = {}
    for n, sign in ((x.numerator, 1), (x.denominator, -1)):
        if n >= FACTOR_LIMIT:
            raise FactorizationLimitError(f"{n} exceeds the factorization limit 2^64")
        for prime, e in sympy.factorint(n).items():
            out[prime] = out.get(prime, 0) + sign * e
    return out


def log_ratio_rationality(a, b):
    """Decide whether ``log a / log b`` is rational for rationals ``a, b`` in ``(0, 1)``.

    The ratio is rational exactly when the prime-exponent vectors of ``a`` and
    ``b`` are parallel; then ``a^q = b^p`` with ``p/q`` in lowest terms.
    """
    a, b = to_fraction(a), to_fraction(b)
    if not (0 < a < 1 and 0 < b < 1):
        raise PreconditionError("a and b must lie in (0, 1)")
    ea, eb = _exponents(a), _exponents(b)
    if set(ea) != set(eb):
        return Independence(IndependenceKind.IRRATIONAL_CERTIFIED)
    prime = next(iter(eb))
    ratio = Fraction(ea[prime], eb[prime])
    if any(Fraction(ea[p], eb[p]) != ratio for p in eb):
        return Independence(IndependenceKind.IRRATIONAL_CERTIFIED)
    return Independence(IndependenceKind.RATIONAL_RATIO, ratio.numerator, ratio.denominator)


def _independence(a, b):
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return log_ratio_rationality(a, b)
    return Independence(IndependenceKind.UNKNOWN)


# -- common fixed point witnesses ------------------------------------------------------------


@dataclass(frozen=True)
class CommonFixedPointWitness:
    """Words ``omega, tau`` whose compositions share the fixed point ``x_tilde``.

    ``a`` and ``b`` are ``|S'_omega(x~)|`` and ``|S'_tau(x~)|``.  ``exact`` is
    true when ``x_tilde``, ``a`` and ``b`` are exact rationals.
    """

    omega: tuple
    tau: tuple
    x_tilde: Fraction
    a: object
    b: object
    independence: Independence
    exact: bool = True
    residual: object = Fraction(0)

    def __post_init__(self):
        omega, tau = make_word(self.omega), make_word(self.tau)
        if not omega or not tau:
            raise ValidationError("omega and tau must be non-empty")
        if omega[0] == tau[0] or omega[-1] == tau[-1]:
            raise ValidationError("omega and tau need distinct first symbols and distinct last symbols")
        if not (0 < self.a < 1 and 0 < self.b < 1):
            raise ValidationError("derivative magnitudes a, b must lie in (0, 1)")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "tau", tau)

    @property
    def N(self):
        return max(len(self.omega), len(self.tau))

    @classmethod
    def from_ifs(cls, ifs, omega, tau, x_tilde=None):
        """Build and check a witness on ``ifs`` (``x_tilde`` defaults to the fixed point of ``S_omega``)."""
        omega, tau = make_word(omega, ifs.m), make_word(tau, ifs.m)
        if x_tilde is None:
            x_tilde = _fixed_point(ifs, omega)
            if isinstance(x_tilde, Interval):
                x_tilde = x_tilde.mid
        x_tilde = to_fraction(x_tilde)
        fo, ft = _as_map(ifs, omega), _as_map(ifs, tau)
        ro, rt = fo(x_tilde) - x_tilde, ft(x_tilde) - x_tilde
        exact = ro == 0 and rt == 0
        tol = Fraction(1, 10**13) * ifs.hull.diameter
        residual = max(abs(ro), abs(rt))
        if residual > tol:
            raise PreconditionError(f"x_tilde is not a common fixed point (residual {float(residual):.3g})")
        a, b = abs(fo.deriv(x_tilde)), abs(ft.deriv(x_tilde))
        return cls(omega, tau, x_tilde, a, b, _independence(a, b), exact, residual)

    def check(self, ifs):
        """Re-verify the fixed-point equations on ``ifs``; returns the residual."""
        again = CommonFixedPointWitness.from_ifs(ifs, self.omega, self.tau, self.x_tilde)
        if again.a != self.a or again.b != self.b:
            raise PreconditionError("recorded derivative magnitudes do not match the system")
        return again.residual

    def to_dict(self):
        return {
            "omega": list(self.omega),
            "tau": list(self.tau),
            "x_tilde": _q(self.x_tilde),
            "a": _q(self.a),
            "b": _q(self.b),
            "independence": self.independence.to_dict(),
            "exact": self.exact,
            "residual": _q(self.residual),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            tuple(data["omega"]),
            tuple(data["tau"]),
            to_fraction(data["x_tilde"]),
            to_fraction(data["a"]),
            to_fraction(data["b"]),
            Independence.from_dict(data["independence"]),
            data.get("exact", True),
            to_fraction(data.get("residual", 0)),
        )


def _as_map(ifs, word):
    """``S_word`` with exact rational evaluation (affine or polynomial pieces)."""
    f = compose(ifs, word)
    if isinstance(f, AffineMap):
        return _AffineEval(f)
    return f


class _AffineEval:
    def __init__(self, f):
        self.f = f

    def __call__(self, x):
        return self.f(x)

    def deriv(self, x):
        return self.f.r


def _fixed_point(ifs, word):
    """Exact fixed point of ``S_word`` when affine, else a certified enclosure."""
    f = compose(ifs, word)
    if isinstance(f, AffineMap):
        return f.fixed_point()
    return _fixed_point_enclosure(ifs, word)


def _fixed_point_enclosure(ifs, word, bits=HULL_BITS, max_iter=10000):
    comp = Composition([ifs.maps[s - 1] for s in word])
    J = ifs.ambient
    target = Fraction(1, 2 ** (bits - 16)) * J.width
    for _ in range(max_iter):
        new = comp.image(J, bits)
        new = Interval(max(new.lo, J.lo), min(new.hi, J.hi))
        if new.width <= target or new == J:
            return new
        J = new
    return J


def find_common_fixed_point(ifs, max_len=4, budget=DEFAULT_WORD_BUDGET, prefer_irrational=True):
    """Search word pairs up to ``max_len`` for a shared rational fixed point.

    Pairs are scanned by total length, then lexicographically; with
    ``prefer_irrational`` the first pair with a certified irrational log-ratio
    wins, otherwise (or if none exists) the first valid pair.  Returns
    ``None`` when nothing is found.
    """
    if not ifs.is_affine:
        raise PreconditionError("the rational fixed-point search needs an all-affine system")
    points = {}
    count = 0
    for w in words_up_to(ifs.m, max_len):
        count += 1
        if count > budget:
            raise ResourceLimitError("word budget exhausted in the fixed-point scan")
        f = compose(ifs, w)
        points.setdefault(f.fixed_point(), []).append((w, abs(f.r)))
    candidates = []
    for x, entries in points.items():
        for u, ru in entries:
            for v, rv in entries:
                if u[0] < v[0] and u[-1] != v[-1]:
                    candidates.append((len(u) + len(v), u, v, x, ru, rv))
    candidates.sort(key=lambda c: (c[0], c[1], c[2]))
    first = None
    for _, u, v, x, ru, rv in candidates:
        wit = CommonFixedPointWitness(u, v, x, ru, rv, log_ratio_rationality(ru, rv))
        if first is None:
            first = wit
        if not prefer_irrational or wit.independence.kind is IndependenceKind.IRRATIONAL_CERTIFIED:
            return wit
    return first


# -- separating perturbation -------------------------------------------------------------------


@dataclass(frozen=True)
class SeparatedPerturbation:
    """The perturbed system and the data of the case analysis that produced it."""

    system: Ifs
    case: str
    L: int
    N: int
    delta: Fraction
    eps: Fraction
    y: Fraction
    map_index: int
    i: InfiniteWordSpec
    j: InfiniteWordSpec
    lower_bound: Fraction
    difference: Interval
    distance: Fraction
    certified: bool

    def to_dict(self):
        return {
            "system": self.system.to_dict(),
            "case": self.case,
            "L": self.L,
            "N": self.N,
            "delta": _q(self.delta),
            "eps": _q(self.eps),
            "y": _q(self.y),
            "map_index": self.map_index,
            "i": self.i.to_dict(),
            "j": self.j.to_dict(),
            "lower_bound": _q(self.lower_bound),
            "difference": [_q(self.difference.lo), _q(self.difference.hi)],
            "distance": _q(self.distance),
            "certified": self.certified,
        }


class _Projector:
    """Exact projections for affine periods, enclosures otherwise, with a decided equality test."""

    def __init__(self, ifs):
        self.ifs = ifs
        self.cache = {}

    def __call__(self, w):
        if w not in self.cache:
            self.cache[w] = project_interval(self.ifs, w)
        return self.cache[w]

    def equal(self, u, v):
        a, b = self(u), self(v)
        if a.width == 0 and b.width == 0:
            return a.lo == b.lo
        if not a.intersects(b):
            return False
        raise PreconditionError("cannot decide whether two projections coincide")

    def gap(self, u, v):
        return self(u).distance(self(v))


def _orbit_span(w):
    return len(w.preperiod) + len(w.period) + 1


def _first_return(proj, w, target):
    """Smallest ``l >= 2`` with ``Pi(sigma^l w) = Pi(target)``, or ``None``."""
    for ell in range(2, _orbit_span(w) + 1):
        if proj.equal(w.shift(ell), target):
            return ell
    return None


def _returns(proj, w, target):
    return [n for n in range(2, _orbit_span(w) + 1) if proj.equal(w.shift(n), target)]


def _smallest(pred, start=2, cap=10**6):
    for n in range(start, cap):
        if pred(n):
            return n
    raise ValidationError("no admissible index found")


def perturb_separate(ifs, i, j, eps_tilde):
    """Add a bump to map ``i_1`` so that ``Pi(i) > Pi(j)`` afterwards.

    The bump is centred at ``y = Pi(sigma i)`` with width ``delta`` chosen by
    the four-way recurrence analysis of the orbits ``Pi(sigma^l i)`` and
    ``Pi(sigma^n j)`` around ``y``.  Requires strict derivative bounds
    ``beta < |G_k'| < rho`` and both words eventually periodic.  The result
    carries a certified enclosure of ``Pi~(i) - Pi~(j)`` and the case bound.
    """
    if not (isinstance(i, InfiniteWordSpec) and isinstance(j, InfiniteWordSpec)):
        raise PreconditionError("recurrence detection needs eventually periodic words")
    eps_tilde = to_fraction(eps_tilde)
    if eps_tilde <= 0:
        raise ValidationError("the distance budget must be positive")
    if max(i.alphabet_max(), j.alphabet_max()) > ifs.m:
        raise ValidationError("word uses a symbol outside the alphabet")
    i1 = i.symbol(1)
    if i1 == j.symbol(1):
        raise PreconditionError("the words must start with different symbols")
    sups, infs = ifs.sup_derivatives(), ifs.inf_derivatives()
    if not all(ifs.beta < lo and hi < ifs.rho for lo, hi in zip(infs, sups)):
        raise PreconditionError("need strict bounds beta < |S'| < rho; declare a larger rho or smaller beta")
    proj = _Projector(ifs)
    if not proj.equal(i, j):
        raise PreconditionError("the two words have different projections")

    rho = ifs.rho
    si = i.shift(1)
    L_ret = _first_return(proj, i, si)
    j_ret = _returns(proj, j, si)
    if L_ret is not None:
        i = InfiniteWordSpec((i1,), i.prefix(L_ret)[1:])
        si = i.shift(1)
    if j_ret:
        fix = [n for n in j_ret if j.symbol(n) == i1]
        if fix:
            j = InfiniteWordSpec((), j.prefix(fix[0] - 1))
            j_ret = _returns(proj, j, si)
            if any(j.symbol(n) == i1 for n in j_ret):
                raise DegenerateError("could not normalise the returning word")

    def dists(w, indices):
        return [proj.gap(w.shift(k), si) for k in indices if not proj.equal(w.shift(k), si)]

    if L_ret is None:
        L = _smallest(lambda n: 1 - rho - 2 * rho**n > 0)
        factor = (1 - rho - 2 * rho**L) / (1 - rho)
        if not j_ret:
            case, N = "I", 0
            gaps = dists(i, range(2, L + 1)) + dists(j, range(2, L + 1))
        else:
            case, N = "IV", 0
            gaps = dists(i, range(2, L + 1)) + dists(j, range(2, L + 1))
    else:
        L = L_ret
        N = _smallest(lambda n: Fraction(1) / (1 + rho ** (L - 1)) - rho**n / (1 - rho) > 0)
        factor = Fraction(1) / (1 + rho ** (L - 1)) - rho**N / (1 - rho)
        if not j_ret:
            case = "II"
            gaps = dists(i, range(2, L)) + dists(j, range(2, N + 1))
        else:
            case = "III"
            gaps = dists(i, range(2, L)) + dists(j, range(1, N + 1))
    if any(g == 0 for g in gaps):
        raise DegenerateError("a recurrence distance vanished")
    delta = min(gaps) / 2 if gaps else ifs.ambient.width
    y = proj(si)
    if y.width != 0:
        y_val = y.mid
    else:
        y_val = y.lo

    mp = ifs.maps[i1 - 1]
    slack = min(infs[i1 - 1] - ifs.beta, ifs.rho - sups[i1 - 1])
    eps = min(eps_tilde / (2 * (delta**8 + 8 * delta**7 + 54 * delta**6)), slack / (2 * 8 * delta**7))
    eps = _round_down_fraction(eps)
    for _ in range(200):
        new_map = IfsMap(mp.r, mp.t, mp.perturbations + (bump(delta, y_val, eps),))
        maps = list(ifs.maps)
        maps[i1 - 1] = new_map
        try:
            gt = Ifs(maps, (ifs.ambient.lo, ifs.ambient.hi), ifs.beta, ifs.rho)
            break
        except ValidationError:
            eps /= 2
    else:
        raise DegenerateError("no admissible bump height found")

    dist = ifs_distance(ifs, gt)
    lower = factor * eps * delta**8
    diff = project_interval(gt, i) - project_interval(gt, j)
    return SeparatedPerturbation(
        gt, case, L, N, delta, eps, y_val, i1, i, j, lower, diff, dist, diff.lo >= lower and dist < eps_tilde
    )


def _round_down_fraction(x, bits=64):
    """A short dyadic rational in ``(x/2, x]`` so later arithmetic stays small."""
    return round_down(x, bits) if x.denominator.bit_length() > bits else x


# -- interpolation to a common fixed point --------------------------------------------------------


@dataclass(frozen=True)
class InterpolationResult:
    """``alpha*`` and the common fixed point of ``S^alpha_omega`` and ``S^alpha_tau``."""

    alpha: Fraction
    x_tilde: Fraction
    omega: tuple
    tau: tuple
    system: Ifs
    exact: bool
    residual: Fraction
    iterations: int

    def __iter__(self):
        return iter((self.alpha, self.x_tilde))

    def witness(self):
        ifs = self.system
        if self.exact:
            return CommonFixedPointWitness.from_ifs(ifs, self.omega, self.tau, self.x_tilde)
        a = _deriv_enclosure(ifs, self.omega, self.x_tilde).mid
        b = _deriv_enclosure(ifs, self.tau, self.x_tilde).mid
        return CommonFixedPointWitness(
            self.omega, self.tau, self.x_tilde, abs(a), abs(b), Independence(IndependenceKind.UNKNOWN), False, self.residual
        )

    def to_dict(self):
        return {
            "alpha": _q(self.alpha),
            "x_tilde": _q(self.x_tilde),
            "omega": list(self.omega),
            "tau": list(self.tau),
            "exact": self.exact,
            "residual": _q(self.residual),
            "iterations": self.iterations,
            "system": self.system.to_dict(),
        }


def _deriv_enclosure(ifs, word, x, bits=HULL_BITS):
    d = Interval(1)
    pt = Interval(x)
    for s in reversed(word):
        mp = ifs.maps[s - 1]
        if mp.is_affine:
            d = d * mp.r
        else:
            d = (d * mp.df.enclose(pt)).rounded(bits)
        pt = mp.image(pt, bits)
    return d


class _Segment:
    """Fixed points of ``S^alpha_omega`` and ``S^alpha_tau`` along ``alpha*G + (1-alpha)*G~``."""

    def __init__(self, g, gt, omega, tau):
        self.g, self.gt = g, gt
        self.omega, self.tau = omega, tau
        self.affine = g.is_affine and gt.is_affine

    def system(self, alpha):
        if alpha == 1:
            return self.g
        if alpha == 0:
            return self.gt
        return convex_combination(self.g, self.gt, alpha, validate=False)

    def points(self, alpha):
        s = self.system(alpha)
        p, q = _fixed_point(s, self.omega), _fixed_point(s, self.tau)
        p = p if isinstance(p, Interval) else Interval(p)
        q = q if isinstance(q, Interval) else Interval(q)
        return p, q

    def sign(self, alpha):
        p, q = self.points(alpha)
        if p.hi < q.lo:
            return -1, p, q
        if p.lo > q.hi:
            return 1, p, q
        return 0, p, q


def _auto_words(seg_factory, g, gt, i, j, k_max, ext):
    """Pick ``omega = i|k u`` and ``tau = j|k v`` with opposite orderings at the two ends."""
    pi, pj = project_interval(gt, i), project_interval(gt, j)
    if pi.hi < pj.lo:
        lo_w, hi_w = i, j
    elif pj.hi < pi.lo:
        lo_w, hi_w = j, i
    else:
        raise BracketError("the perturbed system does not separate the two codings")
    tails = [()] + [w for w in words_up_to(g.m, ext)]
    for k in range(1, k_max + 1):
        for u in tails:
            for v in tails:
                omega = lo_w.prefix(k) + u
                tau = hi_w.prefix(k) + v
                if omega[-1] == tau[-1]:
                    continue
                seg = seg_factory(omega, tau)
                s1, _, _ = seg.sign(1)
                if s1 <= 0:
                    continue
                s0, _, _ = seg.sign(0)
                if s0 < 0:
                    return omega, tau
    raise BracketError("no word pair with a sign change found")


def interpolate_to_common_fixed_point(g, gt, omega=None, tau=None, i=None, j=None, k_max=40, ext=1, rel_tol=Fraction(1, 10**15)):
    """Bisect ``alpha`` until the fixed points of ``S^alpha_omega`` and ``S^alpha_tau`` meet.

    ``S^alpha = alpha*G + (1-alpha)*G~``.  When ``omega`` and ``tau`` are not
    given they are chosen from the codings ``i`` and ``j``: prefixes long
    enough to separate under ``G~``, extended so the order flips under ``G``.
    If the fixed points already agree at ``alpha = 0`` that is returned at once.
    """
    if g.m != gt.m:
        raise ValidationError("the two systems have different numbers of maps")
    if omega is None or tau is None:
        if i is None or j is None:
            raise PreconditionError("give omega and tau, or the codings i and j")
        omega, tau = _auto_words(lambda o, t: _Segment(g, gt, o, t), g, gt, i, j, k_max, ext)
    omega, tau = make_word(omega, g.m), make_word(tau, g.m)
    if omega[0] == tau[0] or omega[-1] == tau[-1]:
        raise ValidationError("omega and tau need distinct first symbols and distinct last symbols")
    seg = _Segment(g, gt, omega, tau)
    diam = max(g.hull.diameter, Fraction(1, 10**30))
    tol = rel_tol * diam

    s0, p0, q0 = seg.sign(Fraction(0))
    if s0 == 0:
        return _finish(seg, Fraction(0), p0, q0, 0)
    s1, p1, q1 = seg.sign(Fraction(1))
    if s1 == 0:
        return _finish(seg, Fraction(1), p1, q1, 0)
    if s0 == s1:
        raise BracketError("fixed points are ordered the same way at both ends of the segment")
    lo, hi = Fraction(0), Fraction(1)
    it = 0
    p, q = p0, q0
    while True:
        it += 1
        mid = (lo + hi) / 2
        s, p, q = seg.sign(mid)
        if s == 0 or p.hull(q).width <= tol or it > 400:
            alpha = mid
            break
        if s == s0:
            lo = mid
        else:
            hi = mid
    if seg.affine:
        exact = _polish(seg, lo, hi)
        if exact is not None:
            alpha = exact
            _, p, q = seg.sign(alpha)
    return _finish(seg, alpha, p, q, it)


def _polish(seg, lo, hi):
    """A rational root of the (rational) crossing function near ``[lo, hi]``, if one is exact."""
    mid = (lo + hi) / 2
    for bound in (10, 100, 1000, 10**4, 10**5, 10**6):
        cand = mid.limit_denominator(bound)
        if 0 <= cand <= 1 and seg.sign(cand)[0] == 0:
            return cand
    return None


def _finish(seg, alpha, p, q, iterations):
    s = seg.system(alpha)
    if p.width == 0 and q.width == 0 and p.lo == q.lo:
        return InterpolationResult(alpha, p.lo, seg.omega, seg.tau, s, True, Fraction(0), iterations)
    x = round_down(p.hull(q).mid, HULL_BITS)
    r = Fraction(0)
    for word in (seg.omega, seg.tau):
        img = Composition([s.maps[k - 1] for k in word]).image(Interval(x), HULL_BITS)
        r = max(r, abs(img.lo - x), abs(img.hi - x))
    return InterpolationResult(alpha, x, seg.omega, seg.tau, s, False, r, iterations)


# -- irrationalization ------------------------------------------------------------------------


@dataclass(frozen=True)
class IrrationalizeResult:
    """The polynomially perturbed system, its witness and the identities that were checked."""

    system: Ifs
    witness: CommonFixedPointWitness
    eps: Fraction
    L: Poly
    y: tuple
    z: tuple
    checks: dict

    def to_dict(self):
        return {
            "system": self.system.to_dict(),
            "witness": self.witness.to_dict(),
            "eps": _q(self.eps),
            "L": [fraction_str(c) for c in self.L.coeffs],
            "y": [fraction_str(v) for v in self.y],
            "z": [fraction_str(v) for v in self.z],
            "checks": dict(self.checks),
        }


def irrationalize(ifs, witness, eps=Fraction(1, 2**10), max_halvings=200):
    """Perturb by ``eps * L(x) * (x - x~)^e`` so the log-ratio of derivatives at ``x~`` becomes irrational.

    ``L`` has double roots at the orbit points ``y_p = S_{omega_p..omega_k}(x~)``
    and ``z_q = S_{tau_q..tau_l}(x~)``; the exponent ``e`` is 1 for the last map
    of ``omega`` and 2 for every other map.  ``eps`` is halved until the system
    stays admissible and the new ratio is certified irrational.
    """
    if not witness.exact:
        raise PreconditionError("irrationalize needs an exact witness")
    witness.check(ifs)
    sups, infs = ifs.sup_derivatives(), ifs.inf_derivatives()
    if not all(ifs.beta < lo and hi < ifs.rho for lo, hi in zip(infs, sups)):
        raise PreconditionError("need strict bounds beta < |S'| < rho; declare a larger rho or smaller beta")
    omega, tau, xt = witness.omega, witness.tau, witness.x_tilde
    k, l = len(omega), len(tau)
    ys = tuple(_as_map(ifs, omega[p - 1 :])(xt) for p in range(2, k + 1))
    zs = tuple(_as_map(ifs, tau[q - 1 :])(xt) for q in range(2, l + 1))
    L = Poly([1])
    for root in ys + zs:
        L = L * Poly([-root, 1]) ** 2
    Lx = L(xt)
    if Lx == 0:
        raise DegenerateError("an orbit point coincides with x~, so L(x~) = 0")
    last = omega[-1]
    lin = Poly([-xt, 1])
    eps = to_fraction(eps)
    if eps <= 0:
        raise ValidationError("eps must be positive")
    reason = "no attempt"
    for _ in range(max_halvings):
        maps = []
        for idx, mp in enumerate(ifs.maps, start=1):
            extra = L * (lin if idx == last else lin * lin) * eps
            maps.append(IfsMap(mp.r, mp.t, mp.perturbations + (PolyTerm(extra.coeffs),)))
        try:
            st = Ifs(maps, (ifs.ambient.lo, ifs.ambient.hi), ifs.beta, ifs.rho)
        except ValidationError as exc:
            reason = str(exc)
            eps /= 2
            continue
        fo, ft = _as_map(st, omega), _as_map(st, tau)
        a_new, b_new = abs(fo.deriv(xt)), abs(ft.deriv(xt))
        try:
            ind = log_ratio_rationality(a_new, b_new)
        except FactorizationLimitError:
            ind = Independence(IndependenceKind.UNKNOWN)
        if ind.kind is not IndependenceKind.IRRATIONAL_CERTIFIED:
            reason = f"ratio not certified irrational ({ind.kind.value})"
            eps /= 2
            continue
        break
    else:
        raise DegenerateError(f"no admissible eps produced a certified irrational ratio; last failure: {reason}")

    inner = omega[:-1]
    d_inner = _as_map(ifs, inner).deriv(ifs.maps[last - 1](xt)) if inner else Fraction(1)
    checks = {
        "fixed_omega": fo(xt) == xt,
        "fixed_tau": ft(xt) == xt,
        "orbit_y": all(_as_map(st, omega[p - 1 :])(xt) == ys[p - 2] for p in range(2, k + 1)),
        "orbit_z": all(_as_map(st, tau[q - 1 :])(xt) == zs[q - 2] for q in range(2, l + 1)),
        "deriv_tau": ft.deriv(xt) == _as_map(ifs, tau).deriv(xt),
        "deriv_omega": fo.deriv(xt) == _as_map(ifs, omega).deriv(xt) + eps * Lx * d_inner,
        "deriv_orbit": all(
            st.maps[s].deriv(t) == ifs.maps[s].deriv(t) for s in range(ifs.m) for t in ys + zs
        ),
        "deriv_x_tilde": all(
            st.maps[s].deriv(xt) == ifs.maps[s].deriv(xt) + (eps * Lx if s + 1 == last else 0) for s in range(ifs.m)
        ),
    }
    if not all(checks.values()):
        raise DegenerateError(f"identity check failed: {checks}")
    new = CommonFixedPointWitness(omega, tau, xt, a_new, b_new, ind, True, Fraction(0))
    return IrrationalizeResult(st, new, eps, L, ys, zs, checks)


# -- Dirichlet pairs ---------------------------------------------------------------------------


def _iv(x):
    x = to_fraction(x)
    return mpmath.iv.mpf(x.numerator) / x.denominator


def _with_iv_prec(bits, fn):
    old = mpmath.iv.prec
    mpmath.iv.prec = bits
    try:
        return fn()
    finally:
        mpmath.iv.prec = old


def _log_ratio_iv(a, b):
    return mpmath.iv.log(_iv(a)) / mpmath.iv.log(_iv(b))


def convergents(a, b, count, bits=200, max_bits=6400):
    """The first ``count`` continued-fraction convergents ``(p, q)`` of ``log a / log b``.

    Partial quotients are only accepted when the interval enclosure pins down
    the floor; otherwise the precision is doubled and the expansion restarted.
    """
    while bits <= max_bits:
        out = _with_iv_prec(bits, lambda: _cf(a, b, count))
        if out is not None:
            return out
        bits *= 2
    raise PrecisionError("continued fraction expansion needs more precision")


def _cf(a, b, count):
    x = _log_ratio_iv(a, b)
    p0, q0, p1, q1 = 0, 1, 1, 0
    out = []
    for _ in range(count):
        lo, hi = mpmath.floor(x.a), mpmath.floor(x.b)
        if lo != hi:
            return None
        c = int(lo)
        p0, q0, p1, q1 = p1, q1, c * p1 + p0, c * q1 + q0
        out.append((p1, q1))
        frac = x - c
        if 0 in frac:
            return None
        x = 1 / frac
    return out


def dirichlet_inequality_holds(a, b, i, j, bits=200):
    """Certify ``b^{1/j} < a^j / b^i < b^{-1/j}`` and ``a^j != b^i``.

    Returns ``True``/``False`` when the enclosures decide the inequalities and
    ``None`` when they are too wide.
    """
    a, b = to_fraction(a), to_fraction(b)
    if a**j == b**i:
        return False

    def run():
        lb = mpmath.iv.log(_iv(b))
        mid = j * mpmath.iv.log(_iv(a)) - i * lb
        bound = lb / j
        lower = mid - bound
        upper = mid + bound
        if lower.a > 0 and upper.b < 0:
            return True
        if lower.b <= 0 or upper.a >= 0:
            return False
        return None

    return _with_iv_prec(bits, run)


def dirichlet_pair(a, b, j_min=1, bits=CHECK_BITS, max_terms=200):
    """The smallest convergent ``i/j`` of ``log a / log b`` with ``j >= j_min``.

    Requires a certified irrational log-ratio.  The two-sided inequality
    ``b^{1/j} < a^j/b^i < b^{-1/j}`` is checked at each precision in ``bits``.
    """
    a, b = to_fraction(a), to_fraction(b)
    if log_ratio_rationality(a, b).kind is not IndependenceKind.IRRATIONAL_CERTIFIED:
        raise PreconditionError("log a / log b is not certified irrational")
    if j_min < 1:
        raise ValueError("j_min must be at least 1")
    count = 8
    while count <= max_terms:
        for p, q in convergents(a, b, count):
            if q < j_min or p < 1:
                continue
            for prec in bits:
                ok = dirichlet_inequality_holds(a, b, p, q, prec)
                while ok is None and prec < 6400:
                    prec *= 2
                    ok = dirichlet_inequality_holds(a, b, p, q, prec)
                if ok is None:
                    raise PrecisionError("could not separate the Dirichlet inequality")
                if not ok:
                    break
            else:
                return p, q
        count *= 2
    raise ResourceLimitError("no admissible Dirichlet pair within the term budget")


# -- the h_r family ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HrWord:
    """``h_r = g1^{omega_power} o g2^{tau_power}`` with derivative ``a^omega_power * b^tau_power`` at ``x~``."""

    r: int
    omega_power: int
    tau_power: int
    derivative: Fraction

    def word(self, witness):
        return witness.omega * self.omega_power + witness.tau * self.tau_power

    def length(self, witness):
        return len(witness.omega) * self.omega_power + len(witness.tau) * self.tau_power

    def to_dict(self):
        return {"r": self.r, "omega_power": self.omega_power, "tau_power": self.tau_power, "derivative": _q(self.derivative)}


def build_hr_family(witness, i, j, ifs=None, max_word_len=10**5):
    """``h_r = g1^{j(R-r)} o g2^{i r}`` for ``0 <= r < sqrt(j)`` with ``R = floor(sqrt(j))``.

    Checks that consecutive derivative ratios ``a^j/b^i`` lie strictly between
    ``b^{1/sqrt j}`` and ``b^{-1/sqrt j}``; with ``ifs`` given (affine) it also
    checks that every ``h_r`` fixes ``x~`` exactly.
    """
    if i < 1 or j < 1:
        raise ValidationError("i and j must be positive")
    R = math.isqrt(j)
    a, b = witness.a, witness.b
    out = []
    for r in range(math.isqrt(j - 1) + 1):
        h = HrWord(r, j * (R - r), i * r, a ** (j * (R - r)) * b ** (i * r))
        if h.length(witness) > max_word_len:
            raise ResourceLimitError("h_r word exceeds the length budget", partial=out)
        out.append(h)
    if len(out) >= 2:
        ratio = a**j / b**i
        for x, y in zip(out, out[1:]):
            if x.derivative / y.derivative != ratio:
                raise DegenerateError("consecutive derivative ratio differs from a^j/b^i")
        if not _ratio_within(ratio, b, j):
            raise PreconditionError("a^j/b^i is not within b^{-+1/sqrt(j)}")
    if ifs is not None and ifs.is_affine:
        for h in out:
            if compose(ifs, h.word(witness))(witness.x_tilde) != witness.x_tilde:
                raise DegenerateError(f"h_{h.r} does not fix x~")
    return out


def _ratio_within(ratio, b, j, bits=200):
    def run():
        lr = mpmath.iv.log(_iv(ratio))
        bound = -mpmath.iv.log(_iv(b)) / mpmath.iv.sqrt(mpmath.iv.mpf(j))
        return bool((bound - abs(lr)).a > 0)

    return _with_iv_prec(bits, run)


# -- WSP failure demonstration -----------------------------------------------------------------


@dataclass(frozen=True)
class WspFailureWitness:
    """Everything needed to recheck one step of the counting argument at scale ``eta``."""

    base: CommonFixedPointWitness
    dirichlet: tuple
    hr_family: tuple
    eta: Fraction
    count: int
    K: int
    C: object
    tau: object
    ell: int
    r_star: int
    r_hat: int
    I_rstar: tuple
    hr_in_phi: int
    N: int
    bound: int
    history: tuple = field(default=())

    @property
    def bound_met(self):
        return self.count >= self.bound

    def to_dict(self):
        return {
            "base": self.base.to_dict(),
            "dirichlet": {"i": self.dirichlet[0], "j": self.dirichlet[1]},
            "hr_family": [h.to_dict() for h in self.hr_family],
            "eta": _q(self.eta),
            "count": self.count,
            "K": self.K,
            "C": _q(self.C),
            "tau": _q(self.tau),
            "ell": self.ell,
            "r_star": self.r_star,
            "r_hat": self.r_hat,
            "I_rstar": list(self.I_rstar),
            "hr_in_phi": self.hr_in_phi,
            "N": self.N,
            "count_lower_bound": self.bound,
            "history": [{"i": i, "j": j, "count": c} for i, j, c in self.history],
        }


def _interval_scheme(C, tau):
    """``K`` and the intervals ``(w_k, z_k)`` covering ``(1/(2C), 2C)`` with ``z_k < tau*w_k``."""
    C, tau = to_mpf(C), to_mpf(tau)
    span = mpmath.log(4 * C * C)
    K = int(mpmath.floor(span / mpmath.log(tau))) + 1
    t = mpmath.exp(span / K)
    s = (t + tau) / 2
    w1 = 1 / (2 * C)
    return K, [(w1 * t**k, w1 * t**k * s) for k in range(K)]


def _count_step(ifs, witness, i, j, scheme, N, diam, budget):
    hr = build_hr_family(witness, i, j)
    R = len(hr)
    diams = [h.derivative * diam for h in hr]
    with mpmath.workdps(60):
        groups = []
        for w, z in scheme:
            pairs = []
            for r2 in range(R):
                for r1 in range(r2):
                    q = mpmath.mpf(diams[r1].numerator) / diams[r1].denominator
                    q = q / (mpmath.mpf(diams[r2].numerator) / diams[r2].denominator)
                    if w < q < z:
                        pairs.append((r1, r2))
            groups.append(pairs)
    ell = max(range(len(groups)), key=lambda k: (len(groups[k]), -k))
    if not groups[ell]:
        return None
    by_second = {}
    for r1, r2 in groups[ell]:
        by_second.setdefault(r2, []).append(r1)
    r_star = max(sorted(by_second), key=lambda r: len(by_second[r]))
    members = tuple(sorted(by_second[r_star]))
    r_hat = max(members, key=lambda r: (diams[r], -r))
    eta = diams[r_hat]
    pc = phi_count(ifs, witness.x_tilde, eta, N, budget)
    keys = {compose(ifs, w).key for w in pc.representatives}
    inside = sum(1 for r in members if compose(ifs, hr[r].word(witness)).key in keys)
    return hr, ell + 1, r_star, r_hat, members, eta, pc.count, inside


def _ceil_sqrt_over(j, d):
    """``ceil(sqrt(j) / d)`` in integer arithmetic."""
    n = math.isqrt(j) // d
    while (d * n) ** 2 < j:
        n += 1
    return n


def demonstrate_wsp_failure(ifs, witness, target_count=10, budget=DEFAULT_WORD_BUDGET, j_min=4, max_j=10**6):
    """Walk through Dirichlet pairs until ``#Phi_N(x~, eta)`` reaches ``target_count``.

    For each pair the ``h_r`` family is built, pair ratios of cylinder
    diameters are grouped into the ``K`` covering intervals, the busiest
    group and second index ``r*`` are selected, ``eta`` is the largest
    diameter among ``I_{r*}``, and ``phi_count`` is run at ``(x~, eta, N)``.
    Diameters are exact, so the system must be affine.
    """
    if not ifs.is_affine:
        raise PreconditionError("the counting stage needs an all-affine system")
    if witness.independence.kind is not IndependenceKind.IRRATIONAL_CERTIFIED:
        raise PreconditionError("the witness log-ratio is not certified irrational")
    witness.check(ifs)
    if target_count < 1:
        raise ValueError("target_count must be at least 1")
    C = distortion_constant(ifs) ** 2
    tau = tau_bound(ifs)
    K, scheme = _interval_scheme(C, tau)
    N = witness.N
    diam = ifs.hull.diameter
    history = []
    best = None
    j_next = j_min
    while j_next <= max_j:
        i, j = dirichlet_pair(witness.a, witness.b, j_next)
        j_next = j + 1
        try:
            step = _count_step(ifs, witness, i, j, scheme, N, diam, budget)
        except ResourceLimitError as exc:
            raise ResourceLimitError(f"budget exhausted at j = {j}", partial=best) from exc
        if step is None:
            continue
        hr, ell, r_star, r_hat, members, eta, count, inside = step
        history.append((i, j, count))
        bound = _ceil_sqrt_over(j, 4 * K)
        best = WspFailureWitness(
            witness, (i, j), tuple(hr), eta, count, K, C, tau, ell, r_star, r_hat, members, inside, N, bound, tuple(history)
        )
        if count >= target_count:
            return best
    raise ResourceLimitError("target count not reached below max_j", partial=best)
