"""Similarity and Bowen dimensions, pressure, covering counts and verdict synthesis."""

from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from enum import Enum
import math

import mpmath
import numpy as np

from .errors import InconsistentInputError, ResourceLimitError, ValidationError
from .maps import distortion_constant, float_array_eval
from .numerics import to_fraction

DEFAULT_WORD_BUDGET = 10**7


class Method(str, Enum):
    SIMILARITY_ROOT = "SIMILARITY_ROOT"
    BOWEN_ROOT = "BOWEN_ROOT"
    ASSOUAD_COVERING = "ASSOUAD_COVERING"


@dataclass(frozen=True)
class DimensionEstimate:
    """A dimension value with a bracket; ``certified`` marks rigorous brackets."""

    value: float
    lower: float
    upper: float
    method: Method
    depth: int
    certified: bool
    details: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.lower <= self.value <= self.upper:
            raise ValueError("bracket must contain the value")

    def to_dict(self):
        out = {
            "method": self.method.value,
            "value": self.value,
            "lower": self.lower,
            "upper": self.upper,
            "certified": self.certified,
            "depth": self.depth,
        }
        if self.details:
            out["details"] = self.details
        return out


# -- similarity dimension -----------------------------------------------------------


def _ratio_sum_iv(ratios, s):
    """Interval enclosure of ``sum r_i^s - 1`` with ``s`` an mpmath float."""
    iv = mpmath.iv
    total = iv.mpf(0)
    for r in ratios:
        total += iv.power(iv.mpf(r.numerator) / r.denominator, iv.mpf(s))
    return total - 1


def similarity_dimension(ratios, tol=1e-12):
    """Root of ``sum |r_i|^s = 1``; the bracket is certified by interval evaluation."""
    rs = [abs(to_fraction(r)) for r in ratios]
    if len(rs) < 2:
        raise ValidationError("need at least two ratios")
    if any(r <= 0 or r >= 1 for r in rs):
        raise ValidationError("each ratio must lie in (0, 1)")
    with mpmath.workprec(128):
        mrs = [mpmath.mpf(r.numerator) / r.denominator for r in rs]

        def f(s):
            return mpmath.fsum(r**s for r in mrs) - 1

        lo = mpmath.mpf(0)
        hi = mpmath.log(len(rs)) / -mpmath.log(max(mrs)) + 1
        for _ in range(300):
            mid = (lo + hi) / 2
            fm = f(mid)
            if fm > 0:
                lo = mid
            else:
                hi = mid
            if hi - lo < mpmath.mpf(10) ** -30:
                break
        value = (lo + hi) / 2
        residual = abs(f(value))
        old = mpmath.iv.prec
        mpmath.iv.prec = 128
        try:
            certified = _ratio_sum_iv(rs, lo).a > 0 and _ratio_sum_iv(rs, hi).b < 0
        finally:
            mpmath.iv.prec = old
        lo_f = math.nextafter(float(lo), -math.inf)
        hi_f = math.nextafter(float(hi), math.inf)
        val = min(max(float(value), lo_f), hi_f)
    return DimensionEstimate(
        val,
        lo_f,
        hi_f,
        Method.SIMILARITY_ROOT,
        depth=1,
        certified=bool(certified and residual < tol),
        details={"residual": float(residual)},
    )


# -- pressure -----------------------------------------------------------------------------


def _level_derivatives(ifs, n, budget=DEFAULT_WORD_BUDGET):
    """``|S_w'(x0)|`` for all words of length ``n`` at the hull midpoint (float)."""
    if ifs.m**n > budget:
        raise ResourceLimitError(f"{ifs.m}^{n} words exceed the budget {budget}")
    x0 = float(ifs.hull.midpoint)
    pts = np.array([x0])
    der = np.array([1.0])
    for _ in range(n):
        new_pts = []
        new_der = []
        for mp in ifs.maps:
            v, d = float_array_eval(mp, pts)
            new_pts.append(v)
            new_der.append(der * np.abs(d))
        pts = np.concatenate(new_pts)
        der = np.concatenate(new_der)
    return der


def _logsumexp(values):
    top = float(np.max(values))
    return top + math.log(float(np.sum(np.exp(values - top))))


def pressure(ifs, s, n=1, budget=DEFAULT_WORD_BUDGET):
    """Bracket ``(lower, upper)`` for the pressure ``P(s)``.

    Affine systems give the exact value ``log sum |r_i|^s`` twice.  Otherwise the
    level-``n`` derivative sum is sandwiched with the distortion constant.
    """
    if s < 0 or n < 1:
        raise ValueError("need s >= 0 and n >= 1")
    if ifs.is_affine:
        if s == 0:
            v = math.log(ifs.m)
        else:
            with mpmath.workprec(113):
                terms = ((mpmath.mpf(abs(r.numerator)) / r.denominator) ** mpmath.mpf(s) for r in ifs.ratios())
                v = float(mpmath.log(mpmath.fsum(terms)))
        return v, v
    logs = np.log(_level_derivatives(ifs, n, budget))
    c0 = distortion_constant(ifs)
    return _pressure_bracket(logs, s, n, math.log(c0))


def _pressure_bracket(logs, s, n, log_c0):
    base = _logsumexp(s * logs) if s > 0 else math.log(len(logs))
    return (base - s * log_c0) / n, (base + 2 * s * log_c0) / n


def _bisect_float(f, lo, hi, tol):
    flo, fhi = f(lo), f(hi)
    if not (flo > 0 > fhi):
        raise ValueError("no sign change")
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return lo, hi


def _affine_bowen(ifs, n, tol):
    """Bisect the exact affine pressure ``log sum |r_i|^s`` and certify the bracket."""
    hi = math.log(ifs.m) / -math.log(float(ifs.rho)) + 1
    lo, hi = _bisect_float(lambda s: pressure(ifs, s)[0], 0.0, hi, min(tol, 1e-13))
    rs = [abs(r) for r in ifs.ratios()]
    old = mpmath.iv.prec
    mpmath.iv.prec = 128
    try:
        certified = _ratio_sum_iv(rs, mpmath.mpf(lo)).a > 0 and _ratio_sum_iv(rs, mpmath.mpf(hi)).b < 0
    finally:
        mpmath.iv.prec = old
    return DimensionEstimate((lo + hi) / 2, lo, hi, Method.BOWEN_ROOT, n, bool(certified), {"evaluator": "exact affine pressure"})


def bowen_dimension(ifs, n=8, budget=DEFAULT_WORD_BUDGET, tol=1e-10):
    """Zero of the pressure function.

    For affine systems this is the similarity root.  For perturbed systems the
    roots of the lower and upper pressure bounds bracket the true zero.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if ifs.is_affine:
        return _affine_bowen(ifs, n, tol)
    logs = np.log(_level_derivatives(ifs, n, budget))
    log_c0 = math.log(distortion_constant(ifs))
    hi = math.log(ifs.m) / -math.log(float(ifs.rho)) + 1
    while _pressure_bracket(logs, hi, n, log_c0)[1] > 0:
        hi *= 2
    a_lo, a_hi = _bisect_float(lambda s: _pressure_bracket(logs, s, n, log_c0)[0], 0.0, hi, tol)
    b_lo, b_hi = _bisect_float(lambda s: _pressure_bracket(logs, s, n, log_c0)[1], 0.0, hi, tol)
    lower, upper = a_lo, b_hi
    return DimensionEstimate(
        (lower + upper) / 2,
        lower,
        upper,
        Method.BOWEN_ROOT,
        n,
        True,
        {"distortion_constant": math.exp(log_c0)},
    )


# -- covering counts ---------------------------------------------------------------------------


def _attractor_is_interval(ifs):
    """True when the first-level images of the hull tile it without gaps."""
    h = ifs.hull
    if not h.exact:
        return False
    images = sorted((mp.image(h.interval).lo, mp.image(h.interval).hi) for mp in ifs.maps)
    reach = h.lo
    for lo, hi in images:
        if lo > reach:
            return False
        reach = max(reach, hi)
    return reach >= h.hi


def _cylinder_pieces(ifs, lo, hi, max_diam, budget):
    """Cylinder hull intervals meeting ``[lo, hi]`` with diameter below ``max_diam``."""
    h = ifs.hull
    a, b = float(h.lo), float(h.hi)
    maps = ifs.maps
    solid = _attractor_is_interval(ifs)
    pieces = []
    visited = 0
    if ifs.is_affine:
        coeffs = [(float(mp.r), float(mp.t)) for mp in maps]
        stack = [(1.0, 0.0)]
        seen = set()
        while stack:
            r, t = stack.pop()
            key = (round(r, 13), round(t / max(b - a, 1e-300), 11))
            if key in seen:
                continue
            seen.add(key)
            u, v = r * a + t, r * b + t
            if u > v:
                u, v = v, u
            if v < lo or u > hi:
                continue
            if v - u < max_diam or (solid and lo <= u and v <= hi):
                pieces.append((max(u, lo), min(v, hi)))
                continue
            stack.extend((r * rs, r * ts + t) for rs, ts in coeffs)
            visited += 1
            if visited > budget:
                raise ResourceLimitError("covering enumeration exceeds the budget")
    else:
        stack = [()]
        while stack:
            word = stack.pop()
            u, v = a, b
            for s in reversed(word):
                mp = maps[s - 1]
                u, v = mp(u), mp(v)
            if u > v:
                u, v = v, u
            if v < lo or u > hi:
                continue
            if v - u < max_diam:
                pieces.append((max(u, lo), min(v, hi)))
                continue
            stack.extend(word + (s,) for s in range(1, ifs.m + 1))
            visited += 1
            if visited > budget:
                raise ResourceLimitError("covering enumeration exceeds the budget")
    pieces.sort()
    merged = []
    for u, v in pieces:
        if merged and u <= merged[-1][1]:
            if v > merged[-1][1]:
                merged[-1][1] = v
        else:
            merged.append([u, v])
    return merged


def _clip(merged, lo, hi):
    los = [p[0] for p in merged]
    his = [p[1] for p in merged]
    i = bisect_left(his, lo)
    j = bisect_right(los, hi)
    return [[max(u, lo), min(v, hi)] for u, v in merged[i:j] if max(u, lo) <= min(v, hi)]


def _greedy_count(merged, r, eta):
    if not merged:
        return 0
    los = [p[0] for p in merged]
    his = [p[1] for p in merged]

    def first_point_at_or_after(c):
        k = bisect_left(his, c)
        if k == len(merged):
            return None
        return max(los[k], c)

    def last_point_at_or_before(c):
        k = bisect_right(los, c) - 1
        return min(his[k], c)

    count = 0
    a = los[0]
    while a is not None:
        p = last_point_at_or_before(a + r * (1 - eta))
        count += 1
        a = first_point_at_or_after(p + r)
    return count


def covering_count(ifs, x, R, r, budget=DEFAULT_WORD_BUDGET, eta=1e-9, _pieces=None):
    """Greedy count of open ``r``-balls centred in the set covering ``B(x, R)``.

    The set is approximated by cylinder intervals of diameter below ``r/10``.
    The sweep picks, for the leftmost uncovered point ``a``, the rightmost set
    point within ``a + r``, which is optimal on the line.
    """
    x, R, r = float(x), float(R), float(r)
    if r <= 0 or R <= 0:
        raise ValueError("need 0 < r and 0 < R")
    # the ball is open: points on its boundary are excluded
    slack = R * 1e-12
    lo, hi = x - R + slack, x + R - slack
    if _pieces is None:
        merged = _cylinder_pieces(ifs, lo, hi, r / 10, budget)
    else:
        merged = _clip(_pieces, lo, hi)
    if merged and r >= 2 * R:
        return 1
    return _greedy_count(merged, r, eta)


@dataclass(frozen=True)
class AssouadConfig:
    """Sampling grid: centres at cylinder endpoints of ``depth``, radii ``R`` and ratios ``R/r``."""

    depth: int = 3
    ratios: tuple = ()
    radii: tuple = ()

    @classmethod
    def from_dict(cls, data):
        return cls(int(data.get("depth", 3)), tuple(float(q) for q in data.get("ratios", ())), tuple(float(q) for q in data.get("radii", ())))


def default_assouad_config(ifs, depth=3):
    base = 1 / float(ifs.rho)
    n0 = math.ceil(math.log(81) / math.log(base) - 1e-12)
    ratios = tuple(base**k for k in range(n0, n0 + 3))
    diam = float(ifs.hull.diameter)
    radii = tuple(diam / base**k for k in range(1, 4))
    return AssouadConfig(depth, ratios, radii)


def _sample_points(ifs, depth):
    h = ifs.hull
    pts = set()
    words = [()]
    for _ in range(depth):
        words = [w + (s,) for w in words for s in range(1, ifs.m + 1)]
    for w in words:
        u, v = float(h.lo), float(h.hi)
        for s in reversed(w):
            mp = ifs.maps[s - 1]
            u, v = mp(u), mp(v)
        pts.add(round(u, 15))
        pts.add(round(v, 15))
    return sorted(pts)


def assouad_estimate(ifs, scales=None, budget=DEFAULT_WORD_BUDGET):
    """Heuristic Assouad-dimension estimate ``max log N(x,R,r) / log(R/r)``.

    ``x`` runs over cylinder endpoints; radii and ratios come from ``scales``
    (an :class:`AssouadConfig` or dict).  A least-squares slope of the worst
    counts against ``log(R/r)`` is reported alongside in ``details``.
    """
    if scales is None:
        cfg = default_assouad_config(ifs)
    elif isinstance(scales, dict):
        cfg = AssouadConfig.from_dict(scales)
    else:
        cfg = scales
    if not cfg.ratios or not cfg.radii:
        d = default_assouad_config(ifs, cfg.depth)
        cfg = AssouadConfig(cfg.depth, cfg.ratios or d.ratios, cfg.radii or d.radii)
    if max(cfg.ratios) < 81 * (1 - 1e-12):
        raise ValidationError("the largest ratio R/r must be at least 3^4")
    if ifs.hull.diameter == 0:
        raise ValidationError("the attractor is a singleton")
    points = _sample_points(ifs, cfg.depth)
    best = 0.0
    arg = None
    worst = {q: 0 for q in cfg.ratios}
    h = ifs.hull
    cache = {}
    for R in cfg.radii:
        for q in cfg.ratios:
            r = R / q
            key = round(r, 15)
            if key not in cache:
                cache[key] = _cylinder_pieces(ifs, float(h.lo), float(h.hi), r / 10, budget)
            for x in points:
                n = covering_count(ifs, x, R, r, budget, _pieces=cache[key])
                worst[q] = max(worst[q], n)
                val = math.log(n) / math.log(q) if n > 0 else 0.0
                if val > best:
                    best, arg = val, (x, R, R / q)
    qs = sorted(worst)
    slope = None
    if len(qs) >= 2:
        lx = np.log(qs)
        ly = np.log([max(worst[q], 1) for q in qs])
        slope = float(np.polyfit(lx, ly, 1)[0])
    lower = min(best, slope) if slope is not None else best
    upper = max(best, slope) if slope is not None else best
    details = {"slope_estimate": slope, "argmax": list(arg) if arg else None, "samples": len(points) * len(cfg.radii) * len(cfg.ratios)}
    return DimensionEstimate(best, lower, upper, Method.ASSOUAD_COVERING, cfg.depth, False, details)


# -- verdict synthesis ------------------------------------------------------------------------


@dataclass(frozen=True)
class ClassificationReport:
    """What the WSP verdict implies for the Assouad dimension and Hausdorff measure."""

    status: str
    dim_A: object = None
    dim_H: object = None
    hausdorff_measure: object = None
    wsp_status: str = ""
    caveats: tuple = ()
    branches: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "status": self.status,
            "dim_A": self.dim_A,
            "dim_H": self.dim_H,
            "hausdorff_measure": self.hausdorff_measure,
            "wsp_status": self.wsp_status,
            "caveats": list(self.caveats),
            "branches": self.branches,
        }


def synthesize_verdict(s0, wsp, singleton=False, exact_overlaps=()):
    """Combine a dimension estimate with a WSP verdict.

    ``wsp`` is a ``WspVerdict`` or one of the strings ``CERTIFIED_HOLDS``,
    ``WITNESSED_FAILS``, ``NO_FAILURE_FOUND``.  Exact overlaps may be passed
    to detect contradictory input.
    """
    status = getattr(wsp, "status", wsp)
    status = getattr(status, "value", status)
    if status not in ("CERTIFIED_HOLDS", "WITNESSED_FAILS", "NO_FAILURE_FOUND"):
        raise ValueError(f"unknown WSP status {status!r}")
    depth = getattr(wsp, "depth", None)
    if singleton:
        return ClassificationReport(
            "REFUSED",
            wsp_status=status,
            caveats=("the attractor is a single point; the dimension results require it is not a singleton",),
        )
    overlaps = tuple(exact_overlaps) or tuple(getattr(wsp, "exact_overlaps", ()) or ())
    if status == "WITNESSED_FAILS":
        if s0.upper < 1:
            measure = "zero"
            caveats = ()
        else:
            measure = None
            caveats = ("no Hausdorff-measure statement: the dimension bracket does not lie below 1",)
        return ClassificationReport("DEFINITIVE", 1, None, measure, status, caveats)
    if status == "CERTIFIED_HOLDS":
        cert_kind = getattr(wsp, "certificate_kind", None)
        if overlaps and cert_kind == "SSP":
            raise InconsistentInputError("an SSP certificate cannot coexist with an exact overlap")
        caveats = []
        if overlaps:
            dim = None
            caveats.append("exact overlaps present: dim_A equals dim_H, which is below the similarity value")
        else:
            dim = s0.value
        if s0.upper < 1 and not overlaps:
            measure = "positive finite"
        else:
            measure = None
            if s0.lower >= 1 or s0.upper >= 1:
                caveats.append("no Hausdorff-measure statement: the dimension bracket does not lie below 1")
        return ClassificationReport("DEFINITIVE", dim, dim, measure, status, tuple(caveats))
    holds_measure = "positive finite" if s0.upper < 1 and not overlaps else None
    fails_measure = "zero" if s0.upper < 1 else None
    return ClassificationReport(
        "INCONCLUSIVE",
        wsp_status=status,
        caveats=(f"inconclusive up to depth {depth}: no WSP failure found and no certificate",),
        branches={
            "if_wsp_holds": {"dim_A": None if overlaps else s0.value, "hausdorff_measure": holds_measure},
            "if_wsp_fails": {"dim_A": 1, "hausdorff_measure": fails_measure},
        },
    )
