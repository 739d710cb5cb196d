"""Separation conditions: SSP, exact overlaps, the identity-limit sequence ``d_n``,
lattice certificates, Bandt-Graf distances, ``Phi`` counts and ``V_eps`` membership.
"""

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
import heapq
from itertools import combinations_with_replacement
import math

import mpmath

from .errors import PreconditionError, ResourceLimitError, ValidationError
from .maps import HULL_BITS, IDENTITY, Composition, compose
from .numerics import Interval, fraction_str, to_fraction
from .symbolic import DEFAULT_WORD_BUDGET, InfiniteWordSpec, make_word, words_up_to



def _num(x):
    """JSON-friendly rendering of an exact or float quantity."""
    if isinstance(x, Fraction):
        return fraction_str(x)
    return x


def _words(ws):
    return [list(w) for w in ws]


def _require_affine(ifs, what):
    if not ifs.is_affine:
        raise PreconditionError(f"{what} needs an all-affine system")


# -- strong separation ---------------------------------------------------------------------


@dataclass(frozen=True)
class SspResult:
    """Outcome of :func:`ssp_check`.

    ``gap`` is the certified lower bound on the distance between first-level
    pieces when the property holds.  On failure ``pairs`` lists the first-level
    pairs that could not be separated, and ``witness`` (when present) gives two
    infinite words with distinct first symbols and equal projections.
    """

    holds: bool
    gap: object = None
    pairs: tuple = ()
    witness: dict = None
    qualifier: str = None

    @property
    def status(self):
        return "HOLDS" if self.holds else "FAILS"

    def to_dict(self):
        out = {"status": self.status, "pairs": [list(p) for p in self.pairs]}
        if self.gap is not None:
            out["gap"] = _num(self.gap)
        if self.witness is not None:
            out["witness"] = self.witness
        if self.qualifier:
            out["qualifier"] = self.qualifier
        return out


def _image(mp, h):
    u, v = mp(h.lo), mp(h.hi)
    return (u, v) if u <= v else (v, u)


def _gap(a, b):
    """Signed gap between intervals: positive when disjoint, else ``<= 0``."""
    return max(a[0], b[0]) - min(a[1], b[1])


def _endpoint_points(mp, h):
    """The images of the hull endpoints with their codes."""
    return ((mp(h.lo), h.lo_code), (mp(h.hi), h.hi_code))


def _extend_code(word, code):
    return InfiniteWordSpec(tuple(word) + code.preperiod, code.period)


def ssp_check(ifs, max_depth=12, budget=DEFAULT_WORD_BUDGET):
    """Strong separation test on first-level cylinders.

    Disjoint first-level hull images give ``HOLDS`` with the smallest gap.  For
    affine systems, touching or overlapping pairs are refined by splitting the
    larger cylinder.  A shared attractor point (an endpoint coincidence or an
    exact overlap) certifies failure.  Pairs still unresolved at ``max_depth``
    are reported as failures with the ``hull-level`` qualifier.
    """
    h = ifs.hull
    if not ifs.is_affine:
        lo = h.lo - h.error
        hi = h.hi + h.error
        H = Interval(lo, hi)
        images = [mp.image(H, HULL_BITS) for mp in ifs.maps]
        gaps = {}
        for i in range(ifs.m):
            for j in range(i + 1, ifs.m):
                gaps[(i + 1, j + 1)] = _gap((images[i].lo, images[i].hi), (images[j].lo, images[j].hi))
        bad = tuple(p for p, g in sorted(gaps.items()) if g <= 0)
        if not bad:
            return SspResult(True, min(gaps.values()))
        return SspResult(False, None, bad, None, "hull-level")

    bases = ifs.affine_maps()
    first = {}
    for i in range(ifs.m):
        for j in range(i + 1, ifs.m):
            first[(i + 1, j + 1)] = _gap(_image(bases[i], h), _image(bases[j], h))
    bad = [p for p, g in sorted(first.items()) if g <= 0]
    if not bad:
        return SspResult(True, min(first.values()))
    if h.lo == h.hi:
        w = {"point": fraction_str(h.lo), "words": [str(h.lo_code), str(h.lo_code)]}
        return SspResult(False, None, tuple(bad), w)

    min_gap = min((g for g in first.values() if g > 0), default=None)
    visited = 0
    for pair in bad:
        queue = [((pair[0],), (pair[1],))]
        while queue:
            u, v = queue.pop()
            visited += 1
            if visited > budget:
                raise ResourceLimitError("SSP refinement exceeds the budget")
            su, sv = compose(ifs, u), compose(ifs, v)
            if su.key == sv.key:
                point = su(h.lo)
                w = {
                    "pair": list(pair),
                    "point": fraction_str(point),
                    "words": [str(_extend_code(u, h.lo_code)), str(_extend_code(v, h.lo_code))],
                }
                return SspResult(False, None, tuple(bad), w)
            for pu, cu in _endpoint_points(su, h):
                for pv, cv in _endpoint_points(sv, h):
                    if pu == pv:
                        w = {
                            "pair": list(pair),
                            "point": fraction_str(pu),
                            "words": [str(_extend_code(u, cu)), str(_extend_code(v, cv))],
                        }
                        return SspResult(False, None, tuple(bad), w)
            g = _gap(_image(su, h), _image(sv, h))
            if g > 0:
                min_gap = g if min_gap is None else min(min_gap, g)
                continue
            if len(u) + len(v) >= max_depth:
                return SspResult(False, None, tuple(bad), None, "hull-level")
            if abs(su.r) >= abs(sv.r):
                queue.extend((u + (s,), v) for s in range(ifs.m, 0, -1))
            else:
                queue.extend((u, v + (s,)) for s in range(ifs.m, 0, -1))
    return SspResult(True, min_gap)


# -- exact overlaps -----------------------------------------------------------------------------


class OverlapKind(str, Enum):
    EXACT = "EXACT"
    NUMERIC_CANDIDATE = "NUMERIC_CANDIDATE"


@dataclass(frozen=True)
class OverlapFinding:
    pair: tuple
    kind: OverlapKind

    def to_dict(self):
        return {"pair": _words(self.pair), "kind": self.kind.value}


def _strip_common_suffix_found(u, v, found):
    k = 1
    while k < min(len(u), len(v)) and u[-k] == v[-k]:
        if (u[:-k], v[:-k]) in found:
            return True
        k += 1
    return False


def exact_overlap_search(ifs, max_len, budget=DEFAULT_WORD_BUDGET):
    """Word pairs ``(u, v)`` with distinct first symbols and ``S_u = S_v``.

    Combined length is at most ``max_len``.  Pairs that only extend a shorter
    finding by a common suffix are dropped, so each overlap appears once in its
    minimal form.  Findings are sorted by combined length, then lexicographically.
    Affine maps are compared by their coefficients, which is equality on the
    attractor whenever it has two or more points.
    """
    if max_len < 2:
        raise ValueError("max_len must be at least 2")
    count = sum(ifs.m**k for k in range(1, max_len))
    if count > budget:
        raise ResourceLimitError(f"{count} words exceed the budget {budget}", partial=[])
    h = ifs.hull
    buckets = {}
    if ifs.is_affine:
        bases = ifs.affine_maps()
        level = [((), IDENTITY)]
        for _ in range(max_len - 1):
            nxt = []
            for w, f in level:
                for s in range(1, ifs.m + 1):
                    g = f.then(bases[s - 1])
                    nxt.append((w + (s,), g))
                    buckets.setdefault(g.key, []).append(w + (s,))
            level = nxt
        kind = OverlapKind.EXACT
    else:
        diam = float(h.diameter)
        samples = [float(h.lo) + diam * k / 8 for k in range(9)]
        tol = 1e-12 * diam
        rows = []
        for w in words_up_to(ifs.m, max_len - 1):
            comp = Composition([ifs.maps[s - 1] for s in w])
            rows.append((tuple(comp(x) for x in samples), w))
        rows.sort()
        for k, (vals, w) in enumerate(rows):
            key = tuple(round(v / tol) for v in vals)
            buckets.setdefault(key, []).append(w)
        kind = OverlapKind.NUMERIC_CANDIDATE
    candidates = []
    for words in buckets.values():
        if len(words) < 2:
            continue
        for a in range(len(words)):
            for b in range(a + 1, len(words)):
                u, v = words[a], words[b]
                if u[0] == v[0] or len(u) + len(v) > max_len:
                    continue
                if (u[0], u) > (v[0], v):
                    u, v = v, u
                candidates.append((len(u) + len(v), u, v))
    candidates.sort()
    found = set()
    out = []
    for _, u, v in candidates:
        if _strip_common_suffix_found(u, v, found):
            continue
        found.add((u, v))
        out.append(OverlapFinding((u, v), kind))
    return out


# -- identity-limit sequence ------------------------------------------------------------------


@dataclass(frozen=True)
class CriterionSequence:
    """``d_n`` for ``n = 1..max_n`` with an argmin pair per ``n``.

    ``complete_through`` is the largest ``n`` for which every pair was examined
    (smaller than ``max_n`` only when the node budget ran out).  Beyond it the
    values are upper bounds realised by the recorded pairs.
    """

    values: tuple
    pairs: tuple
    exact: tuple
    complete_through: int
    nodes: int = 0

    def sequence(self):
        return [(n, v) for n, v in enumerate(self.values, start=1)]

    def value(self, n):
        return self.values[n - 1]

    def to_dict(self):
        return {
            "d_sequence": [[n, _num(v)] for n, v in self.sequence()],
            "pairs": [[n, _words(p)] for n, p in enumerate(self.pairs, start=1)],
            "exact": list(self.exact),
            "complete_through": self.complete_through,
        }


def _sup_dev(h, a, b):
    """``sup_[a,b] |x - h(x)|`` for an affine ``h``."""
    return max(abs(a - h(a)), abs(b - h(b)))


def _dist_to_interval(x, lo, hi):
    if x < lo:
        return lo - x
    if x > hi:
        return x - hi
    return Fraction(0)


def pair_value(ifs, u, v):
    """``sup_hull |S_u - S_v| / max(|r_u|, |r_v|)`` for one pair of an affine system."""
    _require_affine(ifs, "pair_value")
    su, sv = compose(ifs, make_word(u, ifs.m)), compose(ifs, make_word(v, ifs.m))
    h = ifs.hull
    return max(abs(su(h.lo) - sv(h.lo)), abs(su(h.hi) - sv(h.hi))) / max(abs(su.r), abs(sv.r))


def wsp_criterion_search(ifs, max_n, budget=DEFAULT_WORD_BUDGET):
    """Compute ``d_n`` exactly for an affine system by branch and bound.

    ``d_n`` is the minimum over word pairs ``(u, v)`` with lengths at most ``n``
    and ``S_u != S_v`` of ``sup |S_u - S_v| / max(|r_u|, |r_v|)`` over the hull.
    A common prefix cancels, so the search runs over pairs with distinct first
    symbols and over pairs ``((), v)``.  The quantity only depends on the neighbour
    map ``S_u^{-1} S_v``, which is what the memo table stores.
    """
    if max_n < 1:
        raise ValueError("max_n must be at least 1")
    if not ifs.is_affine:
        return _conformal_criterion(ifs, max_n, budget)
    h = ifs.hull
    a, b = h.lo, h.hi
    if a == b:
        raise PreconditionError("the attractor is a singleton")
    diam = b - a
    bases = ifs.affine_maps()
    inverses = [s.inverse() for s in bases]
    m = ifs.m

    best = [None] * (max_n + 1)
    pairs = [None] * (max_n + 1)
    memo = {}
    heap = []
    seq = 0

    def lower_bound(hm, frozen):
        lo_img, hi_img = sorted((hm(a), hm(b)))
        if frozen:
            d = max(_dist_to_interval(a, lo_img, hi_img), _dist_to_interval(b, lo_img, hi_img))
            return max(d, (1 - abs(hm.r)) * diam / 2)
        return max(lo_img - b, a - hi_img, Fraction(0))

    def push(hm, p, q, frozen):
        nonlocal seq
        if hm.r == 1 and hm.t == 0:
            return
        lp, lq = len(p), len(q)
        if max(lp, lq) > max_n:
            return
        key = (hm.r, hm.t, frozen)
        seen = memo.setdefault(key, [])
        for sp, sq in seen:
            if sp <= lp and sq <= lq:
                return
        seen.append((lp, lq))
        seq += 1
        heapq.heappush(heap, (max(lp, lq), lp + lq, seq, hm, p, q, frozen))

    def oriented(hm, p, q):
        if abs(hm.r) > 1:
            return hm.inverse(), q, p
        return hm, p, q

    for i in range(1, m + 1):
        push(bases[i - 1], (), (i,), True)
        for j in range(i + 1, m + 1):
            push(*oriented(inverses[i - 1].then(bases[j - 1]), (i,), (j,)), False)

    nodes = 0
    complete = max_n
    while heap:
        n_node, _, _, hm, p, q, frozen = heapq.heappop(heap)
        nodes += 1
        if nodes > budget:
            complete = n_node - 1
            break
        bound = best[n_node]
        if bound is not None and lower_bound(hm, frozen) >= bound:
            continue
        val = _sup_dev(hm, a, b)
        for k in range(n_node, max_n + 1):
            if best[k] is None or val < best[k]:
                best[k] = val
                pairs[k] = (p, q)
        if frozen:
            for s in range(m):
                push(hm.then(bases[s]), p, q + (s + 1,), True)
        else:
            for s in range(m):
                push(*oriented(inverses[s].then(hm), p + (s + 1,), q), False)
            push(hm, p, q, True)
    values = tuple(best[1:])
    exact = tuple(k <= complete for k in range(1, max_n + 1))
    result = CriterionSequence(values, tuple(pairs[1:]), exact, complete, nodes)
    if complete < max_n:
        raise ResourceLimitError(f"d_n search stopped after {budget} nodes; exact through n={complete}", partial=result)
    return result


def _conformal_criterion(ifs, max_n, budget, depth=6):
    """Brute-force brackets for ``d_n`` on a perturbed system.

    The supremum over the attractor is sampled at depth-``depth`` cylinder
    endpoints; the lower bracket subtracts the sampling error, and the
    normaliser uses certified derivative sup-norm products.  Only the lower
    bracket enters the minimum.
    """
    total = sum(ifs.m**k for k in range(0, max_n + 1))
    if total**2 > budget:
        raise ResourceLimitError("conformal d_n brute force exceeds the budget")
    h = ifs.hull
    pts = sorted(
        {
            v
            for w in words_up_to(ifs.m, depth)
            if len(w) == depth
            for v in (Composition([ifs.maps[s - 1] for s in w])(float(h.lo)), Composition([ifs.maps[s - 1] for s in w])(float(h.hi)))
        }
    )
    diam = float(h.diameter)
    spacing = float(ifs.rho) ** depth * diam + 2 * float(h.error)
    sups = [float(s) for s in ifs.sup_derivatives()]
    words = [()] + list(words_up_to(ifs.m, max_n))
    vals = {}
    for w in words:
        comp = Composition([ifs.maps[s - 1] for s in w])
        vals[w] = [comp(x) for x in pts]
    norms = {w: math.prod(sups[s - 1] for s in w) for w in words}
    tol = 1e-12 * diam
    best = [None] * (max_n + 1)
    pairs = [None] * (max_n + 1)
    for u in words:
        for v in words:
            if u >= v or (u and v and u[0] == v[0]):
                continue
            dev = max(abs(x - y) for x, y in zip(vals[u], vals[v]))
            if dev <= tol:
                continue
            lip = norms[u] + norms[v]
            lower = max(dev - lip * spacing, 0.0) / max(norms[u], norms[v])
            n_pair = max(len(u), len(v))
            for k in range(n_pair, max_n + 1):
                if best[k] is None or lower < best[k]:
                    best[k] = lower
                    pairs[k] = (u, v)
    return CriterionSequence(tuple(best[1:]), tuple(pairs[1:]), (False,) * max_n, max_n)


def wsp_criterion_sequence(ifs, max_n, budget=DEFAULT_WORD_BUDGET):
    """``[(n, d_n) for n in 1..max_n]``."""
    return wsp_criterion_search(ifs, max_n, budget).sequence()


# -- lattice certificate ------------------------------------------------------------------------


@dataclass(frozen=True)
class LatticeCertificate:
    """Positive lower bound on ``inf_n d_n`` for unit-fraction lattice systems.

    All ratios are ``+-1/v`` and all translations lie in ``(1/D) Z``.  The
    bound is the minimum of the per-case bounds stored in ``components``.
    """

    v: int
    D: int
    G: int
    bound: Fraction
    components: dict

    def to_dict(self):
        return {
            "kind": "LATTICE",
            "v": self.v,
            "D": self.D,
            "G": self.G,
            "bound": fraction_str(self.bound),
            "components": {k: fraction_str(x) for k, x in self.components.items()},
        }


def _lattice_min(alpha, a, b, step):
    """``min over c in step*Z`` of ``max(|alpha*a - c|, |alpha*b - c|)``."""
    centre = alpha * (a + b) / 2
    k = math.floor(centre / step)
    best = None
    for c in (k * step, (k + 1) * step):
        val = max(abs(alpha * a - c), abs(alpha * b - c))
        best = val if best is None else min(best, val)
    return best


def wsp_unit_fraction_certificate(ifs, G=8):
    """Lattice certificate or ``None`` when the lattice preconditions fail.

    For a reduced pair with length difference ``g`` the neighbour map is
    ``x -> s*x + c`` with ``s = +-v^-g`` and ``c`` in ``(v^(1-g)/D) Z``.  Equal
    lengths give ``|c| >= v/D`` or, with a reflection, at least ``diam``;
    ``g <= G`` is settled by an exact lattice minimisation; larger ``g`` is
    bounded by ``(1 - v^-(G+1)) diam / 2``.
    """
    if not ifs.is_affine:
        return None
    inv = {abs(1 / mp.r) for mp in ifs.maps}
    if len(inv) != 1:
        return None
    v = inv.pop()
    if v.denominator != 1 or v < 2:
        return None
    v = int(v)
    D = 1
    for mp in ifs.maps:
        D = D * mp.t.denominator // math.gcd(D, mp.t.denominator)
    h = ifs.hull
    a, b = h.lo, h.hi
    diam = b - a
    if diam == 0:
        return None
    comps = {"translation": Fraction(v, D)}
    if any(mp.r < 0 for mp in ifs.maps):
        comps["reflection"] = diam
    signs = (1, -1) if any(mp.r < 0 for mp in ifs.maps) else (1,)
    for g in range(1, G + 1):
        step = Fraction(v) ** (1 - g) / D
        worst = None
        for sg in signs:
            alpha = 1 - sg * Fraction(1, v**g)
            val = _lattice_min(alpha, a, b, step)
            worst = val if worst is None else min(worst, val)
        comps[f"g={g}"] = worst
    comps["tail"] = (1 - Fraction(1, v ** (G + 1))) * diam / 2
    return LatticeCertificate(v, D, G, min(comps.values()), comps)


# -- Bandt-Graf distance ----------------------------------------------------------------------


def bandt_graf_distance(ifs, iv, jv, x0=0):
    """``sup_hull |S_iv^{-1} S_jv (x) - x|`` evaluated through a base point ``x0``.

    The function is affine, ``(r_jv/r_iv - 1)(x - x0) + (S_jv(x0) - S_iv(x0))/r_iv``,
    so its maximum modulus sits at a hull endpoint.
    """
    _require_affine(ifs, "bandt_graf_distance")
    iv, jv = make_word(iv, ifs.m), make_word(jv, ifs.m)
    if iv == jv:
        raise ValueError("the two words must differ")
    si, sj = compose(ifs, iv), compose(ifs, jv)
    x0 = to_fraction(x0)
    slope = sj.r / si.r - 1
    offset = (sj(x0) - si(x0)) / si.r
    h = ifs.hull
    return max(abs(slope * (h.lo - x0) + offset), abs(slope * (h.hi - x0) + offset))


# -- Phi counts -----------------------------------------------------------------------------------


@dataclass(frozen=True)
class PhiCount:
    count: int
    representatives: tuple
    x: object
    r: object
    N: int

    def to_dict(self):
        return {
            "x": _num(self.x),
            "r": _num(self.r),
            "N": self.N,
            "count": self.count,
            "representatives": _words(self.representatives),
        }


def phi_count(ifs, x, r, N=1, budget=DEFAULT_WORD_BUDGET):
    """Distinct maps ``S_w`` at scale ``r`` whose cylinder hull meets ``[x-r, x+r]``.

    A word ``w`` qualifies when ``diam S_w(hull) <= r`` while the word left
    after removing its last ``N`` symbols has cylinder diameter above ``r``.
    Maps are compared exactly (affine) or by sampled values (perturbed).  Each
    distinct map is represented by its shortlex-smallest word.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    h = ifs.hull
    x, r = to_fraction(x), to_fraction(r)
    diam = h.diameter
    if not 0 < r < diam:
        raise ValidationError("need 0 < r < diam(attractor)")
    lo, hi = x - r, x + r
    if ifs.is_affine:
        return _phi_affine(ifs, x, r, N, lo, hi, diam, budget)
    return _phi_conformal(ifs, x, r, N, float(lo), float(hi), budget)


def _phi_affine(ifs, x, r, N, lo, hi, diam, budget):
    h = ifs.hull
    bases = ifs.affine_maps()
    m = ifs.m
    found = {}
    seen_prefix = set()
    level = [((), IDENTITY)]
    visited = 0
    while level:
        nxt = []
        for p, sp in level:
            if sp.key in seen_prefix:
                continue
            seen_prefix.add(sp.key)
            stack = [(p, sp)]
            for _ in range(N):
                stack = [(w + (s,), f.then(bases[s - 1])) for w, f in stack for s in range(1, m + 1)]
                visited += len(stack)
                if visited > budget:
                    raise ResourceLimitError("phi enumeration exceeds the budget", partial=len(found))
            for w, f in stack:
                if abs(f.r) * diam > r:
                    continue
                u, v = f(h.lo), f(h.hi)
                if max(u, v) < lo or min(u, v) > hi:
                    continue
                if f.key not in found or (len(w), w) < (len(found[f.key]), found[f.key]):
                    found[f.key] = w
            for s in range(1, m + 1):
                f = sp.then(bases[s - 1])
                if abs(f.r) * diam <= r:
                    continue
                u, v = f(h.lo), f(h.hi)
                if max(u, v) < lo or min(u, v) > hi:
                    continue
                nxt.append((p + (s,), f))
        level = nxt
    reps = tuple(sorted(found.values(), key=lambda w: (len(w), w)))
    return PhiCount(len(reps), reps, x, r, N)


def _phi_conformal(ifs, x, r, N, lo, hi, budget):
    h = ifs.hull
    a, b = float(h.lo), float(h.hi)
    rf = float(r)
    samples = [a + (b - a) * k / 4 for k in range(5)]
    tol = 1e-12 * (b - a)
    found = {}
    level = [()]
    visited = 0

    def ends(w):
        comp = Composition([ifs.maps[s - 1] for s in w])
        return comp(a), comp(b), comp

    while level:
        nxt = []
        for p in level:
            stack = [p + tail for tail in _all_words(ifs.m, N)]
            visited += len(stack)
            if visited > budget:
                raise ResourceLimitError("phi enumeration exceeds the budget", partial=len(found))
            for w in stack:
                u, v, comp = ends(w)
                if abs(v - u) > rf or max(u, v) < lo or min(u, v) > hi:
                    continue
                key = tuple(round(comp(s) / tol) for s in samples)
                if key not in found or (len(w), w) < (len(found[key]), found[key]):
                    found[key] = w
            for s in range(1, ifs.m + 1):
                u, v, _ = ends(p + (s,))
                if abs(v - u) > rf and not (max(u, v) < lo or min(u, v) > hi):
                    nxt.append(p + (s,))
        level = nxt
    reps = tuple(sorted(found.values(), key=lambda w: (len(w), w)))
    return PhiCount(len(reps), reps, x, r, N)


def _all_words(m, n):
    out = [()]
    for _ in range(n):
        out = [w + (s,) for w in out for s in range(1, m + 1)]
    return out


# -- V_eps membership and ratio-matching extensions ---------------------------------------


def _system(family_or_ifs):
    fam = getattr(family_or_ifs, "system", None)
    return fam() if callable(fam) else family_or_ifs


@dataclass(frozen=True)
class VEpsilonResult:
    member: bool
    ratio_slack: float
    projection_slack: object

    def to_dict(self):
        return {"member": self.member, "ratio_slack": self.ratio_slack, "projection_slack": _num(self.projection_slack)}


def v_epsilon_member(family_or_ifs, iv, jv, eps):
    """Both ``V_eps`` conditions for the pair ``(iv, jv)``.

    The ratio condition ``|log(r_iv/r_jv)| < eps`` and the projection condition
    ``|Pi(iv 1^inf) - Pi(jv 1^inf)| < eps |r_jv|`` are evaluated as slacks;
    membership means both slacks are positive.
    """
    ifs = _system(family_or_ifs)
    _require_affine(ifs, "v_epsilon_member")
    iv, jv = make_word(iv, ifs.m), make_word(jv, ifs.m)
    if not iv or not jv or iv[0] == jv[0]:
        raise PreconditionError("words must be non-empty with distinct first symbols")
    eps = to_fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    si, sj = compose(ifs, iv), compose(ifs, jv)
    tail = ifs.maps[0].base.fixed_point()
    gap = abs(si(tail) - sj(tail))
    proj_slack = eps * abs(sj.r) - gap
    q = abs(si.r) / abs(sj.r)
    with mpmath.workprec(160):
        log_q = abs(mpmath.log(mpmath.mpf(q.numerator) / q.denominator))
        ratio_slack = mpmath.mpf(eps.numerator) / eps.denominator - log_q
        member = ratio_slack > 0 and proj_slack > 0
        return VEpsilonResult(bool(member), float(ratio_slack), proj_slack)


def _moran_levels(ifs, w):
    """The set of ``k`` for which ``w`` lies in the Moran class ``M_k``."""
    rw = compose(ifs, w).r
    rp = compose(ifs, w[:-1]).r
    out = set()
    k = 1
    while ifs.rho**k >= abs(rw):
        if ifs.rho**k < abs(rp):
            out.add(k)
        k += 1
    return out


def lemma_extension_search(ifs, iv, jv, eps, N_cap=40, budget=DEFAULT_WORD_BUDGET):
    """Extensions ``u = iv x``, ``v = jv y`` with ``r_u/r_v`` in ``(e^-eps/3, e^eps/3)``.

    Only the multiset of ratios along ``x`` and ``y`` matters, so the search runs
    over ratio multisets with growing ``N = max(|x|, |y|)``.  Among solutions at
    the least ``N`` the lexicographically smallest ``(x, y)`` is returned as
    ``(u, v, N)``; ``None`` when ``N_cap`` is exhausted.
    """
    _require_affine(ifs, "lemma_extension_search")
    iv, jv = make_word(iv, ifs.m), make_word(jv, ifs.m)
    if not iv or not jv:
        raise PreconditionError("words must be non-empty")
    if not _moran_levels(ifs, iv) & _moran_levels(ifs, jv):
        raise PreconditionError("the words are not in a common Moran class")
    eps = to_fraction(eps)
    classes = {}
    for s, mp in enumerate(ifs.maps, start=1):
        classes.setdefault(abs(mp.r), s)
    reps = sorted(classes.items(), key=lambda kv: kv[1])
    sym = [s for _, s in reps]
    logs = [math.log(float(r)) for r, _ in reps]
    base = math.log(float(abs(compose(ifs, iv).r))) - math.log(float(abs(compose(ifs, jv).r)))
    thr = float(eps) / 3
    with mpmath.workprec(160):
        mthr = mpmath.mpf(eps.numerator) / eps.denominator / 3

    def word_of(combo):
        return tuple(sorted(sym[c] for c in combo))

    multisets = {0: [()]}
    checked = 0
    for N in range(0, N_cap + 1):
        if N not in multisets:
            multisets[N] = list(combinations_with_replacement(range(len(reps)), N))
        hits = []
        for lx in range(0, N + 1):
            for ly in range(0, N + 1):
                if max(lx, ly) != N:
                    continue
                for cx in multisets.setdefault(lx, list(combinations_with_replacement(range(len(reps)), lx))):
                    sx = sum(logs[c] for c in cx)
                    for cy in multisets.setdefault(ly, list(combinations_with_replacement(range(len(reps)), ly))):
                        checked += 1
                        if checked > budget:
                            raise ResourceLimitError("extension search exceeds the budget")
                        val = abs(base + sx - sum(logs[c] for c in cy))
                        if val > thr + 1e-9:
                            continue
                        x, y = word_of(cx), word_of(cy)
                        q = abs(compose(ifs, iv + x).r / compose(ifs, jv + y).r)
                        with mpmath.workprec(160):
                            if abs(mpmath.log(mpmath.mpf(q.numerator) / q.denominator)) < mthr:
                                hits.append((x, y))
        if hits:
            x, y = min(hits)
            return iv + x, jv + y, N
    return None


# -- verdicts and reports ---------------------------------------------------------------------


class WspStatus(str, Enum):
    CERTIFIED_HOLDS = "CERTIFIED_HOLDS"
    WITNESSED_FAILS = "WITNESSED_FAILS"
    NO_FAILURE_FOUND = "NO_FAILURE_FOUND"


@dataclass(frozen=True)
class WspVerdict:
    """WSP status with the evidence behind it."""

    status: WspStatus
    depth: int
    d_sequence: tuple = ()
    witness: object = None
    certificate: object = None
    exact_overlaps: tuple = ()

    def __post_init__(self):
        if self.status == WspStatus.WITNESSED_FAILS and self.witness is None:
            raise ValueError("a failure verdict needs a witness")
        if self.status == WspStatus.CERTIFIED_HOLDS and self.certificate is None:
            raise ValueError("a holds verdict needs a certificate")
        vals = [v for _, v in self.d_sequence if v is not None]
        if any(b > a for a, b in zip(vals, vals[1:])):
            raise ValueError("d_sequence must be non-increasing")

    @property
    def certificate_kind(self):
        if self.certificate is None:
            return None
        if isinstance(self.certificate, LatticeCertificate):
            return "LATTICE"
        return "SSP"

    def to_dict(self):
        out = {
            "status": self.status.value,
            "depth": self.depth,
            "d_sequence": [[n, _num(v)] for n, v in self.d_sequence],
            "exact_overlaps": [f.to_dict() if hasattr(f, "to_dict") else _words(f) for f in self.exact_overlaps],
        }
        if self.certificate is not None:
            out["certificate"] = self.certificate.to_dict() if isinstance(self.certificate, LatticeCertificate) else {"kind": "SSP", **self.certificate.to_dict()}
        if self.witness is not None:
            out["witness"] = self.witness.to_dict()
        return out


def wsp_verdict(ifs, max_n=8, budget=DEFAULT_WORD_BUDGET, witness=None, overlap_len=8):
    """Combine SSP, the lattice certificate, ``d_n`` and an optional failure witness.

    The ``d_n`` search may hit its budget; the partial sequence is then kept.
    """
    ssp = ssp_check(ifs)
    try:
        crit = wsp_criterion_search(ifs, max_n, budget)
    except ResourceLimitError as exc:
        crit = exc.partial
    seq = tuple((n, v) for n, v in crit.sequence()[: crit.complete_through])
    overlaps = ()
    if ifs.is_affine:
        try:
            overlaps = tuple(exact_overlap_search(ifs, overlap_len, budget))
        except ResourceLimitError:
            overlaps = ()
    if witness is not None:
        return WspVerdict(WspStatus.WITNESSED_FAILS, max_n, seq, witness=witness, exact_overlaps=overlaps)
    if ssp.holds:
        return WspVerdict(WspStatus.CERTIFIED_HOLDS, max_n, seq, certificate=ssp, exact_overlaps=overlaps)
    cert = wsp_unit_fraction_certificate(ifs)
    if cert is not None:
        return WspVerdict(WspStatus.CERTIFIED_HOLDS, max_n, seq, certificate=cert, exact_overlaps=overlaps)
    return WspVerdict(WspStatus.NO_FAILURE_FOUND, max_n, seq, exact_overlaps=overlaps)


@dataclass(frozen=True)
class SeparationReport:
    ssp: SspResult
    overlaps: tuple
    criterion: CriterionSequence
    certificate: object
    verdict: WspVerdict
    notes: tuple = field(default=())

    def to_dict(self):
        return {
            "ssp": self.ssp.to_dict(),
            "exact_overlaps": [f.to_dict() for f in self.overlaps],
            "criterion": self.criterion.to_dict() if self.criterion is not None else None,
            "lattice_certificate": self.certificate.to_dict() if self.certificate is not None else None,
            "verdict": self.verdict.to_dict(),
            "notes": list(self.notes),
        }


def separation_report(ifs, max_n=8, overlap_len=8, budget=DEFAULT_WORD_BUDGET, witness=None):
    """Run every separation analysis; raises ``ResourceLimitError`` with the partial report."""
    notes = []
    hit_limit = False
    ssp = ssp_check(ifs)
    try:
        overlaps = tuple(exact_overlap_search(ifs, overlap_len, budget))
    except ResourceLimitError:
        overlaps = ()
        hit_limit = True
        notes.append(f"exact-overlap search exceeded the budget at combined length {overlap_len}")
    try:
        crit = wsp_criterion_search(ifs, max_n, budget)
    except ResourceLimitError as exc:
        crit = exc.partial
        hit_limit = True
        notes.append(str(exc))
    cert = wsp_unit_fraction_certificate(ifs)
    seq = tuple((n, v) for n, v in crit.sequence()[: crit.complete_through])
    if witness is not None:
        verdict = WspVerdict(WspStatus.WITNESSED_FAILS, max_n, seq, witness=witness, exact_overlaps=overlaps)
    elif ssp.holds:
        verdict = WspVerdict(WspStatus.CERTIFIED_HOLDS, max_n, seq, certificate=ssp, exact_overlaps=overlaps)
    elif cert is not None:
        verdict = WspVerdict(WspStatus.CERTIFIED_HOLDS, max_n, seq, certificate=cert, exact_overlaps=overlaps)
    else:
        verdict = WspVerdict(WspStatus.NO_FAILURE_FOUND, max_n, seq, exact_overlaps=overlaps)
        notes.append(f"no WSP failure found and no certificate up to n={crit.complete_through}")
    report = SeparationReport(ssp, overlaps, crit, cert, verdict, tuple(notes))
    if hit_limit:
        raise ResourceLimitError("separation analysis hit a budget", partial=report)
    return report
