"""Finite and eventually periodic words over the alphabet ``{1, ..., m}``.

Finite words are plain tuples of ints; the empty tuple stands for the identity
composition.  Infinite words are :class:`InfiniteWordSpec` values.
"""

from dataclasses import dataclass
from itertools import product

from .errors import ResourceLimitError, ValidationError

DEFAULT_WORD_BUDGET = 10**7


def make_word(symbols, m=None):
    """Return ``symbols`` as a tuple, checking each symbol is in ``1..m``."""
    word = tuple(int(s) for s in symbols)
    for s in word:
        if s < 1 or (m is not None and s > m):
            raise ValidationError(f"symbol {s} outside alphabet 1..{m}")
    return word


def drop_last(word, n=1):
    """The prefix left after removing the last ``n`` symbols (``iv^-`` for n=1)."""
    if n > len(word):
        raise ValueError("cannot drop more symbols than the word has")
    return tuple(word[: len(word) - n])


def words_of_length(m, n):
    """All words of length ``n`` in lexicographic order."""
    return (tuple(w) for w in product(range(1, m + 1), repeat=n))


def words_up_to(m, n, include_empty=False):
    """All words of length ``1..n`` (optionally the empty word first), shortlex order."""
    if include_empty:
        yield ()
    for k in range(1, n + 1):
        yield from words_of_length(m, k)


def word_str(word):
    return "".join(str(s) if s < 10 else f"[{s}]" for s in word) or "()"


def _primitive_root(period):
    n = len(period)
    for d in range(1, n + 1):
        if n % d == 0 and period[:d] * (n // d) == period:
            return period[:d]
    return period


@dataclass(frozen=True)
class InfiniteWordSpec:
    """The word ``preperiod + period + period + ...``, stored in canonical form.

    Canonical form uses the shortest period and the shortest preperiod, so two
    specs compare equal exactly when they describe the same infinite word.
    """

    preperiod: tuple
    period: tuple

    def __post_init__(self):
        pre = make_word(self.preperiod)
        per = make_word(self.period)
        if not per:
            raise ValidationError("period must be non-empty")
        per = _primitive_root(per)
        while pre and pre[-1] == per[-1]:
            pre = pre[:-1]
            per = (per[-1],) + per[:-1]
        object.__setattr__(self, "preperiod", pre)
        object.__setattr__(self, "period", per)

    @classmethod
    def periodic(cls, word):
        return cls((), tuple(word))

    @classmethod
    def from_dict(cls, data):
        return cls(tuple(data.get("preperiod", ())), tuple(data["period"]))

    def to_dict(self):
        return {"preperiod": list(self.preperiod), "period": list(self.period)}

    def symbol(self, k):
        """The ``k``-th symbol, counting from 1."""
        if k < 1:
            raise IndexError("positions start at 1")
        if k <= len(self.preperiod):
            return self.preperiod[k - 1]
        return self.period[(k - len(self.preperiod) - 1) % len(self.period)]

    def prefix(self, n):
        """The finite word of the first ``n`` symbols."""
        return tuple(self.symbol(k) for k in range(1, n + 1))

    def shift(self, k):
        """Apply the left shift ``k`` times."""
        if k < 0:
            raise ValueError("shift count must be non-negative")
        if k <= len(self.preperiod):
            return InfiniteWordSpec(self.preperiod[k:], self.period)
        r = (k - len(self.preperiod)) % len(self.period)
        return InfiniteWordSpec((), self.period[r:] + self.period[:r])

    def alphabet_max(self):
        return max(self.preperiod + self.period)

    def __str__(self):
        head = word_str(self.preperiod)
        return f"{head + '.' if self.preperiod else ''}({word_str(self.period)})^inf"


def shift(w, k):
    """``sigma^k`` applied to an eventually periodic word."""
    return w.shift(k)


def moran_class(ifs, k, budget=DEFAULT_WORD_BUDGET):
    """Words ``w`` with ``|r_w| <= rho^k < |r_{w^-}|``, in lexicographic order.

    ``|r_w|`` is the product of the sup-norms of the derivatives along ``w``
    (exact for affine maps), and ``rho`` is the system's declared bound.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    norms = ifs.sup_derivatives()
    threshold = ifs.rho**k
    out = []
    visited = 0
    stack = [((), 1)]
    while stack:
        word, r = stack.pop()
        for s in range(ifs.m, 0, -1):
            visited += 1
            if visited > budget:
                raise ResourceLimitError("Moran class exceeds the word budget", partial=sorted(out))
            child = word + (s,)
            rc = r * norms[s - 1]
            if rc <= threshold:
                out.append(child)
            else:
                stack.append((child, rc))
    out.sort()
    return out
