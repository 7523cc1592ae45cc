"""Number tower for exact and certified real arithmetic.

Four representations (rationals, quadratic irrationals, continued-fraction
streams, constructed Liouville numbers) share one contract: every value can
produce a certified rational enclosure ``[lo, hi]`` of width at most
``2**-bits``, and (where enough information exists) a stream of continued
fraction partial quotients.  All values are immutable; all operations are
pure functions.

The working norm everywhere is l-infinity; see :func:`nearest_lattice`.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, NamedTuple, Optional, Sequence

from .errors import GhLabIndeterminate, PrecisionExhausted

DEFAULT_BITS = 200
_MAX_BITS = 1 << 20
_SQFREE_TRIAL_BOUND = 10_000


class Interval(NamedTuple):
    """Closed rational interval certified to contain the represented value."""

    lo: Fraction
    hi: Fraction

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def __float__(self) -> float:
        return float(self.mid)

    def shift(self, q: Fraction) -> "Interval":
        return Interval(self.lo + q, self.hi + q)

    def scale(self, k: int) -> "Interval":
        if k >= 0:
            return Interval(self.lo * k, self.hi * k)
        return Interval(self.hi * k, self.lo * k)

    def add(self, other: "Interval") -> "Interval":
        return Interval(self.lo + other.lo, self.hi + other.hi)

    def abs(self) -> "Interval":
        if self.lo <= 0 <= self.hi:
            return Interval(Fraction(0), max(-self.lo, self.hi))
        if self.hi < 0:
            return Interval(-self.hi, -self.lo)
        return Interval(self.lo, self.hi)

    def contains(self, q: Fraction) -> bool:
        return self.lo <= q <= self.hi


class NumberRepr:
    """Base class: an exact or certified real number."""

    #: True when the representation itself certifies irrationality.
    known_irrational: bool = False

    def enclosure(self, bits: int = DEFAULT_BITS) -> Interval:
        """Certified enclosure of width <= 2**-bits."""
        raise NotImplementedError

    def exact_fraction(self) -> Optional[Fraction]:
        """The exact rational value, when the representation is rational."""
        return None

    def partial_quotients(self) -> Iterator[int]:
        """Continued fraction partial quotients a0, a1, ...

        Default implementation refines enclosures adaptively; exact
        subclasses override.  Irrational values always make progress;
        enclosure-limited values raise :class:`PrecisionExhausted`.
        """
        bits = 64
        emitted: list[int] = []
        while True:
            if bits > _MAX_BITS:
                raise PrecisionExhausted(
                    f"no further partial quotients below {_MAX_BITS} bits"
                )
            lo, hi = self.enclosure(bits)
            agreed = _agreed_quotients(lo, hi)
            if len(agreed) > len(emitted):
                for a in agreed[len(emitted):]:
                    emitted.append(a)
                    yield a
            bits *= 2

    def hull(self) -> Interval:
        """Best certified interval available without a width requirement."""
        return self.enclosure(64)

    def __float__(self) -> float:
        f = self.exact_fraction()
        if f is not None:
            return float(f)
        return float(self.hull().mid)


def _agreed_quotients(lo: Fraction, hi: Fraction) -> list[int]:
    """Partial quotients shared by every real in [lo, hi]."""
    out: list[int] = []
    while True:
        a_lo, a_hi = lo.__floor__(), hi.__floor__()
        if a_lo != a_hi:
            return out
        out.append(a_lo)
        lo, hi = lo - a_lo, hi - a_lo
        if lo == 0 or hi == 0:
            # an endpoint terminates here; the next quotient is ambiguous
            return out
        lo, hi = 1 / hi, 1 / lo


@dataclass(frozen=True)
class Rational(NumberRepr):
    """Exact rational, stored in lowest terms with positive denominator."""

    value: Fraction

    def __init__(self, value, den=None):
        if den is not None:
            value = Fraction(value, den)
        object.__setattr__(self, "value", Fraction(value))

    def enclosure(self, bits: int = DEFAULT_BITS) -> Interval:
        return Interval(self.value, self.value)

    def exact_fraction(self) -> Fraction:
        return self.value

    def partial_quotients(self) -> Iterator[int]:
        # Euclidean algorithm; canonical form (last quotient >= 2 unless
        # the value is an integer).
        p, q = self.value.numerator, self.value.denominator
        while True:
            a, r = divmod(p, q)
            yield a
            if r == 0:
                return
            p, q = q, r

    def __repr__(self):
        return f"Rational({self.value})"


def _squarefree_normalize(b: int, D: int) -> tuple[int, int]:
    """Pull square factors of D (found by trial division) into b."""
    f = 2
    while f <= _SQFREE_TRIAL_BOUND and f * f <= D:
        while D % (f * f) == 0:
            D //= f * f
            b *= f
        f += 1
    return b, D


@dataclass(frozen=True)
class QuadraticIrrational(NumberRepr):
    """(a + b*sqrt(D))/c with integer a, b, c and non-square D >= 2.

    Normalized so c > 0, gcd(a, b, c) = 1, and D square-free up to trial
    division by primes <= 10**4.  The continued fraction is computed
    exactly (integer recurrence) and is eventually periodic, which yields
    an exact bound on the partial quotients.
    """

    a: int
    b: int
    c: int
    D: int

    known_irrational = True

    def __init__(self, a: int, b: int, c: int, D: int):
        if c == 0:
            raise ValueError("zero denominator")
        if b == 0:
            raise ValueError("b = 0 is rational; use Rational")
        if D < 2:
            raise ValueError("need D >= 2")
        s = math.isqrt(D)
        if s * s == D:
            raise ValueError(f"D = {D} is a perfect square; use Rational")
        b, D = _squarefree_normalize(b, D)
        if c < 0:
            a, b, c = -a, -b, -c
        g = math.gcd(math.gcd(abs(a), abs(b)), c)
        object.__setattr__(self, "a", a // g)
        object.__setattr__(self, "b", b // g)
        object.__setattr__(self, "c", c // g)
        object.__setattr__(self, "D", D)

    def enclosure(self, bits: int = DEFAULT_BITS) -> Interval:
        # sqrt(D) in [n/scale, (n+1)/scale] with scale chosen so the final
        # width |b|/(c*scale) <= 2**-bits.
        scale = (abs(self.b) << bits) // self.c + 1
        n = math.isqrt(self.D * scale * scale)
        s_lo, s_hi = Fraction(n, scale), Fraction(n + 1, scale)
        if self.b > 0:
            lo = (self.a + self.b * s_lo) / self.c
            hi = (self.a + self.b * s_hi) / self.c
        else:
            lo = (self.a + self.b * s_hi) / self.c
            hi = (self.a + self.b * s_lo) / self.c
        return Interval(lo, hi)

    def _pqa_state(self) -> tuple[int, int, int]:
        # Rewrite (a + b*sqrt(D))/c as (P + sqrt(N))/Q with Q | N - P^2.
        if self.b > 0:
            P, Q, N = self.a, self.c, self.b * self.b * self.D
        else:
            P, Q, N = -self.a, -self.c, self.b * self.b * self.D
        if (N - P * P) % Q != 0:
            P, N, Q = P * abs(Q), N * Q * Q, Q * abs(Q)
        return P, Q, N

    def partial_quotients(self) -> Iterator[int]:
        P, Q, N = self._pqa_state()
        m = math.isqrt(N)
        while True:
            if Q > 0:
                a = (P + m) // Q
            else:
                a = -((P + m) // (-Q)) - 1
            yield a
            P = a * Q - P
            Q = (N - P * P) // Q

    def max_partial_quotient(self) -> int:
        """Exact sup of the partial quotients a_k, k >= 1 (period detected)."""
        P, Q, N = self._pqa_state()
        m = math.isqrt(N)
        seen: dict[tuple[int, int], int] = {}
        quots: list[int] = []
        while (P, Q) not in seen:
            seen[(P, Q)] = len(quots)
            if Q > 0:
                a = (P + m) // Q
            else:
                a = -((P + m) // (-Q)) - 1
            quots.append(a)
            P = a * Q - P
            Q = (N - P * P) // Q
        # quotients in the cycle recur at arbitrarily large indices, so they
        # count toward the tail sup even when the cycle starts at a_0
        cycle = quots[seen[(P, Q)]:]
        return max(quots[1:] + cycle)

    def bad_approx_constant(self) -> Fraction:
        """c with dist(q*x, Z) >= c/q for all q >= 1 (c = 1/(K+2))."""
        return Fraction(1, self.max_partial_quotient() + 2)

    def __repr__(self):
        return f"QuadraticIrrational(({self.a}+{self.b}*sqrt({self.D}))/{self.c})"


@dataclass(frozen=True)
class CFStream(NumberRepr):
    """A real known only through a prefix of its continued fraction.

    ``quotients`` is the known prefix [a0; a1, ...]; unless ``terminated``
    the tail is undetermined and the enclosure is the hull of every
    consistent value (including termination at the prefix).  Precision
    requests beyond that hull raise :class:`PrecisionExhausted`.
    """

    quotients: tuple[int, ...]
    terminated: bool = False

    def __init__(self, quotients: Sequence[int], terminated: bool = False):
        q = tuple(int(a) for a in quotients)
        if not q:
            raise ValueError("need at least a0")
        if any(a < 1 for a in q[1:]):
            raise ValueError("partial quotients a1, a2, ... must be >= 1")
        object.__setattr__(self, "quotients", q)
        object.__setattr__(self, "terminated", bool(terminated))

    def _last_convergents(self) -> tuple[Fraction, Fraction]:
        h2, k2, h1, k1 = 0, 1, 1, 0
        for a in self.quotients:
            h2, k2, h1, k1 = h1, k1, a * h1 + h2, a * k1 + k2
        return Fraction(h1, k1), Fraction(h1 + h2, k1 + k2)

    def enclosure(self, bits: int = DEFAULT_BITS) -> Interval:
        last, mediant = self._last_convergents()
        if self.terminated:
            return Interval(last, last)
        lo, hi = min(last, mediant), max(last, mediant)
        if hi - lo > Fraction(1, 1 << bits):
            raise PrecisionExhausted(
                f"cf prefix of length {len(self.quotients)} pins the value "
                f"only to width {float(hi - lo):.3e}"
            )
        return Interval(lo, hi)

    def hull(self) -> Interval:
        last, mediant = self._last_convergents()
        if self.terminated:
            return Interval(last, last)
        return Interval(min(last, mediant), max(last, mediant))

    def exact_fraction(self) -> Optional[Fraction]:
        if self.terminated:
            return self._last_convergents()[0]
        return None

    def partial_quotients(self) -> Iterator[int]:
        yield from self.quotients
        if not self.terminated:
            raise PrecisionExhausted(
                f"cf stream cutoff after {len(self.quotients)} quotients"
            )

    def __repr__(self):
        body = str(self.quotients[0])
        if self.quotients[1:]:
            body += ";" + ",".join(str(a) for a in self.quotients[1:])
        tail = "" if self.terminated else ", ..."
        return f"CFStream([{body}]{tail})"


@dataclass(frozen=True)
class Schedule:
    """Strictly increasing exponent schedule e_1, e_2, ... for Liouville sums.

    Must satisfy e_{j+1} >= (j+1)*e_j, which guarantees the Liouville
    inequality for the partial-sum witnesses.
    """

    name: str
    explicit: Optional[tuple[int, ...]] = None
    func: Optional[Callable[[int], int]] = None

    def __post_init__(self):
        if (self.explicit is None) == (self.func is None):
            raise ValueError("exactly one of explicit/func required")
        if self.exponent(1) < 1:
            raise ValueError("need e_1 >= 1")
        for j in range(1, min(self.depth or 9, 9)):
            e_j, e_next = self.exponent(j), self.exponent(j + 1)
            if e_next < (j + 1) * e_j:
                raise ValueError(
                    f"schedule violates e_(j+1) >= (j+1)*e_j at j={j}"
                )

    @property
    def depth(self) -> Optional[int]:
        return len(self.explicit) if self.explicit is not None else None

    def exponent(self, j: int) -> int:
        if self.explicit is not None:
            if j > len(self.explicit):
                raise PrecisionExhausted(
                    f"explicit schedule has only {len(self.explicit)} terms"
                )
            return self.explicit[j - 1]
        return self.func(j)

    @staticmethod
    def factorial() -> "Schedule":
        return Schedule("factorial", func=math.factorial)

    @staticmethod
    def from_list(exponents: Sequence[int]) -> "Schedule":
        return Schedule("explicit", explicit=tuple(int(e) for e in exponents))


@dataclass(frozen=True)
class LiouvilleConstructed(NumberRepr):
    """x = sum_j base**(-e_j) with the schedule invariant certifying that
    the partial sums p_j / base**e_j are Liouville-quality approximations:
    |x - p_j/q_j| <= 2 * q_j**-(j+1).  Such x is transcendental, so linear
    combinations k*x + r (k != 0, r rational) are never integers.
    """

    base: int
    schedule: Schedule

    known_irrational = True

    def __init__(self, base: int, schedule: Schedule):
        if base < 2:
            raise ValueError("base must be >= 2")
        object.__setattr__(self, "base", int(base))
        object.__setattr__(self, "schedule", schedule)

    def partial_sum(self, depth: int) -> Fraction:
        return Fraction(*self.witness(depth))

    def witness(self, j: int) -> tuple[int, int]:
        """(p_j, q_j) with q_j = base**e_j and p_j/q_j the j-th partial sum."""
        e_j = self.schedule.exponent(j)
        q = self.base ** e_j
        p = sum(self.base ** (e_j - self.schedule.exponent(i))
                for i in range(1, j + 1))
        return p, q

    def tail_bound(self, depth: int) -> Fraction:
        """Certified bound on x - S_depth (tail is positive)."""
        e_next = self.schedule.exponent(depth + 1)
        return Fraction(2, self.base ** e_next)

    def enclosure(self, bits: int = DEFAULT_BITS) -> Interval:
        j = 1
        target = Fraction(1, 1 << bits)
        while True:
            try:
                tail = self.tail_bound(j)
            except PrecisionExhausted as exc:
                raise PrecisionExhausted(
                    f"explicit schedule exhausted before reaching width 2**-{bits}"
                ) from exc
            if tail <= target:
                s = self.partial_sum(j)
                return Interval(s, s + tail)
            j += 1

    def hull(self) -> Interval:
        depth = self.schedule.depth
        if depth is None:
            return self.enclosure(64)
        # invariant e_{J+1} >= (J+1) e_J bounds the tail without the next
        # stored exponent
        s = self.partial_sum(depth)
        e_last = self.schedule.exponent(depth)
        tail = Fraction(2, self.base ** ((depth + 1) * e_last))
        return Interval(s, s + tail)

    def __repr__(self):
        return f"LiouvilleConstructed(base={self.base}, schedule={self.schedule.name})"


def integer(n: int) -> Rational:
    return Rational(Fraction(n))


def cf_convergents(x: NumberRepr, count: int) -> list[Fraction]:
    """First `count` continued-fraction convergents of x, in lowest terms.

    Consecutive convergents alternate below/above x and satisfy
    p_{k+1} q_k - p_k q_{k+1} = +-1.  Raises PrecisionExhausted when the
    representation cannot supply `count` quotients (stream cutoff, or a
    rational with a shorter expansion).
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    out: list[Fraction] = []
    h2, k2, h1, k1 = 0, 1, 1, 0
    quotients = x.partial_quotients()
    while len(out) < count:
        try:
            a = next(quotients)
        except StopIteration:
            raise PrecisionExhausted(
                f"only {len(out)} partial quotients available, need {count}"
            ) from None
        h2, k2, h1, k1 = h1, k1, a * h1 + h2, a * k1 + k2
        out.append(Fraction(h1, k1))
    return out


class LatticePoint(NamedTuple):
    """Result of :func:`nearest_lattice`.

    ``eta`` minimizes ||v + eta|| over integer vectors; ``ties`` lists the
    components that sat exactly on a half-integer (resolved by rounding the
    eta component toward -infinity).
    """

    eta: tuple[int, ...]
    delta: float
    delta_enclosure: Interval
    ties: tuple[int, ...]
    norm: str
    bits: int


def _nearest_int(x: NumberRepr, bits: int) -> tuple[int, bool]:
    """Nearest integer to x; tie at half-integer resolved upward
    (so that eta = -n rounds toward -infinity) and flagged."""
    f = x.exact_fraction()
    if f is not None:
        fl = f.__floor__()
        frac = f - fl
        if frac == Fraction(1, 2):
            return fl + 1, True
        return (fl if frac < Fraction(1, 2) else fl + 1), False
    b = bits
    while b <= _MAX_BITS:
        iv = x.enclosure(b)
        n = round(iv.mid)
        if Fraction(2 * n - 1, 2) < iv.lo and iv.hi < Fraction(2 * n + 1, 2):
            return n, False
        b *= 2
    raise PrecisionExhausted(
        f"cannot separate value from a half-integer at {_MAX_BITS} bits"
    )


def nearest_lattice(
    v: Sequence[NumberRepr],
    bits: int = DEFAULT_BITS,
    norm: str = "linf",
) -> LatticePoint:
    """Integer vector eta minimizing ||v + eta|| with a certified distance.

    The minimizer is componentwise (valid for l-infinity and l1); for
    all-rational input the distance enclosure is exact (width zero).
    """
    if norm not in ("linf", "l1"):
        raise ValueError(f"unsupported norm {norm!r}")
    eta: list[int] = []
    ties: list[int] = []
    comps: list[Interval] = []
    for i, x in enumerate(v):
        n, tie = _nearest_int(x, bits)
        if tie:
            ties.append(i)
        eta.append(-n)
        comps.append(x.enclosure(bits).shift(Fraction(-n)).abs())
    if not comps:
        zero = Interval(Fraction(0), Fraction(0))
        return LatticePoint((), 0.0, zero, (), norm, bits)
    if norm == "linf":
        enc = Interval(max(c.lo for c in comps), max(c.hi for c in comps))
    else:
        enc = Interval(sum((c.lo for c in comps), Fraction(0)),
                       sum((c.hi for c in comps), Fraction(0)))
    return LatticePoint(tuple(eta), float(enc.mid), enc, tuple(ties), norm, bits)


_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+))?\s*$")
_QUAD_RE = re.compile(
    r"^\s*\(\s*([+-]?\d+)\s*([+-])\s*(\d+)\s*\*\s*sqrt\(\s*(\d+)\s*\)\s*\)"
    r"\s*/\s*([+-]?\d+)\s*$"
)
_CF_RE = re.compile(r"^\s*cf\s*:\s*\[\s*([+-]?\d+)\s*(?:;([0-9,\s]*))?\]\s*$")
_LIOU_RE = re.compile(r"^\s*liouville\s*:\s*(.*)$")


def parse_number(text: str) -> NumberRepr:
    """Parse a number literal.

    Grammar: "p/q" | "(a+b*sqrt(D))/c" | "cf:[a0;a1,a2,...]"
    | "liouville:base=2,schedule=factorial" (schedule may also be an
    explicit list "[1,2,6,24]").  A bare integer is accepted as p/1.
    """
    m = _RATIONAL_RE.match(text)
    if m:
        den = int(m.group(2)) if m.group(2) else 1
        if den == 0:
            raise ValueError(f"zero denominator in {text!r}")
        return Rational(Fraction(int(m.group(1)), den))
    m = _QUAD_RE.match(text)
    if m:
        a, sign, b, D, c = m.groups()
        b = int(b) if sign == "+" else -int(b)
        return QuadraticIrrational(int(a), b, int(c), int(D))
    m = _CF_RE.match(text)
    if m:
        head = int(m.group(1))
        tail = m.group(2)
        rest = [int(t) for t in tail.split(",") if t.strip()] if tail else []
        return CFStream([head] + rest)
    m = _LIOU_RE.match(text)
    if m:
        base, schedule = None, None
        for part in m.group(1).split(","):
            part = part.strip()
            if part.startswith("base="):
                base = int(part[len("base="):])
            elif part.startswith("schedule="):
                spec = part[len("schedule="):].strip()
                if spec == "factorial":
                    schedule = Schedule.factorial()
                elif spec.startswith("[") and spec.endswith("]"):
                    schedule = Schedule.from_list(
                        int(t) for t in spec[1:-1].split(";") if t.strip()
                    )
                else:
                    raise ValueError(f"unknown schedule {spec!r}")
            else:
                raise ValueError(f"unknown liouville field {part!r}")
        if base is None or schedule is None:
            raise ValueError("liouville literal needs base= and schedule=")
        return LiouvilleConstructed(base, schedule)
    raise ValueError(f"unrecognized number literal {text!r}")


def number_literal(x: NumberRepr) -> str:
    """Canonical literal text for x (inverse of parse_number)."""
    if isinstance(x, Rational):
        v = x.value
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(x, QuadraticIrrational):
        sign = "+" if x.b >= 0 else "-"
        return f"({x.a}{sign}{abs(x.b)}*sqrt({x.D}))/{x.c}"
    if isinstance(x, CFStream):
        return "cf:[" + str(x.quotients[0]) + (
            ";" + ",".join(str(a) for a in x.quotients[1:]) if x.quotients[1:] else ""
        ) + "]"
    if isinstance(x, LiouvilleConstructed):
        sched = x.schedule
        if sched.explicit is not None:
            spec = "[" + ";".join(str(e) for e in sched.explicit) + "]"
        else:
            spec = sched.name
        return f"liouville:base={x.base},schedule={spec}"
    raise TypeError(f"no literal form for {type(x).__name__}")


def golden_ratio() -> QuadraticIrrational:
    return QuadraticIrrational(1, 1, 2, 5)
