"""Primes, classical arithmetic functions, and exact polynomial algebra.

Everything here is exact: integer polynomials use Python ints, polynomials
over F_ell keep reduced residue coefficients. The polynomial transforms
(cycle types, the trace-form polynomial of a Weil polynomial, root-power
polynomials) are the building blocks for the reducibility experiments.
"""

from __future__ import annotations

import functools
import math
import random
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import mpmath
import numpy as np

__all__ = [
    "primes_up_to",
    "is_prime",
    "legendre",
    "log_integral",
    "mobius",
    "euler_phi",
    "psi",
    "factorize",
    "partitions",
    "IntPolynomial",
    "ModPolynomial",
    "Partition",
    "factor_mod",
    "cycle_type_mod",
    "weil_q_poly",
    "power_roots_poly",
    "power_roots_poly_mod",
    "stability_exponent",
    "stable_power_orders",
    "separable_after_power",
    "empirical_phi_cdf",
]

_DESK_LIMIT = 2 ** 48


def primes_up_to(x: float) -> list[int]:
    """All primes p <= x, ascending. x below 2 gives an empty list."""
    if x > _DESK_LIMIT:
        raise ValueError(f"x={x} above desk-scale guard 2^48")
    n = int(math.floor(x))
    if n < 2:
        return []
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, int(n ** 0.5) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return [int(p) for p in np.nonzero(sieve)[0]]


_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, valid for all n < 3.3e24."""
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def legendre(a: int, p: int) -> int:
    """Legendre symbol (a|p) for odd prime p, in {-1, 0, 1}."""
    a %= p
    if a == 0:
        return 0
    r = pow(a, (p - 1) // 2, p)
    return 1 if r == 1 else -1


def log_integral(x: float) -> float:
    """Li(x) = integral of dt/log t from 2 to x, relative error <= 1e-9."""
    if x < 2:
        raise ValueError("log_integral requires x >= 2")
    return float(mpmath.li(x, offset=True))


def factorize(n: int) -> list[tuple[int, int]]:
    """Prime factorization [(p, e), ...] by trial division, ascending p."""
    if n < 1:
        raise ValueError("factorize requires n >= 1")
    out = []
    for p in (2, 3):
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
    # remaining factors are coprime to 6; walk the 6k +- 1 wheel
    f = 5
    while f * f <= n:
        for step in (f, f + 2):
            if n % step == 0:
                e = 0
                while n % step == 0:
                    n //= step
                    e += 1
                out.append((step, e))
        f += 6
    if n > 1:
        out.append((n, 1))
    out.sort()
    return out


def mobius(n: int) -> int:
    if n < 1:
        raise ValueError("mobius requires n >= 1")
    fac = factorize(n)
    if any(e > 1 for _, e in fac):
        return 0
    return -1 if len(fac) % 2 else 1


def euler_phi(n: int) -> int:
    """phi(n) = n * prod over prime divisors of (1 - 1/ell)."""
    if n < 1:
        raise ValueError("euler_phi requires n >= 1")
    out = n
    for p, _ in factorize(n):
        out = out // p * (p - 1)
    return out


def psi(n: int) -> int:
    """psi(n) = n * prod over prime divisors of (1 + 1/ell)."""
    if n < 1:
        raise ValueError("psi requires n >= 1")
    out = n
    for p, _ in factorize(n):
        out = out // p * (p + 1)
    return out


# ---------------------------------------------------------------------------
# partitions


Partition = tuple[int, ...]


def partitions(n: int) -> list[Partition]:
    """All partitions of n as descending tuples, in descending lex order."""
    if not 1 <= n <= 30:
        raise ValueError("partitions supports 1 <= n <= 30")

    def gen(remaining: int, cap: int) -> Iterable[tuple[int, ...]]:
        if remaining == 0:
            yield ()
            return
        for part in range(min(cap, remaining), 0, -1):
            for rest in gen(remaining - part, part):
                yield (part,) + rest

    return list(gen(n, n))


# ---------------------------------------------------------------------------
# integer polynomials


@dataclass(frozen=True)
class IntPolynomial:
    """Exact integer polynomial; coefficients ascending, no trailing zeros."""

    coeffs: tuple[int, ...]

    def __post_init__(self):
        c = tuple(int(v) for v in self.coeffs)
        while len(c) > 1 and c[-1] == 0:
            c = c[:-1]
        if not c:
            c = (0,)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return self.coeffs == (0,)

    def leading(self) -> int:
        return self.coeffs[-1]

    def __call__(self, x):
        out = 0
        for c in reversed(self.coeffs):
            out = out * x + c
        return out

    def __add__(self, other: "IntPolynomial") -> "IntPolynomial":
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        return IntPolynomial(tuple(x + y for x, y in zip(a, b)) + a[len(b):])

    def __sub__(self, other: "IntPolynomial") -> "IntPolynomial":
        return self + IntPolynomial(tuple(-c for c in other.coeffs))

    def __mul__(self, other: "IntPolynomial") -> "IntPolynomial":
        a, b = self.coeffs, other.coeffs
        out = [0] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    out[i + j] += x * y
        return IntPolynomial(tuple(out))

    def scale(self, k: int) -> "IntPolynomial":
        return IntPolynomial(tuple(k * c for c in self.coeffs))

    def derivative(self) -> "IntPolynomial":
        if self.degree == 0:
            return IntPolynomial((0,))
        return IntPolynomial(tuple(i * c for i, c in enumerate(self.coeffs) if i > 0))

    def reduce_mod(self, ell: int) -> "ModPolynomial":
        return ModPolynomial(ell, tuple(c % ell for c in self.coeffs))

    @staticmethod
    def from_roots(roots: Sequence[int]) -> "IntPolynomial":
        out = IntPolynomial((1,))
        for r in roots:
            out = out * IntPolynomial((-r, 1))
        return out

    def is_separable(self) -> bool:
        """True when gcd(P, P') is constant, i.e. no repeated complex root."""
        a = [Fraction(c) for c in self.coeffs]
        b = [Fraction(c) for c in self.derivative().coeffs]
        while len(b) > 1 or b[0] != 0:
            # a mod b over Q
            r = a[:]
            while len(r) >= len(b) and (len(r) > 1 or r[0] != 0):
                q = r[-1] / b[-1]
                shift = len(r) - len(b)
                for i, c in enumerate(b):
                    r[i + shift] -= q * c
                while len(r) > 1 and r[-1] == 0:
                    r.pop()
                if len(r) == 1 and r[0] == 0:
                    break
            a, b = b, r
        return len(a) == 1 and a[0] != 0


# ---------------------------------------------------------------------------
# polynomials over F_ell


@dataclass(frozen=True)
class ModPolynomial:
    """Polynomial over F_ell; coefficients reduced, ascending, trimmed."""

    modulus: int
    coeffs: tuple[int, ...]

    def __post_init__(self):
        ell = self.modulus
        c = tuple(int(v) % ell for v in self.coeffs)
        while len(c) > 1 and c[-1] == 0:
            c = c[:-1]
        if not c:
            c = (0,)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return self.coeffs == (0,)

    def leading(self) -> int:
        return self.coeffs[-1]

    def __call__(self, x: int) -> int:
        out = 0
        for c in reversed(self.coeffs):
            out = (out * x + c) % self.modulus
        return out

    def _check(self, other: "ModPolynomial"):
        if self.modulus != other.modulus:
            raise ValueError("mixed moduli")

    def __add__(self, other: "ModPolynomial") -> "ModPolynomial":
        self._check(other)
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        return ModPolynomial(self.modulus, tuple(x + y for x, y in zip(a, b)) + a[len(b):])

    def __sub__(self, other: "ModPolynomial") -> "ModPolynomial":
        self._check(other)
        return self + other.scale(-1)

    def __mul__(self, other: "ModPolynomial") -> "ModPolynomial":
        self._check(other)
        ell = self.modulus
        a, b = self.coeffs, other.coeffs
        out = [0] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    out[i + j] = (out[i + j] + x * y) % ell
        return ModPolynomial(ell, tuple(out))

    def scale(self, k: int) -> "ModPolynomial":
        return ModPolynomial(self.modulus, tuple(k * c for c in self.coeffs))

    def monic(self) -> "ModPolynomial":
        lc = self.leading()
        if lc == 0:
            raise ValueError("zero polynomial has no monic form")
        if lc == 1:
            return self
        return self.scale(pow(lc, -1, self.modulus))

    def divmod(self, other: "ModPolynomial") -> tuple["ModPolynomial", "ModPolynomial"]:
        self._check(other)
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        ell = self.modulus
        inv_lc = pow(other.leading(), -1, ell)
        rem = list(self.coeffs)
        db = other.degree
        quo = [0] * max(len(rem) - db, 1)
        while len(rem) - 1 >= db and any(rem):
            if rem[-1] == 0:
                rem.pop()
                continue
            shift = len(rem) - 1 - db
            q = rem[-1] * inv_lc % ell
            quo[shift] = q
            for i, c in enumerate(other.coeffs):
                rem[i + shift] = (rem[i + shift] - q * c) % ell
            rem.pop()
        return ModPolynomial(ell, tuple(quo)), ModPolynomial(ell, tuple(rem) or (0,))

    def __mod__(self, other: "ModPolynomial") -> "ModPolynomial":
        return self.divmod(other)[1]

    def __floordiv__(self, other: "ModPolynomial") -> "ModPolynomial":
        return self.divmod(other)[0]

    def gcd(self, other: "ModPolynomial") -> "ModPolynomial":
        a, b = self, other
        while not b.is_zero():
            a, b = b, a % b
        if a.is_zero():
            return a
        return a.monic()

    def derivative(self) -> "ModPolynomial":
        if self.degree == 0:
            return ModPolynomial(self.modulus, (0,))
        return ModPolynomial(
            self.modulus, tuple(i * c for i, c in enumerate(self.coeffs) if i > 0)
        )

    def powmod(self, e: int, mod: "ModPolynomial") -> "ModPolynomial":
        """self^e reduced mod 'mod', by square and multiply."""
        result = ModPolynomial(self.modulus, (1,))
        base = self % mod
        while e > 0:
            if e & 1:
                result = result * base % mod
            base = base * base % mod
            e >>= 1
        return result

    def is_separable(self) -> bool:
        d = self.derivative()
        if d.is_zero():
            return self.degree == 0
        return self.gcd(d).degree == 0

    @staticmethod
    def x(ell: int) -> "ModPolynomial":
        return ModPolynomial(ell, (0, 1))


def _equal_degree_split(f: ModPolynomial, d: int, rng: random.Random) -> ModPolynomial:
    """Find a proper monic factor of f, where f is a product of >= 2
    distinct irreducibles all of degree d (Cantor-Zassenhaus)."""
    ell = f.modulus
    n = f.degree
    if ell == 2:
        # trace map splitting for characteristic 2
        while True:
            a_coeffs = tuple(rng.randrange(2) for _ in range(n))
            a = ModPolynomial(2, a_coeffs or (0,))
            t = a
            acc = a
            for _ in range(d - 1):
                t = t * t % f
                acc = acc + t
            g = f.gcd(acc)
            if 0 < g.degree < n:
                return g
    e = (ell ** d - 1) // 2
    while True:
        a_coeffs = tuple(rng.randrange(ell) for _ in range(n))
        a = ModPolynomial(ell, a_coeffs or (0,))
        if a.degree == 0 and a.coeffs[0] == 0:
            continue
        g = f.gcd(a)
        if 0 < g.degree < n:
            return g
        b = a.powmod(e, f) - ModPolynomial(ell, (1,))
        g = f.gcd(b)
        if 0 < g.degree < n:
            return g


def _factor_squarefree_monic(f: ModPolynomial, rng: random.Random) -> list[ModPolynomial]:
    """Irreducible factors of a squarefree monic f, via distinct-degree then
    equal-degree factorization."""
    ell = f.modulus
    out: list[ModPolynomial] = []
    x = ModPolynomial.x(ell)
    h = x
    rest = f
    d = 0
    while rest.degree > 0:
        d += 1
        if 2 * d > rest.degree:
            out.append(rest)
            break
        h = h.powmod(ell, rest)
        g = rest.gcd(h - x)
        if g.degree > 0:
            # g is the product of all irreducible factors of degree d
            stack = [g]
            while stack:
                piece = stack.pop()
                if piece.degree == d:
                    out.append(piece)
                else:
                    split = _equal_degree_split(piece, d, rng)
                    stack.append(split)
                    stack.append(piece // split)
            rest = rest // g
            h = h % rest
    return out


def factor_mod(f: ModPolynomial) -> list[tuple[ModPolynomial, int]]:
    """Full factorization over F_ell: list of (monic irreducible, multiplicity),
    sorted by (degree, coefficients). The unit is dropped."""
    if f.is_zero():
        raise ValueError("cannot factor the zero polynomial")
    ell = f.modulus
    f = f.monic()
    if f.degree == 0:
        return []
    rng = random.Random(hash((ell, f.coeffs)) & 0xFFFFFFFF)
    result: dict[tuple[int, ...], int] = {}

    def record(g: ModPolynomial, mult: int):
        result[g.coeffs] = result.get(g.coeffs, 0) + mult

    def work(g: ModPolynomial, mult: int):
        if g.degree == 0:
            return
        d = g.derivative()
        if d.is_zero():
            # g = h(T^ell); over the prime field the coefficients are fixed
            # by Frobenius, so g = h1(T)^ell with h1 built from every ell-th
            # coefficient
            h1 = ModPolynomial(ell, g.coeffs[::ell])
            work(h1, mult * ell)
            return
        sf = g.gcd(d)
        if sf.degree == 0:
            for piece in _factor_squarefree_monic(g, rng):
                record(piece, mult)
            return
        work(g // sf, mult)
        work(sf, mult)

    work(f, 1)
    items = [(ModPolynomial(ell, c), m) for c, m in result.items()]
    items.sort(key=lambda t: (t[0].degree, t[0].coeffs))
    return items


def cycle_type_mod(f: IntPolynomial, ell: int) -> Optional[Partition]:
    """Descending degree sequence of the distinct irreducible factors of
    f mod ell, or None when the reduction is inseparable."""
    if f.leading() % ell == 0:
        raise ValueError("leading coefficient vanishes mod ell")
    fbar = f.reduce_mod(ell).monic()
    if not fbar.is_separable():
        return None
    degs = sorted((g.degree for g, _ in factor_mod(fbar)), reverse=True)
    return tuple(degs)


# ---------------------------------------------------------------------------
# Weil polynomial transforms


def weil_q_poly(P: IntPolynomial, q: int) -> IntPolynomial:
    """The unique monic degree-g Q with T^g * Q(T + q/T) = P(T), for monic P
    of degree 2g satisfying the multiplier-q functional equation."""
    if P.leading() != 1:
        raise ValueError("P must be monic")
    if P.degree % 2 != 0 or P.degree == 0:
        raise ValueError("P must have even positive degree")
    g = P.degree // 2
    if g > 3:
        raise ValueError("supported up to g = 3")
    c = P.coeffs
    for k in range(1, g + 1):
        if c[g - k] != q ** k * c[g + k]:
            raise ValueError(
                f"functional equation fails: coeff[{g-k}]={c[g-k]} != "
                f"q^{k}*coeff[{g+k}]={q ** k * c[g + k]}"
            )
    residual = list(c)
    b = [0] * (g + 1)
    for j in range(g, -1, -1):
        b[j] = residual[g + j]
        # subtract b_j * T^g * (T + q/T)^j = b_j * sum binom(j,m) q^m T^(g+j-2m)
        for m in range(j + 1):
            residual[g + j - 2 * m] -= b[j] * math.comb(j, m) * q ** m
    if any(residual):
        raise ValueError("expansion residual nonzero; P is not of the stated form")
    return IntPolynomial(tuple(b))


def _power_sums(P: IntPolynomial, count: int) -> list[int]:
    """Power sums p_1..p_count of the roots of monic P, by Newton's identity."""
    n = P.degree
    c = P.coeffs
    e = [(-1) ** i * c[n - i] for i in range(n + 1)]  # elementary symmetric
    p: list[int] = []
    for k in range(1, count + 1):
        if k <= n:
            s = (-1) ** (k - 1) * k * e[k]
            for j in range(1, k):
                s += (-1) ** (j - 1) * e[j] * p[k - j - 1]
        else:
            s = 0
            for j in range(1, n + 1):
                s += (-1) ** (j - 1) * e[j] * p[k - j - 1]
        p.append(s)
    return p


def power_roots_poly(P: IntPolynomial, m: int) -> IntPolynomial:
    """Monic polynomial whose roots are the m-th powers of P's roots."""
    if P.leading() != 1:
        raise ValueError("P must be monic")
    if not 1 <= m <= 10 ** 4:
        raise ValueError("m out of supported range")
    if P.degree > 8:
        raise ValueError("degree capped at 8")
    if m == 1:
        return P
    n = P.degree
    if n == 0:
        return P
    p_all = _power_sums(P, n * m)
    pm = [p_all[k * m - 1] for k in range(1, n + 1)]  # power sums of alpha^m
    e = [1]
    for i in range(1, n + 1):
        s = 0
        for j in range(1, i + 1):
            s += (-1) ** (j - 1) * e[i - j] * pm[j - 1]
        if s % i != 0:
            raise ArithmeticError("Newton inversion produced a non-integer")
        e.append(s // i)
    coeffs = [(-1) ** (n - i) * e[n - i] for i in range(n + 1)]
    return IntPolynomial(tuple(coeffs))


def _min_poly_in_quotient(beta: ModPolynomial, h: ModPolynomial) -> ModPolynomial:
    """Minimal polynomial over F_ell of beta in the field F_ell[U]/(h)."""
    ell = h.modulus
    d = h.degree
    # rows: 1, beta, beta^2, ... as vectors of length d; find first dependency
    rows: list[list[int]] = []
    pivots: list[int] = []
    combos: list[list[int]] = []  # expresses each reduced row in terms of beta powers
    power = ModPolynomial(ell, (1,))
    for k in range(d + 1):
        vec = list(power.coeffs) + [0] * (d - len(power.coeffs))
        combo = [0] * (d + 1)
        combo[k] = 1
        for row, piv, cmb in zip(rows, pivots, combos):
            if vec[piv] != 0:
                fac = vec[piv] * pow(row[piv], -1, ell) % ell
                vec = [(v - fac * r) % ell for v, r in zip(vec, row)]
                combo = [(x - fac * y) % ell for x, y in zip(combo, cmb)]
        nz = next((i for i, v in enumerate(vec) if v != 0), None)
        if nz is None:
            return ModPolynomial(ell, tuple(combo)).monic()
        rows.append(vec)
        pivots.append(nz)
        combos.append(combo)
        power = power * beta % h
    raise AssertionError("no dependency found below dimension bound")


def power_roots_poly_mod(f: ModPolynomial, m: int) -> ModPolynomial:
    """Polynomial over F_ell whose roots are the m-th powers of f's roots
    (with multiplicity), computed factor by factor so m may be huge.

    For an irreducible factor h with root alpha, U^m mod h represents
    alpha^m and its characteristic polynomial over F_ell is
    minpoly(alpha^m)^(deg h / deg minpoly).
    """
    if f.is_zero():
        raise ValueError("zero polynomial")
    ell = f.modulus
    out = ModPolynomial(ell, (1,))
    for h, mult in factor_mod(f):
        if h.degree == 0:
            continue
        beta = ModPolynomial.x(ell).powmod(m, h)
        mp = _min_poly_in_quotient(beta, h)
        piece = ModPolynomial(ell, (1,))
        for _ in range(h.degree // mp.degree):
            piece = piece * mp
        for _ in range(mult):
            out = out * piece
    return out


# ---------------------------------------------------------------------------
# stability exponent for the root-power separability test


def stability_exponent(n: int, override: Optional[int] = None) -> int:
    """Exponent s(n) = lcm of all k with phi(k) <= n^2.

    Rationale: a ratio of two roots that is a primitive k-th root of unity
    lies in a field of degree <= n^2 over Q, forcing phi(k) <= n^2; raising
    roots to the s-th power therefore collapses exactly the root pairs whose
    ratio is a root of unity. Overridable for experimentation.
    """
    if override is not None:
        return override
    if not 2 <= n <= 8:
        raise ValueError("n out of supported range")
    out = 1
    for k in stable_power_orders(n):
        out = math.lcm(out, k)
    return out


def stable_power_orders(n: int) -> list[int]:
    """All k >= 2 with phi(k) <= n^2 (phi(k) >= sqrt(k/2) bounds the search)."""
    bound = 2 * n ** 4 + 1
    return [k for k in range(2, bound + 1) if euler_phi(k) <= n ** 2]


def separable_after_power(P: IntPolynomial, n: Optional[int] = None) -> bool:
    """Whether P^(s) is separable for s = stability_exponent(n).

    Equivalent finite test: P itself separable, and P^(k) separable for every
    k >= 2 with phi(k) <= n^2. A collapse under the s-th power means some
    root ratio is a primitive k-th root of unity; that k satisfies
    phi(k) <= n^2 and divides s, so the collapse already shows up at k.
    """
    if n is None:
        n = P.degree
    if not P.is_separable():
        return False
    for k in stable_power_orders(n):
        if not power_roots_poly(P, k).is_separable():
            return False
    return True


# ---------------------------------------------------------------------------
# empirical distribution of phi(n)/n


@functools.lru_cache(maxsize=2)
def _phi_ratio_sorted(N: int) -> np.ndarray:
    phi = np.arange(N + 1, dtype=np.int64)
    for p in primes_up_to(N):
        phi[p::p] -= phi[p::p] // p
    ratios = phi[1:].astype(np.float64) / np.arange(1, N + 1, dtype=np.float64)
    ratios.sort()
    return ratios


def empirical_phi_cdf(N: int, z: float) -> float:
    """|{n <= N : phi(n)/n < z}| / N."""
    if not 1 <= N <= 10 ** 7:
        raise ValueError("N out of supported range")
    if z < 0.0 or z > 1.0:
        warnings.warn("z clamped to [0, 1]")
        z = min(max(z, 0.0), 1.0)
    ratios = _phi_ratio_sorted(N)
    return float(np.searchsorted(ratios, z, side="left")) / N
