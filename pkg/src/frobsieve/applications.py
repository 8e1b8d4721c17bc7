"""Experiments over trace tables.

Prime group orders, fixed-trace counts, thin-set counts, Galois-group
certification for Weil polynomials, bad-set measures in the symplectic
similitude group, empirical Frobenius equidistribution, and the assembled
square-trace sieve that ties the abstract machinery to curve data.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .arith_core import (
    IntPolynomial,
    ModPolynomial,
    cycle_type_mod,
    factor_mod,
    factorize,
    is_prime,
    log_integral,
    partitions,
    power_roots_poly,
    power_roots_poly_mod,
    primes_up_to,
    stability_exponent,
    stable_power_orders,
)
from .characters import char_table_gl2
from .curves import TraceTable, WeilPolynomial, weil_poly_from_counts
from .group_core import (
    FiniteGroup,
    SampledSymplecticGroup,
    charpoly_mod,
    count_trace,
    count_trace_det,
    gl2,
    gl2_class_by_charpoly,
    gsp4,
    similitude_multiplier,
)
from .sieve_core import (
    SieveCondition,
    SieveInstance,
    SieveReport,
    class_measure,
    frobenius_bound_evaluator,
    sieve_upper_bound,
    support_products,
)

__all__ = [
    "KoblitzConfig",
    "ThinSetPredicate",
    "koblitz_count",
    "koblitz_factor",
    "koblitz_admissible_set",
    "koblitz_level_factor",
    "koblitz_L",
    "KoblitzLPair",
    "generic_koblitz_constant",
    "KoblitzConstant",
    "koblitz_experiment",
    "KoblitzRow",
    "lang_trotter_count",
    "lt_admissible_set",
    "lt_class_measure",
    "lt_L_lower",
    "lt_experiment",
    "LTReport",
    "LTRow",
    "thin_set_count",
    "frobenius_field_predicate",
    "trace_equality_predicate",
    "chavdarov_test",
    "ChavdarovCertificate",
    "chavdarov_density",
    "ChavdarovDensityReport",
    "gsp_bad_measures",
    "GspBadMeasures",
    "chebotarev_empirical",
    "ChebotarevReport",
    "surjectivity_evidence",
    "SurjectivityReport",
    "toy_square_trace",
    "ToySieveReport",
]

_ENUM_ELL_CAP = 13
_TOY_PRIMES = (3, 5, 7, 11, 13)


def _require_genus(table: TraceTable, genus: int, what: str) -> None:
    if table.genus != genus:
        raise ValueError(f"{what} needs a genus-{genus} trace table")


# ---------------------------------------------------------------------------
# Koblitz: prime group orders


@dataclass(frozen=True)
class KoblitzConfig:
    """Settings for the prime-order experiment.

    The generic case is t = 1 with no extra level structure.  A known
    finite image at some level M > 1 can be supplied as an explicit
    matrix group; its contribution to the constant is one extra
    Euler-like factor computed by enumeration.
    """

    curve: object = None
    t: int = 1
    assume_surjective: bool = True
    euler_cutoff: int = 10 ** 6
    q_schedule: tuple = ()
    level_m: int = 1
    level_image: Optional[FiniteGroup] = None

    def __post_init__(self):
        if self.t < 1:
            raise ValueError("torsion divisor t must be >= 1")
        if self.level_m < 1:
            raise ValueError("level M must be >= 1")
        if (self.level_image is None) != (self.level_m == 1):
            raise ValueError("level_m and level_image must be given together")
        if self.level_m > 1:
            for ell, _ in factorize(math.gcd(self.t, self.level_m)):
                vt = _valuation(self.t, ell)
                vm = _valuation(self.level_m, ell)
                if vt >= vm:
                    warnings.warn(
                        f"t has l-adic valuation {vt} >= {vm} at l={ell}; the "
                        "level-M correction assumes v_l(t) < v_l(M)"
                    )


def _valuation(n: int, ell: int) -> int:
    v = 0
    while n % ell == 0:
        n //= ell
        v += 1
    return v


def koblitz_count(table: TraceTable, x, t: int = 1, with_skipped: bool = False):
    """#{good p <= x : (p + 1 - a_p)/t is prime}.

    Primes where t does not divide the group order are skipped; pass
    with_skipped=True to get (count, skipped) instead of the bare count.
    """
    _require_genus(table, 1, "koblitz_count")
    if t < 1:
        raise ValueError("t must be >= 1")
    primes, traces = table.up_to(x)
    orders = primes + 1 - traces
    count = 0
    skipped = 0
    for n in orders.tolist():
        q, r = divmod(n, t)
        if r:
            skipped += 1
        elif is_prime(q):
            count += 1
    if with_skipped:
        return count, skipped
    return count


def koblitz_factor(ell: int) -> Fraction:
    """(1 - measure)/measure for the prime-order condition under full image.

    Closed form 1/l + (2l^2 - l - 3)/(l^4 - 2l^3 - l^2 + 3l), valid when
    l does not divide t.
    """
    if ell < 2 or not is_prime(ell):
        raise ValueError("ell must be prime")
    return Fraction(1, ell) + Fraction(
        2 * ell ** 2 - ell - 3, ell ** 4 - 2 * ell ** 3 - ell ** 2 + 3 * ell
    )


def _det_one_minus(rep: tuple, q: int) -> int:
    a, b, c, d = rep
    return ((1 - a) * (1 - d) - b * c) % q


def koblitz_admissible_set(ell: int, t: int = 1, G: Optional[FiniteGroup] = None):
    """Classes of GL2(F_ell) with det(I - A) in t * (Z/ell)^x.

    For ell not dividing t the condition is det(I - A) != 0; for ell | t
    the coset t * (Z/ell)^x collapses to {0}.
    """
    if ell > _ENUM_ELL_CAP:
        raise ValueError(f"enumeration capped at ell = {_ENUM_ELL_CAP}")
    if G is None:
        G = gl2(ell)
    want_zero = t % ell == 0
    admissible = []
    for ci, members in enumerate(G.conjugacy_classes()):
        dv = _det_one_minus(G.elements[int(members[0])], ell)
        if (dv == 0) == want_zero:
            admissible.append(ci)
    return frozenset(admissible)


def koblitz_level_factor(image: FiniteGroup, t: int, M: int) -> Fraction:
    """(1 - mu)/mu for det(I - A) in t * (Z/MZ)^x over a supplied image.

    Enumerates the image directly, so it also covers proper subgroups of
    GL2(Z/MZ); with the full group at prime M it reproduces
    koblitz_factor(M) exactly.
    """
    units = {u for u in range(1, M) if math.gcd(u, M) == 1}
    target = {t * u % M for u in units}
    hits = 0
    for el in image.elements:
        if _det_one_minus(el, M) in target:
            hits += 1
    if hits == 0:
        raise ValueError("admissible set is empty; factor undefined")
    mu = Fraction(hits, image.order)
    return (1 - mu) / mu


def _fraction_sum(items: list) -> Fraction:
    """Pairwise tree sum; keeps intermediate denominators small."""
    if not items:
        return Fraction(0)
    items = list(items)
    while len(items) > 1:
        items = [
            items[i] + items[i + 1] if i + 1 < len(items) else items[i]
            for i in range(0, len(items), 2)
        ]
    return items[0]


@dataclass(frozen=True)
class KoblitzLPair:
    """L(Q) computed two ways: subset enumeration and Dirichlet partial sum."""

    q: float
    subset: Optional[Fraction]
    coefficient: object  # Fraction (exact range) or float (sieve range)

    def __float__(self) -> float:
        return float(self.coefficient)


_SUBSET_Q_CAP = 10 ** 5
_EXACT_Q_CAP = 10 ** 5
_COEFF_Q_CAP = 10 ** 7


def koblitz_L(Q, factor: Optional[Callable] = None) -> KoblitzLPair:
    """L(Q) = sum over D with prod(D) <= Q of prod of factor(l).

    Route one enumerates the subsets D depth-first; route two sums the
    coefficients b_n of h(s) = prod(1 + factor(l) l^-s), which are
    supported on the squarefree n <= Q.  Both are exact rationals up to
    Q = 1e5; beyond that only the coefficient route runs, in float64.
    """
    if Q < 1:
        raise ValueError("Q must be >= 1")
    if Q > _COEFF_Q_CAP:
        raise ValueError(f"Q capped at {_COEFF_Q_CAP}")
    if factor is None:
        factor = koblitz_factor
    limit = int(Q)
    ps = [int(p) for p in primes_up_to(limit)]
    fvals = {p: Fraction(factor(p)) for p in ps}

    subset = None
    if Q <= _SUBSET_Q_CAP:
        weights = {p: p for p in ps}
        terms = []
        for D in support_products(weights, Q):
            prod = Fraction(1)
            for p in D:
                prod *= fvals[p]
            terms.append(prod)
        subset = _fraction_sum(terms)

    if Q <= _EXACT_Q_CAP:
        coeff = _coefficient_sum_exact(limit, fvals)
    else:
        coeff = _coefficient_sum_float(limit, fvals)
    return KoblitzLPair(q=float(Q), subset=subset, coefficient=coeff)


def _coefficient_sum_exact(limit: int, fvals: dict) -> Fraction:
    # smallest-prime-factor sieve; b_n = prod factor(p) over squarefree n
    spf = np.zeros(limit + 1, dtype=np.int64)
    for p in fvals:
        spf[p::p] = np.where(spf[p::p] == 0, p, spf[p::p])
    b: list = [None] * (limit + 1)
    b[1] = Fraction(1)
    terms = [Fraction(1)]
    for n in range(2, limit + 1):
        p = int(spf[n])
        m = n // p
        if m % p == 0:
            continue  # not squarefree
        prev = b[m]
        if prev is None:
            continue
        b[n] = prev * fvals[p]
        terms.append(b[n])
    return _fraction_sum(terms)


def _coefficient_sum_float(limit: int, fvals: dict) -> float:
    b = np.ones(limit + 1, dtype=np.float64)
    b[0] = 0.0
    for p, f in fvals.items():
        b[p::p] *= float(f)
        sq = p * p
        if sq <= limit:
            b[sq::sq] = 0.0
    return float(b[1:].sum())


@dataclass(frozen=True)
class KoblitzConstant:
    """Euler-product constant with a rigorous truncation bracket."""

    value: float
    lower: float
    upper: float
    cutoff: int

    @property
    def tail_width(self) -> float:
        return self.upper - self.lower


def generic_koblitz_constant(
    cutoff: int,
    level_m: int = 1,
    level_factor: Optional[Fraction] = None,
) -> KoblitzConstant:
    """C with 1/C = prod over primes l <= cutoff of (1 + f(l))(1 - 1/l).

    Writing f(l) = 1/l + c_l, each factor is 1 + u_l with
    u_l = c_l (1 - 1/l) - 1/l^2 and |u_l| <= 2.9/l^2 for l >= 3, so the
    dropped tail of log(1/C) is at most sum over primes l > cutoff of
    (2.9/l^2)(1 + 3/l^2).  That sum is bounded through the 8 reduced
    residues per block of 30: sum_{p > x} p^-2 <= (8/900) / (floor(x/30) - 1).
    A supplied level-M image replaces the factors at l | M with the single
    enumerated factor (1 + level_factor) * prod_{l | M}(1 - 1/l).
    """
    if not 2 <= cutoff <= 10 ** 8:
        raise ValueError("cutoff out of range")
    if (level_factor is None) != (level_m == 1):
        raise ValueError("level_m and level_factor must be given together")
    level_primes = set()
    if level_m > 1:
        level_primes = {p for p, _ in factorize(level_m)}
        if any(p > cutoff for p in level_primes):
            raise ValueError("cutoff must cover every prime dividing M")
    ps = np.asarray(primes_up_to(cutoff), dtype=np.float64)
    if level_primes:
        keep = ~np.isin(ps.astype(np.int64), sorted(level_primes))
        ps = ps[keep]
    # u_l in float64; exact rationals would change nothing at 1e-16 scale
    c = (2 * ps ** 2 - ps - 3) / (ps ** 4 - 2 * ps ** 3 - ps ** 2 + 3 * ps)
    u = c * (1 - 1 / ps) - 1 / ps ** 2
    log_inv = float(np.log1p(u).sum())
    if level_primes:
        log_inv += math.log1p(float(level_factor))
        for p in level_primes:
            log_inv += math.log1p(-1.0 / p)
    x = float(cutoff)
    k0 = int(x // 30)
    if k0 < 2:
        tail = 2.9 * (1 + 3 / x ** 2) * 0.5  # crude but only hit below cutoff 60
    else:
        tail = 2.9 * (1 + 3 / x ** 2) * (8.0 / 900.0) / (k0 - 1)
    value = math.exp(-log_inv)
    return KoblitzConstant(
        value=value,
        lower=value * math.exp(-tail),
        upper=value * math.exp(tail),
        cutoff=int(cutoff),
    )


@dataclass(frozen=True)
class KoblitzRow:
    x: int
    count: int
    skipped: int
    conjecture: float
    ratio: float
    unconditional: object
    grh: object
    heuristic: bool = True


def koblitz_experiment(
    cfg: KoblitzConfig,
    table: TraceTable,
    xs: Sequence[int],
    c_abs: float = 1.0,
    delta: float = 1.0,
) -> list:
    """Empirical prime-order counts next to the conjectured size and the
    two sieve-bound shapes, one row per x.

    The conjecture column is C * x/(log x)^2 with the generic constant;
    the bound columns evaluate (Li x + error)/L(Q(x)) with
    Q = c_abs * (log x / (log log x)^2)^(1/24) unconditionally and
    Q = x^(1/22)/(log x)^((2+delta)/11) under GRH.  Every derived column
    is heuristic: implied constants are replaced by c_abs.
    """
    if cfg.curve is not None and cfg.curve != table.curve:
        raise ValueError("config names a different curve than the table")
    if cfg.level_m > 1:
        const = generic_koblitz_constant(
            cfg.euler_cutoff,
            level_m=cfg.level_m,
            level_factor=koblitz_level_factor(cfg.level_image, cfg.t, cfg.level_m),
        )
    else:
        const = generic_koblitz_constant(cfg.euler_cutoff)
    rows = []
    for x in xs:
        count, skipped = koblitz_count(table, x, cfg.t, with_skipped=True)
        lx = math.log(x)
        conj = const.value * x / lx ** 2
        q_un = c_abs * (lx / math.log(lx) ** 2) ** (1 / 24)
        q_grh = x ** (1 / 22) / lx ** ((2 + delta) / 11)
        l_un = float(koblitz_L(max(q_un, 1.0)))
        l_grh = float(koblitz_L(max(q_grh, 1.0)))
        rows.append(
            KoblitzRow(
                x=int(x),
                count=count,
                skipped=skipped,
                conjecture=conj,
                ratio=count / conj if conj > 0 else math.inf,
                unconditional=frobenius_bound_evaluator(
                    x, q_un, 4, 2, l_un, "unconditional", c_abs=c_abs
                ),
                grh=frobenius_bound_evaluator(
                    x, q_grh, 4, 2, l_grh, "GRH", c_abs=c_abs
                ),
            )
        )
    return rows


# ---------------------------------------------------------------------------
# Lang-Trotter: fixed trace


def lang_trotter_count(table: TraceTable, x, t: int) -> int:
    """#{good p <= x : a_p = t}."""
    _require_genus(table, 1, "lang_trotter_count")
    primes, traces = table.up_to(x)
    return int(np.count_nonzero(traces == t))


def lt_admissible_set(ell: int, t: int, G: Optional[FiniteGroup] = None):
    """Classes of GL2(F_ell) with trace congruent to t."""
    if ell > _ENUM_ELL_CAP:
        raise ValueError(f"enumeration capped at ell = {_ENUM_ELL_CAP}")
    if G is None:
        G = gl2(ell)
    want = t % ell
    out = []
    for ci, members in enumerate(G.conjugacy_classes()):
        a, b, c, d = G.elements[int(members[0])]
        if (a + d) % ell == want:
            out.append(ci)
    return frozenset(out)


def lt_class_measure(ell: int, t: int) -> Fraction:
    """mu{A : tr A = t mod ell}; equals (l^2-l-1)/((l-1)^2(l+1)) off t = 0."""
    order = ell * (ell - 1) ** 2 * (ell + 1)
    return Fraction(count_trace(ell, t % ell), order)


def lt_L_lower(Q: int) -> int:
    """Sum of phi(d) over squarefree d with psi(d) <= Q, exactly."""
    if not 1 <= Q <= 10 ** 6:
        raise ValueError("Q out of supported range")
    limit = int(Q)  # psi(d) >= d, so d <= Q suffices
    phi = np.arange(limit + 1, dtype=np.int64)
    psi_v = np.arange(limit + 1, dtype=np.int64)
    sqfree = np.ones(limit + 1, dtype=bool)
    for p in primes_up_to(limit):
        phi[p::p] -= phi[p::p] // p
        psi_v[p::p] += psi_v[p::p] // p
        if p * p <= limit:
            sqfree[p * p :: p * p] = False
    mask = sqfree & (psi_v <= Q)
    mask[0] = False
    return int(phi[mask].sum())


@dataclass(frozen=True)
class LTRow:
    x: int
    count: int
    shape_bound: float
    ratio: float
    heuristic: bool = True


@dataclass(frozen=True)
class LTReport:
    t: int
    rows: tuple
    q_book: int
    degree_sum: int
    degree_sum_cap: int
    max_degree: int
    max_degree_cap: int
    bookkeeping_ok: bool


def lt_experiment(table: TraceTable, t: int, xs: Sequence[int], q_book: int = 13 ** 3) -> LTReport:
    """Fixed-trace counts against the x^(4/5)/(log x)^(1/5) shape, plus the
    character-degree bookkeeping behind the Q^5 error term.

    The bookkeeping enumerates D with prod(l+1) <= q_book over the odd
    primes l <= 13 and verifies sum over D of prod(sum of degrees) <= Q^4
    and max over D of prod(l+1) <= Q, both with exact character tables.
    """
    _require_genus(table, 1, "lt_experiment")
    if q_book > _ENUM_ELL_CAP ** 3:
        raise ValueError(f"bookkeeping Q capped at {_ENUM_ELL_CAP ** 3}")
    rows = []
    for x in xs:
        cnt = lang_trotter_count(table, x, t)
        shape = x ** 0.8 / math.log(x) ** 0.2
        rows.append(LTRow(x=int(x), count=cnt, shape_bound=shape, ratio=cnt / shape))
    lams = [p for p in _TOY_PRIMES if p + 1 <= q_book]
    degree_sum_one = {p: sum(char_table_gl2(p).degrees) for p in lams}
    weights = {p: p + 1 for p in lams}
    degree_sum = 0
    max_degree = 1
    for D in support_products(weights, q_book):
        s = 1
        m = 1
        for p in D:
            s *= degree_sum_one[p]
            m *= p + 1
        degree_sum += s
        max_degree = max(max_degree, m)
    ok = degree_sum <= q_book ** 4 and max_degree <= q_book
    return LTReport(
        t=t,
        rows=tuple(rows),
        q_book=q_book,
        degree_sum=degree_sum,
        degree_sum_cap=q_book ** 4,
        max_degree=max_degree,
        max_degree_cap=q_book,
        bookkeeping_ok=ok,
    )


# ---------------------------------------------------------------------------
# thin sets


@dataclass(frozen=True)
class ThinSetPredicate:
    """Decision procedure on (a_1, ..., a_n, p) plus an optional per-ell
    reduction generator for sieve use."""

    arity: int
    decide: Callable
    omega_ell: Optional[Callable] = None
    name: str = ""

    def __post_init__(self):
        if self.arity < 1:
            raise ValueError("arity must be >= 1")


def frobenius_field_predicate(d_k: int) -> ThinSetPredicate:
    """True iff a^2 - 4p = d_k * c^2 for some integer c.

    Membership pins the Frobenius field Q(sqrt(a^2 - 4p)) to the
    imaginary quadratic field of discriminant d_k.
    """
    if d_k >= 0 or d_k % 4 not in (0, 1):
        raise ValueError("d_k must be a negative discriminant (0 or 1 mod 4)")

    def decide(traces, p):
        (a,) = traces
        q, r = divmod(a * a - 4 * p, d_k)
        if r != 0 or q < 0:
            return False
        c = math.isqrt(q)
        return c * c == q

    return ThinSetPredicate(arity=1, decide=decide, name=f"frobenius-field({d_k})")


def trace_equality_predicate() -> ThinSetPredicate:
    return ThinSetPredicate(
        arity=2,
        decide=lambda traces, p: traces[0] == traces[1],
        name="trace-equality",
    )


def thin_set_count(tables: Sequence[TraceTable], pred: ThinSetPredicate, x) -> int:
    """#{common good p <= x : pred(a_p(E_1), ..., a_p(E_n), p)}."""
    if len(tables) != pred.arity:
        raise ValueError(f"predicate arity {pred.arity} != {len(tables)} tables")
    cols = []
    common = None
    for tab in tables:
        _require_genus(tab, 1, "thin_set_count")
        ps, _ = tab.up_to(x)
        common = ps if common is None else np.intersect1d(common, ps)
    for tab in tables:
        ps, tr = tab.up_to(x)
        cols.append(tr[np.searchsorted(ps, common)])
    count = 0
    for i, p in enumerate(common.tolist()):
        if pred.decide(tuple(int(c[i]) for c in cols), p):
            count += 1
    return count


# ---------------------------------------------------------------------------
# Galois group certification for Weil polynomials


@dataclass(frozen=True)
class ChavdarovCertificate:
    """One-sided certificate: witnesses per required cycle type, or the
    statement that none were found below the search bound."""

    certified: bool
    witnesses: dict
    searched_to: int

    def __bool__(self) -> bool:
        return self.certified


def chavdarov_test(P: WeilPolynomial, ell_bound: int = 1000) -> ChavdarovCertificate:
    """Certify Gal(P) = W_2g from factorization patterns mod small primes.

    Needs cycle types (2g) and (2, 1^(2g-2)) for P and every partition of
    g for the companion Q; a miss below ell_bound certifies nothing (the
    criterion is sufficient, not necessary).
    """
    g = P.genus
    if g not in (1, 2):
        raise ValueError("certification implemented for genus 1 and 2")
    if ell_bound > 10 ** 3:
        raise ValueError("ell_bound capped at 1000")
    p_poly = P.as_poly()
    q_poly = P.q_poly()
    p_targets = {(2 * g,), tuple([2] + [1] * (2 * g - 2))}
    q_targets = {tuple(sig) for sig in partitions(g)}
    missing = {("P", t) for t in p_targets} | {("Q", t) for t in q_targets}
    witnesses: dict = {}
    for ell in primes_up_to(ell_bound):
        if P.q % ell == 0:
            continue
        ct_p = cycle_type_mod(p_poly, int(ell))
        ct_q = cycle_type_mod(q_poly, int(ell))
        for kind, ct in (("P", ct_p), ("Q", ct_q)):
            if ct is None:
                continue
            key = (kind, ct)
            if key in missing:
                missing.discard(key)
                witnesses[key] = int(ell)
        if not missing:
            break
    return ChavdarovCertificate(
        certified=not missing, witnesses=witnesses, searched_to=int(ell_bound)
    )


_SEP_CERT_PRIMES = (3, 5, 7, 11, 13, 17, 19, 23, 29, 31)


def _separable_after_power_s(P: IntPolynomial, s: int) -> bool:
    """Char-0 separability of P^(s) for an explicit exponent s.

    Fast path: a separable reduction mod ell has nonzero discriminant,
    which lifts.  Slow path: a root-ratio collapse of order k forces
    phi(k) <= deg(P)^2 and k | s, so only those k need the exact check.
    """
    for ell in _SEP_CERT_PRIMES:
        if P.leading() % ell == 0:
            continue
        ps = power_roots_poly_mod(ModPolynomial(ell, P.coeffs), s)
        if all(mult == 1 for _, mult in factor_mod(ps)):
            return True
    if not P.is_separable():
        return False
    for k in stable_power_orders(P.degree):
        if s % k == 0 and not power_roots_poly(P, k).is_separable():
            return False
    return True


@dataclass(frozen=True)
class ChavdarovDensityRow:
    x: int
    n_primes: int
    n_certified: int
    fraction: float
    not_certified: int
    heuristic_bound: float


@dataclass(frozen=True)
class ChavdarovDensityReport:
    rows: tuple
    ell_bound: int
    s: int
    consistency_failures: int
    heuristic: bool = True


def chavdarov_density(
    table: TraceTable,
    xs: Sequence[int],
    ell_bound: int = 100,
    s_override: Optional[int] = None,
) -> ChavdarovDensityReport:
    """Per-x fraction of good primes whose Weil quartic is certified to
    have Galois group W_4 and stay that way under root powers.

    not_certified is the upper proxy for the exceptional count; the
    heuristic column is its theorem shape x^(51/52) (log x)^(1/13) at
    g = 2, reported but never asserted.  Certified primes get an
    independent recheck that the companion quadratic is irreducible
    over Q whenever its (2) cycle type was the witness used.
    """
    _require_genus(table, 2, "chavdarov_density")
    xs = sorted(int(x) for x in xs)
    if not xs:
        raise ValueError("need at least one x")
    s = stability_exponent(4, override=s_override)
    primes, counts = table.up_to(xs[-1])
    certified = np.zeros(primes.size, dtype=bool)
    consistency_failures = 0
    for i, p in enumerate(primes.tolist()):
        w = weil_poly_from_counts(p, int(counts[i, 0]), int(counts[i, 1]))
        cert = chavdarov_test(w, ell_bound)
        if not cert:
            continue
        if not _separable_after_power_s(w.as_poly(), s):
            continue
        certified[i] = True
        # independent recheck of the S_2 image of the companion quadratic:
        # x^2 + bx + c is irreducible over Q iff b^2 - 4c is not a square
        qc = w.q_poly().coeffs
        disc = qc[1] * qc[1] - 4 * qc[0]
        root = math.isqrt(abs(disc))
        if disc >= 0 and root * root == disc:
            consistency_failures += 1
    rows = []
    for x in xs:
        n = int(np.searchsorted(primes, x, side="right"))
        good = int(certified[:n].sum())
        rows.append(
            ChavdarovDensityRow(
                x=x,
                n_primes=n,
                n_certified=good,
                fraction=good / n if n else 0.0,
                not_certified=n - good,
                heuristic_bound=x ** (51 / 52) * math.log(x) ** (1 / 13),
            )
        )
    return ChavdarovDensityReport(
        rows=tuple(rows),
        ell_bound=ell_bound,
        s=s,
        consistency_failures=consistency_failures,
    )


# ---------------------------------------------------------------------------
# bad-set measures in GSp4


_PARTITIONS_OF_2 = ((2,), (1, 1))


def _classify_bad_sets(cp: tuple, m: int, ell: int, s: int) -> dict:
    """Membership of one charpoly (with multiplier m) in each bad set."""
    P = ModPolynomial(ell, cp)
    fac = factor_mod(P)
    in_c1 = not (len(fac) == 1 and fac[0][1] == 1)
    degs = sorted(h.degree for h, _ in fac)
    in_c2 = not (
        len(fac) == 3 and all(mu == 1 for _, mu in fac) and degs == [1, 1, 2]
    )
    powered = power_roots_poly_mod(P, s)
    in_c3 = any(mu >= 2 for _, mu in factor_mod(powered))
    # companion quadratic: u^2 + c3 u + (c2 - 2m)
    Q = ModPolynomial(ell, ((cp[2] - 2 * m) % ell, cp[3], 1))
    qfac = factor_mod(Q)
    irred_quad = len(qfac) == 1 and qfac[0][1] == 1 and qfac[0][0].degree == 2
    split_dist = len(qfac) == 2
    return {
        "C1": in_c1,
        "C2": in_c2,
        "C3": in_c3,
        "C(2)": not irred_quad,
        "C(1,1)": not split_dist,
    }


@dataclass(frozen=True)
class GspBadMeasures:
    ell: int
    mode: str
    s: int
    samples: int
    measures: dict  # name -> Fraction (exact) or (low, estimate, high)


def gsp_bad_measures(
    ell: int,
    mode: str = "exact",
    samples: int = 10 ** 5,
    s_override: Optional[int] = None,
    seed: int = 0,
) -> GspBadMeasures:
    """Measures of the reducible / wrong-shape / power-collapse classes.

    Exact mode enumerates GSp4(F_3) by conjugacy class; montecarlo mode
    samples GSp4(F_5) or GSp4(F_7) and reports binomial 95% intervals.
    Membership depends only on the characteristic polynomial and the
    similitude multiplier, so classification is done per class or
    memoized per charpoly.
    """
    s = stability_exponent(4, override=s_override)
    if mode == "exact":
        if ell != 3:
            raise ValueError("exact enumeration supported at ell = 3 only")
        G = gsp4(3)
        classes = G.conjugacy_classes()
        num = {name: 0 for name in ("C1", "C2", "C3", "C(2)", "C(1,1)")}
        for members in classes:
            rep = G.elements[int(members[0])]
            cp = charpoly_mod(rep, 4, 3)
            m = similitude_multiplier(rep, 3)
            flags = _classify_bad_sets(cp, m, 3, s)
            for name, hit in flags.items():
                if hit:
                    num[name] += len(members)
        measures = {name: Fraction(v, G.order) for name, v in num.items()}
        return GspBadMeasures(ell=3, mode="exact", s=s, samples=G.order, measures=measures)
    if mode != "montecarlo":
        raise ValueError("mode must be 'exact' or 'montecarlo'")
    if ell not in (5, 7):
        raise ValueError("montecarlo mode supported at ell in {5, 7}")
    if not 1 <= samples <= 10 ** 6:
        raise ValueError("samples out of range")
    backend = SampledSymplecticGroup(ell)
    rng = np.random.default_rng(seed)
    cache: dict = {}
    hits = {name: 0 for name in ("C1", "C2", "C3", "C(2)", "C(1,1)")}
    for _ in range(samples):
        el = backend.sample(rng)
        cp = charpoly_mod(el, 4, ell)
        m = similitude_multiplier(el, ell)
        key = (cp, m)
        flags = cache.get(key)
        if flags is None:
            flags = _classify_bad_sets(cp, m, ell, s)
            cache[key] = flags
        for name, hit in flags.items():
            if hit:
                hits[name] += 1
    measures = {}
    for name, h in hits.items():
        est = h / samples
        half = 1.96 * math.sqrt(max(est * (1 - est), 0.0) / samples)
        measures[name] = (max(est - half, 0.0), est, min(est + half, 1.0))
    return GspBadMeasures(
        ell=ell, mode="montecarlo", s=s, samples=samples, measures=measures
    )


# ---------------------------------------------------------------------------
# empirical Chebotarev


@dataclass(frozen=True)
class ChebotarevFiber:
    trace: int
    det: int
    observed: int
    measure: Fraction
    expected: float
    rel_dev: float


@dataclass(frozen=True)
class ChebotarevReport:
    ell: int
    x: int
    n_primes: int
    fibers: tuple
    measure_total: Fraction
    max_rel_dev: float


def _fiber_counts(table: TraceTable, ell: int, x) -> tuple:
    _require_genus(table, 1, "chebotarev fiber counting")
    if ell > _ENUM_ELL_CAP or not is_prime(ell):
        raise ValueError(f"ell must be a prime <= {_ENUM_ELL_CAP}")
    primes, traces = table.up_to(x)
    keep = primes != ell
    primes, traces = primes[keep], traces[keep]
    key = (traces % ell) * ell + primes % ell
    counts = np.bincount(key, minlength=ell * ell)
    return primes.size, counts


def chebotarev_empirical(table: TraceTable, ell: int, x) -> ChebotarevReport:
    """Observed (a_p, p) mod ell fiber counts against mu * Li(x).

    Every (t, d) fiber of GL2(F_ell) has positive measure
    count_trace_det(t, d)/|G|, and the measures sum to 1 exactly.
    """
    n, counts = _fiber_counts(table, ell, x)
    order = ell * (ell + 1) * (ell - 1) ** 2
    li = log_integral(float(x))
    fibers = []
    total = Fraction(0)
    max_dev = 0.0
    for t in range(ell):
        for d in range(1, ell):
            mu = Fraction(count_trace_det(ell, t, d), order)
            total += mu
            expected = float(mu) * li
            obs = int(counts[t * ell + d])
            dev = abs(obs - expected) / expected
            max_dev = max(max_dev, dev)
            fibers.append(
                ChebotarevFiber(
                    trace=t,
                    det=d,
                    observed=obs,
                    measure=mu,
                    expected=expected,
                    rel_dev=dev,
                )
            )
    return ChebotarevReport(
        ell=ell,
        x=int(x),
        n_primes=n,
        fibers=tuple(fibers),
        measure_total=total,
        max_rel_dev=max_dev,
    )


@dataclass(frozen=True)
class SurjectivityReport:
    full: bool
    ell: int
    x: int
    n_primes: int
    misses: tuple

    def __bool__(self) -> bool:
        return self.full


def surjectivity_evidence(table: TraceTable, ell: int, x) -> SurjectivityReport:
    """True iff every (trace, det) fiber mod ell is hit by some p <= x.

    All fibers have positive measure, so a full image must eventually
    hit each one; persistent misses are evidence of a small image (CM,
    exceptional ell, or x too small).
    """
    n, counts = _fiber_counts(table, ell, x)
    misses = [
        (t, d)
        for t in range(ell)
        for d in range(1, ell)
        if counts[t * ell + d] == 0
    ]
    return SurjectivityReport(
        full=not misses, ell=ell, x=int(x), n_primes=n, misses=tuple(misses)
    )


# ---------------------------------------------------------------------------
# the square-trace toy sieve


@dataclass(frozen=True)
class ToySieveReport:
    x: int
    q: float
    lambdas: tuple
    n_primes: int
    excluded: tuple
    square_count: int
    measures: dict
    sieve: SieveReport

    @property
    def bound(self) -> float:
        return self.sieve.upper_bound


def toy_square_trace(table: TraceTable, x, Q: float = 13.0) -> ToySieveReport:
    """Sieve bound for #{good p <= x : a_p is a perfect square}.

    Conditions live in GL2(F_l) for odd l <= min(Q, 13) with admissible
    classes {tr A in squares mod l}, squares including 0; support is the
    empty set plus singletons, which keeps the character matrix small at
    the cost of a weaker (still valid) bound.  Primes p in Lambda are
    excluded from X since a_p mod p carries no class data there.
    """
    _require_genus(table, 1, "toy_square_trace")
    lams = tuple(p for p in _TOY_PRIMES if p <= Q)
    primes, traces = table.up_to(x)
    if lams:
        keep = ~np.isin(primes, lams)
        excluded = tuple(int(p) for p in primes[~keep])
        primes, traces = primes[keep], traces[keep]
    else:
        excluded = ()
    if primes.size == 0:
        raise ValueError("no usable primes below x")
    tables = {}
    conditions = {}
    measures = {}
    for ell in lams:
        tab = char_table_gl2(ell)
        G = tab.group
        lookup = gl2_class_by_charpoly(G)
        sq = {(i * i) % ell for i in range(ell)}
        admissible = []
        for ci, members in enumerate(G.conjugacy_classes()):
            a, b, c, d = G.elements[int(members[0])]
            if (a + d) % ell in sq:
                admissible.append(ci)
        admissible = frozenset(admissible)
        rho = np.array(
            [
                lookup[(int(t) % ell, int(p) % ell)]
                for t, p in zip(traces.tolist(), primes.tolist())
            ],
            dtype=np.int64,
        )
        conditions[ell] = SieveCondition(group=G, rho=rho, admissible=admissible)
        tables[ell] = tab
        measures[ell] = class_measure(G, admissible)
    support = [()] + [(ell,) for ell in lams]
    inst = SieveInstance(size=int(primes.size), conditions=conditions, support=support)
    report = sieve_upper_bound(inst, tables)
    squares = 0
    for t in traces.tolist():
        if t >= 0:
            r = math.isqrt(t)
            if r * r == t:
                squares += 1
    if report.survivor_count is not None and squares > report.survivor_count:
        raise AssertionError(
            "square traces exceed the survivor count; admissibility is broken"
        )
    return ToySieveReport(
        x=int(x),
        q=float(Q),
        lambdas=lams,
        n_primes=int(primes.size),
        excluded=excluded,
        square_count=squares,
        measures=measures,
        sieve=report,
    )
