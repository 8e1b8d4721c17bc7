"""Tests for the experiment layer.

Oracles: direct enumeration of matrix groups for measures, trial-division
primality for order counts, element-by-element sweeps against class-based
computation, and brute-force subset/divisor loops for the L quantities.
"""

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frobsieve.applications import (
    ChavdarovCertificate,
    KoblitzConfig,
    ThinSetPredicate,
    _coefficient_sum_float,
    _separable_after_power_s,
    chavdarov_density,
    chavdarov_test,
    chebotarev_empirical,
    frobenius_field_predicate,
    generic_koblitz_constant,
    gsp_bad_measures,
    koblitz_L,
    koblitz_admissible_set,
    koblitz_count,
    koblitz_experiment,
    koblitz_factor,
    koblitz_level_factor,
    lang_trotter_count,
    lt_L_lower,
    lt_admissible_set,
    lt_class_measure,
    lt_experiment,
    surjectivity_evidence,
    thin_set_count,
    toy_square_trace,
    trace_equality_predicate,
)
from frobsieve.arith_core import (
    IntPolynomial,
    cycle_type_mod,
    euler_phi,
    factorize,
    mobius,
    primes_up_to,
    psi,
    separable_after_power,
    stability_exponent,
)
from frobsieve.characters import char_table_gl2
from frobsieve.curves import (
    EllipticCurveQ,
    Genus2CurveQ,
    WeilPolynomial,
    build_trace_table,
    weil_poly_from_counts,
)
from frobsieve.group_core import (
    charpoly_mod,
    count_trace,
    gl2,
    similitude_multiplier,
    sl2,
)
from frobsieve.sieve_core import class_measure


E11 = EllipticCurveQ(1, 1)
ECM = EllipticCurveQ(1, 0)  # j=1728, extra automorphisms
G2A = Genus2CurveQ((1, -1, 0, 0, 0, 1))


@pytest.fixture(scope="module")
def e11_table():
    return build_trace_table(E11, 10 ** 4)


@pytest.fixture(scope="module")
def cm_table():
    return build_trace_table(ECM, 10 ** 4)


@pytest.fixture(scope="module")
def g2_table():
    return build_trace_table(G2A, 1200)


def _trial_division_prime(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


# ---------------------------------------------------------------------------
# prime group orders: the Euler factor


def test_koblitz_factor_pins():
    assert koblitz_factor(2) == 2
    assert koblitz_factor(3) == Fraction(7, 9)
    assert koblitz_factor(5) == Fraction(23, 73)


@pytest.mark.parametrize("ell", [2, 3, 5, 7, 11, 13])
def test_koblitz_factor_matches_enumeration(ell):
    # oracle: sweep all of GL2(F_ell) and count det(I - A) != 0
    hits = 0
    order = 0
    for a, b, c, d in itertools.product(range(ell), repeat=4):
        if (a * d - b * c) % ell == 0:
            continue
        order += 1
        if ((1 - a) * (1 - d) - b * c) % ell != 0:
            hits += 1
    mu = Fraction(hits, order)
    assert koblitz_factor(ell) == (1 - mu) / mu


def test_koblitz_factor_rejects_nonprime():
    with pytest.raises(ValueError):
        koblitz_factor(9)
    with pytest.raises(ValueError):
        koblitz_factor(1)


def test_admissible_set_measures():
    G = gl2(3)
    adm = koblitz_admissible_set(3)
    assert class_measure(G, adm) == Fraction(9, 16)
    # ell | t flips the condition to det(I - A) = 0
    zero = koblitz_admissible_set(3, t=3)
    assert class_measure(G, zero) == Fraction(7, 16)
    assert adm & zero == frozenset()


def test_admissible_set_cap():
    with pytest.raises(ValueError, match="capped"):
        koblitz_admissible_set(17)


def test_level_factor_full_group_is_closed_form():
    assert koblitz_level_factor(gl2(5), 1, 5) == koblitz_factor(5)
    assert koblitz_level_factor(gl2(3), 1, 3) == koblitz_factor(3)


def test_level_factor_sl2_oracle():
    # independent sweep over det = 1 matrices
    hits = 0
    order = 0
    for a, b, c, d in itertools.product(range(5), repeat=4):
        if (a * d - b * c) % 5 != 1:
            continue
        order += 1
        if ((1 - a) * (1 - d) - b * c) % 5 != 0:
            hits += 1
    assert order == 120
    mu = Fraction(hits, order)
    assert koblitz_level_factor(sl2(5), 1, 5) == (1 - mu) / mu


def test_level_factor_empty_admissible():
    from frobsieve.group_core import cyclic_group

    # the image {I} inside GL2(Z/2): det(I - I) = 0 never lands in the units
    trivial = type(
        "T", (), {"elements": [(1, 0, 0, 1)], "order": 1}
    )()
    with pytest.raises(ValueError, match="empty"):
        koblitz_level_factor(trivial, 1, 2)


# ---------------------------------------------------------------------------
# L(Q) both ways


@pytest.mark.parametrize("Q", [1, 10, 30, 100, 1000])
def test_koblitz_L_routes_agree(Q):
    pair = koblitz_L(Q)
    assert pair.subset == pair.coefficient
    assert isinstance(pair.subset, Fraction)


def test_koblitz_L_q10_hand_sum():
    f = {p: koblitz_factor(p) for p in (2, 3, 5, 7)}
    # subsets with product <= 10: {}, {2}, {3}, {5}, {7}, {2,3}, {2,5}
    expect = 1 + f[2] + f[3] + f[5] + f[7] + f[2] * f[3] + f[2] * f[5]
    assert koblitz_L(10).subset == expect


def test_koblitz_L_trivial():
    assert koblitz_L(1).coefficient == 1
    assert koblitz_L(1.5).subset == 1


def test_koblitz_L_monotone():
    vals = [float(koblitz_L(q)) for q in (1, 5, 25, 125, 625)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_koblitz_L_float_route_close():
    exact = koblitz_L(10 ** 4).coefficient
    fvals = {int(p): koblitz_factor(int(p)) for p in primes_up_to(10 ** 4)}
    approx = _coefficient_sum_float(10 ** 4, fvals)
    assert math.isclose(float(exact), approx, rel_tol=1e-10)


def test_koblitz_L_range_errors():
    with pytest.raises(ValueError):
        koblitz_L(0.5)
    with pytest.raises(ValueError):
        koblitz_L(10 ** 7 + 1)


@settings(max_examples=15, deadline=None)
@given(st.integers(min_value=1, max_value=400))
def test_koblitz_L_with_harmonic_factor(Q):
    # f(l) = 1/l makes L(Q) the sum of 1/n over squarefree n <= Q
    pair = koblitz_L(Q, factor=lambda p: Fraction(1, p))
    brute = sum(
        Fraction(1, n) for n in range(1, Q + 1) if mobius(n) != 0
    )
    assert pair.subset == brute
    assert pair.coefficient == brute


# ---------------------------------------------------------------------------
# the constant


def test_constant_cutoff_two_is_two_thirds():
    c = generic_koblitz_constant(2)
    # 1/C = (1 + 2)(1 - 1/2) = 3/2 exactly
    assert math.isclose(c.value, 2 / 3, rel_tol=1e-14)
    assert c.lower <= c.value <= c.upper


def test_constant_brackets_are_consistent():
    c3 = generic_koblitz_constant(10 ** 3)
    c4 = generic_koblitz_constant(10 ** 4)
    c5 = generic_koblitz_constant(10 ** 5)
    assert c3.lower <= c5.value <= c3.upper
    assert c4.lower <= c5.value <= c4.upper
    assert c3.tail_width > c4.tail_width > c5.tail_width


def test_constant_tail_width_at_desk_cutoff():
    c = generic_koblitz_constant(10 ** 6)
    assert c.tail_width < 1e-6


def test_constant_level_hook_reproduces_generic():
    # full image at level 5 must reproduce the plain product
    plain = generic_koblitz_constant(1000)
    hooked = generic_koblitz_constant(
        1000, level_m=5, level_factor=koblitz_factor(5)
    )
    assert math.isclose(plain.value, hooked.value, rel_tol=1e-12)


def test_constant_validation():
    with pytest.raises(ValueError):
        generic_koblitz_constant(1)
    with pytest.raises(ValueError):
        generic_koblitz_constant(100, level_m=5)
    with pytest.raises(ValueError, match="cover"):
        generic_koblitz_constant(3, level_m=5, level_factor=Fraction(1))


# ---------------------------------------------------------------------------
# counting prime orders on a real curve


def _naive_ap(a, b, p):
    chi = {0: 0}
    for i in range(1, p):
        chi[i] = 1 if pow(i, (p - 1) // 2, p) == 1 else -1
    s = sum(chi[(x * x * x + a * x + b) % p] for x in range(p))
    return -s


def test_koblitz_count_brute(e11_table):
    got = koblitz_count(e11_table, 200)
    want = 0
    for p in primes_up_to(200):
        p = int(p)
        if p in (2, 31):  # bad reduction
            continue
        if _trial_division_prime(p + 1 - _naive_ap(1, 1, p)):
            want += 1
    assert got == want


def test_koblitz_count_t2_skips_odd_orders(e11_table):
    primes, traces = e11_table.up_to(10 ** 4)
    odd = int(np.count_nonzero((primes + 1 - traces) % 2 == 1))
    count, skipped = koblitz_count(e11_table, 10 ** 4, t=2, with_skipped=True)
    assert skipped == odd
    assert count <= len(primes) - skipped


def test_koblitz_count_validation(e11_table, g2_table):
    with pytest.raises(ValueError, match="genus-1"):
        koblitz_count(g2_table, 100)
    with pytest.raises(ValueError):
        koblitz_count(e11_table, 100, t=0)


def test_koblitz_experiment_rows(e11_table):
    cfg = KoblitzConfig(curve=E11, euler_cutoff=10 ** 5)
    rows = koblitz_experiment(cfg, e11_table, [10 ** 3, 10 ** 4])
    assert [r.x for r in rows] == [10 ** 3, 10 ** 4]
    for r in rows:
        assert r.count == koblitz_count(e11_table, r.x)
        assert r.skipped == 0
        assert r.heuristic
        assert 0.3 < r.ratio < 3.0  # sanity at small x, not a theorem
        assert float(r.unconditional) > 0
        assert float(r.grh) > 0
        assert r.unconditional.regime == "unconditional"
        assert r.grh.regime == "GRH"


def test_koblitz_experiment_curve_mismatch(e11_table):
    cfg = KoblitzConfig(curve=ECM)
    with pytest.raises(ValueError, match="different curve"):
        koblitz_experiment(cfg, e11_table, [100])


def test_koblitz_config_level_warns():
    with pytest.warns(UserWarning, match="valuation"):
        KoblitzConfig(t=5, level_m=5, level_image=gl2(5))


# ---------------------------------------------------------------------------
# fixed traces


def test_lang_trotter_count_matches_scan(e11_table):
    primes, traces = e11_table.up_to(10 ** 4)
    for t in (0, 1, -3):
        want = sum(1 for v in traces.tolist() if v == t)
        assert lang_trotter_count(e11_table, 10 ** 4, t) == want


@pytest.mark.parametrize("ell", [3, 5, 7, 11, 13])
def test_lt_class_measure_identity(ell):
    order = ell * (ell - 1) ** 2 * (ell + 1)
    for t in range(ell):
        mu = lt_class_measure(ell, t)
        assert mu == Fraction(count_trace(ell, t), order)
        if t % ell != 0:
            assert mu == Fraction(
                ell * ell - ell - 1, (ell - 1) ** 2 * (ell + 1)
            )


def test_lt_admissible_matches_measure():
    G = gl2(5)
    adm = lt_admissible_set(5, 2)
    assert class_measure(G, adm) == lt_class_measure(5, 2)


def test_lt_L_lower_pins():
    assert lt_L_lower(1) == 1
    # d with psi(d) <= 10: 1, 2, 3, 5, 7 -> phi sums to 14
    assert lt_L_lower(10) == 14


def test_lt_L_lower_brute():
    def brute(Q):
        total = 0
        for d in range(1, Q + 1):
            if mobius(d) == 0:
                continue
            if psi(d) <= Q:
                total += euler_phi(d)
        return total

    for Q in (10, 50, 300):
        assert lt_L_lower(Q) == brute(Q)


def test_lt_L_lower_range():
    with pytest.raises(ValueError):
        lt_L_lower(0)
    with pytest.raises(ValueError):
        lt_L_lower(10 ** 6 + 1)


def test_lt_experiment_bookkeeping(e11_table):
    rep = lt_experiment(e11_table, 1, [10 ** 3], q_book=2197)
    assert rep.bookkeeping_ok
    # brute-force the same quantities with itertools
    lams = (3, 5, 7, 11, 13)
    deg_sum = {p: sum(char_table_gl2(p).degrees) for p in lams}
    total = 0
    max_deg = 1
    for r in range(len(lams) + 1):
        for S in itertools.combinations(lams, r):
            w = math.prod(p + 1 for p in S)
            if w <= 2197:
                total += math.prod(deg_sum[p] for p in S)
                max_deg = max(max_deg, w)
    assert rep.degree_sum == total
    assert rep.max_degree == max_deg == 8 * 12 * 14
    assert rep.degree_sum <= rep.degree_sum_cap
    assert rep.rows[0].count == lang_trotter_count(e11_table, 10 ** 3, 1)


# ---------------------------------------------------------------------------
# thin sets


def test_frobenius_field_predicate_cm_oracle(cm_table):
    # for y^2 = x^3 + x, ordinary p = a^2 + b^2 has a_p^2 - 4p = -4b^2,
    # so membership in the d = -4 set is exactly p = 1 mod 4
    pred = frobenius_field_predicate(-4)
    got = thin_set_count([cm_table], pred, 10 ** 4)
    want = sum(1 for p in primes_up_to(10 ** 4) if p % 4 == 1)
    assert got == want


def test_frobenius_field_predicate_validation():
    frobenius_field_predicate(-3)
    frobenius_field_predicate(-4)
    with pytest.raises(ValueError):
        frobenius_field_predicate(-5)
    with pytest.raises(ValueError):
        frobenius_field_predicate(4)


def test_trace_equality_self(e11_table):
    pred = trace_equality_predicate()
    n = thin_set_count([e11_table, e11_table], pred, 10 ** 4)
    assert n == len(e11_table)


def test_trace_equality_cross(e11_table, cm_table):
    pred = trace_equality_predicate()
    n = thin_set_count([e11_table, cm_table], pred, 10 ** 4)
    # thin: much smaller than the common prime count
    assert 0 < n < len(e11_table) // 10


def test_thin_set_arity_mismatch(e11_table):
    with pytest.raises(ValueError, match="arity"):
        thin_set_count([e11_table], trace_equality_predicate(), 100)


def test_predicate_arity_validation():
    with pytest.raises(ValueError):
        ThinSetPredicate(arity=0, decide=lambda tr, p: True)


# ---------------------------------------------------------------------------
# Galois certification


def test_certify_weil_quadratic():
    cert = chavdarov_test(WeilPolynomial((5, -1, 1), 5))
    assert bool(cert)
    # witnesses really exhibit the claimed cycle types
    P = WeilPolynomial((5, -1, 1), 5)
    for (kind, ct), ell in cert.witnesses.items():
        poly = P.as_poly() if kind == "P" else P.q_poly()
        assert cycle_type_mod(poly, ell) == ct


def test_split_weil_poly_not_certified():
    cert = chavdarov_test(WeilPolynomial((7, -8, 1), 7))  # (T-1)(T-7)
    assert not cert
    assert cert.searched_to == 1000


def _irreducible_quartic_over_q(coeffs):
    """Independent rational factor search for monic integer quartics."""
    c0, c1, c2, c3, _ = coeffs
    if c0 == 0:
        return False
    divs = [d for d in range(1, abs(c0) + 1) if c0 % d == 0]
    roots = {d for d in divs} | {-d for d in divs}
    poly = lambda t: ((t + c3) * t + c2) * t * t + c1 * t + c0
    if any(poly(r) == 0 for r in roots):
        return False
    # monic quadratic factors (t^2 + ut + v)(t^2 + wt + z): vz = c0,
    # u + w = c3, v + z + uw = c2, uz + vw = c1
    for v in sorted(roots | {0}):
        if v == 0 or c0 % v != 0:
            continue
        z = c0 // v
        # u + w = c3 and uz + vw = c1 give a linear system
        det = z - v
        if det == 0:
            # u z + v w = c1 with z = v: v(u + w) = c1
            if v * c3 != c1:
                continue
            # any split of c3 into u + w with v + z + uw = c2
            # uw = c2 - v - z; u, w roots of y^2 - c3 y + (c2 - 2v)
            disc = c3 * c3 - 4 * (c2 - 2 * v)
            if disc < 0:
                continue
            s = math.isqrt(disc)
            if s * s == disc and (c3 + s) % 2 == 0:
                return False
            continue
        num_u = c1 - v * c3
        if num_u % det != 0:
            continue
        u = num_u // det
        w = c3 - u
        if v + z + u * w == c2:
            return False
    return True


def test_certified_implies_irreducible(g2_table):
    primes, counts = g2_table.up_to(600)
    checked = 0
    for i, p in enumerate(primes.tolist()):
        w = weil_poly_from_counts(p, int(counts[i, 0]), int(counts[i, 1]))
        if chavdarov_test(w, ell_bound=60):
            assert _irreducible_quartic_over_q(w.as_poly().coeffs), p
            checked += 1
    assert checked > 20


def test_chavdarov_validation():
    with pytest.raises(ValueError, match="capped"):
        chavdarov_test(WeilPolynomial((5, -1, 1), 5), ell_bound=2000)
    with pytest.raises(ValueError, match="genus"):
        chavdarov_test(WeilPolynomial((8, 0, 0, 0, 0, 0, 1), 2))


# ---------------------------------------------------------------------------
# density of certified primes


def test_density_report(g2_table):
    rep = chavdarov_density(g2_table, [400, 800, 1200], ell_bound=100)
    assert rep.s == stability_exponent(4)
    assert rep.consistency_failures == 0
    assert rep.heuristic
    ns = [r.n_primes for r in rep.rows]
    assert ns == sorted(ns)
    for r in rep.rows:
        assert r.n_primes == int(np.count_nonzero(g2_table.primes <= r.x))
        assert r.n_certified + r.not_certified == r.n_primes
        assert 0.5 < r.fraction <= 1.0
        assert r.heuristic_bound > 0


def test_density_s_override_only_loosens(g2_table):
    base = chavdarov_density(g2_table, [800], ell_bound=60)
    loose = chavdarov_density(g2_table, [800], ell_bound=60, s_override=1)
    # s = 1 drops the power-separability requirement down to separability
    assert loose.rows[0].n_certified >= base.rows[0].n_certified


def test_density_validation(e11_table, g2_table):
    with pytest.raises(ValueError, match="genus-2"):
        chavdarov_density(e11_table, [100])
    with pytest.raises(ValueError, match="at least one"):
        chavdarov_density(g2_table, [])


def test_separability_fast_path_matches_exact(g2_table):
    s = stability_exponent(4)
    primes, counts = g2_table.up_to(150)
    for i, p in enumerate(primes.tolist()):
        P = weil_poly_from_counts(p, int(counts[i, 0]), int(counts[i, 1])).as_poly()
        assert _separable_after_power_s(P, s) == separable_after_power(P, 4)


def test_separability_degenerate_cases():
    s = stability_exponent(4)
    # inseparable square, cyclotomic ratios, squared linear, honest quartic
    assert not _separable_after_power_s(IntPolynomial((9, 0, 6, 0, 1)), s)
    assert not _separable_after_power_s(IntPolynomial((1, 1, 1, 1, 1)), s)
    assert not _separable_after_power_s(IntPolynomial((4, -4, 1)), s)
    assert _separable_after_power_s(IntPolynomial((5, -1, 1)), s)


# ---------------------------------------------------------------------------
# bad-set measures


def test_gsp3_exact_element_sweep():
    """Class-based measures equal a full element-by-element sweep."""
    from frobsieve.applications import _classify_bad_sets
    from frobsieve.group_core import gsp4

    rep = gsp_bad_measures(3, "exact")
    G = gsp4(3)
    s = stability_exponent(4)
    hits = {k: 0 for k in rep.measures}
    cache = {}
    for el in G.elements:
        cp = charpoly_mod(el, 4, 3)
        m = similitude_multiplier(el, 3)
        key = (cp, m)
        flags = cache.get(key)
        if flags is None:
            flags = _classify_bad_sets(cp, m, 3, s)
            cache[key] = flags
        for k, hit in flags.items():
            if hit:
                hits[k] += 1
    for k, frac in rep.measures.items():
        assert frac == Fraction(hits[k], G.order), k


def test_gsp3_exact_pins():
    rep = gsp_bad_measures(3, "exact")
    assert rep.measures["C1"] == Fraction(4, 5)
    assert rep.measures["C2"] == Fraction(7, 8)
    assert rep.measures["C3"] == 1  # every ratio order divides s(4)
    assert rep.measures["C(2)"] == Fraction(109, 160)
    assert rep.measures["C(1,1)"] == Fraction(87, 128)


def test_gsp3_power_exponent_sensitivity():
    # every root-ratio order divides 80, so s = 80 collapses everything;
    # s = 8 misses the order-5 quartic tori and some elements survive
    assert gsp_bad_measures(3, "exact", s_override=80).measures["C3"] == 1
    assert gsp_bad_measures(3, "exact", s_override=8).measures["C3"] < 1
    assert gsp_bad_measures(3, "exact", s_override=1).measures["C3"] < 1


def test_gsp_montecarlo_deterministic():
    a = gsp_bad_measures(5, "montecarlo", samples=500, seed=7)
    b = gsp_bad_measures(5, "montecarlo", samples=500, seed=7)
    assert a.measures == b.measures
    c = gsp_bad_measures(5, "montecarlo", samples=500, seed=8)
    assert c.measures != a.measures


def test_gsp_montecarlo_degeneracy_split():
    five = gsp_bad_measures(5, "montecarlo", samples=2000, seed=3)
    assert five.measures["C3"][1] == 1.0  # 624 | s and no 3+1 splits exist
    seven = gsp_bad_measures(7, "montecarlo", samples=2000, seed=3)
    lo, est, hi = seven.measures["C3"]
    assert hi < 1.0  # ratio orders divisible by 25 escape s(4)
    assert 0.7 < est < 0.9
    for name, (lo, est, hi) in seven.measures.items():
        assert 0.0 <= lo <= est <= hi <= 1.0


def test_gsp_mode_validation():
    with pytest.raises(ValueError, match="exact"):
        gsp_bad_measures(5, "exact")
    with pytest.raises(ValueError, match="montecarlo"):
        gsp_bad_measures(3, "montecarlo")
    with pytest.raises(ValueError, match="mode"):
        gsp_bad_measures(3, "census")
    with pytest.raises(ValueError, match="samples"):
        gsp_bad_measures(5, "montecarlo", samples=10 ** 7)


# ---------------------------------------------------------------------------
# empirical Chebotarev


@pytest.mark.parametrize("ell", [3, 5, 7])
def test_chebotarev_measures_sum_to_one(e11_table, ell):
    rep = chebotarev_empirical(e11_table, ell, 10 ** 4)
    assert rep.measure_total == 1
    assert len(rep.fibers) == ell * (ell - 1)
    assert sum(f.observed for f in rep.fibers) == rep.n_primes
    for f in rep.fibers:
        assert f.measure > 0
        assert f.expected > 0


def test_chebotarev_deviation_sane(e11_table):
    rep = chebotarev_empirical(e11_table, 5, 10 ** 4)
    assert rep.max_rel_dev < 0.5
    assert rep.max_rel_dev == max(f.rel_dev for f in rep.fibers)


def test_chebotarev_validation(e11_table, g2_table):
    with pytest.raises(ValueError):
        chebotarev_empirical(e11_table, 17, 100)
    with pytest.raises(ValueError):
        chebotarev_empirical(e11_table, 9, 100)
    with pytest.raises(ValueError, match="genus-1"):
        chebotarev_empirical(g2_table, 5, 100)


def test_surjectivity_full_for_generic_curve(e11_table):
    assert surjectivity_evidence(e11_table, 5, 10 ** 4)


def test_surjectivity_fails_for_cm(cm_table):
    rep = surjectivity_evidence(cm_table, 5, 10 ** 4)
    assert not rep
    assert len(rep.misses) > 0
    # supersingular pattern: traces stay clear of whole fibers
    for t, d in rep.misses:
        assert 0 <= t < 5 and 1 <= d < 5


def test_surjectivity_tiny_x(e11_table):
    rep = surjectivity_evidence(e11_table, 5, 10)
    assert not rep
    assert len(rep.misses) > 10  # barely any primes, most fibers empty


# ---------------------------------------------------------------------------
# the toy square-trace sieve


def test_toy_measures_against_closed_counts(e11_table):
    rep = toy_square_trace(e11_table, 10 ** 4)
    assert rep.lambdas == (3, 5, 7, 11, 13)
    for ell in rep.lambdas:
        order = ell * (ell - 1) ** 2 * (ell + 1)
        squares = {(i * i) % ell for i in range(ell)}
        want = Fraction(sum(count_trace(ell, t) for t in squares), order)
        assert rep.measures[ell] == want


def test_toy_measures_near_half(e11_table):
    rep = toy_square_trace(e11_table, 10 ** 4)
    for ell in rep.lambdas:
        e = rep.measures[ell] - Fraction(1, 2)
        assert abs(e) * ell <= 3


def test_toy_bound_dominates_count(e11_table):
    rep = toy_square_trace(e11_table, 10 ** 4)
    assert rep.square_count <= rep.bound
    assert rep.square_count <= rep.sieve.survivor_count
    # recount squares directly from the table
    primes, traces = e11_table.up_to(10 ** 4)
    keep = ~np.isin(primes, rep.lambdas)
    sq = {m * m for m in range(200)}
    want = sum(1 for t in traces[keep].tolist() if t in sq)
    assert rep.square_count == want


def test_toy_zero_trace_is_square(cm_table):
    rep = toy_square_trace(cm_table, 10 ** 4)
    primes, traces = cm_table.up_to(10 ** 4)
    keep = ~np.isin(primes, rep.lambdas)
    zeros = int(np.count_nonzero(traces[keep] == 0))
    assert rep.square_count >= zeros > 0


def test_toy_small_q(e11_table):
    rep = toy_square_trace(e11_table, 10 ** 4, Q=3)
    assert rep.lambdas == (3,)
    rep2 = toy_square_trace(e11_table, 10 ** 4, Q=2)
    assert rep2.lambdas == ()
    assert rep2.bound == rep2.n_primes  # no conditions, trivial bound


def test_toy_excluded_primes(e11_table):
    rep = toy_square_trace(e11_table, 10 ** 4)
    assert rep.excluded == (3, 5, 7, 11, 13)
    assert rep.n_primes == len(e11_table) - 5


def test_toy_needs_usable_primes():
    tab = build_trace_table(E11, 100)
    with pytest.raises(ValueError, match="no usable primes"):
        toy_square_trace(tab, 9)


def test_toy_genus_guard(g2_table):
    with pytest.raises(ValueError, match="genus-1"):
        toy_square_trace(g2_table, 100)
