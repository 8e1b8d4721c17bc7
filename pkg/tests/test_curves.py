"""Point counts, Weil polynomials, trace tables, and the binary cache."""

import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frobsieve import _kernels
from frobsieve.arith_core import IntPolynomial
from frobsieve.curves import (
    CacheFormatError,
    EllipticCurveQ,
    Genus2CurveQ,
    TraceGapError,
    TraceTable,
    WeilPolynomial,
    ap,
    build_trace_table,
    count_points_g2,
    crc64,
    frobenius_poly_g2,
    good_primes,
    group_order,
    load_trace_table,
    save_trace_table,
    weil_poly_from_counts,
    weil_poly_g1,
)

E11 = EllipticCurveQ(1, 1)
ECM = EllipticCurveQ(-1, 0)  # extra automorphisms; a_p = 0 for p = 3 mod 4
G2A = Genus2CurveQ((1, -1, 0, 0, 0, 1))  # y^2 = x^5 - x + 1
G2B = Genus2CurveQ((3, 1, 0, 0, 0, 0, 1))  # y^2 = x^6 + x + 3


def naive_ap(a, b, p):
    s = 0
    for x in range(p):
        v = (x * x * x + a * x + b) % p
        if v:
            s += 1 if pow(v, (p - 1) // 2, p) == 1 else -1
    return -s


def naive_counts_g2(fc, p):
    """Projective counts over F_p and F_{p^2} = F_p[t]/(t^2 - eps) by brute force."""
    eps = next(e for e in range(2, p) if pow(e, (p - 1) // 2, p) == p - 1)
    d = len(fc) - 1
    n1 = 0
    for x in range(p):
        v = 0
        for c in reversed(fc):
            v = (v * x + c) % p
        if v == 0:
            n1 += 1
        elif pow(v, (p - 1) // 2, p) == 1:
            n1 += 2
    n1 += 1 if d == 5 else (2 if pow(fc[-1], (p - 1) // 2, p) == 1 else 0)
    n2 = 0
    for x0 in range(p):
        for x1 in range(p):
            va, vb = 0, 0
            for c in reversed(fc):
                va, vb = (va * x0 + vb * x1 * eps + c) % p, (va * x1 + vb * x0) % p
            if va == 0 and vb == 0:
                n2 += 1
            else:
                nrm = (va * va - eps * vb * vb) % p
                if nrm == 0 or pow(nrm, (p - 1) // 2, p) == 1:
                    n2 += 2
    # at infinity: one point for deg 5, two for deg 6 (every F_p scalar is a
    # square in F_{p^2})
    n2 += 1 if d == 5 else 2
    return n1, n2


# -- curve models -------------------------------------------------------------


def test_elliptic_discriminant_and_bad_primes():
    assert E11.discriminant == -496
    assert E11.bad_primes == {2, 31}
    assert ECM.discriminant == 64
    assert ECM.bad_primes == {2}
    assert E11.genus == 1
    assert E11.coefficient_block() == (1, 1)


def test_elliptic_rejects_singular_model():
    with pytest.raises(ValueError, match="singular"):
        EllipticCurveQ(-3, 2)  # 4(-3)^3 + 27*4 = 0
    with pytest.raises(ValueError):
        EllipticCurveQ(0, 0)


def test_genus2_discriminant_and_bad_primes():
    assert G2A.discriminant == 2869  # = 19 * 151
    assert G2A.bad_primes == {2, 19, 151}
    assert G2A.genus == 2
    assert G2A.coefficient_block() == (1, -1, 0, 0, 0, 1)
    assert 2 in G2B.bad_primes


def test_genus2_accepts_poly_or_coeffs():
    assert Genus2CurveQ(IntPolynomial((1, -1, 0, 0, 0, 1))) == G2A


def test_genus2_rejects_bad_degree_and_repeated_roots():
    with pytest.raises(ValueError, match="deg"):
        Genus2CurveQ((1, 0, 0, 0, 1))  # degree 4
    with pytest.raises(ValueError, match="deg"):
        Genus2CurveQ((1,) * 8)  # degree 7
    with pytest.raises(ValueError, match="repeated"):
        Genus2CurveQ((0, 0, 1, 0, 0, 1))  # x^2 (x^3 + 1), double root at 0


def test_good_primes_skips_two_and_bad_reduction():
    ps = good_primes(E11, 40)
    assert ps.tolist() == [3, 5, 7, 11, 13, 17, 19, 23, 29, 37]
    assert 31 not in ps
    ps2 = good_primes(G2A, 160)
    assert 2 not in ps2 and 19 not in ps2 and 151 not in ps2


# -- a_p ----------------------------------------------------------------------


def test_ap_pinned_values():
    assert ap(E11, 5) == -3
    assert ap(E11, 7) == 3
    assert ap(E11, 11) == -2
    assert ap(E11, 13) == -4
    assert ap(ECM, 5) == -2
    assert ap(ECM, 13) == 6
    assert ap(ECM, 17) == 2


def test_ap_against_naive_enumeration():
    for curve in (E11, ECM, EllipticCurveQ(-2, 3)):
        for p in good_primes(curve, 200):
            p = int(p)
            assert ap(curve, p) == naive_ap(curve.a, curve.b, p), (curve, p)


def test_ap_zero_for_inert_primes_of_special_curve():
    # y^2 = x^3 - x has a_p = 0 whenever p = 3 mod 4
    for p in good_primes(ECM, 500):
        p = int(p)
        if p % 4 == 3:
            assert ap(ECM, p) == 0


@settings(max_examples=60, deadline=None)
@given(
    a=st.integers(-50, 50),
    b=st.integers(-50, 50),
    pi=st.integers(0, 20),
)
def test_ap_satisfies_hasse_bound(a, b, pi):
    primes = [3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61,
              67, 71, 73, 79]
    try:
        curve = EllipticCurveQ(a, b)
    except ValueError:
        return
    p = primes[pi]
    if p in curve.bad_primes:
        return
    assert ap(curve, p) ** 2 <= 4 * p


def test_ap_input_validation():
    with pytest.raises(ValueError, match="not prime"):
        ap(E11, 15)
    with pytest.raises(ValueError, match="p=2"):
        ap(E11, 2)
    with pytest.raises(ValueError, match="bad reduction"):
        ap(E11, 31)
    with pytest.raises(ValueError, match="exceeds"):
        ap(E11, 2 ** 31 - 1)


def test_group_order():
    assert group_order(E11, 5) == 9
    for p in (5, 13, 17, 29):
        n = group_order(ECM, p)
        assert abs(n - (p + 1)) <= 2 * math.isqrt(p)
    assert group_order(ECM, 7) == 8  # a_7 = 0


# -- genus-2 point counts -----------------------------------------------------


def test_count_points_g2_pinned_values():
    assert count_points_g2(G2A, 3) == (7, 15)
    assert count_points_g2(G2A, 5) == (11, 31)
    assert count_points_g2(G2A, 7) == (7, 49)
    assert count_points_g2(G2A, 11) == (19, 135)
    assert count_points_g2(G2A, 13) == (15, 187)
    assert count_points_g2(G2B, 5) == (6, 26)
    assert count_points_g2(G2B, 11) == (19, 129)


def test_count_points_g2_against_brute_force():
    rng = np.random.default_rng(20260815)
    checked = 0
    for p in (3, 5, 7, 11, 13):
        for _ in range(6):
            deg = int(rng.integers(5, 7))
            fc = [int(v) for v in rng.integers(-6, 7, deg + 1)]
            if fc[-1] % p == 0:
                fc[-1] = 1
            try:
                curve = Genus2CurveQ(tuple(fc))
            except ValueError:
                continue
            if p in curve.bad_primes:
                continue
            assert count_points_g2(curve, p) == naive_counts_g2(fc, p), (fc, p)
            checked += 1
    assert checked >= 15


def test_count_points_g2_weil_window():
    for p in (17, 29, 23, 101, 499):
        n1, n2 = count_points_g2(G2A, p)
        assert (n1 - (p + 1)) ** 2 <= 16 * p
        assert (n2 - (p * p + 1)) ** 2 <= 16 * p * p


def test_count_points_g2_validation():
    with pytest.raises(ValueError, match="bad reduction"):
        count_points_g2(G2A, 19)
    with pytest.raises(ValueError, match="exceeds"):
        count_points_g2(G2A, 100003)


# -- Weil polynomials ---------------------------------------------------------


def test_weil_poly_g1_is_charpoly():
    w = weil_poly_g1(7, 3)
    assert w.coeffs == (7, -3, 1)
    assert w.genus == 1 and w.trace() == 3
    assert w.point_count(1) == 7 + 1 - 3
    # N_2 = p^2 + 1 - (a^2 - 2p)
    assert w.point_count(2) == 49 + 1 - (9 - 14)
    with pytest.raises(ValueError, match="Hasse"):
        weil_poly_g1(7, 6)


def test_weil_poly_from_counts_round_trip():
    for p in (3, 5, 7, 11, 13):
        n1, n2 = count_points_g2(G2A, p)
        w = frobenius_poly_g2(G2A, p, counts=(n1, n2))
        assert w.point_count(1) == n1
        assert w.point_count(2) == n2
        assert w.q == p and w.genus == 2
        # coefficient symmetry c[g-k] = q^k c[g+k]
        c = w.coeffs
        assert c[1] == p * c[3] and c[0] == p * p * c[4]


def test_frobenius_poly_matches_direct_count():
    w = frobenius_poly_g2(G2A, 7)
    assert w.coeffs == (49, -7, 0, -1, 1)  # s1 = 1, s2 = 0 at p = 7
    assert w.trace() == 1


def test_weil_poly_root_purity():
    for p in (5, 11, 23):
        w = frobenius_poly_g2(G2A, p)
        assert w.root_abs_deviation() < 1e-8


def test_weil_poly_zero_trace_shape():
    w = weil_poly_from_counts(5, 6, 36)
    assert w.coeffs[3] == 0 and w.coeffs[1] == 0


def test_weil_poly_from_counts_parity_error():
    with pytest.raises(ArithmeticError, match="corrupt"):
        weil_poly_from_counts(5, 6, 25)  # s1 = 0 but s1^2 - (p^2+1-N2) odd


def test_weil_poly_validation():
    with pytest.raises(ValueError, match="monic"):
        WeilPolynomial((4, -2, 2), 4)
    with pytest.raises(ValueError, match="even"):
        WeilPolynomial((2, 1, 0, 1), 2)
    with pytest.raises(ValueError, match="functional"):
        WeilPolynomial((3, -1, 1), 2)
    with pytest.raises(ValueError, match="at least 2"):
        WeilPolynomial((1, -1, 1), 1)


def test_weil_poly_q_poly():
    # genus 1: P(T) = T^2 - aT + p gives Q(u) = u - a
    assert weil_poly_g1(11, 4).q_poly().coeffs == (-4, 1)
    w = frobenius_poly_g2(G2A, 7)
    q = w.q_poly()
    assert q.degree == 2
    # P(T) = T^2 Q(T + p/T) recovers the quartic
    s1, s2 = -w.coeffs[3], w.coeffs[2]
    assert q.coeffs == (s2 - 2 * 7, -s1, 1)


# -- jit kernels agree with their reference twins -----------------------------


def test_chi_table_twin():
    for p in (3, 5, 7, 97, 991):
        assert np.array_equal(_kernels.chi_table(p), _kernels._py_chi_table(p))


def test_ap_batch_twin():
    ps = good_primes(E11, 300)
    a = np.asarray(_kernels.ap_batch(ps, 1, 1))
    b = np.asarray(_kernels._py_ap_batch(ps, 1, 1))
    assert np.array_equal(a, b)


def test_g2_pair_charsum_twin():
    rng = np.random.default_rng(5)
    from frobsieve.curves import _norm_coeff_rows

    for p in (3, 5, 7, 13, 101, 499):
        deg = int(rng.integers(5, 7))
        fc = [int(v) for v in rng.integers(-9, 10, deg + 1)]
        if fc[-1] % p == 0:
            fc[-1] = 1
        rho = _norm_coeff_rows(fc, p)
        chi = _kernels.chi_table(p)
        nonres = np.flatnonzero(chi == -1).astype(np.float64)
        assert int(_kernels.g2_pair_charsum(rho, nonres, chi, p)) == int(
            _kernels._py_g2_pair_charsum(rho, nonres, chi, p)
        )


# -- trace tables -------------------------------------------------------------


def test_build_trace_table_g1():
    tab = build_trace_table(E11, 200)
    assert tab.genus == 1
    assert len(tab) == len(good_primes(E11, 200))
    assert tab.trace(5) == -3
    assert tab.trace(13) == -4
    assert tab.covers(200) and not tab.covers(201)


def test_build_trace_table_g2():
    tab = build_trace_table(G2A, 60)
    assert tab.genus == 2
    assert tab.counts(7) == (7, 49)
    assert tab.counts(59) == count_points_g2(G2A, 59)
    with pytest.raises(ValueError, match="genus-1"):
        tab.trace(7)


def test_trace_table_gap_errors():
    tab = build_trace_table(E11, 100)
    with pytest.raises(TraceGapError, match="no record"):
        tab.trace(31)  # bad prime, never stored
    with pytest.raises(TraceGapError, match="no record"):
        tab.trace(101)
    with pytest.raises(TraceGapError, match="x=500"):
        tab.require_coverage(500)
    with pytest.raises(ValueError, match="genus-2"):
        tab.counts(5)


def test_trace_table_up_to():
    tab = build_trace_table(E11, 100)
    ps, data = tab.up_to(30)
    assert ps.tolist() == [3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert data.shape == ps.shape
    with pytest.raises(TraceGapError):
        tab.up_to(101)


def test_trace_table_is_read_only():
    tab = build_trace_table(E11, 50)
    with pytest.raises(ValueError):
        tab.primes[0] = 999
    with pytest.raises(ValueError):
        tab.data[0] = 999


def test_trace_table_validation():
    ps = np.array([3, 5, 7], dtype=np.int64)
    with pytest.raises(ValueError, match="match the prime column"):
        TraceTable(E11, 10, ps, np.array([1, 2]))
    with pytest.raises(ValueError, match="increasing"):
        TraceTable(E11, 10, np.array([5, 3]), np.array([1, 1]))
    with pytest.raises(ValueError, match="max_prime"):
        TraceTable(E11, 5, ps, np.array([1, 1, 1]))
    with pytest.raises(ValueError, match="even prime"):
        TraceTable(E11, 10, np.array([2, 3]), np.array([1, 1]))
    with pytest.raises(ValueError, match="violated at p=5"):
        TraceTable(E11, 10, ps, np.array([1, 9, 1]))
    with pytest.raises(ValueError, match="one \\(N1, N2\\) row"):
        TraceTable(G2A, 10, ps, np.array([1, 2, 3]))
    with pytest.raises(ValueError, match="violated"):
        TraceTable(G2A, 10, np.array([3]), np.array([[20, 15]]))


# -- cache --------------------------------------------------------------------


def test_crc64_known_vector():
    # standard check value for CRC-64/XZ
    assert crc64(b"123456789") == 0x995DC9BBDF1939FA
    assert crc64(b"") == 0


def test_cache_round_trip(tmp_path):
    path = str(tmp_path / "e11.gstt")
    tab = build_trace_table(E11, 300, cache_path=path)
    loaded = load_trace_table(path, curve=E11)
    assert loaded.max_prime == 300
    assert np.array_equal(loaded.primes, tab.primes)
    assert np.array_equal(loaded.data, tab.data)


def test_cache_round_trip_g2(tmp_path):
    path = str(tmp_path / "g2a.gstt")
    tab = build_trace_table(G2A, 80, cache_path=path)
    loaded = load_trace_table(path)
    assert loaded.curve == G2A  # reconstructed from the coefficient block
    assert np.array_equal(loaded.data, tab.data)


def test_cache_curve_reconstruction_g1(tmp_path):
    path = str(tmp_path / "ecm.gstt")
    build_trace_table(ECM, 100, cache_path=path)
    loaded = load_trace_table(path)
    assert loaded.curve == ECM


def test_cache_resume_is_byte_identical(tmp_path):
    resumed = str(tmp_path / "resumed.gstt")
    fresh = str(tmp_path / "fresh.gstt")
    build_trace_table(E11, 300, cache_path=resumed)
    build_trace_table(E11, 900, cache_path=resumed)
    build_trace_table(E11, 900, cache_path=fresh)
    with open(resumed, "rb") as fa, open(fresh, "rb") as fb:
        assert fa.read() == fb.read()


def test_cache_covering_file_returned_as_is(tmp_path):
    path = str(tmp_path / "e11.gstt")
    build_trace_table(E11, 500, cache_path=path)
    tab = build_trace_table(E11, 100, cache_path=path)
    assert tab.max_prime == 500  # wider cache kept, not truncated


def test_cache_detects_corruption(tmp_path):
    path = str(tmp_path / "e11.gstt")
    build_trace_table(E11, 300, cache_path=path)
    with open(path, "rb") as fh:
        blob = bytearray(fh.read())
    blob[40] ^= 0xFF
    with open(path, "wb") as fh:
        fh.write(blob)
    with pytest.raises(CacheFormatError, match="checksum"):
        load_trace_table(path)


def test_cache_detects_bad_magic(tmp_path):
    path = str(tmp_path / "junk.gstt")
    with open(path, "wb") as fh:
        fh.write(b"NOPE" + b"\x00" * 40)
    with pytest.raises(CacheFormatError, match="magic"):
        load_trace_table(path)


def test_cache_detects_truncated_records(tmp_path):
    path = str(tmp_path / "e11.gstt")
    build_trace_table(E11, 300, cache_path=path)
    with open(path, "rb") as fh:
        blob = fh.read()
    body = blob[:-16]  # drop half a record plus the checksum
    blob = body + struct.pack("<Q", crc64(body))
    with open(path, "wb") as fh:
        fh.write(blob)
    with pytest.raises(CacheFormatError, match="truncated"):
        load_trace_table(path)


def test_cache_rejects_unknown_version(tmp_path):
    path = str(tmp_path / "e11.gstt")
    build_trace_table(E11, 100, cache_path=path)
    with open(path, "rb") as fh:
        blob = bytearray(fh.read())
    blob[4:6] = struct.pack("<H", 9)
    body = bytes(blob[:-8])
    with open(path, "wb") as fh:
        fh.write(body + struct.pack("<Q", crc64(body)))
    with pytest.raises(CacheFormatError, match="version"):
        load_trace_table(path)


def test_cache_rejects_wrong_curve(tmp_path):
    path = str(tmp_path / "e11.gstt")
    build_trace_table(E11, 100, cache_path=path)
    with pytest.raises(CacheFormatError, match="different curve"):
        load_trace_table(path, curve=ECM)
    with pytest.raises(CacheFormatError, match="different curve"):
        load_trace_table(path, curve=G2A)


def test_cache_rejects_tampered_record_with_valid_crc(tmp_path):
    # a forged record that passes the checksum still fails the Hasse screen
    path = str(tmp_path / "e11.gstt")
    build_trace_table(E11, 100, cache_path=path)
    with open(path, "rb") as fh:
        blob = bytearray(fh.read())
    # first record's trace lives right after the 33-byte header and 8-byte p
    off = 4 + 2 + 1 + 2 + 16 + 8 + 8
    blob[off : off + 8] = struct.pack("<q", 10 ** 6)
    body = bytes(blob[:-8])
    with open(path, "wb") as fh:
        fh.write(body + struct.pack("<Q", crc64(body)))
    with pytest.raises(CacheFormatError, match="violated"):
        load_trace_table(path)


def test_save_then_manual_load(tmp_path):
    tab = build_trace_table(G2B, 40)
    path = str(tmp_path / "g2b.gstt")
    save_trace_table(tab, path)
    loaded = load_trace_table(path, curve=G2B)
    assert loaded.counts(5) == (6, 26)


def test_build_trace_table_bounds():
    with pytest.raises(ValueError, match="at least 2"):
        build_trace_table(E11, 1)
    with pytest.raises(ValueError, match="cap"):
        build_trace_table(G2A, 10 ** 6)
