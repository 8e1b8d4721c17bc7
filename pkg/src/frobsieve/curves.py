"""Frobenius data for elliptic and genus-2 curves over Q.

Traces a_p through quadratic character sums, point counts of hyperelliptic
models over F_p and F_{p^2}, Weil polynomials with their functional
equation, and a resumable binary trace cache with a trailing checksum.

Cache format (all integers little-endian):
    magic           4 bytes  b"GSTT"
    version         u16      currently 1
    genus           u8       1 or 2
    ncoeffs         u16      number of curve coefficients that follow
    coefficients    i64 each genus 1: (a, b); genus 2: f ascending
    max_prime       u64      requested table bound
    records         genus 1: (p u64, a_p i64); genus 2: (p u64, N1 u64, N2 u64)
    checksum        u64      CRC-64/XZ of every preceding byte

CRC-64/XZ means the ECMA-182 polynomial 0x42F0E1EBA9EA3693 in reflected
form (table constant 0xC96C5795D7870F42), initial value and final xor
both 0xFFFFFFFFFFFFFFFF.
"""

from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from . import _kernels
from .arith_core import IntPolynomial, factorize, is_prime, primes_up_to, weil_q_poly

__all__ = [
    "CacheFormatError",
    "TraceGapError",
    "EllipticCurveQ",
    "Genus2CurveQ",
    "WeilPolynomial",
    "TraceTable",
    "ap",
    "group_order",
    "count_points_g2",
    "frobenius_poly_g2",
    "weil_poly_g1",
    "weil_poly_from_counts",
    "good_primes",
    "build_trace_table",
    "load_trace_table",
    "save_trace_table",
    "crc64",
]

_AP_PRIME_CAP = 2 * 10 ** 7
_G2_PRIME_CAP = 3 * 10 ** 4

_MAGIC = b"GSTT"
_VERSION = 1


class CacheFormatError(RuntimeError):
    """A trace cache file is malformed, corrupt, or for a different curve."""


class TraceGapError(LookupError):
    """Requested prime data is outside what the trace table holds."""


# ---------------------------------------------------------------------------
# CRC-64/XZ

_CRC64_TABLE = None


def _crc64_table():
    global _CRC64_TABLE
    if _CRC64_TABLE is None:
        poly = 0xC96C5795D7870F42
        table = []
        for byte in range(256):
            crc = byte
            for _ in range(8):
                crc = (crc >> 1) ^ poly if crc & 1 else crc >> 1
            table.append(crc)
        _CRC64_TABLE = tuple(table)
    return _CRC64_TABLE


def crc64(data: bytes) -> int:
    table = _crc64_table()
    crc = 0xFFFFFFFFFFFFFFFF
    for byte in data:
        crc = table[(crc ^ byte) & 0xFF] ^ (crc >> 8)
    return crc ^ 0xFFFFFFFFFFFFFFFF


# ---------------------------------------------------------------------------
# curve types


def _prime_divisors(n: int) -> frozenset:
    return frozenset(p for p, _ in factorize(abs(n)))


def _bareiss_det(m: list) -> int:
    """Exact determinant of an integer matrix by fraction-free elimination."""
    a = [row[:] for row in m]
    n = len(a)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for r in range(k + 1, n):
                if a[r][k] != 0:
                    a[k], a[r] = a[r], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[-1][-1]


def _resultant(f: IntPolynomial, g: IntPolynomial) -> int:
    """Resultant over Z via the Sylvester matrix."""
    m, n = f.degree, g.degree
    if f.is_zero() or g.is_zero():
        return 0
    size = m + n
    fc = list(reversed(f.coeffs))
    gc = list(reversed(g.coeffs))
    rows = []
    for i in range(n):
        rows.append([0] * i + fc + [0] * (size - m - 1 - i))
    for i in range(m):
        rows.append([0] * i + gc + [0] * (size - n - 1 - i))
    return _bareiss_det(rows)


def _poly_discriminant(f: IntPolynomial) -> int:
    d = f.degree
    res = _resultant(f, f.derivative())
    num = (-1) ** (d * (d - 1) // 2) * res
    lead = f.leading()
    if num % lead != 0:
        raise ArithmeticError("resultant not divisible by leading coefficient")
    return num // lead


@dataclass(frozen=True)
class EllipticCurveQ:
    """y^2 = x^3 + a*x + b with integer coefficients and Delta != 0."""

    a: int
    b: int

    def __post_init__(self):
        object.__setattr__(self, "a", int(self.a))
        object.__setattr__(self, "b", int(self.b))
        disc = -16 * (4 * self.a ** 3 + 27 * self.b ** 2)
        if disc == 0:
            raise ValueError("singular model: -16(4a^3 + 27b^2) vanishes")
        object.__setattr__(self, "discriminant", disc)
        object.__setattr__(self, "bad_primes", _prime_divisors(disc))

    @property
    def genus(self) -> int:
        return 1

    def coefficient_block(self) -> tuple:
        return (self.a, self.b)

    def __str__(self):
        return f"y^2 = x^3 + {self.a}x + {self.b}"


@dataclass(frozen=True)
class Genus2CurveQ:
    """y^2 = f(x) with f squarefree over Q of degree 5 or 6.

    Bad primes are 2 together with every prime dividing disc(f) or the
    leading coefficient.
    """

    f: Union[IntPolynomial, Sequence[int]]

    def __post_init__(self):
        f = self.f
        if not isinstance(f, IntPolynomial):
            f = IntPolynomial(tuple(int(c) for c in f))
        object.__setattr__(self, "f", f)
        if f.degree not in (5, 6):
            raise ValueError("genus-2 model needs deg f in {5, 6}")
        disc = _poly_discriminant(f)
        if disc == 0:
            raise ValueError("f has a repeated root over Q")
        object.__setattr__(self, "discriminant", disc)
        bad = {2} | _prime_divisors(disc) | _prime_divisors(f.leading())
        object.__setattr__(self, "bad_primes", frozenset(bad))

    @property
    def genus(self) -> int:
        return 2

    def coefficient_block(self) -> tuple:
        return tuple(self.f.coeffs)

    def __str__(self):
        return f"y^2 = f(x), f coeffs (ascending) {self.f.coeffs}"


def good_primes(curve, x: float) -> np.ndarray:
    """Odd primes p <= x of good reduction, ascending, as int64."""
    ps = [p for p in primes_up_to(x) if p != 2 and p not in curve.bad_primes]
    return np.array(ps, dtype=np.int64)


def _check_good(curve, p: int, cap: int) -> None:
    if not is_prime(p):
        raise ValueError(f"p={p} is not prime")
    if p == 2:
        raise ValueError("p=2 is excluded from all trace computations")
    if p in curve.bad_primes:
        raise ValueError(f"p={p} is a prime of bad reduction")
    if p > cap:
        raise ValueError(f"p={p} exceeds the supported bound {cap}")


# ---------------------------------------------------------------------------
# Weil polynomials


@dataclass(frozen=True)
class WeilPolynomial:
    """Monic integer polynomial of degree 2g whose coefficients satisfy
    coeff[g-k] = q^k * coeff[g+k]; houses Frobenius characteristic data."""

    coeffs: tuple
    q: int

    def __post_init__(self):
        c = tuple(int(v) for v in self.coeffs)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "q", int(self.q))
        if self.q < 2:
            raise ValueError("multiplier q must be at least 2")
        if len(c) < 3 or len(c) % 2 == 0:
            raise ValueError("degree must be even and positive")
        if c[-1] != 1:
            raise ValueError("polynomial must be monic")
        g = self.genus
        for k in range(1, g + 1):
            if c[g - k] != self.q ** k * c[g + k]:
                raise ValueError(
                    f"functional equation fails at coefficient pair "
                    f"({g - k}, {g + k})"
                )

    @property
    def genus(self) -> int:
        return (len(self.coeffs) - 1) // 2

    def as_poly(self) -> IntPolynomial:
        return IntPolynomial(self.coeffs)

    def q_poly(self) -> IntPolynomial:
        """Degree-g Q with P(T) = T^g Q(T + q/T)."""
        return weil_q_poly(self.as_poly(), self.q)

    def trace(self) -> int:
        """Sum of the Frobenius eigenvalues."""
        return -self.coeffs[-2]

    def point_count(self, i: int = 1) -> int:
        """|C(F_{q^i})| style count q^i + 1 - sum(alpha^i) for i in {1, 2}."""
        if i == 1:
            return self.q + 1 - self.trace()
        if i == 2:
            g = self.genus
            s1 = -self.coeffs[2 * g - 1]
            s2 = self.coeffs[2 * g - 2]
            return self.q ** 2 + 1 - (s1 * s1 - 2 * s2)
        raise ValueError("only i in {1, 2} supported")

    def root_abs_deviation(self) -> float:
        """max over roots of | |alpha| - sqrt(q) |, numerically."""
        roots = np.roots(list(reversed(self.coeffs)))
        return float(np.max(np.abs(np.abs(roots) - math.sqrt(self.q))))


def weil_poly_g1(p: int, a: int) -> WeilPolynomial:
    if a * a > 4 * p:
        raise ValueError("trace violates the Hasse bound")
    return WeilPolynomial((p, -a, 1), p)


def weil_poly_from_counts(p: int, n1: int, n2: int) -> WeilPolynomial:
    """Genus-2 Weil polynomial from point counts over F_p and F_{p^2}."""
    s1 = p + 1 - n1
    r = p * p + 1 - n2
    if (s1 * s1 - r) % 2 != 0:
        raise ArithmeticError(
            f"corrupt counts at p={p}: s1^2 - (p^2+1-N2) = {s1 * s1 - r} is odd"
        )
    s2 = (s1 * s1 - r) // 2
    return WeilPolynomial((p * p, -p * s1, s2, -s1, 1), p)


# ---------------------------------------------------------------------------
# point counting


def _difference_table(coeffs: Sequence[int], p: int) -> np.ndarray:
    """(Delta^j f)(0) mod p for f with the given ascending coefficients."""
    d = len(coeffs) - 1
    vals = [sum(c * x ** k for k, c in enumerate(coeffs)) for x in range(d + 1)]
    out = []
    while vals:
        out.append(vals[0] % p)
        vals = [vals[i + 1] - vals[i] for i in range(len(vals) - 1)]
    return np.array(out, dtype=np.int64)


def ap(E: EllipticCurveQ, p: int) -> int:
    """Trace of Frobenius: -sum_x legendre(x^3 + ax + b, p)."""
    _check_good(E, p, _AP_PRIME_CAP)
    chi = _kernels.chi_table(p)
    diffs = _difference_table((E.b, E.a, 0, 1), p)
    s, _ = _kernels.poly_charsum(diffs, p, chi)
    a = -int(s)
    assert a * a <= 4 * p, f"Hasse bound failed at p={p}"
    return a


def group_order(E: EllipticCurveQ, p: int) -> int:
    """|E(F_p)| = p + 1 - a_p, including the point at infinity."""
    n = p + 1 - ap(E, p)
    assert n >= 1
    return n


def _horner_vec(coeffs: Sequence[int], s: np.ndarray, p: int) -> np.ndarray:
    out = np.zeros_like(s)
    for c in reversed(coeffs):
        out = (out * s + c % p) % p
    return out


def _norm_coeff_rows(fc: Sequence[int], p: int) -> np.ndarray:
    """Coefficient table of R(s, D) = Norm(2^d f((s + sqrt(D))/2)).

    Writing 2^d f((s+t)/2) = A(s, D) + B(s, D) t with t^2 = D, the norm to
    F_p is R = A^2 - D B^2, a polynomial of degree <= d in D.  Returns the
    (p, 7) array rho with rho[s, j] the coefficient of D^j, as float64 for
    the reduction-by-multiplication kernel.
    """
    d = len(fc) - 1
    n_a = d // 2 + 1
    n_b = (d + 1) // 2
    apoly = [[0] * (d + 1) for _ in range(n_a)]
    bpoly = [[0] * (d + 1) for _ in range(n_b)]
    for k, c in enumerate(fc):
        w = c * (1 << (d - k))
        for j in range(k + 1):
            term = w * math.comb(k, j)
            if j % 2 == 0:
                apoly[j // 2][k - j] += term
            else:
                bpoly[j // 2][k - j] += term
    s = np.arange(p, dtype=np.int64)
    avals = [_horner_vec(cs, s, p) for cs in apoly]
    bvals = [_horner_vec(cs, s, p) for cs in bpoly]
    # 7 columns always (deg_D <= 6); the kernel relies on the fixed width
    rho = np.zeros((7, p), dtype=np.int64)
    for i in range(n_a):
        for j in range(n_a):
            rho[i + j] += avals[i] * avals[j] % p
    for i in range(n_b):
        for j in range(n_b):
            rho[i + j + 1] -= bvals[i] * bvals[j] % p
    rho %= p
    return np.ascontiguousarray(rho.T, dtype=np.float64)


def count_points_g2(C: Genus2CurveQ, p: int) -> tuple:
    """Projective point counts (N1, N2) of the smooth model over F_p, F_{p^2}.

    The F_{p^2} sum runs over conjugate pairs x = (s + sqrt(D))/2 indexed by
    trace s and non-residue discriminant D, using that the quadratic
    character of F_{p^2} is the F_p character of the norm.
    """
    _check_good(C, p, _G2_PRIME_CAP)
    fc = C.f.coeffs
    d = len(fc) - 1
    chi = _kernels.chi_table(p)
    r1, z = _kernels.poly_charsum(_difference_table(fc, p), p, chi)
    r1, z = int(r1), int(z)
    lc = fc[-1] % p
    n1 = p + r1 + (1 if d == 5 else (2 if chi[lc] == 1 else 0))
    rho = _norm_coeff_rows(fc, p)
    nonres = np.flatnonzero(chi == -1).astype(np.float64)
    pair = int(_kernels.g2_pair_charsum(rho, nonres, chi, p))
    # x in F_p contributes chi2(f(x)) = 1 unless f(x) = 0; pairs contribute twice
    r2 = (p - z) + 2 * pair
    n2 = p * p + r2 + (1 if d == 5 else 2)
    if (n1 - (p + 1)) ** 2 > 16 * p or (n2 - (p * p + 1)) ** 2 > 16 * p * p:
        raise ArithmeticError(f"Weil bound violated at p={p}: N1={n1}, N2={n2}")
    return n1, n2


def frobenius_poly_g2(
    C: Genus2CurveQ, p: int, counts: Optional[tuple] = None
) -> WeilPolynomial:
    """P(T) = T^4 - s1 T^3 + s2 T^2 - p s1 T + p^2 from (N1, N2)."""
    if counts is None:
        counts = count_points_g2(C, p)
    return weil_poly_from_counts(p, counts[0], counts[1])


# ---------------------------------------------------------------------------
# trace tables


@dataclass(frozen=True)
class TraceTable:
    """Per-prime Frobenius records for one curve.

    data is the trace column for genus 1 and the (N1, N2) pair columns for
    genus 2.  Every record is validated against the Hasse/Weil window on
    construction, which covers both fresh builds and cache loads.
    """

    curve: object
    max_prime: int
    primes: np.ndarray
    data: np.ndarray

    def __post_init__(self):
        primes = np.asarray(self.primes, dtype=np.int64)
        genus = self.curve.genus
        if genus == 1:
            data = np.asarray(self.data, dtype=np.int64)
            if data.shape != primes.shape:
                raise ValueError("trace column must match the prime column")
        else:
            data = np.asarray(self.data, dtype=np.int64)
            if data.shape != (primes.shape[0], 2):
                raise ValueError("need one (N1, N2) row per prime")
        object.__setattr__(self, "primes", primes)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "max_prime", int(self.max_prime))
        if primes.size:
            if np.any(primes[1:] <= primes[:-1]):
                raise ValueError("primes must be strictly increasing")
            if int(primes[-1]) > self.max_prime:
                raise ValueError("record beyond the stated max_prime")
            if np.any(primes % 2 == 0):
                raise ValueError("even prime in table")
            p = primes.astype(np.float64)
            if genus == 1:
                bad = data.astype(np.float64) ** 2 > 4 * p
            else:
                bad = ((data[:, 0] - (p + 1)) ** 2 > 16 * p) | (
                    (data[:, 1] - (p * p + 1)) ** 2 > 16 * p * p
                )
            if np.any(bad):
                where = int(primes[np.flatnonzero(bad)[0]])
                raise ValueError(f"Hasse/Weil bound violated at p={where}")
        primes.setflags(write=False)
        data.setflags(write=False)

    @property
    def genus(self) -> int:
        return self.curve.genus

    def __len__(self) -> int:
        return int(self.primes.size)

    def covers(self, x: float) -> bool:
        return self.max_prime >= int(x)

    def require_coverage(self, x: float) -> None:
        if not self.covers(x):
            raise TraceGapError(
                f"table reaches {self.max_prime}, but x={int(x)} was requested"
            )

    def _index(self, p: int) -> int:
        i = int(np.searchsorted(self.primes, p))
        if i == len(self.primes) or int(self.primes[i]) != p:
            raise TraceGapError(f"no record for p={p}")
        return i

    def trace(self, p: int) -> int:
        if self.genus != 1:
            raise ValueError("trace() is for genus-1 tables")
        return int(self.data[self._index(p)])

    def counts(self, p: int) -> tuple:
        if self.genus != 2:
            raise ValueError("counts() is for genus-2 tables")
        row = self.data[self._index(p)]
        return int(row[0]), int(row[1])

    def up_to(self, x: float) -> tuple:
        """(primes, data) views restricted to p <= x."""
        self.require_coverage(x)
        n = int(np.searchsorted(self.primes, int(x), side="right"))
        return self.primes[:n], self.data[:n]


def _compute_records(curve, ps: np.ndarray) -> np.ndarray:
    if curve.genus == 1:
        if ps.size == 0:
            return np.empty(0, dtype=np.int64)
        return np.asarray(_kernels.ap_batch(ps, curve.a, curve.b), dtype=np.int64)
    out = np.empty((ps.size, 2), dtype=np.int64)
    for i, p in enumerate(ps):
        out[i] = count_points_g2(curve, int(p))
    return out


def _serialize(table: TraceTable) -> bytes:
    coeffs = table.curve.coefficient_block()
    head = struct.pack(
        "<4sHBH", _MAGIC, _VERSION, table.curve.genus, len(coeffs)
    )
    head += struct.pack(f"<{len(coeffs)}q", *coeffs)
    head += struct.pack("<Q", table.max_prime)
    if table.curve.genus == 1:
        rec = np.empty((len(table), 2), dtype="<i8")
        rec[:, 0] = table.primes
        rec[:, 1] = table.data
    else:
        rec = np.empty((len(table), 3), dtype="<i8")
        rec[:, 0] = table.primes
        rec[:, 1:] = table.data
    body = head + rec.tobytes()
    return body + struct.pack("<Q", crc64(body))


def save_trace_table(table: TraceTable, path: str) -> None:
    blob = _serialize(table)
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(blob)
    os.replace(tmp, path)


def load_trace_table(path: str, curve=None) -> TraceTable:
    """Read and fully validate a cache file.

    When `curve` is given the stored coefficient block must match it; when
    omitted the curve is reconstructed from the stored block.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 17 or blob[:4] != _MAGIC:
        raise CacheFormatError(f"{path}: not a trace cache (bad magic)")
    stored = struct.unpack("<Q", blob[-8:])[0]
    if crc64(blob[:-8]) != stored:
        raise CacheFormatError(f"{path}: checksum mismatch")
    version, genus, ncoeffs = struct.unpack("<HBH", blob[4:9])
    if version != _VERSION:
        raise CacheFormatError(f"{path}: unsupported version {version}")
    if genus not in (1, 2):
        raise CacheFormatError(f"{path}: bad genus byte {genus}")
    off = 9
    coeffs = struct.unpack(f"<{ncoeffs}q", blob[off : off + 8 * ncoeffs])
    off += 8 * ncoeffs
    (max_prime,) = struct.unpack("<Q", blob[off : off + 8])
    off += 8
    if curve is not None:
        if curve.genus != genus or curve.coefficient_block() != coeffs:
            raise CacheFormatError(
                f"{path}: cache belongs to a different curve "
                f"(stored coefficients {coeffs})"
            )
    else:
        curve = (
            EllipticCurveQ(*coeffs) if genus == 1 else Genus2CurveQ(coeffs)
        )
    body = blob[off:-8]
    width = 2 if genus == 1 else 3
    if len(body) % (8 * width) != 0:
        raise CacheFormatError(f"{path}: truncated record section")
    rec = np.frombuffer(body, dtype="<i8").reshape(-1, width)
    data = rec[:, 1].copy() if genus == 1 else rec[:, 1:].copy()
    try:
        return TraceTable(curve, max_prime, rec[:, 0].copy(), data)
    except ValueError as exc:
        raise CacheFormatError(f"{path}: {exc}") from exc


def build_trace_table(curve, x: float, cache_path: Optional[str] = None) -> TraceTable:
    """Table of all good odd primes <= x, reusing or extending any cache.

    A cache whose bound already reaches x is returned as loaded; a shorter
    one is extended and rewritten, which reproduces a fresh build byte for
    byte.  Corruption is always reported, never silently recomputed.
    """
    limit = int(x)
    cap = _AP_PRIME_CAP if curve.genus == 1 else _G2_PRIME_CAP
    if limit < 2:
        raise ValueError("x must be at least 2")
    if limit > cap:
        raise ValueError(f"x={limit} exceeds the genus-{curve.genus} cap {cap}")
    existing = None
    if cache_path is not None and os.path.exists(cache_path):
        existing = load_trace_table(cache_path, curve=curve)
        if existing.max_prime >= limit:
            return existing
    ps = good_primes(curve, limit)
    if existing is not None:
        ps = ps[ps > existing.max_prime]
        new = _compute_records(curve, ps)
        primes = np.concatenate([existing.primes, ps])
        data = np.concatenate([existing.data, new])
    else:
        primes = ps
        data = _compute_records(curve, ps)
    table = TraceTable(curve, limit, primes, data)
    if cache_path is not None:
        save_trace_table(table, cache_path)
    return table
