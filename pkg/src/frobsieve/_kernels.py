"""Inner loops for point counting.

Compiled with numba when it is available; otherwise the numpy twins
defined first are used directly.  Both variants implement identical
contracts, and the test suite cross-checks them on small primes.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit, prange

    JIT_ENABLED = True
except ImportError:  # pragma: no cover
    JIT_ENABLED = False


# ---------------------------------------------------------------------------
# numpy reference implementations


def _py_chi_table(p: int) -> np.ndarray:
    """Quadratic character lookup: chi[v] = legendre(v, p) for 0 <= v < p."""
    chi = np.full(p, -1, dtype=np.int8)
    chi[0] = 0
    t = np.arange(1, (p - 1) // 2 + 1, dtype=np.int64)
    chi[(t * t) % p] = 1
    return chi


def _py_poly_charsum(diffs: np.ndarray, p: int, chi: np.ndarray):
    """Character sum and zero count of a polynomial over F_p.

    `diffs` is the forward-difference table (Delta^j f)(0) mod p, so the
    values are reconstructed with Newton's formula f(x) = sum_j d_j*C(x,j).
    """
    d = diffs.shape[0] - 1
    if p <= d + 1:
        # too small for modular inverses of 1..d; do it directly
        vals = np.zeros(p, dtype=np.int64)
        reg = [int(v) for v in diffs]
        for x in range(p):
            vals[x] = reg[0]
            for j in range(d):
                reg[j] = (reg[j] + reg[j + 1]) % p
        return int(chi[vals].sum()), int(np.count_nonzero(vals == 0))
    x = np.arange(p, dtype=np.int64)
    binom = np.ones(p, dtype=np.int64)
    vals = np.full(p, int(diffs[0]) % p, dtype=np.int64)
    for j in range(1, d + 1):
        binom = binom * ((x - j + 1) % p) % p
        binom = binom * pow(j, -1, p) % p
        vals = (vals + int(diffs[j]) * binom) % p
    return int(chi[vals].sum()), int(np.count_nonzero(vals == 0))


def _py_ap_batch(ps: np.ndarray, a: int, b: int) -> np.ndarray:
    out = np.empty(ps.shape[0], dtype=np.int64)
    for i, p in enumerate(ps):
        p = int(p)
        chi = _py_chi_table(p)
        x = np.arange(p, dtype=np.int64)
        vals = ((x * x % p + a % p) % p * x + b % p) % p
        out[i] = -int(chi[vals].sum())
    return out


def _py_g2_pair_charsum(rho_t: np.ndarray, nonres: np.ndarray, chi: np.ndarray, p: int):
    """Sum of chi(R(s, D)) over s in F_p and non-residues D.

    rho_t[s, j] holds the coefficient of D^j in the norm polynomial R(s, D).
    """
    rho = rho_t.astype(np.int64).T.copy()
    k = rho.shape[0] - 1
    total = 0
    for D in nonres.astype(np.int64):
        acc = rho[k].copy()
        for j in range(k - 1, -1, -1):
            acc = (acc * D + rho[j]) % p
        total += int(chi[acc].sum())
    return total


# ---------------------------------------------------------------------------
# jit variants

if JIT_ENABLED:

    @njit(cache=True)
    def chi_table(p):
        chi = np.full(p, -1, dtype=np.int8)
        chi[0] = 0
        half = (p - 1) // 2
        sq = 0
        step = 1 % p  # 2t - 1, kept reduced so one subtract suffices
        for _ in range(half):
            sq += step
            if sq >= p:
                sq -= p
            chi[sq] = 1
            step += 2
            if step >= p:
                step -= p
        return chi

    @njit(cache=True)
    def poly_charsum(diffs, p, chi):
        d = diffs.shape[0] - 1
        reg = diffs.copy()
        s = np.int64(0)
        z = np.int64(0)
        for _ in range(p):
            v = reg[0]
            s += chi[v]
            if v == 0:
                z += 1
            for j in range(d):
                reg[j] += reg[j + 1]
                if reg[j] >= p:
                    reg[j] -= p
        return s, z

    @njit(cache=True, parallel=True)
    def ap_batch(ps, a, b):
        out = np.empty(ps.shape[0], dtype=np.int64)
        for i in prange(ps.shape[0]):
            p = ps[i]
            chi = np.full(p, -1, dtype=np.int8)
            chi[0] = 0
            half = (p - 1) // 2
            sq = 0
            step = 1 % p
            for _ in range(half):
                sq += step
                if sq >= p:
                    sq -= p
                chi[sq] = 1
                step += 2
                if step >= p:
                    step -= p
            # finite differences of x^3 + a*x + b along x = 0, 1, 2, ...
            f = b % p
            d1 = (1 + a) % p
            d2 = 6 % p
            d3 = 6 % p
            s = np.int64(0)
            for _ in range(p):
                s += chi[f]
                f += d1
                if f >= p:
                    f -= p
                d1 += d2
                if d1 >= p:
                    d1 -= p
                d2 += d3
                if d2 >= p:
                    d2 -= p
            out[i] = -s
        return out

    @njit(cache=True, parallel=True, fastmath=True)
    def g2_pair_charsum(rho_t, nonres, chi, p):
        # float64 Horner with reduction by multiplication.  Intermediates
        # stay below 2p^2 + p < 2^53 so every product is exact; the floor
        # may be off by one, leaving acc in (-p, 2p), fixed after the last
        # step.  rho_t must be padded to exactly 7 coefficient columns.
        # fastmath only permits fusion here (no divisions, no reassociable
        # chains), which can shrink but never widen the floor error.
        pf = np.float64(p)
        pinv = 1.0 / pf
        nn = nonres.shape[0]
        total = np.int64(0)
        for si in prange(rho_t.shape[0]):
            c0 = rho_t[si, 0]
            c1 = rho_t[si, 1]
            c2 = rho_t[si, 2]
            c3 = rho_t[si, 3]
            c4 = rho_t[si, 4]
            c5 = rho_t[si, 5]
            c6 = rho_t[si, 6]
            sub = np.int64(0)
            buf = np.empty(256, dtype=np.float64)
            start = 0
            while start < nn:
                m = min(256, nn - start)
                for t in range(m):
                    dv = nonres[start + t]
                    acc = c6 * dv + c5
                    acc -= np.floor(acc * pinv) * pf
                    acc = acc * dv + c4
                    acc -= np.floor(acc * pinv) * pf
                    acc = acc * dv + c3
                    acc -= np.floor(acc * pinv) * pf
                    acc = acc * dv + c2
                    acc -= np.floor(acc * pinv) * pf
                    acc = acc * dv + c1
                    acc -= np.floor(acc * pinv) * pf
                    acc = acc * dv + c0
                    acc -= np.floor(acc * pinv) * pf
                    buf[t] = acc
                for t in range(m):
                    acc = buf[t]
                    if acc < 0.0:
                        acc += pf
                    elif acc >= pf:
                        acc -= pf
                    sub += chi[np.int64(acc)]
                start += m
            total += sub
        return total

else:  # pragma: no cover
    chi_table = _py_chi_table
    poly_charsum = _py_poly_charsum
    ap_batch = _py_ap_batch
    g2_pair_charsum = _py_g2_pair_charsum


def warmup() -> None:
    """Trigger compilation on toy inputs so timings downstream are honest."""
    chi_table(5)
    poly_charsum(np.array([1, 1, 0, 1], dtype=np.int64), 5, _py_chi_table(5))
    ap_batch(np.array([5, 7], dtype=np.int64), 1, 1)
    g2_pair_charsum(
        np.zeros((5, 7), dtype=np.float64),
        np.array([2.0, 3.0]),
        _py_chi_table(5),
        5,
    )
