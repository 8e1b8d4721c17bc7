"""The abstract large sieve.

An instance carries a finite index set X, sieving conditions indexed by
labels lambda (a finite group, a class-valued map rho_lambda on X, a density
bound delta_lambda, optionally an admissible class set), and a sieve support
Z of subsets of the labels. The main inequality bounds the survivor count:

    L(Z) * |S| <= Delta(X, rho, Z)

with L(Z) = sum over D in Z of prod over lambda in D of (1-delta)/delta.
Two Delta's are exposed and never conflated: delta_bound (max row sum of the
character Gram matrix) and delta_exact (its largest eigenvalue, the least
constant in the large-sieve inequality).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .arith_core import log_integral, primes_up_to
from .characters import CharacterTable, _nontrivial_rows
from .group_core import FiniteGroup

__all__ = [
    "SieveCondition",
    "SieveInstance",
    "SieveReport",
    "class_measure",
    "l_value",
    "support_products",
    "delta_bound",
    "delta_exact",
    "sieve_upper_bound",
    "survivor_mask",
    "verify_algebra_lemma",
    "duality_check",
    "classical_sieve_bound",
    "frobenius_bound_evaluator",
    "BoundEvaluation",
    "random_instance",
    "HEURISTIC_NOTE",
]

_SUPPORT_BLOWUP_CAP = 10 ** 7
_CHAR_CAP = 10 ** 5
_X_CAP = 10 ** 5
_EXACT_DIM_CAP = 10 ** 4
_MATRIX_ENTRY_CAP = 2 * 10 ** 7
POWER_ITERATION_TOL = 1e-8
POWER_ITERATION_MAX = 10 ** 4


# ---------------------------------------------------------------------------
# measures and L-values


def class_measure(G: FiniteGroup, U: Iterable[int]) -> Fraction:
    """mu(U) = |G|^-1 sum of |C| over classes C in U, exact."""
    classes = G.conjugacy_classes()
    total = 0
    for ci in set(U):
        if not 0 <= ci < len(classes):
            raise ValueError(f"class index {ci} outside 0..{len(classes) - 1}")
        total += len(classes[ci])
    return Fraction(total, G.order)


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10 ** 12)
    raise TypeError(f"density of unsupported type {type(x)!r}")


def l_value(support: Sequence[Iterable], densities: dict) -> Fraction:
    """L(Z) = sum over D in Z of prod over lambda in D of (1-delta)/delta."""
    total = Fraction(0)
    for D in support:
        term = Fraction(1)
        for lam in D:
            d = _as_fraction(densities[lam])
            if d <= 0:
                raise ValueError(f"density for {lam!r} must be positive")
            if d > 1:
                raise ValueError(f"density for {lam!r} exceeds 1")
            term *= (1 - d) / d
        total += term
    return total


def support_products(weights: dict, Q) -> list[tuple]:
    """All subsets D of the labels with prod of weights <= Q, depth-first
    over ascending weight; the empty set comes first."""
    if Q > 10 ** 6:
        raise ValueError("Q capped at 1e6")
    items = sorted(weights.items(), key=lambda kv: (kv[1], repr(kv[0])))
    for lam, w in items:
        if w < 2:
            raise ValueError(f"weight for {lam!r} must be >= 2")
    out: list[tuple] = [()]

    def dfs(start: int, prefix: tuple, prod):
        for i in range(start, len(items)):
            lam, w = items[i]
            nxt = prod * w
            if nxt > Q:
                # ascending weights: all later items overflow too
                break
            if len(out) >= _SUPPORT_BLOWUP_CAP:
                raise ValueError("support enumeration exceeds 1e7 subsets")
            out.append(prefix + (lam,))
            dfs(i + 1, prefix + (lam,), nxt)

    dfs(0, (), 1)
    return out


# ---------------------------------------------------------------------------
# sieve instances


@dataclass
class SieveCondition:
    """One sieving condition: a group, the class of each v in X, a density
    bound, and optionally the admissible class set it bounds."""

    group: FiniteGroup
    rho: np.ndarray
    density: Optional[Fraction] = None
    admissible: Optional[frozenset] = None

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=np.int64)
        n_classes = len(self.group.conjugacy_classes())
        if self.rho.ndim != 1:
            raise ValueError("rho must be a vector over X")
        if self.rho.size and not (
            0 <= int(self.rho.min()) and int(self.rho.max()) < n_classes
        ):
            raise ValueError("rho takes a value outside the class range")
        if self.admissible is not None:
            self.admissible = frozenset(int(c) for c in self.admissible)
            mu = class_measure(self.group, self.admissible)
            if self.density is None:
                self.density = mu
            elif mu > self.density:
                raise ValueError(
                    f"admissible set has measure {mu} above the density bound "
                    f"{self.density}"
                )
        if self.density is None:
            raise ValueError("need a density or an admissible set to derive one")
        self.density = _as_fraction(self.density)
        if not 0 < self.density <= 1:
            raise ValueError("density must lie in (0, 1]")


@dataclass
class SieveInstance:
    size: int
    conditions: dict
    support: list

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("X must be non-empty")
        if self.size > _X_CAP:
            raise ValueError(f"|X| capped at {_X_CAP}")
        for lam, cond in self.conditions.items():
            if cond.rho.size != self.size:
                raise ValueError(f"condition {lam!r}: rho length != |X|")
        labels = set(self.conditions)
        canonical = []
        seen = set()
        for D in self.support:
            D = tuple(sorted(D))
            if not set(D) <= labels:
                raise ValueError(f"support set {D} uses unknown labels")
            if len(set(D)) != len(D):
                raise ValueError(f"support set {D} repeats a label")
            if D in seen:
                raise ValueError(f"support set {D} listed twice")
            seen.add(D)
            canonical.append(D)
        self.support = canonical

    def densities(self) -> dict:
        return {lam: cond.density for lam, cond in self.conditions.items()}

    def l_value(self) -> Fraction:
        return l_value(self.support, self.densities())


def survivor_mask(inst: SieveInstance) -> np.ndarray:
    """Boolean mask of S = {v : rho_lam(v) in C_lam for all lam}; requires
    every condition to carry its admissible set."""
    mask = np.ones(inst.size, dtype=bool)
    for lam, cond in inst.conditions.items():
        if cond.admissible is None:
            raise ValueError(f"condition {lam!r} has no admissible set")
        mask &= np.isin(cond.rho, sorted(cond.admissible))
    return mask


# ---------------------------------------------------------------------------
# the character matrix: columns c_{v,chi} aggregated by class profile


def _character_matrix(inst: SieveInstance, tables: dict):
    """Rows = primitive characters of G_D over D in Z, columns = distinct
    class profiles of X, plus the integer weight of each profile."""
    labels = sorted(inst.conditions)
    n = inst.size
    if labels:
        stacked = np.stack([inst.conditions[lam].rho for lam in labels])
        profiles, weights = np.unique(stacked, axis=1, return_counts=True)
    else:
        profiles = np.zeros((0, 1), dtype=np.int64)
        weights = np.array([n], dtype=np.int64)
    p_count = profiles.shape[1]

    atoms = {}
    for lam in labels:
        table = tables[lam]
        if table.group is not inst.conditions[lam].group:
            raise ValueError(f"table for {lam!r} built on a different group")
        rows = _nontrivial_rows(table)
        atoms[lam] = np.array(
            [table.rows[i].values for i in rows], dtype=np.complex128
        )

    m = 0
    for D in inst.support:
        t = 1
        for lam in D:
            t *= atoms[lam].shape[0]
        m += t
    if m > _CHAR_CAP:
        raise ValueError(f"character count {m} above cap {_CHAR_CAP}")
    if m * p_count > _MATRIX_ENTRY_CAP:
        raise ValueError("character matrix above entry capacity")

    V = np.empty((m, p_count), dtype=np.complex128)
    row = 0
    import itertools as _it

    for D in inst.support:
        if not D:
            V[row] = 1.0
            row += 1
            continue
        idx = [labels.index(lam) for lam in D]
        ranges = [range(atoms[lam].shape[0]) for lam in D]
        for combo in _it.product(*ranges):
            vals = np.ones(p_count, dtype=np.complex128)
            for k, lam in enumerate(D):
                vals *= atoms[lam][combo[k]][profiles[idx[k]]]
            V[row] = vals
            row += 1
    assert row == m
    return V, weights.astype(np.float64)


def delta_bound(inst: SieveInstance, tables: dict) -> float:
    """Row-sum bound on Delta: max over (D',chi') of
    sum over (D,chi) of |sum_v chi(rho_D(v)) conj(chi'(rho_D'(v)))|."""
    V, w = _character_matrix(inst, tables)
    m = V.shape[0]
    best = 0.0
    chunk = 256
    for start in range(0, m, chunk):
        block = (V[start : start + chunk] * w) @ V.conj().T
        sums = np.abs(block).sum(axis=1)
        best = max(best, float(sums.max()))
    return best


def _lambda_max(matvec: Callable, dim: int, tol: float, max_iter: int) -> float:
    """Largest eigenvalue of a Hermitian PSD operator by power iteration
    with a fixed seeded start."""
    rng = np.random.default_rng(0)
    x = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(max_iter):
        y = matvec(x)
        ny = np.linalg.norm(y)
        if ny == 0:
            return 0.0
        new = float(np.real(np.vdot(x, y)))
        x = y / ny
        if abs(new - lam) <= tol * max(abs(new), 1e-300):
            return new
        lam = new
    raise ArithmeticError(
        f"power iteration did not converge in {max_iter} steps"
    )


def delta_exact(
    inst: SieveInstance,
    tables: dict,
    tol: float = POWER_ITERATION_TOL,
    max_iter: int = POWER_ITERATION_MAX,
) -> float:
    """Least Delta in the large-sieve inequality: the squared spectral norm
    of the matrix c_{v,chi}, via power iteration on its Gram operator."""
    V, w = _character_matrix(inst, tables)
    m = V.shape[0]
    if m > _EXACT_DIM_CAP or inst.size > _EXACT_DIM_CAP:
        raise ValueError("delta_exact capped at a 1e4 x 1e4 matrix")
    if m == 0:
        return 0.0

    def matvec(x):
        return V @ (w * (V.conj().T @ x))

    return _lambda_max(matvec, m, tol, max_iter)


# ---------------------------------------------------------------------------
# the main inequality


@dataclass(frozen=True)
class SieveReport:
    l_value: float
    delta_bound: float
    delta_exact: Optional[float]
    survivor_count: Optional[int]
    upper_bound: float


def sieve_upper_bound(
    inst: SieveInstance, tables: dict, compute_exact: Optional[bool] = None
) -> SieveReport:
    L = float(inst.l_value())
    d_bound = delta_bound(inst, tables)
    if compute_exact is None:
        compute_exact = (
            inst.size <= _EXACT_DIM_CAP
            and len(inst.support) <= _EXACT_DIM_CAP
        )
    d_exact = None
    if compute_exact:
        try:
            d_exact = delta_exact(inst, tables)
        except ValueError:
            d_exact = None
    upper = d_bound / L if L > 0 else math.inf
    count = None
    if all(c.admissible is not None for c in inst.conditions.values()):
        count = int(survivor_mask(inst).sum())
        if count > upper * (1 + 1e-9) + 1e-9:
            raise AssertionError(
                f"survivor count {count} exceeds the sieve bound {upper}; "
                "large-sieve inequality violated"
            )
    return SieveReport(
        l_value=L,
        delta_bound=d_bound,
        delta_exact=d_exact,
        survivor_count=count,
        upper_bound=upper,
    )


def verify_algebra_lemma(
    inst: SieveInstance, D: Iterable, a: Sequence[complex], tables: dict
) -> bool:
    """Check (prod over D of (1-delta)/delta) |sum a_v|^2 <=
    sum over chi in Prim(G_D) |sum_v a_v chi(rho_D(v))|^2 for a supported
    on the survivor set."""
    a = np.asarray(a, dtype=np.complex128)
    if a.size != inst.size:
        raise ValueError("a must be indexed by X")
    mask = survivor_mask(inst)
    if np.any(np.abs(a[~mask]) > 0):
        raise ValueError("a is supported outside the survivor set")
    D = tuple(sorted(D))
    lhs_factor = Fraction(1)
    for lam in D:
        d = inst.conditions[lam].density
        lhs_factor *= (1 - d) / d
    lhs = float(lhs_factor) * abs(a.sum()) ** 2

    rhs = 0.0
    import itertools as _it

    atom_rows = {
        lam: _nontrivial_rows(tables[lam]) for lam in D
    }
    for combo in _it.product(*(atom_rows[lam] for lam in D)):
        vals = np.ones(inst.size, dtype=np.complex128)
        for lam, ri in zip(D, combo):
            table = tables[lam]
            vals *= np.asarray(table.rows[ri].values, dtype=np.complex128)[
                inst.conditions[lam].rho
            ]
        rhs += abs(np.dot(a, vals)) ** 2
    if not D:
        rhs = abs(a.sum()) ** 2
    return lhs <= rhs + 1e-9 * (1 + rhs)


# ---------------------------------------------------------------------------
# duality and the classical sieve


def duality_check(C: np.ndarray) -> tuple[float, float]:
    """(squared spectral norm, infinity-norm of C* C); asserts the norm is
    bounded by the row sum and that C and C* share it."""
    C = np.asarray(C, dtype=np.complex128)
    m, n = C.shape
    if m > 500 or n > 500:
        raise ValueError("duality check capped at 500 x 500")
    gram_r = C.conj().T @ C  # n x n
    gram_l = C @ C.conj().T  # m x m
    norm_r = _lambda_max(lambda x: gram_r @ x, n, 1e-12, 10 ** 5)
    norm_l = _lambda_max(lambda x: gram_l @ x, m, 1e-12, 10 ** 5)
    scale = max(norm_r, norm_l, 1e-300)
    if abs(norm_r - norm_l) > 1e-8 * scale:
        raise AssertionError("norms of C and C* disagree")
    bound = float(np.abs(gram_r).sum(axis=1).max())
    if norm_r > bound * (1 + 1e-8):
        raise AssertionError("spectral norm exceeds the row-sum bound")
    return norm_r, bound


def classical_sieve_bound(N: float, Q: float, delta: dict) -> float:
    """(N + Q^2) / L with L summed over squarefree d <= Q."""
    if Q < 2:
        raise ValueError("Q must be at least 2")
    primes = primes_up_to(Q)
    missing = [p for p in primes if p not in delta]
    if missing:
        raise ValueError(f"missing densities for primes {missing}")
    support = support_products({p: p for p in primes}, Q)
    L = l_value(support, delta)
    if L <= 0:
        return math.inf
    return (N + Q * Q) / float(L)


# ---------------------------------------------------------------------------
# bound evaluator for the Frobenius sieve regimes


HEURISTIC_NOTE = (
    "implied O-constant replaced by c_abs; heuristic size, not a proven bound"
)

_REGIMES = ("unconditional", "GRH", "GRH+AHC")


@dataclass(frozen=True)
class BoundEvaluation:
    value: float
    regime: str
    main_term: float
    error_term: float
    heuristic: bool = True
    note: str = HEURISTIC_NOTE

    def __float__(self):
        return self.value


def frobenius_bound_evaluator(
    x: float,
    Q: float,
    r: float,
    s: float,
    L: float,
    regime: str,
    c_abs: float = 1.0,
    b_exponent: float = 1.0,
    degree_max_exp: Optional[float] = None,
    degree_sum_exp: Optional[float] = None,
) -> BoundEvaluation:
    """Numeric value of the sieve bound (Li x + error)/L in the chosen
    regime, with the implied constant replaced by c_abs.

    unconditional: error = c_abs * x / (log x)^(1+b_exponent); Q enters only
      through L, which the caller evaluated at the regime's polylog Q(x).
    GRH: error = c_abs * Q^(2r+s+1) * sqrt(x) * log x, the simplified form
      with |G_lam| <= N^r and |G_lam^sharp| <= N^s.
    GRH+AHC: error = c_abs * Q^(dmax+dsum) * sqrt(x) * log x where dmax
      bounds max chi'(1) (default r/2) and dsum bounds the degree sum over
      the support (default (r+s)/2 + 1); applications with sharper degree
      data (e.g. max chi(1) = l+1 for GL2) should pass their exponents.
    """
    if regime not in _REGIMES:
        raise ValueError(f"regime must be one of {_REGIMES}")
    if x < 2:
        raise ValueError("x must be at least 2")
    main = log_integral(x)
    logx = math.log(x)
    if regime == "unconditional":
        err = c_abs * x / logx ** (1.0 + b_exponent)
    elif regime == "GRH":
        err = c_abs * Q ** (2 * r + s + 1) * math.sqrt(x) * logx
    else:
        dmax = r / 2 if degree_max_exp is None else degree_max_exp
        dsum = (r + s) / 2 + 1 if degree_sum_exp is None else degree_sum_exp
        err = c_abs * Q ** (dmax + dsum) * math.sqrt(x) * logx
    value = (main + err) / L if L > 0 else math.inf
    return BoundEvaluation(
        value=value, regime=regime, main_term=main, error_term=err
    )


# ---------------------------------------------------------------------------
# randomized instances (tests and the demo CLI)


def random_instance(
    seed: int,
    group_pool: Optional[list[FiniteGroup]] = None,
    max_x: int = 2000,
    max_conditions: int = 4,
) -> SieveInstance:
    """Small random instance with admissible sets and exact densities."""
    from .group_core import cyclic_group, dihedral_group, symmetric_group

    rng = np.random.default_rng(seed)
    if group_pool is None:
        group_pool = [
            cyclic_group(2),
            cyclic_group(3),
            cyclic_group(5),
            cyclic_group(8),
            symmetric_group(3),
            dihedral_group(4),
            symmetric_group(4),
        ]
    n = int(rng.integers(20, max_x + 1))
    k = int(rng.integers(1, max_conditions + 1))
    labels = list(range(k))
    conditions = {}
    for lam in labels:
        G = group_pool[int(rng.integers(len(group_pool)))]
        r = len(G.conjugacy_classes())
        rho = rng.integers(r, size=n)
        n_adm = int(rng.integers(1, r + 1))
        admissible = frozenset(
            int(c) for c in rng.choice(r, size=n_adm, replace=False)
        )
        conditions[lam] = SieveCondition(G, rho, admissible=admissible)
    subsets = [()]
    for D_size in range(1, k + 1):
        if rng.random() < 0.7:
            D = tuple(
                sorted(
                    int(i)
                    for i in rng.choice(k, size=D_size, replace=False)
                )
            )
            if D not in subsets:
                subsets.append(D)
    return SieveInstance(size=n, conditions=conditions, support=subsets)
